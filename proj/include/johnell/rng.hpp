// Deterministic random streams: child-seed derivation and explicit Gaussian
// generation. std::normal_distribution is implementation-defined, so byte
// reproducibility of outputs requires rolling the transform ourselves.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace johnell {

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Independent stream for (iteration k, role) pairs hanging off one master seed.
inline std::uint64_t child_seed(std::uint64_t master, std::uint64_t k, std::uint64_t role) {
    return mix64(mix64(mix64(master) + k) + role);
}

// Roles used to derive per-phase child streams inside the solvers.
enum class rng_role : std::uint64_t {
    leverage = 1,
    plan = 2,
    sketch = 3,
    gram_retry = 4,
    generator = 5,
    containment = 6,
};

inline std::uint64_t child_seed(std::uint64_t master, std::uint64_t k, rng_role role) {
    return child_seed(master, k, static_cast<std::uint64_t>(role));
}

class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : eng_(seed) {}

    // Uniform in (0, 1]; never returns 0 so log() below is safe.
    double uniform() { return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53; }

    // Uniform in [0, 1).
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, m). Multiply-shift; bias is < 2^-32 and irrelevant here.
    std::uint32_t bounded(std::uint32_t m) {
        return static_cast<std::uint32_t>((static_cast<std::uint64_t>(eng_() >> 32) * m) >> 32);
    }

    bool coin() { return (eng_() >> 63) != 0; }

    // Standard normal via Box-Muller, pair cached.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace johnell
