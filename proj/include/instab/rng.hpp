#ifndef INSTAB_RNG_HPP
#define INSTAB_RNG_HPP

#include <cmath>
#include <cstdint>

namespace instab {

// SplitMix64. All randomness in the library flows through this generator so
// that identical seeds give bit-identical streams on every platform
// (std::uniform_real_distribution is implementation-defined and unusable for
// reproducible fixtures).
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // Standard normal via Box-Muller (deterministic, no cached spare).
    double normal() {
        double u1 = uniform01();
        while (u1 == 0.0) u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    std::uint64_t state_;
};

// Stable derivation of a per-index stream from a base seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 g(seed ^ (0x517cc1b727220a95ULL * (index + 1)));
    return g.next();
}

}  // namespace instab

#endif
