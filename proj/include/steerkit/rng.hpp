#pragma once

#include <cmath>
#include <cstdint>

#include "steerkit/types.hpp"

namespace steerkit {

/// splitmix64 step; the generator behind all randomness in this library.
/// Hand-rolled so that streams are bit-reproducible across platforms and
/// standard libraries.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derive an independent stream seed from a master seed and a stream index.
inline std::uint64_t substream(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed ^ (0xa0761d6478bd642fULL * (stream + 1));
    splitmix64(s);
    return s;
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) { splitmix64(state_); }

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

    /// Standard normal via Box-Muller (second value discarded).
    double normal() {
        double u1 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    /// Uniform direction on the unit sphere in R^dim.
    Vec unit_vector(int dim) {
        Vec v(dim);
        double n2 = 0.0;
        do {
            for (int i = 0; i < dim; ++i) v[i] = normal();
            n2 = v.squaredNorm();
        } while (n2 < 1e-30);
        return v / std::sqrt(n2);
    }

  private:
    std::uint64_t state_;
};

/// Halton radical-inverse in the given base (index >= 0).
inline double halton(std::uint64_t index, std::uint32_t base) {
    double f = 1.0;
    double r = 0.0;
    std::uint64_t i = index + 1;
    while (i > 0) {
        f /= static_cast<double>(base);
        r += f * static_cast<double>(i % base);
        i /= base;
    }
    return r;
}

/// Low-discrepancy point in [0,1)^dim: Halton sequence with a seed-dependent
/// Cranley-Patterson rotation, so different seeds explore shifted lattices
/// while start k of a given seed is always the same point.
inline Vec quasirandom_point(std::uint64_t index, int dim, std::uint64_t seed) {
    static constexpr std::uint32_t kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                                                31, 37, 41, 43, 47, 53, 59, 61, 67, 71};
    Vec u(dim);
    for (int j = 0; j < dim; ++j) {
        std::uint64_t s = substream(seed, 1000 + static_cast<std::uint64_t>(j));
        const double shift = static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53;
        const std::uint32_t base = kPrimes[j % 20];
        double v = halton(index, base) + shift;
        u[j] = v - std::floor(v);
    }
    return u;
}

}  // namespace steerkit
