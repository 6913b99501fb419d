#pragma once

// Deterministic Gaussian sampling. Box-Muller on top of mt19937_64 keeps the
// stream independent of the standard library's normal_distribution details,
// so identical seeds give bit-identical fields everywhere.

#include <cmath>
#include <cstdint>
#include <random>

#include "parapde/dyadic.hpp"
#include "parapde/grid.hpp"

namespace parapde {

class GaussianSampler {
  public:
    explicit GaussianSampler(std::uint64_t seed) : eng_(seed) {}

    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform_open();
        double u2 = uniform_open();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * kPi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    std::uint64_t raw() { return eng_(); }

  private:
    double uniform_open() {
        // (0, 1]; avoids log(0)
        return (double(eng_() >> 11) + 1.0) * 0x1.0p-53;
    }
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// White Gaussian lattice field: iid N(0, sigma^2) per point.
inline Field white_field(const Grid& g, GaussianSampler& rng, double sigma) {
    Field f(g);
    for (auto& v : f.values) v = sigma * rng();
    return f;
}

// Random smooth field: white field shaped by a radial spectral envelope
// exp(-|k|^2 / (2 kc^2)) with a hard cutoff at k_cut. Hermitian by
// construction (real input, real even multiplier).
inline Field random_smooth_field(const Grid& g, std::uint64_t seed, double kc, double k_cut) {
    GaussianSampler rng(seed);
    Field w = white_field(g, rng, 1.0);
    SpectralField s = w.to_spectral();
    const DyadicPartition& part = partition_for(g);
    for (std::size_t i = 0; i < s.coeffs.size(); ++i) {
        double ka = part.mode_abs(i);
        double env = ka <= k_cut ? std::exp(-ka * ka / (2.0 * kc * kc)) : 0.0;
        s.coeffs[i] *= env;
    }
    return s.to_field();
}

// Random field with power-law envelope (1+|k|)^{-s}, cutoff at k_cut; s about
// alpha + d/2 gives a C^alpha-like sample.
inline Field random_rough_field(const Grid& g, std::uint64_t seed, double s_exp, double k_cut) {
    GaussianSampler rng(seed);
    Field w = white_field(g, rng, 1.0);
    SpectralField s = w.to_spectral();
    const DyadicPartition& part = partition_for(g);
    for (std::size_t i = 0; i < s.coeffs.size(); ++i) {
        double ka = part.mode_abs(i);
        double env = ka <= k_cut ? std::pow(1.0 + ka, -s_exp) : 0.0;
        s.coeffs[i] *= env;
    }
    return s.to_field();
}

}  // namespace parapde
