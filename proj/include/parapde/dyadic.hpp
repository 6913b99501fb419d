#pragma once

// Dyadic Littlewood-Paley block system on the lattice. Radial profiles are
// built from a C-infinity transition bump, sampled per wavenumber, and the
// top block absorbs everything above the last annulus so the partition of
// unity is exact on every represented mode.
//
// Support layout: chi = 1 on |k| <= 1/2, supp chi in B_1;
// phi_j supported in [2^{j-1}, 2^{j+1}], phi_j(2^j) = 1.

#include <cmath>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

#include "parapde/grid.hpp"

namespace parapde {

namespace detail {

inline double smooth_step(double t) {
    // 0 for t <= 0, 1 for t >= 1, C-infinity in between
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    double a = std::exp(-1.0 / t);
    double b = std::exp(-1.0 / (1.0 - t));
    return a / (a + b);
}

// chi(r): 1 on [0, 1/2], 0 on [1, inf)
inline double lp_chi(double r) { return 1.0 - smooth_step(2.0 * (r - 0.5)); }

// phi(r) = chi(r/2) - chi(r), supported in [1/2, 2]
inline double lp_phi(double r) { return lp_chi(0.5 * r) - lp_chi(r); }

}  // namespace detail

struct DyadicPartition {
    Grid grid;
    int j_min = -1;
    int j_max = 0;
    // multiplier value per block per lattice mode, flat index as in SpectralField
    std::vector<std::vector<double>> profiles;

    explicit DyadicPartition(const Grid& g) : grid(g) {
        double knyq = g.k_nyquist();
        j_max = 0;
        while (std::pow(2.0, j_max + 3) <= knyq) ++j_max;
        const int nblocks = j_max + 2;
        profiles.assign(nblocks, std::vector<double>(g.size(), 0.0));
        const std::size_t n = g.size();
        for (std::size_t idx = 0; idx < n; ++idx) {
            double kabs = mode_abs(idx);
            double sum = 0.0;
            for (int j = -1; j <= j_max; ++j) {
                double v = j == -1 ? detail::lp_chi(kabs)
                                   : detail::lp_phi(kabs * std::pow(2.0, -j));
                profiles[j + 1][idx] = v;
                sum += v;
            }
            // fold the uncovered remainder into the top block
            if (sum < 1.0) {
                profiles[j_max + 1][idx] += 1.0 - sum;
                sum = 1.0;
            }
            // renormalize so the lattice partition of unity is exact
            for (int j = -1; j <= j_max; ++j) profiles[j + 1][idx] /= sum;
        }
    }

    double mode_abs(std::size_t idx) const {
        if (grid.dim == 1) return std::abs(grid.k(int(idx)));
        int a = int(idx) / grid.N, b = int(idx) % grid.N;
        double kx = grid.k(a), ky = grid.k(b);
        return std::sqrt(kx * kx + ky * ky);
    }

    int num_blocks() const { return j_max + 2; }

    const std::vector<double>& profile(int j) const {
        if (j < -1 || j > j_max) throw std::out_of_range("DyadicPartition: block index out of range");
        return profiles[j + 1];
    }

    void block_in_place(SpectralField& s, int j) const {
        const auto& p = profile(j);
        for (std::size_t i = 0; i < s.coeffs.size(); ++i) s.coeffs[i] *= p[i];
    }

    SpectralField block_spectral(const SpectralField& s, int j) const {
        SpectralField out = s;
        block_in_place(out, j);
        return out;
    }

    // S_j f = sum_{i <= j-1} Delta_i f. S_{-1} = 0; S_{j_max+2} = identity.
    // Empty sum (zero) for j <= -1.
    SpectralField low_sum_spectral(const SpectralField& s, int j) const {
        SpectralField out(s.grid);
        for (int i = -1; i <= std::min(j - 1, j_max); ++i) {
            const auto& p = profile(i);
            for (std::size_t t = 0; t < out.coeffs.size(); ++t) out.coeffs[t] += p[t] * s.coeffs[t];
        }
        return out;
    }
};

// Shared per-grid partition cache; partitions are immutable once built.
inline const DyadicPartition& partition_for(const Grid& g) {
    static std::mutex mtx;
    static std::vector<std::pair<Grid, std::shared_ptr<DyadicPartition>>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    for (auto& e : cache)
        if (e.first == g) return *e.second;
    cache.emplace_back(g, std::make_shared<DyadicPartition>(g));
    return *cache.back().second;
}

inline Field block(const Field& f, int j) {
    const DyadicPartition& part = partition_for(f.grid);
    SpectralField s = f.to_spectral();
    part.block_in_place(s, j);
    return s.to_field();
}

inline Field low_freq_sum(const Field& f, int j) {
    if (j < -1) throw std::out_of_range("low_freq_sum: j must be >= -1");
    const DyadicPartition& part = partition_for(f.grid);
    return part.low_sum_spectral(f.to_spectral(), j).to_field();
}

// Per-block sup-norm decay slope: least-squares fit of log2 ||Delta_j f||_inf
// against j over [j_lo, j_hi], skipping blocks below the floor.
inline double block_decay_slope(const Field& f, int j_lo, int j_hi, double floor = 1e-13) {
    const DyadicPartition& part = partition_for(f.grid);
    SpectralField s = f.to_spectral();
    std::vector<double> xs, ys;
    for (int j = std::max(j_lo, -1); j <= std::min(j_hi, part.j_max); ++j) {
        Field bj = part.block_spectral(s, j).to_field();
        double m = bj.max_abs();
        if (m > floor) {
            xs.push_back(double(j));
            ys.push_back(std::log2(m));
        }
    }
    if (xs.size() < 2) throw std::runtime_error("block_decay_slope: not enough active blocks");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= xs.size();
    my /= ys.size();
    double num = 0, den = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        num += (xs[i] - mx) * (ys[i] - my);
        den += (xs[i] - mx) * (xs[i] - mx);
    }
    return num / den;
}

}  // namespace parapde
