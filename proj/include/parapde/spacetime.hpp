#pragma once

// Space-time fields (uniform time grid, one Field per slice) and the
// parabolic norms built on them: L^q_T C^alpha(rho), C^{alpha/2}_T L^inf(rho)
// and their sum, the S-norm of the solution spaces.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "parapde/weights.hpp"

namespace parapde {

struct SpaceTimeField {
    std::vector<double> times;
    std::vector<Field> slices;

    SpaceTimeField() = default;
    SpaceTimeField(const Grid& g, double T, int steps) {
        if (steps < 1) throw std::invalid_argument("SpaceTimeField: steps must be >= 1");
        times.resize(steps + 1);
        double dt = T / steps;
        for (int m = 0; m <= steps; ++m) times[m] = m * dt;
        slices.assign(steps + 1, Field(g));
    }

    int num_slices() const { return int(slices.size()); }
    int num_steps() const { return int(slices.size()) - 1; }
    const Grid& grid() const { return slices.at(0).grid; }
    double T() const { return times.back(); }
    double dt() const {
        if (times.size() < 2) throw std::runtime_error("SpaceTimeField: no steps");
        return times[1] - times[0];
    }

    bool uniform(double tol = 1e-12) const {
        if (times.size() < 2) return true;
        double d = times[1] - times[0];
        for (std::size_t m = 1; m + 1 < times.size(); ++m)
            if (std::abs(times[m + 1] - times[m] - d) > tol * (1.0 + std::abs(d))) return false;
        return true;
    }

    bool finite() const {
        for (const auto& s : slices)
            if (!s.finite()) return false;
        return true;
    }

    Field& operator[](int m) { return slices.at(m); }
    const Field& operator[](int m) const { return slices.at(m); }

    int index_of_time(double t, double tol = 1e-9) const {
        double d = dt();
        int m = int(std::lround((t - times.front()) / d));
        if (m < 0 || m >= num_slices() || std::abs(times[m] - t) > tol * (1.0 + std::abs(t)))
            throw std::invalid_argument("SpaceTimeField: time not on grid");
        return m;
    }

    SpaceTimeField& operator+=(const SpaceTimeField& o) {
        if (o.num_slices() != num_slices()) throw std::invalid_argument("SpaceTimeField: shape mismatch");
        for (int m = 0; m < num_slices(); ++m) slices[m] += o.slices[m];
        return *this;
    }
    SpaceTimeField& operator-=(const SpaceTimeField& o) {
        if (o.num_slices() != num_slices()) throw std::invalid_argument("SpaceTimeField: shape mismatch");
        for (int m = 0; m < num_slices(); ++m) slices[m] -= o.slices[m];
        return *this;
    }
    SpaceTimeField& operator*=(double c) {
        for (auto& s : slices) s *= c;
        return *this;
    }

    double max_abs() const {
        double v = 0.0;
        for (const auto& s : slices) v = std::max(v, s.max_abs());
        return v;
    }

    static SpaceTimeField constant_in_time(const Field& f, const std::vector<double>& times) {
        SpaceTimeField out;
        out.times = times;
        out.slices.assign(times.size(), f);
        return out;
    }
};

inline SpaceTimeField operator+(SpaceTimeField a, const SpaceTimeField& b) { return a += b; }
inline SpaceTimeField operator-(SpaceTimeField a, const SpaceTimeField& b) { return a -= b; }
inline SpaceTimeField operator*(double c, SpaceTimeField a) { return a *= c; }

// sup_t of a spatial norm
inline double sup_besov(const SpaceTimeField& u, double alpha, const Weight& w) {
    double v = 0.0;
    for (const auto& s : u.slices) v = std::max(v, besov_norm(s, alpha, w));
    return v;
}

// L^q_T of a spatial Besov norm (q = inf gives sup_t), rectangle quadrature.
inline double lq_time_besov(const SpaceTimeField& u, double q, double alpha, const Weight& w) {
    if (q == kInf) return sup_besov(u, alpha, w);
    double acc = 0.0;
    double d = u.dt();
    for (const auto& s : u.slices) acc += std::pow(besov_norm(s, alpha, w), q) * d;
    return std::pow(acc, 1.0 / q);
}

inline double sup_linf(const SpaceTimeField& u, const Weight& w) {
    double v = 0.0;
    for (const auto& s : u.slices) v = std::max(v, lp_weighted(s, w, kInf));
    return v;
}

// Evenly strided subset of slice indices, at most cap entries, always
// containing the endpoints; deterministic.
inline std::vector<int> strided_indices(int n, int cap) {
    std::vector<int> idx;
    if (n <= cap) {
        for (int i = 0; i < n; ++i) idx.push_back(i);
        return idx;
    }
    double step = double(n - 1) / double(cap - 1);
    int prev = -1;
    for (int i = 0; i < cap; ++i) {
        int m = int(std::lround(i * step));
        if (m != prev) idx.push_back(m);
        prev = m;
    }
    return idx;
}

// Time-Hoelder seminorm sup_{s != t} ||u(t) - u(s)||_{L^inf(rho)} / |t-s|^{beta}
// plus sup_t ||u(t)||_{L^inf(rho)}; pairs subsampled on a strided grid.
inline double time_holder_norm(const SpaceTimeField& u, double beta, const Weight& w,
                               int pair_cap = 64) {
    double sup0 = sup_linf(u, w);
    auto idx = strided_indices(u.num_slices(), pair_cap);
    double quot = 0.0;
    for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = a + 1; b < idx.size(); ++b) {
            const Field& fa = u[idx[a]];
            const Field& fb = u[idx[b]];
            double d = 0.0;
            for (std::size_t i = 0; i < fa.values.size(); ++i)
                d = std::max(d, std::abs(fa.values[i] - fb.values[i]) * w.values.values[i]);
            quot = std::max(quot, d / std::pow(std::abs(u.times[idx[b]] - u.times[idx[a]]), beta));
        }
    return sup0 + quot;
}

// S-norm of the solution space: L^inf_T C^alpha(rho) + C^{alpha/2}_T L^inf(rho).
inline double s_norm(const SpaceTimeField& u, double alpha, const Weight& w, int pair_cap = 64) {
    return sup_besov(u, alpha, w) + time_holder_norm(u, alpha / 2.0, w, pair_cap);
}

// Cheaper gauge of the same norm on a strided slice subset; used as an
// iteration convergence metric, not for reported values.
inline double s_norm_strided(const SpaceTimeField& u, double alpha, const Weight& w, int cap = 24) {
    double v = 0.0;
    for (int m : strided_indices(u.num_slices(), cap))
        v = std::max(v, besov_norm(u[m], alpha, w));
    return v + time_holder_norm(u, alpha / 2.0, w, cap);
}

inline SpaceTimeField derivative(const SpaceTimeField& u, int axis = 0) {
    SpaceTimeField out = u;
    for (auto& s : out.slices) s = derivative(s, axis);
    return out;
}

}  // namespace parapde
