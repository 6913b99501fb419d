#pragma once

// Monte Carlo verification layer: Euler-Maruyama paths for the exponential
// moment envelope E exp(gamma sup_t <X_t>^alpha) <= C exp(<x>^alpha), and a
// Feynman-Kac cross-check of the linear (H = 0) HJB solve. Paths live on the
// real line; torus coefficients are extended periodically while weights see
// the true distance.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "parapde/hjb.hpp"
#include "parapde/rng.hpp"

namespace parapde {

// Deterministic pairwise summation for reproducible reductions.
inline double pairwise_sum(const std::vector<double>& xs, std::size_t lo, std::size_t hi) {
    if (hi - lo <= 8) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += xs[i];
        return s;
    }
    std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum(xs, lo, mid) + pairwise_sum(xs, mid, hi);
}

inline double pairwise_mean(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    return pairwise_sum(xs, 0, xs.size()) / double(xs.size());
}

struct SDESpec {
    std::function<double(double t, double x)> drift;
    std::function<double(double t, double x)> sigma;
    double x0 = 0.0;
    double T = 1.0;
    double dt = 1e-3;
    int n_paths = 10000;
    std::uint64_t seed = 1;
};

struct ExpMomentResult {
    double estimate = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;
    double sigma_bound = 0.0;      // sampled sup |sigma|
    double drift_growth = 0.0;     // sampled sup |b| / <x>
};

// E exp(gamma sup_{t<=T} <X_t>^alpha) by Euler-Maruyama with bootstrap CI.
inline ExpMomentResult exp_moment(const SDESpec& spec, double gamma, double alpha) {
    if (!(alpha >= 0.0) || alpha >= 2.0) throw std::out_of_range("exp_moment: alpha in [0,2)");
    if (!(gamma > 0.0)) throw std::out_of_range("exp_moment: gamma > 0");
    const int steps = std::max(1, int(std::lround(spec.T / spec.dt)));
    const double dt = spec.T / steps;
    const double sq = std::sqrt(dt);
    ExpMomentResult res;
    std::vector<double> samples;
    samples.reserve(std::size_t(spec.n_paths));
    for (int p = 0; p < spec.n_paths; ++p) {
        GaussianSampler rng(mix_seed(spec.seed, std::uint64_t(p)));
        double x = spec.x0;
        double sup = std::pow(1.0 + x * x, 0.5 * alpha);
        for (int m = 0; m < steps; ++m) {
            double t = m * dt;
            double bv = spec.drift(t, x);
            double sv = spec.sigma(t, x);
            res.sigma_bound = std::max(res.sigma_bound, std::abs(sv));
            res.drift_growth = std::max(res.drift_growth, std::abs(bv) / std::sqrt(1.0 + x * x));
            x += bv * dt + sv * sq * rng();
            if (!std::isfinite(x)) throw std::runtime_error("exp_moment: path diverged (reduce dt)");
            sup = std::max(sup, std::pow(1.0 + x * x, 0.5 * alpha));
        }
        samples.push_back(std::exp(gamma * sup));
    }
    res.estimate = pairwise_mean(samples);
    // deterministic bootstrap percentile CI
    const int B = 400;
    std::vector<double> boots;
    boots.reserve(B);
    GaussianSampler boot(mix_seed(spec.seed, 0xB00757ULL));
    const std::size_t n = samples.size();
    std::vector<double> resample(n);
    for (int b = 0; b < B; ++b) {
        for (std::size_t i = 0; i < n; ++i) resample[i] = samples[boot.raw() % n];
        boots.push_back(pairwise_mean(resample));
    }
    std::sort(boots.begin(), boots.end());
    res.ci_lo = boots[std::size_t(0.025 * B)];
    res.ci_hi = boots[std::size_t(std::min(double(B - 1), 0.975 * B))];
    return res;
}

struct FeynmanKacRow {
    double t = 0.0, x = 0.0;
    double pde = 0.0, mc = 0.0, se = 0.0, z = 0.0;
};

namespace detail {

inline double field_at(const Field& f, double x_unwrapped) {
    return interp_periodic(f, wrap(x_unwrapped, f.grid.L));
}

}  // namespace detail

// Backward representation of the linear equation dv/dt = tr(a grad^2 v) +
// B . grad v: v(t, x) = E v0(X_t) with dX_s = B(t-s, X) ds + sqrt(2 a(t-s, X)) dW.
// d = 1 path coefficients, torus-lifted.
inline std::vector<FeynmanKacRow> feynman_kac_check(const HJBProblem& prob,
                                                    const SpaceTimeField& v_pde,
                                                    const std::vector<std::pair<double, double>>& pts,
                                                    int n_paths, std::uint64_t seed) {
    if (prob.H.kind != HDescriptor::Kind::none)
        throw std::invalid_argument("feynman_kac_check: requires H = 0");
    if (prob.dim() != 1) throw std::invalid_argument("feynman_kac_check: d = 1 only");
    const double dt = v_pde.dt();
    std::vector<FeynmanKacRow> rows;
    for (auto [t, x] : pts) {
        FeynmanKacRow row;
        row.t = t;
        row.x = x;
        int mt = v_pde.index_of_time(t);
        row.pde = detail::field_at(v_pde[mt], x);
        std::vector<double> vals;
        vals.reserve(std::size_t(n_paths));
        const int steps = mt;
        for (int p = 0; p < n_paths; ++p) {
            GaussianSampler rng(mix_seed(seed, std::uint64_t(p) * 2654435761ULL + std::uint64_t(mt)));
            double X = x;
            for (int m = 0; m < steps; ++m) {
                // reversed time index: coefficients at t - s
                int mi = std::max(0, mt - m);  // slice of a, B at time t - m dt
                double av = detail::field_at(prob.a[0][mi], X);
                double Bv = detail::field_at(prob.B[0][mi], X);
                X += Bv * dt + std::sqrt(std::max(0.0, 2.0 * av) * dt) * rng();
            }
            vals.push_back(detail::field_at(prob.v0, X));
        }
        row.mc = pairwise_mean(vals);
        double var = 0.0;
        for (double v : vals) var += (v - row.mc) * (v - row.mc);
        var /= double(vals.size() - 1);
        row.se = std::sqrt(var / double(vals.size()));
        double floor = 1e-14 * (1.0 + std::abs(row.mc));  // degenerate-sample guard
        row.z = row.se > floor ? (row.mc - row.pde) / row.se : 0.0;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace parapde
