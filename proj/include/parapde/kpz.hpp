#pragma once

// End-to-end KPZ run: sample xi_n, build the tree enhancement, assemble the
// renormalized pair, solve the remainder equation
//   L h~ = 2 dx h~ (X + X1 + X2) + (dx h~)^2 + f-terms,   h~(0) = h0 - Y(0),
// reconstruct h = Y + Y1 + Y2 + h~, and compare against the independent
// Cole-Hopf reference (Ito-stepped multiplicative stochastic heat equation
// on the same noise realization).

#include <cmath>
#include <stdexcept>
#include <vector>

#include "parapde/hjb.hpp"

namespace parapde {

struct KPZConfig {
    int N = 512;
    double T = 0.25;
    double dt = 1e-3;
    double kappa = 0.2;   // pair weight exponent
    double alpha = 0.55;  // regularity label
    double eta = 0.5;     // comparison weight exponent
    Y0Spec y0;
    std::vector<double> pair_lambda_grid = {0.0, 1.0, 16.0, 256.0};
    SingularHJBConfig hjb;
    double ito_correction = 0.0;  // extra -c w term in the reference equation
};

struct KPZRun {
    KPZEnhancement enh;
    RenormalizedPair pair;
    SpaceTimeField h_tilde, h;
    Field h0;  // full initial height Y(0) + h~(0)
};

inline std::vector<double> kpz_time_grid(const KPZConfig& cfg) {
    int M = int(std::lround(cfg.T / cfg.dt));
    if (M < 1) throw std::invalid_argument("kpz: T/dt must be >= 1");
    std::vector<double> times(std::size_t(M) + 1, 0.0);
    for (int m = 0; m <= M; ++m) times[std::size_t(m)] = cfg.T * m / M;
    return times;
}

// Assembles the pipeline up to the pair; h~(0) supplied by the caller.
inline KPZRun run_kpz(int n, std::uint64_t seed, const Field& htilde0, const KPZConfig& cfg) {
    Grid g(1, cfg.N, double(n));
    if (htilde0.grid != g) throw std::invalid_argument("run_kpz: htilde0 grid mismatch");
    std::vector<double> times = kpz_time_grid(cfg);

    KPZRun run;
    SpaceTimeField xi = sample_noise(n, seed, g, times);
    run.enh = build_trees(xi, cfg.y0, n, seed);
    run.pair = assemble_kpz_pair(run.enh, cfg.kappa, cfg.alpha, cfg.pair_lambda_grid);
    run.h0 = run.enh.Y[0] + htilde0;

    run.h_tilde = solve_singular_hjb(run.pair, HDescriptor::quadratic(1.0), htilde0, cfg.hjb).u;
    run.h = run.enh.Y + run.enh.Y1 + run.enh.Y2;
    run.h += run.h_tilde;
    return run;
}

// Naive variant for the consistency invariant: every paracontrolled product
// replaced by the plain dealiased product, single time-marching pass.
inline SpaceTimeField naive_kpz_height(const KPZRun& run, const Field& htilde0) {
    RenormalizedPair pair = run.pair;  // copy; b, f reused read-only
    const Grid& g = pair.grid();
    const int M = pair.f.num_slices();
    DuhamelStepper st(g, 0.0, pair.f.dt());
    SpaceTimeField ht;
    ht.times = pair.f.times;
    ht.slices.assign(std::size_t(M), Field(g));
    ht[0] = htilde0;
    SpectralField state = htilde0.to_spectral();
    for (int m = 0; m + 1 < M; ++m) {
        Field dv = derivative(ht[m], 0);
        Field rhs = pair.f[m];
        rhs += multiply(pair.b[0][m], dv);
        rhs += multiply(dv, dv);
        SpectralField gm = rhs.to_spectral();
        st.step(state, gm);
        ht[m + 1] = state.to_field();
    }
    SpaceTimeField h = run.enh.Y + run.enh.Y1 + run.enh.Y2;
    h += ht;
    return h;
}

class ReferenceFailure : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Cole-Hopf reference for L w = w xi_n, w(0) = e^{h0}; returns log w.
// Stratonovich-type exponential product with the pointwise Ito correction:
//   w_{m+1} = P_dt[w_m] . exp(dW_m - dW_m^2 / 2 - c dt),
// which matches Ito stepping to order dW^3, preserves positivity, and is
// exact (log of the heat flow) at zero noise. The convention and the extra
// constant c (default 0) go into the run manifest.
inline SpaceTimeField cole_hopf_reference(const KPZEnhancement& enh, const Field& htilde0,
                                          const KPZConfig& cfg) {
    const Grid& g = enh.grid;
    const int M = enh.xi.num_slices();
    const double dt = enh.xi.dt();
    Field h0 = enh.Y[0] + htilde0;
    Field w(g);
    for (std::size_t i = 0; i < g.size(); ++i) w.values[i] = std::exp(h0.values[i]);

    SpaceTimeField logw;
    logw.times = enh.xi.times;
    logw.slices.assign(std::size_t(M), Field(g));
    logw[0] = h0;
    for (int m = 0; m + 1 < M; ++m) {
        w = heat(w, dt);
        double wmin = kInf;
        for (std::size_t i = 0; i < g.size(); ++i) {
            double dw = enh.xi[m].values[i];
            w.values[i] *= std::exp(dw - 0.5 * dw * dw - cfg.ito_correction * dt);
            wmin = std::min(wmin, w.values[i]);
        }
        if (!(wmin > 0.0) || !w.finite())
            throw ReferenceFailure("cole_hopf_reference: w lost positivity (decrease dt)");
        for (std::size_t i = 0; i < g.size(); ++i) logw[m + 1].values[i] = std::log(w.values[i]);
    }
    return logw;
}

struct KPZCompareReport {
    double drift_a = 0.0, drift_c = 0.0;  // fitted h_para - h_CH ~ a + c t
    double sup_discrepancy = 0.0;         // sup_t || residual ||_{L^inf(rho_eta)}
    std::vector<double> per_time;
};

// Removes the fitted constant drift (renormalization-convention offset) and
// reports the weighted sup-norm discrepancy.
inline KPZCompareReport compare_heights(const SpaceTimeField& h_para, const SpaceTimeField& h_ch,
                                        double eta) {
    if (h_para.num_slices() != h_ch.num_slices())
        throw std::invalid_argument("compare_heights: time grids differ");
    const Grid& g = h_para.grid();
    Weight w(g, eta);
    const int M = h_para.num_slices();
    // least-squares fit of the spatial-mean difference against a + c t
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::vector<double> mean_diff(std::size_t(M), 0.0);
    for (int m = 0; m < M; ++m) {
        double mu = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
            mu += h_para[m].values[i] - h_ch[m].values[i];
        mu /= double(g.size());
        mean_diff[std::size_t(m)] = mu;
        double t = h_para.times[std::size_t(m)];
        sx += t; sy += mu; sxx += t * t; sxy += t * mu;
    }
    KPZCompareReport rep;
    double denom = M * sxx - sx * sx;
    rep.drift_c = denom != 0.0 ? (M * sxy - sx * sy) / denom : 0.0;
    rep.drift_a = (sy - rep.drift_c * sx) / M;
    rep.per_time.resize(std::size_t(M));
    for (int m = 0; m < M; ++m) {
        double t = h_para.times[std::size_t(m)];
        double shift = rep.drift_a + rep.drift_c * t;
        double sup = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
            sup = std::max(sup, std::abs(h_para[m].values[i] - h_ch[m].values[i] - shift) *
                                    w.values.values[i]);
        rep.per_time[std::size_t(m)] = sup;
        rep.sup_discrepancy = std::max(rep.sup_discrepancy, sup);
    }
    return rep;
}

struct InvarianceReport {
    std::vector<double> lags;
    std::vector<double> var0, varT;  // increment variances across seeds
    std::vector<double> z;           // z-score of varT/var0 - 1 (bootstrap se)
    int n_seeds = 0;
};

// Spatial-increment variance of h(T, .) - h(T, 0) across seeds, compared with
// the t = 0 (Brownian) increments; h~(0) = 0 so h0 = Y(0).
inline InvarianceReport invariance_probe(int n, const std::vector<std::uint64_t>& seeds,
                                         const KPZConfig& cfg, int n_lags = 6) {
    Grid g(1, cfg.N, double(n));
    Field zero(g);
    InvarianceReport rep;
    rep.n_seeds = int(seeds.size());
    int max_lag_cells = int(std::floor((g.L / 8.0) / g.h()));
    for (int l = 1; l <= n_lags; ++l)
        rep.lags.push_back(g.h() * std::max(1, l * max_lag_cells / n_lags));

    std::vector<std::vector<double>> inc0(rep.lags.size()), incT(rep.lags.size());
    for (std::uint64_t s : seeds) {
        KPZRun run = run_kpz(n, s, zero, cfg);
        const Field& f0 = run.h[0];
        const Field& fT = run.h[run.h.num_slices() - 1];
        for (std::size_t li = 0; li < rep.lags.size(); ++li) {
            int cells = int(std::lround(rep.lags[li] / g.h()));
            inc0[li].push_back(f0.values[std::size_t(cells)] - f0.values[0]);
            incT[li].push_back(fT.values[std::size_t(cells)] - fT.values[0]);
        }
    }
    auto variance = [](const std::vector<double>& xs) {
        double mu = 0.0;
        for (double x : xs) mu += x;
        mu /= double(xs.size());
        double v = 0.0;
        for (double x : xs) v += (x - mu) * (x - mu);
        return v / double(xs.size() - 1);
    };
    GaussianSampler boot(1234567);
    const int B = 400;
    for (std::size_t li = 0; li < rep.lags.size(); ++li) {
        double v0 = variance(inc0[li]);
        double vT = variance(incT[li]);
        rep.var0.push_back(v0);
        rep.varT.push_back(vT);
        // paired bootstrap of the ratio
        std::vector<double> ratios;
        const std::size_t S = inc0[li].size();
        for (int b = 0; b < B; ++b) {
            std::vector<double> r0, rT;
            for (std::size_t k = 0; k < S; ++k) {
                std::size_t pick = std::size_t(boot.raw() % S);
                r0.push_back(inc0[li][pick]);
                rT.push_back(incT[li][pick]);
            }
            double d0 = variance(r0);
            if (d0 > 0) ratios.push_back(variance(rT) / d0);
        }
        double mu = 0.0;
        for (double r : ratios) mu += r;
        mu /= double(ratios.size());
        double sd = 0.0;
        for (double r : ratios) sd += (r - mu) * (r - mu);
        sd = std::sqrt(sd / double(ratios.size() - 1));
        rep.z.push_back(sd > 0 ? (vT / v0 - 1.0) / sd : 0.0);
    }
    return rep;
}

}  // namespace parapde
