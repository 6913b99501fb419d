#pragma once

// Bony decomposition f g = f<g + f o g + f>g on the lattice, the
// time-mollified paraproduct <<, the trilinear commutator
// com(f,g,h) = (f<g) o h - f (g o h), and the localization operators
// V_> / V_<= built on dyadic spatial and temporal shells.
//
// Every block product is dealiased: both factors are padded to 2N modes,
// multiplied in real space on the fine grid, and the result truncated back.
// Sums of products are accumulated on the fine grid so a full decomposition
// costs O(j_max) transforms, not O(j_max^2).

#include <cmath>
#include <stdexcept>
#include <vector>

#include "parapde/dyadic.hpp"
#include "parapde/spacetime.hpp"

namespace parapde {

struct BonyParts {
    Field lower;     // f < g
    Field resonant;  // f o g
    Field upper;     // f > g
};

namespace detail {

struct PaddedBlocks {
    Grid fine;
    std::vector<Field> delta;  // Delta_j on the 2N grid, j = -1..j_max
    std::vector<Field> low;    // cumulative sums on the 2N grid; low[j] = sum_{i<=j-2}

    PaddedBlocks(const Field& f, const DyadicPartition& part, bool need_delta = true,
                 bool need_low = true) {
        const Grid& g = f.grid;
        fine = Grid(g.dim, 2 * g.N, g.L);
        SpectralField s = f.to_spectral();
        const int nb = part.num_blocks();
        if (need_delta) delta.reserve(std::size_t(nb));
        if (need_low) {
            low.reserve(std::size_t(nb) + 1);
            SpectralField zero(g);
            low.push_back(pad_spectrum(zero).to_field());
        }
        SpectralField cum(g);
        for (int j = -1; j <= part.j_max; ++j) {
            SpectralField bj = part.block_spectral(s, j);
            if (need_delta) delta.push_back(pad_spectrum(bj).to_field());
            if (need_low) {
                for (std::size_t i = 0; i < cum.coeffs.size(); ++i) cum.coeffs[i] += bj.coeffs[i];
                low.push_back(pad_spectrum(cum).to_field());
            }
        }
    }

    const Field& block(int j) const { return delta.at(std::size_t(j + 1)); }
};

inline Field fine_to_coarse(const Field& fine_field, const Grid& coarse) {
    return truncate_spectrum(fine_field.to_spectral(), coarse).to_field();
}

}  // namespace detail

// Full Bony decomposition. lower + resonant + upper equals the dealiased
// product multiply(f, g) exactly on the lattice.
inline BonyParts bony_decompose(const Field& f, const Field& g) {
    f.check_same(g);
    const DyadicPartition& part = partition_for(f.grid);
    detail::PaddedBlocks bf(f, part), bg(g, part);
    Field lo(bf.fine), re(bf.fine), up(bf.fine);
    for (int j = -1; j <= part.j_max; ++j) {
        // f < g: S_{j-1} f . Delta_j g   (indices i <= j-2; empty for j <= 0)
        const Field& sf = bf.low.at(std::size_t(std::max(j, 0)));
        const Field& sg = bg.low.at(std::size_t(std::max(j, 0)));
        const Field& dfj = bf.block(j);
        const Field& dgj = bg.block(j);
        for (std::size_t i = 0; i < lo.values.size(); ++i) {
            lo.values[i] += sf.values[i] * dgj.values[i];
            up.values[i] += sg.values[i] * dfj.values[i];
        }
        // resonant: Delta_j f . (Delta_{j-1} + Delta_j + Delta_{j+1}) g
        for (int jj = j - 1; jj <= j + 1; ++jj) {
            if (jj < -1 || jj > part.j_max) continue;
            const Field& dgj2 = bg.block(jj);
            for (std::size_t i = 0; i < re.values.size(); ++i)
                re.values[i] += dfj.values[i] * dgj2.values[i];
        }
    }
    BonyParts parts;
    parts.lower = detail::fine_to_coarse(lo, f.grid);
    parts.resonant = detail::fine_to_coarse(re, f.grid);
    parts.upper = detail::fine_to_coarse(up, f.grid);
    return parts;
}

inline BonyParts paraproduct(const Field& f, const Field& g) { return bony_decompose(f, g); }

inline Field prec(const Field& f, const Field& g) {  // f < g
    f.check_same(g);
    const DyadicPartition& part = partition_for(f.grid);
    detail::PaddedBlocks bf(f, part, false, true), bg(g, part, true, false);
    Field lo(bf.fine);
    for (int j = -1; j <= part.j_max; ++j) {
        const Field& sf = bf.low.at(std::size_t(std::max(j, 0)));
        const Field& dgj = bg.block(j);
        for (std::size_t i = 0; i < lo.values.size(); ++i)
            lo.values[i] += sf.values[i] * dgj.values[i];
    }
    return detail::fine_to_coarse(lo, f.grid);
}

inline Field resonant(const Field& f, const Field& g) {  // f o g
    f.check_same(g);
    const DyadicPartition& part = partition_for(f.grid);
    detail::PaddedBlocks bf(f, part, true, false), bg(g, part, true, false);
    Field re(bf.fine);
    for (int j = -1; j <= part.j_max; ++j) {
        const Field& dfj = bf.block(j);
        for (int jj = j - 1; jj <= j + 1; ++jj) {
            if (jj < -1 || jj > part.j_max) continue;
            const Field& dgj2 = bg.block(jj);
            for (std::size_t i = 0; i < re.values.size(); ++i)
                re.values[i] += dfj.values[i] * dgj2.values[i];
        }
    }
    return detail::fine_to_coarse(re, f.grid);
}

inline Field succ(const Field& f, const Field& g) { return prec(g, f); }  // f > g

// com(f, g, h) = (f < g) o h - f (g o h)
inline Field commutator(const Field& f, const Field& g, const Field& h) {
    Field a = resonant(prec(f, g), h);
    Field b = multiply(f, resonant(g, h));
    return a - b;
}

// ---------------------------------------------------------------------------
// Time-mollified paraproduct f << g with Q_j f(t) = int 2^{2j} Q(2^{2j}(t-s))
// f((s ^ T) v 0) ds. Q is the standard unit-mass bump supported in [-1,1];
// discrete weights are trapezoidal and renormalized to unit mass so a
// time-constant f reproduces f < g exactly.

namespace detail {

inline double q_bump(double s) {
    if (std::abs(s) >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - s * s));
}

struct TimeMollifier {
    // for each (j, t-index): sample indices into the time grid and weights
    std::vector<std::vector<std::pair<int, double>>> table;  // [t] -> (m, w)

    TimeMollifier() = default;
    TimeMollifier(const std::vector<double>& times, int j) {
        const int M = int(times.size());
        const double dt = times.size() > 1 ? times[1] - times[0] : 1.0;
        const double T = times.back();
        const double scale = std::pow(2.0, 2.0 * j);
        const double halfw = 1.0 / scale;
        table.resize(M);
        for (int t = 0; t < M; ++t) {
            auto& row = table[t];
            int lo = int(std::floor((times[t] - halfw) / dt)) - 1;
            int hi = int(std::ceil((times[t] + halfw) / dt)) + 1;
            double wsum = 0.0;
            for (int m = lo; m <= hi; ++m) {
                double s = m * dt;
                double w = q_bump(scale * (times[t] - s));
                if (w <= 0.0) continue;
                // trapezoid endpoints get half weight only if neighbors active;
                // plain rectangle weights then renormalized works identically
                int mc = std::min(std::max(m, 0), M - 1);  // (s ^ T) v 0 clamp
                row.emplace_back(mc, w);
                wsum += w;
            }
            if (row.empty() || wsum <= 0.0) {
                row.clear();
                row.emplace_back(t, 1.0);
                wsum = 1.0;
            }
            for (auto& e : row) e.second /= wsum;
            (void)T;
        }
    }
};

}  // namespace detail

// f << g, slice by slice: sum_j (S_{j-1} Q_j f)(t) . Delta_j g(t).
// The low-frequency factor S_{j-2} Q_j f only carries the few modes below
// 2^{j-1}, so the wide time windows at small j are convolved over the active
// modes only; blocks with an empty low sum (j <= 0) are skipped outright.
inline SpaceTimeField modified_paraproduct(const SpaceTimeField& f, const SpaceTimeField& g) {
    if (f.num_slices() != g.num_slices())
        throw std::invalid_argument("modified_paraproduct: time grids differ");
    if (!f.uniform() || !g.uniform())
        throw std::invalid_argument("modified_paraproduct: nonuniform time grid unsupported");
    const Grid& grid = f.grid();
    const DyadicPartition& part = partition_for(grid);
    const int M = f.num_slices();

    std::vector<SpectralField> fs{std::size_t(M)}, gs{std::size_t(M)};
    for (int m = 0; m < M; ++m) {
        fs[std::size_t(m)] = f[m].to_spectral();
        gs[std::size_t(m)] = g[m].to_spectral();
    }

    SpaceTimeField out;
    out.times = f.times;
    out.slices.assign(std::size_t(M), Field(grid));
    Grid fine(grid.dim, 2 * grid.N, grid.L);

    // active modes and cumulative low-sum multiplier per block
    struct LowSet {
        std::vector<std::size_t> idx;
        std::vector<double> mult;
    };
    std::vector<LowSet> lows(std::size_t(part.num_blocks()));
    {
        std::vector<double> cum(grid.size(), 0.0);
        for (int j = -1; j <= part.j_max; ++j) {
            // cum currently holds sum_{i <= j-2} of the profiles
            LowSet& ls = lows[std::size_t(j + 1)];
            for (std::size_t i = 0; i < cum.size(); ++i)
                if (cum[i] != 0.0) {
                    ls.idx.push_back(i);
                    ls.mult.push_back(cum[i]);
                }
            const auto& pj = part.profile(j - 1 >= -1 ? j - 1 : -1);
            if (j - 1 >= -1)
                for (std::size_t i = 0; i < cum.size(); ++i) cum[i] += pj[i];
        }
    }

    std::vector<detail::TimeMollifier> moll(std::size_t(part.num_blocks()));
    for (int j = -1; j <= part.j_max; ++j)
        if (!lows[std::size_t(j + 1)].idx.empty())
            moll[std::size_t(j + 1)] = detail::TimeMollifier(f.times, j);

    for (int t = 0; t < M; ++t) {
        Field acc(fine);
        bool any = false;
        for (int j = -1; j <= part.j_max; ++j) {
            const LowSet& ls = lows[std::size_t(j + 1)];
            if (ls.idx.empty()) continue;
            SpectralField sq(grid);
            for (auto& [m, w] : moll[std::size_t(j + 1)].table[std::size_t(t)]) {
                const auto& cm = fs[std::size_t(m)].coeffs;
                for (std::size_t a = 0; a < ls.idx.size(); ++a)
                    sq.coeffs[ls.idx[a]] += (w * ls.mult[a]) * cm[ls.idx[a]];
            }
            Field af = pad_spectrum(sq).to_field();
            Field bf = pad_spectrum(part.block_spectral(gs[std::size_t(t)], j)).to_field();
            for (std::size_t i = 0; i < acc.values.size(); ++i)
                acc.values[i] += af.values[i] * bf.values[i];
            any = true;
        }
        if (any) out[t] = detail::fine_to_coarse(acc, grid);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Localization operators. Spatial shells w_k and temporal shells v_m are
// dyadic partitions of unity (deficit folded into the top shell); the plan
// assigns a block threshold L_{k,m} per cell.

struct LocalizationPlan {
    double threshold = 2.0;  // L
    double a = 1.0, b = 1.0;
    int spatial_shells = 0;   // filled by build()
    int temporal_shells = 0;
    std::vector<Field> w;            // spatial shell fields, index k+1
    std::vector<std::vector<double>> v;  // temporal shell weights per slice, index m+1

    int level(int k, int m) const {
        int L = int(std::floor(threshold + a * k + b * m));
        return std::max(L, -1);
    }
};

inline LocalizationPlan make_localization_plan(const Grid& g, const std::vector<double>& times,
                                               double L_threshold, double a = 1.0, double b = 1.0) {
    LocalizationPlan plan;
    plan.threshold = L_threshold;
    plan.a = a;
    plan.b = b;

    // spatial shells on |x|
    double xmax = g.dim == 1 ? g.L : g.L * std::sqrt(2.0);
    int K = 0;
    while (std::pow(2.0, K) < xmax) ++K;
    plan.spatial_shells = K;
    auto chi_s = [](double r) { return r <= 0.5 ? 1.0 : (r >= 1.0 ? 0.0 : 1.0 - detail::smooth_step(2.0 * (r - 0.5))); };
    plan.w.assign(std::size_t(K + 1), Field(g));
    for (std::size_t i = 0; i < g.size(); ++i) {
        double xn;
        if (g.dim == 1)
            xn = std::abs(g.x(int(i)));
        else
            xn = std::hypot(g.x(int(i) / g.N), g.x(int(i) % g.N));
        double sum = 0.0;
        for (int k = -1; k <= K - 1; ++k) {
            double val = k == -1 ? chi_s(xn)
                                 : chi_s(xn / std::pow(2.0, k + 1)) - chi_s(xn / std::pow(2.0, k));
            plan.w[std::size_t(k + 1)].values[i] = val;
            sum += val;
        }
        plan.w[std::size_t(K)].values[i] += 1.0 - sum;  // fold deficit into top shell
    }

    // temporal shells on [0, T], base scale T / 2^{Msh}
    const double T = times.back();
    const int Msh = 4;
    plan.temporal_shells = Msh;
    double t0 = T > 0 ? T / std::pow(2.0, Msh) : 1.0;
    plan.v.assign(std::size_t(Msh + 1), std::vector<double>(times.size(), 0.0));
    for (std::size_t s = 0; s < times.size(); ++s) {
        double t = times[s];
        double sum = 0.0;
        for (int m = -1; m <= Msh - 1; ++m) {
            double val = m == -1 ? chi_s(t / t0)
                                 : chi_s(t / (t0 * std::pow(2.0, m + 1))) - chi_s(t / (t0 * std::pow(2.0, m)));
            plan.v[std::size_t(m + 1)][s] = val;
            sum += val;
        }
        plan.v[std::size_t(Msh)][s] += 1.0 - sum;
    }
    return plan;
}

struct LocalizedParts {
    SpaceTimeField rough;   // V_> f
    SpaceTimeField smooth;  // V_<= f
};

inline LocalizedParts localize(const SpaceTimeField& f, const LocalizationPlan& plan) {
    const Grid& g = f.grid();
    if (plan.w.empty() || plan.w[0].grid != g)
        throw std::invalid_argument("localize: plan grid mismatch");
    if (plan.v.empty() || plan.v[0].size() != std::size_t(f.num_slices()))
        throw std::invalid_argument("localize: plan does not cover the time grid");
    const DyadicPartition& part = partition_for(g);

    LocalizedParts out;
    out.rough.times = f.times;
    out.smooth.times = f.times;
    out.rough.slices.assign(f.num_slices(), Field(g));
    out.smooth.slices.assign(f.num_slices(), Field(g));

    const int K = plan.spatial_shells;
    const int Msh = plan.temporal_shells;
    for (int t = 0; t < f.num_slices(); ++t) {
        SpectralField s = f[t].to_spectral();
        // cumulative high sums, high[l+2] = sum_{j > l} Delta_j f, l = -2 .. j_max
        std::vector<Field> high(std::size_t(part.j_max + 3), Field(g));
        high[std::size_t(part.j_max + 2)] = Field(g);  // sum over j > j_max is empty
        SpectralField cum(g);
        for (int j = part.j_max; j >= -1; --j) {
            SpectralField bj = part.block_spectral(s, j);
            for (std::size_t i = 0; i < cum.coeffs.size(); ++i) cum.coeffs[i] += bj.coeffs[i];
            high[std::size_t(j + 1)] = cum.to_field();
        }
        for (int k = -1; k <= K - 1; ++k)
            for (int m = -1; m <= Msh - 1; ++m) {
                double vm = plan.v[std::size_t(m + 1)][std::size_t(t)];
                if (vm == 0.0) continue;
                int L = std::min(plan.level(k, m), part.j_max);
                const Field& H = high[std::size_t(L + 2)];
                const Field& wk = plan.w[std::size_t(k + 1)];
                for (std::size_t i = 0; i < g.size(); ++i) {
                    double cell = wk.values[i] * vm;
                    if (cell == 0.0) continue;
                    double hv = H.values[i];
                    out.rough[t].values[i] += cell * hv;
                    out.smooth[t].values[i] += cell * (f[t].values[i] - hv);
                }
            }
    }
    return out;
}

}  // namespace parapde
