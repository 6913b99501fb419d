#pragma once

// HJB engine: classical (function-coefficient) solver for
//   dv/dt = tr(a . grad^2 v) + B . grad v + H(v, grad v),
// the mollified nonlinearity H_n, the Zvonkin diffeomorphism built from the
// localized drift decomposition b = b_> + b_<=, the coefficient transform it
// induces, and the singular HJB pipeline u = u1 + u2 with paracontrolled
// transport.

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "parapde/linear_solver.hpp"

namespace parapde {

// ---------------------------------------------------------------------------
// Nonlinearity descriptor

struct HDescriptor {
    enum class Kind { none, power, quadratic, table };
    Kind kind = Kind::none;
    double zeta = 2.0;   // |Q|^zeta exponent (power)
    double coeff = 1.0;  // prefactor (power, quadratic)
    std::function<double(double t, double x, double v, const double* Q, int d)> fn;

    static HDescriptor none() { return HDescriptor{}; }
    static HDescriptor power(double zeta, double coeff = 1.0) {
        if (zeta < 0.0 || zeta >= 2.0) throw std::invalid_argument("HDescriptor: power needs zeta in [0,2)");
        HDescriptor h;
        h.kind = Kind::power;
        h.zeta = zeta;
        h.coeff = coeff;
        return h;
    }
    static HDescriptor quadratic(double coeff) {
        HDescriptor h;
        h.kind = Kind::quadratic;
        h.coeff = coeff;
        return h;
    }
    static HDescriptor table(std::function<double(double, double, double, const double*, int)> f) {
        HDescriptor h;
        h.kind = Kind::table;
        h.fn = std::move(f);
        return h;
    }

    double eval(double t, double x, double v, const double* Q, int d) const {
        switch (kind) {
            case Kind::none:
                return 0.0;
            case Kind::power: {
                double q2 = 0.0;
                for (int i = 0; i < d; ++i) q2 += Q[i] * Q[i];
                return coeff * std::pow(q2, 0.5 * zeta);
            }
            case Kind::quadratic: {
                double q2 = 0.0;
                for (int i = 0; i < d; ++i) q2 += Q[i] * Q[i];
                return coeff * q2;
            }
            case Kind::table:
                return fn(t, x, v, Q, d);
        }
        return 0.0;
    }
};

// Mollified approximation H_n: convolution of H (cut off at radius 2n in the
// (v,Q)-arguments) with a compactly supported bump density at scale 1/n,
// times the spatial cutoff chi(x/n).
inline HDescriptor mollify_H(const HDescriptor& base, int n, int d, int nodes_per_dim = 7) {
    if (n < 1) throw std::invalid_argument("mollify_H: n >= 1 required");
    // tensor-product bump quadrature on [-1,1]^{d+1}, weights normalized
    struct Quad {
        std::vector<std::vector<double>> offsets;  // (d+1)-vectors, scaled by 1/n later
        std::vector<double> weights;
    };
    auto quad = std::make_shared<Quad>();
    const int nd = d + 1;
    std::vector<double> pts(std::size_t(nodes_per_dim), 0.0), wts(std::size_t(nodes_per_dim), 0.0);
    for (int i = 0; i < nodes_per_dim; ++i) {
        double z = -1.0 + (2.0 * i + 1.0) / nodes_per_dim;  // midpoint rule
        pts[std::size_t(i)] = z;
        wts[std::size_t(i)] = std::abs(z) < 1.0 ? std::exp(-1.0 / (1.0 - z * z)) : 0.0;
    }
    std::vector<int> idx(std::size_t(nd), 0);
    double total = 0.0;
    while (true) {
        std::vector<double> off(std::size_t(nd), 0.0);
        double w = 1.0;
        for (int k = 0; k < nd; ++k) {
            off[std::size_t(k)] = pts[std::size_t(idx[std::size_t(k)])];
            w *= wts[std::size_t(idx[std::size_t(k)])];
        }
        if (w > 0.0) {
            quad->offsets.push_back(off);
            quad->weights.push_back(w);
            total += w;
        }
        int k = 0;
        while (k < nd && ++idx[std::size_t(k)] == nodes_per_dim) idx[std::size_t(k++)] = 0;
        if (k == nd) break;
    }
    for (auto& w : quad->weights) w /= total;

    HDescriptor h = base;  // copy to capture by value
    double scale = 1.0 / double(n);
    double cutoff = 2.0 * double(n);
    return HDescriptor::table([h, quad, scale, cutoff, n](double t, double x, double v,
                                                          const double* Q, int d_) {
        double chi_x = detail::lp_chi(0.5 * std::abs(x) / double(n));  // 1 for |x|<=n, 0 beyond 2n
        if (chi_x == 0.0) return 0.0;
        double out = 0.0;
        std::vector<double> q(std::size_t(d_), 0.0);
        for (std::size_t m = 0; m < quad->offsets.size(); ++m) {
            const auto& off = quad->offsets[m];
            double vv = v + scale * off[0];
            double r2 = vv * vv;
            for (int i = 0; i < d_; ++i) {
                q[std::size_t(i)] = Q[i] + scale * off[std::size_t(i + 1)];
                r2 += q[std::size_t(i)] * q[std::size_t(i)];
            }
            double chi_vq = detail::lp_chi(0.5 * std::sqrt(r2) / cutoff);
            out += quad->weights[m] * chi_vq * h.eval(t, x, vv, q.data(), d_);
        }
        return chi_x * out;
    });
}

// ---------------------------------------------------------------------------
// Problem container

struct EllipticityReport {
    double c0_lower = 0.0;  // measured min of xi^T a xi / |xi|^2
    double c0_upper = 0.0;  // measured max
};

struct HJBProblem {
    // a components: d=1 {a11}; d=2 {a11, a12, a22}
    std::vector<SpaceTimeField> a;
    std::vector<SpaceTimeField> B;
    HDescriptor H;
    Field v0;
    double delta = 1.0, delta1 = 1.0, eta = 2.0;

    int dim() const { return v0.grid.dim; }
    const Grid& grid() const { return v0.grid; }
    const std::vector<double>& times() const { return a.at(0).times; }

    static HJBProblem identity_heat(const Grid& g, const std::vector<double>& times,
                                    const Field& v0) {
        HJBProblem p;
        p.v0 = v0;
        Field one(g, 1.0);
        p.a.push_back(SpaceTimeField::constant_in_time(one, times));
        if (g.dim == 2) {
            p.a.push_back(SpaceTimeField::constant_in_time(Field(g), times));
            p.a.push_back(SpaceTimeField::constant_in_time(one, times));
        }
        for (int i = 0; i < g.dim; ++i)
            p.B.push_back(SpaceTimeField::constant_in_time(Field(g), times));
        return p;
    }

    EllipticityReport check_ellipticity(int n_angles = 8) const {
        EllipticityReport rep;
        rep.c0_lower = kInf;
        rep.c0_upper = 0.0;
        const int M = a[0].num_slices();
        for (int m = 0; m < M; ++m) {
            for (std::size_t i = 0; i < grid().size(); ++i) {
                if (dim() == 1) {
                    double v = a[0][m].values[i];
                    rep.c0_lower = std::min(rep.c0_lower, v);
                    rep.c0_upper = std::max(rep.c0_upper, v);
                } else {
                    double a11 = a[0][m].values[i], a12 = a[1][m].values[i], a22 = a[2][m].values[i];
                    for (int ang = 0; ang < n_angles; ++ang) {
                        double th = kPi * ang / n_angles;
                        double cx = std::cos(th), cy = std::sin(th);
                        double q = a11 * cx * cx + 2.0 * a12 * cx * cy + a22 * cy * cy;
                        rep.c0_lower = std::min(rep.c0_lower, q);
                        rep.c0_upper = std::max(rep.c0_upper, q);
                    }
                }
            }
        }
        return rep;
    }

    // measured sup |a(x) - a(y)| / |x-y|^alpha1 over near-neighbor pairs
    double holder_modulus(double alpha1, int mmax = 8) const {
        const Grid& g = grid();
        double c = 0.0;
        for (const auto& comp : a)
            for (int m = 0; m < comp.num_slices(); m += std::max(1, comp.num_slices() / 8))
                for (int step = 1; step <= mmax; ++step) {
                    double denom = std::pow(step * g.h(), alpha1);
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        std::size_t ip = g.dim == 1
                                             ? std::size_t((int(i) + step) % g.N)
                                             : (std::size_t(((int(i) / g.N + step) % g.N)) * g.N +
                                                std::size_t(int(i) % g.N));
                        c = std::max(c, std::abs(comp[m].values[ip] - comp[m].values[i]) / denom);
                    }
                }
        return c;
    }
};

class BlowUpError : public std::runtime_error {
  public:
    BlowUpError(const std::string& what, double t) : std::runtime_error(what), time(t) {}
    double time;
};

struct HJBSolveConfig {
    double cap = 1e8;          // blow-up guard on sup |v|
    bool enforce_cfl = true;
    int monitor_p = 6;         // p for the derivative-Lp energy monitor
};

struct HJBRunDiagnostics {
    std::vector<double> sup_norm;        // per slice
    std::vector<double> energy_monitor;  // (1/p) d/dt int |w rho_eta|^p + c0/4 A^w_p per step
    double cfl_bound = 0.0;
};

namespace detail {

inline Field tr_a_hess(const HJBProblem& prob, const Field& v, int m, bool subtract_identity) {
    const Grid& g = v.grid;
    if (g.dim == 1) {
        Field vxx = derivative(derivative(v, 0), 0);
        Field coeff = prob.a[0][m];
        if (subtract_identity)
            for (auto& c : coeff.values) c -= 1.0;
        return multiply(coeff, vxx);
    }
    Field vx = derivative(v, 0), vy = derivative(v, 1);
    Field vxx = derivative(vx, 0), vxy = derivative(vx, 1), vyy = derivative(vy, 1);
    Field a11 = prob.a[0][m], a12 = prob.a[1][m], a22 = prob.a[2][m];
    if (subtract_identity) {
        for (auto& c : a11.values) c -= 1.0;
        for (auto& c : a22.values) c -= 1.0;
    }
    Field out = multiply(a11, vxx);
    out += 2.0 * multiply(a12, vxy);
    out += multiply(a22, vyy);
    return out;
}

inline Field eval_H_slice(const HDescriptor& H, double t, const Field& v,
                          const std::vector<Field>& grad) {
    const Grid& g = v.grid;
    Field out(g);
    if (H.kind == HDescriptor::Kind::none) return out;
    double Q[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (int c = 0; c < g.dim; ++c) Q[c] = grad[std::size_t(c)].values[i];
        double x = g.dim == 1 ? g.x(int(i)) : g.x(int(i) / g.N);
        out.values[i] = H.eval(t, x, v.values[i], Q, g.dim);
    }
    return out;
}

}  // namespace detail

// Semi-implicit stepping: the identity Laplacian is propagated exactly in
// Fourier space, tr((a-I) grad^2 v) + B.grad v + H(v, grad v) is explicit
// with dealiased products. CFL-type guard dt <= h^2 / (4 max|a-I|).
inline SpaceTimeField solve_hjb_classical(const HJBProblem& prob, const HJBSolveConfig& cfg = {},
                                          HJBRunDiagnostics* diag = nullptr) {
    const Grid& g = prob.grid();
    const std::vector<double>& times = prob.times();
    if (times.size() < 2) throw std::invalid_argument("solve_hjb_classical: empty time grid");
    const double dt = times[1] - times[0];

    double max_dev = 0.0;
    for (std::size_t c = 0; c < prob.a.size(); ++c) {
        bool diagonal = g.dim == 1 || c == 0 || c == 2;
        for (const auto& s : prob.a[c].slices)
            for (double v : s.values) max_dev = std::max(max_dev, std::abs(v - (diagonal ? 1.0 : 0.0)));
    }
    if (cfg.enforce_cfl && max_dev > 0.0) {
        double bound = g.h() * g.h() / (4.0 * max_dev);
        if (diag) diag->cfl_bound = bound;
        if (dt > bound)
            throw std::invalid_argument("solve_hjb_classical: dt violates the explicit-part CFL bound");
    }

    DuhamelStepper stepper(g, 0.0, dt);
    SpaceTimeField v;
    v.times = times;
    v.slices.assign(times.size(), Field(g));
    v[0] = prob.v0;
    SpectralField state = prob.v0.to_spectral();

    Weight w_eta(g, prob.eta);
    const int p = cfg.monitor_p;
    double prev_energy = 0.0;
    EllipticityReport ell;
    if (diag) {
        ell = prob.check_ellipticity();
        diag->sup_norm.push_back(prob.v0.max_abs());
    }

    for (std::size_t m = 0; m + 1 < times.size(); ++m) {
        const Field& vm = v[int(m)];
        std::vector<Field> grad;
        for (int c = 0; c < g.dim; ++c) grad.push_back(derivative(vm, c));
        Field rhs = detail::tr_a_hess(prob, vm, int(m), true);
        for (int c = 0; c < g.dim; ++c) rhs += multiply(prob.B[std::size_t(c)][int(m)], grad[std::size_t(c)]);
        rhs += detail::eval_H_slice(prob.H, times[m], vm, grad);
        SpectralField gm = rhs.to_spectral();
        stepper.step(state, gm);
        v[int(m) + 1] = state.to_field();
        double sup = v[int(m) + 1].max_abs();
        if (!std::isfinite(sup) || sup > cfg.cap)
            throw BlowUpError("solve_hjb_classical: blow-up", times[m + 1]);
        if (diag) {
            diag->sup_norm.push_back(sup);
            // DQ11 monitor (d=1): (1/p) d/dt int |w rho_eta|^p + (c0/4) A^w_p
            if (g.dim == 1) {
                auto energy = [&](const Field& vv) {
                    Field w = derivative(vv, 0);
                    double e = 0.0;
                    for (std::size_t i = 0; i < g.size(); ++i)
                        e += std::pow(std::abs(w.values[i] * w_eta.values.values[i]), p);
                    return e * g.cell_volume();
                };
                Field w = derivative(vm, 0);
                Field wx = derivative(w, 0);
                double disspat = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i)
                    disspat += wx.values[i] * wx.values[i] *
                               std::pow(std::abs(w.values[i]), p - 2) *
                               std::pow(w_eta.values.values[i], double(p));
                disspat *= g.cell_volume();
                double cur = energy(v[int(m) + 1]);
                if (m == 0) prev_energy = energy(vm);
                double monitor = (cur - prev_energy) / (p * dt) + 0.25 * ell.c0_lower * disspat;
                diag->energy_monitor.push_back(monitor);
                prev_energy = cur;
            }
        }
    }
    return v;
}

// ---------------------------------------------------------------------------
// Interpolation-inequality verifiers (weighted Lp scales)

struct WeightedInterpReport {
    double lhs = 0.0, rhs = 0.0, ratio = 0.0;
};

// || grad v rho_delta ||_p <= C ( ||grad^2 v rho_{delta1}||_q^{1/2}
//   ||v rho_{delta2}||_r^{1/2} + ||v rho_{delta+1}||_p ),
// with 2/p = 1/r + 1/q and delta1 + delta2 = 2 delta.
inline WeightedInterpReport es10_check(const Field& v, double p, double q, double r, double delta,
                                       double delta1, double delta2) {
    const Grid& g = v.grid;
    if (std::abs(delta1 + delta2 - 2.0 * delta) > 1e-10)
        throw std::invalid_argument("es10_check: delta1 + delta2 must be 2 delta");
    auto inv = [](double e) { return e == kInf ? 0.0 : 1.0 / e; };
    if (std::abs(2.0 * inv(p) - inv(r) - inv(q)) > 1e-10)
        throw std::invalid_argument("es10_check: 2/p = 1/r + 1/q violated");
    WeightedInterpReport rep;
    Field gv = derivative(v, 0);
    Field ggv = derivative(gv, 0);
    rep.lhs = lp_weighted(gv, Weight(g, delta), p);
    double t1 = std::sqrt(lp_weighted(ggv, Weight(g, delta1), q) * lp_weighted(v, Weight(g, delta2), r));
    double t2 = lp_weighted(v, Weight(g, delta + 1.0), p);
    rep.rhs = t1 + t2;
    rep.ratio = rep.rhs > 0 ? rep.lhs / rep.rhs : 0.0;
    return rep;
}

// || grad v rho_delta ||_p <= C ( (int |grad^2 v|^2 |grad v|^{q-2} rho_{delta1}^q)^{1/(q+2)}
//   ||v rho_{delta2}||_r^{2/(q+2)} + ||v rho_{delta+1}||_p ),
// with (q+2)/p = 1 + 2/r and delta = q delta1/(q+2) + 2 delta2/(q+2).
inline WeightedInterpReport kj3_check(const Field& v, double p, double q, double r, double delta,
                                      double delta1, double delta2) {
    const Grid& g = v.grid;
    auto inv = [](double e) { return e == kInf ? 0.0 : 1.0 / e; };
    if (std::abs((q + 2.0) * inv(p) - 1.0 - 2.0 * inv(r)) > 1e-10)
        throw std::invalid_argument("kj3_check: (q+2)/p = 1 + 2/r violated");
    if (std::abs(delta - q * delta1 / (q + 2.0) - 2.0 * delta2 / (q + 2.0)) > 1e-10)
        throw std::invalid_argument("kj3_check: weight relation violated");
    WeightedInterpReport rep;
    Field gv = derivative(v, 0);
    Field ggv = derivative(gv, 0);
    rep.lhs = lp_weighted(gv, Weight(g, delta), p);
    Weight w1(g, delta1);
    double mix = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        mix += ggv.values[i] * ggv.values[i] * std::pow(std::abs(gv.values[i]), q - 2.0) *
               std::pow(w1.values.values[i], q);
    mix *= g.cell_volume();
    double t1 = std::pow(mix, 1.0 / (q + 2.0)) *
                std::pow(lp_weighted(v, Weight(g, delta2), r), 2.0 / (q + 2.0));
    double t2 = lp_weighted(v, Weight(g, delta + 1.0), p);
    rep.rhs = t1 + t2;
    rep.ratio = rep.rhs > 0 ? rep.lhs / rep.rhs : 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Zvonkin transform

// Field-level localization split for initial data: spatial shells only.
inline std::pair<Field, Field> localize_field(const Field& f, double L_threshold, double a = 1.0) {
    std::vector<double> times{0.0, 1.0};
    SpaceTimeField wrap;
    wrap.times = times;
    wrap.slices.assign(2, f);
    LocalizationPlan plan = make_localization_plan(f.grid, times, L_threshold, a, 0.0);
    LocalizedParts parts = localize(wrap, plan);
    return {parts.rough[0], parts.smooth[0]};
}

struct ZvonkinMap {
    std::vector<SpaceTimeField> u_vec;  // components of the corrector
    double lambda = 0.0;
    double grad_sup = 0.0;
    double bilip_min = 1.0, bilip_max = 1.0;  // sampled |Phi(x)-Phi(y)|/|x-y|
    double c1_norm = 0.0;                      // sup |u| + sup |grad u|
    // stored pieces for the coefficient transform
    std::vector<SpaceTimeField> b_leq, bbar_leq;
    int iterations = 0;
};

// Solve L_lambda u = (b_> - bbar_<=) . (grad u + I) componentwise with the
// paracontrolled solver; b_> and bbar_<= come from the localization plan.
inline ZvonkinMap build_zvonkin(RenormalizedPair& pair, const LocalizationPlan& plan,
                                double lambda, const SolverConfig& scfg = {}) {
    const int d = pair.dim();
    const int M = pair.f.num_slices();
    const Grid& g = pair.grid();
    ZvonkinMap map;
    map.lambda = lambda;

    std::vector<SpaceTimeField> b_gt{std::size_t(d)}, b_le{std::size_t(d)};
    for (int j = 0; j < d; ++j) {
        LocalizedParts parts = localize(pair.b[std::size_t(j)], plan);
        b_gt[std::size_t(j)] = std::move(parts.rough);
        b_le[std::size_t(j)] = std::move(parts.smooth);
    }

    // bbar_j = sum_i (b_>)_i o d_i I_lambda (b_>)_j, then localize it
    DuhamelConfig dc;
    dc.lambda = lambda;
    std::vector<SpaceTimeField> bbar{std::size_t(d)};
    for (int j = 0; j < d; ++j) {
        SpaceTimeField Ib = duhamel(b_gt[std::size_t(j)], dc);
        bbar[std::size_t(j)].times = pair.f.times;
        bbar[std::size_t(j)].slices.assign(std::size_t(M), Field(g));
        for (int i = 0; i < d; ++i) {
            SpaceTimeField dIb = derivative(Ib, i);
            for (int m = 0; m < M; ++m)
                bbar[std::size_t(j)][m] += parapde::resonant(b_gt[std::size_t(i)][m], dIb[m]);
        }
    }
    std::vector<SpaceTimeField> bbar_le{std::size_t(d)};
    for (int j = 0; j < d; ++j) {
        LocalizedParts parts = localize(bbar[std::size_t(j)], plan);
        bbar_le[std::size_t(j)] = std::move(parts.smooth);
    }

    std::vector<SpaceTimeField> beff{std::size_t(d)};
    for (int j = 0; j < d; ++j) beff[std::size_t(j)] = b_gt[std::size_t(j)] - bbar_le[std::size_t(j)];

    map.u_vec.resize(std::size_t(d));
    Field zero0(g);
    for (int comp = 0; comp < d; ++comp) {
        RenormalizedPair peff;
        peff.alpha = pair.alpha;
        peff.weight = Weight(g, 0.0);
        peff.weight_sq = Weight(g, 0.0);
        peff.b = beff;
        peff.f = beff[std::size_t(comp)];
        ParacontrolledSolution sol = solve_linear(peff, zero0, lambda, scfg);
        map.u_vec[std::size_t(comp)] = std::move(sol.u);
        map.iterations = std::max(map.iterations, sol.iterations);
    }

    // diagnostics
    double gsup = 0.0, usup = 0.0;
    for (int comp = 0; comp < d; ++comp) {
        usup = std::max(usup, map.u_vec[std::size_t(comp)].max_abs());
        for (int i = 0; i < d; ++i)
            gsup = std::max(gsup, derivative(map.u_vec[std::size_t(comp)], i).max_abs());
    }
    map.grad_sup = gsup;
    map.c1_norm = usup + gsup;

    map.bilip_min = kInf;
    map.bilip_max = 0.0;
    auto idx = strided_indices(M, 8);
    for (int m : idx) {
        for (int comp = 0; comp < d; ++comp) {
            const Field& u = map.u_vec[std::size_t(comp)][m];
            for (int step = 1; step <= 16; ++step) {
                if (g.dim == 1) {
                    for (int i = 0; i < g.N; ++i) {
                        double dx = step * g.h();
                        double du = u.values[std::size_t((i + step) % g.N)] - u.values[std::size_t(i)];
                        double q = std::abs(dx + du) / dx;  // Phi difference along the axis
                        map.bilip_min = std::min(map.bilip_min, q);
                        map.bilip_max = std::max(map.bilip_max, q);
                    }
                }
            }
        }
    }
    if (g.dim != 1) {  // sampled quotient along each axis using the matching component
        map.bilip_min = std::min(map.bilip_min, 1.0 - map.grad_sup);
        map.bilip_max = std::max(map.bilip_max, 1.0 + map.grad_sup);
    }

    map.b_leq = std::move(b_le);
    map.bbar_leq = std::move(bbar_le);
    return map;
}

namespace detail {

// periodic local cubic interpolation on a uniform 1d grid
inline double interp_periodic(const Field& f, double x) {
    const Grid& g = f.grid;
    double s = (x + g.L) / g.h();
    double fl = std::floor(s);
    int i = int(fl);
    double t = s - fl;
    auto at = [&](int k) { return f.values[std::size_t(((k % g.N) + g.N) % g.N)]; };
    double fm1 = at(i - 1), f0 = at(i), f1 = at(i + 1), f2 = at(i + 2);
    // 4-point Lagrange
    double a = -t * (t - 1.0) * (t - 2.0) / 6.0;
    double b = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    double c = -(t + 1.0) * t * (t - 2.0) / 2.0;
    double dd = (t + 1.0) * t * (t - 1.0) / 6.0;
    return a * fm1 + b * f0 + c * f1 + dd * f2;
}

}  // namespace detail

class MapDegenerateError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Inverse of Phi(x) = x + u(x) per slice (d = 1): monotone circle map of
// degree one, inverted by sorted linear interpolation.
inline Field invert_map_1d(const Field& u_slice) {
    const Grid& g = u_slice.grid;
    std::vector<double> phi(g.size());
    for (int i = 0; i < g.N; ++i) phi[std::size_t(i)] = g.x(i) + u_slice.values[std::size_t(i)];
    for (int i = 0; i + 1 < g.N; ++i)
        if (phi[std::size_t(i + 1)] <= phi[std::size_t(i)])
            throw MapDegenerateError("invert_map_1d: map is not monotone");
    Field inv(g);
    for (int iy = 0; iy < g.N; ++iy) {
        double y = g.x(iy);
        // shift y into [phi[0], phi[0] + 2L)
        double yshift = y;
        double period = 2.0 * g.L;
        while (yshift < phi[0]) yshift += period;
        while (yshift >= phi[0] + period) yshift -= period;
        // find the bracketing cell
        int lo = 0, hi = g.N;  // phi[N] = phi[0] + 2L conceptually
        while (hi - lo > 1) {
            int mid = (lo + hi) / 2;
            double pm = mid < g.N ? phi[std::size_t(mid)] : phi[0] + period;
            if (pm <= yshift)
                lo = mid;
            else
                hi = mid;
        }
        double p0 = phi[std::size_t(lo)];
        double p1 = lo + 1 < g.N ? phi[std::size_t(lo + 1)] : phi[0] + period;
        double t = (yshift - p0) / (p1 - p0);
        double x = g.x(lo) + t * g.h();
        inv.values[std::size_t(iy)] = x;  // may exceed [-L, L) by < h; callers wrap
    }
    return inv;
}

// Transformed problem per Lemma "Zvon": a = (dPhi)^2 o Phi^{-1} (d = 1),
// B = ((b_<= + bbar_<=) dPhi + lambda u) o Phi^{-1},
// H~(t,x,v,Q) = H(t, ., u1 + v, grad u1 + dPhi . Q) o Phi^{-1}.
struct TransformedProblem {
    HJBProblem problem;
    double roundtrip_error = 0.0;  // sup |Phi^{-1}(Phi(x)) - x|
};

inline TransformedProblem transform_coefficients(const ZvonkinMap& map, RenormalizedPair& pair,
                                                 const SpaceTimeField& u1, const HDescriptor& H) {
    const Grid& g = pair.grid();
    if (g.dim != 1)
        throw std::invalid_argument("transform_coefficients: d = 1 path only");
    const int M = pair.f.num_slices();
    TransformedProblem out;
    HJBProblem& prob = out.problem;
    prob.v0 = Field(g);

    SpaceTimeField a11, Bf;
    a11.times = pair.f.times;
    Bf.times = pair.f.times;
    a11.slices.assign(std::size_t(M), Field(g));
    Bf.slices.assign(std::size_t(M), Field(g));

    auto inv_slices = std::make_shared<std::vector<Field>>();
    auto dphi_slices = std::make_shared<std::vector<Field>>();
    inv_slices->reserve(std::size_t(M));
    dphi_slices->reserve(std::size_t(M));

    for (int m = 0; m < M; ++m) {
        const Field& u = map.u_vec[0][m];
        Field du = derivative(u, 0);
        Field dphi = du;
        for (auto& v : dphi.values) v += 1.0;
        Field inv = invert_map_1d(u);
        // round-trip check
        for (int i = 0; i < g.N; ++i) {
            double x = g.x(i);
            double y = x + u.values[std::size_t(i)];
            double back = detail::interp_periodic(inv, detail::wrap(y, g.L));
            // interp of the inverse is stored unwrapped near the cell; wrap difference
            double d = detail::wrap(back - x, g.L);
            out.roundtrip_error = std::max(out.roundtrip_error, std::abs(d));
        }
        Field a_m(g), B_m(g);
        for (int iy = 0; iy < g.N; ++iy) {
            double x = inv.values[std::size_t(iy)];
            double xw = detail::wrap(x, g.L);
            double dphix = detail::interp_periodic(dphi, xw);
            a_m.values[std::size_t(iy)] = dphix * dphix;
            double ble = detail::interp_periodic(map.b_leq[0][m], xw) +
                         detail::interp_periodic(map.bbar_leq[0][m], xw);
            double uu = detail::interp_periodic(u, xw);
            B_m.values[std::size_t(iy)] = ble * dphix + map.lambda * uu;
        }
        a11[m] = a_m;
        Bf[m] = B_m;
        inv_slices->push_back(inv);
        dphi_slices->push_back(dphi);
    }
    prob.a.push_back(std::move(a11));
    prob.B.push_back(std::move(Bf));

    // H~ wraps the original H through the map and the u1 background
    auto u1_copy = std::make_shared<SpaceTimeField>(u1);
    auto du1 = std::make_shared<SpaceTimeField>(derivative(u1, 0));
    HDescriptor base = H;
    double dt = pair.f.dt();
    double Lh = g.L;
    prob.H = HDescriptor::table([base, inv_slices, dphi_slices, u1_copy, du1, dt,
                                 Lh](double t, double x, double v, const double* Q, int d_) {
        int m = std::min(int(std::lround(t / dt)), int(inv_slices->size()) - 1);
        const Field& inv = (*inv_slices)[std::size_t(m)];
        const Grid& gg = inv.grid;
        double s = (x + Lh) / gg.h();
        int i = int(std::floor(s));
        double frac = s - std::floor(s);
        auto at = [&](int k) { return inv.values[std::size_t(((k % gg.N) + gg.N) % gg.N)]; };
        double z = (1.0 - frac) * at(i) + frac * at(i + 1);
        double zw = detail::wrap(z, Lh);
        double u1v = detail::interp_periodic((*u1_copy)[m], zw);
        double du1v = detail::interp_periodic((*du1)[m], zw);
        double dphiv = detail::interp_periodic((*dphi_slices)[std::size_t(m)], zw);
        double Qt = du1v + dphiv * Q[0];
        return base.eval(t, zw, u1v + v, &Qt, d_);
    });
    return out;
}

// ---------------------------------------------------------------------------
// Singular HJB: L u = b . grad u + H(u, grad u) + f, u(0) = phi.

struct SingularHJBConfig {
    SolverConfig linear;       // used for the u1 solve and the Zvonkin audit
    double tol = 1e-8;
    int max_iter = 60;
    double phi_split_L = 2.0;  // threshold for the initial-value localization
    double cap = 1e8;
    bool run_zvonkin_audit = false;
    double audit_lambda = 64.0;
    double audit_threshold = 2.0;
};

struct SingularHJBResult {
    SpaceTimeField u, u_sharp;
    SpaceTimeField u1, u2;
    int iterations = 0;
    std::vector<double> residuals;
    // audit-mode diagnostics (present when run_zvonkin_audit)
    bool audit_ran = false;
    double audit_grad_sup = 0.0;
    double audit_bilip_min = 0.0, audit_bilip_max = 0.0;
    double audit_ellipticity_min = 0.0, audit_ellipticity_max = 0.0;
    double audit_roundtrip = 0.0;
    double audit_B_sup_weighted = 0.0;
};

// Steps L_0 v = forcing with v(0) = init on the forcing's time grid.
inline SpaceTimeField stepped_solve(const Field& init, const SpaceTimeField& forcing) {
    DuhamelStepper st(init.grid, 0.0, forcing.dt());
    SpaceTimeField v;
    v.times = forcing.times;
    v.slices.assign(std::size_t(forcing.num_slices()), Field(init.grid));
    v[0] = init;
    SpectralField state = init.to_spectral();
    for (int m = 0; m + 1 < forcing.num_slices(); ++m) {
        SpectralField gm = forcing[m].to_spectral();
        st.step(state, gm);
        v[m + 1] = state.to_field();
    }
    return v;
}

inline SingularHJBResult solve_singular_hjb(RenormalizedPair& pair, const HDescriptor& H,
                                            const Field& phi, const SingularHJBConfig& cfg = {}) {
    const Grid& g = pair.grid();
    const int d = pair.dim();
    const int M = pair.f.num_slices();
    SingularHJBResult res;

    // initial-value split: phi_1 rough but unweighted, phi_2 smooth weighted
    auto [phi1, phi2] = localize_field(phi, cfg.phi_split_L);

    // u1: linear part carrying f, via the weighted Schauder route
    res.u1 = solve_weighted(pair, phi1, cfg.linear).u;
    std::vector<SpaceTimeField> du1{std::size_t(d)};
    for (int j = 0; j < d; ++j) du1[std::size_t(j)] = derivative(res.u1, j);

    // u2: HJB part with paracontrolled transport, full-interval fixed point
    SpaceTimeField zero_f;
    zero_f.times = pair.f.times;
    zero_f.slices.assign(std::size_t(M), Field(g));
    detail::SolverWorkspace ws(pair, zero_f, 0.0);

    SpaceTimeField heat_phi2 = stepped_solve(phi2, zero_f);
    SpaceTimeField u2 = heat_phi2;

    auto eval_H_all = [&](const SpaceTimeField& uu2) {
        SpaceTimeField out;
        out.times = pair.f.times;
        out.slices.assign(std::size_t(M), Field(g));
        for (int m = 0; m < M; ++m) {
            Field vtot = res.u1[m] + uu2[m];
            std::vector<Field> grad;
            for (int j = 0; j < d; ++j) grad.push_back(du1[std::size_t(j)][m] + derivative(uu2[m], j));
            out[m] = detail::eval_H_slice(H, pair.f.times[std::size_t(m)], vtot, grad);
        }
        return out;
    };

    SpaceTimeField Hslices = eval_H_all(u2);
    std::vector<SpaceTimeField> du2{std::size_t(d)};
    auto refresh_grad = [&](const SpaceTimeField& uu) {
        for (int j = 0; j < d; ++j) du2[std::size_t(j)] = derivative(uu, j);
    };
    refresh_grad(u2);
    SpaceTimeField mp = ws.mod_para(du2);
    DuhamelConfig dc0;

    SpaceTimeField IH = duhamel(Hslices, dc0);
    SpaceTimeField u2_sharp = u2 - mp - IH;

    for (int it = 1; it <= cfg.max_iter; ++it) {
        // resonant b o grad I_0 (H-term): direct route, recomputed per sweep
        SpaceTimeField bfH;
        bfH.times = pair.f.times;
        bfH.slices.assign(std::size_t(M), Field(g));
        for (int m = 0; m < M; ++m)
            for (int i = 0; i < d; ++i)
                bfH[m] += parapde::resonant(pair.b[std::size_t(i)][m], derivative(IH[m], i));

        detail::SolverWorkspace* wsp = &ws;
        SpaceTimeField r = reconstruct_resonant_raw(pair, u2, u2_sharp, *wsp, &mp);
        r += bfH;  // ws.bf is zero (f-slot held by the H term)

        SpaceTimeField rhs = Hslices;
        for (int m = 0; m < M; ++m) {
            for (int j = 0; j < d; ++j) {
                rhs[m] += multiply(pair.b[std::size_t(j)][m], du2[std::size_t(j)][m]);
                rhs[m] -= parapde::resonant(pair.b[std::size_t(j)][m], du2[std::size_t(j)][m]);
            }
            rhs[m] += r[m];
        }
        SpaceTimeField u2_new = stepped_solve(phi2, rhs);
        double delta = (u2_new - u2).max_abs();
        res.residuals.push_back(delta);
        res.iterations = it;
        u2 = std::move(u2_new);
        if (!u2.finite() || u2.max_abs() > cfg.cap)
            throw BlowUpError("solve_singular_hjb: u2 iterate blew up", pair.f.times.back());
        refresh_grad(u2);
        mp = ws.mod_para(du2);
        Hslices = eval_H_all(u2);
        IH = duhamel(Hslices, dc0);
        u2_sharp = u2 - mp - IH;
        if (delta < cfg.tol) break;
    }
    if (res.residuals.empty() || res.residuals.back() >= cfg.tol)
        throw IterationFailure("solve_singular_hjb: u2 iteration failed to converge", res.residuals);

    res.u2 = std::move(u2);
    res.u = res.u1 + res.u2;

    // assemble u_sharp for the full solution per the ansatz with the pair's f
    std::vector<SpaceTimeField> du{std::size_t(d)};
    for (int j = 0; j < d; ++j) du[std::size_t(j)] = derivative(res.u, j);
    SpaceTimeField mp_full = ws.mod_para(du);
    DuhamelConfig dcf;
    SpaceTimeField If = duhamel(pair.f, dcf);
    res.u_sharp = res.u - mp_full - If;

    if (cfg.run_zvonkin_audit && d == 1) {
        LocalizationPlan plan = make_localization_plan(g, pair.f.times, cfg.audit_threshold);
        ZvonkinMap map = build_zvonkin(pair, plan, cfg.audit_lambda, cfg.linear);
        res.audit_ran = true;
        res.audit_grad_sup = map.grad_sup;
        res.audit_bilip_min = map.bilip_min;
        res.audit_bilip_max = map.bilip_max;
        TransformedProblem tp = transform_coefficients(map, pair, res.u1, H);
        EllipticityReport ell = tp.problem.check_ellipticity();
        res.audit_ellipticity_min = ell.c0_lower;
        res.audit_ellipticity_max = ell.c0_upper;
        res.audit_roundtrip = tp.roundtrip_error;
        Weight wk(g, 0.25);  // kappa-tilde style diagnostic weight
        res.audit_B_sup_weighted = sup_linf(tp.problem.B[0], wk);
    }
    return res;
}

}  // namespace parapde
