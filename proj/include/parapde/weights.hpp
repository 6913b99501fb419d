#pragma once

// Polynomial weights rho_delta(x) = <x>^{-delta} and the weighted Besov /
// Hoelder norm machinery, with the cutoff characterization of weighted
// Hoelder norms (sup over centers z of rho(z) * local norm).

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "parapde/dyadic.hpp"
#include "parapde/grid.hpp"

namespace parapde {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Weight {
    double delta = 0.0;
    Field values;

    Weight() = default;
    Weight(const Grid& g, double delta_) : delta(delta_), values(g) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            double x2;
            if (g.dim == 1) {
                double x = g.x(int(i));
                x2 = x * x;
            } else {
                double x = g.x(int(i) / g.N), y = g.x(int(i) % g.N);
                x2 = x * x + y * y;
            }
            values.values[i] = std::pow(1.0 + x2, -delta_ / 2.0);
        }
    }

    const Grid& grid() const { return values.grid; }

    double at_point(double x) const { return std::pow(1.0 + x * x, -delta / 2.0); }

    // Admissibility diagnostic: measured sup |grad rho| / rho via centered
    // finite differences.
    double admissibility_constant() const {
        const Grid& g = grid();
        double c = 0.0;
        double inv2h = 1.0 / (2.0 * g.h());
        if (g.dim == 1) {
            for (int i = 0; i < g.N; ++i) {
                double dp = values.values[(i + 1) % g.N], dm = values.values[(i - 1 + g.N) % g.N];
                c = std::max(c, std::abs(dp - dm) * inv2h / values.values[i]);
            }
        } else {
            for (int a = 0; a < g.N; ++a)
                for (int b = 0; b < g.N; ++b) {
                    auto at = [&](int i, int j) {
                        return values.values[std::size_t((i + g.N) % g.N) * g.N + (j + g.N) % g.N];
                    };
                    double gx = (at(a + 1, b) - at(a - 1, b)) * inv2h;
                    double gy = (at(a, b + 1) - at(a, b - 1)) * inv2h;
                    c = std::max(c, std::hypot(gx, gy) / at(a, b));
                }
        }
        return c;
    }
};

enum class NormFlavor { besov, holder_zygmund, classical_holder, sobolev_hkp, sup_time };

struct NormSpec {
    double alpha = 0.0;
    double p = kInf;
    double q = kInf;
    Weight weight;
    NormFlavor flavor = NormFlavor::besov;

    void validate() const {
        if (!(p >= 1.0) || !(q >= 1.0)) throw std::invalid_argument("NormSpec: p, q must be in [1, inf]");
        if (flavor == NormFlavor::holder_zygmund && (p != kInf || q != kInf))
            throw std::invalid_argument("NormSpec: holder_zygmund requires p = q = inf");
    }
};

// L^p(rho) lattice norm, trapezoidal quadrature.
inline double lp_weighted(const Field& f, const Weight& w, double p) {
    if (f.grid != w.grid()) throw std::invalid_argument("lp_weighted: grid mismatch");
    if (p == kInf) {
        double m = 0.0;
        for (std::size_t i = 0; i < f.values.size(); ++i)
            m = std::max(m, std::abs(f.values[i] * w.values.values[i]));
        return m;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i)
        s += std::pow(std::abs(f.values[i] * w.values.values[i]), p);
    return std::pow(s * f.grid.cell_volume(), 1.0 / p);
}

inline double besov_norm(const Field& f, const NormSpec& spec) {
    spec.validate();
    if (f.grid != spec.weight.grid()) throw std::invalid_argument("besov_norm: grid mismatch");
    const DyadicPartition& part = partition_for(f.grid);
    SpectralField s = f.to_spectral();
    double acc = 0.0, sup = 0.0;
    for (int j = -1; j <= part.j_max; ++j) {
        Field bj = part.block_spectral(s, j).to_field();
        double nj = lp_weighted(bj, spec.weight, spec.p);
        double scaled = std::pow(2.0, spec.alpha * j) * nj;
        if (spec.q == kInf)
            sup = std::max(sup, scaled);
        else
            acc += std::pow(scaled, spec.q);
    }
    return spec.q == kInf ? sup : std::pow(acc, 1.0 / spec.q);
}

inline double besov_norm(const Field& f, double alpha, const Weight& w, double p = kInf,
                         double q = kInf) {
    NormSpec spec;
    spec.alpha = alpha;
    spec.p = p;
    spec.q = q;
    spec.weight = w;
    return besov_norm(f, spec);
}

namespace detail {

// max over components of the order-k spectral derivative tensor
inline std::vector<Field> grad_components(const Field& f) {
    std::vector<Field> out;
    out.push_back(derivative(f, 0));
    if (f.grid.dim == 2) out.push_back(derivative(f, 1));
    return out;
}

inline std::vector<Field> nth_gradient(const Field& f, int k) {
    std::vector<Field> cur{f};
    for (int step = 0; step < k; ++step) {
        std::vector<Field> next;
        for (const auto& g : cur)
            for (auto& d : grad_components(g)) next.push_back(std::move(d));
        cur = std::move(next);
    }
    return cur;
}

}  // namespace detail

// Weighted classical Hoelder norm, form (eq) of the remark after the space
// definition: sum_{j<=k} ||rho grad^j f||_inf + sup over lattice pairs with
// |x-y| <= 1 of rho(x) |grad^k f(x) - grad^k f(y)| / |x-y|^alpha.
// The sup runs over pairs (x, x + m h e_axis), m = 1..ceil(1/h).
inline double holder_norm(const Field& f, int k, double alpha, const Weight& w) {
    if (!(alpha >= 0.0) || alpha >= 1.0) throw std::out_of_range("holder_norm: alpha must be in [0,1)");
    if (k < 0) throw std::out_of_range("holder_norm: k must be >= 0");
    if (f.grid != w.grid()) throw std::invalid_argument("holder_norm: grid mismatch");
    const Grid& g = f.grid;
    double total = 0.0;
    Field cur = f;
    for (int j = 0; j <= k; ++j) {
        if (j > 0) {
            auto comps = detail::nth_gradient(f, j);
            double m = 0.0;
            for (const auto& c : comps) m = std::max(m, lp_weighted(c, w, kInf));
            total += m;
        } else {
            total += lp_weighted(cur, w, kInf);
        }
    }
    if (alpha == 0.0) return total;
    auto comps = detail::nth_gradient(f, k);
    const int mmax = std::max(1, int(std::ceil(1.0 / g.h())));
    double quot = 0.0;
    for (const auto& c : comps) {
        if (g.dim == 1) {
            for (int m = 1; m <= mmax && m * g.h() <= 1.0 + 1e-12; ++m) {
                double denom = std::pow(m * g.h(), alpha);
                for (int i = 0; i < g.N; ++i) {
                    double d = std::abs(c.values[(i + m) % g.N] - c.values[i]);
                    quot = std::max(quot, w.values.values[i] * d / denom);
                }
            }
        } else {
            for (int axis = 0; axis < 2; ++axis)
                for (int m = 1; m <= mmax && m * g.h() <= 1.0 + 1e-12; ++m) {
                    double denom = std::pow(m * g.h(), alpha);
                    for (int a = 0; a < g.N; ++a)
                        for (int b = 0; b < g.N; ++b) {
                            std::size_t i0 = std::size_t(a) * g.N + b;
                            std::size_t i1 = axis == 0 ? std::size_t((a + m) % g.N) * g.N + b
                                                       : std::size_t(a) * g.N + (b + m) % g.N;
                            double d = std::abs(c.values[i1] - c.values[i0]);
                            quot = std::max(quot, w.values.values[i0] * d / denom);
                        }
                }
        }
    }
    return total + quot;
}

namespace detail {

// chi_loc: 1 on |t| <= 1/8, 0 on |t| > 1/4
inline double chi_loc(double t) {
    double a = std::abs(t);
    if (a <= 0.125) return 1.0;
    if (a >= 0.25) return 0.0;
    return 1.0 - smooth_step((a - 0.125) / 0.125);
}

inline double wrap(double d, double L) {
    while (d >= L) d -= 2.0 * L;
    while (d < -L) d += 2.0 * L;
    return d;
}

}  // namespace detail

// Centers for the localized norm: spacing r(1+|z|)/8 matches the cutoff's
// inner plateau so every point lies in some plateau.
inline std::vector<double> localization_centers(double L, double r) {
    std::vector<double> zs;
    double z = 0.0;
    while (z < L) {
        zs.push_back(z);
        z += r * (1.0 + std::abs(z)) / 8.0;
    }
    z = 0.0;
    while (true) {
        z -= r * (1.0 + std::abs(z)) / 8.0;
        if (z < -L) break;
        zs.push_back(z);
    }
    return zs;
}

struct LocalizedNormReport {
    double value = 0.0;
    double argmax_z = 0.0;
};

inline LocalizedNormReport localized_norm_report(const Field& f, double alpha,
                                                 const Weight& weight_outer, double r) {
    if (!(r > 0.0) || r > 1.0) throw std::out_of_range("localized_norm: r must be in (0,1]");
    const Grid& g = f.grid;
    if (g != weight_outer.grid()) throw std::invalid_argument("localized_norm: grid mismatch");
    int k = int(std::floor(alpha));
    double a = alpha - k;
    Weight unit(g, 0.0);
    LocalizedNormReport rep;
    auto centers = localization_centers(g.L, r);
    for (double zx : centers) {
        std::vector<double> zys = g.dim == 2 ? centers : std::vector<double>{0.0};
        for (double zy : zys) {
            double znorm = g.dim == 1 ? std::abs(zx) : std::hypot(zx, zy);
            double scale = r * (1.0 + znorm);
            Field cut(g);
            for (std::size_t i = 0; i < g.size(); ++i) {
                double c;
                if (g.dim == 1) {
                    c = detail::chi_loc(detail::wrap(g.x(int(i)) - zx, g.L) / scale);
                } else {
                    double dx = detail::wrap(g.x(int(i) / g.N) - zx, g.L);
                    double dy = detail::wrap(g.x(int(i) % g.N) - zy, g.L);
                    c = detail::chi_loc(std::hypot(dx, dy) / scale);
                }
                cut.values[i] = c * f.values[i];
            }
            double rho_z = std::pow(1.0 + znorm * znorm, -weight_outer.delta / 2.0);
            double local = holder_norm(cut, k, a, unit);
            if (rho_z * local > rep.value) {
                rep.value = rho_z * local;
                rep.argmax_z = zx;
            }
        }
    }
    return rep;
}

inline double localized_norm(const Field& f, double alpha, const Weight& weight_outer, double r) {
    return localized_norm_report(f, alpha, weight_outer, r).value;
}

struct InterpolationReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
    bool holds = false;
};

// Interpolation inequality: ||f||_{B(alpha,p,q,delta)} <=
// ||f||^theta_{B(alpha1,p1,q1,delta1)} ||f||^{1-theta}_{B(alpha2,...)},
// exact for the discrete norms by Hoelder's inequality. specs = {target, 1, 2}.
inline InterpolationReport interpolation_check(const Field& f, double theta,
                                               const NormSpec (&specs)[3], double tol = 1e-9) {
    auto inv = [](double p) { return p == kInf ? 0.0 : 1.0 / p; };
    const NormSpec &t = specs[0], &s1 = specs[1], &s2 = specs[2];
    auto near = [](double a, double b) { return std::abs(a - b) <= 1e-10 * (1.0 + std::abs(b)); };
    if (!near(t.alpha, theta * s1.alpha + (1 - theta) * s2.alpha) ||
        !near(t.weight.delta, theta * s1.weight.delta + (1 - theta) * s2.weight.delta) ||
        !near(inv(t.p), theta * inv(s1.p) + (1 - theta) * inv(s2.p)) ||
        !near(inv(t.q), theta * inv(s1.q) + (1 - theta) * inv(s2.q)))
        throw std::invalid_argument("interpolation_check: exponent relations violated");
    InterpolationReport rep;
    rep.lhs = besov_norm(f, t);
    double n1 = besov_norm(f, s1), n2 = besov_norm(f, s2);
    rep.rhs = std::pow(n1, theta) * std::pow(n2, 1.0 - theta);
    rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : (rep.lhs > 0.0 ? kInf : 0.0);
    rep.holds = rep.lhs <= rep.rhs * (1.0 + tol) || (rep.lhs == 0.0 && rep.rhs == 0.0);
    return rep;
}

}  // namespace parapde
