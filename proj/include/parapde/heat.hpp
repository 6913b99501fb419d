#pragma once

// Heat semigroup P_t, damped Duhamel operator I_lambda (exponential
// integrator in Fourier space, exact per step for time-constant forcing),
// the windowed integral I^t_s, and the Schauder lambda-scaling probe.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "parapde/spacetime.hpp"

namespace parapde {

inline Field heat(const Field& f, double t) {
    if (t < 0.0) throw std::out_of_range("heat: t must be >= 0");
    if (t == 0.0) return f;
    SpectralField s = f.to_spectral();
    const Grid& g = f.grid;
    for (std::size_t i = 0; i < s.coeffs.size(); ++i) {
        double k2;
        if (g.dim == 1) {
            double k = g.k(int(i));
            k2 = k * k;
        } else {
            double kx = g.k(int(i) / g.N), ky = g.k(int(i) % g.N);
            k2 = kx * kx + ky * ky;
        }
        s.coeffs[i] *= std::exp(-k2 * t);
    }
    return s.to_field();
}

enum class DuhamelQuadrature { left, trapezoid, exponential_integrator };

struct DuhamelConfig {
    double lambda = 0.0;
    double dt = 0.0;  // 0 = take from the forcing's grid
    DuhamelQuadrature quadrature = DuhamelQuadrature::exponential_integrator;
};

namespace detail {

inline std::vector<double> mode_k2(const Grid& g) {
    std::vector<double> k2(g.size());
    for (std::size_t i = 0; i < k2.size(); ++i) {
        if (g.dim == 1) {
            double k = g.k(int(i));
            k2[i] = k * k;
        } else {
            double kx = g.k(int(i) / g.N), ky = g.k(int(i) % g.N);
            k2[i] = kx * kx + ky * ky;
        }
    }
    return k2;
}

inline double phi1(double z) {
    // (1 - e^{-z}) / z, stable near 0
    if (z < 1e-8) return 1.0 - 0.5 * z;
    return (1.0 - std::exp(-z)) / z;
}

}  // namespace detail

// Stepper for u' = -(lambda + |k|^2) u + g(t) per mode; advances spectral
// state by one step with forcing sampled per the quadrature rule.
class DuhamelStepper {
  public:
    DuhamelStepper(const Grid& g, double lambda, double dt,
                   DuhamelQuadrature quad = DuhamelQuadrature::exponential_integrator)
        : grid_(g), dt_(dt), quad_(quad), k2_(detail::mode_k2(g)) {
        if (!(dt > 0.0)) throw std::invalid_argument("DuhamelStepper: dt must be positive");
        if (lambda < 0.0 || !std::isfinite(lambda))
            throw std::invalid_argument("DuhamelStepper: lambda must be finite and >= 0");
        decay_.resize(k2_.size());
        srcw_.resize(k2_.size());
        for (std::size_t i = 0; i < k2_.size(); ++i) {
            double a = lambda + k2_[i];
            decay_[i] = std::exp(-a * dt);
            switch (quad_) {
                case DuhamelQuadrature::left:
                    srcw_[i] = dt * decay_[i];
                    break;
                case DuhamelQuadrature::trapezoid:
                case DuhamelQuadrature::exponential_integrator:
                    srcw_[i] = dt * detail::phi1(a * dt);
                    break;
            }
        }
    }

    // state <- E state + w . g_left  (trapezoid blends g_left and g_right)
    void step(SpectralField& state, const SpectralField& g_left,
              const SpectralField* g_right = nullptr) const {
        for (std::size_t i = 0; i < state.coeffs.size(); ++i) {
            cplx src = g_left.coeffs[i];
            if (quad_ == DuhamelQuadrature::trapezoid && g_right)
                src = 0.5 * (g_left.coeffs[i] + g_right->coeffs[i]);
            state.coeffs[i] = decay_[i] * state.coeffs[i] + srcw_[i] * src;
        }
    }

    double decay(std::size_t i) const { return decay_[i]; }
    double source_weight(std::size_t i) const { return srcw_[i]; }
    double dt() const { return dt_; }

  private:
    Grid grid_;
    double dt_;
    DuhamelQuadrature quad_;
    std::vector<double> k2_, decay_, srcw_;
};

// u(t) = int_0^t e^{-lambda(t-s)} P_{t-s} f(s) ds on f's time grid, u(0) = 0.
inline SpaceTimeField duhamel(const SpaceTimeField& f, const DuhamelConfig& cfg) {
    if (!f.uniform()) throw std::invalid_argument("duhamel: nonuniform time grid");
    const double dt = f.dt();
    if (cfg.dt > 0.0 && std::abs(cfg.dt - dt) > 1e-12 * dt)
        throw std::invalid_argument("duhamel: cfg.dt does not match the forcing grid");
    DuhamelStepper stepper(f.grid(), cfg.lambda, dt, cfg.quadrature);
    SpaceTimeField u;
    u.times = f.times;
    u.slices.assign(f.num_slices(), Field(f.grid()));
    SpectralField state(f.grid());
    for (int m = 0; m + 1 < f.num_slices(); ++m) {
        SpectralField gl = f[m].to_spectral();
        SpectralField gr = f[m + 1].to_spectral();
        stepper.step(state, gl, &gr);
        u[m + 1] = state.to_field();
    }
    return u;
}

// I^t_s f = int_s^t P_{t-r} f(r) dr; s, t must lie on the forcing grid.
inline Field duhamel_window(const SpaceTimeField& f, double s, double t) {
    if (s > t) throw std::out_of_range("duhamel_window: requires s <= t");
    int ms = f.index_of_time(s);
    int mt = f.index_of_time(t);
    if (ms == mt) return Field(f.grid());
    DuhamelStepper stepper(f.grid(), 0.0, f.dt());
    SpectralField state(f.grid());
    for (int m = ms; m < mt; ++m) {
        SpectralField gl = f[m].to_spectral();
        SpectralField gr = f[m + 1].to_spectral();
        stepper.step(state, gl, &gr);
    }
    return state.to_field();
}

// Generic first-order finite-difference residual of L_lambda u = f:
// (u_{m+1} - u_m)/dt + (lambda - Lap) u_m - f_m, relative L2 over space-time.
inline double duhamel_residual(const SpaceTimeField& u, const SpaceTimeField& f, double lambda) {
    const double dt = u.dt();
    double num = 0.0, den = 0.0;
    for (int m = 0; m + 1 < u.num_slices(); ++m) {
        Field lap = laplacian(u[m]);
        for (std::size_t i = 0; i < lap.values.size(); ++i) {
            double r = (u[m + 1].values[i] - u[m].values[i]) / dt + lambda * u[m].values[i] -
                       lap.values[i] - f[m].values[i];
            num += r * r;
            den += f[m].values[i] * f[m].values[i];
        }
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

struct SchauderReport {
    std::vector<double> lambdas;
    std::vector<double> norms;   // ||I_lambda f||_{S^{theta-alpha}_T}
    double slope = 0.0;          // fitted d log norm / d log lambda
    double expected = 0.0;       // -(1 - theta/2 - 1/q)
};

// Lambda-scaling probe for the Schauder estimate: the S^{theta-alpha} norm of
// I_lambda f should scale like lambda^{theta/2 + 1/q - 1}.
inline SchauderReport schauder_probe(const SpaceTimeField& f, double theta, double alpha, double q,
                                     const std::vector<double>& lambdas) {
    if (!(alpha > 0.0) || alpha > 1.0) throw std::invalid_argument("schauder_probe: alpha in (0,1]");
    if (!(theta > alpha) || theta > 2.0) throw std::invalid_argument("schauder_probe: theta in (alpha,2]");
    if (q != kInf && q < 2.0 / (2.0 - theta))
        throw std::invalid_argument("schauder_probe: q must be >= 2/(2-theta)");
    SchauderReport rep;
    rep.expected = -(1.0 - theta / 2.0 - (q == kInf ? 0.0 : 1.0 / q));
    Weight unit(f.grid(), 0.0);
    for (double lam : lambdas) {
        DuhamelConfig cfg;
        cfg.lambda = lam;
        SpaceTimeField u = duhamel(f, cfg);
        rep.lambdas.push_back(lam);
        rep.norms.push_back(s_norm(u, theta - alpha, unit));
    }
    // least squares on log-log over lambda >= 1
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < rep.lambdas.size(); ++i) {
        if (rep.lambdas[i] < 1.0 || rep.norms[i] <= 0.0) continue;
        double x = std::log(rep.lambdas[i]), y = std::log(rep.norms[i]);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
        ++n;
    }
    if (n >= 2) rep.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return rep;
}

}  // namespace parapde
