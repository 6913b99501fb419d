#pragma once

// Periodic grids on the torus [-L, L)^dim (dim = 1 or 2) and the real /
// spectral field carriers used by every operator in the library.
//
// Spectral convention: values(x_i) = sum_m coeff[m] e^{i k_m . x_i} with
// k_m = pi * mtilde / L, mtilde in [-N/2, N/2). Coefficients are stored in
// standard DFT index order (mtilde = m for m < N/2, m - N otherwise).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "parapde/fft.hpp"

namespace parapde {

inline constexpr double kPi = 3.14159265358979323846;

struct Grid {
    int dim = 1;
    int N = 0;        // points per axis, power of two, >= 16
    double L = kPi;   // half-length of the torus

    Grid() = default;
    Grid(int dim_, int N_, double L_) : dim(dim_), N(N_), L(L_) {
        if (dim != 1 && dim != 2) throw std::invalid_argument("Grid: dim must be 1 or 2");
        if (N < 16 || (N & (N - 1)) != 0)
            throw std::invalid_argument("Grid: N must be a power of two >= 16");
        if (!(L > 0)) throw std::invalid_argument("Grid: L must be positive");
    }

    double h() const { return 2.0 * L / double(N); }
    std::size_t size() const { return dim == 1 ? std::size_t(N) : std::size_t(N) * N; }
    double x(int i) const { return -L + i * h(); }
    // wavenumber of DFT index m along one axis
    double k(int m) const {
        int mt = m < N / 2 ? m : m - N;
        return kPi * double(mt) / L;
    }
    double k_nyquist() const { return kPi * double(N) / (2.0 * L); }
    double cell_volume() const { return dim == 1 ? h() : h() * h(); }

    bool operator==(const Grid& o) const { return dim == o.dim && N == o.N && L == o.L; }
    bool operator!=(const Grid& o) const { return !(*this == o); }
};

struct Field;

struct SpectralField {
    Grid grid;
    std::vector<cplx> coeffs;

    SpectralField() = default;
    explicit SpectralField(const Grid& g) : grid(g), coeffs(g.size(), cplx{0.0, 0.0}) {}

    Field to_field() const;
};

struct Field {
    Grid grid;
    std::vector<double> values;

    Field() = default;
    explicit Field(const Grid& g) : grid(g), values(g.size(), 0.0) {}
    Field(const Grid& g, double c) : grid(g), values(g.size(), c) {}

    SpectralField to_spectral() const {
        SpectralField s(grid);
        for (std::size_t i = 0; i < values.size(); ++i) s.coeffs[i] = values[i];
        if (grid.dim == 1)
            fft_forward(s.coeffs);
        else
            fft2_forward(s.coeffs, std::size_t(grid.N));
        return s;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }
    bool finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }

    Field& operator+=(const Field& o) {
        check_same(o);
        for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
        return *this;
    }
    Field& operator-=(const Field& o) {
        check_same(o);
        for (std::size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
        return *this;
    }
    Field& operator*=(double c) {
        for (auto& v : values) v *= c;
        return *this;
    }
    void check_same(const Field& o) const {
        if (grid != o.grid) throw std::invalid_argument("Field: grid mismatch");
    }
};

inline Field SpectralField::to_field() const {
    std::vector<cplx> tmp = coeffs;
    if (grid.dim == 1)
        fft_inverse(tmp);
    else
        fft2_inverse(tmp, std::size_t(grid.N));
    Field f(grid);
    for (std::size_t i = 0; i < tmp.size(); ++i) f.values[i] = tmp[i].real();
    return f;
}

inline Field operator+(Field a, const Field& b) { return a += b; }
inline Field operator-(Field a, const Field& b) { return a -= b; }
inline Field operator*(double c, Field a) { return a *= c; }

// Pointwise (aliased) lattice product.
inline Field pointwise_product(const Field& a, const Field& b) {
    a.check_same(b);
    Field out(a.grid);
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = a.values[i] * b.values[i];
    return out;
}

namespace detail {

// Zero-pad an N-spectrum into a 2N-spectrum (per axis). The N-grid Nyquist
// coefficient is split evenly between +N/2 and -N/2 on the fine grid so real
// symmetry is preserved.
inline void pad_axis_indices(int N, std::vector<int>& src, std::vector<int>& dst,
                             std::vector<double>& w) {
    src.clear();
    dst.clear();
    w.clear();
    for (int m = 0; m < N; ++m) {
        int mt = m < N / 2 ? m : m - N;
        if (mt == -N / 2) {
            src.push_back(m); dst.push_back(N / 2);          w.push_back(0.5);
            src.push_back(m); dst.push_back(2 * N - N / 2);  w.push_back(0.5);
        } else {
            int d = mt >= 0 ? mt : 2 * N + mt;
            src.push_back(m); dst.push_back(d); w.push_back(1.0);
        }
    }
}

}  // namespace detail

inline SpectralField pad_spectrum(const SpectralField& s) {
    const Grid& g = s.grid;
    Grid fine(g.dim, 2 * g.N, g.L);
    SpectralField out(fine);
    std::vector<int> src, dst;
    std::vector<double> w;
    detail::pad_axis_indices(g.N, src, dst, w);
    if (g.dim == 1) {
        for (std::size_t t = 0; t < src.size(); ++t) out.coeffs[dst[t]] += w[t] * s.coeffs[src[t]];
    } else {
        for (std::size_t a = 0; a < src.size(); ++a)
            for (std::size_t b = 0; b < src.size(); ++b)
                out.coeffs[std::size_t(dst[a]) * fine.N + dst[b]] +=
                    w[a] * w[b] * s.coeffs[std::size_t(src[a]) * g.N + src[b]];
    }
    return out;
}

// Truncate a 2N-spectrum back to N modes, dropping |mtilde| >= N/2.
inline SpectralField truncate_spectrum(const SpectralField& s, const Grid& coarse) {
    const Grid& g = s.grid;
    if (g.N != 2 * coarse.N) throw std::invalid_argument("truncate_spectrum: size mismatch");
    SpectralField out(coarse);
    auto keep = [&](int m2, int& m) {
        int mt = m2 < g.N / 2 ? m2 : m2 - g.N;
        if (mt <= -coarse.N / 2 || mt >= coarse.N / 2) return false;
        m = mt >= 0 ? mt : coarse.N + mt;
        return true;
    };
    if (g.dim == 1) {
        for (int m2 = 0; m2 < g.N; ++m2) {
            int m;
            if (keep(m2, m)) out.coeffs[m] = s.coeffs[m2];
        }
    } else {
        for (int a2 = 0; a2 < g.N; ++a2) {
            int a;
            if (!keep(a2, a)) continue;
            for (int b2 = 0; b2 < g.N; ++b2) {
                int b;
                if (keep(b2, b))
                    out.coeffs[std::size_t(a) * coarse.N + b] = s.coeffs[std::size_t(a2) * g.N + b2];
            }
        }
    }
    return out;
}

// Dealiased product: both factors padded to 2N modes, multiplied in real
// space, truncated back. Exact for factors band-limited below N/4.
inline Field multiply(const Field& a, const Field& b) {
    a.check_same(b);
    Field fa = pad_spectrum(a.to_spectral()).to_field();
    Field fb = pad_spectrum(b.to_spectral()).to_field();
    Field prod = pointwise_product(fa, fb);
    return truncate_spectrum(prod.to_spectral(), a.grid).to_field();
}

// Diagonal Fourier-multiplier action. d=1 multipliers take k, d=2 take (kx, ky).
using Multiplier1 = std::function<cplx(double)>;
using Multiplier2 = std::function<cplx(double, double)>;

inline void check_hermitian_1d(const Grid& g, const Multiplier1& m) {
    for (int i = 1; i < g.N / 2; ++i) {
        double k = kPi * double(i) / g.L;
        cplx a = m(k), b = m(-k);
        if (std::abs(a - std::conj(b)) > 1e-12 * (1.0 + std::abs(a)))
            throw std::invalid_argument("apply_multiplier: multiplier is not Hermitian");
    }
    if (std::abs(m(0.0).imag()) > 1e-14 || std::abs(m(-g.k_nyquist()).imag()) > 1e-14)
        throw std::invalid_argument("apply_multiplier: multiplier is not Hermitian");
}

inline Field apply_multiplier(const Field& f, const Multiplier1& m, bool require_real = true) {
    if (f.grid.dim != 1) throw std::invalid_argument("apply_multiplier: dim mismatch");
    if (require_real) check_hermitian_1d(f.grid, m);
    SpectralField s = f.to_spectral();
    for (int i = 0; i < f.grid.N; ++i) s.coeffs[i] *= m(f.grid.k(i));
    return s.to_field();
}

inline Field apply_multiplier(const Field& f, const Multiplier2& m, bool require_real = true) {
    if (f.grid.dim != 2) throw std::invalid_argument("apply_multiplier: dim mismatch");
    const Grid& g = f.grid;
    if (require_real) {
        for (int a = 1; a < g.N / 2; ++a)
            for (int b = 1; b < g.N / 2; b += std::max(1, g.N / 8)) {
                double kx = kPi * a / g.L, ky = kPi * b / g.L;
                cplx u = m(kx, ky), v = m(-kx, -ky);
                if (std::abs(u - std::conj(v)) > 1e-12 * (1.0 + std::abs(u)))
                    throw std::invalid_argument("apply_multiplier: multiplier is not Hermitian");
            }
    }
    SpectralField s = f.to_spectral();
    for (int a = 0; a < g.N; ++a)
        for (int b = 0; b < g.N; ++b) s.coeffs[std::size_t(a) * g.N + b] *= m(g.k(a), g.k(b));
    return s.to_field();
}

// Spectral derivative along an axis; the Nyquist mode is zeroed to keep the
// output real.
inline void derivative_in_place(SpectralField& s, int axis) {
    const Grid& g = s.grid;
    if (g.dim == 1) {
        for (int m = 0; m < g.N; ++m) {
            if (m == g.N / 2) {
                s.coeffs[m] = 0.0;
                continue;
            }
            s.coeffs[m] *= cplx(0.0, g.k(m));
        }
    } else {
        for (int a = 0; a < g.N; ++a)
            for (int b = 0; b < g.N; ++b) {
                int m = axis == 0 ? a : b;
                std::size_t idx = std::size_t(a) * g.N + b;
                if (m == g.N / 2)
                    s.coeffs[idx] = 0.0;
                else
                    s.coeffs[idx] *= cplx(0.0, g.k(m));
            }
    }
}

inline Field derivative(const Field& f, int axis = 0) {
    SpectralField s = f.to_spectral();
    derivative_in_place(s, axis);
    return s.to_field();
}

inline Field laplacian(const Field& f) {
    SpectralField s = f.to_spectral();
    const Grid& g = f.grid;
    if (g.dim == 1) {
        for (int m = 0; m < g.N; ++m) {
            double k = g.k(m);
            s.coeffs[m] *= -k * k;
        }
    } else {
        for (int a = 0; a < g.N; ++a)
            for (int b = 0; b < g.N; ++b) {
                double kx = g.k(a), ky = g.k(b);
                s.coeffs[std::size_t(a) * g.N + b] *= -(kx * kx + ky * ky);
            }
    }
    return s.to_field();
}

// L2 lattice norm (trapezoidal quadrature = uniform sum * cell volume).
inline double l2_norm(const Field& f) {
    double s = 0.0;
    for (double v : f.values) s += v * v;
    return std::sqrt(s * f.grid.cell_volume());
}

}  // namespace parapde
