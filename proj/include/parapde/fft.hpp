#pragma once

// Iterative radix-2 complex FFT for power-of-two sizes. Twiddle tables are
// cached per size behind a mutex so transforms stay callable from worker
// threads.

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace parapde {

using cplx = std::complex<double>;

namespace fft_detail {

struct Plan {
    std::size_t n = 0;
    std::vector<std::size_t> bitrev;
    std::vector<cplx> twiddle;  // forward twiddles, stage-packed
};

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::shared_ptr<const Plan> plan_for(std::size_t n) {
    // per-thread memo avoids the lock on repeat sizes
    thread_local std::map<std::size_t, std::shared_ptr<const Plan>> memo;
    auto mit = memo.find(n);
    if (mit != memo.end()) return mit->second;
    static std::mutex mtx;
    static std::map<std::size_t, std::shared_ptr<const Plan>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) {
        memo.emplace(n, it->second);
        return it->second;
    }
    if (!is_pow2(n)) throw std::invalid_argument("fft: size must be a power of two");
    auto p = std::make_shared<Plan>();
    p->n = n;
    p->bitrev.resize(n);
    std::size_t log2n = 0;
    while ((std::size_t{1} << log2n) < n) ++log2n;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t r = 0;
        for (std::size_t b = 0; b < log2n; ++b)
            if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (log2n - 1 - b);
        p->bitrev[i] = r;
    }
    p->twiddle.reserve(n);
    static const double two_pi = 8.0 * std::atan(1.0);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        for (std::size_t k = 0; k < len / 2; ++k) {
            double ang = -two_pi * double(k) / double(len);
            p->twiddle.emplace_back(std::cos(ang), std::sin(ang));
        }
    }
    cache.emplace(n, p);
    memo.emplace(n, p);
    return p;
}

// In-place transform; sign = -1 forward, +1 inverse (unnormalized).
inline void transform(cplx* a, std::size_t n, int sign) {
    if (n <= 1) return;
    auto plan = plan_for(n);
    const auto& rev = plan->bitrev;
    for (std::size_t i = 0; i < n; ++i)
        if (i < rev[i]) std::swap(a[i], a[rev[i]]);
    const cplx* tw = plan->twiddle.data();
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < half; ++k) {
                cplx w = tw[k];
                if (sign > 0) w = std::conj(w);
                cplx u = a[i + k];
                cplx v = a[i + k + half] * w;
                a[i + k] = u + v;
                a[i + k + half] = u - v;
            }
        }
        tw += half;
    }
}

}  // namespace fft_detail

// Forward DFT with 1/n normalization: c[m] = (1/n) sum_i a[i] e^{-2pi i m i / n}.
inline void fft_forward(std::vector<cplx>& a) {
    fft_detail::transform(a.data(), a.size(), -1);
    const double s = 1.0 / double(a.size());
    for (auto& v : a) v *= s;
}

// Inverse DFT, unnormalized sum: a[i] = sum_m c[m] e^{+2pi i m i / n}.
inline void fft_inverse(std::vector<cplx>& a) {
    fft_detail::transform(a.data(), a.size(), +1);
}

// Row/column transforms for a square n x n array stored row-major.
inline void fft2_forward(std::vector<cplx>& a, std::size_t n) {
    std::vector<cplx> col(n);
    for (std::size_t r = 0; r < n; ++r) fft_detail::transform(a.data() + r * n, n, -1);
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t r = 0; r < n; ++r) col[r] = a[r * n + c];
        fft_detail::transform(col.data(), n, -1);
        for (std::size_t r = 0; r < n; ++r) a[r * n + c] = col[r];
    }
    const double s = 1.0 / double(n * n);
    for (auto& v : a) v *= s;
}

inline void fft2_inverse(std::vector<cplx>& a, std::size_t n) {
    std::vector<cplx> col(n);
    for (std::size_t r = 0; r < n; ++r) fft_detail::transform(a.data() + r * n, n, +1);
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t r = 0; r < n; ++r) col[r] = a[r * n + c];
        fft_detail::transform(col.data(), n, +1);
        for (std::size_t r = 0; r < n; ++r) a[r * n + c] = col[r];
    }
}

}  // namespace parapde
