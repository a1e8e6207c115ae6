#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

// Iterative radix-2 FFT; grids in this project are powers of two.

namespace eigengrowth::fft {

using cplx = std::complex<double>;

inline bool is_pow2(std::size_t n) { return n && !(n & (n - 1)); }

// in-place, sign = -1 forward (e^{-i...}), +1 inverse (unscaled)
inline void transform(std::vector<cplx>& a, int sign) {
    const std::size_t n = a.size();
    if (!is_pow2(n)) throw std::invalid_argument("fft: size must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = sign * 2.0 * M_PI / static_cast<double>(len);
        cplx wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cplx w(1.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                cplx u = a[i + k];
                cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

// forward: f_hat[k] = (1/N) sum_j f[j] e^{-2 pi i j k / N}  (Fourier coefficients
// of a periodic grid function)
inline std::vector<cplx> coefficients(std::vector<cplx> f) {
    transform(f, -1);
    const double inv = 1.0 / static_cast<double>(f.size());
    for (auto& v : f) v *= inv;
    return f;
}

// inverse of `coefficients`
inline std::vector<cplx> values(std::vector<cplx> fhat) {
    transform(fhat, +1);
    return fhat;
}

// signed mode index for slot k of an N-point transform
inline long mode_index(std::size_t k, std::size_t n) {
    long lk = static_cast<long>(k);
    long ln = static_cast<long>(n);
    return (lk <= ln / 2 - 1) ? lk : lk - ln;
}

}  // namespace eigengrowth::fft
