#pragma once

#include <cmath>
#include <cstdlib>
#include <vector>

// Bessel functions J_k of integer order, evaluated in whole rows J_0..J_K.
// Large arguments use the Hankel asymptotic expansion truncated at its
// smallest term (error ~ e^{-2z}, below double rounding for z >= 18) plus
// upward recurrence; otherwise Miller's normalized downward recurrence. The
// test suite validates rows against the C++17 library implementation, which
// is accurate but far too slow for quadrature inner loops.

namespace eigengrowth::bessel {

namespace detail {

// Hankel asymptotic value of J_nu(z) for z >= 18, nu in {0, 1}
inline double hankel(int nu, double z) {
    const double mu = 4.0 * nu * nu;
    double term = 1.0;
    double p = 1.0, q = 0.0;
    double prev = 1e300;
    for (int k = 1; k < 30; ++k) {
        term *= (mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (8.0 * z * k);
        double mag = std::abs(term);
        if (mag >= prev || mag < 1e-18) break;
        prev = mag;
        switch (k % 4) {
            case 1: q += term; break;
            case 2: p -= term; break;
            case 3: q -= term; break;
            case 0: p += term; break;
        }
    }
    double w = z - 0.5 * nu * M_PI - 0.25 * M_PI;
    return std::sqrt(2.0 / (M_PI * z)) * (p * std::cos(w) - q * std::sin(w));
}

inline void miller_row(double z, int K, std::vector<double>& out) {
    out.assign(K + 1, 0.0);
    if (z < 1e-12) {
        out[0] = 1.0;
        return;
    }
    int zi = static_cast<int>(z);
    int M = std::max(K, zi) + static_cast<int>(2.0 * std::sqrt(static_cast<double>(std::max(K, zi)))) + 24;
    if (M % 2) ++M;
    double fp = 0.0, fc = 1e-280;
    double norm = 0.0;
    for (int k = M; k >= 1; --k) {
        double fm = (2.0 * k / z) * fc - fp;
        fp = fc;
        fc = fm;
        if (k - 1 <= K) out[k - 1] = fc;
        if ((k - 1) % 2 == 0 && k - 1 >= 2) norm += 2.0 * fc;
        if (std::abs(fc) > 1e260) {  // rescale to avoid overflow
            fp /= 1e260;
            fc /= 1e260;
            norm /= 1e260;
            for (auto& v : out) v /= 1e260;
        }
    }
    norm += out[0];  // J_0 + 2 sum J_{2m} = 1
    // careful: the loop above adds 2*f for even indices >= 2 computed on the
    // fly; out[0] currently holds the unnormalized f_0
    for (auto& v : out) v /= norm;
}

}  // namespace detail

// J_0(z) .. J_K(z), z >= 0
inline void row(double z, int K, std::vector<double>& out) {
    if (z >= 18.0 && z >= 1.2 * K) {
        out.resize(K + 1);
        out[0] = detail::hankel(0, z);
        if (K >= 1) out[1] = detail::hankel(1, z);
        for (int k = 1; k < K; ++k) out[k + 1] = (2.0 * k / z) * out[k] - out[k - 1];
        return;
    }
    detail::miller_row(z, K, out);
}

inline double j0(double z) {
    if (z < 0) z = -z;
    if (z >= 18.0) return detail::hankel(0, z);
    std::vector<double> r;
    detail::miller_row(z, 0, r);
    return r[0];
}

// signed-order/argument extension: J_{-k} = (-1)^k J_k, J_k(-z) = (-1)^k J_k(z)
inline double jn(int k, double z) {
    int a = std::abs(k);
    std::vector<double> r;
    row(std::abs(z), a, r);
    double v = r[a];
    if (z < 0 && (a % 2)) v = -v;
    if (k < 0 && (a % 2)) v = -v;
    return v;
}

}  // namespace eigengrowth::bessel
