#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

// Legendre machinery: Gauss-Legendre rules, stable three-term recurrences for
// P_l and the fully normalized associated functions used by the spherical
// harmonic transforms.

namespace eigengrowth::legendre {

// P_l(x) by upward recurrence (stable on [-1,1])
inline double legendre_p(int l, double x) {
    if (l == 0) return 1.0;
    if (l == 1) return x;
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= l; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

struct GaussLegendre {
    std::vector<double> nodes;    // ascending in (-1, 1)
    std::vector<double> weights;
};

inline GaussLegendre gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
    GaussLegendre g;
    g.nodes.resize(n);
    g.weights.resize(n);
    const double eps = 1e-15;
    int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Tricomi-style initial guess, then Newton
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < eps) break;
        }
        g.nodes[i] = -x;
        g.nodes[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * pp * pp);
        g.weights[i] = w;
        g.weights[n - 1 - i] = w;
    }
    return g;
}

// Fully normalized associated Legendre values Pbar_l^m(x) for fixed m and
// l = m..lmax; 2*pi * int Pbar^2 sin(theta) dtheta = 1, Condon-Shortley sign.
// Written into out[l - m].
inline void normalized_plm_column(int m, int lmax, double x, std::vector<double>& out) {
    if (m < 0) throw std::invalid_argument("normalized_plm_column: m >= 0 required");
    out.assign(static_cast<std::size_t>(lmax - m + 1), 0.0);
    double s = std::sqrt(std::max(0.0, 1.0 - x * x));
    // seed Pbar_m^m
    double pmm = std::sqrt(1.0 / (4.0 * M_PI));
    for (int k = 1; k <= m; ++k)
        pmm *= -std::sqrt((2.0 * k + 1.0) / (2.0 * k)) * s;
    out[0] = pmm;
    if (lmax == m) return;
    double pm1 = std::sqrt(2.0 * m + 3.0) * x * pmm;
    out[1] = pm1;
    double pprev = pmm, pcur = pm1;
    for (int l = m + 2; l <= lmax; ++l) {
        double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - m * m));
        double b = std::sqrt(((2.0 * l + 1.0) * ((l - 1.0) * (l - 1.0) - m * m)) /
                             ((2.0 * l - 3.0) * (static_cast<double>(l) * l - m * m)));
        double pnext = a * x * pcur - b * pprev;
        out[l - m] = pnext;
        pprev = pcur;
        pcur = pnext;
    }
}

}  // namespace eigengrowth::legendre
