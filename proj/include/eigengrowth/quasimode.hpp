#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "eigengrowth/bessel.hpp"
#include "eigengrowth/fft.hpp"
#include "eigengrowth/legendre.hpp"
#include "eigengrowth/manifold.hpp"
#include "eigengrowth/utils.hpp"

// Oscillatory-integral modes with prescribed fiber data, reference
// eigenfunctions (zonal harmonics, torus plane waves), spectral residuals and
// sup-norm scans on the sphere.
//
// A mode with fiber amplitude g and radial profile chi_R is evaluated in
// geodesic normal coordinates at its center as
//   Phi(x) = (2 pi h)^{(1-n)/2} int e^{i<x, theta/|theta|>/h}
//            g(theta/|theta|) chi_R(|theta|) dtheta .
// The radial normalization int chi_R(a) a^{n-1} da = 1 collapses the radial
// integral, so Phi also equals the fiber-sphere integral of e^{i<x,w>/h} g(w);
// both routes are implemented and cross-checked.

namespace eigengrowth::quasimode {

using manifold::ChartPoint;
using manifold::ManifoldModel;
using fft::cplx;
using manifold::pi;

// ---------------------------------------------------------------------------
// radial cutoff

class RadialCutoff {
  public:
    // smooth bump: 0 on (0, a0], C-inf ramp up on (a0, 1), 1 on [1, R],
    // C-inf ramp down to 0 on (R, R + w), 0 beyond; w tuned so that
    // int chi(a) a^{n-1} da = 1.
    RadialCutoff(double R, int n, double w, double a0)
        : R_(R), n_(n), w_(w), a0_(a0) {}

    double R() const { return R_; }
    double ramp_width() const { return w_; }

    double operator()(double a) const {
        if (a <= a0_ || a >= R_ + w_) return 0.0;
        if (a < 1.0) return smooth_step((a - a0_) / (1.0 - a0_));
        if (a <= R_) return 1.0;
        return smooth_step((R_ + w_ - a) / w_);
    }

    double weighted_integral(int quad_points = 4096) const {
        // composite midpoint over (a0, R + w); integrand is smooth
        double lo = a0_, hi = R_ + w_;
        double hstep = (hi - lo) / quad_points;
        double s = 0.0;
        for (int i = 0; i < quad_points; ++i) {
            double a = lo + (i + 0.5) * hstep;
            s += (*this)(a)*std::pow(a, n_ - 1);
        }
        return s * hstep;
    }

    std::vector<double> sample(int count) const {
        std::vector<double> out(count);
        for (int i = 0; i < count; ++i)
            out[i] = (*this)((i + 0.5) * (2.0 * R_) / count);
        return out;
    }

    static double smooth_step(double x) {
        // C-infinity transition 0 -> 1 on [0, 1]
        if (x <= 0) return 0.0;
        if (x >= 1) return 1.0;
        double a = std::exp(-1.0 / x);
        double b = std::exp(-1.0 / (1.0 - x));
        return a / (a + b);
    }

  private:
    double R_;
    int n_;
    double w_;
    double a0_;
};

// Normalized cutoff construction. Feasibility needs the forced part of the
// weighted integral to stay below 1, i.e. R^n < n + 1 up to ramp allowances.
inline RadialCutoff make_radial_cutoff(double R, int n = 2) {
    if (!(R > 1.0)) throw std::domain_error("radial cutoff needs R > 1");
    const double a0 = 0.25;
    auto integral_for = [&](double w) {
        return RadialCutoff(R, n, w, a0).weighted_integral();
    };
    double lo = 1e-9, hi = R - 1e-9;
    double Ilo = integral_for(lo), Ihi = integral_for(hi);
    if (Ilo > 1.0 || Ihi < 1.0)
        throw std::domain_error(
            "radial cutoff normalization infeasible for this R (needs R^n < n+1)");
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (integral_for(mid) < 1.0)
            lo = mid;
        else
            hi = mid;
    }
    return RadialCutoff(R, n, 0.5 * (lo + hi), a0);
}

// ---------------------------------------------------------------------------
// fiber amplitudes on the unit circle, stored as Fourier coefficients

struct FiberAmplitude {
    // g(phi) = sum_k coef[k] e^{i k phi}, modes kmin..kmax with kmin = -kmax
    std::vector<cplx> coef{cplx(0.0)};  // index k + kmax; default: zero amplitude
    int kmax = 0;

    cplx operator()(double phi) const {
        cplx s = 0.0;
        for (int k = -kmax; k <= kmax; ++k)
            s += coef[k + kmax] * std::polar(1.0, k * phi);
        return s;
    }
    cplx mean() const { return coef[kmax]; }  // (1/2pi) int g dphi

    double l2_norm() const {  // sqrt(int_{S^1} |g|^2 dphi)
        double s = 0;
        for (const auto& c : coef) s += std::norm(c);
        return std::sqrt(2.0 * pi * s);
    }

    FiberAmplitude operator+(const FiberAmplitude& o) const {
        FiberAmplitude r;
        r.kmax = std::max(kmax, o.kmax);
        r.coef.assign(2 * r.kmax + 1, 0.0);
        for (int k = -kmax; k <= kmax; ++k) r.coef[k + r.kmax] += coef[k + kmax];
        for (int k = -o.kmax; k <= o.kmax; ++k) r.coef[k + r.kmax] += o.coef[k + o.kmax];
        return r;
    }

    static FiberAmplitude constant(double c) {
        FiberAmplitude g;
        g.kmax = 0;
        g.coef = {cplx(c, 0)};
        return g;
    }

    static FiberAmplitude from_samples(const std::vector<cplx>& samples, int keep_kmax) {
        auto ch = fft::coefficients(samples);
        FiberAmplitude g;
        g.kmax = keep_kmax;
        g.coef.assign(2 * keep_kmax + 1, 0.0);
        int n = static_cast<int>(samples.size());
        for (int k = -keep_kmax; k <= keep_kmax; ++k) {
            int slot = (k % n + n) % n;
            g.coef[k + g.kmax] = ch[slot];
        }
        return g;
    }
};

struct MollifyError : std::runtime_error {
    double achieved;
    int band_limit;
    MollifyError(double got, int K)
        : std::runtime_error("mollification target not reached (achieved " +
                             std::to_string(got) + " at band limit " + std::to_string(K) +
                             ")"),
          achieved(got),
          band_limit(K) {}
};

// Band-limited approximation g with || g - sqrt(f) ||_{L^2(S^1)} < eps.
// The band limit grows adaptively; `max_band` caps it (derivative-growth
// control ties that cap to the semiclassical parameter downstream).
inline FiberAmplitude mollify_g1(const std::function<double(double)>& f_density,
                                 double eps, int max_band = 4096) {
    const int N = 8192;
    std::vector<cplx> root(N);
    for (int j = 0; j < N; ++j) {
        double phi = 2.0 * pi * j / N;
        double f = f_density(phi);
        if (f < -1e-12) throw std::domain_error("fiber density must be nonnegative");
        root[j] = std::sqrt(std::max(0.0, f));
    }
    auto ch = fft::coefficients(root);
    double total = 0.0;
    for (const auto& c : ch) total += std::norm(c);

    auto tail_for = [&](int K) {
        double kept = 0.0;
        for (int k = -K; k <= K; ++k) kept += std::norm(ch[(k % N + N) % N]);
        return std::sqrt(std::max(0.0, (total - kept) * 2.0 * pi));
    };
    int K = 1;
    while (K <= max_band && K < N / 2 - 1) {
        if (tail_for(K) < 0.9 * eps) break;
        K *= 2;
    }
    K = std::min({K, max_band, N / 2 - 2});
    // shrink back to the smallest adequate band
    while (K > 0 && tail_for(K - 1) < 0.9 * eps) --K;
    double achieved = tail_for(K);
    if (achieved >= eps) throw MollifyError(achieved, K);
    return FiberAmplitude::from_samples(root, K);
}

// ---------------------------------------------------------------------------
// singular part: concentrating bumps at atom directions

struct Atom {
    double angle = 0.0;
    double mass = 1.0;
};

// Smooth bumps of width `width` centered at the atom directions, scaled so the
// squared-L^2 mass of each bump equals the atom mass. As the width shrinks,
// |g2|^2 dS converges weakly to the atomic measure.
inline FiberAmplitude approx_g2(std::vector<Atom> atoms, double width, int max_band = 4096) {
    if (!(width > 0)) throw std::domain_error("bump width must be positive");
    if (atoms.empty()) return FiberAmplitude::constant(0.0);
    // merge duplicates
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& a, const Atom& b) { return a.angle < b.angle; });
    std::vector<Atom> merged;
    for (const auto& a : atoms) {
        if (!merged.empty() && std::abs(a.angle - merged.back().angle) < 1e-12)
            merged.back().mass += a.mass;
        else
            merged.push_back(a);
    }
    const int N = 8192;
    std::vector<cplx> vals(N, 0.0);
    for (const auto& atom : merged) {
        // wrapped Gaussian, numerically normalized: int |A b|^2 dphi = mass
        std::vector<double> bump(N);
        double q = 0.0;
        for (int j = 0; j < N; ++j) {
            double d = std::remainder(2.0 * pi * j / N - atom.angle, 2.0 * pi);
            bump[j] = std::exp(-0.5 * d * d / (width * width));
            q += bump[j] * bump[j];
        }
        q *= 2.0 * pi / N;
        double A = std::sqrt(atom.mass / q);
        for (int j = 0; j < N; ++j) vals[j] += A * bump[j];
    }
    int K = std::min(max_band, std::max(8, static_cast<int>(std::ceil(8.0 / width))));
    K = std::min(K, N / 2 - 2);
    return FiberAmplitude::from_samples(vals, K);
}

// ---------------------------------------------------------------------------
// mode specification

struct QuasimodeSpec {
    ChartPoint center;          // z0
    FiberAmplitude g1;          // |g1|^2 ~ f on the fiber sphere
    FiberAmplitude g2;          // concentrating part for the atoms
    double epsilon = 0.1;
    double cutoff_R = 1.2;
    double h = 0.01;
    int dim = 2;
    double chart_radius = pi;   // normal-coordinate domain about the center

    FiberAmplitude g() const { return g1 + g2; }
};

// derivative-growth control: cap on fiber band limits as a function of h
inline int band_cap(double h) {
    return std::max(8, static_cast<int>(std::ceil(std::pow(h, -0.75))));
}
inline double min_bump_width(double h) { return std::pow(h, 0.75); }

struct UnderResolvedError : std::runtime_error {
    cplx coarse, fine;
    UnderResolvedError(cplx a, cplx b)
        : std::runtime_error("oscillatory quadrature under-resolved"), coarse(a), fine(b) {}
};

namespace detail {

// fiber-circle integral int e^{i |x| cos(phi - psi) / h} g(phi) dphi by
// trapezoid with n_ang nodes (exact for band-limited integrands once resolved)
inline cplx circle_integral(const FiberAmplitude& g, double r_over_h, double psi,
                            int n_ang) {
    cplx s = 0.0;
    for (int j = 0; j < n_ang; ++j) {
        double phi = 2.0 * pi * j / n_ang;
        s += std::polar(1.0, r_over_h * std::cos(phi - psi)) * g(phi);
    }
    return s * (2.0 * pi / n_ang);
}

}  // namespace detail

// Full polar-coordinate product quadrature of the oscillatory integral, with a
// node-doubling resolution check. x is in normal coordinates at the center.
inline cplx evaluate_quasimode(const QuasimodeSpec& spec, const RadialCutoff& chi,
                               const Vec2& x, double rel_check = 1e-3) {
    const double h = spec.h;
    const double r = norm(x);
    if (r >= spec.chart_radius)
        throw std::domain_error("evaluation point outside the normal chart");
    const double psi = std::atan2(x.y, x.x);
    const int n = spec.dim;

    auto attempt = [&](int n_rad, int n_ang) {
        // radial: midpoint panels over (0, 2R); angular: trapezoid
        double hi = 2.0 * chi.R();
        double hr = hi / n_rad;
        double radial = 0.0;
        for (int i = 0; i < n_rad; ++i) {
            double a = (i + 0.5) * hr;
            radial += chi(a) * std::pow(a, n - 1);
        }
        radial *= hr;
        cplx angular = detail::circle_integral(spec.g(), r / h, psi, n_ang);
        return radial * angular;
    };
    int n_ang = std::max(128, 8 * (2 * spec.g().kmax + 1));
    n_ang = std::max(n_ang, static_cast<int>(std::ceil(8.0 * r / h)));
    int n_rad = 512;
    cplx v1 = attempt(n_rad, n_ang);
    cplx v2 = attempt(2 * n_rad, 2 * n_ang);
    double scale = std::max({std::abs(v1), std::abs(v2), 1e-300});
    if (std::abs(v1 - v2) / scale > rel_check) throw UnderResolvedError(v1, v2);
    double pref = std::pow(2.0 * pi * h, 0.5 * (1.0 - n));
    return pref * v2;
}

// Same value through the Bessel expansion of the circle integral (used for
// grid builds; cross-checked against evaluate_quasimode in the tests):
//   int e^{i z cos(phi-psi)} g(phi) dphi = 2 pi sum_k i^k J_k(z) g_k e^{i k psi}
inline cplx field_value(const QuasimodeSpec& spec, double r, double psi) {
    const double z = r / spec.h;
    const FiberAmplitude g = spec.g();
    static const cplx ipow[4] = {cplx(1, 0), cplx(0, 1), cplx(-1, 0), cplx(0, -1)};
    std::vector<double> J;
    bessel::row(z, g.kmax, J);
    cplx s = 0.0;
    for (int k = -g.kmax; k <= g.kmax; ++k) {
        cplx c = g.coef[k + g.kmax];
        if (std::norm(c) < 1e-60) continue;
        int km = ((k % 4) + 4) % 4;
        double Jk = J[std::abs(k)];
        if (k < 0 && (k % 2)) Jk = -Jk;
        s += c * ipow[km] * Jk * std::polar(1.0, k * psi);
    }
    double pref = std::pow(2.0 * pi * spec.h, 0.5 * (1.0 - spec.dim));
    return pref * 2.0 * pi * s;
}

// value at the center: the radial integral collapses and only the fiber mean
// survives
inline cplx center_value(const QuasimodeSpec& spec) {
    double pref = std::pow(2.0 * pi * spec.h, 0.5 * (1.0 - spec.dim));
    return pref * 2.0 * pi * spec.g().mean();
}

// ---------------------------------------------------------------------------
// sphere spectral grid (Gauss-Legendre in colatitude, uniform longitude)

struct SphereGrid {
    double radius = 1.0;
    int n_theta = 0;
    int n_phi = 0;
    std::vector<double> theta;    // ascending in (0, pi)
    std::vector<double> gl_weight;  // weights in x = cos(theta), matching theta order

    static SphereGrid make(double R, int n_theta, int n_phi) {
        if (!fft::is_pow2(static_cast<std::size_t>(n_phi)))
            throw std::invalid_argument("n_phi must be a power of two");
        SphereGrid g;
        g.radius = R;
        g.n_theta = n_theta;
        g.n_phi = n_phi;
        auto gl = legendre::gauss_legendre(n_theta);
        g.theta.resize(n_theta);
        g.gl_weight.resize(n_theta);
        for (int i = 0; i < n_theta; ++i) {
            // nodes ascending in x => descending in theta; store ascending theta
            g.theta[i] = std::acos(gl.nodes[n_theta - 1 - i]);
            g.gl_weight[i] = gl.weights[n_theta - 1 - i];
        }
        return g;
    }
};

struct SphereField {
    SphereGrid grid;
    std::vector<cplx> values;  // row-major [i_theta][j_phi]

    cplx& at(int i, int j) { return values[static_cast<std::size_t>(i) * grid.n_phi + j]; }
    cplx at(int i, int j) const {
        return values[static_cast<std::size_t>(i) * grid.n_phi + j];
    }

    double l2_norm() const {
        double s = 0.0;
        for (int i = 0; i < grid.n_theta; ++i) {
            double row = 0.0;
            for (int j = 0; j < grid.n_phi; ++j) row += std::norm(at(i, j));
            s += row * grid.gl_weight[i];
        }
        s *= (2.0 * pi / grid.n_phi) * grid.radius * grid.radius;
        return std::sqrt(s);
    }
};

// build the oscillatory-integral field on the grid (geodesic polar coordinates
// about the center; the grid colatitude is the normal radius / sphere radius)
inline SphereField build_sphere_field(const QuasimodeSpec& spec, const SphereGrid& grid) {
    SphereField f;
    f.grid = grid;
    f.values.assign(static_cast<std::size_t>(grid.n_theta) * grid.n_phi, 0.0);
    const FiberAmplitude g = spec.g();
    static const cplx ipow[4] = {cplx(1, 0), cplx(0, 1), cplx(-1, 0), cplx(0, -1)};
    double pref = std::pow(2.0 * pi * spec.h, 0.5 * (1.0 - spec.dim)) * 2.0 * pi;

    utils::parallel_for(static_cast<std::size_t>(grid.n_theta), [&](std::size_t i) {
        double r = grid.radius * grid.theta[i];
        double z = r / spec.h;
        std::vector<cplx> modes(grid.n_phi, 0.0);
        std::vector<double> J;
        bessel::row(z, g.kmax, J);
        for (int k = -g.kmax; k <= g.kmax; ++k) {
            cplx c = g.coef[k + g.kmax];
            if (std::norm(c) < 1e-60) continue;
            int km = ((k % 4) + 4) % 4;
            int slot = (k % grid.n_phi + grid.n_phi) % grid.n_phi;
            double Jk = J[std::abs(k)];
            if (k < 0 && (k % 2)) Jk = -Jk;
            modes[slot] += c * ipow[km] * Jk;
        }
        auto row = fft::values(modes);
        for (int j = 0; j < grid.n_phi; ++j) f.at(static_cast<int>(i), j) = pref * row[j];
    });
    return f;
}

// ---------------------------------------------------------------------------
// spherical-harmonic analysis

struct SphereCoefficients {
    double radius = 1.0;
    int lmax = 0;
    int mmax = 0;
    // c[m + mmax][l - |m|] for the basis Pbar_l^m(cos th) e^{i m phi}
    std::vector<std::vector<cplx>> c;

    double parseval_sum() const {
        double s = 0.0;
        for (const auto& col : c)
            for (const auto& v : col) s += std::norm(v);
        return s * radius * radius;
    }
};

inline SphereCoefficients sh_analysis(const SphereField& f, int lmax, int mmax) {
    const auto& g = f.grid;
    mmax = std::min(mmax, g.n_phi / 2 - 1);
    lmax = std::min(lmax, g.n_theta - 1);
    SphereCoefficients out;
    out.radius = g.radius;
    out.lmax = lmax;
    out.mmax = mmax;
    out.c.assign(2 * mmax + 1, {});

    // longitude transform per row
    std::vector<std::vector<cplx>> rowhat(g.n_theta);
    for (int i = 0; i < g.n_theta; ++i) {
        std::vector<cplx> row(g.n_phi);
        for (int j = 0; j < g.n_phi; ++j) row[j] = f.at(i, j);
        rowhat[i] = fft::coefficients(row);
    }

    std::vector<int> ms;
    for (int m = -mmax; m <= mmax; ++m) ms.push_back(m);
    utils::parallel_for(ms.size(), [&](std::size_t mi) {
        int m = ms[mi];
        int am = std::abs(m);
        if (am > lmax) {
            out.c[m + mmax] = {};
            return;
        }
        std::vector<cplx> col(static_cast<std::size_t>(lmax - am + 1), 0.0);
        std::vector<double> plm;
        for (int i = 0; i < g.n_theta; ++i) {
            double x = std::cos(g.theta[i]);
            legendre::normalized_plm_column(am, lmax, x, plm);
            cplx um = rowhat[i][(m % g.n_phi + g.n_phi) % g.n_phi];
            double w = g.gl_weight[i];
            for (int l = am; l <= lmax; ++l) col[l - am] += w * um * plm[l - am];
        }
        // account for Condon-Shortley in negative orders: Pbar_l^{-m} = (-1)^m Pbar_l^m
        double sign = (m < 0 && (am % 2)) ? -1.0 : 1.0;
        for (auto& v : col) v *= 2.0 * pi * sign;
        out.c[m + mmax] = std::move(col);
    });
    return out;
}

inline SphereField sh_synthesis(const SphereCoefficients& co, const SphereGrid& grid) {
    SphereField f;
    f.grid = grid;
    f.values.assign(static_cast<std::size_t>(grid.n_theta) * grid.n_phi, 0.0);
    utils::parallel_for(static_cast<std::size_t>(grid.n_theta), [&](std::size_t i) {
        std::vector<cplx> modes(grid.n_phi, 0.0);
        std::vector<double> plm;
        double x = std::cos(grid.theta[i]);
        for (int m = -co.mmax; m <= co.mmax; ++m) {
            int am = std::abs(m);
            if (co.c[m + co.mmax].empty()) continue;
            legendre::normalized_plm_column(am, co.lmax, x, plm);
            double sign = (m < 0 && (am % 2)) ? -1.0 : 1.0;
            cplx s = 0.0;
            for (int l = am; l <= co.lmax; ++l)
                s += co.c[m + co.mmax][l - am] * plm[l - am];
            modes[(m % grid.n_phi + grid.n_phi) % grid.n_phi] += sign * s;
        }
        auto row = fft::values(modes);
        for (int j = 0; j < grid.n_phi; ++j) f.at(static_cast<int>(i), j) = row[j];
    });
    return f;
}

// keep a single degree (spectral-cluster projection on the round sphere)
inline SphereCoefficients cluster_project(const SphereCoefficients& co, int l) {
    SphereCoefficients out;
    out.radius = co.radius;
    out.lmax = co.lmax;
    out.mmax = co.mmax;
    out.c.assign(co.c.size(), {});
    for (int m = -co.mmax; m <= co.mmax; ++m) {
        int am = std::abs(m);
        if (am > l || co.c[m + co.mmax].empty()) continue;
        std::vector<cplx> col(static_cast<std::size_t>(co.lmax - am + 1), 0.0);
        if (l - am < static_cast<int>(co.c[m + co.mmax].size()))
            col[l - am] = co.c[m + co.mmax][l - am];
        out.c[m + out.mmax] = std::move(col);
    }
    return out;
}

struct ResidualReport {
    double residual = 0.0;      // || (-h^2 Lap - 1) u ||_{L^2}
    double field_norm = 0.0;    // || u ||_{L^2} from the grid
    double parseval_norm = 0.0; // || u ||_{L^2} from the coefficients
    double tail_fraction = 0.0; // unrepresented mass fraction at this band
};

struct BandLimitError : std::runtime_error {
    double tail_fraction;
    explicit BandLimitError(double tf)
        : std::runtime_error("field not representable at the configured band limit "
                             "(tail fraction " +
                             std::to_string(tf) + ")"),
          tail_fraction(tf) {}
};

// spectral residual of the eigenvalue equation on the sphere; the Laplacian
// acts by its exact eigenvalue multipliers l(l+1)/R^2
inline ResidualReport residual_norm(const SphereField& f, const SphereCoefficients& co,
                                    double h, double tail_tol = 1e-6) {
    ResidualReport r;
    r.field_norm = f.l2_norm();
    double R2 = co.radius * co.radius;
    double sum = 0.0, res = 0.0;
    for (int m = -co.mmax; m <= co.mmax; ++m) {
        if (co.c[m + co.mmax].empty()) continue;
        int am = std::abs(m);
        for (int l = am; l <= co.lmax; ++l) {
            double cn = std::norm(co.c[m + co.mmax][l - am]);
            sum += cn;
            double mult = h * h * l * (l + 1.0) / R2 - 1.0;
            res += cn * mult * mult;
        }
    }
    r.parseval_norm = std::sqrt(sum * R2);
    r.residual = std::sqrt(res * R2);
    double fn2 = r.field_norm * r.field_norm;
    r.tail_fraction = (fn2 > 0) ? std::max(0.0, fn2 - sum * R2) / fn2 : 0.0;
    if (r.tail_fraction > tail_tol) throw BandLimitError(r.tail_fraction);
    return r;
}

// spectral tail mass above a momentum cutoff: || Op(1 - chi(|xi|)) u ||
inline double spectral_tail(const SphereCoefficients& co, double h, double cutoff) {
    double s = 0.0;
    for (int m = -co.mmax; m <= co.mmax; ++m) {
        if (co.c[m + co.mmax].empty()) continue;
        int am = std::abs(m);
        for (int l = am; l <= co.lmax; ++l) {
            double momentum = h * std::sqrt(l * (l + 1.0)) / co.radius;
            if (momentum > cutoff) s += std::norm(co.c[m + co.mmax][l - am]);
        }
    }
    return std::sqrt(s) * co.radius;
}

// ---------------------------------------------------------------------------
// reference eigenfunctions

// L^2-normalized zonal harmonic on the radius-R sphere; colatitude theta
inline double zonal_harmonic(int l, double theta, double R = 1.0) {
    return std::sqrt((2.0 * l + 1.0) / (4.0 * pi)) / R *
           legendre::legendre_p(l, std::cos(theta));
}

inline double zonal_eigen_h(int l, double R = 1.0) {
    return R / std::sqrt(static_cast<double>(l) * (l + 1.0));
}

// cluster-centered semiclassical parameter (the quasi-eigenvalue ladder of the
// R-sphere: lambda_l = (l + 1/2)/R)
inline double cluster_h(int l, double R = 1.0) { return R / (l + 0.5); }

// ---------------------------------------------------------------------------
// sup-norm scan

struct SupScan {
    double raw_max = 0.0;
    double scaled_max = 0.0;  // h^{(n-1)/2} raw_max
    double arg_theta = 0.0;
    double arg_phi = 0.0;
};

// coarse grid scan with local golden-section polish in both angles
inline SupScan sup_norm_scan(const std::function<double(double, double)>& abs_u, double h,
                             double theta_max = pi, int n_theta = 400, int n_phi = 64,
                             int dim = 2) {
    SupScan out;
    for (int i = 0; i <= n_theta; ++i) {
        double th = theta_max * i / n_theta;
        for (int j = 0; j < n_phi; ++j) {
            double ph = 2.0 * pi * j / n_phi;
            double v = abs_u(th, ph);
            if (v > out.raw_max) {
                out.raw_max = v;
                out.arg_theta = th;
                out.arg_phi = ph;
            }
        }
    }
    double dth = theta_max / n_theta;
    double th_lo = std::max(0.0, out.arg_theta - dth);
    double th_hi = std::min(theta_max, out.arg_theta + dth);
    double th = ode::golden_section_min(
        [&](double t) { return -abs_u(t, out.arg_phi); }, th_lo, th_hi, 1e-10);
    double dph = 2.0 * pi / n_phi;
    double ph = ode::golden_section_min(
        [&](double p) { return -abs_u(th, p); }, out.arg_phi - dph, out.arg_phi + dph,
        1e-10);
    double v = abs_u(th, ph);
    if (v > out.raw_max) {
        out.raw_max = v;
        out.arg_theta = th;
        out.arg_phi = ph;
    }
    out.scaled_max = std::pow(h, 0.5 * (dim - 1)) * out.raw_max;
    return out;
}

}  // namespace eigengrowth::quasimode
