#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "eigengrowth/bessel.hpp"
#include "eigengrowth/fft.hpp"
#include "eigengrowth/legendre.hpp"
#include "eigengrowth/manifold.hpp"
#include "eigengrowth/quasimode.hpp"
#include "eigengrowth/utils.hpp"

// Chart-based quantization on the sphere: pairings <Op_h(a) u, u> by direct
// quadrature of the Euclidean left-quantization formula in geodesic normal
// coordinates at the pole. Fields carry the quarter-power metric density so
// plain dx inner products in the chart equal L^2 inner products on the
// sphere; the induced symbol discrepancy is O(h).
//
// All fields here are radial (zonal harmonics, uniform-density modes), so
// their semiclassical Fourier transform is radial. Three pairing routes:
//   - momentum-only symbols: exact Plancherel reduction to 1-d,
//   - rotation-invariant symbols: angular Fourier modes contracted with
//     Bessel rows (separable symbols precompute the angular transform),
//   - localized symbols: direct box-by-box quadrature.

namespace eigengrowth::chartq {

using fft::cplx;
using manifold::pi;

// radial windowed quarter-density field in the polar normal chart,
// carried on a Gauss-Legendre radial rule (the pairing integrands oscillate
// at combined frequency up to ~3/h, which the rule is sized to resolve)
struct RadialChartField {
    double sphere_radius = 1.0;
    double h = 0.01;
    double r_max = 2.8;  // support end, strictly inside the chart radius
    int n_r = 0;
    std::vector<double> nodes, weights;  // Gauss-Legendre on (0, r_max)
    std::vector<double> v;               // quarter-density samples at the nodes

    // uniform table for point interpolation (localized symbol route)
    std::vector<double> table;
    double table_dr = 1.0;

    double node(int i) const { return nodes[i]; }
    double value(double r) const {
        if (r <= 0 || r >= r_max) return 0.0;
        double s = r / table_dr;
        auto i = static_cast<std::size_t>(s);
        if (i + 1 >= table.size()) return 0.0;
        double f = s - static_cast<double>(i);
        return table[i] * (1 - f) + table[i + 1] * f;
    }

    double chart_l2_norm() const {
        double s = 0;
        for (int i = 0; i < n_r; ++i) s += weights[i] * v[i] * v[i] * nodes[i];
        return std::sqrt(2 * pi * s);
    }
};

// smooth window, 1 on [0, r_on], 0 beyond r_off
inline double chart_window(double r, double r_on, double r_off) {
    if (r <= r_on) return 1.0;
    if (r >= r_off) return 0.0;
    return quasimode::RadialCutoff::smooth_step((r_off - r) / (r_off - r_on));
}

// quarter-power metric density in the polar chart: (det g)^{1/4} = sqrt(sin t/t)
inline double quarter_density(double r, double R) {
    double t = r / R;
    if (t < 1e-8) return 1.0;
    return std::sqrt(std::sin(t) / t);
}

inline RadialChartField make_radial_field(const std::function<double(double)>& u,
                                          double R, double h, double r_on, double r_off,
                                          double max_wavenumber_factor = 3.2) {
    RadialChartField f;
    f.sphere_radius = R;
    f.h = h;
    f.r_max = r_off;
    f.n_r = static_cast<int>(std::ceil(0.55 * max_wavenumber_factor * r_off / h)) + 64;
    auto gl = legendre::gauss_legendre(f.n_r);
    f.nodes.resize(f.n_r);
    f.weights.resize(f.n_r);
    f.v.resize(f.n_r);
    auto sample = [&](double r) {
        return u(r) * quarter_density(r, R) * chart_window(r, r_on, r_off);
    };
    for (int i = 0; i < f.n_r; ++i) {
        f.nodes[i] = 0.5 * r_off * (gl.nodes[i] + 1.0);
        f.weights[i] = 0.5 * r_off * gl.weights[i];
        f.v[i] = sample(f.nodes[i]);
    }
    f.table_dr = h / 12.0;
    f.table.resize(static_cast<std::size_t>(std::ceil(r_off / f.table_dr)) + 2);
    for (std::size_t i = 0; i < f.table.size(); ++i)
        f.table[i] = sample(static_cast<double>(i) * f.table_dr);
    return f;
}

inline RadialChartField make_zonal_chart_field(int l, double R, double h, double r_on,
                                               double r_off) {
    return make_radial_field(
        [l, R](double r) { return quasimode::zonal_harmonic(l, r / R, R); }, R, h, r_on,
        r_off);
}

// ---------------------------------------------------------------------------
// chart symbols

struct ChartSymbol {
    std::function<double(Vec2 x, Vec2 xi)> eval;
    std::string id = "symbol";

    // momentum support annulus
    double rho_min = 0.5, rho_max = 1.5;

    // route selectors (checked in order): momentum_only > separable /
    // rotation_invariant > localized box quadrature
    bool momentum_only = false;      // a = a(|xi|)
    bool rotation_invariant = false; // a(Rx, Rxi) = a(x, xi)
    double x_rmax = 2.8;             // base support for the invariant route

    // separable invariant symbols: a(x, xi) = angular(r, beta) * momentum(|xi|)
    std::function<double(double r, double beta)> angular_part;
    std::function<double(double rho)> momentum_part;

    // localized route: supports inside x_center +- x_halfwidth etc.
    bool localized = false;
    Vec2 x_center, xi_center;
    double x_halfwidth = 0.0, xi_halfwidth = 0.0;
};

namespace detail {

// semiclassical Fourier transform of a radial field:
// F(rho) = int e^{-i<y,xi>/h} u(y) dy = 2 pi int u(r) J_0(r rho/h) r dr
inline std::vector<double> radial_transform(const RadialChartField& u,
                                            const std::vector<double>& rho) {
    std::vector<double> F(rho.size(), 0.0);
    utils::parallel_for(rho.size(), [&](std::size_t a) {
        double s = 0;
        for (int i = 0; i < u.n_r; ++i) {
            double r = u.nodes[i];
            s += u.weights[i] * u.v[i] * bessel::j0(r * rho[a] / u.h) * r;
        }
        F[a] = 2 * pi * s;
    });
    return F;
}

}  // namespace detail

// <Op_h(a) u, u> for a radial field
inline cplx chart_pairing(const RadialChartField& u, const ChartSymbol& a,
                          int n_beta = 128) {
    const double h = u.h;
    const double pref = std::pow(2 * pi * h, -2.0);

    if (a.momentum_only) {
        // exact Plancherel reduction: (2 pi h)^{-2} int a(|xi|) |F(xi)|^2 dxi
        int n_rho = std::max(128, static_cast<int>(std::ceil(12.0 * (a.rho_max - a.rho_min) / h)));
        std::vector<double> rho(n_rho);
        double dk = (a.rho_max - a.rho_min) / n_rho;
        for (int i = 0; i < n_rho; ++i) rho[i] = a.rho_min + (i + 0.5) * dk;
        auto F = detail::radial_transform(u, rho);
        double s = 0;
        for (int i = 0; i < n_rho; ++i)
            s += a.eval({0, 0}, {rho[i], 0}) * F[i] * F[i] * rho[i];
        return pref * 2 * pi * s * dk;
    }

    if (a.rotation_invariant) {
        int n_rho = std::max(64, static_cast<int>(std::ceil(10.0 * (a.rho_max - a.rho_min) / h)));
        std::vector<double> rho(n_rho);
        double dk = (a.rho_max - a.rho_min) / n_rho;
        for (int i = 0; i < n_rho; ++i) rho[i] = a.rho_min + (i + 0.5) * dk;
        auto F = detail::radial_transform(u, rho);

        const int K = n_beta / 4;
        int nr_sym = 0;
        for (int i = 0; i < u.n_r; ++i)
            if (u.node(i) <= a.x_rmax) nr_sym = i + 1;

        const bool separable = static_cast<bool>(a.angular_part);
        // angular Fourier coefficients of the symbol per radial node
        std::vector<std::vector<cplx>> ang(nr_sym);
        if (separable) {
            utils::parallel_for(static_cast<std::size_t>(nr_sym), [&](std::size_t i) {
                double r = u.node(static_cast<int>(i));
                if (u.v[i] == 0.0) return;
                std::vector<cplx> row(n_beta);
                for (int b = 0; b < n_beta; ++b)
                    row[b] = a.angular_part(r, 2 * pi * b / n_beta);
                ang[i] = fft::coefficients(row);
            });
        }

        std::vector<cplx> acc(n_rho, 0.0);
        utils::parallel_for(static_cast<std::size_t>(n_rho), [&](std::size_t ri) {
            double rr = rho[ri];
            double mom = separable ? (a.momentum_part ? a.momentum_part(rr) : 1.0) : 1.0;
            if (separable && mom == 0.0) return;
            static const cplx ipow[4] = {cplx(1, 0), cplx(0, 1), cplx(-1, 0),
                                         cplx(0, -1)};
            std::vector<double> J;
            std::vector<cplx> row(n_beta);
            cplx I = 0.0;
            for (int i = 0; i < nr_sym; ++i) {
                if (u.v[i] == 0.0) continue;
                double r = u.node(i);
                const std::vector<cplx>* coefs;
                std::vector<cplx> local;
                if (separable) {
                    coefs = &ang[i];
                    if (coefs->empty()) continue;
                } else {
                    for (int b = 0; b < n_beta; ++b) {
                        double beta = 2 * pi * b / n_beta;
                        row[b] = a.eval({r * std::cos(beta), r * std::sin(beta)}, {rr, 0.0});
                    }
                    local = fft::coefficients(row);
                    coefs = &local;
                }
                bessel::row(r * rr / h, K, J);
                cplx s = 0.0;
                for (int k = -K; k <= K; ++k) {
                    cplx c = (*coefs)[(k % n_beta + n_beta) % n_beta];
                    if (std::norm(c) < 1e-60) continue;
                    int km = ((k % 4) + 4) % 4;
                    s += c * ipow[km] * J[std::abs(k)];
                }
                I += s * u.v[i] * r * u.weights[i];
            }
            acc[ri] = I * (2.0 * pi * mom);
        });
        cplx total = 0.0;
        for (int i = 0; i < n_rho; ++i) total += acc[i] * F[i] * rho[i] * dk;
        return pref * 2 * pi * total;
    }

    if (!a.localized)
        throw std::invalid_argument("chart symbol needs a pairing route");

    // localized route: box-by-box quadrature; F interpolated from a radial table
    double step = 2 * pi * h / 10.0;
    int nx = std::max(8, static_cast<int>(std::ceil(2 * a.x_halfwidth / step)));
    int nxi = std::max(8, static_cast<int>(std::ceil(2 * a.xi_halfwidth / step)));
    double rho_lo = std::max(1e-6, norm(a.xi_center) - 1.5 * a.xi_halfwidth);
    double rho_hi = norm(a.xi_center) + 1.5 * a.xi_halfwidth;
    int n_tab = std::max(64, static_cast<int>(std::ceil(12.0 * (rho_hi - rho_lo) / h)));
    std::vector<double> rho_tab(n_tab);
    double dt = (rho_hi - rho_lo) / (n_tab - 1);
    for (int i = 0; i < n_tab; ++i) rho_tab[i] = rho_lo + i * dt;
    auto F_tab = detail::radial_transform(u, rho_tab);
    auto F_at = [&](double rho) {
        double s = (rho - rho_lo) / dt;
        int i = std::clamp(static_cast<int>(std::floor(s)), 0, n_tab - 2);
        double f = s - i;
        return F_tab[i] * (1 - f) + F_tab[i + 1] * f;
    };

    double dx = 2 * a.x_halfwidth / nx, dxi = 2 * a.xi_halfwidth / nxi;
    std::vector<cplx> acc(static_cast<std::size_t>(nxi) * nxi, 0.0);
    utils::parallel_for(static_cast<std::size_t>(nxi) * nxi, [&](std::size_t idx) {
        int i1 = static_cast<int>(idx) / nxi, i2 = static_cast<int>(idx) % nxi;
        Vec2 xi{a.xi_center.x - a.xi_halfwidth + (i1 + 0.5) * dxi,
                a.xi_center.y - a.xi_halfwidth + (i2 + 0.5) * dxi};
        double Fv = F_at(norm(xi));
        if (Fv == 0.0) return;
        cplx inner = 0.0;
        for (int j1 = 0; j1 < nx; ++j1)
            for (int j2 = 0; j2 < nx; ++j2) {
                Vec2 x{a.x_center.x - a.x_halfwidth + (j1 + 0.5) * dx,
                       a.x_center.y - a.x_halfwidth + (j2 + 0.5) * dx};
                double av = a.eval(x, xi);
                if (av == 0.0) continue;
                inner += av * u.value(norm(x)) * std::polar(1.0, dot(x, xi) / h);
            }
        acc[idx] = inner * (dx * dx) * Fv;
    });
    cplx total = 0.0;
    for (const auto& z : acc) total += z;
    return pref * total * (dxi * dxi);
}

// ---------------------------------------------------------------------------
// geometric symbols

// smooth shell cutoff around |xi| = 1: identically 1 on the inner half of the
// band, rolling to 0 at the outer edge
inline double shell_window(double rho, double width) {
    double d = std::abs(rho - 1.0);
    double p = 0.5 * width;
    if (d <= p) return 1.0;
    if (d >= width) return 0.0;
    return quasimode::RadialCutoff::smooth_step((width - d) / (width - p));
}

// a = chi(|xi|), equal to 1 on the working shell: the identity on compactly
// microlocalized fields; pairing gives the L^2 mass
inline ChartSymbol shell_symbol(double width = 0.45) {
    ChartSymbol s;
    s.momentum_only = true;
    s.rho_min = std::max(0.0, 1.0 - width);
    s.rho_max = 1.0 + width;
    s.id = "shell";
    s.eval = [width](Vec2, Vec2 xi) { return shell_window(norm(xi), width); };
    return s;
}

// Flow-tube union symbol: covectors within `dir_radius` of the meridian
// directions over a colatitude window (smooth edges). The mirrored variant is
// the antipodal-chart companion evaluated through the symmetry of zonal-type
// fields; summing both pairings accounts for the full colatitude range.
struct TubeUnionParams {
    double dir_radius = 0.2;
    double theta_hi = 0.85 * pi;
    double edge = 0.35;
    double shell_width = 0.35;
    bool mirrored = false;
};

inline ChartSymbol tube_union_symbol(const TubeUnionParams& p, double R = 1.0) {
    ChartSymbol s;
    s.rotation_invariant = true;
    s.rho_min = std::max(0.0, 1.0 - p.shell_width);
    s.rho_max = 1.0 + p.shell_width;
    s.x_rmax = p.mirrored ? (pi * R) : p.theta_hi * R;
    s.id = p.mirrored ? "tube-union-mirror" : "tube-union";
    auto window = [p](double theta) {
        if (!p.mirrored)
            return quasimode::RadialCutoff::smooth_step((p.theta_hi - theta) / p.edge);
        return 1.0 -
               quasimode::RadialCutoff::smooth_step((p.theta_hi - (pi - theta)) / p.edge);
    };
    double Rc = R;
    s.angular_part = [p, window, Rc](double r, double beta) {
        double win = window(r / Rc);
        if (win == 0.0) return 0.0;
        double m = std::abs(std::sin(beta));
        double dir = quasimode::RadialCutoff::smooth_step(2.0 - 2.0 * m / p.dir_radius);
        return win * dir;
    };
    s.momentum_part = [p](double rho) { return shell_window(rho, p.shell_width); };
    auto ap = s.angular_part;
    auto mp = s.momentum_part;
    s.eval = [ap, mp](Vec2 x, Vec2 xi) {
        double r = norm(x), rho = norm(xi);
        if (rho < 1e-12) return 0.0;
        double beta;
        if (r < 1e-9) {
            beta = 0.0;  // at the pole every direction counts as meridian
        } else {
            double c = std::clamp(dot(xi, x) / (r * rho), -1.0, 1.0);
            beta = std::acos(std::abs(c));
        }
        return ap(r, beta) * mp(rho);
    };
    return s;
}

// bump symbol localized near (x*, xi*) in the chart
inline ChartSymbol bump_symbol(Vec2 x0, double xw, Vec2 xi0, double xiw,
                               const std::string& id = "bump") {
    ChartSymbol s;
    s.localized = true;
    s.x_center = x0;
    s.xi_center = xi0;
    s.x_halfwidth = 1.05 * xw;
    s.xi_halfwidth = 1.05 * xiw;
    s.rho_min = std::max(0.05, norm(xi0) - 1.5 * xiw);
    s.rho_max = norm(xi0) + 1.5 * xiw;
    s.id = id;
    s.eval = [x0, xw, xi0, xiw](Vec2 x, Vec2 xi) {
        double dx = norm(x - x0) / xw, dxi = norm(xi - xi0) / xiw;
        return quasimode::RadialCutoff::smooth_step(1.0 - dx) *
               quasimode::RadialCutoff::smooth_step(1.0 - dxi);
    };
    return s;
}

// ---------------------------------------------------------------------------
// rotation-invariant symbols through geometric invariants: colatitude theta,
// heading psi of the bicharacteristic against the outward meridian direction,
// and the metric momentum norm. The great-circle flow acts on these by closed
// navigation formulas, which makes flow-composed symbols cheap to evaluate.

struct SphereInvariants {
    double theta = 0.0;  // colatitude of the base point
    double psi = 0.0;    // heading against the outward meridian direction
    double rho_g = 1.0;  // |xi|_g
};

inline SphereInvariants chart_invariants(Vec2 x, Vec2 xi, double R) {
    SphereInvariants q;
    double r = norm(x);
    q.theta = r / R;
    double t = q.theta < 1e-9 ? 1.0 : std::sin(q.theta) / q.theta;  // |e_tan|_g
    // |xi|_g^2 = Abar |xi|^2 + Cbar (xi . x)^2 with Abar = 1/t^2 on the
    // tangential part; split xi into radial/tangential chart components
    if (r < 1e-12) {
        q.rho_g = norm(xi);
        q.psi = 0.0;
        return q;
    }
    Vec2 er = x / r;
    Vec2 et{-er.y, er.x};
    double xr = dot(xi, er);       // <v, e_r>_g with v = g^{-1} xi
    double xt = dot(xi, et) / t;   // <v, e_t/|e_t|>_g
    q.rho_g = std::sqrt(xr * xr + xt * xt);
    q.psi = std::atan2(xt, xr);
    return q;
}

// flow for time `t` at speed 2 |xi|_g; closed-form great-circle navigation
inline SphereInvariants flow_invariants(const SphereInvariants& q, double t, double R) {
    double sigma = 2.0 * t * q.rho_g / R;  // arclength / R on the unit sphere
    double ct = std::cos(q.theta), st = std::sin(q.theta);
    double cs = std::cos(sigma), ss = std::sin(sigma);
    double cp = std::cos(q.psi), sp = std::sin(q.psi);
    SphereInvariants out;
    out.rho_g = q.rho_g;
    double cth2 = ct * cs - st * ss * cp;  // psi measured from the outward direction
    cth2 = std::clamp(cth2, -1.0, 1.0);
    out.theta = std::acos(cth2);
    double st2 = std::sin(out.theta);
    if (st2 < 1e-12) {
        out.psi = 0.0;
        return out;
    }
    double cpsi2 = (ct * ss + st * cs * cp) / st2;
    double spsi2 = sp * st / st2;  // Clairaut: sin(theta) sin(psi) is conserved
    out.psi = std::atan2(spsi2, std::clamp(cpsi2, -1.0, 1.0));
    return out;
}

inline ChartSymbol invariant_symbol(std::function<double(SphereInvariants)> f, double R,
                                    double rho_min, double rho_max, double x_rmax,
                                    const std::string& id) {
    ChartSymbol s;
    s.rotation_invariant = true;
    s.rho_min = rho_min;
    s.rho_max = rho_max;
    s.x_rmax = x_rmax;
    s.id = id;
    s.eval = [f, R](Vec2 x, Vec2 xi) { return f(chart_invariants(x, xi, R)); };
    return s;
}

inline ChartSymbol compose_invariant_backward(
    const std::function<double(SphereInvariants)>& f, double t, double R, double rho_min,
    double rho_max, double x_rmax, const std::string& id) {
    ChartSymbol s;
    s.rotation_invariant = true;
    s.rho_min = rho_min;
    s.rho_max = rho_max;
    s.x_rmax = x_rmax;
    s.id = id + "@G(-t)";
    s.eval = [f, t, R](Vec2 x, Vec2 xi) {
        return f(flow_invariants(chart_invariants(x, xi, R), -t, R));
    };
    return s;
}

// composition with the exact backward great-circle flow at speed 2 (the
// bicharacteristic flow of the Laplace-type symbol on the R-sphere)
inline ChartSymbol compose_with_backward_flow(const ChartSymbol& a, double t, double R) {
    ChartSymbol out;
    out.id = a.id + "@G(-t)";
    out.rho_min = a.rho_min;
    out.rho_max = a.rho_max;
    out.rotation_invariant = a.rotation_invariant || a.momentum_only;
    out.x_rmax = std::min(0.95 * pi * R, a.x_rmax + 2.0 * std::abs(t) + 0.1);
    auto base = a.eval;
    out.eval = [base, t, R](Vec2 x, Vec2 xi) {
        manifold::ManifoldModel sph = manifold::ManifoldModel::sphere(R);
        double r = norm(x);
        if (r >= 0.98 * pi * R) return 0.0;
        manifold::ChartPoint p{manifold::kChartNorth, x};
        Vec3 P = manifold::sphere_embed(sph, p);
        auto dE = manifold::sphere_dembed(sph, p);
        Mat2 ginv = manifold::metric_jet(sph, p).ginv;
        Vec2 w = ginv * xi;
        Vec3 V = dE[0] * w.x + dE[1] * w.y;
        double speed = norm(V);
        if (speed < 1e-12) return base(x, xi);
        Vec3 axis = cross(P, V);
        double an = norm(axis);
        if (an < 1e-14) return base(x, xi);
        axis = axis / an;
        double ang = -2.0 * t * speed / R;
        double ca = std::cos(ang), sa = std::sin(ang);
        auto rot = [&](const Vec3& q) {
            return q * ca + cross(axis, q) * sa + axis * (dot(axis, q) * (1 - ca));
        };
        Vec3 P2 = rot(P), V2 = rot(V);
        Vec2 x2;
        try {
            x2 = manifold::sphere_chart_coords(sph, manifold::kChartNorth, P2);
        } catch (const std::domain_error&) {
            return 0.0;
        }
        manifold::ChartPoint p2{manifold::kChartNorth, x2};
        auto dE2 = manifold::sphere_dembed(sph, p2);
        Mat2 gram{{dot(dE2[0], dE2[0]), dot(dE2[0], dE2[1]), dot(dE2[1], dE2[0]),
                   dot(dE2[1], dE2[1])}};
        Vec2 rhs{dot(dE2[0], V2), dot(dE2[1], V2)};
        Vec2 w2 = inverse(gram) * rhs;
        Vec2 xi2 = manifold::metric_jet(sph, p2).g * w2;
        return base(x2, xi2);
    };
    return out;
}

}  // namespace eigengrowth::chartq
