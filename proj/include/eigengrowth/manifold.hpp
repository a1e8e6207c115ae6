#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "eigengrowth/linalg.hpp"
#include "eigengrowth/ode.hpp"

// Closed-form model geometries: round spheres, flat tori and surfaces of
// revolution. Charts, metric data with first and second derivatives,
// distances, injectivity radii and normal coordinates.
//
// Sphere atlas: two geodesic normal charts centered at antipodal poles plus
// an auxiliary colatitude/longitude chart for I/O. Flow integration never
// approaches a coordinate singularity because chart switching happens well
// inside both polar caps.

namespace eigengrowth::manifold {

inline constexpr double pi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// periodic cubic spline for surface-of-revolution profiles

class ProfileSpline {
  public:
    ProfileSpline() = default;

    ProfileSpline(std::vector<double> samples, double period)
        : y_(std::move(samples)), period_(period) {
        const std::size_t n = y_.size();
        if (n < 4) throw std::domain_error("profile needs at least 4 samples");
        for (double v : y_)
            if (!(v > 0.0)) throw std::domain_error("profile must be positive");
        h_ = period_ / static_cast<double>(n);
        solve_second_derivatives();
    }

    bool valid() const { return !y_.empty(); }
    double period() const { return period_; }

    double eval(double s) const { return piece(s).value; }
    double deriv(double s) const { return piece(s).d1; }
    double deriv2(double s) const { return piece(s).d2; }
    double deriv3(double s) const { return piece(s).d3; }

    double min_value() const {
        double m = y_[0];
        for (double v : y_) m = std::min(m, v);
        return m;
    }

  private:
    struct Jet {
        double value, d1, d2, d3;
    };

    Jet piece(double s) const {
        const std::size_t n = y_.size();
        double sw = std::fmod(s, period_);
        if (sw < 0) sw += period_;
        std::size_t i = std::min(static_cast<std::size_t>(sw / h_), n - 1);
        std::size_t j = (i + 1) % n;
        double a = (static_cast<double>(i + 1) * h_ - sw) / h_;  // toward node i
        double b = 1.0 - a;
        double v = a * y_[i] + b * y_[j] +
                   ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[j]) * h_ * h_ / 6.0;
        double d1 = (y_[j] - y_[i]) / h_ +
                    ((3 * b * b - 1) * m_[j] - (3 * a * a - 1) * m_[i]) * h_ / 6.0;
        double d2 = a * m_[i] + b * m_[j];
        double d3 = (m_[j] - m_[i]) / h_;
        return {v, d1, d2, d3};
    }

    void solve_second_derivatives() {
        // cyclic tridiagonal system for natural periodic spline
        const std::size_t n = y_.size();
        std::vector<double> d(n);
        for (std::size_t i = 0; i < n; ++i) {
            double ym = y_[(i + n - 1) % n], y0 = y_[i], yp = y_[(i + 1) % n];
            d[i] = 6.0 * (ym - 2.0 * y0 + yp) / (h_ * h_);
        }
        // system: m[i-1] + 4 m[i] + m[i+1] = d[i], cyclic; Sherman-Morrison
        auto solve_tri = [&](std::vector<double> rhs) {
            std::vector<double> c(n, 1.0), b(n, 4.0), a(n, 1.0), x(n);
            b[0] -= 1.0;       // subtract corner via rank-1 update u v^T
            b[n - 1] -= 1.0;   // u = (1,0,...,0,1)^T, gamma = 1
            // Thomas
            std::vector<double> cp(n), dp(n);
            cp[0] = c[0] / b[0];
            dp[0] = rhs[0] / b[0];
            for (std::size_t i = 1; i < n; ++i) {
                double mdiv = b[i] - a[i] * cp[i - 1];
                cp[i] = c[i] / mdiv;
                dp[i] = (rhs[i] - a[i] * dp[i - 1]) / mdiv;
            }
            x[n - 1] = dp[n - 1];
            for (std::size_t i = n - 1; i-- > 0;) x[i] = dp[i] - cp[i] * x[i + 1];
            return x;
        };
        std::vector<double> u(n, 0.0);
        u[0] = 1.0;
        u[n - 1] = 1.0;
        auto x1 = solve_tri(d);
        auto x2 = solve_tri(u);
        double denom = 1.0 + x2[0] + x2[n - 1];
        double fact = (x1[0] + x1[n - 1]) / denom;
        m_.resize(n);
        for (std::size_t i = 0; i < n; ++i) m_[i] = x1[i] - fact * x2[i];
    }

    std::vector<double> y_;
    std::vector<double> m_;
    double period_ = 0.0;
    double h_ = 0.0;
};

// ---------------------------------------------------------------------------

enum class ModelKind { RoundSphere, FlatTorus, SurfaceOfRevolution };

// Sphere chart ids
inline constexpr int kChartNorth = 0;     // normal coordinates at north pole
inline constexpr int kChartSouth = 1;     // normal coordinates at south pole
inline constexpr int kChartSpherical = 2; // (colatitude, longitude), I/O only

struct ManifoldModel {
    ModelKind kind = ModelKind::RoundSphere;
    int dim = 2;
    double radius = 1.0;
    std::array<double, 2> periods{2.0 * pi, 2.0 * pi};
    ProfileSpline profile;

    static ManifoldModel sphere(double R) {
        if (!(R > 0)) throw std::domain_error("sphere radius must be positive");
        ManifoldModel m;
        m.kind = ModelKind::RoundSphere;
        m.radius = R;
        return m;
    }
    static ManifoldModel torus(double L1, double L2) {
        if (!(L1 > 0) || !(L2 > 0)) throw std::domain_error("torus periods must be positive");
        ManifoldModel m;
        m.kind = ModelKind::FlatTorus;
        m.periods = {L1, L2};
        return m;
    }
    static ManifoldModel surface_of_revolution(std::vector<double> rho, double s_period) {
        ManifoldModel m;
        m.kind = ModelKind::SurfaceOfRevolution;
        m.profile = ProfileSpline(std::move(rho), s_period);
        return m;
    }

    // fraction of the polar cap covered by each sphere normal chart
    double sphere_chart_radius() const { return 0.92 * pi * radius; }
};

struct ChartPoint {
    int chart = 0;
    Vec2 u;
};

// ---------------------------------------------------------------------------
// scalar profile of the sphere metric in geodesic normal coordinates:
//   g   = A(u) I + C(u) v v^T,      u = |v|^2
//   g^-1= Ab(u) I + Cb(u) v v^T
// with A = sin^2(t)/t^2, t = |v|/R. Series branches avoid cancellation.

namespace detail {

struct SphereScalars {
    double A, C, Ab, Cb;
    double dA, dC, dAb, dCb;     // d/du
    double d2Ab, d2Cb;           // d^2/du^2
};

inline SphereScalars sphere_scalars(double u, double R) {
    SphereScalars s{};
    const double R2 = R * R, R4 = R2 * R2, R6 = R4 * R2, R8 = R4 * R4, R10 = R8 * R2;
    const double t = std::sqrt(u) / R;
    if (t < 0.1) {
        const double u2 = u * u, u3 = u2 * u;
        s.A = 1 - u / (3 * R2) + 2 * u2 / (45 * R4) - u3 / (315 * R6);
        s.dA = (-105 * R4 + 28 * R2 * u - 3 * u2) / (315 * R6);
        s.C = (4725 * R6 - 630 * R4 * u + 45 * R2 * u2 - 2 * u3) / (14175 * R8);
        s.dC = 2 * (-105 * R4 + 15 * R2 * u - u2) / (4725 * R8);
        s.Ab = 1 + u / (3 * R2) + u2 / (15 * R4) + 2 * u3 / (189 * R6);
        s.dAb = (105 * R4 + 42 * R2 * u + 10 * u2) / (315 * R6);
        s.d2Ab = 2 * (105 * R4 + 50 * R2 * u + 14 * u2) / (1575 * R8);
        s.Cb = -(1575 * R6 + 315 * R4 * u + 50 * R2 * u2 + 7 * u3) / (4725 * R8);
        s.dCb = -(315 * R4 + 100 * R2 * u + 21 * u2) / (4725 * R8);
        s.d2Cb = -2 * (550 * R4 + 231 * R2 * u + 60 * u2) / (51975 * R10);
    } else {
        const double st = std::sin(t), ct = std::cos(t);
        const double s2t = std::sin(2 * t), c2t = std::cos(2 * t);
        const double t2 = t * t, t3 = t2 * t, t4 = t2 * t2, t6 = t4 * t2;
        s.A = st * st / t2;
        s.dA = (t * s2t + c2t - 1) / (2 * R2 * t4);
        s.C = (1 - s.A) / u;
        s.dC = (-t2 - t * s2t / 2 + 2 * st * st) / (R4 * t6);
        s.Ab = t2 / (st * st);
        s.dAb = (st - t * ct) / (R2 * st * st * st);
        s.d2Ab = (t * c2t / 2 + t - 0.75 * s2t) / (R4 * t * st * st * st * st);
        s.Cb = (1 - s.Ab) / u;
        s.dCb = (t3 * ct / (st * st * st) - 1) / (R4 * t4);
        s.d2Cb = (2 * t4 / (st * st) - 3 * t4 / (st * st * st * st) -
                  t3 * ct / (st * st * st) + 4) /
                 (2 * R6 * t6);
    }
    return s;
}

// 3x3 rotation, row major
struct Rot3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};
    Vec3 apply(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
    Vec3 apply_transpose(const Vec3& v) const {
        return {m[0] * v.x + m[3] * v.y + m[6] * v.z,
                m[1] * v.x + m[4] * v.y + m[7] * v.z,
                m[2] * v.x + m[5] * v.y + m[8] * v.z};
    }
};

inline Rot3 sphere_chart_rotation(int chart) {
    if (chart == kChartNorth) return {};
    // south chart: rotation by pi about the x-axis
    return Rot3{{1, 0, 0, 0, -1, 0, 0, 0, -1}};
}

// rotation taking the unit vector c to e_z (for normal charts at arbitrary centers)
inline Rot3 rotation_to_pole(const Vec3& c_unit) {
    const Vec3 z{0, 0, 1};
    Vec3 ax = cross(c_unit, z);
    double s = norm(ax), c = dot(c_unit, z);
    if (s < 1e-14) {
        if (c > 0) return {};
        return Rot3{{1, 0, 0, 0, -1, 0, 0, 0, -1}};
    }
    ax = ax / s;
    double angle = std::atan2(s, c);
    double ca = std::cos(angle), sa = std::sin(angle), om = 1 - ca;
    return Rot3{{ca + ax.x * ax.x * om, ax.x * ax.y * om - ax.z * sa, ax.x * ax.z * om + ax.y * sa,
                 ax.y * ax.x * om + ax.z * sa, ca + ax.y * ax.y * om, ax.y * ax.z * om - ax.x * sa,
                 ax.z * ax.x * om - ax.y * sa, ax.z * ax.y * om + ax.x * sa, ca + ax.z * ax.z * om}};
}

// f(r) = R sin(r/R)/r and f'(r), series-protected
inline double sphere_f(double r, double R) {
    double t = r / R;
    if (t < 1e-4) return 1.0 - t * t / 6.0 + t * t * t * t / 120.0;
    return std::sin(t) / t;
}
inline double sphere_df(double r, double R) {
    double t = r / R;
    if (t < 1e-4) return (-t / 3.0 + t * t * t / 30.0) / R;
    return (t * std::cos(t) - std::sin(t)) / (t * t) / R;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// metric data

struct MetricJet {
    Mat2 g, ginv;
    std::array<Mat2, 2> dg{};     // dg[k] = d g / d u_k
    std::array<Mat2, 2> dginv{};
    std::array<Mat2, 3> d2ginv{}; // (0,0), (0,1)=(1,0), (1,1)
};

inline bool in_chart_domain(const ManifoldModel& m, const ChartPoint& p) {
    switch (m.kind) {
        case ModelKind::RoundSphere:
            if (p.chart == kChartSpherical) return p.u.x > 0.0 && p.u.x < pi;
            if (p.chart == kChartNorth || p.chart == kChartSouth)
                return norm(p.u) < m.sphere_chart_radius();
            return false;
        case ModelKind::FlatTorus:
            return p.chart == 0;
        case ModelKind::SurfaceOfRevolution:
            return p.chart == 0;
    }
    return false;
}

inline void require_in_chart(const ManifoldModel& m, const ChartPoint& p) {
    if (!in_chart_domain(m, p)) throw std::domain_error("point outside chart domain");
}

inline MetricJet metric_jet(const ManifoldModel& m, const ChartPoint& p) {
    require_in_chart(m, p);
    MetricJet j;
    switch (m.kind) {
        case ModelKind::FlatTorus: {
            j.g = Mat2::identity();
            j.ginv = Mat2::identity();
            return j;
        }
        case ModelKind::RoundSphere: {
            if (p.chart == kChartSpherical) {
                const double R2 = m.radius * m.radius;
                double th = p.u.x, st = std::sin(th), ct = std::cos(th);
                j.g = Mat2{{R2, 0, 0, R2 * st * st}};
                j.ginv = Mat2{{1 / R2, 0, 0, 1 / (R2 * st * st)}};
                j.dg[0] = Mat2{{0, 0, 0, 2 * R2 * st * ct}};
                j.dginv[0] = Mat2{{0, 0, 0, -2 * ct / (R2 * st * st * st)}};
                j.d2ginv[0] =
                    Mat2{{0, 0, 0, (2 + 4 * ct * ct) / (R2 * st * st * st * st)}};
                return j;
            }
            const Vec2 v = p.u;
            const double u = norm2(v);
            const auto s = detail::sphere_scalars(u, m.radius);
            const Mat2 I = Mat2::identity();
            const Mat2 vv = outer(v, v);
            j.g = s.A * I + s.C * vv;
            j.ginv = s.Ab * I + s.Cb * vv;
            for (int k = 0; k < 2; ++k) {
                Mat2 e;  // d(vv^T)/dv_k = e_k v^T + v e_k^T
                Vec2 ek = (k == 0) ? Vec2{1, 0} : Vec2{0, 1};
                e = outer(ek, v) + outer(v, ek);
                j.dg[k] = (2 * v[k] * s.dA) * I + (2 * v[k] * s.dC) * vv + s.C * e;
                j.dginv[k] = (2 * v[k] * s.dAb) * I + (2 * v[k] * s.dCb) * vv + s.Cb * e;
            }
            // second derivatives of ginv
            auto idx = [](int k, int l) { return (k == 0 && l == 0) ? 0 : (k == 1 && l == 1 ? 2 : 1); };
            for (int k = 0; k < 2; ++k)
                for (int l = k; l < 2; ++l) {
                    Vec2 ek = (k == 0) ? Vec2{1, 0} : Vec2{0, 1};
                    Vec2 el = (l == 0) ? Vec2{1, 0} : Vec2{0, 1};
                    double dkl = (k == l) ? 1.0 : 0.0;
                    Mat2 ekv = outer(ek, v) + outer(v, ek);
                    Mat2 elv = outer(el, v) + outer(v, el);
                    Mat2 ekl = outer(ek, el) + outer(el, ek);
                    Mat2 r = (4 * v[k] * v[l] * s.d2Ab + 2 * dkl * s.dAb) * I;
                    r = r + (4 * v[k] * v[l] * s.d2Cb + 2 * dkl * s.dCb) * vv;
                    r = r + (2 * v[k] * s.dCb) * elv + (2 * v[l] * s.dCb) * ekv;
                    r = r + s.Cb * ekl;
                    j.d2ginv[idx(k, l)] = r;
                }
            return j;
        }
        case ModelKind::SurfaceOfRevolution: {
            // coordinates (s, phi), metric ds^2 + rho(s)^2 dphi^2
            double sarc = p.u.x;
            double rho = m.profile.eval(sarc);
            double r1 = m.profile.deriv(sarc);
            double r2 = m.profile.deriv2(sarc);
            double r3 = m.profile.deriv3(sarc);
            j.g = Mat2{{1, 0, 0, rho * rho}};
            double iq = 1.0 / (rho * rho);
            j.ginv = Mat2{{1, 0, 0, iq}};
            j.dg[0] = Mat2{{0, 0, 0, 2 * rho * r1}};
            j.dginv[0] = Mat2{{0, 0, 0, -2 * r1 / (rho * rho * rho)}};
            j.d2ginv[0] = Mat2{{0, 0, 0, (6 * r1 * r1 - 2 * rho * r2) / (rho * rho * rho * rho)}};
            // d/ds of d2ginv would need r3; only first two derivative levels are
            // used by the variational flow, r3 kept for curvature derivative needs
            (void)r2;
            (void)r3;
            return j;
        }
    }
    throw std::logic_error("unreachable");
}

inline Mat2 metric_at(const ManifoldModel& m, const ChartPoint& p) {
    return metric_jet(m, p).g;
}

// Gamma^k_{ij}; result[k](i,j)
inline std::array<Mat2, 2> christoffel_at(const ManifoldModel& m, const ChartPoint& p) {
    MetricJet j = metric_jet(m, p);
    std::array<Mat2, 2> gamma{};
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
            for (int jj = 0; jj < 2; ++jj) {
                double sum = 0;
                for (int l = 0; l < 2; ++l)
                    sum += j.ginv(k, l) *
                           (j.dg[i](jj, l) + j.dg[jj](i, l) - j.dg[l](i, jj));
                gamma[k](i, jj) = 0.5 * sum;
            }
    return gamma;
}

// ---------------------------------------------------------------------------
// embeddings and canonical forms

inline Vec3 sphere_embed(const ManifoldModel& m, const ChartPoint& p) {
    const double R = m.radius;
    if (p.chart == kChartSpherical) {
        double th = p.u.x, ph = p.u.y;
        return {R * std::sin(th) * std::cos(ph), R * std::sin(th) * std::sin(ph),
                R * std::cos(th)};
    }
    require_in_chart(m, p);
    const double r = norm(p.u);
    double f = detail::sphere_f(r, R);
    Vec3 e{f * p.u.x, f * p.u.y, R * std::cos(r / R)};
    return detail::sphere_chart_rotation(p.chart).apply_transpose(e);
}

// inverse of sphere_embed into a given normal chart; throws if out of range
inline Vec2 sphere_chart_coords(const ManifoldModel& m, int chart, const Vec3& P) {
    Vec3 q = detail::sphere_chart_rotation(chart).apply(P);
    const double R = m.radius;
    double rho = std::sqrt(q.x * q.x + q.y * q.y);
    double theta = std::atan2(rho, q.z);
    double r = R * theta;
    if (r >= m.sphere_chart_radius()) throw std::domain_error("point outside chart domain");
    if (rho < 1e-300) return {0, 0};
    return {r * q.x / rho, r * q.y / rho};
}

inline Vec2 wrap_to_torus(const ManifoldModel& m, Vec2 x) {
    for (int i = 0; i < 2; ++i) {
        x[i] = std::fmod(x[i], m.periods[i]);
        if (x[i] < 0) x[i] += m.periods[i];
    }
    return x;
}

// canonical representative (torus/surface wrap; sphere picks best polar chart)
inline ChartPoint canonical(const ManifoldModel& m, const ChartPoint& p) {
    switch (m.kind) {
        case ModelKind::FlatTorus:
            return {0, wrap_to_torus(m, p.u)};
        case ModelKind::SurfaceOfRevolution: {
            Vec2 u = p.u;
            u.x = std::fmod(u.x, m.profile.period());
            if (u.x < 0) u.x += m.profile.period();
            u.y = std::fmod(u.y, 2 * pi);
            if (u.y < 0) u.y += 2 * pi;
            return {0, u};
        }
        case ModelKind::RoundSphere: {
            Vec3 P = sphere_embed(m, p);
            int chart = (P.z >= 0) ? kChartNorth : kChartSouth;
            return {chart, sphere_chart_coords(m, chart, P)};
        }
    }
    throw std::logic_error("unreachable");
}

// express p in the coordinates of to_chart (sphere charts only need this)
inline ChartPoint transition(const ManifoldModel& m, const ChartPoint& p, int to_chart) {
    if (p.chart == to_chart) return p;
    if (m.kind != ModelKind::RoundSphere) return canonical(m, p);
    Vec3 P = sphere_embed(m, p);
    if (to_chart == kChartSpherical) {
        double th = std::atan2(std::sqrt(P.x * P.x + P.y * P.y), P.z);
        double ph = std::atan2(P.y, P.x);
        return {kChartSpherical, {th, ph}};
    }
    return {to_chart, sphere_chart_coords(m, to_chart, P)};
}

// differential of the normal-chart embedding, 3x2, columns d(embed)/d(v_k)
inline std::array<Vec3, 2> sphere_dembed(const ManifoldModel& m, const ChartPoint& p) {
    require_in_chart(m, p);
    if (p.chart == kChartSpherical) {
        double R = m.radius, th = p.u.x, ph = p.u.y;
        Vec3 dth{R * std::cos(th) * std::cos(ph), R * std::cos(th) * std::sin(ph),
                 -R * std::sin(th)};
        Vec3 dph{-R * std::sin(th) * std::sin(ph), R * std::sin(th) * std::cos(ph), 0};
        return {dth, dph};
    }
    const double R = m.radius, r = norm(p.u);
    double f = detail::sphere_f(r, R), df = detail::sphere_df(r, R);
    auto rot = detail::sphere_chart_rotation(p.chart);
    std::array<Vec3, 2> cols;
    for (int k = 0; k < 2; ++k) {
        Vec2 ek = (k == 0) ? Vec2{1, 0} : Vec2{0, 1};
        double rk = (r > 1e-300) ? p.u[k] / r : 0.0;
        Vec3 col{df * rk * p.u.x + f * ek.x, df * rk * p.u.y + f * ek.y,
                 -std::sin(r / R) * rk};
        cols[k] = rot.apply_transpose(col);
    }
    return cols;
}

// move a covector at p into the coordinates of to_chart
struct TransportedCovector {
    ChartPoint point;
    Vec2 xi;
};

inline TransportedCovector covector_transition(const ManifoldModel& m, const ChartPoint& p,
                                               const Vec2& xi, int to_chart) {
    if (m.kind != ModelKind::RoundSphere) {
        ChartPoint q = canonical(m, p);
        return {q, xi};
    }
    if (p.chart == to_chart) return {p, xi};
    ChartPoint q = transition(m, p, to_chart);
    // push the raised vector through the embedding, pull back, lower
    MetricJet jp = metric_jet(m, p), jq = metric_jet(m, q);
    Vec2 w = jp.ginv * xi;  // vector components
    auto dp = sphere_dembed(m, p);
    Vec3 W = dp[0] * w.x + dp[1] * w.y;
    auto dq = sphere_dembed(m, q);
    // least squares: solve (dq^T dq) w' = dq^T W  (exact: W tangent)
    Mat2 gram{{dot(dq[0], dq[0]), dot(dq[0], dq[1]), dot(dq[1], dq[0]), dot(dq[1], dq[1])}};
    Vec2 rhs{dot(dq[0], W), dot(dq[1], W)};
    Vec2 wq = inverse(gram) * rhs;
    return {q, jq.g * wq};
}

// ---------------------------------------------------------------------------
// distance and injectivity radius

inline double distance(const ManifoldModel& m, const ChartPoint& a, const ChartPoint& b) {
    switch (m.kind) {
        case ModelKind::RoundSphere: {
            Vec3 A = sphere_embed(m, a), B = sphere_embed(m, b);
            double chord = norm(A - B);
            return 2.0 * m.radius * std::asin(std::min(1.0, chord / (2.0 * m.radius)));
        }
        case ModelKind::FlatTorus: {
            Vec2 d = wrap_to_torus(m, a.u - b.u);
            double dx = std::min(d.x, m.periods[0] - d.x);
            double dy = std::min(d.y, m.periods[1] - d.y);
            return std::sqrt(dx * dx + dy * dy);
        }
        case ModelKind::SurfaceOfRevolution: {
            // chart-local estimate: accurate near the diagonal, used by the
            // return detector as a proximity measure only
            ChartPoint ca = canonical(m, a), cb = canonical(m, b);
            double Ls = m.profile.period();
            double ds = std::fmod(ca.u.x - cb.u.x, Ls);
            if (ds < -Ls / 2) ds += Ls;
            if (ds > Ls / 2) ds -= Ls;
            double dphi = std::fmod(ca.u.y - cb.u.y, 2 * pi);
            if (dphi < -pi) dphi += 2 * pi;
            if (dphi > pi) dphi -= 2 * pi;
            double rho = m.profile.eval(0.5 * (ca.u.x + cb.u.x));
            return std::sqrt(ds * ds + rho * rho * dphi * dphi);
        }
    }
    throw std::logic_error("unreachable");
}

struct InjectivityRadius {
    double value = 0.0;
    bool exact = true;  // false: certified numerical lower bound
};

inline InjectivityRadius injectivity_radius(const ManifoldModel& m) {
    switch (m.kind) {
        case ModelKind::RoundSphere:
            return {pi * m.radius, true};
        case ModelKind::FlatTorus:
            return {0.5 * std::min(m.periods[0], m.periods[1]), true};
        case ModelKind::SurfaceOfRevolution: {
            // lower bound: conjugate-point bound pi/sqrt(max K) with
            // K = -rho''/rho, and half the shortest closed geodesic among
            // profile loops and critical-parallel circles
            double Ls = m.profile.period();
            double kmax = 0.0;
            double min_crit_rho = std::numeric_limits<double>::infinity();
            const int N = 2048;
            double prev_d1 = m.profile.deriv(0.0);
            for (int i = 1; i <= N; ++i) {
                double s = Ls * static_cast<double>(i) / N;
                double K = -m.profile.deriv2(s) / m.profile.eval(s);
                kmax = std::max(kmax, K);
                double d1 = m.profile.deriv(s);
                if (prev_d1 * d1 <= 0.0)
                    min_crit_rho = std::min(min_crit_rho, m.profile.eval(s));
                prev_d1 = d1;
            }
            double conj = (kmax > 0) ? pi / std::sqrt(kmax) : std::numeric_limits<double>::infinity();
            double loops = std::min(Ls / 2.0, pi * min_crit_rho);
            return {0.9 * std::min(conj, loops), false};
        }
    }
    throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// orthonormal covector frame at a base point: columns map Euclidean fiber
// coordinates to chart covector components. In geodesic normal coordinates at
// the base point this frame is the identity, so fiber-sphere geometry measured
// through it agrees with the Euclidean one.

struct FiberFrame {
    ChartPoint base;
    Mat2 frame;      // xi_chart = frame * xi_euclid
    Mat2 frame_inv;

    Vec2 to_chart(const Vec2& e) const { return frame * e; }
    Vec2 from_chart(const Vec2& xi) const { return frame_inv * xi; }
    Vec2 direction(double angle) const {
        return to_chart({std::cos(angle), std::sin(angle)});
    }
};

// symmetric square root of a 2x2 SPD matrix
inline Mat2 spd_sqrt(const Mat2& g) {
    double tr = g(0, 0) + g(1, 1), d = det(g);
    double s = std::sqrt(d);
    double t = std::sqrt(tr + 2 * s);
    return Mat2{{(g(0, 0) + s) / t, g(0, 1) / t, g(1, 0) / t, (g(1, 1) + s) / t}};
}

inline FiberFrame fiber_frame(const ManifoldModel& m, const ChartPoint& x0) {
    Mat2 g = metric_at(m, x0);
    Mat2 f = spd_sqrt(g);
    return {x0, f, inverse(f)};
}

// ---------------------------------------------------------------------------
// normal coordinates: chart map centered at x0 with metric == identity and
// vanishing first metric derivatives at the origin

class NormalCoordinates {
  public:
    NormalCoordinates(const ManifoldModel& model, const ChartPoint& x0)
        : model_(model), center_(canonical(model, x0)), frame_(fiber_frame(model, center_)) {
        max_radius_ = injectivity_radius(model).value;
        if (model.kind == ModelKind::RoundSphere) {
            Vec3 c = sphere_embed(model, center_);
            rot_ = detail::rotation_to_pole(c / norm(c));
        }
    }

    const ChartPoint& center() const { return center_; }
    double max_radius() const { return max_radius_; }

    // point -> normal coordinates (log map); domain error beyond the radius
    Vec2 to_normal(const ChartPoint& p) const {
        switch (model_.kind) {
            case ModelKind::FlatTorus: {
                Vec2 d = wrap_to_torus(model_, p.u - center_.u);
                if (d.x > model_.periods[0] / 2) d.x -= model_.periods[0];
                if (d.y > model_.periods[1] / 2) d.y -= model_.periods[1];
                check_radius(norm(d));
                return d;
            }
            case ModelKind::RoundSphere: {
                Vec3 P = rot_.apply(sphere_embed(model_, p));
                double rho = std::sqrt(P.x * P.x + P.y * P.y);
                double r = model_.radius * std::atan2(rho, P.z);
                check_radius(r);
                if (rho < 1e-300) return {0, 0};
                return {r * P.x / rho, r * P.y / rho};
            }
            case ModelKind::SurfaceOfRevolution:
                return log_map_shooting(p);
        }
        throw std::logic_error("unreachable");
    }

    // normal coordinates -> point (exp map)
    ChartPoint from_normal(const Vec2& v) const {
        check_radius(norm(v));
        switch (model_.kind) {
            case ModelKind::FlatTorus:
                return canonical(model_, {0, center_.u + v});
            case ModelKind::RoundSphere: {
                double r = norm(v);
                double f = detail::sphere_f(r, model_.radius);
                Vec3 P{f * v.x, f * v.y, model_.radius * std::cos(r / model_.radius)};
                P = rot_.apply_transpose(P);
                int chart = (P.z >= 0) ? kChartNorth : kChartSouth;
                return {chart, sphere_chart_coords(model_, chart, P)};
            }
            case ModelKind::SurfaceOfRevolution:
                return exp_map_geodesic(v);
        }
        throw std::logic_error("unreachable");
    }

    // pull back the metric at from_normal(v) to normal coordinates;
    // Jacobian by 4th-order central differences through the model chart
    Mat2 pullback_metric(const Vec2& v, double fd_step = 1e-4) const {
        ChartPoint q0 = from_normal(v);
        auto coords = [&](const Vec2& w) {
            return transition(model_, from_normal(w), q0.chart).u;
        };
        Mat2 J;
        for (int k = 0; k < 2; ++k) {
            Vec2 e{0, 0};
            e[k] = 1.0;
            const double h = fd_step;
            Vec2 d = (coords(v - e * (2 * h)) - coords(v + e * (2 * h)) +
                      (coords(v + e * h) - coords(v - e * h)) * 8.0) /
                     (12.0 * h);
            J(0, k) = d.x;
            J(1, k) = d.y;
        }
        Mat2 g = metric_at(model_, q0);
        return transpose(J) * g * J;
    }

  private:
    void check_radius(double r) const {
        if (r >= max_radius_)
            throw std::domain_error("normal coordinates: radius exceeds injectivity radius");
    }

    ChartPoint exp_map_geodesic(const Vec2& v) const;
    Vec2 log_map_shooting(const ChartPoint& p) const;

    const ManifoldModel& model_;
    ChartPoint center_;
    FiberFrame frame_;
    detail::Rot3 rot_;
    double max_radius_ = 0.0;
};

// geodesic equation x'' + Gamma(x)(x',x') = 0 in the native chart
inline ChartPoint NormalCoordinates::exp_map_geodesic(const Vec2& v) const {
    double r = norm(v);
    if (r < 1e-300) return center_;
    // initial unit velocity: raise the frame image of v/r
    Vec2 e = v / r;
    MetricJet j0 = metric_jet(model_, center_);
    Vec2 w = j0.ginv * frame_.to_chart(e);  // unit-speed initial velocity
    ode::State y{center_.u.x, center_.u.y, w.x, w.y};
    auto rhs = [this](double, const ode::State& y, ode::State& dy) {
        ChartPoint p{0, {y[0], y[1]}};
        auto gamma = christoffel_at(model_, canonical(model_, p));
        Vec2 vel{y[2], y[3]};
        dy[0] = vel.x;
        dy[1] = vel.y;
        for (int k = 0; k < 2; ++k) {
            double acc = 0;
            for (int i = 0; i < 2; ++i)
                for (int jj = 0; jj < 2; ++jj) acc -= gamma[k](i, jj) * vel[i] * vel[jj];
            dy[2 + k] = acc;
        }
    };
    ode::Options opt;
    opt.rel_tol = 1e-12;
    opt.abs_tol = 1e-12;
    opt.max_step = 0.05;
    ode::integrate(rhs, y, 0.0, r, opt);
    return canonical(model_, {0, {y[0], y[1]}});
}

inline Vec2 NormalCoordinates::log_map_shooting(const ChartPoint& p) const {
    ChartPoint target = canonical(model_, p);
    // initial guess from chart difference
    double Ls = model_.profile.period();
    Vec2 d = target.u - center_.u;
    if (d.x > Ls / 2) d.x -= Ls;
    if (d.x < -Ls / 2) d.x += Ls;
    if (d.y > pi) d.y -= 2 * pi;
    if (d.y < -pi) d.y += 2 * pi;
    MetricJet j0 = metric_jet(model_, center_);
    Vec2 guess = frame_.from_chart(j0.g * d);  // lower then frame: first order
    auto chart_gap = [&](const ChartPoint& q) {
        Vec2 e = q.u - target.u;
        if (e.x > Ls / 2) e.x -= Ls;
        if (e.x < -Ls / 2) e.x += Ls;
        if (e.y > pi) e.y -= 2 * pi;
        if (e.y < -pi) e.y += 2 * pi;
        return e;
    };
    Vec2 v = guess;
    for (int it = 0; it < 60; ++it) {
        Vec2 f0 = chart_gap(exp_map_geodesic(v));
        if (norm(f0) < 1e-11) {
            check_radius(norm(v));
            return v;
        }
        Mat2 J;
        double h = 1e-6 * std::max(1.0, norm(v));
        for (int k = 0; k < 2; ++k) {
            Vec2 dv{0, 0};
            dv[k] = h;
            Vec2 fp = chart_gap(exp_map_geodesic(v + dv));
            Vec2 fm = chart_gap(exp_map_geodesic(v - dv));
            Vec2 col = (fp - fm) / (2 * h);
            J(0, k) = col.x;
            J(1, k) = col.y;
        }
        Vec2 step = inverse(J) * f0;
        v = v - step;
    }
    throw std::runtime_error("log map shooting did not converge");
}

}  // namespace eigengrowth::manifold
