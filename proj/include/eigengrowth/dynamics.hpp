#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "eigengrowth/linalg.hpp"
#include "eigengrowth/manifold.hpp"
#include "eigengrowth/ode.hpp"
#include "eigengrowth/utils.hpp"

// Bicharacteristic flow of a real principal symbol and the point-based return
// dynamics built on it: return times, the first return map with its Jacobian
// factor, recurrent-set estimates, the weighted composition (Perron-Frobenius)
// operator and the dissipativity test, flow tubes and spreading diagnostics.

namespace eigengrowth::dynamics {

using manifold::ChartPoint;
using manifold::ManifoldModel;
using manifold::MetricJet;

struct PhasePoint {
    ChartPoint x;
    Vec2 xi;
};

enum class SymbolKind {
    Laplace,        // p = |xi|_g^2 - 1, bicharacteristics = speed-2 geodesics
    ScaledLaplace,  // p = scale (|xi|_g^2 - 1)
    Graph           // p = xi_1 - a(x, xi_2), flat torus charts only
};

struct HamiltonianModel {
    ManifoldModel manifold;
    SymbolKind symbol = SymbolKind::Laplace;
    double scale = 1.0;
    std::function<double(Vec2, double)> graph_a;  // a(x, xi_2)

    static HamiltonianModel laplace(ManifoldModel m) {
        return {std::move(m), SymbolKind::Laplace, 1.0, nullptr};
    }
    static HamiltonianModel scaled_laplace(ManifoldModel m, double c) {
        return {std::move(m), SymbolKind::ScaledLaplace, c, nullptr};
    }
    static HamiltonianModel graph(ManifoldModel m, std::function<double(Vec2, double)> a) {
        if (m.kind != manifold::ModelKind::FlatTorus)
            throw std::domain_error("graph symbols are supported on the flat torus only");
        return {std::move(m), SymbolKind::Graph, 1.0, std::move(a)};
    }
};

// symbol value
inline double symbol_value(const HamiltonianModel& h, const ChartPoint& x, const Vec2& xi) {
    switch (h.symbol) {
        case SymbolKind::Laplace:
        case SymbolKind::ScaledLaplace: {
            MetricJet j = metric_jet(h.manifold, x);
            return h.scale * (dot(xi, j.ginv * xi) - 1.0);
        }
        case SymbolKind::Graph:
            return xi.x - h.graph_a(x.u, xi.y);
    }
    throw std::logic_error("unreachable");
}

inline double symbol_value(const HamiltonianModel& h, const PhasePoint& q) {
    return symbol_value(h, q.x, q.xi);
}

// gradient split into base and fiber parts
struct SymbolGradient {
    Vec2 dx;   // d p / d x
    Vec2 dxi;  // d p / d xi
};

inline SymbolGradient symbol_gradient(const HamiltonianModel& h, const ChartPoint& x,
                                      const Vec2& xi) {
    SymbolGradient g;
    switch (h.symbol) {
        case SymbolKind::Laplace:
        case SymbolKind::ScaledLaplace: {
            MetricJet j = metric_jet(h.manifold, x);
            g.dxi = 2.0 * h.scale * (j.ginv * xi);
            for (int k = 0; k < 2; ++k) g.dx[k] = h.scale * dot(xi, j.dginv[k] * xi);
            return g;
        }
        case SymbolKind::Graph: {
            const double fd = 1e-6;
            auto a = h.graph_a;
            g.dxi = {1.0, -(a(x.u, xi.y + fd) - a(x.u, xi.y - fd)) / (2 * fd)};
            for (int k = 0; k < 2; ++k) {
                Vec2 xp = x.u, xm = x.u;
                xp[k] += fd;
                xm[k] -= fd;
                g.dx[k] = -(a(xp, xi.y) - a(xm, xi.y)) / (2 * fd);
            }
            return g;
        }
    }
    throw std::logic_error("unreachable");
}

// on-shell guard
inline void require_on_shell(const HamiltonianModel& h, const PhasePoint& q,
                             double tol = 1e-8) {
    double p = symbol_value(h, q);
    if (std::abs(p) > tol)
        throw std::domain_error("phase point is off the characteristic variety (|p|=" +
                                std::to_string(std::abs(p)) + ")");
}

// --------------------------------------------------------------------------
// flow integration with transparent chart switching (sphere atlas)

struct FlowOptions {
    double rel_tol = 1e-11;
    double abs_tol = 1e-12;
    double max_step = 0.02;
    bool variational = false;  // carry the 4x4 linearization along
};

namespace detail {

inline bool needs_chart_switch(const ManifoldModel& m, const ChartPoint& p) {
    if (m.kind != manifold::ModelKind::RoundSphere) return false;
    if (p.chart != manifold::kChartNorth && p.chart != manifold::kChartSouth) return false;
    return norm(p.u) > 0.60 * manifold::pi * m.radius;
}

// Hamilton equations; y = (x0, x1, xi0, xi1 [, Y row-major 16])
template <bool WithVariational>
struct PhaseRhs {
    const HamiltonianModel& ham;
    int chart;

    void operator()(double, const ode::State& y, ode::State& dy) const {
        ChartPoint x{chart, {y[0], y[1]}};
        Vec2 xi{y[2], y[3]};
        dy.resize(y.size());
        if (ham.symbol == SymbolKind::Graph) {
            auto g = symbol_gradient(ham, x, xi);
            dy[0] = g.dxi.x;
            dy[1] = g.dxi.y;
            dy[2] = -g.dx.x;
            dy[3] = -g.dx.y;
            if constexpr (WithVariational) fd_variational(x, xi, y, dy);
            return;
        }
        MetricJet j = metric_jet(ham.manifold, x);
        const double c = ham.scale;
        Vec2 v = 2.0 * c * (j.ginv * xi);
        dy[0] = v.x;
        dy[1] = v.y;
        for (int k = 0; k < 2; ++k) dy[2 + k] = -c * dot(xi, j.dginv[k] * xi);
        if constexpr (WithVariational) {
            // J_H = [[ dxdx, dxdxi ], [ dxidx, dxidxi ]] acting on (dx, dxi)
            Mat2 dxdx, dxdxi, dxidx, dxidxi;
            for (int k = 0; k < 2; ++k) {
                Vec2 col = 2.0 * c * (j.dginv[k] * xi);  // d xdot / d x_k
                dxdx(0, k) = col.x;
                dxdx(1, k) = col.y;
            }
            dxdxi = 2.0 * c * j.ginv;
            auto d2 = [&](int k, int l) -> const Mat2& {
                return j.d2ginv[(k == 0 && l == 0) ? 0 : ((k == 1 && l == 1) ? 2 : 1)];
            };
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) dxidx(k, l) = -c * dot(xi, d2(k, l) * xi);
            for (int k = 0; k < 2; ++k) {
                Vec2 row = -2.0 * c * (j.dginv[k] * xi);
                dxidxi(k, 0) = row.x;
                dxidxi(k, 1) = row.y;
            }
            propagate(dxdx, dxdxi, dxidx, dxidxi, y, dy);
        }
    }

    static void propagate(const Mat2& dxdx, const Mat2& dxdxi, const Mat2& dxidx,
                          const Mat2& dxidxi, const ode::State& y, ode::State& dy) {
        // dY = J_H * Y, Y columns are variations
        for (int col = 0; col < 4; ++col) {
            Vec2 vx{y[4 + 0 * 4 + col], y[4 + 1 * 4 + col]};
            Vec2 vxi{y[4 + 2 * 4 + col], y[4 + 3 * 4 + col]};
            Vec2 ox = dxdx * vx + dxdxi * vxi;
            Vec2 oxi = dxidx * vx + dxidxi * vxi;
            dy[4 + 0 * 4 + col] = ox.x;
            dy[4 + 1 * 4 + col] = ox.y;
            dy[4 + 2 * 4 + col] = oxi.x;
            dy[4 + 3 * 4 + col] = oxi.y;
        }
    }

    void fd_variational(const ChartPoint& x, const Vec2& xi, const ode::State& y,
                        ode::State& dy) const {
        const double fd = 1e-6;
        Mat2 dxdx, dxdxi, dxidx, dxidxi;
        for (int k = 0; k < 4; ++k) {
            ChartPoint xp = x, xm = x;
            Vec2 xip = xi, xim = xi;
            if (k < 2) {
                xp.u[k] += fd;
                xm.u[k] -= fd;
            } else {
                xip[k - 2] += fd;
                xim[k - 2] -= fd;
            }
            auto gp = symbol_gradient(ham, xp, xip);
            auto gm = symbol_gradient(ham, xm, xim);
            Vec2 dox = (gp.dxi - gm.dxi) / (2 * fd);
            Vec2 doxi = ((gm.dx - gp.dx)) / (2 * fd);
            if (k < 2) {
                dxdx(0, k) = dox.x;
                dxdx(1, k) = dox.y;
                dxidx(0, k) = doxi.x;
                dxidx(1, k) = doxi.y;
            } else {
                dxdxi(0, k - 2) = dox.x;
                dxdxi(1, k - 2) = dox.y;
                dxidxi(0, k - 2) = doxi.x;
                dxidxi(1, k - 2) = doxi.y;
            }
        }
        propagate(dxdx, dxdxi, dxidx, dxidxi, y, dy);
    }
};

}  // namespace detail

// full phase state including chart id and optional variational matrix
struct FlowState {
    int chart = 0;
    ode::State y;  // (x, xi [, Y])

    PhasePoint phase() const { return {{chart, {y[0], y[1]}}, {y[2], y[3]}}; }
    Mat4 variational() const {
        Mat4 Y;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) Y(i, j) = y[4 + 4 * i + j];
        return Y;
    }
};

// phase-space chart transition (point + covector)
inline PhasePoint phase_transition(const ManifoldModel& m, const PhasePoint& q, int to_chart) {
    auto tc = manifold::covector_transition(m, q.x, q.xi, to_chart);
    return {tc.point, tc.xi};
}

namespace detail {

// 4x4 Jacobian of the phase transition map by Richardson-extrapolated
// central differences
inline Mat4 phase_transition_jacobian(const ManifoldModel& m, const PhasePoint& q,
                                      int to_chart) {
    auto eval = [&](const PhasePoint& p) {
        PhasePoint r = phase_transition(m, p, to_chart);
        return std::array<double, 4>{r.x.u.x, r.x.u.y, r.xi.x, r.xi.y};
    };
    auto column = [&](int k, double h) {
        PhasePoint qp = q, qm = q;
        if (k < 2) {
            qp.x.u[k] += h;
            qm.x.u[k] -= h;
        } else {
            qp.xi[k - 2] += h;
            qm.xi[k - 2] -= h;
        }
        auto fp = eval(qp), fm = eval(qm);
        std::array<double, 4> c;
        for (int i = 0; i < 4; ++i) c[i] = (fp[i] - fm[i]) / (2 * h);
        return c;
    };
    Mat4 J;
    const double h0 = 1e-4;
    for (int k = 0; k < 4; ++k) {
        auto c1 = column(k, h0), c2 = column(k, h0 / 2);
        for (int i = 0; i < 4; ++i) J(i, k) = (4.0 * c2[i] - c1[i]) / 3.0;  // O(h^4)
    }
    return J;
}

inline void apply_transition_to_variational(const Mat4& T, ode::State& y) {
    Mat4 Y;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) Y(i, j) = y[4 + 4 * i + j];
    Mat4 Z = T * Y;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) y[4 + 4 * i + j] = Z(i, j);
}

}  // namespace detail

// step callback: (t_prev, state_prev, t_new, state_new); return false to stop
using PhaseObserver =
    std::function<bool(double, const FlowState&, double, const FlowState&)>;

// Integrate the bicharacteristic flow from q0 for time t (either sign),
// switching sphere charts as needed. Returns the final state.
inline FlowState integrate_phase(const HamiltonianModel& ham, const PhasePoint& q0,
                                 double t, const FlowOptions& opt = {},
                                 const PhaseObserver& observer = nullptr) {
    FlowState s;
    // start from the canonical chart (keeps sphere flows away from the
    // polar-chart boundary and off the singular auxiliary chart)
    {
        int best = manifold::canonical(ham.manifold, q0.x).chart;
        PhasePoint q = (best == q0.x.chart) ? q0 : phase_transition(ham.manifold, q0, best);
        s.chart = q.x.chart;
        s.y = {q.x.u.x, q.x.u.y, q.xi.x, q.xi.y};
    }
    if (opt.variational) {
        s.y.resize(20, 0.0);
        for (int i = 0; i < 4; ++i) s.y[4 + 4 * i + i] = 1.0;
    }

    ode::Options oopt;
    oopt.rel_tol = opt.rel_tol;
    oopt.abs_tol = opt.abs_tol;
    oopt.max_step = opt.max_step;
    oopt.initial_step = std::min(1e-3, opt.max_step);

    double t_now = 0.0;
    const double t_end = t;
    int guard = 0;
    while (std::abs(t_now - t_end) > 1e-14 * (1.0 + std::abs(t_end))) {
        if (++guard > 100000) throw std::runtime_error("flow: too many chart switches");
        bool want_switch = false;
        auto obs = [&](double ta, const ode::State& ya, double tb, const ode::State& yb) {
            if (observer) {
                FlowState sa{s.chart, ya}, sb{s.chart, yb};
                if (!observer(ta, sa, tb, sb)) return false;
            }
            ChartPoint p{s.chart, {yb[0], yb[1]}};
            if (detail::needs_chart_switch(ham.manifold, p)) {
                want_switch = true;
                return false;
            }
            return true;
        };
        double reached;
        if (opt.variational) {
            detail::PhaseRhs<true> rhs{ham, s.chart};
            reached = ode::integrate(rhs, s.y, t_now, t_end, oopt, obs);
        } else {
            detail::PhaseRhs<false> rhs{ham, s.chart};
            reached = ode::integrate(rhs, s.y, t_now, t_end, oopt, obs);
        }
        t_now = reached;
        if (want_switch) {
            int to = (s.chart == manifold::kChartNorth) ? manifold::kChartSouth
                                                        : manifold::kChartNorth;
            PhasePoint q = s.phase();
            if (opt.variational) {
                Mat4 T = detail::phase_transition_jacobian(ham.manifold, q, to);
                detail::apply_transition_to_variational(T, s.y);
            }
            PhasePoint r = phase_transition(ham.manifold, q, to);
            s.chart = to;
            s.y[0] = r.x.u.x;
            s.y[1] = r.x.u.y;
            s.y[2] = r.xi.x;
            s.y[3] = r.xi.y;
        } else if (observer && std::abs(t_now - t_end) > 1e-14 * (1.0 + std::abs(t_end))) {
            break;  // observer asked to stop
        }
    }
    return s;
}

// G_t(q0); the symbol is conserved along the trajectory up to `tol`
inline PhasePoint flow(const HamiltonianModel& ham, const PhasePoint& q0, double t,
                       double tol = 1e-9) {
    FlowOptions opt;
    opt.rel_tol = std::clamp(tol * 1e-4, 1e-13, 1e-11);
    opt.abs_tol = opt.rel_tol * 0.1;
    FlowState s = integrate_phase(ham, q0, t, opt);
    return s.phase();
}

// variational solution along the trajectory: 4x4 d G_t / d(x, xi)
inline Mat4 linearized_flow(const HamiltonianModel& ham, const PhasePoint& q0, double t) {
    FlowOptions opt;
    opt.variational = true;
    FlowState s = integrate_phase(ham, q0, t, opt);
    return s.variational();
}

// --------------------------------------------------------------------------
// return dynamics at a base point

struct ReturnRecord {
    double return_time = 0.0;
    Vec2 returned_direction;  // unit covector in the orthonormal fiber frame
    double jacobian = 1.0;
    bool converged = false;
    bool grazing = false;
    double fiber_distance = 0.0;  // achieved distance to the fiber base point
};

struct ReturnScanOptions {
    double t_max = 50.0;
    double fiber_tol = 1e-6;
    // minima with refined distance^2 below refine_factor * eps^2 get polished
    double refine_factor = 100.0;
    double max_step = 0.02;
    double rel_tol = 1e-11;
    bool with_jacobian = true;
};

struct FiberEvent {
    double t;
    double dist;
};

namespace detail {

struct MinimumBracket {
    double ta, tb;
    FlowState start;  // state at ta
    double d_mid;
};

// distance^2 from a flow state's base point to the anchor
inline double base_dist2(const ManifoldModel& m, const FlowState& s, const ChartPoint& x0) {
    ChartPoint p{s.chart, {s.y[0], s.y[1]}};
    double d = manifold::distance(m, p, x0);
    return d * d;
}

}  // namespace detail

// Scan [0, t_signed] for entries of the base trajectory into the fiber-ball of
// radius eps around x0. Minima of distance(t)^2 are located step-by-step and
// refined by golden-section on re-integrations.
inline std::vector<FiberEvent> fiber_approach_scan(const HamiltonianModel& ham,
                                                   const PhasePoint& q0,
                                                   const ChartPoint& x0, double t_signed,
                                                   double eps,
                                                   const ReturnScanOptions& opt = {}) {
    std::vector<FiberEvent> events;
    const ManifoldModel& M = ham.manifold;
    const double escape2 = std::pow(std::min(0.25 * manifold::injectivity_radius(M).value,
                                             50.0 * eps),
                                    2);
    bool armed = false;

    struct Sample {
        double t;
        double d2;
        FlowState s;
    };
    std::deque<Sample> window;

    FlowOptions fopt;
    fopt.max_step = opt.max_step;
    fopt.rel_tol = opt.rel_tol;
    fopt.abs_tol = opt.rel_tol * 0.1;

    auto refine = [&](const Sample& a, const Sample& c) {
        // minimize d2 over the bracket, re-integrating from the state at a.t
        auto d2_at = [&](double tt) {
            if (std::abs(tt - a.t) <= 1e-15) return detail::base_dist2(M, a.s, x0);
            PhasePoint qa = a.s.phase();
            FlowState r = integrate_phase(ham, qa, tt - a.t, fopt);
            return detail::base_dist2(M, r, x0);
        };
        double lo = std::min(a.t, c.t), hi = std::max(a.t, c.t);
        double tmin = ode::golden_section_min(d2_at, lo, hi, 1e-10 * std::max(1.0, hi - lo));
        double dmin = d2_at(tmin);
        if (dmin < eps * eps) events.push_back({tmin, std::sqrt(dmin)});
    };

    auto observer = [&](double, const FlowState&, double tb, const FlowState& sb) {
        double d2 = detail::base_dist2(M, sb, x0);
        if (!armed && d2 > escape2) armed = true;
        window.push_back({tb, d2, sb});
        if (window.size() > 3) window.pop_front();
        if (armed && window.size() == 3) {
            const auto& s0 = window[0];
            const auto& s1 = window[1];
            const auto& s2 = window[2];
            if (s1.d2 <= s0.d2 && s1.d2 <= s2.d2) {
                // quadratic estimate of the interior minimum; the gate allows
                // for one step of base travel so sharp dips are not missed
                double est = s1.d2;
                double denom = (s0.d2 - 2 * s1.d2 + s2.d2);
                if (denom > 0) est = s1.d2 - 0.125 * std::pow(s0.d2 - s2.d2, 2) / denom;
                double travel = 4.0 * opt.max_step;  // conservative speed bound ~2|scale|
                double gate = std::max(opt.refine_factor * eps * eps, travel * travel);
                if (est < gate) refine(s0, s2);
            }
        }
        return true;
    };

    integrate_phase(ham, q0, t_signed, fopt, observer);
    return events;
}

// fiber frame direction -> on-shell covector for the configured symbol
inline Vec2 fiber_covector(const HamiltonianModel& ham, const manifold::FiberFrame& fr,
                           double angle) {
    if (ham.symbol == SymbolKind::Graph)
        throw std::domain_error("fiber sphere parametrization needs a Laplace-type symbol");
    return fr.direction(angle);
}

// first return of (x0, xi) to the fiber over x0; NotReturned encodes an empty optional
inline std::optional<ReturnRecord> return_time(const HamiltonianModel& ham,
                                               const ChartPoint& x0, const Vec2& xi_chart,
                                               const ReturnScanOptions& opt = {}) {
    const ManifoldModel& M = ham.manifold;
    PhasePoint q0{x0, xi_chart};
    require_on_shell(ham, q0, 1e-6);
    auto events = fiber_approach_scan(ham, q0, x0, opt.t_max, opt.fiber_tol, opt);
    if (events.empty()) return std::nullopt;
    const FiberEvent& ev = events.front();

    ReturnRecord rec;
    rec.return_time = ev.t;
    rec.fiber_distance = ev.dist;
    rec.converged = true;
    rec.grazing = false;

    // flow once more with the variational matrix to extract eta and J
    FlowOptions fopt;
    fopt.variational = opt.with_jacobian;
    fopt.max_step = opt.max_step;
    fopt.rel_tol = opt.rel_tol;
    fopt.abs_tol = opt.rel_tol * 0.1;
    FlowState end = integrate_phase(ham, q0, ev.t, fopt);

    // express the returned covector in x0's chart and fiber frame
    auto fr = manifold::fiber_frame(M, x0);
    PhasePoint qT = end.phase();
    PhasePoint at0 = phase_transition(M, qT, x0.chart);
    rec.returned_direction = fr.from_chart(at0.xi);
    double rn = norm(rec.returned_direction);
    if (rn > 0) rec.returned_direction = rec.returned_direction / rn;

    if (opt.with_jacobian) {
        // Poincare reduction: J = |d eta / d alpha| along the fiber circle
        Mat4 Y = end.variational();
        if (qT.x.chart != x0.chart) {
            Mat4 T = detail::phase_transition_jacobian(M, qT, x0.chart);
            Y = T * Y;
        }
        // tangent of the initial circle at angle alpha
        Vec2 e0 = fr.from_chart(xi_chart);
        Vec2 tan0{-e0.y, e0.x};
        Vec2 v = fr.to_chart(tan0);
        Vec2 dxT{Y(0, 2) * v.x + Y(0, 3) * v.y, Y(1, 2) * v.x + Y(1, 3) * v.y};
        Vec2 dxiT{Y(2, 2) * v.x + Y(2, 3) * v.y, Y(3, 2) * v.x + Y(3, 3) * v.y};
        // time adjustment keeping the base on the fiber
        auto grad = symbol_gradient(ham, at0.x, at0.xi);
        Vec2 xdot = grad.dxi;
        double dT = -dot(xdot, dxT) / std::max(1e-300, dot(xdot, xdot));
        Vec2 xidot = -grad.dx;
        Vec2 deta_chart = dxiT + xidot * dT;
        Vec2 deta = fr.from_chart(deta_chart);
        Vec2 eta = rec.returned_direction;
        Vec2 tanT{-eta.y, eta.x};
        rec.jacobian = std::abs(dot(deta, tanT));
    }
    // a marginal hit, barely inside the tolerance ball, is flagged as grazing
    rec.grazing = rec.fiber_distance > 0.5 * opt.fiber_tol;
    return rec;
}

inline std::optional<ReturnRecord> return_time(const HamiltonianModel& ham,
                                               const ChartPoint& x0, double angle,
                                               const ReturnScanOptions& opt = {}) {
    auto fr = manifold::fiber_frame(ham.manifold, x0);
    return return_time(ham, x0, fiber_covector(ham, fr, angle), opt);
}

// first return map (eta, J); throws if the direction does not return
inline std::pair<Vec2, double> first_return_map(const HamiltonianModel& ham,
                                                const ChartPoint& x0, double angle,
                                                const ReturnScanOptions& opt = {}) {
    auto rec = return_time(ham, x0, angle, opt);
    if (!rec || !rec->converged)
        throw std::runtime_error("direction is not in the loop set up to the horizon");
    return {rec->returned_direction, rec->jacobian};
}

// --------------------------------------------------------------------------
// recurrence

struct DirectionReturn {
    double angle = 0.0;
    bool recurrent = false;
    bool returned = false;
    double first_return_time = 0.0;
    double jacobian = 1.0;
    double eta_angle = 0.0;
};

struct RecurrenceResult {
    std::vector<DirectionReturn> directions;
    double volume = 0.0;          // fiber-sphere measure of the marked set
    double total_volume = 2 * manifold::pi;
    double eps_return = 0.0;
    double t_max = 0.0;

    double inf_return_time_recurrent() const {
        double v = std::numeric_limits<double>::infinity();
        for (const auto& d : directions)
            if (d.recurrent && d.returned) v = std::min(v, d.first_return_time);
        return v;
    }
    double inf_return_time_loopset() const {
        double v = std::numeric_limits<double>::infinity();
        for (const auto& d : directions)
            if (d.returned) v = std::min(v, d.first_return_time);
        return v;
    }
};

// Marked recurrent <=> the trajectory re-enters the eps ball around x0 during
// the last third of [0, t_max], in both time directions. This is a monotone
// finite-horizon surrogate for recurrence; the horizon is reported alongside.
inline RecurrenceResult recurrent_set_estimate(const HamiltonianModel& ham,
                                               const ChartPoint& x0, int n_dirs,
                                               double t_max, double eps_return,
                                               unsigned threads = 0) {
    RecurrenceResult out;
    out.directions.resize(n_dirs);
    out.eps_return = eps_return;
    out.t_max = t_max;
    auto fr = manifold::fiber_frame(ham.manifold, x0);

    utils::parallel_for(
        static_cast<std::size_t>(n_dirs),
        [&](std::size_t i) {
            double angle = 2.0 * manifold::pi * static_cast<double>(i) / n_dirs;
            DirectionReturn row;
            row.angle = angle;
            Vec2 xi = fiber_covector(ham, fr, angle);
            ReturnScanOptions opt;
            opt.t_max = t_max;
            opt.fiber_tol = eps_return;
            auto fwd = fiber_approach_scan(ham, {x0, xi}, x0, t_max, eps_return, opt);
            auto bwd = fiber_approach_scan(ham, {x0, xi}, x0, -t_max, eps_return, opt);
            auto in_last_third = [&](const std::vector<FiberEvent>& ev) {
                for (const auto& e : ev)
                    if (std::abs(e.t) >= 2.0 * t_max / 3.0) return true;
                return false;
            };
            row.recurrent = !fwd.empty() && !bwd.empty() && in_last_third(fwd) &&
                            in_last_third(bwd);
            if (!fwd.empty()) {
                row.returned = true;
                ReturnScanOptions ro;
                ro.t_max = t_max;
                ro.fiber_tol = eps_return;
                auto rec = return_time(ham, x0, xi, ro);
                if (rec) {
                    row.first_return_time = rec->return_time;
                    row.jacobian = rec->jacobian;
                    row.eta_angle =
                        std::atan2(rec->returned_direction.y, rec->returned_direction.x);
                }
            }
            out.directions[i] = row;
        },
        threads);

    int marked = 0;
    for (const auto& d : out.directions) marked += d.recurrent ? 1 : 0;
    out.volume = 2.0 * manifold::pi * static_cast<double>(marked) / n_dirs;
    return out;
}

// --------------------------------------------------------------------------
// Perron-Frobenius operator on the recurrent set: U f = sqrt(J) f(eta)

struct PerronFrobenius {
    std::vector<int> support;        // indices into the direction grid
    std::vector<int> eta_index;      // nearest-neighbor image index
    std::vector<double> sqrt_jac;
    int n_dirs = 0;
    double interpolation_error = 0.0;  // max angular distance to the grid image

    std::vector<double> apply(const std::vector<double>& f) const {
        if (static_cast<int>(f.size()) != n_dirs)
            throw std::invalid_argument("sample vector size mismatch");
        std::vector<double> out(f.size(), 0.0);
        for (std::size_t k = 0; k < support.size(); ++k)
            out[support[k]] = sqrt_jac[k] * f[eta_index[k]];
        return out;
    }
};

inline PerronFrobenius perron_frobenius(const RecurrenceResult& recur) {
    PerronFrobenius pf;
    pf.n_dirs = static_cast<int>(recur.directions.size());
    const double step = 2 * manifold::pi / pf.n_dirs;
    for (int i = 0; i < pf.n_dirs; ++i) {
        const auto& d = recur.directions[i];
        if (!d.recurrent) continue;
        if (!d.returned)
            throw std::runtime_error("recurrent direction without return data");
        double a = d.eta_angle;
        double idxf = a / step;
        int j = static_cast<int>(std::llround(idxf)) % pf.n_dirs;
        if (j < 0) j += pf.n_dirs;
        double gap = std::abs(a - step * std::llround(idxf));
        pf.interpolation_error = std::max(pf.interpolation_error, gap);
        pf.support.push_back(i);
        pf.eta_index.push_back(j);
        pf.sqrt_jac.push_back(std::sqrt(std::max(0.0, d.jacobian)));
    }
    return pf;
}

inline double discrete_l2(const std::vector<double>& f, double cell) {
    double s = 0;
    for (double v : f) s += v * v;
    return std::sqrt(s * cell);
}

struct DissipativityVerdict {
    bool dissipative = true;
    std::vector<double> witness;  // Cesaro average when non-dissipative
    double retained_norm_fraction = 0.0;
    double recurrent_volume = 0.0;
};

// Cesaro averaging of U^k applied to the constant function over the recurrent
// set; a retained L2 fraction above `tol` certifies a nonzero fixed point.
// An empty (below-resolution) recurrent set is dissipative by the convention
// L2 of a measure-zero set = {0}.
inline DissipativityVerdict dissipativity_test(const HamiltonianModel& ham,
                                               const ChartPoint& x0,
                                               const RecurrenceResult& recur,
                                               int n_iter = 32, double tol = 0.1) {
    (void)ham;
    (void)x0;
    DissipativityVerdict v;
    v.recurrent_volume = recur.volume;
    const int n = static_cast<int>(recur.directions.size());
    if (n == 0 || recur.volume <= 0.0) return v;
    PerronFrobenius pf = perron_frobenius(recur);
    if (pf.support.empty()) return v;

    std::vector<double> f(n, 0.0);
    for (int idx : pf.support) f[idx] = 1.0;
    const double cell = 2 * manifold::pi / n;
    double norm0 = discrete_l2(f, cell);

    std::vector<double> acc(n, 0.0), cur = f;
    for (int k = 0; k < n_iter; ++k) {
        cur = pf.apply(cur);
        for (int i = 0; i < n; ++i) acc[i] += cur[i];
    }
    for (int i = 0; i < n; ++i) acc[i] /= n_iter;
    double na = discrete_l2(acc, cell);
    v.retained_norm_fraction = na / std::max(1e-300, norm0);
    if (v.retained_norm_fraction >= tol) {
        v.dissipative = false;
        v.witness = acc;
    }
    return v;
}

// --------------------------------------------------------------------------
// flow tubes

struct TubeSpec {
    ChartPoint x0;
    double center_angle = 0.0;  // direction on the fiber circle
    double fiber_radius = 0.1;  // r
    double time_halfwidth = 0.1;  // delta

    TubeSpec() = default;
    TubeSpec(ChartPoint base, double angle, double r, double delta)
        : x0(base), center_angle(angle), fiber_radius(r), time_halfwidth(delta) {
        if (!(r > 0) || !(delta > 0)) throw std::domain_error("tube needs r>0, delta>0");
    }
};

// membership decided by flowing q backward/forward and testing fiber hits
inline bool tube_contains(const HamiltonianModel& ham, const TubeSpec& tube,
                          const PhasePoint& q, double fiber_tol = 1e-7) {
    ReturnScanOptions opt;
    opt.fiber_tol = fiber_tol;
    auto fr = manifold::fiber_frame(ham.manifold, tube.x0);
    auto check_events = [&](double dir_sign) {
        // scan over [0, delta] in the given time direction; include t=0
        auto d0 = manifold::distance(ham.manifold, q.x, tube.x0);
        std::vector<FiberEvent> ev;
        if (d0 < fiber_tol) ev.push_back({0.0, d0});
        auto more = fiber_approach_scan(ham, q, tube.x0,
                                        dir_sign * tube.time_halfwidth, fiber_tol, opt);
        ev.insert(ev.end(), more.begin(), more.end());
        for (const auto& e : ev) {
            FlowState s = integrate_phase(ham, q, e.t, {});
            PhasePoint at = phase_transition(ham.manifold, s.phase(), tube.x0.chart);
            Vec2 d = fr.from_chart(at.xi);
            double a = std::atan2(d.y, d.x);
            double gap = std::remainder(a - tube.center_angle, 2 * manifold::pi);
            if (std::abs(gap) <= tube.fiber_radius) return true;
        }
        return false;
    };
    return check_events(-1.0) || check_events(+1.0);
}

// --------------------------------------------------------------------------
// flow spreading near a point (short-time comparability of fiber distances)

struct SpreadingCalibration {
    double C1 = 0.0;
    double delta = 0.0;  // admissible |t|
};

struct SpreadingCheck {
    double fiber_distance = 0.0;   // d((x0,xi1),(x0,xi2))
    double flowed_distance = 0.0;  // d(G_t(x0,xi1), G_t(x0,xi2))
    double ratio = 1.0;
    double lower = 0.0, upper = 0.0;  // calibrated band
    double base_distance = 0.0;
    double base_bound = 0.0;
    bool within_band = true;
};

// Sasaki-type phase distance between two nearby phase points: base distance
// plus covector gap after moving to a common chart.
inline double phase_distance(const HamiltonianModel& ham, const PhasePoint& a,
                             const PhasePoint& b) {
    double db = manifold::distance(ham.manifold, a.x, b.x);
    PhasePoint bb = phase_transition(ham.manifold, b, a.x.chart);
    auto fr = manifold::fiber_frame(ham.manifold, a.x);
    Vec2 da = fr.from_chart(a.xi), dbv = fr.from_chart(bb.xi);
    return std::sqrt(db * db + norm2(da - dbv));
}

inline SpreadingCheck flow_spreading_check(const HamiltonianModel& ham,
                                           const ChartPoint& x0, double angle1,
                                           double angle2, double t,
                                           const SpreadingCalibration& cal) {
    if (std::abs(t) > cal.delta)
        throw std::domain_error("|t| exceeds the calibrated spreading window");
    auto fr = manifold::fiber_frame(ham.manifold, x0);
    PhasePoint q1{x0, fiber_covector(ham, fr, angle1)};
    PhasePoint q2{x0, fiber_covector(ham, fr, angle2)};
    SpreadingCheck out;
    out.fiber_distance = phase_distance(ham, q1, q2);
    FlowState s1 = integrate_phase(ham, q1, t, {});
    FlowState s2 = integrate_phase(ham, q2, t, {});
    PhasePoint p1 = s1.phase(), p2 = s2.phase();
    out.flowed_distance = phase_distance(ham, p1, p2);
    double d = out.fiber_distance;
    out.lower = std::max(0.0, 0.5 * d - cal.C1 * d * d);
    out.upper = 2.0 * d + cal.C1 * d * d;
    out.ratio = (d > 0) ? out.flowed_distance / d : 1.0;
    out.base_distance = manifold::distance(ham.manifold, p1.x, p2.x);
    out.base_bound = cal.C1 * d * cal.delta;
    out.within_band = out.flowed_distance >= out.lower &&
                      out.flowed_distance <= out.upper &&
                      out.base_distance <= out.base_bound + 1e-12;
    return out;
}

// Empirical calibration of (C1, delta): sample fiber pairs and short times,
// take the smallest constant making all inequalities hold, with margin.
inline SpreadingCalibration calibrate_flow_spreading(const HamiltonianModel& ham,
                                                     const ChartPoint& x0,
                                                     double delta = 0.3) {
    auto fr = manifold::fiber_frame(ham.manifold, x0);
    double C1 = 0.0;
    for (double d : {1e-3, 1e-2, 5e-2, 0.2}) {
        for (double a0 : {0.0, 1.1, 2.7}) {
            for (double tf : {-1.0, -0.4, 0.4, 1.0}) {
                double t = tf * delta;
                PhasePoint q1{x0, fiber_covector(ham, fr, a0)};
                PhasePoint q2{x0, fiber_covector(ham, fr, a0 + d)};
                double d0 = phase_distance(ham, q1, q2);
                FlowState s1 = integrate_phase(ham, q1, t, {});
                FlowState s2 = integrate_phase(ham, q2, t, {});
                double dt = phase_distance(ham, s1.phase(), s2.phase());
                double db = manifold::distance(ham.manifold, s1.phase().x, s2.phase().x);
                if (dt > 2 * d0) C1 = std::max(C1, (dt - 2 * d0) / (d0 * d0));
                if (dt < 0.5 * d0) C1 = std::max(C1, (0.5 * d0 - dt) / (d0 * d0));
                C1 = std::max(C1, db / (d0 * delta));
            }
        }
    }
    return {1.1 * C1 + 0.1, delta};
}

}  // namespace eigengrowth::dynamics
