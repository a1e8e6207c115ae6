#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

// Adaptive explicit Runge-Kutta integrator (Dormand-Prince 5(4)).
// Conservation of first integrals is deliberately not enforced; drift in the
// Hamiltonian is a diagnostic for the rest of the library.

namespace eigengrowth::ode {

struct Options {
    double rel_tol = 1e-11;
    double abs_tol = 1e-12;
    double max_step = 0.1;
    double initial_step = 1e-3;
    std::size_t max_steps = 2'000'000;
};

struct IntegrationError : std::runtime_error {
    double t_reached;
    double last_step;
    IntegrationError(const std::string& what, double t, double h)
        : std::runtime_error(what + " (t=" + std::to_string(t) +
                             ", step=" + std::to_string(h) + ")"),
          t_reached(t),
          last_step(h) {}
};

using State = std::vector<double>;

// Observer is called after every accepted step with the bracketing states.
// Returning false stops the integration at the end of that step.
using StepObserver =
    std::function<bool(double t0, const State& y0, double t1, const State& y1)>;

namespace detail {

// Dormand-Prince 5(4) tableau
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// embedded 4th order weights
constexpr double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                 e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;

}  // namespace detail

// Integrate dy/dt = f(t, y) from t0 to t1 (t1 may be < t0).
// f has signature void(double t, const State& y, State& dydt).
template <class F>
double integrate(F&& f, State& y, double t0, double t1, const Options& opt = {},
                 const StepObserver& observer = nullptr) {
    using namespace detail;
    const std::size_t n = y.size();
    const double dir = (t1 >= t0) ? 1.0 : -1.0;
    const double span = std::abs(t1 - t0);
    if (span == 0.0) return t0;

    double t = t0;
    double h = std::min({opt.initial_step, opt.max_step, span});

    State k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), yerr(n);
    State yprev(n);
    f(t, y, k1);

    for (std::size_t step = 0; step < opt.max_steps; ++step) {
        if (std::abs(t - t1) <= 1e-15 * (1.0 + std::abs(t1))) return t;
        h = std::min(h, std::abs(t1 - t));
        if (h < 1e-14 * (1.0 + std::abs(t)))
            throw IntegrationError("step size underflow", t, h);
        const double hs = dir * h;

        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + hs * a21 * k1[i];
        f(t + c2 * hs, ytmp, k2);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
        f(t + c3 * hs, ytmp, k3);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        f(t + c4 * hs, ytmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        f(t + c5 * hs, ytmp, k5);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] +
                                   a64 * k4[i] + a65 * k5[i]);
        f(t + hs, ytmp, k6);
        for (std::size_t i = 0; i < n; ++i)
            ynew[i] = y[i] + hs * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] +
                                   b6 * k6[i]);
        f(t + hs, ynew, k7);

        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double e4th = y[i] + hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] +
                                       e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            double sc = opt.abs_tol +
                        opt.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            double d = (ynew[i] - e4th) / sc;
            err += d * d;
        }
        err = std::sqrt(err / static_cast<double>(n));

        if (err <= 1.0) {
            yprev = y;
            double tprev = t;
            t += hs;
            y = ynew;
            std::swap(k1, k7);  // FSAL
            if (observer && !observer(tprev, yprev, t, y)) return t;
        }
        double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
        fac = std::clamp(fac, 0.2, 5.0);
        h = std::min(h * fac, opt.max_step);
    }
    throw IntegrationError("max step count exceeded", t, h);
}

// Scalar minimization by golden-section search on [a, b].
template <class F>
double golden_section_min(F&& f, double a, double b, double tol, int max_iter = 200) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < max_iter && (b - a) > tol; ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace eigengrowth::ode
