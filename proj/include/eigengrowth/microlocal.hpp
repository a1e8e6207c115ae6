#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "eigengrowth/dynamics.hpp"
#include "eigengrowth/fft.hpp"
#include "eigengrowth/manifold.hpp"
#include "eigengrowth/utils.hpp"

// Semiclassical quantization and defect-measure estimation. On the torus the
// left quantization acts exactly through Fourier multipliers with x-dependent
// amplitudes; pairings <Op_h(a) u, u> feed the defect-measure scans and the
// product/commutator identities used as convergence tests.

namespace eigengrowth::microlocal {

using fft::cplx;
using manifold::ManifoldModel;
using manifold::pi;

// ---------------------------------------------------------------------------
// symbols

struct Symbol {
    std::function<double(Vec2 x, Vec2 xi)> eval;
    std::string id = "symbol";
    // momentum support bound used for Nyquist checks; <= 0 means unbounded
    double xi_bound = 0.0;
    // optional analytic gradient in x (falls back to finite differences)
    std::function<Vec2(Vec2 x, Vec2 xi)> grad_x;
    std::function<Vec2(Vec2 x, Vec2 xi)> grad_xi;

    static Symbol one() {
        Symbol s;
        s.eval = [](Vec2, Vec2) { return 1.0; };
        s.id = "1";
        return s;
    }
};

inline Vec2 symbol_grad_x(const Symbol& a, Vec2 x, Vec2 xi, double fd = 1e-6) {
    if (a.grad_x) return a.grad_x(x, xi);
    return {(a.eval({x.x + fd, x.y}, xi) - a.eval({x.x - fd, x.y}, xi)) / (2 * fd),
            (a.eval({x.x, x.y + fd}, xi) - a.eval({x.x, x.y - fd}, xi)) / (2 * fd)};
}

inline Vec2 symbol_grad_xi(const Symbol& a, Vec2 x, Vec2 xi, double fd = 1e-6) {
    if (a.grad_xi) return a.grad_xi(x, xi);
    return {(a.eval(x, {xi.x + fd, xi.y}) - a.eval(x, {xi.x - fd, xi.y})) / (2 * fd),
            (a.eval(x, {xi.x, xi.y + fd}) - a.eval(x, {xi.x, xi.y - fd})) / (2 * fd)};
}

// H_p a for p = |xi|^2 - 1 on the flat torus: 2 xi . d_x a
inline double hp_derivative(const Symbol& a, Vec2 x, Vec2 xi) {
    Vec2 gx = symbol_grad_x(a, x, xi);
    return 2.0 * dot(xi, gx);
}

// ---------------------------------------------------------------------------
// wavefields on the flat torus

class TorusField {
  public:
    TorusField(ManifoldModel model, int n, double h)
        : model_(std::move(model)), n_(n), h_(h) {
        if (model_.kind != manifold::ModelKind::FlatTorus)
            throw std::domain_error("TorusField needs a flat torus model");
        if (!fft::is_pow2(static_cast<std::size_t>(n)))
            throw std::invalid_argument("grid size must be a power of two");
        v_.assign(static_cast<std::size_t>(n) * n, 0.0);
    }

    int size() const { return n_; }
    double h() const { return h_; }
    const ManifoldModel& model() const { return model_; }
    double cell_area() const { return model_.periods[0] * model_.periods[1] / (n_ * n_); }

    cplx& at(int i, int j) { return v_[static_cast<std::size_t>(i) * n_ + j]; }
    cplx at(int i, int j) const { return v_[static_cast<std::size_t>(i) * n_ + j]; }

    Vec2 grid_point(int i, int j) const {
        return {model_.periods[0] * i / n_, model_.periods[1] * j / n_};
    }
    // physical momentum of mode slot (k1, k2) at scale h
    Vec2 mode_momentum(long k1, long k2) const {
        return {2 * pi * k1 / model_.periods[0], 2 * pi * k2 / model_.periods[1]};
    }

    double l2_norm() const {
        double s = 0;
        for (const auto& z : v_) s += std::norm(z);
        return std::sqrt(s * cell_area());
    }

    // normalized plane wave e^{i <m_phys, x>} / sqrt(area)
    static TorusField plane_wave(const ManifoldModel& m, int n, double h, long k1,
                                 long k2) {
        TorusField f(m, n, h);
        double area = m.periods[0] * m.periods[1];
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Vec2 x = f.grid_point(i, j);
                Vec2 mm = f.mode_momentum(k1, k2);
                f.at(i, j) = std::polar(1.0 / std::sqrt(area), dot(mm, x));
            }
        return f;
    }

    // Fourier coefficients c[k1][k2] with u = sum c e^{i<m_phys, x>}
    std::vector<cplx> coefficients() const {
        std::vector<cplx> a = v_;
        // 2-d FFT: rows then columns
        for (int i = 0; i < n_; ++i) {
            std::vector<cplx> row(a.begin() + static_cast<std::size_t>(i) * n_,
                                  a.begin() + static_cast<std::size_t>(i + 1) * n_);
            row = fft::coefficients(row);
            std::copy(row.begin(), row.end(), a.begin() + static_cast<std::size_t>(i) * n_);
        }
        std::vector<cplx> col(n_);
        for (int j = 0; j < n_; ++j) {
            for (int i = 0; i < n_; ++i) col[i] = a[static_cast<std::size_t>(i) * n_ + j];
            col = fft::coefficients(col);
            for (int i = 0; i < n_; ++i) a[static_cast<std::size_t>(i) * n_ + j] = col[i];
        }
        return a;
    }

    static TorusField from_coefficients(const ManifoldModel& m, int n, double h,
                                        const std::vector<cplx>& coef) {
        TorusField f(m, n, h);
        std::vector<cplx> a = coef;
        for (int j = 0; j < n; ++j) {
            std::vector<cplx> col(n);
            for (int i = 0; i < n; ++i) col[i] = a[static_cast<std::size_t>(i) * n + j];
            col = fft::values(col);
            for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i) * n + j] = col[i];
        }
        for (int i = 0; i < n; ++i) {
            std::vector<cplx> row(a.begin() + static_cast<std::size_t>(i) * n,
                                  a.begin() + static_cast<std::size_t>(i + 1) * n);
            row = fft::values(row);
            std::copy(row.begin(), row.end(), f.v_.begin() + static_cast<std::size_t>(i) * n);
        }
        return f;
    }

  private:
    ManifoldModel model_;
    int n_;
    double h_;
    std::vector<cplx> v_;
};

// resolution guard: the grid must resolve momenta up to the working band
inline void require_resolved(const TorusField& u, double momentum_bound) {
    double nyq = std::min(pi * u.size() / u.model().periods[0],
                          pi * u.size() / u.model().periods[1]) *
                 u.h();
    if (momentum_bound > 0.9 * nyq)
        throw std::domain_error("momentum support exceeds the grid Nyquist band");
}

// left quantization: Op_h(a) u (x) = sum_m a(x, h m) u_hat_m e^{i<m,x>}
inline TorusField quantize_apply(const Symbol& a, const TorusField& u) {
    if (a.xi_bound > 0) require_resolved(u, a.xi_bound);
    const int n = u.size();
    auto coef = u.coefficients();
    double cmax = 0;
    for (const auto& z : coef) cmax = std::max(cmax, std::abs(z));
    TorusField out(u.model(), n, u.h());
    for (int k1 = 0; k1 < n; ++k1)
        for (int k2 = 0; k2 < n; ++k2) {
            cplx c = coef[static_cast<std::size_t>(k1) * n + k2];
            // threshold sits above the 2-d FFT noise floor so smooth symbols
            // keep only their genuine sidebands
            if (std::abs(c) < 1e-13 * cmax) continue;
            long m1 = fft::mode_index(k1, n), m2 = fft::mode_index(k2, n);
            Vec2 mm = u.mode_momentum(m1, m2);
            Vec2 xi = mm * u.h();
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    Vec2 x = u.grid_point(i, j);
                    out.at(i, j) += a.eval(x, xi) * c * std::polar(1.0, dot(mm, x));
                }
        }
    return out;
}

// exact Fourier multiplier of the operator -h^2 Lap - 1
inline TorusField apply_shifted_laplacian(const TorusField& u) {
    const int n = u.size();
    auto coef = u.coefficients();
    for (int k1 = 0; k1 < n; ++k1)
        for (int k2 = 0; k2 < n; ++k2) {
            long m1 = fft::mode_index(k1, n), m2 = fft::mode_index(k2, n);
            Vec2 mm = u.mode_momentum(m1, m2);
            double mult = u.h() * u.h() * norm2(mm) - 1.0;
            coef[static_cast<std::size_t>(k1) * n + k2] *= mult;
        }
    return TorusField::from_coefficients(u.model(), n, u.h(), coef);
}

inline double residual_norm(const TorusField& u) {
    return apply_shifted_laplacian(u).l2_norm();
}

inline cplx inner(const TorusField& a, const TorusField& b) {
    // <a, b> = int a conj(b)
    cplx s = 0;
    for (int i = 0; i < a.size(); ++i)
        for (int j = 0; j < a.size(); ++j) s += a.at(i, j) * std::conj(b.at(i, j));
    return s * a.cell_area();
}

inline cplx defect_pairing(const Symbol& a, const TorusField& u) {
    return inner(quantize_apply(a, u), u);
}

// spectral tail mass above a momentum cutoff
inline double compact_microlocalization_check(const TorusField& u, double cutoff) {
    const int n = u.size();
    auto coef = u.coefficients();
    double s = 0;
    for (int k1 = 0; k1 < n; ++k1)
        for (int k2 = 0; k2 < n; ++k2) {
            long m1 = fft::mode_index(k1, n), m2 = fft::mode_index(k2, n);
            Vec2 xi = u.mode_momentum(m1, m2) * u.h();
            if (norm(xi) > cutoff)
                s += std::norm(coef[static_cast<std::size_t>(k1) * n + k2]);
        }
    double area = u.model().periods[0] * u.model().periods[1];
    return std::sqrt(s * area);
}

// ---------------------------------------------------------------------------
// product/commutator identities: for compactly microlocalized quasimodes,
//   ||Op(a) Op(q) u||^2        -> int |a|^2 |q|^2 dmu
//   h^{-2} ||Op(a) P Op(q) u||^2 -> int |a|^2 |H_p q|^2 dmu
// the two residuals must trend to zero along an h-sequence.

struct PairingIdentityResiduals {
    double residual_product = 0.0;
    double residual_commutator = 0.0;
};

inline PairingIdentityResiduals pairing_identities_check(const Symbol& a, const Symbol& q,
                                                         const TorusField& u) {
    PairingIdentityResiduals r;
    TorusField qu = quantize_apply(q, u);
    TorusField aqu = quantize_apply(a, qu);
    double lhs1 = std::pow(aqu.l2_norm(), 2);
    Symbol a2q2;
    a2q2.eval = [&](Vec2 x, Vec2 xi) {
        double av = a.eval(x, xi), qv = q.eval(x, xi);
        return av * av * qv * qv;
    };
    double rhs1 = std::real(defect_pairing(a2q2, u));
    r.residual_product = std::abs(lhs1 - rhs1);

    TorusField pqu = apply_shifted_laplacian(qu);
    TorusField apqu = quantize_apply(a, pqu);
    double h = u.h();
    double lhs2 = std::pow(apqu.l2_norm() / h, 2);
    Symbol a2hpq2;
    a2hpq2.eval = [&](Vec2 x, Vec2 xi) {
        double av = a.eval(x, xi), hq = hp_derivative(q, x, xi);
        return av * av * hq * hq;
    };
    double rhs2 = std::real(defect_pairing(a2hpq2, u));
    r.residual_commutator = std::abs(lhs2 - rhs2);
    return r;
}

// ---------------------------------------------------------------------------
// defect scans over an h-sequence with extrapolation to h -> 0

struct PairingEntry {
    std::string symbol_id;
    double h = 0.0;
    cplx value;
};

struct DefectEstimateEntry {
    std::string symbol_id;
    double extrapolated = 0.0;
    double fit_residual = 0.0;
    bool cauchy = true;
    std::vector<PairingEntry> sequence;
};

// linear fit in h through the three finest values, extrapolated to h = 0;
// flagged non-Cauchy when the fit residual exceeds 10 percent of the value
inline DefectEstimateEntry extrapolate(std::vector<PairingEntry> seq) {
    DefectEstimateEntry out;
    if (seq.empty()) return out;
    out.symbol_id = seq.front().symbol_id;
    std::sort(seq.begin(), seq.end(),
              [](const PairingEntry& a, const PairingEntry& b) { return a.h > b.h; });
    std::size_t n = seq.size();
    std::size_t start = (n >= 3) ? n - 3 : 0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = n - start;
    for (std::size_t i = start; i < n; ++i) {
        sx += seq[i].h;
        sy += std::real(seq[i].value);
        sxx += seq[i].h * seq[i].h;
        sxy += seq[i].h * std::real(seq[i].value);
    }
    double denom = m * sxx - sx * sx;
    double slope = (denom != 0) ? (m * sxy - sx * sy) / denom : 0.0;
    double icept = (sy - slope * sx) / m;
    out.extrapolated = icept;
    double res = 0;
    for (std::size_t i = start; i < n; ++i) {
        double fit = icept + slope * seq[i].h;
        res = std::max(res, std::abs(std::real(seq[i].value) - fit));
    }
    out.fit_residual = res;
    out.cauchy = res <= 0.10 * std::max(1e-12, std::abs(icept));
    out.sequence = std::move(seq);
    return out;
}

inline std::vector<DefectEstimateEntry> defect_scan(
    const std::vector<TorusField>& family, const std::vector<Symbol>& dictionary) {
    std::vector<DefectEstimateEntry> out;
    for (const auto& a : dictionary) {
        std::vector<PairingEntry> seq;
        for (const auto& u : family)
            seq.push_back({a.id, u.h(), defect_pairing(a, u)});
        out.push_back(extrapolate(std::move(seq)));
    }
    return out;
}

// composition with the backward flow on the torus (exact straight lines):
// (a o G_{-t})(x, xi) = a(x - 2 t xi, xi)
inline Symbol compose_with_backward_flow(const Symbol& a, double t) {
    Symbol out;
    out.id = a.id + "@G(-" + std::to_string(t) + ")";
    out.xi_bound = a.xi_bound;
    out.eval = [a, t](Vec2 x, Vec2 xi) {
        return a.eval({x.x - 2 * t * xi.x, x.y - 2 * t * xi.y}, xi);
    };
    return out;
}

// max over the dictionary of the extrapolated pairing discrepancy between a
// and a o G_{-t}
inline double invariance_check(const std::vector<TorusField>& family,
                               const std::vector<Symbol>& dictionary, double t) {
    double worst = 0.0;
    for (const auto& a : dictionary) {
        auto base = extrapolate([&] {
            std::vector<PairingEntry> s;
            for (const auto& u : family) s.push_back({a.id, u.h(), defect_pairing(a, u)});
            return s;
        }());
        Symbol moved = compose_with_backward_flow(a, t);
        auto comp = extrapolate([&] {
            std::vector<PairingEntry> s;
            for (const auto& u : family)
                s.push_back({moved.id, u.h(), defect_pairing(moved, u)});
            return s;
        }());
        worst = std::max(worst, std::abs(base.extrapolated - comp.extrapolated));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// semiclassical L-infinity Sobolev inequality on band-limited 1-d fields:
//   ||v||_inf^2 <= C h^{1-n} ( eps^{n-1} ||v||^2
//                              + eps^{n-2l-1} sum ||(h D)^l v||^2 ),  n = 2

struct SobolevCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;  // rhs - lhs, nonnegative when the inequality holds
};

// periodic grid on [0, 2 pi); derivatives through the FFT
inline SobolevCheck sobolev_linfty_check(const std::vector<cplx>& values, double h,
                                         double eps, int l, double constant) {
    const std::size_t n = values.size();
    if (!fft::is_pow2(n)) throw std::invalid_argument("grid size must be a power of two");
    if (l < 1) throw std::domain_error("need l > (n-1)/2, i.e. l >= 1 for n = 2");
    auto coef = fft::coefficients(values);
    double linf = 0, l2 = 0, dl2 = 0;
    for (const auto& z : values) linf = std::max(linf, std::abs(z));
    for (std::size_t k = 0; k < n; ++k) {
        double m = static_cast<double>(fft::mode_index(k, n));
        double hd = std::pow(h * m, l);
        l2 += std::norm(coef[k]);
        dl2 += std::norm(coef[k]) * hd * hd;
    }
    l2 *= 2 * pi;
    dl2 *= 2 * pi;
    SobolevCheck out;
    out.lhs = linf * linf;
    out.rhs = constant / h * (eps * l2 + std::pow(eps, 1.0 - 2.0 * l) * dl2);
    out.margin = out.rhs - out.lhs;
    return out;
}

// empirical calibration of the constant over seeded band-limited samples
inline double calibrate_sobolev_constant(int l, unsigned seed = 20240801,
                                         int n_samples = 200) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> un(-1.0, 1.0);
    double cmax = 0.0;
    const std::size_t n = 512;
    for (int s = 0; s < n_samples; ++s) {
        double h = 1.0 / std::pow(2.0, 3 + (s % 5));
        int band = static_cast<int>(0.9 / h);
        std::vector<cplx> coef(n, 0.0);
        for (int k = -band; k <= band; ++k)
            coef[(k % static_cast<long>(n) + n) % n] = cplx(un(rng), un(rng));
        auto vals = fft::values(coef);
        for (double eps : {0.1, 1.0, 10.0}) {
            auto chk = sobolev_linfty_check(vals, h, eps, l, 1.0);
            if (chk.rhs > 0) cmax = std::max(cmax, chk.lhs / chk.rhs);
        }
    }
    return 1.1 * cmax;
}

}  // namespace eigengrowth::microlocal
