#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "eigengrowth/chart_quantization.hpp"
#include "eigengrowth/microlocal.hpp"

using namespace eigengrowth;
using namespace eigengrowth::microlocal;
using manifold::ManifoldModel;
using manifold::pi;

namespace {

ManifoldModel torus() { return ManifoldModel::torus(2 * pi, 2 * pi); }

Symbol trig_symbol() {
    Symbol a;
    a.id = "trig";
    a.eval = [](Vec2 x, Vec2 xi) {
        return 1.0 + 0.5 * std::cos(x.x) * std::sin(x.y) + 0.25 * xi.x + 0.1 * xi.y * xi.y;
    };
    return a;
}

}  // namespace

TEST_CASE("torus quantization acts as expected on model symbols") {
    auto m = torus();
    const int N = 64;
    const double h = 0.125;
    TorusField u = TorusField::plane_wave(m, N, h, 5, -3);

    SECTION("identity symbol reproduces the field") {
        TorusField out = quantize_apply(Symbol::one(), u);
        double err = 0;
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) err = std::max(err, std::abs(out.at(i, j) - u.at(i, j)));
        CHECK(err < 1e-10);
    }
    SECTION("momentum symbols are Fourier multipliers") {
        Symbol a;
        a.eval = [](Vec2, Vec2 xi) { return xi.x * xi.x + 2.0 * xi.y; };
        TorusField out = quantize_apply(a, u);
        Vec2 xi = u.mode_momentum(5, -3) * h;
        double want = xi.x * xi.x + 2.0 * xi.y;
        double err = 0;
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j)
                err = std::max(err, std::abs(out.at(i, j) - want * u.at(i, j)));
        CHECK(err < 1e-12);
    }
    SECTION("position symbols are multiplication operators") {
        Symbol a;
        a.eval = [](Vec2 x, Vec2) { return std::cos(x.x) + 0.3 * std::sin(2 * x.y); };
        TorusField out = quantize_apply(a, u);
        double err = 0;
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                Vec2 x = u.grid_point(i, j);
                double want = std::cos(x.x) + 0.3 * std::sin(2 * x.y);
                err = std::max(err, std::abs(out.at(i, j) - want * u.at(i, j)));
            }
        CHECK(err < 1e-12);
    }
}

TEST_CASE("defect pairings of plane waves match the averaged symbol") {
    auto m = torus();
    std::mt19937_64 rng(59);
    std::uniform_real_distribution<double> un(-1.0, 1.0);

    SECTION("pairing of 1 is the squared norm, exactly") {
        TorusField u = TorusField::plane_wave(m, 64, 1.0 / 5, 3, 4);
        CHECK(std::abs(defect_pairing(Symbol::one(), u) - cplx(1, 0)) < 1e-10);
    }
    SECTION("ten random smooth symbols against the analytic average") {
        for (int trial = 0; trial < 10; ++trial) {
            long m1 = 1 + trial % 5, m2 = 2 + trial % 3;
            double mm = std::sqrt(static_cast<double>(m1 * m1 + m2 * m2));
            double h = 1.0 / mm;
            double c1 = un(rng), c2 = un(rng), c3 = un(rng);
            Symbol a;
            a.eval = [=](Vec2 x, Vec2 xi) {
                return c1 * std::cos(x.x + 2 * x.y) + c2 * xi.x * xi.y + c3;
            };
            TorusField u = TorusField::plane_wave(m, 64, h, m1, m2);
            cplx got = defect_pairing(a, u);
            // analytic: average over the torus of a(x, m/|m|)
            Vec2 xi{m1 / mm, m2 / mm};
            double want = c2 * xi.x * xi.y + c3;  // the cosine averages to zero
            CHECK(std::abs(got - cplx(want, 0)) < std::max(1e-3, 5 * h));
            CHECK(std::abs(got.imag()) < 1e-10);
        }
    }
    SECTION("conjugate symmetry and positivity trend") {
        TorusField u = TorusField::plane_wave(m, 64, 1.0 / 5, 4, 3);
        Symbol a = trig_symbol();
        cplx p = defect_pairing(a, u);
        CHECK(std::abs(p.imag()) < 1e-8);  // real symbol, self-adjoint up to O(h)
        Symbol apos;
        apos.eval = [](Vec2 x, Vec2 xi) {
            double v = std::cos(x.x) + xi.x;
            return v * v;
        };
        CHECK(std::real(defect_pairing(apos, u)) > -5.0 * u.h());
    }
    SECTION("pairing is linear in the symbol") {
        TorusField u = TorusField::plane_wave(m, 64, 1.0 / 5, 4, 3);
        Symbol a = trig_symbol();
        Symbol b;
        b.eval = [](Vec2 x, Vec2 xi) { return std::sin(x.y) + xi.y; };
        Symbol ab;
        ab.eval = [&](Vec2 x, Vec2 xi) { return 2.0 * a.eval(x, xi) - 3.0 * b.eval(x, xi); };
        cplx lhs = defect_pairing(ab, u);
        cplx rhs = 2.0 * defect_pairing(a, u) - 3.0 * defect_pairing(b, u);
        CHECK(std::abs(lhs - rhs) < 1e-11);
    }
}

TEST_CASE("defect scan with momentum boxes recovers the plane-wave point mass") {
    auto m = torus();
    std::vector<TorusField> family;
    for (long k : {8, 16, 32})
        family.push_back(TorusField::plane_wave(m, 128, 1.0 / k, k, 0));
    // the h-rescaled momentum is (1, 0) for every member
    auto box = [](Vec2 c, double w, const std::string& id) {
        Symbol s;
        s.id = id;
        s.eval = [c, w](Vec2, Vec2 xi) {
            double d = std::max(std::abs(xi.x - c.x), std::abs(xi.y - c.y));
            if (d <= w) return 1.0;
            if (d >= 1.5 * w) return 0.0;
            return quasimode::RadialCutoff::smooth_step((1.5 * w - d) / (0.5 * w));
        };
        return s;
    };
    std::vector<Symbol> dict = {box({1, 0}, 0.3, "hit"), box({0, 1}, 0.3, "miss"),
                                box({-1, 0}, 0.3, "miss2"), Symbol::one()};
    auto est = defect_scan(family, dict);
    CHECK(est[0].extrapolated == Catch::Approx(1.0).margin(1e-3));
    CHECK(std::abs(est[1].extrapolated) < 1e-3);
    CHECK(std::abs(est[2].extrapolated) < 1e-3);
    CHECK(est[3].extrapolated == Catch::Approx(1.0).margin(1e-10));
    CHECK(est[0].cauchy);
}

TEST_CASE("flow invariance of exact eigenfunction pairings") {
    auto m = torus();
    std::vector<TorusField> family;
    for (long k : {8, 16, 32})
        family.push_back(TorusField::plane_wave(m, 128, 1.0 / k, k, 0));
    std::vector<Symbol> dict = {trig_symbol()};

    SECTION("t = 0 gives zero discrepancy exactly") {
        CHECK(invariance_check(family, dict, 0.0) == 0.0);
    }
    SECTION("t = 0.7 discrepancy small after extrapolation") {
        CHECK(invariance_check(family, dict, 0.7) <= 1e-3);
    }
}

TEST_CASE("product and commutator identity residuals trend to zero") {
    auto m = torus();
    Symbol a;
    a.eval = [](Vec2 x, Vec2 xi) { return std::cos(x.x) + 0.5 * xi.y; };
    Symbol q;
    q.eval = [](Vec2 x, Vec2 xi) { return std::sin(x.y) + xi.x * xi.x; };

    SECTION("a = q = 1 on an exact eigenfunction: both residuals tiny") {
        TorusField u = TorusField::plane_wave(m, 64, 1.0 / 5, 3, 4);
        auto r = pairing_identities_check(Symbol::one(), Symbol::one(), u);
        CHECK(r.residual_product < 1e-6);
        CHECK(r.residual_commutator < 1e-6);
    }
    SECTION("residuals decrease along h in {1/32, 1/64, 1/128}") {
        std::vector<double> r1, r2;
        for (long k : {32, 64, 128}) {
            TorusField u = TorusField::plane_wave(m, static_cast<int>(4 * k), 1.0 / k, k, 0);
            auto r = pairing_identities_check(a, q, u);
            r1.push_back(r.residual_product);
            r2.push_back(r.residual_commutator);
        }
        CHECK(r1[0] <= 3.0 * 1.0 / 32);  // residual_1 = O(h)
        // monotone nonincreasing within 10 percent noise
        CHECK(r1[1] <= r1[0] * 1.1);
        CHECK(r1[2] <= r1[1] * 1.1);
        CHECK(r2[1] <= r2[0] * 1.1);
        CHECK(r2[2] <= r2[1] * 1.1);
    }
}

TEST_CASE("compact microlocalization tails") {
    auto m = torus();
    SECTION("plane wave below the cutoff has no tail") {
        TorusField u = TorusField::plane_wave(m, 64, 1.0 / 5, 3, 4);
        CHECK(compact_microlocalization_check(u, 2.0) < 1e-12);
    }
    SECTION("white noise splits by the Parseval fraction") {
        const int N = 32;
        const double h = 0.5;
        TorusField u(m, N, h);
        std::mt19937_64 rng(71);
        std::uniform_real_distribution<double> un(-1.0, 1.0);
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) u.at(i, j) = cplx(un(rng), un(rng));
        double cutoff = 4.0;
        double tail = compact_microlocalization_check(u, cutoff);
        // oracle: direct Parseval sum over the coefficient grid
        auto coef = u.coefficients();
        double above = 0, total = 0;
        for (int k1 = 0; k1 < N; ++k1)
            for (int k2 = 0; k2 < N; ++k2) {
                long m1 = fft::mode_index(k1, N), m2 = fft::mode_index(k2, N);
                double mom = h * norm(u.mode_momentum(m1, m2));
                double c = std::norm(coef[static_cast<std::size_t>(k1) * N + k2]);
                total += c;
                if (mom > cutoff) above += c;
            }
        double area = 4 * pi * pi;
        CHECK(tail == Catch::Approx(std::sqrt(above * area)).margin(1e-12));
        CHECK(tail / u.l2_norm() == Catch::Approx(std::sqrt(above / total)).margin(1e-12));
    }
}

TEST_CASE("momentum support beyond the Nyquist band is rejected") {
    auto m = torus();
    TorusField u = TorusField::plane_wave(m, 32, 1.0 / 4, 2, 1);
    Symbol a;
    a.eval = [](Vec2, Vec2 xi) { return xi.x; };
    a.xi_bound = 100.0;
    CHECK_THROWS_AS(quantize_apply(a, u), std::domain_error);
}

TEST_CASE("semiclassical Sobolev embedding") {
    const int l = 1;
    static const double C = calibrate_sobolev_constant(l, 20240801);

    SECTION("single Fourier mode: closed-form two sides, positive margin") {
        const std::size_t n = 256;
        double h = 1.0 / 16;
        std::vector<cplx> coef(n, 0.0);
        coef[3] = 1.0;  // v = e^{3 i x}
        auto vals = fft::values(coef);
        for (double eps : {0.1, 1.0, 10.0}) {
            auto chk = sobolev_linfty_check(vals, h, eps, l, C);
            // lhs = 1; rhs = C/h (eps 2 pi + eps^{-1} 2 pi (3h)^{2l})
            double want = C / h * (eps * 2 * pi + (1.0 / eps) * 2 * pi * std::pow(3 * h, 2));
            CHECK(chk.lhs == Catch::Approx(1.0));
            CHECK(chk.rhs == Catch::Approx(want).epsilon(1e-12));
            CHECK(chk.margin > 0.0);
        }
    }
    SECTION("zero field: 0 <= 0") {
        std::vector<cplx> zeros(128, 0.0);
        auto chk = sobolev_linfty_check(zeros, 0.1, 1.0, l, C);
        CHECK(chk.lhs == 0.0);
        CHECK(chk.rhs == 0.0);
    }
    SECTION("holds on 100 fresh random band-limited samples") {
        std::mt19937_64 rng(411);  // disjoint from the calibration seed
        std::uniform_real_distribution<double> un(-1.0, 1.0);
        const std::size_t n = 512;
        for (int s = 0; s < 100; ++s) {
            double h = 1.0 / std::pow(2.0, 3 + (s % 5));
            int band = static_cast<int>(0.9 / h);
            std::vector<cplx> coef(n, 0.0);
            for (int k = -band; k <= band; ++k)
                coef[(k % static_cast<long>(n) + n) % n] = cplx(un(rng), un(rng));
            auto vals = fft::values(coef);
            for (double eps : {0.1, 1.0, 10.0}) {
                auto chk = sobolev_linfty_check(vals, h, eps, l, C);
                CHECK(chk.margin >= 0.0);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// sphere-chart pairings

TEST_CASE("chart shell pairing recovers the windowed L2 mass") {
    // pairing of a shell cutoff equal to 1 on the working band reproduces the
    // squared L2 norm; accuracy improves to spectral levels as l grows
    auto run = [](int l) {
        double h = quasimode::zonal_eigen_h(l);
        auto u = chartq::make_zonal_chart_field(l, 1.0, h, 1.7, 2.7);
        auto shell = chartq::shell_symbol(0.9);
        cplx p = chartq::chart_pairing(u, shell);
        double want = std::pow(u.chart_l2_norm(), 2);
        return std::abs(p - cplx(want, 0));
    };
    CHECK(run(40) < 1e-6);
    CHECK(run(96) < 1e-8);
}

TEST_CASE("zonal pairings away from the meridian directions decay") {
    // bump in phase space centered off the meridian covector directions
    double prev = 1e9;
    for (int l : {16, 32, 64}) {
        double h = quasimode::zonal_eigen_h(l);
        auto u = chartq::make_zonal_chart_field(l, 1.0, h, 2.2, 2.7);
        // at base (1.1, 0) the meridian covectors are +-(1, 0); aim sideways
        auto a = chartq::bump_symbol({1.1, 0.0}, 0.35, {0.0, 1.0}, 0.3, "side");
        double v = std::abs(chartq::chart_pairing(u, a));
        CHECK(v < prev * 1.05);
        prev = v;
    }
    CHECK(prev < 5e-2);
}

TEST_CASE("meridian tube dictionary captures the zonal mass") {
    int l = 60;
    double h = quasimode::zonal_eigen_h(l);
    auto u = chartq::make_zonal_chart_field(l, 1.0, h, 2.6, 2.85);
    chartq::TubeUnionParams base;
    base.dir_radius = 0.35;
    base.theta_hi = 0.82 * pi;
    base.edge = 0.30;
    chartq::TubeUnionParams mirror = base;
    mirror.mirrored = true;
    double cap = std::real(chartq::chart_pairing(u, chartq::tube_union_symbol(base))) +
                 std::real(chartq::chart_pairing(u, chartq::tube_union_symbol(mirror)));
    // against the true L2 mass of the normalized zonal harmonic
    CHECK(cap > 0.95);
    CHECK(cap < 1.02);
}

TEST_CASE("backward-flow composition of invariant symbols") {
    // the closed-form navigation route agrees with the embedding route
    auto f = [](chartq::SphereInvariants q) {
        double win = quasimode::RadialCutoff::smooth_step((0.55 * pi - q.theta) / 0.4);
        double dir =
            quasimode::RadialCutoff::smooth_step(2.0 - 2.0 * std::abs(std::sin(q.psi)) / 0.5);
        return win * dir * chartq::shell_window(q.rho_g, 0.35);
    };
    auto a = chartq::invariant_symbol(f, 1.0, 0.65, 1.35, 0.55 * pi, "tube-inv");
    auto fast = chartq::compose_invariant_backward(f, 0.35, 1.0, 0.65, 1.35,
                                                   0.55 * pi + 0.8, "tube-inv");
    auto slow = chartq::compose_with_backward_flow(a, 0.35, 1.0);
    std::mt19937_64 rng(97);
    std::uniform_real_distribution<double> ur(0.05, 2.2), ua(0, 2 * pi),
        up(0.7, 1.3);
    for (int i = 0; i < 40; ++i) {
        double r = ur(rng), b = ua(rng), rho = up(rng), c = ua(rng);
        Vec2 x{r * std::cos(b), r * std::sin(b)};
        Vec2 xi{rho * std::cos(c), rho * std::sin(c)};
        CHECK(std::abs(fast.eval(x, xi) - slow.eval(x, xi)) < 1e-8);
    }
}

TEST_CASE("uniform-density mode pairings are flow invariant in the limit") {
    // pairings of a and a o G_{-t} agree better as h decreases
    auto f = [](chartq::SphereInvariants q) {
        double win = quasimode::RadialCutoff::smooth_step((0.5 * pi - q.theta) / 0.4);
        double dir =
            quasimode::RadialCutoff::smooth_step(2.0 - 2.0 * std::abs(std::sin(q.psi)) / 0.5);
        return win * dir * chartq::shell_window(q.rho_g, 0.35);
    };
    std::vector<double> gaps;
    for (int l : {12, 24, 48}) {
        double h = quasimode::cluster_h(l);
        quasimode::QuasimodeSpec s;
        s.center = {manifold::kChartNorth, {0, 0}};
        s.g1 = quasimode::FiberAmplitude::constant(1.0 / (2 * pi));
        s.h = h;
        auto u = chartq::make_radial_field(
            [&](double r) { return std::abs(quasimode::field_value(s, r, 0.0)); }, 1.0, h,
            2.2, 2.7);
        auto a = chartq::invariant_symbol(f, 1.0, 0.65, 1.35, 0.5 * pi, "tube-inv");
        auto moved = chartq::compose_invariant_backward(f, 0.35, 1.0, 0.65, 1.35,
                                                        0.5 * pi + 0.8, "tube-inv");
        double base = std::real(chartq::chart_pairing(u, a, 64));
        double comp = std::real(chartq::chart_pairing(u, moved, 64));
        gaps.push_back(std::abs(base - comp));
    }
    CHECK(gaps[2] < gaps[0] / 2.0);
}
