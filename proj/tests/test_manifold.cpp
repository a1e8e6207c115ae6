#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "eigengrowth/manifold.hpp"

using namespace eigengrowth;
using namespace eigengrowth::manifold;

namespace {

// independent finite-difference check of christoffel_at against metric_at
double christoffel_fd_error(const ManifoldModel& m, const ChartPoint& p) {
    auto gamma = christoffel_at(m, p);
    const double h = 1e-6;
    std::array<Mat2, 2> dg_fd;
    for (int k = 0; k < 2; ++k) {
        ChartPoint pp = p, pm = p;
        pp.u[k] += h;
        pm.u[k] -= h;
        dg_fd[k] = (metric_at(m, pp) - metric_at(m, pm)) * (1.0 / (2 * h));
    }
    Mat2 ginv = metric_jet(m, p).ginv;
    double err = 0;
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                double s = 0;
                for (int l = 0; l < 2; ++l)
                    s += ginv(k, l) * (dg_fd[i](j, l) + dg_fd[j](i, l) - dg_fd[l](i, j));
                err = std::max(err, std::abs(0.5 * s - gamma[k](i, j)));
            }
    return err;
}

ManifoldModel bumpy_torus() {
    // surface of revolution rho(s) = 1 + 0.3 cos(2 pi s / 5)
    std::vector<double> rho;
    const int N = 64;
    for (int i = 0; i < N; ++i)
        rho.push_back(1.0 + 0.3 * std::cos(2 * pi * i / N));
    return ManifoldModel::surface_of_revolution(rho, 5.0);
}

}  // namespace

TEST_CASE("round metric in the spherical chart") {
    auto s1 = ManifoldModel::sphere(1.0);
    Mat2 g = metric_at(s1, {kChartSpherical, {pi / 2, 0.0}});
    CHECK(g(0, 0) == Catch::Approx(1.0).margin(1e-14));
    CHECK(g(1, 1) == Catch::Approx(1.0).margin(1e-14));
    CHECK(g(0, 1) == Catch::Approx(0.0).margin(1e-14));

    auto s2 = ManifoldModel::sphere(2.0);
    Mat2 g2 = metric_at(s2, {kChartSpherical, {pi / 3, 0.7}});
    CHECK(g2(0, 0) == Catch::Approx(4.0));
    CHECK(g2(1, 1) == Catch::Approx(3.0));
}

TEST_CASE("flat torus metric is the identity") {
    auto t = ManifoldModel::torus(2 * pi, 2 * pi);
    Mat2 g = metric_at(t, {0, {1.3, 5.2}});
    CHECK(g(0, 0) == 1.0);
    CHECK(g(1, 1) == 1.0);
    CHECK(g(0, 1) == 0.0);
}

TEST_CASE("out-of-chart coordinates raise a domain error") {
    auto s = ManifoldModel::sphere(1.0);
    CHECK_THROWS_AS(metric_at(s, {kChartNorth, {3.1, 1.2}}), std::domain_error);
    CHECK_THROWS_AS(metric_at(s, {kChartSpherical, {-0.1, 0.0}}), std::domain_error);
}

TEST_CASE("christoffel symbols: flat torus vanishes, sphere matches symbolic") {
    auto t = ManifoldModel::torus(2 * pi, 4 * pi);
    auto gam = christoffel_at(t, {0, {0.4, 0.9}});
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) CHECK(gam[k](i, j) == 0.0);

    // spherical chart (theta,phi): Gamma^theta_{phi phi} = -sin cos,
    // Gamma^phi_{theta phi} = cot(theta)
    auto s = ManifoldModel::sphere(1.0);
    for (double th : {0.4, 1.0, 2.2}) {
        auto g = christoffel_at(s, {kChartSpherical, {th, 0.3}});
        CHECK(g[0](1, 1) == Catch::Approx(-std::sin(th) * std::cos(th)).margin(1e-12));
        CHECK(g[1](0, 1) == Catch::Approx(std::cos(th) / std::sin(th)).margin(1e-12));
        CHECK(g[1](0, 1) == Catch::Approx(g[1](1, 0)).margin(1e-14));
    }
}

TEST_CASE("christoffel symbols agree with finite differences of the metric") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> un(-1.0, 1.0);

    auto s = ManifoldModel::sphere(1.7);
    auto t = ManifoldModel::torus(2 * pi, 3.0);
    auto sor = bumpy_torus();
    for (int i = 0; i < 40; ++i) {
        ChartPoint ps{kChartNorth, {1.4 * un(rng), 1.4 * un(rng)}};
        CHECK(christoffel_fd_error(s, ps) < 1e-6);
        ChartPoint pt{0, {3 * un(rng), 3 * un(rng)}};
        CHECK(christoffel_fd_error(t, canonical(t, pt)) < 1e-6);
        ChartPoint pr{0, {2.5 * (un(rng) + 1), pi * (un(rng) + 1)}};
        CHECK(christoffel_fd_error(sor, canonical(sor, pr)) < 1e-6);
    }
}

TEST_CASE("metric is positive definite across charts") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> un(-1.0, 1.0);
    auto s = ManifoldModel::sphere(1.0);
    auto sor = bumpy_torus();
    for (int i = 0; i < 50; ++i) {
        ChartPoint p{kChartNorth, {2.0 * un(rng), 2.0 * un(rng)}};
        if (norm(p.u) < s.sphere_chart_radius()) CHECK(positive_definite(metric_at(s, p)));
        ChartPoint q{0, {5 * (un(rng) + 1) / 2, pi * (un(rng) + 1)}};
        CHECK(positive_definite(metric_at(sor, canonical(sor, q))));
    }
}

TEST_CASE("distances: quarter circles, antipodes, lattice shifts") {
    auto s1 = ManifoldModel::sphere(1.0);
    ChartPoint pole{kChartNorth, {0, 0}};
    ChartPoint equator{kChartSpherical, {pi / 2, 0.3}};
    CHECK(distance(s1, pole, equator) == Catch::Approx(pi / 2).margin(1e-12));

    auto s2 = ManifoldModel::sphere(2.0);
    ChartPoint a{kChartSpherical, {0.4, 1.0}}, b{kChartSpherical, {pi - 0.4, 1.0 + pi}};
    CHECK(distance(s2, a, b) == Catch::Approx(2 * pi).margin(1e-12));

    auto t = ManifoldModel::torus(2 * pi, 2 * pi);
    CHECK(distance(t, {0, {0, 0}}, {0, {pi, 0}}) == Catch::Approx(pi).margin(1e-14));
    CHECK(distance(t, {0, {0.2, 0}}, {0, {2 * pi - 0.2, 0}}) ==
          Catch::Approx(0.4).margin(1e-14));
}

TEST_CASE("sphere distance agrees with the chordal arccos formula") {
    auto s = ManifoldModel::sphere(1.3);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uth(0.05, pi - 0.05), uph(0, 2 * pi);
    for (int i = 0; i < 100; ++i) {
        ChartPoint a{kChartSpherical, {uth(rng), uph(rng)}};
        ChartPoint b{kChartSpherical, {uth(rng), uph(rng)}};
        Vec3 A = sphere_embed(s, a), B = sphere_embed(s, b);
        double want = s.radius * std::acos(std::clamp(dot(A, B) / (s.radius * s.radius), -1.0, 1.0));
        CHECK(distance(s, a, b) == Catch::Approx(want).margin(1e-10));
    }
}

TEST_CASE("distance symmetry and triangle inequality on sampled points") {
    auto s = ManifoldModel::sphere(1.0);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uth(0.05, pi - 0.05), uph(0, 2 * pi);
    for (int i = 0; i < 50; ++i) {
        ChartPoint a{kChartSpherical, {uth(rng), uph(rng)}};
        ChartPoint b{kChartSpherical, {uth(rng), uph(rng)}};
        ChartPoint c{kChartSpherical, {uth(rng), uph(rng)}};
        CHECK(distance(s, a, b) == Catch::Approx(distance(s, b, a)).margin(1e-12));
        CHECK(distance(s, a, c) <= distance(s, a, b) + distance(s, b, c) + 1e-10);
    }
    CHECK(distance(s, {kChartNorth, {0.3, 0.4}}, {kChartNorth, {0.3, 0.4}}) == 0.0);
}

TEST_CASE("injectivity radius closed forms and flags") {
    CHECK(injectivity_radius(ManifoldModel::sphere(1.0)).value == Catch::Approx(pi));
    CHECK(injectivity_radius(ManifoldModel::sphere(2.5)).value == Catch::Approx(2.5 * pi));
    auto ir = injectivity_radius(ManifoldModel::torus(2 * pi, 4 * pi));
    CHECK(ir.value == Catch::Approx(pi));
    CHECK(ir.exact);

    auto sr = injectivity_radius(bumpy_torus());
    CHECK_FALSE(sr.exact);
    CHECK(sr.value > 0.0);
}

TEST_CASE("normal coordinates at a sphere point") {
    auto s = ManifoldModel::sphere(1.4);
    NormalCoordinates nc(s, {kChartSpherical, {0.9, 2.0}});

    SECTION("metric at the origin is the identity, derivatives vanish") {
        Mat2 g0 = nc.pullback_metric({0, 0});
        CHECK(g0(0, 0) == Catch::Approx(1.0).margin(1e-9));
        CHECK(g0(1, 1) == Catch::Approx(1.0).margin(1e-9));
        CHECK(g0(0, 1) == Catch::Approx(0.0).margin(1e-9));
        const double h = 1e-2;
        for (int k = 0; k < 2; ++k) {
            Vec2 dv{0, 0};
            dv[k] = h;
            Mat2 gp = nc.pullback_metric(dv), gm = nc.pullback_metric(-dv);
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    CHECK(std::abs(gp(i, j) - gm(i, j)) / (2 * h) < 1e-8);
        }
    }

    SECTION("round trip is the identity") {
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> un(-1.0, 1.0);
        double rmax = 0.5 * injectivity_radius(s).value;
        for (int i = 0; i < 60; ++i) {
            Vec2 v{rmax * un(rng), rmax * un(rng)};
            Vec2 w = nc.to_normal(nc.from_normal(v));
            CHECK(norm(w - v) < 1e-10);
        }
    }

    SECTION("radius beyond the injectivity radius is a domain error") {
        CHECK_THROWS_AS(nc.from_normal({1.4 * pi + 0.1, 0}), std::domain_error);
    }
}

TEST_CASE("normal coordinates: pole chart is polar, torus chart is a translation") {
    auto s = ManifoldModel::sphere(2.0);
    NormalCoordinates nc(s, {kChartNorth, {0, 0}});
    // image of spherical (theta, phi) is (R theta cos phi, R theta sin phi)
    for (double th : {0.3, 1.1}) {
        for (double ph : {0.0, 2.4}) {
            Vec2 v = nc.to_normal({kChartSpherical, {th, ph}});
            CHECK(v.x == Catch::Approx(2.0 * th * std::cos(ph)).margin(1e-10));
            CHECK(v.y == Catch::Approx(2.0 * th * std::sin(ph)).margin(1e-10));
        }
    }

    auto t = ManifoldModel::torus(2 * pi, 2 * pi);
    NormalCoordinates nt(t, {0, {1.0, 2.0}});
    Vec2 v = nt.to_normal({0, {1.5, 1.7}});
    CHECK(v.x == Catch::Approx(0.5).margin(1e-14));
    CHECK(v.y == Catch::Approx(-0.3).margin(1e-14));
    Mat2 g = nt.pullback_metric({0.3, 0.2});
    CHECK(g(0, 0) == Catch::Approx(1.0).margin(1e-9));
    CHECK(g(1, 1) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("normal coordinates on a surface of revolution") {
    auto sor = bumpy_torus();
    NormalCoordinates nc(sor, {0, {1.2, 0.7}});
    Mat2 g0 = nc.pullback_metric({0, 0});
    CHECK(g0(0, 0) == Catch::Approx(1.0).margin(1e-6));
    CHECK(g0(1, 1) == Catch::Approx(1.0).margin(1e-6));
    CHECK(g0(0, 1) == Catch::Approx(0.0).margin(1e-6));

    Vec2 v{0.2, -0.15};
    Vec2 w = nc.to_normal(nc.from_normal(v));
    CHECK(norm(w - v) < 1e-8);
}

TEST_CASE("sphere chart transitions preserve points and covectors") {
    auto s = ManifoldModel::sphere(1.0);
    ChartPoint p{kChartNorth, {1.9, 0.4}};  // well into the southern overlap
    ChartPoint q = transition(s, p, kChartSouth);
    CHECK(norm(sphere_embed(s, p) - sphere_embed(s, q)) < 1e-12);

    // covector length is preserved under transition
    Vec2 xi{0.6, -1.1};
    auto tc = covector_transition(s, p, xi, kChartSouth);
    MetricJet jp = metric_jet(s, p), jq = metric_jet(s, tc.point);
    double np = dot(xi, jp.ginv * xi), nq = dot(tc.xi, jq.ginv * tc.xi);
    CHECK(np == Catch::Approx(nq).margin(1e-11));

    // and the round trip returns the original components
    auto back = covector_transition(s, tc.point, tc.xi, kChartNorth);
    CHECK(norm(back.point.u - p.u) < 1e-11);
    CHECK(norm(back.xi - xi) < 1e-11);
}

TEST_CASE("fiber frame is orthonormal for the inverse metric") {
    auto sor = bumpy_torus();
    ChartPoint x0{0, {0.8, 0.3}};
    auto fr = fiber_frame(sor, x0);
    Mat2 ginv = metric_jet(sor, x0).ginv;
    // frame^T ginv frame == I
    Mat2 gf = transpose(fr.frame) * ginv * fr.frame;
    CHECK(gf(0, 0) == Catch::Approx(1.0).margin(1e-12));
    CHECK(gf(1, 1) == Catch::Approx(1.0).margin(1e-12));
    CHECK(gf(0, 1) == Catch::Approx(0.0).margin(1e-12));
}
