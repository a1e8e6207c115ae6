#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "eigengrowth/bounds.hpp"

using namespace eigengrowth;
using namespace eigengrowth::bounds;
using dynamics::HamiltonianModel;
using manifold::ChartPoint;
using manifold::ManifoldModel;
using manifold::pi;

namespace {
const ChartPoint kPole{manifold::kChartNorth, {0, 0}};

HamiltonianModel sphere_ham(double R = 1.0) {
    return HamiltonianModel::laplace(ManifoldModel::sphere(R));
}
}  // namespace

TEST_CASE("velocity factors of the Laplace-type symbols") {
    auto ham = sphere_ham();
    auto fr = manifold::fiber_frame(ham.manifold, kPole);

    SECTION("|nu(H_p)| = |dp/dxi|_g = 2 for p = |xi|^2 - 1") {
        for (double a : {0.0, 0.8, 2.9}) {
            Vec2 xi = fr.direction(a);
            CHECK(nu_Hp(ham, kPole, xi) == Catch::Approx(2.0).margin(1e-8));
            CHECK(dxi_p_norm(ham, kPole, xi) == Catch::Approx(2.0).margin(1e-8));
        }
        // also at a generic base point of the torus
        auto th = HamiltonianModel::laplace(ManifoldModel::torus(2 * pi, 2 * pi));
        ChartPoint x0{0, {1.0, 0.4}};
        auto frt = manifold::fiber_frame(th.manifold, x0);
        CHECK(nu_Hp(th, x0, frt.direction(1.3)) == Catch::Approx(2.0).margin(1e-10));
    }
    SECTION("the scaled symbol halves both factors") {
        auto sh = HamiltonianModel::scaled_laplace(ManifoldModel::sphere(1.0), 0.5);
        Vec2 xi = fr.direction(0.4);
        CHECK(nu_Hp(sh, kPole, xi) == Catch::Approx(1.0).margin(1e-10));
        CHECK(dxi_p_norm(sh, kPole, xi) == Catch::Approx(1.0).margin(1e-10));
    }
    SECTION("|nu(H_p)| matches the finite-difference base speed of the flow") {
        for (double a : {0.2, 1.7}) {
            Vec2 xi = fr.direction(a);
            double dt = 1e-6;
            auto q = dynamics::flow(ham, {kPole, xi}, dt);
            double speed = manifold::distance(ham.manifold, q.x, kPole) / dt;
            CHECK(nu_Hp(ham, kPole, xi) == Catch::Approx(speed).margin(1e-6));
        }
    }
    SECTION("graph symbol at a = 0: unit base speed on the flat torus") {
        auto gh = HamiltonianModel::graph(ManifoldModel::torus(2 * pi, 2 * pi),
                                          [](Vec2, double) { return 0.0; });
        ChartPoint x0{0, {0.3, 0.3}};
        CHECK(dxi_p_norm(gh, x0, Vec2{0.0, 0.7}) == Catch::Approx(1.0).margin(1e-8));
    }
    SECTION("off-shell points are rejected") {
        CHECK_THROWS_AS(nu_Hp(ham, kPole, Vec2{2.0, 0.0}), std::domain_error);
    }
}

TEST_CASE("sup-norm bound integral") {
    auto ham = sphere_ham();

    SECTION("pure singular part gives the vanishing verdict") {
        auto dec = MeasureDecomposition::uniform(kPole, 64, 0.0);
        dec.atoms = {{0.3, 1.0}};
        auto rep = thm_local_bound(dec, ham);
        CHECK(rep.raw_integral == 0.0);
        CHECK(rep.vanishes);
    }
    SECTION("constant density: C_n sqrt(c) Vol(S^1) since the ratio is 1") {
        double c = 0.37;
        auto dec = MeasureDecomposition::uniform(kPole, 128, c);
        auto rep = thm_local_bound(dec, ham, 1.0);
        CHECK(rep.raw_integral == Catch::Approx(std::sqrt(c) * 2 * pi).epsilon(1e-10));
        CHECK(*rep.scaled_value == Catch::Approx(rep.raw_integral));
        CHECK(rep.ingredients.at("ratio_min") == Catch::Approx(1.0).margin(1e-9));
        CHECK(rep.ingredients.at("ratio_max") == Catch::Approx(1.0).margin(1e-9));
    }
    SECTION("Cauchy-Schwarz sanity on a half-supported density") {
        auto dec = MeasureDecomposition::uniform(kPole, 256, 0.0);
        double mass = 0.0;
        for (int i = 0; i < 128; ++i) {
            double v = 0.2 + 0.1 * std::sin(dec.angles[i]);
            dec.f[i] = v;
        }
        for (int i = 0; i < 128; ++i) mass += dec.f[i] * dec.fiber_cell();
        auto rep = thm_local_bound(dec, ham);
        double suppvol = pi;  // half the circle
        CHECK(rep.raw_integral <= std::sqrt(suppvol) * std::sqrt(mass) + 1e-3);
    }
    SECTION("monotone in the density and sqrt-homogeneous in its scale") {
        auto small = MeasureDecomposition::uniform(kPole, 64, 0.0);
        auto big = small;
        for (int i = 0; i < 64; ++i) {
            small.f[i] = 0.1 + 0.05 * std::cos(small.angles[i]);
            big.f[i] = small.f[i] + 0.02 * (1 + std::sin(3 * small.angles[i]));
        }
        double b_small = thm_local_bound(small, ham).raw_integral;
        double b_big = thm_local_bound(big, ham).raw_integral;
        CHECK(b_small < b_big);
        for (double c : {0.25, 4.0, 9.0}) {
            auto scaled = small;
            for (auto& v : scaled.f) v *= c;
            double b_scaled = thm_local_bound(scaled, ham).raw_integral;
            CHECK(b_scaled == Catch::Approx(std::sqrt(c) * b_small).epsilon(1e-10));
        }
    }
}

TEST_CASE("mode lower bound and its normalization oracle") {
    SECTION("zero density") {
        auto dec = MeasureDecomposition::uniform(kPole, 32, 0.0);
        CHECK(*modes_lower_bound(dec).scaled_value == 0.0);
    }
    SECTION("uniform density of unit flowout mass on the unit sphere") {
        // oracle: int f dH over the flowout = period x |nu| x int_fiber f
        //        = pi * 2 * (2 pi f) = 1  =>  f = 1/(4 pi^2)
        double f = 1.0 / (4 * pi * pi);
        auto dec = MeasureDecomposition::uniform(kPole, 256, f);
        CHECK(flowout_mass(dec, 2.0, pi) == Catch::Approx(1.0).epsilon(1e-12));
        auto rep = modes_lower_bound(dec);
        // (2 pi)^{-1/2} * 2 pi * sqrt(f) = (2 pi)^{-1/2}
        CHECK(*rep.scaled_value ==
              Catch::Approx(1.0 / std::sqrt(2 * pi)).epsilon(1e-12));
        CHECK(*rep.scaled_value == Catch::Approx(0.39894).margin(5e-6));
    }
    SECTION("raw integrals of the two bounds agree for the Laplace symbol") {
        auto ham = sphere_ham();
        auto dec = MeasureDecomposition::uniform(kPole, 64, 0.0);
        for (int i = 0; i < 64; ++i) dec.f[i] = 0.03 + 0.01 * std::cos(dec.angles[i]);
        CHECK(thm_local_bound(dec, ham).raw_integral ==
              Catch::Approx(modes_lower_bound(dec).raw_integral).epsilon(1e-9));
    }
}

TEST_CASE("cluster constants obey A <= A' <= A''") {
    SECTION("sphere: all three coincide") {
        auto ham = sphere_ham();
        auto recur = dynamics::recurrent_set_estimate(ham, kPole, 32, 12.0, 1e-4);
        auto c = cluster_constants(ham, kPole, 1.0, recur);
        CHECK(c.A == Catch::Approx(0.5 * std::sqrt(2.0)).margin(1e-4));
        // slack at the return-time refinement accuracy
        CHECK(c.A <= c.A_prime * (1 + 1e-8));
        CHECK(c.A_prime <= c.A_dprime * (1 + 1e-8));
        CHECK(c.A_dprime == Catch::Approx(c.A).margin(1e-4));
    }
    SECTION("torus: near-empty recurrent set gives a tiny constant") {
        auto ham = HamiltonianModel::laplace(ManifoldModel::torus(2 * pi, 2 * pi));
        ChartPoint x0{0, {0, 0}};
        auto recur = dynamics::recurrent_set_estimate(ham, x0, 180, 40.0, 1e-4);
        auto c = cluster_constants(ham, x0, 1.0, recur);
        CHECK(c.A <= 0.2);
        CHECK(c.A <= c.A_prime + 1e-12);
        CHECK(c.A_prime <= c.A_dprime + 1e-12);
    }
}

TEST_CASE("injectivity-radius constant") {
    CHECK(hormander_constant(ManifoldModel::sphere(1.0), 1.0).value ==
          Catch::Approx(1.0 / std::sqrt(pi)));
    double r1 = hormander_constant(ManifoldModel::sphere(1.0), 1.0).value;
    double r4 = hormander_constant(ManifoldModel::sphere(4.0), 1.0).value;
    CHECK(r1 / r4 == Catch::Approx(2.0).epsilon(1e-12));

    std::vector<double> rho;
    for (int i = 0; i < 48; ++i) rho.push_back(1.0 + 0.25 * std::cos(2 * pi * i / 48));
    auto hc = hormander_constant(ManifoldModel::surface_of_revolution(rho, 4.0), 1.0);
    CHECK_FALSE(hc.inj_exact);
}

TEST_CASE("singular tube covers") {
    SECTION("ten atoms within a 1e-3 budget") {
        std::vector<MeasureAtom> atoms;
        for (int k = 0; k < 10; ++k) atoms.push_back({2 * pi * k / 10.0, 0.1});
        auto tubes = singular_tube_cover(kPole, atoms, 1e-3, 0.3);
        REQUIRE(tubes.size() == 10);
        double budget = 0;
        for (const auto& t : tubes) {
            CHECK(t.fiber_radius < 1e-4);
            budget += t.fiber_radius;
        }
        CHECK(budget < 1e-3);
        // coverage: each atom direction is inside its tube
        auto ham = sphere_ham();
        auto fr = manifold::fiber_frame(ham.manifold, kPole);
        double covered_mass = 0.0;
        for (std::size_t k = 0; k < atoms.size(); ++k) {
            dynamics::PhasePoint q{kPole, fr.direction(atoms[k].angle)};
            bool in_any = false;
            for (const auto& t : tubes) in_any = in_any || tube_contains(ham, t, q);
            if (in_any) covered_mass += atoms[k].mass;
        }
        CHECK(covered_mass == Catch::Approx(1.0).epsilon(1e-12));
    }
    SECTION("single atom: any radius below the budget works") {
        auto tubes = singular_tube_cover(kPole, {{1.1, 1.0}}, 0.02, 0.4);
        REQUIRE(tubes.size() == 1);
        CHECK(tubes[0].fiber_radius < 0.02);
    }
    SECTION("coincident atoms collapse to one tube") {
        auto tubes = singular_tube_cover(kPole, {{1.0, 0.5}, {1.0, 0.5}}, 0.01, 0.3);
        CHECK(tubes.size() == 1);
    }
}

TEST_CASE("decomposition invariance checks") {
    auto ham = sphere_ham();

    SECTION("uniform density on the sphere: discrepancy at rounding level") {
        auto dec = MeasureDecomposition::uniform(kPole, 32, 1.0 / (4 * pi * pi));
        auto d = decomposition_invariance_check(dec, ham, 0.9);
        CHECK(d.density < 1e-8);
        CHECK_FALSE(d.flagged);
    }
    SECTION("single atom on a closed geodesic") {
        auto dec = MeasureDecomposition::uniform(kPole, 16, 0.0);
        dec.atoms = {{0.7, 1.0}};
        auto d = decomposition_invariance_check(dec, ham, 0.4);
        CHECK(d.atoms < 1e-6);
        CHECK_FALSE(d.flagged);
    }
    SECTION("smoothed hemisphere flowout density is flagged at t = pi/4") {
        auto dec = MeasureDecomposition::uniform(kPole, 32, 1.0 / (4 * pi * pi));
        dec.flowout_density = [&](const dynamics::PhasePoint& q) {
            // northern-cap indicator, smoothed: depends on the base point only
            Vec3 P = manifold::sphere_embed(ham.manifold, q.x);
            return quasimode::RadialCutoff::smooth_step((P.z + 0.2) / 0.4);
        };
        auto d = decomposition_invariance_check(dec, ham, pi / 4);
        CHECK(d.density > 0.1);
        CHECK(d.flagged);
    }
}

TEST_CASE("recurrence support of the absolutely continuous part") {
    SECTION("sphere: everything recurrent, no violating mass") {
        auto ham = sphere_ham();
        auto recur = dynamics::recurrent_set_estimate(ham, kPole, 32, 12.0, 1e-4);
        auto dec = MeasureDecomposition::uniform(kPole, 32, 0.2);
        CHECK(recurrence_support_check(dec, recur) < 1e-12);
    }
    SECTION("torus: constant density is essentially all violating") {
        auto ham = HamiltonianModel::laplace(ManifoldModel::torus(2 * pi, 2 * pi));
        ChartPoint x0{0, {0, 0}};
        auto recur = dynamics::recurrent_set_estimate(ham, x0, 180, 40.0, 1e-3);
        double c = 0.3;
        auto dec = MeasureDecomposition::uniform(x0, 180, c);
        double viol = recurrence_support_check(dec, recur);
        CHECK(viol == Catch::Approx(c * 2 * pi).epsilon(0.05));
    }
    SECTION("zero density never violates") {
        auto ham = sphere_ham();
        auto recur = dynamics::recurrent_set_estimate(ham, kPole, 16, 8.0, 1e-4);
        auto dec = MeasureDecomposition::uniform(kPole, 16, 0.0);
        CHECK(recurrence_support_check(dec, recur) == 0.0);
    }
}

TEST_CASE("growth classification") {
    SECTION("torus point is subsaturating through the recurrence corollary") {
        auto ham = HamiltonianModel::laplace(ManifoldModel::torus(2 * pi, 2 * pi));
        ChartPoint x0{0, {0, 0}};
        auto recur = dynamics::recurrent_set_estimate(ham, x0, 180, 60.0, 1e-3);
        auto dis = dynamics::dissipativity_test(ham, x0, recur);
        auto c = classify_point(ham, x0, recur, dis);
        CHECK(c.verdict == GrowthVerdict::SubsaturatingRecurrence);
    }
    SECTION("sphere pole: maximal growth not excluded") {
        auto ham = sphere_ham();
        auto recur = dynamics::recurrent_set_estimate(ham, kPole, 32, 12.0, 1e-4);
        auto dis = dynamics::dissipativity_test(ham, kPole, recur);
        auto c = classify_point(ham, kPole, recur, dis);
        CHECK(c.verdict == GrowthVerdict::MaximalGrowthNotExcluded);
    }
    SECTION("rule table: dissipative with positive volume is subsaturating") {
        auto ham = sphere_ham();
        dynamics::RecurrenceResult recur;
        recur.volume = pi;  // hypothetical positive recurrent volume
        dynamics::DissipativityVerdict dis;
        dis.dissipative = true;
        auto c = classify_point(ham, kPole, recur, dis);
        CHECK(c.verdict == GrowthVerdict::SubsaturatingDissipative);
    }
}

TEST_CASE("exact spectral-cluster sums on the sphere") {
    CHECK(cluster_sup_sphere(100, 0.5) == Catch::Approx(201.0 / (4 * pi)).epsilon(1e-12));
    CHECK(cluster_sup_sphere(100, 0.5) == Catch::Approx(15.995).margin(5e-3));
    CHECK(cluster_sup_sphere(0, 0.5) == Catch::Approx(1.0 / (4 * pi)).epsilon(1e-12));

    // ratio against lambda^{n-1} approaches 1/(2 pi)
    int l = 200;
    double lam = std::sqrt(static_cast<double>(l) * (l + 1.0));
    double ratio = cluster_sup_sphere(l, 0.5) / lam;
    CHECK(ratio == Catch::Approx(1.0 / (2 * pi)).epsilon(0.02));

    // wider windows on a radius-2 sphere pick up several clusters
    double wide = cluster_sup_sphere(40, 1.2, 2.0);
    double single = cluster_sup_sphere(40, 0.2, 2.0);
    CHECK(wide > single);
}
