#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "eigengrowth/experiments.hpp"

// Acceptance gate: canned experiment configurations and the table-driven
// criteria. Every tolerance is pinned here and in configs/acceptance.cfg.

namespace eigengrowth::acceptance {

using config::RunConfig;
using experiments::ResultBundle;

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
};

// ---------------------------------------------------------------------------
// canned experiment set feeding the criteria

struct NamedConfig {
    std::string prefix;
    RunConfig cfg;
};

inline RunConfig make_cfg(const std::string& text) { return RunConfig::parse(text); }

inline std::vector<NamedConfig> acceptance_configs() {
    std::vector<NamedConfig> out;
    out.push_back({"", make_cfg(R"(experiment = scaling
seed = 1
[model]
kind = sphere
[params]
radii = 1, 2, 4
l_values = 50, 100, 200
)")});
    out.push_back({"", make_cfg(R"(experiment = quasimode
seed = 1
[model]
kind = sphere
radius = 1.0
[params]
mode = uniform
h_values = 0.01, 0.005, 0.0025
cutoff_R = 1.2
)")});
    out.push_back({"", make_cfg(R"(experiment = quasimode
seed = 1
[model]
kind = sphere
radius = 1.0
[params]
mode = atoms
h = 0.005
atom_angle = 1.3
eps_values = 0.2, 0.1, 0.05
)")});
    out.push_back({"", make_cfg(R"(experiment = defect
seed = 20240810
[model]
kind = torus
[params]
n_symbols = 10
k_values = 32, 64, 128
t_flow = 0.7
)")});
    out.push_back({"sphere_", make_cfg(R"(experiment = return-map
seed = 1
[model]
kind = sphere
radius = 1.0
[params]
n_directions = 64
t_max = 8.0
fiber_tol = 1e-7
)")});
    out.push_back({"torus_", make_cfg(R"(experiment = return-map
seed = 1
[model]
kind = torus
[params]
n_directions = 8
t_max = 16.0
fiber_tol = 1e-9
)")});
    out.push_back({"sphere_", make_cfg(R"(experiment = flow
seed = 1
[model]
kind = sphere
radius = 1.0
[params]
t_values = -10, -3.5, 2.5, 10
n_angles = 8
tol = 1e-9
)")});
    out.push_back({"torus_", make_cfg(R"(experiment = flow
seed = 1
[model]
kind = torus
[params]
t_values = -10, 10
n_angles = 8
tol = 1e-9
)")});
    out.push_back({"torus_", make_cfg(R"(experiment = recurrence
seed = 1
[model]
kind = torus
[params]
n_directions = 180
t_max = 100.0
eps_return = 1e-3
)")});
    out.push_back({"sphere_", make_cfg(R"(experiment = recurrence
seed = 1
[model]
kind = sphere
radius = 1.0
[params]
n_directions = 64
t_max = 12.0
eps_return = 1e-4
)")});
    out.push_back({"sphere_", make_cfg(R"(experiment = bounds
seed = 7
[model]
kind = sphere
radius = 1.0
[params]
n_directions = 64
t_max = 12.0
eps_return = 1e-4
tube_eps = 1e-3
)")});
    out.push_back({"torus_", make_cfg(R"(experiment = bounds
seed = 7
[model]
kind = torus
[params]
n_directions = 180
t_max = 40.0
eps_return = 1e-3
tube_eps = 1e-3
)")});
    out.push_back({"sor_", make_cfg(R"(experiment = bounds
seed = 7
[model]
kind = surface-of-revolution
profile_base = 1.0
profile_amplitude = 0.3
profile_period = 5.0
profile_samples = 64
x0_u = 1.2
x0_v = 0.7
[params]
n_directions = 24
t_max = 30.0
eps_return = 1e-3
tube_eps = 1e-3
)")});
    out.push_back({"", make_cfg(R"(experiment = cluster
seed = 1
[model]
kind = sphere
radius = 1.0
[params]
l_values = 50, 100, 200
delta_window = 0.5
)")});
    return out;
}

inline ResultBundle run_acceptance_bundle(unsigned threads = 0) {
    ResultBundle all;
    all.metadata["experiment"] = "acceptance";
    all.metadata["schema_version"] = experiments::kSchemaVersion;
    all.metadata["runs"] = nlohmann::json::array();
    for (const auto& nc : acceptance_configs())
        all.merge(experiments::run_prefixed(nc.cfg, nc.prefix, threads));
    return all;
}

// ---------------------------------------------------------------------------
// criteria

namespace detail {

inline double wrap_angle_gap(double a, double b) {
    return std::abs(std::remainder(a - b, 2 * manifold::pi));
}

inline std::string fmt(double v) { return utils::format_double(v); }

}  // namespace detail

inline CriterionResult criterion_zonal_saturation(const ResultBundle& b) {
    CriterionResult r{1, "zonal saturation", false, ""};
    const auto* t = b.find("scaling");
    if (!t) {
        r.detail = "missing table: scaling";
        return r;
    }
    double target = 1.0 / std::sqrt(2 * manifold::pi);
    std::vector<std::pair<int, double>> unit_rows;
    for (std::size_t i = 0; i < t->rows.size(); ++i)
        if (t->number(i, "R") == 1.0)
            unit_rows.push_back({static_cast<int>(t->number(i, "l")),
                                 t->number(i, "scaled_sup")});
    std::sort(unit_rows.begin(), unit_rows.end());
    if (unit_rows.size() < 3 || unit_rows.back().first != 200) {
        r.detail = "need l = 50, 100, 200 rows at R = 1";
        return r;
    }
    double final_v = unit_rows.back().second;
    bool in_range = final_v >= 0.387 && final_v <= 0.411;
    bool monotone = true;
    for (std::size_t i = 1; i < unit_rows.size(); ++i)
        monotone = monotone && (std::abs(unit_rows[i].second - target) <=
                                std::abs(unit_rows[i - 1].second - target) + 1e-12);
    r.pass = in_range && monotone;
    r.detail = "h^{1/2} sup at l=200: " + detail::fmt(final_v) + " (target " +
               detail::fmt(target) + "), monotone approach: " + (monotone ? "yes" : "no");
    return r;
}

inline CriterionResult criterion_mode_lower_bound(const ResultBundle& b) {
    CriterionResult r{2, "oscillatory-mode lower bound", false, ""};
    const auto* t = b.find("quasimode_scaling");
    if (!t) {
        r.detail = "missing table: quasimode_scaling";
        return r;
    }
    bool ratio_ok = true;
    double worst_ratio = 1e300;
    std::vector<double> hs, roh;
    for (std::size_t i = 0; i < t->rows.size(); ++i) {
        double ratio = t->number(i, "ratio_cluster");
        double bound = t->number(i, "modes_bound");
        ratio_ok = ratio_ok && (ratio >= 0.95 * bound);
        worst_ratio = std::min(worst_ratio, ratio / bound);
        hs.push_back(t->number(i, "h"));
        roh.push_back(t->number(i, "residual_over_h"));
    }
    bool slope_ok = false;
    double slope = 0.0;
    if (hs.size() >= 2) {
        slope = std::log(roh.front() / roh.back()) / std::log(hs.front() / hs.back());
        slope_ok = slope >= 0.8 && slope <= 1.2;
    }
    r.pass = ratio_ok && slope_ok;
    r.detail = "min ratio/bound = " + detail::fmt(worst_ratio) +
               ", residual/h log-log slope = " + detail::fmt(slope);
    return r;
}

inline CriterionResult criterion_suppression(const ResultBundle& b) {
    CriterionResult r{3, "singular-part suppression", false, ""};
    const auto* t = b.find("quasimode_suppression");
    if (!t) {
        r.detail = "missing table: quasimode_suppression";
        return r;
    }
    bool monotone = t->rows.size() >= 3;
    for (std::size_t i = 1; i < t->rows.size(); ++i)
        monotone = monotone &&
                   (t->number(i, "phi0_scaled") < t->number(i - 1, "phi0_scaled"));
    r.pass = monotone;
    std::string vals;
    for (std::size_t i = 0; i < t->rows.size(); ++i)
        vals += (i ? ", " : "") + t->rows[i][t->column("phi0_scaled")];
    r.detail = "h^{1/2}|Phi(z0)| over shrinking eps: " + vals;
    return r;
}

inline CriterionResult criterion_defect_oracle(const ResultBundle& b) {
    CriterionResult r{4, "defect-pairing oracle", false, ""};
    const auto* pairs = b.find("defect_pairings");
    const auto* mass = b.find("defect_mass");
    const auto* inv = b.find("defect_invariance");
    if (!pairs || !mass || !inv) {
        r.detail = "missing defect tables";
        return r;
    }
    double worst_pair = 0, worst_mass = 0, worst_inv = 0;
    bool ok = true;
    for (std::size_t i = 0; i < pairs->rows.size(); ++i) {
        double h = pairs->number(i, "h");
        double err = pairs->number(i, "abs_err");
        worst_pair = std::max(worst_pair, err);
        ok = ok && (err <= std::max(1e-3, 5 * h));
    }
    for (std::size_t i = 0; i < mass->rows.size(); ++i) {
        worst_mass = std::max(worst_mass, mass->number(i, "pairing_one_err"));
        ok = ok && (mass->number(i, "pairing_one_err") <= 1e-10);
    }
    for (std::size_t i = 0; i < inv->rows.size(); ++i) {
        worst_inv = std::max(worst_inv, inv->number(i, "discrepancy"));
        ok = ok && (inv->number(i, "discrepancy") <= 1e-3);
    }
    r.pass = ok;
    r.detail = "max |pairing - analytic| = " + detail::fmt(worst_pair) +
               ", pairing(1) err = " + detail::fmt(worst_mass) +
               ", invariance = " + detail::fmt(worst_inv);
    return r;
}

inline CriterionResult criterion_return_dynamics(const ResultBundle& b) {
    CriterionResult r{5, "return dynamics oracle", false, ""};
    const auto* sph = b.find("sphere_return_map");
    const auto* tor = b.find("torus_return_map");
    const auto* flow_s = b.find("sphere_flow");
    const auto* flow_t = b.find("torus_flow");
    if (!sph || !tor || !flow_s || !flow_t) {
        r.detail = "missing return-map or flow tables";
        return r;
    }
    double wT = 0, weta = 0, wJ = 0;
    bool ok = sph->rows.size() >= 64;
    for (std::size_t i = 0; i < sph->rows.size(); ++i) {
        ok = ok && sph->number(i, "converged") == 1.0;
        wT = std::max(wT, std::abs(sph->number(i, "T") - manifold::pi));
        weta = std::max(weta, detail::wrap_angle_gap(sph->number(i, "eta_angle"),
                                                     sph->number(i, "angle")));
        wJ = std::max(wJ, std::abs(sph->number(i, "jacobian") - 1.0));
    }
    ok = ok && wT <= 1e-6 && weta <= 1e-6 && wJ <= 1e-4;
    double wrat = 0;
    for (std::size_t i = 0; i < tor->rows.size(); ++i) {
        double expected = tor->number(i, "expected_T");
        if (expected <= 0) continue;
        ok = ok && tor->number(i, "converged") == 1.0;
        wrat = std::max(wrat, std::abs(tor->number(i, "T") - expected));
    }
    ok = ok && wrat <= 1e-8;
    double wdrift = 0;
    for (const auto* ft : {flow_s, flow_t})
        for (std::size_t i = 0; i < ft->rows.size(); ++i)
            wdrift = std::max(wdrift, ft->number(i, "energy_drift"));
    ok = ok && wdrift <= 1e-8;
    r.pass = ok;
    r.detail = "sphere |T-pi| = " + detail::fmt(wT) + ", |eta-xi| = " + detail::fmt(weta) +
               ", |J-1| = " + detail::fmt(wJ) + "; torus rational err = " +
               detail::fmt(wrat) + "; energy drift = " + detail::fmt(wdrift);
    return r;
}

inline CriterionResult criterion_recurrence(const ResultBundle& b) {
    CriterionResult r{6, "recurrence and dissipativity", false, ""};
    const auto* ts = b.find("torus_recurrence_summary");
    const auto* ss = b.find("sphere_recurrence_summary");
    if (!ts || !ss) {
        r.detail = "missing recurrence summaries";
        return r;
    }
    double tor_frac = ts->number(0, "fraction");
    bool ok = tor_frac <= 0.05;
    ok = ok && ts->text(0, "verdict") == "subsaturating-recurrence";
    bool sphere_nondis = ss->number(0, "dissipative") == 0.0;
    double spread = ss->number(0, "witness_spread");
    ok = ok && sphere_nondis && spread <= 1e-3;
    ok = ok && ss->text(0, "verdict") == "maximal-growth-not-excluded";
    r.pass = ok;
    r.detail = "torus recurrent fraction = " + detail::fmt(tor_frac) +
               ", sphere non-dissipative with constant witness (spread " +
               detail::fmt(spread) + ")";
    return r;
}

inline CriterionResult criterion_inj_scaling(const ResultBundle& b) {
    CriterionResult r{7, "injectivity-radius scaling", false, ""};
    const auto* t = b.find("scaling");
    if (!t) {
        r.detail = "missing table: scaling";
        return r;
    }
    std::vector<std::pair<double, double>> rows;  // (R, scaled_sup) at l = 200
    for (std::size_t i = 0; i < t->rows.size(); ++i)
        if (t->number(i, "l") == 200.0)
            rows.push_back({t->number(i, "R"), t->number(i, "scaled_sup")});
    if (rows.size() < 3) {
        r.detail = "need three radii at l = 200";
        return r;
    }
    bool ok = true;
    double worst = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = i + 1; j < rows.size(); ++j) {
            // K_R sqrt(R) should be radius-independent
            double a = rows[i].second * std::sqrt(rows[i].first);
            double c = rows[j].second * std::sqrt(rows[j].first);
            double dev = std::abs(a - c) / c;
            worst = std::max(worst, dev);
            ok = ok && dev <= 0.05;
        }
    r.pass = ok;
    r.detail = "max pairwise deviation of scaled-sup x sqrt(R): " + detail::fmt(worst);
    return r;
}

inline CriterionResult criterion_constants(const ResultBundle& b) {
    CriterionResult r{8, "constants and factors", false, ""};
    const auto* cl = b.find("cluster");
    if (!cl) {
        r.detail = "missing table: cluster";
        return r;
    }
    bool ok = true;
    std::string notes;
    for (std::string prefix : {"sphere_", "torus_", "sor_"}) {
        const auto* rep = b.find(prefix + "bounds_report");
        if (!rep) {
            r.detail = "missing table: " + prefix + "bounds_report";
            return r;
        }
        double nu = 0, dxi = 0, A = 0, Ap = 0, App = 0;
        for (std::size_t i = 0; i < rep->rows.size(); ++i) {
            std::string q = rep->text(i, "quantity");
            double v = rep->number(i, "value");
            if (q == "nu_hp") nu = v;
            if (q == "dxi_p_norm") dxi = v;
            if (q == "A") A = v;
            if (q == "A_prime") Ap = v;
            if (q == "A_dprime") App = v;
        }
        ok = ok && std::abs(nu - 2.0) <= 1e-8 && std::abs(dxi - 2.0) <= 1e-8;
        ok = ok && A <= Ap * (1 + 1e-6) && Ap <= App * (1 + 1e-6);
        notes += prefix + "A chain (" + detail::fmt(A) + " <= " + detail::fmt(Ap) +
                 " <= " + detail::fmt(App) + ") ";
    }
    double gap = 1e300;
    for (std::size_t i = 0; i < cl->rows.size(); ++i)
        if (cl->number(i, "l") == 200.0) gap = cl->number(i, "rel_gap");
    ok = ok && gap <= 0.02;
    r.pass = ok;
    r.detail = notes + "; cluster ratio gap at l=200: " + detail::fmt(gap);
    return r;
}

inline CriterionResult criterion_properties(const ResultBundle& b) {
    CriterionResult r{9, "property suites", false, ""};
    const auto* ident = b.find("identity_residuals");
    const auto* props = b.find("sphere_bound_properties");
    const auto* tubes = b.find("sphere_tube_cover");
    if (!ident || !props || !tubes) {
        r.detail = "missing property tables";
        return r;
    }
    bool ok = true;
    for (std::size_t i = 1; i < ident->rows.size(); ++i) {
        ok = ok && ident->number(i, "residual_product") <=
                       1.1 * ident->number(i - 1, "residual_product");
        ok = ok && ident->number(i, "residual_commutator") <=
                       1.1 * ident->number(i - 1, "residual_commutator");
    }
    for (std::size_t i = 0; i < props->rows.size(); ++i)
        ok = ok && props->number(i, "pass") == 1.0;
    for (std::size_t i = 0; i < tubes->rows.size(); ++i) {
        ok = ok && tubes->number(i, "budget_used") < tubes->number(i, "eps");
        ok = ok && std::abs(tubes->number(i, "covered_mass") -
                            tubes->number(i, "total_mass")) < 1e-12;
    }
    r.pass = ok;
    r.detail = ok ? "identity residuals decreasing; embedding, tube-cover, "
                    "monotonicity and scaling checks all hold"
                  : "one or more property checks failed";
    return r;
}

inline std::vector<CriterionResult> evaluate_all(const ResultBundle& b) {
    return {criterion_zonal_saturation(b), criterion_mode_lower_bound(b),
            criterion_suppression(b),      criterion_defect_oracle(b),
            criterion_return_dynamics(b),  criterion_recurrence(b),
            criterion_inj_scaling(b),      criterion_constants(b),
            criterion_properties(b)};
}

}  // namespace eigengrowth::acceptance
