#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "eigengrowth/bounds.hpp"
#include "eigengrowth/chart_quantization.hpp"
#include "eigengrowth/config.hpp"
#include "eigengrowth/csv.hpp"
#include "eigengrowth/dynamics.hpp"
#include "eigengrowth/microlocal.hpp"
#include "eigengrowth/quasimode.hpp"

// Experiment harness: configuration-driven runs of the flow, return-map,
// recurrence, quasimode, defect, bounds, scaling and cluster experiments,
// with CSV tables and JSON metadata written per run, plus the acceptance
// criteria evaluated against bundle tables.

namespace eigengrowth::experiments {

using config::RunConfig;
using manifold::ChartPoint;
using manifold::ManifoldModel;
using manifold::pi;

inline const char* kSchemaVersion = "1";

// ---------------------------------------------------------------------------
// result bundles

struct ResultBundle {
    std::vector<csv::Table> tables;
    nlohmann::json metadata;

    const csv::Table* find(const std::string& name) const {
        for (const auto& t : tables)
            if (t.name == name) return &t;
        return nullptr;
    }

    void write(const std::string& dir) const {
        namespace fs = std::filesystem;
        fs::create_directories(dir);
        nlohmann::json meta = metadata;
        meta["tables"] = nlohmann::json::object();
        for (const auto& t : tables) {
            std::string content = t.serialize();
            csv::write_file(dir + "/" + t.name + ".csv", content);
            meta["tables"][t.name] =
                "fnv64:" + std::to_string(utils::fnv1a(content));
        }
        csv::write_file(dir + "/metadata.json", meta.dump(2) + "\n");
    }

    static ResultBundle load(const std::string& dir) {
        namespace fs = std::filesystem;
        ResultBundle b;
        b.metadata = nlohmann::json::parse(csv::read_file(dir + "/metadata.json"));
        if (b.metadata.contains("tables"))
            for (auto& [name, hash] : b.metadata["tables"].items()) {
                auto t = csv::Table::parse(name, csv::read_file(dir + "/" + name + ".csv"));
                b.tables.push_back(std::move(t));
            }
        return b;
    }

    // append tables of another bundle (used to accumulate experiments)
    void merge(ResultBundle other) {
        for (auto& t : other.tables) tables.push_back(std::move(t));
        if (!metadata.contains("runs")) metadata["runs"] = nlohmann::json::array();
        metadata["runs"].push_back(other.metadata);
    }
};

// ---------------------------------------------------------------------------
// model construction from the config [model] block

inline ManifoldModel model_from_config(const RunConfig& c) {
    std::string kind = c.get_string("model.kind", "sphere");
    if (kind == "sphere") return ManifoldModel::sphere(c.get_double("model.radius", 1.0));
    if (kind == "torus")
        return ManifoldModel::torus(c.get_double("model.period1", 2 * pi),
                                    c.get_double("model.period2", 2 * pi));
    if (kind == "surface-of-revolution") {
        double amp = c.get_double("model.profile_amplitude", 0.3);
        double base = c.get_double("model.profile_base", 1.0);
        double period = c.get_double("model.profile_period", 5.0);
        int n = static_cast<int>(c.get_int("model.profile_samples", 64));
        std::vector<double> rho;
        for (int i = 0; i < n; ++i)
            rho.push_back(base + amp * std::cos(2 * pi * i / n));
        return ManifoldModel::surface_of_revolution(rho, period);
    }
    throw config::ConfigError("unknown model.kind: " + kind);
}

inline ChartPoint base_point_from_config(const RunConfig& c, const ManifoldModel& m) {
    if (m.kind == manifold::ModelKind::RoundSphere)
        return {manifold::kChartNorth,
                {c.get_double("model.x0_u", 0.0), c.get_double("model.x0_v", 0.0)}};
    return {0, {c.get_double("model.x0_u", 0.0), c.get_double("model.x0_v", 0.0)}};
}

// ---------------------------------------------------------------------------
// individual experiments

inline csv::Table flow_experiment(const RunConfig& c, unsigned threads) {
    auto model = model_from_config(c);
    auto ham = dynamics::HamiltonianModel::laplace(model);
    ChartPoint x0 = base_point_from_config(c, model);
    auto fr = manifold::fiber_frame(model, x0);
    auto ts = c.has("params.t_values") ? c.get_doubles("params.t_values")
                                       : std::vector<double>{-10, -3.5, 2.5, 10};
    int n_ang = static_cast<int>(c.get_int("params.n_angles", 8));
    double tol = c.get_double("params.tol", 1e-9);

    csv::Table t;
    t.name = "flow";
    t.header = {"model", "t", "angle", "energy_drift", "group_law_err"};
    std::string kind = c.get_string("model.kind", "sphere");
    std::vector<std::vector<std::string>> rows(ts.size() * n_ang);
    utils::parallel_for(
        rows.size(),
        [&](std::size_t idx) {
            std::size_t i = idx / n_ang, j = idx % n_ang;
            double angle = 2 * pi * static_cast<double>(j) / n_ang;
            dynamics::PhasePoint q0{x0, fr.direction(angle)};
            double p0 = dynamics::symbol_value(ham, q0);
            auto q = dynamics::flow(ham, q0, ts[i], tol);
            double drift = std::abs(dynamics::symbol_value(ham, q) - p0);
            auto a = dynamics::flow(ham, dynamics::flow(ham, q0, 0.4 * ts[i], tol),
                                    0.6 * ts[i], tol);
            double group = dynamics::phase_distance(ham, a, q);
            rows[idx] = {kind, csv::cell(ts[i]), csv::cell(angle), csv::cell(drift),
                         csv::cell(group)};
        },
        threads);
    t.rows = std::move(rows);
    return t;
}

inline csv::Table return_map_experiment(const RunConfig& c, unsigned threads) {
    auto model = model_from_config(c);
    auto ham = dynamics::HamiltonianModel::laplace(model);
    ChartPoint x0 = base_point_from_config(c, model);
    auto fr = manifold::fiber_frame(model, x0);
    int n = static_cast<int>(c.get_int("params.n_directions", 64));
    dynamics::ReturnScanOptions opt;
    opt.t_max = c.get_double("params.t_max", 10.0);
    opt.fiber_tol = c.get_double("params.fiber_tol", 1e-7);
    std::string kind = c.get_string("model.kind", "sphere");

    csv::Table t;
    t.name = "return_map";
    t.header = {"model",     "angle",   "converged",      "T",
                "expected_T", "eta_angle", "jacobian",     "grazing"};
    std::vector<std::vector<std::string>> rows(n);
    utils::parallel_for(
        static_cast<std::size_t>(n),
        [&](std::size_t i) {
            double angle = 2 * pi * static_cast<double>(i) / n;
            double expected = -1.0;
            if (model.kind == manifold::ModelKind::RoundSphere)
                expected = pi * model.radius;
            else if (model.kind == manifold::ModelKind::FlatTorus) {
                // lattice oracle: smallest t > 0 with 2 t d in the lattice
                Vec2 d{std::cos(angle), std::sin(angle)};
                for (int p = -9; p <= 9; ++p)
                    for (int q = -9; q <= 9; ++q) {
                        if (p == 0 && q == 0) continue;
                        Vec2 lat{model.periods[0] * p, model.periods[1] * q};
                        double tt = 0.5 * dot(lat, d);
                        if (tt <= 1e-12) continue;
                        if (norm(lat - d * (2.0 * tt)) < 1e-9 && tt <= opt.t_max)
                            expected = (expected < 0) ? tt : std::min(expected, tt);
                    }
            }
            auto rec = dynamics::return_time(ham, x0, fr.direction(angle), opt);
            if (rec) {
                double ea = std::atan2(rec->returned_direction.y, rec->returned_direction.x);
                rows[i] = {kind,
                           csv::cell(angle),
                           csv::cell(true),
                           csv::cell(rec->return_time),
                           csv::cell(expected),
                           csv::cell(ea),
                           csv::cell(rec->jacobian),
                           csv::cell(rec->grazing)};
            } else {
                rows[i] = {kind,           csv::cell(angle), csv::cell(false),
                           csv::cell(-1.0), csv::cell(expected), csv::cell(0.0),
                           csv::cell(0.0), csv::cell(false)};
            }
        },
        threads);
    t.rows = std::move(rows);
    return t;
}

inline std::vector<csv::Table> recurrence_experiment(const RunConfig& c, unsigned threads) {
    auto model = model_from_config(c);
    auto ham = dynamics::HamiltonianModel::laplace(model);
    ChartPoint x0 = base_point_from_config(c, model);
    int n = static_cast<int>(c.get_int("params.n_directions", 180));
    double t_max = c.get_double("params.t_max", 100.0);
    double eps = c.get_double("params.eps_return", 1e-3);
    std::string kind = c.get_string("model.kind", "sphere");

    auto recur = dynamics::recurrent_set_estimate(ham, x0, n, t_max, eps, threads);
    auto dis = dynamics::dissipativity_test(ham, x0, recur);
    auto cls = bounds::classify_point(ham, x0, recur, dis);

    csv::Table per;
    per.name = "recurrence";
    per.header = {"angle", "recurrent", "returned", "T", "jacobian"};
    for (const auto& d : recur.directions)
        per.add_row({csv::cell(d.angle), csv::cell(d.recurrent), csv::cell(d.returned),
                     csv::cell(d.returned ? d.first_return_time : -1.0),
                     csv::cell(d.returned ? d.jacobian : 0.0)});

    double spread = 0.0;
    if (!dis.witness.empty()) {
        double mn = 1e300, mx = -1e300;
        for (int idx = 0; idx < static_cast<int>(dis.witness.size()); ++idx) {
            if (!recur.directions[idx].recurrent) continue;
            mn = std::min(mn, dis.witness[idx]);
            mx = std::max(mx, dis.witness[idx]);
        }
        spread = (mx > mn) ? mx - mn : 0.0;
    }
    std::string verdict =
        cls.verdict == bounds::GrowthVerdict::SubsaturatingRecurrence
            ? "subsaturating-recurrence"
            : (cls.verdict == bounds::GrowthVerdict::SubsaturatingDissipative
                   ? "subsaturating-dissipative"
                   : "maximal-growth-not-excluded");
    csv::Table summary;
    summary.name = "recurrence_summary";
    summary.header = {"model",     "n_directions", "t_max",         "eps_return",
                      "volume",    "fraction",     "dissipative",   "retained_norm",
                      "witness_spread", "verdict", "inf_T_recurrent"};
    summary.add_row({kind, csv::cell(n), csv::cell(t_max), csv::cell(eps),
                     csv::cell(recur.volume), csv::cell(recur.volume / recur.total_volume),
                     csv::cell(dis.dissipative), csv::cell(dis.retained_norm_fraction),
                     csv::cell(spread), verdict,
                     csv::cell(std::isfinite(recur.inf_return_time_recurrent())
                                   ? recur.inf_return_time_recurrent()
                                   : -1.0)});
    return {per, summary};
}

// cluster-ladder degree for a nominal semiclassical parameter
inline int ladder_degree(double h_nominal, double R = 1.0) {
    return std::max(1, static_cast<int>(std::llround(R / h_nominal - 0.5)));
}

inline std::vector<csv::Table> quasimode_experiment(const RunConfig& c, unsigned threads) {
    (void)threads;
    auto model = model_from_config(c);
    if (model.kind != manifold::ModelKind::RoundSphere)
        throw config::ConfigError(
            "the oscillatory-mode construction needs a common return time; "
            "model.kind must be sphere");
    const double R = model.radius;
    std::vector<csv::Table> out;

    std::string mode = c.get_string("params.mode", "uniform");
    double cutoff_R = c.get_double("params.cutoff_R", 1.2);
    auto chi = quasimode::make_radial_cutoff(cutoff_R, 2);

    if (mode == "uniform") {
        // unit flowout mass: f = 1 / (period * |nu| * Vol(S^1))
        double period = pi * R;
        double fconst = 1.0 / (period * 2.0 * 2.0 * pi);
        auto hs = c.has("params.h_values") ? c.get_doubles("params.h_values")
                                           : std::vector<double>{0.01, 0.005, 0.0025};
        csv::Table t;
        t.name = "quasimode_scaling";
        t.header = {"h_nominal", "l",           "h",           "eps",
                    "phi0_scaled_raw", "ratio_cluster", "modes_bound", "norm_cluster",
                    "residual_rel", "residual_over_h", "consistency_err"};
        for (double hn : hs) {
            int l = ladder_degree(hn, R);
            double h = quasimode::cluster_h(l, R);
            double eps = std::pow(h, 0.25);
            quasimode::QuasimodeSpec spec;
            spec.center = {manifold::kChartNorth, {0, 0}};
            spec.g1 = quasimode::FiberAmplitude::constant(std::sqrt(fconst));
            spec.h = h;
            spec.epsilon = eps;
            spec.cutoff_R = cutoff_R;

            // oscillatory value at the center, with the polar-quadrature route
            // cross-checked against the collapsed fiber integral
            fft::cplx phi0 = quasimode::evaluate_quasimode(spec, chi, {0, 0});
            double consistency = std::abs(phi0 - quasimode::center_value(spec)) /
                                 std::max(1e-300, std::abs(phi0));
            double phi0_scaled = std::sqrt(h) * std::abs(phi0);

            // global mode: spectral-cluster component of the oscillatory field
            int ntheta = std::max(256, static_cast<int>(2.2 * l) + 64);
            auto grid = quasimode::SphereGrid::make(R, ntheta, 8);
            auto field = quasimode::build_sphere_field(spec, grid);
            auto co = quasimode::sh_analysis(field, std::min(ntheta - 1, l + 80), 2);
            auto proj = quasimode::cluster_project(co, l);
            auto fproj = quasimode::sh_synthesis(proj, grid);
            auto rep = quasimode::residual_norm(fproj, proj, h);
            double c0 = std::abs(proj.c[proj.mmax][l]);
            double center_cluster = c0 * std::sqrt((2.0 * l + 1) / (4 * pi)) / R;
            double ratio = std::sqrt(h) * center_cluster / rep.field_norm;

            bounds::MeasureDecomposition dec =
                bounds::MeasureDecomposition::uniform(spec.center, 256, fconst);
            double bound = *bounds::modes_lower_bound(dec).scaled_value;

            t.add_row({csv::cell(hn), csv::cell(l), csv::cell(h), csv::cell(eps),
                       csv::cell(phi0_scaled), csv::cell(ratio), csv::cell(bound),
                       csv::cell(rep.field_norm),
                       csv::cell(rep.residual / rep.field_norm),
                       csv::cell(rep.residual / rep.field_norm / h),
                       csv::cell(consistency)});

            if (c.get_bool("params.dump_field", false)) {
                csv::Table dump;
                dump.name = "quasimode_field_l" + std::to_string(l);
                dump.header = {"theta", "phi", "re_u", "im_u"};
                int stride = std::max(1, grid.n_theta / 128);
                for (int i = 0; i < grid.n_theta; i += stride)
                    for (int j = 0; j < grid.n_phi; ++j) {
                        fft::cplx v = field.at(i, j);
                        dump.add_row({csv::cell(grid.theta[i]),
                                      csv::cell(2 * pi * j / grid.n_phi),
                                      csv::cell(v.real()), csv::cell(v.imag())});
                    }
                out.push_back(std::move(dump));
            }
        }
        out.push_back(std::move(t));
    } else if (mode == "atoms") {
        double h = c.get_double("params.h", 1.0 / 200.0);
        // atoms as direction:mass pairs, e.g. "1.3:0.5, 2.0:0.5"
        std::vector<quasimode::Atom> atoms;
        if (c.has("params.atoms")) {
            std::string sval = c.get_string("params.atoms");
            std::string cur;
            auto flush = [&] {
                if (cur.empty()) return;
                auto colon = cur.find(':');
                if (colon == std::string::npos)
                    throw config::ConfigError("params.atoms entries are angle:mass");
                atoms.push_back({std::strtod(cur.substr(0, colon).c_str(), nullptr),
                                 std::strtod(cur.substr(colon + 1).c_str(), nullptr)});
                cur.clear();
            };
            for (char ch : sval) {
                if (ch == ',')
                    flush();
                else if (!std::isspace(static_cast<unsigned char>(ch)))
                    cur += ch;
            }
            flush();
        } else {
            atoms.push_back({c.get_double("params.atom_angle", 1.3), 1.0});
        }
        auto epss = c.has("params.eps_values") ? c.get_doubles("params.eps_values")
                                               : std::vector<double>{0.2, 0.1, 0.05};
        csv::Table t;
        t.name = "quasimode_suppression";
        t.header = {"eps", "width", "h", "phi0_scaled"};
        for (double eps : epss) {
            double width = std::max(eps, quasimode::min_bump_width(h));
            quasimode::QuasimodeSpec spec;
            spec.center = {manifold::kChartNorth, {0, 0}};
            spec.g1 = quasimode::FiberAmplitude::constant(0.0);
            spec.g2 = quasimode::approx_g2(atoms, width);
            spec.h = h;
            spec.epsilon = eps;
            double v = std::sqrt(h) * std::abs(quasimode::center_value(spec));
            t.add_row({csv::cell(eps), csv::cell(width), csv::cell(h), csv::cell(v)});
        }
        out.push_back(std::move(t));
    } else {
        throw config::ConfigError("unknown quasimode mode: " + mode);
    }
    return out;
}

// zonal-family scan on the sphere: how much of the spectral mass a dictionary
// of flow tubes along the polar directions captures, and how pairings off
// those directions die out
inline csv::Table defect_sphere_experiment(const RunConfig& c) {
    double R = c.get_double("model.radius", 1.0);
    auto ls = c.has("params.l_values") ? c.get_doubles("params.l_values")
                                       : std::vector<double>{30, 60};
    chartq::TubeUnionParams base;
    base.dir_radius = c.get_double("params.dir_radius", 0.35);
    base.theta_hi = c.get_double("params.theta_hi", 0.82 * pi);
    base.edge = c.get_double("params.edge", 0.30);
    chartq::TubeUnionParams mirror = base;
    mirror.mirrored = true;

    csv::Table t;
    t.name = "zonal_capture";
    t.header = {"l", "h", "capture", "off_meridian_pairing"};
    for (double lv : ls) {
        int l = static_cast<int>(lv);
        double h = quasimode::zonal_eigen_h(l, R);
        auto u = chartq::make_zonal_chart_field(l, R, h, 2.6 * R, 2.85 * R);
        double cap =
            std::real(chartq::chart_pairing(u, chartq::tube_union_symbol(base, R))) +
            std::real(chartq::chart_pairing(u, chartq::tube_union_symbol(mirror, R)));
        auto aside = chartq::bump_symbol({1.1 * R, 0.0}, 0.35, {0.0, 1.0}, 0.3, "side");
        double off = std::abs(chartq::chart_pairing(u, aside));
        t.add_row({csv::cell(l), csv::cell(h), csv::cell(cap), csv::cell(off)});
    }
    return t;
}

inline std::vector<csv::Table> defect_experiment(const RunConfig& c, unsigned threads) {
    (void)threads;
    auto model = model_from_config(c);
    if (model.kind == manifold::ModelKind::RoundSphere)
        return {defect_sphere_experiment(c)};
    if (model.kind != manifold::ModelKind::FlatTorus)
        throw config::ConfigError("the defect experiment runs on the torus or the sphere");
    unsigned seed = static_cast<unsigned>(c.get_int("seed", 20240810));
    int n_symbols = static_cast<int>(c.get_int("params.n_symbols", 10));
    auto ks = c.has("params.k_values") ? c.get_doubles("params.k_values")
                                       : std::vector<double>{8, 16, 32};

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> un(-1.0, 1.0);
    std::uniform_int_distribution<int> ui(1, 3);

    // random trigonometric symbols with analytically averaged pairings
    struct RandomSymbol {
        microlocal::Symbol sym;
        double c_xi_xy, c_const, c_xi_x2;
    };
    std::vector<RandomSymbol> dict;
    for (int s = 0; s < n_symbols; ++s) {
        double c1 = un(rng), c2 = un(rng), c3 = un(rng), c4 = un(rng);
        int m1 = ui(rng), m2 = ui(rng);
        RandomSymbol r;
        r.c_xi_xy = c2;
        r.c_const = c3;
        r.c_xi_x2 = c4;
        r.sym.id = "random-" + std::to_string(s);
        r.sym.eval = [c1, c2, c3, c4, m1, m2](Vec2 x, Vec2 xi) {
            return c1 * std::cos(m1 * x.x + m2 * x.y) + c2 * xi.x * xi.y + c3 +
                   c4 * xi.x * xi.x;
        };
        dict.push_back(std::move(r));
    }

    csv::Table pair;
    pair.name = "defect_pairings";
    pair.header = {"symbol", "h", "re", "im", "analytic", "abs_err"};
    csv::Table mass;
    mass.name = "defect_mass";
    mass.header = {"h", "pairing_one_err"};
    csv::Table inv;
    inv.name = "defect_invariance";
    inv.header = {"symbol", "t", "discrepancy"};
    csv::Table ident;
    ident.name = "identity_residuals";
    ident.header = {"h", "residual_product", "residual_commutator"};

    std::vector<microlocal::TorusField> family;
    for (double kv : ks) {
        long k = static_cast<long>(kv);
        int grid = 1;
        while (grid < 4 * k) grid *= 2;
        family.push_back(
            microlocal::TorusField::plane_wave(model, grid, 1.0 / static_cast<double>(k),
                                               k, 0));
    }

    csv::Table extra;
    extra.name = "defect_extrapolation";
    extra.header = {"symbol", "extrapolated", "fit_residual", "cauchy"};
    std::vector<std::vector<microlocal::PairingEntry>> sequences(dict.size());

    for (const auto& u : family) {
        double h = u.h();
        mass.add_row({csv::cell(h),
                      csv::cell(std::abs(microlocal::defect_pairing(
                                    microlocal::Symbol::one(), u) -
                                fft::cplx(1, 0)))});
        for (std::size_t di = 0; di < dict.size(); ++di) {
            const auto& r = dict[di];
            fft::cplx got = microlocal::defect_pairing(r.sym, u);
            // plane wave along e_1: h-rescaled momentum (1, 0); the cosine
            // averages to zero over the torus
            double want = r.c_const + r.c_xi_x2;
            pair.add_row({r.sym.id, csv::cell(h), csv::cell(got.real()),
                          csv::cell(got.imag()), csv::cell(want),
                          csv::cell(std::abs(got - fft::cplx(want, 0)))});
            sequences[di].push_back({r.sym.id, h, got});
        }
    }
    for (auto& seq : sequences) {
        auto est = microlocal::extrapolate(std::move(seq));
        extra.add_row({est.symbol_id, csv::cell(est.extrapolated),
                       csv::cell(est.fit_residual), csv::cell(est.cauchy)});
    }
    double t_flow = c.get_double("params.t_flow", 0.7);
    for (const auto& r : dict) {
        double d = microlocal::invariance_check(family, {r.sym}, t_flow);
        inv.add_row({r.sym.id, csv::cell(t_flow), csv::cell(d)});
    }

    // product/commutator identity residuals along the h-sequence
    microlocal::Symbol a;
    a.eval = [](Vec2 x, Vec2 xi) { return std::cos(x.x) + 0.5 * xi.y; };
    microlocal::Symbol q;
    q.eval = [](Vec2 x, Vec2 xi) { return std::sin(x.y) + xi.x * xi.x; };
    for (const auto& u : family) {
        auto res = microlocal::pairing_identities_check(a, q, u);
        ident.add_row({csv::cell(u.h()), csv::cell(res.residual_product),
                       csv::cell(res.residual_commutator)});
    }
    return {pair, mass, inv, ident, extra};
}

inline nlohmann::json bound_report_json(const bounds::BoundReport& rep,
                                        const std::string& which) {
    nlohmann::json j;
    j["bound"] = which;
    j["raw_integral"] = rep.raw_integral;
    if (rep.scaled_value) j["scaled_value"] = *rep.scaled_value;
    if (rep.constant) j["constant"] = *rep.constant;
    j["vanishes"] = rep.vanishes;
    j["ingredients"] = rep.ingredients;
    j["provenance"] = rep.provenance;
    return j;
}

inline std::vector<csv::Table> bounds_experiment(const RunConfig& c, unsigned threads,
                                                 nlohmann::json* reports = nullptr) {
    auto model = model_from_config(c);
    auto ham = dynamics::HamiltonianModel::laplace(model);
    ChartPoint x0 = base_point_from_config(c, model);
    auto fr = manifold::fiber_frame(model, x0);
    std::string kind = c.get_string("model.kind", "sphere");
    int n = static_cast<int>(c.get_int("params.n_directions", 64));
    double t_max = c.get_double("params.t_max", 12.0);
    double eps = c.get_double("params.eps_return", 1e-3);
    double fconst = c.get_double("params.f_const", 1.0 / (4 * pi * pi));

    auto recur = dynamics::recurrent_set_estimate(ham, x0, n, t_max, eps, threads);
    auto dis = dynamics::dissipativity_test(ham, x0, recur);
    auto cls = bounds::classify_point(ham, x0, recur, dis);
    auto cc = bounds::cluster_constants(ham, x0, 1.0, recur);
    auto dec = bounds::MeasureDecomposition::uniform(x0, n, fconst);
    auto thm = bounds::thm_local_bound(dec, ham);
    auto modes = bounds::modes_lower_bound(dec);
    auto horm = bounds::hormander_constant(model, 1.0);
    if (reports) {
        (*reports)["thm_local"] = bound_report_json(thm, "sup-norm bound integral");
        (*reports)["modes_lower"] = bound_report_json(modes, "mode lower bound");
        (*reports)["fiber_nodes"] = n;
        (*reports)["recurrence_horizon"] = t_max;
    }
    double nu = bounds::nu_Hp(ham, x0, fr.direction(0.4));
    double dxi = bounds::dxi_p_norm(ham, x0, fr.direction(0.4));

    csv::Table rep;
    rep.name = "bounds_report";
    rep.header = {"model", "quantity", "value", "note"};
    auto add = [&](const std::string& q, double v, const std::string& note = "") {
        rep.add_row({kind, q, csv::cell(v), note});
    };
    add("nu_hp", nu, "p = |xi|^2-1");
    add("dxi_p_norm", dxi, "p = |xi|^2-1");
    add("thm_local_raw", thm.raw_integral, "dimensional constant unset");
    add("modes_bound", *modes.scaled_value, "explicit (2 pi)^{(1-n)/2}");
    add("A", cc.A, "C_n = 1");
    add("A_prime", cc.A_prime, "C_n = 1");
    add("A_dprime", cc.A_dprime, "C_n = 1");
    add("inj", cc.inj, cc.inj_exact ? "exact" : "numerical lower bound");
    add("hormander", horm.value, "C~_n = 1");
    add("recurrent_volume", recur.volume, "");
    add("violating_mass", bounds::recurrence_support_check(dec, recur),
        "uniform density vs recurrent set");
    add("verdict_code", static_cast<double>(static_cast<int>(cls.verdict)), cls.reason);

    // tube covers over a few atom sets
    csv::Table tubes;
    tubes.name = "tube_cover";
    tubes.header = {"atom_count", "eps", "radius", "budget_used", "covered_mass",
                    "total_mass"};
    unsigned seed = static_cast<unsigned>(c.get_int("seed", 7));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ua(0.0, 2 * pi);
    for (int count : {1, 4, 10}) {
        std::vector<bounds::MeasureAtom> atoms;
        for (int k = 0; k < count; ++k) atoms.push_back({ua(rng), 1.0 / count});
        double budget = c.get_double("params.tube_eps", 1e-3);
        auto cover = bounds::singular_tube_cover(x0, atoms, budget, 0.3);
        double used = 0.0;
        for (const auto& tb : cover) used += tb.fiber_radius;
        double covered = 0.0;
        for (const auto& atom : atoms) {
            dynamics::PhasePoint q{x0, fr.direction(atom.angle)};
            for (const auto& tb : cover)
                if (dynamics::tube_contains(ham, tb, q)) {
                    covered += atom.mass;
                    break;
                }
        }
        tubes.add_row({csv::cell(count), csv::cell(budget),
                       csv::cell(cover.empty() ? 0.0 : cover.front().fiber_radius),
                       csv::cell(used), csv::cell(covered), csv::cell(1.0)});
    }

    // property rows: monotonicity and sqrt-scaling of the bound integral
    csv::Table props;
    props.name = "bound_properties";
    props.header = {"check", "value", "pass"};
    {
        auto small = bounds::MeasureDecomposition::uniform(x0, 64, 0.0);
        auto big = small;
        for (int i = 0; i < 64; ++i) {
            small.f[i] = 0.1 + 0.05 * std::cos(small.angles[i]);
            big.f[i] = small.f[i] + 0.02;
        }
        double b1 = bounds::thm_local_bound(small, ham).raw_integral;
        double b2 = bounds::thm_local_bound(big, ham).raw_integral;
        props.add_row({"monotone_in_f", csv::cell(b2 - b1), csv::cell(b2 > b1)});
        double worst = 0.0;
        for (double cc2 : {0.25, 4.0, 9.0}) {
            auto scaled = small;
            for (auto& v : scaled.f) v *= cc2;
            double got = bounds::thm_local_bound(scaled, ham).raw_integral;
            worst = std::max(worst, std::abs(got - std::sqrt(cc2) * b1) /
                                        std::max(1e-300, std::sqrt(cc2) * b1));
        }
        props.add_row({"sqrt_scaling_max_rel_err", csv::cell(worst),
                       csv::cell(worst < 1e-9)});
        int lsob = 1;
        double C = microlocal::calibrate_sobolev_constant(lsob, 20240801);
        std::mt19937_64 rng2(static_cast<unsigned>(c.get_int("seed", 7)) + 1);
        std::uniform_real_distribution<double> un2(-1.0, 1.0);
        int violations = 0;
        const std::size_t ngrid = 512;
        for (int s = 0; s < 100; ++s) {
            double h = 1.0 / std::pow(2.0, 3 + (s % 5));
            int band = static_cast<int>(0.9 / h);
            std::vector<fft::cplx> coef(ngrid, 0.0);
            for (int k = -band; k <= band; ++k)
                coef[(k % static_cast<long>(ngrid) + ngrid) % ngrid] =
                    fft::cplx(un2(rng2), un2(rng2));
            auto vals = fft::values(coef);
            for (double e2 : {0.1, 1.0, 10.0})
                if (microlocal::sobolev_linfty_check(vals, h, e2, lsob, C).margin < 0)
                    ++violations;
        }
        props.add_row({"sobolev_violations", csv::cell(violations),
                       csv::cell(violations == 0)});
        props.add_row({"sobolev_constant", csv::cell(C), csv::cell(true)});
    }
    return {rep, tubes, props};
}

inline csv::Table scaling_experiment(const RunConfig& c, unsigned threads) {
    auto Rs = c.has("params.radii") ? c.get_doubles("params.radii")
                                    : std::vector<double>{1.0};
    auto ls = c.has("params.l_values") ? c.get_doubles("params.l_values")
                                       : std::vector<double>{50, 100, 200};
    csv::Table t;
    t.name = "scaling";
    t.header = {"R", "l", "h", "sup", "scaled_sup", "argmax_theta", "target", "rel_dev"};
    std::vector<std::vector<std::string>> rows(Rs.size() * ls.size());
    utils::parallel_for(
        rows.size(),
        [&](std::size_t idx) {
            double R = Rs[idx / ls.size()];
            int l = static_cast<int>(ls[idx % ls.size()]);
            double h = quasimode::zonal_eigen_h(l, R);
            auto absu = [&](double th, double) {
                return std::abs(quasimode::zonal_harmonic(l, th, R));
            };
            auto scan = quasimode::sup_norm_scan(absu, h, pi, 600, 1);
            double target = 1.0 / std::sqrt(2 * pi * R);
            rows[idx] = {csv::cell(R),
                         csv::cell(l),
                         csv::cell(h),
                         csv::cell(scan.raw_max),
                         csv::cell(scan.scaled_max),
                         csv::cell(scan.arg_theta),
                         csv::cell(target),
                         csv::cell(std::abs(scan.scaled_max - target) / target)};
        },
        threads);
    t.rows = std::move(rows);
    return t;
}

inline csv::Table cluster_experiment(const RunConfig& c, unsigned) {
    auto ls = c.has("params.l_values") ? c.get_doubles("params.l_values")
                                       : std::vector<double>{50, 100, 200};
    double R = c.get_double("model.radius", 1.0);
    double window = c.get_double("params.delta_window", 0.5);
    csv::Table t;
    t.name = "cluster";
    t.header = {"l", "lambda", "cluster_sup", "ratio", "limit", "rel_gap"};
    for (double lv : ls) {
        int l = static_cast<int>(lv);
        double lam = std::sqrt(static_cast<double>(l) * (l + 1.0)) / R;
        double cs = bounds::cluster_sup_sphere(l, window, R);
        double ratio = cs / lam;
        double limit = 1.0 / (2 * pi * R);  // (2l+1)/(4 pi R^2 lambda) -> 1/(2 pi R)
        t.add_row({csv::cell(l), csv::cell(lam), csv::cell(cs), csv::cell(ratio),
                   csv::cell(limit), csv::cell(std::abs(ratio - limit) / limit)});
    }
    return t;
}

// ---------------------------------------------------------------------------
// dispatch

inline std::vector<std::string> experiment_names() {
    return {"flow",   "return-map", "recurrence", "quasimode",
            "defect", "bounds",     "scaling",    "cluster"};
}

inline ResultBundle run(const RunConfig& c, unsigned threads = 0) {
    auto t0 = std::chrono::steady_clock::now();
    std::string name = c.get_string("experiment", "none");
    ResultBundle b;
    if (name == "none") {
        // empty experiment list: an empty bundle
    } else if (name == "flow")
        b.tables.push_back(flow_experiment(c, threads));
    else if (name == "return-map")
        b.tables.push_back(return_map_experiment(c, threads));
    else if (name == "recurrence")
        for (auto& t : recurrence_experiment(c, threads)) b.tables.push_back(std::move(t));
    else if (name == "quasimode")
        for (auto& t : quasimode_experiment(c, threads)) b.tables.push_back(std::move(t));
    else if (name == "defect")
        for (auto& t : defect_experiment(c, threads)) b.tables.push_back(std::move(t));
    else if (name == "bounds") {
        nlohmann::json reports;
        for (auto& t : bounds_experiment(c, threads, &reports))
            b.tables.push_back(std::move(t));
        b.metadata["bound_reports"] = reports;
    } else if (name == "scaling")
        b.tables.push_back(scaling_experiment(c, threads));
    else if (name == "cluster")
        b.tables.push_back(cluster_experiment(c, threads));
    else
        throw config::ConfigError("unknown experiment: " + name);

    auto t1 = std::chrono::steady_clock::now();
    b.metadata["experiment"] = name;
    b.metadata["schema_version"] = kSchemaVersion;
    b.metadata["config_hash"] = "fnv64:" + std::to_string(c.hash());
    b.metadata["config"] = c.serialize();
    b.metadata["seed"] = c.get_int("seed", 0);
    b.metadata["wall_time_seconds"] =
        std::chrono::duration<double>(t1 - t0).count();
    return b;
}

// prefix table names so several experiments can live in one bundle directory
inline ResultBundle run_prefixed(const RunConfig& c, const std::string& prefix,
                                 unsigned threads = 0) {
    ResultBundle b = run(c, threads);
    for (auto& t : b.tables) t.name = prefix + t.name;
    return b;
}

}  // namespace eigengrowth::experiments
