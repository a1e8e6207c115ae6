#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "eigengrowth/acceptance.hpp"
#include "eigengrowth/config.hpp"
#include "eigengrowth/csv.hpp"
#include "eigengrowth/experiments.hpp"

using namespace eigengrowth;
using config::RunConfig;

TEST_CASE("config parsing, round trip and typed access") {
    std::string text = R"(# comment line
experiment = scaling
seed = 42

[model]
kind = sphere
radius = 2.0

[params]
l_values = 50, 100, 200
tol = 1e-9
flag = true
)";
    auto c = RunConfig::parse(text);
    CHECK(c.get_string("experiment") == "scaling");
    CHECK(c.get_int("seed") == 42);
    CHECK(c.get_double("model.radius") == 2.0);
    CHECK(c.get_doubles("params.l_values") == std::vector<double>{50, 100, 200});
    CHECK(c.get_bool("params.flag", false));
    CHECK(c.get_double("params.tol") == 1e-9);
    CHECK(c.get_double("params.absent", 0.5) == 0.5);

    // round trip: serialize -> parse -> identical serialization and hash
    auto again = RunConfig::parse(c.serialize());
    CHECK(again == c);
    CHECK(again.hash() == c.hash());

    SECTION("errors carry line or key information") {
        CHECK_THROWS_WITH(RunConfig::parse("garbage line\n"),
                          Catch::Matchers::ContainsSubstring("line 1"));
        CHECK_THROWS_WITH(RunConfig::parse("[unterminated\n"),
                          Catch::Matchers::ContainsSubstring("line 1"));
        CHECK_THROWS_WITH(c.get_string("params.nope"),
                          Catch::Matchers::ContainsSubstring("params.nope"));
        CHECK_THROWS_AS(c.get_int("params.tol"), config::ConfigError);
        auto bad = RunConfig::parse("x = notanumber\n");
        CHECK_THROWS_AS(bad.get_double("x"), config::ConfigError);
    }
}

TEST_CASE("csv tables serialize, parse and hash stably") {
    csv::Table t;
    t.name = "demo";
    t.header = {"a", "b"};
    t.add_row({csv::cell(1.5), csv::cell(std::string("x"))});
    t.add_row({csv::cell(0.1), csv::cell(std::string("y"))});
    auto s = t.serialize();
    auto back = csv::Table::parse("demo", s);
    CHECK(back.header == t.header);
    CHECK(back.rows == t.rows);
    CHECK(back.number(0, "a") == 1.5);
    CHECK(back.text(1, "b") == "y");
    CHECK(back.content_hash() == t.content_hash());
    CHECK_THROWS_AS(back.column("missing"), std::runtime_error);
}

TEST_CASE("experiment bundles are deterministic and reload identically") {
    auto cfg = RunConfig::parse(R"(experiment = cluster
seed = 3
[model]
kind = sphere
radius = 1.0
[params]
l_values = 10, 20
delta_window = 0.5
)");
    auto b1 = experiments::run(cfg, 2);
    auto b2 = experiments::run(cfg, 5);  // different thread count
    REQUIRE(b1.tables.size() == b2.tables.size());
    for (std::size_t i = 0; i < b1.tables.size(); ++i)
        CHECK(b1.tables[i].serialize() == b2.tables[i].serialize());

    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "eigengrowth_harness_test";
    fs::remove_all(dir);
    b1.write(dir.string());
    auto loaded = experiments::ResultBundle::load(dir.string());
    REQUIRE(loaded.tables.size() == b1.tables.size());
    CHECK(loaded.tables[0].serialize() == b1.tables[0].serialize());
    CHECK(loaded.metadata["config_hash"] == b1.metadata["config_hash"]);
    fs::remove_all(dir);
}

TEST_CASE("scaling experiment hits the zonal target") {
    auto cfg = RunConfig::parse(R"(experiment = scaling
seed = 3
[model]
kind = sphere
[params]
radii = 1
l_values = 50
)");
    auto b = experiments::run(cfg, 0);
    const auto* t = b.find("scaling");
    REQUIRE(t != nullptr);
    CHECK(t->number(0, "scaled_sup") == Catch::Approx(0.3989520580).margin(1e-8));
    CHECK(t->number(0, "argmax_theta") < 1e-6);
}

TEST_CASE("unknown experiments and bad configs are rejected") {
    auto cfg = RunConfig::parse("experiment = nonsense\n");
    CHECK_THROWS_AS(experiments::run(cfg, 0), config::ConfigError);
    auto cfg2 = RunConfig::parse(R"(experiment = quasimode
[model]
kind = torus
)");
    CHECK_THROWS_AS(experiments::run(cfg2, 0), config::ConfigError);
}

TEST_CASE("the empty experiment produces an empty bundle") {
    auto cfg = RunConfig::parse("experiment = none\nseed = 1\n");
    auto b = experiments::run(cfg, 0);
    CHECK(b.tables.empty());
}

TEST_CASE("quasimode experiment parses atom lists and dumps fields") {
    auto cfg = RunConfig::parse(R"(experiment = quasimode
seed = 1
[model]
kind = sphere
[params]
mode = atoms
h = 0.02
atoms = 0.5:0.25, 2.0:0.75
eps_values = 0.2, 0.1
)");
    auto b = experiments::run(cfg, 0);
    const auto* t = b.find("quasimode_suppression");
    REQUIRE(t != nullptr);
    CHECK(t->rows.size() == 2);
    CHECK(t->number(0, "phi0_scaled") > t->number(1, "phi0_scaled"));

    auto cfg2 = RunConfig::parse(R"(experiment = quasimode
seed = 1
[model]
kind = sphere
[params]
mode = uniform
h_values = 0.02
dump_field = true
)");
    auto b2 = experiments::run(cfg2, 0);
    bool has_dump = false;
    for (const auto& tb : b2.tables) has_dump = has_dump || tb.name.rfind("quasimode_field", 0) == 0;
    CHECK(has_dump);
    CHECK(b2.find("quasimode_scaling") != nullptr);
}

TEST_CASE("bounds runs attach structured reports to the metadata") {
    auto cfg = RunConfig::parse(R"(experiment = bounds
seed = 7
[model]
kind = sphere
[params]
n_directions = 16
t_max = 8.0
eps_return = 1e-4
)");
    auto b = experiments::run(cfg, 0);
    REQUIRE(b.metadata.contains("bound_reports"));
    CHECK(b.metadata["bound_reports"]["thm_local"].contains("raw_integral"));
    CHECK(b.metadata["bound_reports"]["modes_lower"]["constant"].get<double>() ==
          Catch::Approx(1.0 / std::sqrt(2 * manifold::pi)));
}

TEST_CASE("criteria evaluation flags missing tables") {
    experiments::ResultBundle empty;
    auto r = acceptance::criterion_zonal_saturation(empty);
    CHECK_FALSE(r.pass);
    CHECK(r.detail.rfind("missing", 0) == 0);
}

TEST_CASE("tampered tables change their recorded hash") {
    auto cfg = RunConfig::parse(R"(experiment = cluster
seed = 3
[model]
kind = sphere
[params]
l_values = 10
)");
    auto b = experiments::run(cfg, 0);
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "eigengrowth_tamper_test";
    fs::remove_all(dir);
    b.write(dir.string());
    // tamper with one numeric cell
    auto path = (dir / "cluster.csv").string();
    auto content = csv::read_file(path);
    content[content.find_last_of("0123456789")] = '7';
    csv::write_file(path, content);
    auto loaded = experiments::ResultBundle::load(dir.string());
    std::string recorded = loaded.metadata["tables"]["cluster"].get<std::string>();
    std::string recomputed =
        "fnv64:" + std::to_string(utils::fnv1a(csv::read_file(path)));
    CHECK(recorded != recomputed);
    fs::remove_all(dir);
}
