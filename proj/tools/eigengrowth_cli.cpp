#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "eigengrowth/acceptance.hpp"
#include "eigengrowth/experiments.hpp"

// Experiment harness CLI.
//
//   eigengrowth run <config> [--out DIR] [--threads N] [--check]
//   eigengrowth check <bundle-dir> <criteria-file> [--threads N]
//   eigengrowth list-experiments
//
// `run` executes the experiment named in the config and writes CSV tables
// plus metadata into the output directory. With --check, the acceptance
// criteria whose tables are present are evaluated and the exit status
// reflects the result. `check` re-validates the table hashes recorded in the
// bundle metadata before evaluating, so edited tables fail.

namespace eg = eigengrowth;

namespace {

int evaluate_and_print(const eg::experiments::ResultBundle& bundle,
                       const std::vector<int>& ids, bool skip_missing) {
    auto results = eg::acceptance::evaluate_all(bundle);
    int failures = 0, evaluated = 0;
    for (const auto& r : results) {
        if (!ids.empty() &&
            std::find(ids.begin(), ids.end(), r.id) == ids.end())
            continue;
        bool missing = r.detail.rfind("missing", 0) == 0;
        if (missing && skip_missing) continue;
        ++evaluated;
        std::printf("criterion %d (%s): %s\n    %s\n", r.id, r.name.c_str(),
                    r.pass ? "PASS" : "FAIL", r.detail.c_str());
        if (!r.pass) ++failures;
    }
    if (evaluated == 0) {
        std::printf("no applicable criteria for the tables in this bundle\n");
        return skip_missing ? 0 : 1;
    }
    std::printf("%d/%d criteria passed\n", evaluated - failures, evaluated);
    return failures == 0 ? 0 : 1;
}

bool verify_hashes(const eg::experiments::ResultBundle& bundle, const std::string& dir) {
    if (!bundle.metadata.contains("tables")) return true;
    for (auto& [name, hash] : bundle.metadata["tables"].items()) {
        std::string content = eg::csv::read_file(dir + "/" + name + ".csv");
        std::string got = "fnv64:" + std::to_string(eg::utils::fnv1a(content));
        if (got != hash.get<std::string>()) {
            std::fprintf(stderr, "table %s was modified after the run (hash mismatch)\n",
                         name.c_str());
            return false;
        }
    }
    return true;
}

// criteria files select which criteria run: sections named [criterion.N]
std::vector<int> criteria_ids(const eg::config::RunConfig& crit) {
    std::vector<int> ids;
    for (const auto& s : crit.sections())
        if (s.rfind("criterion.", 0) == 0)
            ids.push_back(std::atoi(s.substr(10).c_str()));
    return ids;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical experiments on eigenfunction sup-norm growth"};
    app.require_subcommand(1);

    std::string config_path, out_dir, bundle_dir, criteria_path;
    unsigned threads = 0;
    bool do_check = false;

    auto* run = app.add_subcommand("run", "run an experiment from a config file");
    run->add_option("config", config_path, "run configuration file")->required();
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--threads", threads, "worker threads (0 = automatic)");
    run->add_flag("--check", do_check, "evaluate applicable acceptance criteria");

    auto* check = app.add_subcommand("check", "evaluate acceptance criteria on a bundle");
    check->add_option("bundle", bundle_dir, "bundle directory")->required();
    check->add_option("criteria", criteria_path, "criteria file")->required();
    check->add_option("--threads", threads, "worker threads (0 = automatic)");

    auto* list = app.add_subcommand("list-experiments", "list experiment names");

    CLI11_PARSE(app, argc, argv);

    try {
        if (list->parsed()) {
            for (const auto& n : eg::experiments::experiment_names())
                std::printf("%s\n", n.c_str());
            return 0;
        }
        if (run->parsed()) {
            auto cfg = eg::config::RunConfig::parse(eg::csv::read_file(config_path));
            // output directory: flag > environment override > config > default
            if (out_dir.empty()) {
                if (const char* env = std::getenv("EIGENGROWTH_OUT"))
                    out_dir = env;
                else
                    out_dir = cfg.get_string("out_dir", "results");
            }
            auto bundle = eg::experiments::run(cfg, threads);
            bundle.write(out_dir);
            std::printf("wrote %zu table(s) to %s\n", bundle.tables.size(),
                        out_dir.c_str());
            if (do_check) return evaluate_and_print(bundle, {}, true);
            return 0;
        }
        if (check->parsed()) {
            auto bundle = eg::experiments::ResultBundle::load(bundle_dir);
            if (!verify_hashes(bundle, bundle_dir)) return 1;
            auto crit = eg::config::RunConfig::parse(eg::csv::read_file(criteria_path));
            auto ids = criteria_ids(crit);
            return evaluate_and_print(bundle, ids, false);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
