// Acceptance suite: runs every criterion at its pinned tolerance and prints
// one PASS/FAIL line per criterion. Exit status is nonzero on any failure.

#include <cstdio>

#include "eigengrowth/acceptance.hpp"

int main() {
    using namespace eigengrowth;
    std::printf("building acceptance bundle (all experiments)...\n");
    std::fflush(stdout);
    auto bundle = acceptance::run_acceptance_bundle();
    auto results = acceptance::evaluate_all(bundle);
    int failures = 0;
    for (const auto& r : results) {
        std::printf("criterion %d (%s): %s\n    %s\n", r.id, r.name.c_str(),
                    r.pass ? "PASS" : "FAIL", r.detail.c_str());
        if (!r.pass) ++failures;
    }
    std::printf("%zu/%zu criteria passed\n", results.size() - failures, results.size());
    return failures == 0 ? 0 : 1;
}
