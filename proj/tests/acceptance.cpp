// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// HARQ_ACCEPT_BLOCKS overrides the Monte Carlo length (default 1e6).

#include <cstdlib>
#include <iostream>
#include <string>

#include "harq/verify.hpp"

int main() {
    harq::verify::VerifyOptions opts;
    if (const char* b = std::getenv("HARQ_ACCEPT_BLOCKS")) opts.mc_blocks = std::stoull(b);
    int failed = 0;
    const auto results = harq::verify::run_all(opts, [&](const harq::verify::CriterionResult& r) {
        if (!r.passed) ++failed;
        std::cout << harq::verify::format_line(r) << std::endl;
    });
    std::cout << results.size() - failed << "/" << results.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
