// Runs the full verification suite and reports one pass/fail line per
// criterion. Exit status is nonzero when any criterion fails.

#include "wlm/verify.hpp"

#include <cstring>
#include <iostream>

int main(int argc, char** argv) {
    auto suite = wlm::verify::Suite::full;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--suite") == 0 && i + 1 < argc) {
            suite = std::strcmp(argv[i + 1], "quick") == 0 ? wlm::verify::Suite::quick
                                                           : wlm::verify::Suite::full;
            ++i;
        }
    }
    const auto report = wlm::verify::run_acceptance(suite, std::cout);
    int passed = 0;
    for (const auto& r : report.results) passed += r.pass;
    std::cout << passed << "/" << report.results.size() << " criteria passed\n";
    return report.all_pass() ? 0 : 1;
}
