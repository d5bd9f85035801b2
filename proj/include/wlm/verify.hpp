#pragma once

#include "wlm/config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

// Verification suite: every acceptance check the engine must satisfy, run
// against the benchmark setup. The quick suite scales the Monte Carlo path
// counts down for smoke testing; tolerances are identical.

namespace wlm::verify {

enum class Suite { quick, full };

struct CriterionResult {
    std::string name;
    bool pass = false;
    std::string details;
    double seconds = 0.0;
};

struct Report {
    std::vector<CriterionResult> results;
    bool all_pass() const;
};

/// Runs all criteria, printing one pass/fail line each to log.
Report run_acceptance(Suite suite, std::ostream& log);

}  // namespace wlm::verify
