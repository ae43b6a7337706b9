#pragma once

#include <optional>
#include <string>
#include <vector>

namespace acceptance {

struct CriterionResult {
    int id = 0;
    std::string title;
    bool pass = false;
    std::string detail;             ///< measured values against their tolerances
    std::vector<std::string> notes; ///< informational lines that do not affect `pass`
};

struct Options {
    std::string problem_dir;
    std::optional<double> rtol; ///< replaces the integrator rtol in every trajectory criterion
    int jobs = 1;
};

/// Runs all criteria in order. Throws daepencil::Error(ResourceError) when a problem file is missing.
std::vector<CriterionResult> run(const Options& opts);

/// One "PASS"/"FAIL" line per criterion plus indented notes; returns the number of failures.
int print(const std::vector<CriterionResult>& results);

std::string default_problem_dir();

} // namespace acceptance
