#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace idla::validate {

struct CheckResult {
    std::string name;
    std::string kind;  // "residual", "g-test", "exact", "interval"
    double measured = 0.0;
    double tolerance = 0.0; // residuals: max allowed; g-tests: min p-value
    bool pass = false;
    std::string detail;
};

struct ValidationOptions {
    std::uint64_t master_seed = 20240901;
    // Negative-control hook: corrupts the return distribution feeding the
    // contraction so the oracle comparisons must fail.
    bool corrupt_return = false;
};

// The oracle-backed battery: closed-form residuals, exact-oracle comparisons
// for contraction and dynamics, Abelian order-invariance, moment-generating-
// function checks. Runs in about a minute.
std::vector<CheckResult> run_validation(const ValidationOptions& opt = {});

bool all_passed(const std::vector<CheckResult>& results);

void print_report(std::ostream& out, const std::vector<CheckResult>& results);

} // namespace idla::validate
