#pragma once

// Named property and acceptance checks shared by `bench verify` and the
// acceptance binary.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nmuon/matrix_sign.hpp"
#include "nmuon/random.hpp"

namespace nmuon::bench {

struct CheckOptions {
    std::uint64_t seed = 0;
    std::size_t threads = 4;
    // Swap the first embedded plan for a corrupted copy before certification.
    bool corrupt_plan = false;
};

struct CheckResult {
    std::string name;
    bool passed = false;
    double measured = 0.0;
    double threshold = 0.0;
    std::string detail;
    double seconds = 0.0;
};

struct CheckSpec {
    std::string name;
    int criterion = 0;  // acceptance criterion number, 0 for extra invariants
    std::function<CheckResult(const CheckOptions&)> run;
};

struct PlanReport {
    std::string label;
    double certified = 0.0;     // chained bound from the grid verifier
    double padded = 0.0;        // diagnostic bound with padded intervals
    double max_residual = 0.0;  // worst ||I - K_gamma X|| over the random matrices
    double min_margin = 0.0;
    std::size_t trials = 0;
    std::string violation;      // empty when the plan passed

    bool passed() const { return violation.empty(); }
};

// Certifies `plan` on the grid, then applies poly_inverse to `trials` random
// SPD matrices with a ridge that clears the plan margin.
PlanReport check_plan(const PolyPlan& plan, Rng& rng, std::size_t trials = 50);

// Acceptance criteria 1..11 first, in order, then the extra invariants.
const std::vector<CheckSpec>& check_registry();

// Runs every check whose name contains `filter` (all when empty). Exceptions
// become failed results; the suite always runs to the end.
std::vector<CheckResult> run_checks(const std::string& filter, const CheckOptions& opts);

CheckResult run_check(const CheckSpec& spec, const CheckOptions& opts);

}  // namespace nmuon::bench
