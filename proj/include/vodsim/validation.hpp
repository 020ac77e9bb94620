#pragma once

// Oracle cross-checks shared by `vodsim validate`, the acceptance runner
// and the tests.

#include <cstddef>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "vodsim/core.hpp"

namespace vodsim {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct HallSweepStats {
  std::size_t instances = 0;
  std::size_t feasible = 0;
  std::size_t mismatches = 0;
};

/// Every placement (boxes as a multiset of M-subsets; feasibility does not
/// depend on box labels) and every request vector with entries in [0, B*U],
/// for all C <= max_c, B <= max_b, U <= max_u, 1 <= M <= C.
HallSweepStats hall_exhaustive_sweep(std::size_t max_c = 4, std::size_t max_b = 4,
                                     std::size_t max_u = 2);

/// Random instances with C <= max_c, B <= 8, U <= 3.
HallSweepStats hall_random_sweep(std::size_t count, std::size_t max_c,
                                 std::uint64_t seed);

struct CtmcComparison {
  double exact = 0.0;          // rate-weighted blocking from exact_ctmc_loss
  double mean = 0.0;           // mean simulated overall loss
  double standard_error = 0.0; // across seeds
  std::size_t seeds = 0;
  bool within(double k) const { return std::abs(mean - exact) <= k * standard_error; }
};

CtmcComparison ctmc_comparison(const SystemConfig& config, const Placement& placement,
                               std::size_t seeds, std::uint64_t base_seed);

/// The (C=1, B=2, U=2, nu=3) system: exact blocking is erlang_b(3, 4).
SystemConfig single_content_erlang_config(double horizon);

struct ProductFormComparison {
  double total_variation = 0.0;
  std::size_t steps = 0;
  std::size_t states = 0;
};

/// Runs the demand-driven cache update on one box (eps*B = 1) for `steps`
/// arrivals and compares the visit histogram of cache states with the
/// product-form law.
ProductFormComparison product_form_comparison(const std::vector<double>& popularity,
                                              std::size_t storage, std::size_t steps,
                                              std::uint64_t seed);

struct LpComparison {
  std::size_t instances = 0;
  double max_gap = 0.0;        // |closed form - LP optimum|
  double max_violation = 0.0;  // worst constraint violation of the closed form
};

/// Random OPT 2 instances with C <= max_c, compared with the LP oracle.
LpComparison lp_comparison(std::size_t count, std::size_t max_c, std::uint64_t seed);

/// Named suite: "hall", "ctmc", "product-form", "lp" or "all".
std::vector<CheckResult> run_validation_suite(const std::string& suite,
                                              std::uint64_t seed);

}  // namespace vodsim
