#pragma once

// Reference solvers used to cross-check the closed forms. Not on any hot path.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "vodsim/analysis.hpp"

namespace vodsim {

/// max c.x  s.t.  A x <= b, x >= 0. Entries of b may be negative.
struct LinearProgram {
  std::vector<std::vector<double>> a;
  std::vector<double> b;
  std::vector<double> c;
};

struct LpSolution {
  double objective = 0.0;
  std::vector<double> x;
};

class LpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense two-phase simplex with Bland's rule, in long double. Throws
/// LpError when the program is infeasible or unbounded.
LpSolution solve_lp(const LinearProgram& program);

struct Opt2Solution {
  double objective = 0.0;
  std::vector<double> cache_fraction;
  std::vector<double> bandwidth_fraction;
  std::vector<double> served_load;
};

/// OPT 2 exactly as stated (sum of cache fractions equal to M), solved by
/// solve_lp. Popularity need not be sorted.
Opt2Solution solve_opt2_lp(std::span<const double> popularity, double load,
                           std::size_t storage);

/// Largest violation of any OPT 2 constraint by a water-filling solution,
/// treating the storage equality as <= (slack is reported separately).
double opt2_max_violation(const WaterFilling& solution, std::size_t storage);

}  // namespace vodsim
