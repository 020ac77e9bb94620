#include <gtest/gtest.h>

#include "vodsim/oracle.hpp"
#include "vodsim/validation.hpp"

using namespace vodsim;

TEST(Simplex, TextbookProgram) {
  // max 3x + 5y  s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  -> (2, 6), 36.
  LinearProgram lp{{{1, 0}, {0, 2}, {3, 2}}, {4, 12, 18}, {3, 5}};
  auto s = solve_lp(lp);
  EXPECT_NEAR(s.objective, 36.0, 1e-12);
  EXPECT_NEAR(s.x[0], 2.0, 1e-12);
  EXPECT_NEAR(s.x[1], 6.0, 1e-12);
}

TEST(Simplex, NegativeBoundNeedsPhaseOne) {
  // max -x - y  s.t. x + y >= 2, x <= 3  -> objective -2.
  LinearProgram lp{{{-1, -1}, {1, 0}}, {-2, 3}, {-1, -1}};
  EXPECT_NEAR(solve_lp(lp).objective, -2.0, 1e-12);
}

TEST(Simplex, DetectsInfeasibleAndUnbounded) {
  LinearProgram infeasible{{{1}, {-1}}, {1, -2}, {1}};
  EXPECT_THROW(solve_lp(infeasible), LpError);
  LinearProgram unbounded{{{-1}}, {1}, {1}};
  EXPECT_THROW(solve_lp(unbounded), LpError);
}

TEST(Simplex, DegenerateProgramTerminates) {
  // Classic cycling example under the largest-coefficient rule.
  LinearProgram lp{{{0.5, -5.5, -2.5, 9}, {0.5, -1.5, -0.5, 1}, {1, 0, 0, 0}},
                   {0, 0, 1},
                   {10, -57, -9, -24}};
  EXPECT_NEAR(solve_lp(lp).objective, 1.0, 1e-12);
}

TEST(Opt2, MatchesClosedFormOnRandomInstances) {
  auto r = lp_comparison(100, 12, 99);
  EXPECT_EQ(r.instances, 100u);
  EXPECT_LT(r.max_gap, 1e-9);
  EXPECT_LE(r.max_violation, 1e-12);
}

TEST(Opt2, EqualityStorageIsFeasibleWithSlack) {
  std::vector<double> pop{0.5, 0.5};
  auto lp = solve_opt2_lp(pop, 0.2, 2);
  double sum = lp.cache_fraction[0] + lp.cache_fraction[1];
  EXPECT_NEAR(sum, 2.0, 1e-9);
  EXPECT_NEAR(lp.objective, solve_water_filling(pop, 0.2, 2).objective, 1e-9);
}

TEST(Validation, ProductFormConvergence) {
  auto r = product_form_comparison(zipf_popularity(5, 0.8), 2, 1000000, 3);
  EXPECT_EQ(r.states, 10u);
  EXPECT_LT(r.total_variation, 0.05);
}

TEST(Validation, SuitesReportPass) {
  for (const char* suite : {"lp", "ctmc", "product-form"}) {
    for (const auto& check : run_validation_suite(suite, 1)) {
      EXPECT_TRUE(check.passed) << check.name << ": " << check.detail;
    }
  }
  EXPECT_THROW(run_validation_suite("nope", 1), ConfigError);
}
