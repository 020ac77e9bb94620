#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "vodsim/analysis.hpp"
#include "vodsim/oracle.hpp"

using namespace vodsim;

TEST(Erlang, Examples) {
  EXPECT_DOUBLE_EQ(erlang_b(1.0, 1), 0.5);
  EXPECT_NEAR(erlang_b(2.0, 2), 0.4, 1e-15);
  EXPECT_DOUBLE_EQ(erlang_b(1.0, 0), 1.0);
  EXPECT_NEAR(erlang_b(1.0, 2), 0.2, 1e-15);
  EXPECT_NEAR(erlang_b(3.0, 4), 3.375 / 16.375, 1e-15);
}

TEST(Erlang, MatchesFactorialFormula) {
  for (double nu : {0.1, 1.0, 3.7, 12.0, 50.0}) {
    for (std::size_t c = 0; c <= 100; c += 7) {
      // Direct sum in long double, scaled by the largest term.
      long double top = c * std::log(static_cast<long double>(nu)) - std::lgamma(c + 1.0L);
      long double denom = 0.0L;
      for (std::size_t n = 0; n <= c; ++n) {
        long double t = n * std::log(static_cast<long double>(nu)) - std::lgamma(n + 1.0L);
        denom += std::exp(t - top);
      }
      EXPECT_NEAR(erlang_b(nu, c), static_cast<double>(1.0L / denom), 1e-12)
          << "nu=" << nu << " C=" << c;
    }
  }
}

TEST(Erlang, RejectsNonPositiveLoad) {
  EXPECT_THROW(erlang_b(0.0, 3), ConfigError);
}

TEST(OptimalLoss, ExamplesAndMonotone) {
  EXPECT_DOUBLE_EQ(optimal_loss(0.5), 0.0);
  EXPECT_DOUBLE_EQ(optimal_loss(1.0), 0.0);
  EXPECT_DOUBLE_EQ(optimal_loss(2.0), 0.5);
  double prev = 0.0;
  for (double rho = 0.1; rho < 5.0; rho += 0.1) {
    EXPECT_GE(optimal_loss(rho), prev);
    prev = optimal_loss(rho);
  }
  EXPECT_THROW(optimal_loss(0.0), ConfigError);
}

TEST(WaterFilling, WorkedExample) {
  std::vector<double> pop{0.4, 0.3, 0.2, 0.1};
  auto wf = solve_water_filling(pop, 10.0, 2);
  EXPECT_EQ(wf.hot_count(), 1u);
  EXPECT_EQ(wf.threshold, 2u);
  std::vector<double> m{1.0, 0.75, 0.25, 0.0};
  for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(wf.cache_fraction[c], m[c], 1e-15);
  EXPECT_EQ(wf.bandwidth_fraction[0], 0.0);
  EXPECT_NEAR(wf.bandwidth_fraction[1], 0.75, 1e-15);
  EXPECT_NEAR(wf.served_load[2], 0.25, 1e-15);
  EXPECT_NEAR(wf.absorbed_load, 7.75, 1e-12);
  EXPECT_NEAR(wf.objective, 7.75, 1e-12);
  EXPECT_NEAR(wf.absorbed_fraction(), 0.775, 1e-12);
  EXPECT_NEAR(solve_opt2_lp(pop, 10.0, 2).objective, 7.75, 1e-9);
}

TEST(WaterFilling, FullStorage) {
  std::vector<double> pop{0.4, 0.3, 0.2, 0.1};
  auto wf = solve_water_filling(pop, 2.0, 4);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(wf.cache_fraction[c], 1.0);
  EXPECT_NEAR(wf.cache_fraction[3], 0.2 / 1.2, 1e-15);
  EXPECT_EQ(wf.threshold, 4u);
  EXPECT_NEAR(wf.storage_slack, 1.0 - 0.2 / 1.2, 1e-15);
  EXPECT_NEAR(wf.objective, solve_opt2_lp(pop, 2.0, 4).objective, 1e-9);
}

TEST(WaterFilling, VanishingLoadAbsorbsEverything) {
  auto pop = zipf_popularity(8, 0.8);
  auto wf = solve_water_filling(pop, 1e-6, 2);
  for (std::size_t c = 1; c < 8; ++c) {
    double rho_c = 1e-6 * pop[c];
    EXPECT_NEAR(wf.cache_fraction[c], rho_c / (1 + rho_c), 1e-18);
    EXPECT_NEAR(wf.cache_fraction[c], rho_c, 1e-12);
  }
  EXPECT_NEAR(wf.absorbed_fraction(), 1.0, 1e-12);
}

TEST(WaterFilling, ConstraintsAndBoundsOnRandomInstances) {
  Rng rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    std::size_t c = 1 + rng() % 30;
    std::size_t m = 1 + rng() % c;
    std::vector<double> pop(c);
    for (auto& p : pop) p = 0.01 + unit(rng);
    std::sort(pop.rbegin(), pop.rend());
    pop = renormalize(pop);
    double rho = std::exp(unit(rng) * 8.0 - 4.0);
    auto wf = solve_water_filling(pop, rho, m);
    EXPECT_LE(opt2_max_violation(wf, m), 1e-12);
    double sum_m = std::accumulate(wf.cache_fraction.begin(), wf.cache_fraction.end(), 0.0);
    EXPECT_NEAR(sum_m + wf.storage_slack, static_cast<double>(m), 1e-12);
    EXPECT_GE(wf.absorbed_fraction(), 0.0);
    EXPECT_LE(wf.absorbed_fraction(), 1.0 + 1e-12);
    EXPECT_NEAR(wf.absorbed_load, wf.objective, 1e-9 * std::max(1.0, wf.objective));
  }
}

TEST(WaterFilling, Preconditions) {
  EXPECT_THROW(solve_water_filling(std::vector<double>{0.2, 0.8}, 1.0, 1), ConfigError);
  EXPECT_THROW(solve_water_filling(std::vector<double>{0.5, 0.5}, 1.0, 3), ConfigError);
  EXPECT_THROW(solve_water_filling(std::vector<double>{0.5, 0.5}, 1.0, 0), ConfigError);
}

TEST(Floor, ExampleAndMonotone) {
  EXPECT_NEAR(large_catalogue_loss_floor(1, 1.0, 1.0, 1), 0.1, 1e-15);
  double prev = 1.0;
  for (std::size_t m : {1u, 2u, 4u, 16u, 64u, 256u}) {
    double v = large_catalogue_loss_floor(m, 1.0, 2.0, 4);
    EXPECT_LE(v, prev);
    prev = v;
  }
  EXPECT_LT(prev, 1e-100);
  EXPECT_THROW(large_catalogue_loss_floor(1, 1.0, 1.0, 0), ConfigError);
}

namespace {
SystemConfig tiny(std::vector<double> pop, std::size_t b, std::size_t m, std::size_t u,
                  double total_rate) {
  SystemConfig cfg;
  cfg.box_count = b;
  cfg.storage_per_box = m;
  cfg.uplink_slots = u;
  cfg.load = total_rate / static_cast<double>(b * u);
  cfg.catalogue = FixedCatalogue{std::move(pop), std::nullopt, 0.0};
  return cfg;
}
}  // namespace

TEST(Ctmc, SingleServer) {
  auto b = exact_ctmc_loss(tiny({1.0}, 1, 1, 1, 1.0), Placement(1, {{0}}));
  EXPECT_NEAR(b[0], 0.5, 1e-12);
}

TEST(Ctmc, SharedBox) {
  auto b = exact_ctmc_loss(tiny({0.5, 0.5}, 1, 2, 1, 2.0), Placement(2, {{0, 1}}));
  EXPECT_NEAR(b[0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(b[1], 2.0 / 3.0, 1e-12);
}

TEST(Ctmc, VanishingLoad) {
  auto b = exact_ctmc_loss(tiny({0.5, 0.5}, 2, 1, 1, 1e-9), Placement(2, {{0}, {1}}));
  for (double v : b) EXPECT_LT(v, 1e-8);
}

TEST(Ctmc, SingleResourceEqualsErlang) {
  for (std::size_t boxes : {1u, 2u, 3u}) {
    for (std::size_t u : {1u, 2u, 4u}) {
      for (double nu : {0.5, 3.0, 9.0}) {
        std::vector<std::vector<ContentId>> caches(boxes, std::vector<ContentId>{0});
        auto b = exact_ctmc_loss(tiny({1.0}, boxes, 1, u, nu), Placement(1, caches));
        EXPECT_NEAR(b[0], erlang_b(nu, boxes * u), 1e-12);
      }
    }
  }
}

TEST(Ctmc, StateSpaceGuard) {
  auto cfg = tiny(std::vector<double>(6, 1.0 / 6), 6, 6, 6, 10.0);
  std::vector<std::vector<ContentId>> caches(6, {0, 1, 2, 3, 4, 5});
  EXPECT_THROW(exact_ctmc_loss(cfg, Placement(6, caches), 1000), CapacityError);
}
