#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "vodsim/analysis.hpp"
#include "vodsim/engine.hpp"
#include "vodsim/placement.hpp"
#include "vodsim/validation.hpp"

using namespace vodsim;

namespace {

SystemConfig small_fixed(std::vector<double> pop, std::size_t b, std::size_t m,
                         std::size_t u, double rho) {
  SystemConfig cfg;
  cfg.box_count = b;
  cfg.storage_per_box = m;
  cfg.uplink_slots = u;
  cfg.load = rho;
  cfg.catalogue = FixedCatalogue{std::move(pop), std::nullopt, 0.0};
  return cfg;
}

SystemConfig scaled_reference(std::size_t boxes, double rho) {
  SystemConfig cfg;
  cfg.box_count = boxes;
  cfg.catalogue = FixedCatalogue::zipf(500 * boxes / 4000, 0.8);
  cfg.load = rho;
  return cfg;
}

}  // namespace

TEST(Simulation, SingleServerErlang) {
  auto cfg = small_fixed({1.0}, 1, 1, 1, 1.0);
  cfg.horizon = 1e4;
  auto m = run_simulation(cfg, Placement(1, {{0}}), 1);
  EXPECT_NEAR(m.system_loss(), 0.5, 0.02);
  m.check_conservation();
}

TEST(Simulation, SamplingMatchesOptimumAtFullScale) {
  SystemConfig cfg;  // B=4000, C=500, M=10, U=4, alpha=0.8
  for (double rho : {0.5, 2.0}) {
    cfg.load = rho;
    Rng rng(2);
    auto p = sample_proportional_to_product(cfg, rng);
    auto m = run_simulation(cfg, p, 3);
    if (rho < 1) {
      EXPECT_LE(m.system_loss(), 0.01);
    } else {
      EXPECT_NEAR(m.system_loss(), 0.5, 0.02);
    }
  }
}

TEST(Simulation, HotContentsServedLocally) {
  auto cfg = small_fixed({0.6, 0.4}, 20, 2, 1, 0.9);
  cfg.network_mode = NetworkMode::PP2PN;
  std::vector<std::vector<ContentId>> caches(20, {0, 1});
  auto m = run_simulation(cfg, Placement(2, caches), 4);
  EXPECT_GT(m.total_arrivals(), 0u);
  EXPECT_EQ(m.total_local(), m.total_arrivals());
  EXPECT_EQ(m.total_rejections(), 0u);
  EXPECT_DOUBLE_EQ(m.system_loss(), 0.0);
}

TEST(Simulation, LocalFractionMatchesCachingBoxes) {
  auto cfg = small_fixed({0.5, 0.5}, 100, 1, 4, 0.1);
  cfg.network_mode = NetworkMode::PP2PN;
  cfg.horizon = 500;  // 2e4 arrivals, 1e4 per content
  cfg.warmup_fraction = 0.0;
  std::vector<std::vector<ContentId>> caches;
  for (int b = 0; b < 100; ++b) caches.push_back({b < 30 ? 0u : 1u});
  auto m = run_simulation(cfg, Placement(2, caches), 5);
  ASSERT_GT(m.arrivals[0], 9000u);
  EXPECT_NEAR(static_cast<double>(m.local_services[0]) / m.arrivals[0], 0.3, 0.02);
  EXPECT_NEAR(static_cast<double>(m.local_services[1]) / m.arrivals[1], 0.7, 0.02);
}

TEST(Simulation, ErlangWithinThreeStandardErrors) {
  auto r = ctmc_comparison(single_content_erlang_config(2000.0),
                           Placement(1, {{0}, {0}}), 20, 7);
  EXPECT_NEAR(r.exact, erlang_b(3.0, 4), 1e-12);
  EXPECT_TRUE(r.within(3.0)) << r.mean << " +- " << r.standard_error;
}

TEST(Simulation, DeterministicTrace) {
  auto cfg = small_fixed(zipf_popularity(6, 0.8), 5, 2, 2, 1.2);
  cfg.cache_update = CacheUpdatePolicy{};
  cfg.horizon = 50;
  Rng rng(6);
  auto p = uniform_placement(cfg, rng);
  std::ostringstream a, b;
  RunOptions oa, ob;
  oa.trace = &a;
  ob.trace = &b;
  auto ma = run_simulation(cfg, p, 99, oa);
  auto mb = run_simulation(cfg, p, 99, ob);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_FALSE(a.str().empty());
  EXPECT_EQ(ma.rejections, mb.rejections);
  std::ostringstream c;
  RunOptions oc;
  oc.trace = &c;
  run_simulation(cfg, p, 100, oc);
  EXPECT_NE(a.str(), c.str());
}

TEST(Simulation, InvariantsHoldUnderEveryPolicy) {
  Rng rng(7);
  auto base = small_fixed(zipf_popularity(8, 0.9), 6, 3, 2, 1.3);
  base.horizon = 40;
  RunOptions checked;
  checked.check_invariants = true;

  for (std::size_t budget : {0u, 1u, 8u}) {
    auto cfg = base;
    cfg.acceptance_policy = RepackingPolicy{budget};
    cfg.cache_update = CacheUpdatePolicy{};
    auto m = run_simulation(cfg, uniform_placement(cfg, rng), budget, checked);
    m.check_conservation();
  }

  auto pp = base;
  pp.network_mode = NetworkMode::PP2PN;
  pp.service_time_model = ServiceModel::Deterministic;
  run_simulation(pp, sample_proportional_to_product(pp, rng), 11, checked).check_conservation();

  SystemConfig counter;
  counter.box_count = 60;
  counter.storage_per_box = 16;
  counter.uplink_slots = 2;
  counter.load = 0.9;
  counter.catalogue = ClassCatalogue{{{0.3, 4.0}, {0.2, 3.0}}};
  counter.acceptance_policy = CounterPolicy{};
  counter.horizon = 30;
  auto m = run_simulation(counter, modified_p2p_placement(counter, rng), 12, checked);
  m.check_conservation();
  EXPECT_GT(m.total_rejections(), 0u);
}

TEST(Simulation, InterruptedStreamsCountAsLosses) {
  auto cfg = small_fixed(zipf_popularity(10, 0.8), 4, 2, 3, 0.6);
  cfg.cache_update = CacheUpdatePolicy{};
  cfg.acceptance_policy = RepackingPolicy{0};
  cfg.horizon = 400;
  Rng rng(8);
  auto m = run_simulation(cfg, uniform_placement(cfg, rng), 13);
  m.check_conservation();
  EXPECT_GT(m.total_interrupted(), 0u);
  EXPECT_GE(m.total_rejections(), m.total_interrupted());
  EXPECT_GT(m.interrupted_fraction(), 0.0);
}

TEST(Simulation, WarmupExcludesEarlyArrivals) {
  auto cfg = small_fixed({1.0}, 1, 1, 1, 5.0);
  cfg.horizon = 100;
  cfg.warmup_fraction = 0.0;
  auto all = run_simulation(cfg, Placement(1, {{0}}), 14);
  cfg.warmup_fraction = 0.5;
  auto half = run_simulation(cfg, Placement(1, {{0}}), 14);
  EXPECT_LT(half.total_arrivals(), all.total_arrivals());
  EXPECT_NEAR(static_cast<double>(half.total_arrivals()) / all.total_arrivals(), 0.5, 0.05);
  EXPECT_DOUBLE_EQ(half.measured_time, 50.0);
}

TEST(Simulation, RejectsMismatchedPlacement) {
  auto cfg = small_fixed({0.5, 0.5}, 2, 1, 1, 1.0);
  EXPECT_THROW(run_simulation(cfg, Placement(2, {{0}}), 1), ConfigError);
  EXPECT_THROW(run_simulation(cfg, Placement(3, {{0}, {1}}), 1), ConfigError);
}

TEST(Counter, RejectsWhenAnySampledCounterIsFull) {
  Placement p(1, {{0}, {0}});
  CounterState state(2);
  state.counters = {1, 2};
  Rng rng(15);
  auto r = counter_based_admit(state, 0, p, 2, 1, 0, rng);
  EXPECT_EQ(r.decision, CounterDecision::CounterFull);
  EXPECT_EQ(state.counters, (std::vector<std::size_t>{1, 2}));
}

TEST(Counter, AdmitsAndReleases) {
  Placement p(1, {{0}, {0}, {0}});
  CounterState state(3);
  Rng rng(16);
  auto r = counter_based_admit(state, 0, p, 2, 1, 0, rng);
  ASSERT_TRUE(r.accepted());
  ASSERT_EQ(r.boxes.size(), 2u);
  EXPECT_NE(r.boxes[0], r.boxes[1]);
  state.associate(42, r.boxes);
  EXPECT_EQ(std::accumulate(state.counters.begin(), state.counters.end(), std::size_t{0}), 2u);
  state.release(42);
  EXPECT_EQ(state.counters, (std::vector<std::size_t>{0, 0, 0}));
}

TEST(Counter, SingleBoxCapIsU) {
  Placement p(1, {{0}});
  CounterState state(1);
  Rng rng(17);
  for (int i = 0; i < 3; ++i) EXPECT_TRUE(counter_based_admit(state, 0, p, 1, 3, 0, rng).accepted());
  EXPECT_EQ(counter_based_admit(state, 0, p, 1, 3, 0, rng).decision,
            CounterDecision::CounterFull);
}

TEST(Counter, EligibilityAndHolderShortfall) {
  Placement p(2, {{0}, {0}, {1}});
  CounterState state(3);
  Rng rng(18);
  EXPECT_EQ(counter_based_admit(state, 1, p, 1, 1, 2, rng).decision,
            CounterDecision::Ineligible);
  EXPECT_EQ(counter_based_admit(state, 0, p, 3, 1, 2, rng).decision,
            CounterDecision::InsufficientHolders);
}

TEST(Counter, SampledHoldersAreUniform) {
  Placement p(1, {{0}, {0}, {0}, {0}});
  Rng rng(19);
  std::vector<int> hits(4, 0);
  for (int t = 0; t < 40000; ++t) {
    CounterState state(4);
    for (BoxId b : counter_based_admit(state, 0, p, 2, 1, 0, rng).boxes) ++hits[b];
  }
  for (int h : hits) EXPECT_NEAR(h / 80000.0, 0.25, 0.01);
}

TEST(Counter, LossDecreasesWithStorage) {
  std::vector<double> losses;
  for (std::size_t m : {4u, 16u, 64u}) {
    SystemConfig cfg;
    cfg.box_count = 2000;
    cfg.storage_per_box = m;
    cfg.uplink_slots = 4;
    cfg.load = 0.5;
    cfg.catalogue = ClassCatalogue{{{0.2, 4.0}, {0.8, 1.5}}};
    cfg.acceptance_policy = CounterPolicy{};
    cfg.horizon = 5;
    auto r = run_experiment(cfg, Strategy::ModifiedProportional, 3, 20);
    losses.push_back(r.overall_loss().mean);
  }
  EXPECT_GT(losses[0], losses[1]);
  EXPECT_GT(losses[1], losses[2]);
}

TEST(Experiment, SingleRepetitionEqualsRun) {
  auto cfg = scaled_reference(400, 1.0);
  auto r = run_experiment(cfg, Strategy::Sampling, 1, 77);
  ASSERT_EQ(r.runs.size(), 1u);
  EXPECT_DOUBLE_EQ(r.system_loss().mean, r.runs[0].system_loss());
  EXPECT_DOUBLE_EQ(r.system_loss().stdev, 0.0);

  Rng prng(derive_seed(r.seeds[0], 0));
  auto p = make_placement(cfg, Strategy::Sampling, prng);
  auto m = run_simulation(cfg, p, derive_seed(r.seeds[0], 1));
  EXPECT_EQ(m.rejections, r.runs[0].rejections);
}

TEST(Experiment, SameSeedIsBitIdentical) {
  auto cfg = scaled_reference(400, 1.2);
  for (auto s : {Strategy::Uniform, Strategy::CacheUpdate, Strategy::Bernoulli}) {
    auto a = run_experiment(cfg, s, 3, 5);
    auto b = run_experiment(cfg, s, 3, 5, 2);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_EQ(a.runs[i].rejections, b.runs[i].rejections);
      EXPECT_EQ(a.runs[i].arrivals, b.runs[i].arrivals);
    }
    EXPECT_EQ(a.system_loss().mean, b.system_loss().mean);
  }
}

TEST(Experiment, FullScaleSamplingSpreadIsSmall) {
  SystemConfig cfg;
  auto r = run_experiment(cfg, Strategy::Sampling, 10, 2024);
  RecordProperty("stdev", std::to_string(r.system_loss().stdev));
  EXPECT_LT(r.system_loss().stdev, 0.05);
}

TEST(Experiment, StrategyNames) {
  for (auto s : {Strategy::Uniform, Strategy::Sampling, Strategy::Bernoulli,
                 Strategy::CacheUpdate, Strategy::HotWarmCold,
                 Strategy::ModifiedProportional}) {
    EXPECT_EQ(parse_strategy(strategy_name(s)), s);
  }
  EXPECT_THROW(parse_strategy("LRU"), ConfigError);
}

TEST(Experiment, CacheUpdateEnablesUpdates) {
  SystemConfig cfg;
  EXPECT_FALSE(cfg.cache_update.has_value());
  EXPECT_TRUE(configure_for(cfg, Strategy::CacheUpdate).cache_update.has_value());
  EXPECT_FALSE(configure_for(cfg, Strategy::Sampling).cache_update.has_value());
}

TEST(Experiment, HotWarmColdRefusesCacheUpdates) {
  auto cfg = small_fixed({0.4, 0.3, 0.2, 0.1}, 10, 2, 4, 10.0);
  cfg.network_mode = NetworkMode::PP2PN;
  cfg.cache_update = CacheUpdatePolicy{};
  Rng rng(21);
  EXPECT_THROW(make_placement(cfg, Strategy::HotWarmCold, rng), ConfigError);
}

TEST(Experiment, SeedDerivation) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t base : {0u, 1u, 2u}) {
    for (std::uint64_t i = 0; i < 100; ++i) seen.insert(derive_seed(base, i));
  }
  EXPECT_EQ(seen.size(), 300u);
  EXPECT_EQ(derive_seed(9, 3), derive_seed(9, 3));
}

TEST(Metrics, SystemLossIsPopularityWeighted) {
  Metrics m(2);
  m.popularity = {0.75, 0.25};
  m.arrivals = {100, 10};
  m.acceptances = {100, 0};
  m.rejections = {0, 10};
  EXPECT_DOUBLE_EQ(m.system_loss(), 0.25);
  EXPECT_DOUBLE_EQ(m.overall_loss(), 10.0 / 110.0);
  m.arrivals[1] = 0;
  m.rejections[1] = 0;
  EXPECT_DOUBLE_EQ(m.system_loss(), 0.0);
  m.arrivals[0] = 5;
  EXPECT_THROW(m.check_conservation(), std::logic_error);
}
