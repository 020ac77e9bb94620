#pragma once

// Seeded discrete-event loss-network simulator.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vodsim/core.hpp"

namespace vodsim {

/// Per-content counters over the measurement window (arrivals at or after
/// warmup_fraction * horizon).
struct Metrics {
  std::vector<std::uint64_t> arrivals;
  std::vector<std::uint64_t> acceptances;
  std::vector<std::uint64_t> rejections;
  std::vector<std::uint64_t> local_services;
  /// Accepted streams later cut off by a cache eviction. They are also
  /// counted in `rejections` (and removed from `acceptances`).
  std::vector<std::uint64_t> interrupted;
  /// Counter-mode rejection causes, also included in `rejections`.
  std::uint64_t ineligible_rejections = 0;
  std::uint64_t insufficient_holder_rejections = 0;
  std::vector<double> popularity;  // nu-hat, weights for system_loss
  double measured_time = 0.0;

  explicit Metrics(std::size_t content_count = 0);

  std::size_t content_count() const { return arrivals.size(); }
  std::uint64_t total_arrivals() const;
  std::uint64_t total_rejections() const;
  std::uint64_t total_local() const;
  std::uint64_t total_interrupted() const;

  /// rejections_c / arrivals_c (0 when nothing arrived).
  double content_loss(ContentId c) const;
  /// sum nu-hat_c * content_loss(c), over contents that saw arrivals with
  /// the weights renormalized to them.
  double system_loss() const;
  /// Total rejections over total arrivals.
  double overall_loss() const;
  /// Fraction of arrivals absorbed by the boxes (accepted or local).
  double absorbed_fraction() const;
  double local_fraction() const;
  double interrupted_fraction() const;

  /// Throws std::logic_error if a per-content balance does not hold.
  void check_conservation() const;
};

struct CounterState {
  std::vector<std::size_t> counters;  // Z_b
  std::unordered_map<RequestId, std::vector<BoxId>> associations;

  explicit CounterState(std::size_t box_count = 0) : counters(box_count, 0) {}
  void associate(RequestId request, std::vector<BoxId> boxes);
  /// Decrements the counters of a finished request.
  void release(RequestId request);
};

enum class CounterDecision {
  Accepted,
  Ineligible,          // fewer than the eligibility threshold of replicas
  InsufficientHolders, // fewer than L distinct holders
  CounterFull,         // some sampled Z_b + 1 would exceed L*U
};

struct CounterAdmission {
  CounterDecision decision = CounterDecision::CounterFull;
  std::vector<BoxId> boxes;
  bool accepted() const { return decision == CounterDecision::Accepted; }
};

/// Counter-based acceptance: sample L distinct holders of c; admit (and
/// increment all L counters) only if none would exceed L*U. Contents with
/// fewer than `min_replicas` holders are never served.
CounterAdmission counter_based_admit(CounterState& state, ContentId content,
                                     const Placement& placement,
                                     std::size_t boxes_per_request,
                                     std::size_t uplink_slots,
                                     std::size_t min_replicas, Rng& rng);

struct RunOptions {
  /// One line per event: time type content box decision.
  std::ostream* trace = nullptr;
  /// Validate engine invariants after every event (slow; for tests).
  bool check_invariants = false;
};

/// Simulates one run. Fully determined by (config, placement, seed).
Metrics run_simulation(const SystemConfig& config, const Placement& placement,
                       std::uint64_t seed, const RunOptions& options = {});

// ---------------------------------------------------------------------------

enum class Strategy {
  Uniform,               // UNIF
  Sampling,              // SAMP
  Bernoulli,             // BERN
  CacheUpdate,           // CU
  HotWarmCold,           // HWC
  ModifiedProportional,  // MP2P
};

std::string_view strategy_name(Strategy strategy);
Strategy parse_strategy(std::string_view name);

/// Per-repetition seed: splitmix64 of base + golden-ratio * (index + 1).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// Applies the strategy's implied config changes (cache updates for CU).
SystemConfig configure_for(const SystemConfig& config, Strategy strategy);

/// Initial placement for a strategy; `config` must already be configured.
Placement make_placement(const SystemConfig& config, Strategy strategy, Rng& rng);

struct Statistic {
  double mean = 0.0;
  double stdev = 0.0;  // sample standard deviation, 0 for one repetition
};

Statistic summarize(std::span<const double> values);

struct ExperimentResult {
  Strategy strategy = Strategy::Sampling;
  std::vector<std::uint64_t> seeds;
  std::vector<Metrics> runs;

  Statistic system_loss() const;
  Statistic overall_loss() const;
  Statistic absorbed_fraction() const;
  Statistic local_fraction() const;
  Statistic interrupted_fraction() const;
  /// Mean over repetitions of each content's loss rate.
  std::vector<double> mean_content_loss() const;
  /// Named statistics in a fixed order, for reporting.
  std::vector<std::pair<std::string, Statistic>> statistics() const;
};

/// Runs independent repetitions with seeds derive_seed(base_seed, r); each
/// repetition draws a fresh placement. Repetitions may run on up to `jobs`
/// threads; results are stored in repetition order.
ExperimentResult run_experiment(const SystemConfig& config, Strategy strategy,
                                std::size_t repetitions, std::uint64_t base_seed,
                                std::size_t jobs = 1);

}  // namespace vodsim
