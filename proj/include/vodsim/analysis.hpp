#pragma once

// Closed-form and exact results: Erlang blocking, the asymptotic optimum,
// the hot-warm-cold water-filling solution, the large-catalogue loss floor,
// and an exact stationary solver for tiny loss networks.

#include <cstddef>
#include <span>
#include <vector>

#include "vodsim/core.hpp"

namespace vodsim {

/// Erlang B blocking probability of `servers` circuits offered load `load`.
/// Uses the recurrence E(0)=1, E(k) = load*E(k-1) / (k + load*E(k-1)).
double erlang_b(double load, std::size_t servers);

/// Best achievable system loss (1 - 1/rho)^+.
double optimal_loss(double load);

/// Solution of the pure-P2P placement LP (cache fraction m, bandwidth
/// fraction lambda, served load x per content).
struct WaterFilling {
  std::vector<double> cache_fraction;
  std::vector<double> bandwidth_fraction;
  std::vector<double> served_load;
  std::vector<double> content_load;  // rho_c = rho * nu_c
  /// Number of leading contents served without loss (hot plus fully
  /// water-filled warm contents), 1-based like the content ranking.
  std::size_t threshold = 0;
  /// Storage per box left unused because the catalogue is exhausted.
  double storage_slack = 0.0;
  double absorbed_load = 0.0;
  double objective = 0.0;

  std::size_t hot_count() const;
  /// Indices (0-based) with 0 < cache_fraction < 1 or warm by rank.
  std::vector<ContentId> warm_contents() const;
  double total_load() const;
  double absorbed_fraction() const { return absorbed_load / total_load(); }
};

/// Popularity must be sorted descending with C >= M >= 1.
WaterFilling solve_water_filling(std::span<const double> popularity,
                                 double load, std::size_t storage);

/// (1/2) * E(min_rate, ceil(2M/alpha) * U).
double large_catalogue_loss_floor(std::size_t storage, double total_scale,
                                  double min_rate, std::size_t uplink_slots);

inline constexpr std::size_t kMaxCtmcStates = 100'000;

/// Per-content blocking probabilities of the loss network with
/// stationary law pi(n) ~ prod nu_c^n_c / n_c! over feasible n.
std::vector<double> exact_ctmc_loss(const SystemConfig& config,
                                    const Placement& placement,
                                    std::size_t max_states = kMaxCtmcStates);

}  // namespace vodsim
