#include "vodsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>

#include "vodsim/feasibility.hpp"

namespace vodsim {

double erlang_b(double load, std::size_t servers) {
  if (!(load > 0.0)) throw ConfigError("erlang_b needs a positive load");
  double blocking = 1.0;
  for (std::size_t k = 1; k <= servers; ++k) {
    blocking = load * blocking / (static_cast<double>(k) + load * blocking);
  }
  return blocking;
}

double optimal_loss(double load) {
  if (!(load > 0.0)) throw ConfigError("optimal_loss needs a positive load");
  return std::max(0.0, 1.0 - 1.0 / load);
}

// ---------------------------------------------------------------------------

std::size_t WaterFilling::hot_count() const {
  std::size_t hot = 0;
  while (hot < cache_fraction.size() && cache_fraction[hot] == 1.0 &&
         served_load[hot] == 0.0) {
    ++hot;
  }
  return hot;
}

std::vector<ContentId> WaterFilling::warm_contents() const {
  std::vector<ContentId> warm;
  for (std::size_t c = hot_count(); c < cache_fraction.size(); ++c) {
    if (cache_fraction[c] > 0.0) warm.push_back(static_cast<ContentId>(c));
  }
  return warm;
}

double WaterFilling::total_load() const {
  return std::accumulate(content_load.begin(), content_load.end(), 0.0);
}

WaterFilling solve_water_filling(std::span<const double> popularity,
                                 double load, std::size_t storage) {
  const std::size_t count = popularity.size();
  if (storage < 1 || storage > count) {
    throw ConfigError("water filling needs 1 <= M <= C");
  }
  if (!(load > 0.0)) throw ConfigError("water filling needs a positive load");
  for (std::size_t c = 1; c < count; ++c) {
    if (popularity[c] > popularity[c - 1]) {
      throw ConfigError("water filling needs popularity sorted descending");
    }
  }

  WaterFilling wf;
  wf.cache_fraction.assign(count, 0.0);
  wf.bandwidth_fraction.assign(count, 0.0);
  wf.served_load.assign(count, 0.0);
  wf.content_load.resize(count);
  for (std::size_t c = 0; c < count; ++c) wf.content_load[c] = load * popularity[c];

  // Hot: the M-1 most popular contents are cached everywhere.
  for (std::size_t c = 0; c + 1 < storage; ++c) wf.cache_fraction[c] = 1.0;

  // Warm: rho/(1+rho) per content until the unit bandwidth budget fills.
  double filled = 0.0;
  std::size_t c = storage - 1;
  for (; c < count; ++c) {
    double share = wf.content_load[c] / (1.0 + wf.content_load[c]);
    if (filled + share > 1.0) break;
    wf.cache_fraction[c] = wf.bandwidth_fraction[c] = wf.served_load[c] = share;
    filled += share;
  }
  wf.threshold = c;

  double absorbed = 0.0;
  for (std::size_t k = 0; k < c; ++k) absorbed += wf.content_load[k];
  if (c < count) {
    double rest = 1.0 - filled;
    wf.cache_fraction[c] = wf.bandwidth_fraction[c] = wf.served_load[c] = rest;
    absorbed += (wf.content_load[c] + 1.0) * rest;
  } else {
    wf.storage_slack = 1.0 - filled;
  }
  wf.absorbed_load = absorbed;

  double objective = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    objective += wf.content_load[k] * wf.cache_fraction[k] + wf.served_load[k];
  }
  wf.objective = objective;
  return wf;
}

double large_catalogue_loss_floor(std::size_t storage, double total_scale,
                                  double min_rate, std::size_t uplink_slots) {
  if (storage < 1 || uplink_slots < 1 || !(total_scale > 0.0) ||
      !(min_rate > 0.0)) {
    throw ConfigError("loss floor needs positive M, alpha, rate and U");
  }
  double ratio = 2.0 * static_cast<double>(storage) / total_scale;
  auto replicas = static_cast<std::size_t>(std::ceil(ratio - 1e-12));
  return 0.5 * erlang_b(min_rate, replicas * uplink_slots);
}

// ---------------------------------------------------------------------------

std::vector<double> exact_ctmc_loss(const SystemConfig& config,
                                    const Placement& placement,
                                    std::size_t max_states) {
  auto rates = per_content_rates(config);
  const std::size_t count = rates.size();
  if (placement.content_count() != count ||
      placement.box_count() != config.box_count) {
    throw ConfigError("placement does not match the configuration");
  }
  const std::size_t slots = config.uplink_slots;

  // Feasible states are downward closed, so a search from the empty vector
  // that only steps up by one request reaches all of them.
  std::map<std::vector<std::size_t>, std::size_t> index;
  std::vector<std::vector<std::size_t>> states;
  std::vector<std::vector<bool>> blocked;  // per state, per content
  std::deque<std::size_t> frontier;
  states.push_back(std::vector<std::size_t>(count, 0));
  index.emplace(states.back(), 0);
  frontier.push_back(0);
  while (!frontier.empty()) {
    std::size_t s = frontier.front();
    frontier.pop_front();
    std::vector<bool> row(count, false);
    for (std::size_t c = 0; c < count; ++c) {
      auto next = states[s];
      ++next[c];
      if (index.count(next)) continue;
      if (!is_feasible_matching(RequestVector{next}, placement, slots)) {
        row[c] = true;
        continue;
      }
      if (states.size() == max_states) {
        throw CapacityError("exact_ctmc_loss: more than " +
                            std::to_string(max_states) + " feasible states");
      }
      index.emplace(next, states.size());
      frontier.push_back(states.size());
      states.push_back(std::move(next));
    }
    if (blocked.size() <= s) blocked.resize(s + 1);
    blocked[s] = std::move(row);
  }

  std::vector<double> log_weight(states.size());
  for (std::size_t s = 0; s < states.size(); ++s) {
    double w = 0.0;
    for (std::size_t c = 0; c < count; ++c) {
      auto n = static_cast<double>(states[s][c]);
      w += n * std::log(rates[c]) - std::lgamma(n + 1.0);
    }
    log_weight[s] = w;
  }
  double peak = *std::max_element(log_weight.begin(), log_weight.end());
  double total = 0.0;
  for (double& w : log_weight) {
    w = std::exp(w - peak);
    total += w;
  }
  std::vector<double> blocking(count, 0.0);
  for (std::size_t s = 0; s < states.size(); ++s) {
    for (std::size_t c = 0; c < count; ++c) {
      if (blocked[s][c]) blocking[c] += log_weight[s] / total;
    }
  }
  return blocking;
}

}  // namespace vodsim
