#include "vodsim/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <thread>

#include "vodsim/analysis.hpp"
#include "vodsim/feasibility.hpp"
#include "vodsim/placement.hpp"

namespace vodsim {

// ---------------------------------------------------------------------------
// Metrics

Metrics::Metrics(std::size_t content_count)
    : arrivals(content_count, 0),
      acceptances(content_count, 0),
      rejections(content_count, 0),
      local_services(content_count, 0),
      interrupted(content_count, 0),
      popularity(content_count, 0.0) {}

namespace {
std::uint64_t sum(const std::vector<std::uint64_t>& v) {
  return std::accumulate(v.begin(), v.end(), std::uint64_t{0});
}
double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace

std::uint64_t Metrics::total_arrivals() const { return sum(arrivals); }
std::uint64_t Metrics::total_rejections() const { return sum(rejections); }
std::uint64_t Metrics::total_local() const { return sum(local_services); }
std::uint64_t Metrics::total_interrupted() const { return sum(interrupted); }

double Metrics::content_loss(ContentId c) const {
  return ratio(rejections[c], arrivals[c]);
}

double Metrics::system_loss() const {
  double weighted = 0.0;
  double weight = 0.0;
  for (std::size_t c = 0; c < arrivals.size(); ++c) {
    if (arrivals[c] == 0) continue;
    weighted += popularity[c] * content_loss(static_cast<ContentId>(c));
    weight += popularity[c];
  }
  return weight > 0.0 ? weighted / weight : 0.0;
}

double Metrics::overall_loss() const {
  return ratio(total_rejections(), total_arrivals());
}

double Metrics::absorbed_fraction() const {
  auto arrived = total_arrivals();
  return ratio(arrived - total_rejections(), arrived);
}

double Metrics::local_fraction() const {
  return ratio(total_local(), total_arrivals());
}

double Metrics::interrupted_fraction() const {
  return ratio(total_interrupted(), total_arrivals());
}

void Metrics::check_conservation() const {
  for (std::size_t c = 0; c < arrivals.size(); ++c) {
    if (arrivals[c] != acceptances[c] + rejections[c] + local_services[c]) {
      throw std::logic_error("arrivals != acceptances + rejections + local for content " +
                             std::to_string(c));
    }
    if (interrupted[c] > rejections[c]) {
      throw std::logic_error("more interruptions than rejections");
    }
  }
}

// ---------------------------------------------------------------------------
// Counter-based acceptance

void CounterState::associate(RequestId request, std::vector<BoxId> boxes) {
  associations.emplace(request, std::move(boxes));
}

void CounterState::release(RequestId request) {
  auto it = associations.find(request);
  if (it == associations.end()) return;
  for (BoxId b : it->second) --counters[b];
  associations.erase(it);
}

CounterAdmission counter_based_admit(CounterState& state, ContentId content,
                                     const Placement& placement,
                                     std::size_t boxes_per_request,
                                     std::size_t uplink_slots,
                                     std::size_t min_replicas, Rng& rng) {
  CounterAdmission result;
  auto holders = placement.holders(content);
  if (holders.size() < min_replicas) {
    result.decision = CounterDecision::Ineligible;
    return result;
  }
  if (holders.size() < boxes_per_request || boxes_per_request == 0) {
    result.decision = CounterDecision::InsufficientHolders;
    return result;
  }
  // Floyd's sampling of L distinct holder indices.
  std::vector<std::size_t> picked;
  picked.reserve(boxes_per_request);
  const std::size_t n = holders.size();
  for (std::size_t j = n - boxes_per_request; j < n; ++j) {
    std::uniform_int_distribution<std::size_t> draw(0, j);
    std::size_t t = draw(rng);
    if (std::find(picked.begin(), picked.end(), t) != picked.end()) t = j;
    picked.push_back(t);
  }
  const std::size_t cap = boxes_per_request * uplink_slots;
  for (std::size_t i : picked) {
    if (state.counters[holders[i]] + 1 > cap) {
      result.decision = CounterDecision::CounterFull;
      return result;
    }
  }
  result.decision = CounterDecision::Accepted;
  for (std::size_t i : picked) {
    ++state.counters[holders[i]];
    result.boxes.push_back(holders[i]);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

struct Request {
  ContentId content;
  double completion;
  bool counted;
};

struct Completion {
  double time;
  RequestId request;
  bool operator>(const Completion& other) const {
    return time > other.time || (time == other.time && request > other.request);
  }
};

class Tracer {
 public:
  explicit Tracer(std::ostream* out) : out_(out) {
    if (out_) *out_ << std::fixed << std::setprecision(9);
  }
  explicit operator bool() const { return out_ != nullptr; }

  void event(double time, const char* type, ContentId content,
             std::optional<BoxId> box, const char* decision) {
    if (!out_) return;
    *out_ << time << ' ' << type << ' ' << content << ' ';
    if (box) *out_ << *box;
    else *out_ << '-';
    *out_ << ' ' << decision << '\n';
  }

 private:
  std::ostream* out_;
};

}  // namespace

Metrics run_simulation(const SystemConfig& config, const Placement& placement,
                       std::uint64_t seed, const RunOptions& options) {
  config.validate();
  const std::size_t content_count = config.content_count();
  if (placement.box_count() != config.box_count ||
      placement.content_count() != content_count) {
    throw ConfigError("placement does not match the configuration");
  }
  const bool counter_mode =
      std::holds_alternative<CounterPolicy>(config.acceptance_policy);
  const bool pp2pn = config.network_mode == NetworkMode::PP2PN;
  const bool deterministic = config.service_time_model == ServiceModel::Deterministic;

  auto rates = per_content_rates(config);
  const double total_rate = std::accumulate(rates.begin(), rates.end(), 0.0);
  const double warmup_end = config.warmup_fraction * config.horizon;

  Metrics metrics(content_count);
  metrics.popularity = renormalize(rates);
  metrics.measured_time = config.horizon - warmup_end;

  Rng rng(seed);
  std::exponential_distribution<double> interarrival(total_rate);
  std::exponential_distribution<double> service(1.0);
  std::discrete_distribution<ContentId> pick_content(rates.begin(), rates.end());
  std::uniform_int_distribution<BoxId> pick_box(
      0, static_cast<BoxId>(config.box_count - 1));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::optional<AssignmentState> slots;
  std::optional<CounterState> counters;
  std::size_t t_r_max = 0;
  std::size_t boxes_per_request = 0;
  std::size_t min_replicas = 0;
  if (counter_mode) {
    counters.emplace(config.box_count);
    boxes_per_request = config.counter_boxes_per_request();
    min_replicas = config.eligibility_threshold();
  } else {
    slots.emplace(placement, config.uplink_slots);
    t_r_max = config.repacking_budget();
  }
  const double push_probability =
      config.cache_update_epsilon() * static_cast<double>(config.box_count);
  const bool cache_updates = config.cache_update.has_value();

  std::vector<Request> requests;
  requests.reserve(static_cast<std::size_t>(total_rate * config.horizon * 1.1) + 16);
  std::priority_queue<Completion, std::vector<Completion>, std::greater<>> pending;
  Tracer trace(options.trace);

  auto current_placement = [&]() -> const Placement& {
    return slots ? slots->placement() : placement;
  };
  auto check = [&] {
    if (!options.check_invariants) return;
    if (slots) slots->check_invariants();
    if (counters) {
      std::vector<std::size_t> expected(config.box_count, 0);
      for (const auto& [id, boxes] : counters->associations) {
        for (BoxId b : boxes) ++expected[b];
      }
      for (BoxId b = 0; b < config.box_count; ++b) {
        if (counters->counters[b] != expected[b] ||
            counters->counters[b] > boxes_per_request * config.uplink_slots) {
          throw std::logic_error("counter invariant broken");
        }
      }
    }
    metrics.check_conservation();
  };

  double next_arrival = interarrival(rng);
  while (true) {
    bool arrival = pending.empty() || next_arrival <= pending.top().time;
    double now = arrival ? next_arrival : pending.top().time;
    if (now >= config.horizon) break;

    if (!arrival) {
      RequestId id = pending.top().request;
      pending.pop();
      if (slots) {
        if (slots->is_active(id)) {
          SlotRef at = slots->location(id);
          slots->release(id);
          trace.event(now, "completion", requests[id].content, at.box, "done");
        }
      } else {
        counters->release(id);
        trace.event(now, "completion", requests[id].content, std::nullopt, "done");
      }
      check();
      continue;
    }

    next_arrival = now + interarrival(rng);
    const ContentId content = pick_content(rng);
    const RequestId id = requests.size();
    const bool counted = now >= warmup_end;
    requests.push_back({content, 0.0, counted});
    if (counted) ++metrics.arrivals[content];

    if (pp2pn) {
      BoxId origin = pick_box(rng);
      if (current_placement().holds(origin, content)) {
        if (counted) ++metrics.local_services[content];
        trace.event(now, "arrival", content, origin, "local");
        check();
        continue;
      }
    }

    bool accepted = false;
    std::optional<BoxId> server;
    const char* decision = "rejected";
    if (slots) {
      server = select_box(*slots, content, rng);
      if (server) {
        slots->assign(id, content, *server);
        accepted = true;
        decision = "accepted";
      } else {
        auto outcome = repack(*slots, id, content, t_r_max, rng);
        accepted = outcome.accepted;
        if (accepted) {
          server = outcome.box;
          decision = "repacked";
        }
      }
    } else {
      auto admission = counter_based_admit(*counters, content, current_placement(),
                                           boxes_per_request, config.uplink_slots,
                                           min_replicas, rng);
      switch (admission.decision) {
        case CounterDecision::Accepted:
          accepted = true;
          decision = "accepted";
          server = admission.boxes.front();
          counters->associate(id, std::move(admission.boxes));
          break;
        case CounterDecision::Ineligible:
          decision = "ineligible";
          if (counted) ++metrics.ineligible_rejections;
          break;
        case CounterDecision::InsufficientHolders:
          decision = "insufficient-holders";
          if (counted) ++metrics.insufficient_holder_rejections;
          break;
        case CounterDecision::CounterFull:
          decision = "counter-full";
          break;
      }
    }

    if (accepted) {
      double duration = deterministic ? 1.0 : service(rng);
      requests[id].completion = now + duration;
      pending.push({requests[id].completion, id});
      if (counted) ++metrics.acceptances[content];
    } else if (counted) {
      ++metrics.rejections[content];
    }
    trace.event(now, "arrival", content, server, decision);

    if (cache_updates && slots && unit(rng) < push_probability) {
      BoxId target = pick_box(rng);
      auto change = slots->update_cache(target, content, rng);
      if (change.changed) {
        trace.event(now, "push", content, target, "evict");
        if (!change.orphans.empty()) {
          std::vector<Orphan> orphans;
          for (RequestId r : change.orphans) {
            orphans.push_back({r, change.evicted, requests[r].completion - now});
          }
          for (const auto& out : orphan_rescue(*slots, std::move(orphans), t_r_max, rng)) {
            const auto& req = requests[out.request];
            if (out.result == RescueResult::Repacked) {
              trace.event(now, "rescue", req.content,
                          slots->location(out.request).box, "repacked");
              continue;
            }
            trace.event(now, "rescue", req.content, std::nullopt, "interrupted");
            if (req.counted) {
              --metrics.acceptances[req.content];
              ++metrics.rejections[req.content];
              ++metrics.interrupted[req.content];
            }
          }
        }
      }
    }
    check();
  }
  return metrics;
}

// ---------------------------------------------------------------------------
// Experiments

std::string_view strategy_name(Strategy strategy) {
  switch (strategy) {
    case Strategy::Uniform: return "UNIF";
    case Strategy::Sampling: return "SAMP";
    case Strategy::Bernoulli: return "BERN";
    case Strategy::CacheUpdate: return "CU";
    case Strategy::HotWarmCold: return "HWC";
    case Strategy::ModifiedProportional: return "MP2P";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  for (auto s : {Strategy::Uniform, Strategy::Sampling, Strategy::Bernoulli,
                 Strategy::CacheUpdate, Strategy::HotWarmCold,
                 Strategy::ModifiedProportional}) {
    if (strategy_name(s) == name) return s;
  }
  throw ConfigError("unknown strategy '" + std::string(name) +
                    "' (expected UNIF, SAMP, BERN, CU, HWC or MP2P)");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SystemConfig configure_for(const SystemConfig& config, Strategy strategy) {
  SystemConfig out = config;
  if (strategy == Strategy::CacheUpdate && !out.cache_update) {
    out.cache_update = CacheUpdatePolicy{};
  }
  out.validate();
  return out;
}

Placement make_placement(const SystemConfig& config, Strategy strategy, Rng& rng) {
  switch (strategy) {
    case Strategy::Uniform:
      return uniform_placement(config, rng);
    case Strategy::Sampling:
      return sample_proportional_to_product(config, rng);
    case Strategy::Bernoulli: {
      auto popularity = config.normalized_popularity();
      // With M == C the only subset is the whole catalogue; any beta works.
      double beta = config.storage_per_box < popularity.size()
                        ? solve_beta(popularity, config.storage_per_box)
                        : 1.0;
      return bernoulli_sample_placement(config, beta, rng);
    }
    case Strategy::CacheUpdate:
      if (config.cache_update &&
          config.cache_update->initial == InitialPlacement::Sampling) {
        return sample_proportional_to_product(config, rng);
      }
      return uniform_placement(config, rng);
    case Strategy::HotWarmCold: {
      if (config.cache_update) {
        throw ConfigError("hot-warm-cold placement is static; disable cache updates");
      }
      auto wf = solve_water_filling(config.normalized_popularity(), config.load,
                                    config.storage_per_box);
      return hot_warm_cold_placement(wf, config, rng);
    }
    case Strategy::ModifiedProportional:
      return modified_p2p_placement(config, rng);
  }
  throw ConfigError("unknown strategy");
}

Statistic summarize(std::span<const double> values) {
  Statistic stat;
  if (values.empty()) return stat;
  stat.mean = std::accumulate(values.begin(), values.end(), 0.0) /
              static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - stat.mean) * (v - stat.mean);
    stat.stdev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return stat;
}

namespace {
Statistic collect(const std::vector<Metrics>& runs,
                  double (Metrics::*fn)() const) {
  std::vector<double> values;
  values.reserve(runs.size());
  for (const auto& m : runs) values.push_back((m.*fn)());
  return summarize(values);
}
}  // namespace

Statistic ExperimentResult::system_loss() const {
  return collect(runs, &Metrics::system_loss);
}
Statistic ExperimentResult::overall_loss() const {
  return collect(runs, &Metrics::overall_loss);
}
Statistic ExperimentResult::absorbed_fraction() const {
  return collect(runs, &Metrics::absorbed_fraction);
}
Statistic ExperimentResult::local_fraction() const {
  return collect(runs, &Metrics::local_fraction);
}
Statistic ExperimentResult::interrupted_fraction() const {
  return collect(runs, &Metrics::interrupted_fraction);
}

std::vector<double> ExperimentResult::mean_content_loss() const {
  if (runs.empty()) return {};
  std::vector<double> mean(runs.front().content_count(), 0.0);
  for (const auto& m : runs) {
    for (std::size_t c = 0; c < mean.size(); ++c) {
      mean[c] += m.content_loss(static_cast<ContentId>(c));
    }
  }
  for (double& v : mean) v /= static_cast<double>(runs.size());
  return mean;
}

std::vector<std::pair<std::string, Statistic>> ExperimentResult::statistics() const {
  return {{"system_loss", system_loss()},
          {"overall_loss", overall_loss()},
          {"absorbed_fraction", absorbed_fraction()},
          {"local_fraction", local_fraction()},
          {"interrupted_fraction", interrupted_fraction()}};
}

ExperimentResult run_experiment(const SystemConfig& config, Strategy strategy,
                                std::size_t repetitions, std::uint64_t base_seed,
                                std::size_t jobs) {
  if (repetitions == 0) throw ConfigError("repetitions must be >= 1");
  const SystemConfig cfg = configure_for(config, strategy);
  ExperimentResult result;
  result.strategy = strategy;
  result.runs.resize(repetitions);
  for (std::size_t r = 0; r < repetitions; ++r) {
    result.seeds.push_back(derive_seed(base_seed, r));
  }

  auto run_one = [&](std::size_t r) {
    std::uint64_t seed = result.seeds[r];
    Rng placement_rng(derive_seed(seed, 0));
    auto placement = make_placement(cfg, strategy, placement_rng);
    result.runs[r] = run_simulation(cfg, placement, derive_seed(seed, 1));
  };

  jobs = std::clamp<std::size_t>(jobs, 1, repetitions);
  if (jobs == 1) {
    for (std::size_t r = 0; r < repetitions; ++r) run_one(r);
    return result;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t r; (r = next++) < repetitions;) {
        try {
          run_one(r);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
  return result;
}

}  // namespace vodsim
