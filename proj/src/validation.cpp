#include "vodsim/validation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "vodsim/analysis.hpp"
#include "vodsim/engine.hpp"
#include "vodsim/feasibility.hpp"
#include "vodsim/oracle.hpp"
#include "vodsim/placement.hpp"

namespace vodsim {

namespace {

std::vector<std::vector<ContentId>> subsets_of_size(std::size_t n, std::size_t k) {
  std::vector<std::vector<ContentId>> out;
  std::vector<ContentId> cur;
  auto rec = [&](auto&& self, ContentId start) -> void {
    if (cur.size() == k) {
      out.push_back(cur);
      return;
    }
    for (ContentId c = start; c < n; ++c) {
      cur.push_back(c);
      self(self, c + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

// Advances a mixed-radix counter; false once it wraps around.
bool next_vector(std::vector<std::size_t>& v, std::size_t limit) {
  for (auto& d : v) {
    if (d < limit) {
      ++d;
      return true;
    }
    d = 0;
  }
  return false;
}

void compare(const RequestVector& n, const Placement& p, std::size_t u,
             HallSweepStats& stats) {
  bool flow = is_feasible_matching(n, p, u);
  bool hall = is_feasible_hall(n, p, u);
  ++stats.instances;
  if (flow) ++stats.feasible;
  if (flow != hall) ++stats.mismatches;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

HallSweepStats hall_exhaustive_sweep(std::size_t max_c, std::size_t max_b,
                                     std::size_t max_u) {
  HallSweepStats stats;
  for (std::size_t c = 1; c <= max_c; ++c) {
    for (std::size_t m = 1; m <= c; ++m) {
      auto sets = subsets_of_size(c, m);
      for (std::size_t b = 1; b <= max_b; ++b) {
        // Non-decreasing index tuples enumerate box multisets.
        std::vector<std::size_t> pick(b, 0);
        while (true) {
          std::vector<std::vector<ContentId>> caches;
          for (auto i : pick) caches.push_back(sets[i]);
          Placement placement(c, caches);
          for (std::size_t u = 1; u <= max_u; ++u) {
            RequestVector n{std::vector<std::size_t>(c, 0)};
            do {
              compare(n, placement, u, stats);
            } while (next_vector(n.counts, b * u));
          }
          std::size_t k = b;
          while (k > 0 && pick[k - 1] == sets.size() - 1) --k;
          if (k == 0) break;
          ++pick[k - 1];
          for (std::size_t j = k; j < b; ++j) pick[j] = pick[k - 1];
        }
      }
    }
  }
  return stats;
}

HallSweepStats hall_random_sweep(std::size_t count, std::size_t max_c,
                                 std::uint64_t seed) {
  HallSweepStats stats;
  Rng rng(seed);
  auto uniform = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  for (std::size_t t = 0; t < count; ++t) {
    std::size_t c = uniform(1, max_c);
    std::size_t m = uniform(1, c);
    std::size_t b = uniform(1, 8);
    std::size_t u = uniform(1, 3);
    std::vector<ContentId> all(c);
    std::iota(all.begin(), all.end(), 0);
    std::vector<std::vector<ContentId>> caches;
    for (std::size_t box = 0; box < b; ++box) {
      std::shuffle(all.begin(), all.end(), rng);
      std::vector<ContentId> cache(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(m));
      std::sort(cache.begin(), cache.end());
      caches.push_back(std::move(cache));
    }
    Placement placement(c, caches);
    RequestVector n{std::vector<std::size_t>(c, 0)};
    for (ContentId k = 0; k < c; ++k) {
      n.counts[k] = uniform(0, placement.replica_count(k) * u);
    }
    compare(n, placement, u, stats);
  }
  return stats;
}

CtmcComparison ctmc_comparison(const SystemConfig& config, const Placement& placement,
                               std::size_t seeds, std::uint64_t base_seed) {
  CtmcComparison out;
  auto blocking = exact_ctmc_loss(config, placement);
  auto rates = per_content_rates(config);
  double total = std::accumulate(rates.begin(), rates.end(), 0.0);
  for (std::size_t c = 0; c < rates.size(); ++c) out.exact += rates[c] * blocking[c] / total;

  std::vector<double> losses;
  for (std::size_t s = 0; s < seeds; ++s) {
    losses.push_back(
        run_simulation(config, placement, derive_seed(base_seed, s)).overall_loss());
  }
  auto stat = summarize(losses);
  out.mean = stat.mean;
  out.standard_error = stat.stdev / std::sqrt(static_cast<double>(seeds));
  out.seeds = seeds;
  return out;
}

SystemConfig single_content_erlang_config(double horizon) {
  SystemConfig cfg;
  cfg.box_count = 2;
  cfg.storage_per_box = 1;
  cfg.uplink_slots = 2;
  cfg.load = 0.75;  // nu = rho * B * U = 3
  cfg.catalogue = FixedCatalogue{{1.0}, std::nullopt, 0.0};
  cfg.horizon = horizon;
  cfg.warmup_fraction = 0.01;
  return cfg;
}

ProductFormComparison product_form_comparison(const std::vector<double>& popularity,
                                              std::size_t storage, std::size_t steps,
                                              std::uint64_t seed) {
  auto law = product_form_distribution(popularity, storage);
  Rng rng(seed);
  std::vector<ContentId> start(popularity.size());
  std::iota(start.begin(), start.end(), 0);
  std::shuffle(start.begin(), start.end(), rng);
  start.resize(storage);
  std::sort(start.begin(), start.end());
  Placement placement(popularity.size(), {start});

  std::discrete_distribution<ContentId> pick(popularity.begin(), popularity.end());
  std::vector<double> visits(law.support.size(), 0.0);
  std::vector<ContentId> state;
  for (std::size_t t = 0; t < steps; ++t) {
    cache_update_step(placement, 0, pick(rng), rng);
    auto cache = placement.cache(0);
    state.assign(cache.begin(), cache.end());
    std::sort(state.begin(), state.end());
    visits[*law.index_of(state)] += 1.0;
  }
  ProductFormComparison out;
  out.steps = steps;
  out.states = law.support.size();
  for (std::size_t i = 0; i < visits.size(); ++i) {
    out.total_variation +=
        0.5 * std::abs(visits[i] / static_cast<double>(steps) - law.probability[i]);
  }
  return out;
}

LpComparison lp_comparison(std::size_t count, std::size_t max_c, std::uint64_t seed) {
  LpComparison out;
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t t = 0; t < count; ++t) {
    std::size_t c = std::uniform_int_distribution<std::size_t>(1, max_c)(rng);
    std::size_t m = std::uniform_int_distribution<std::size_t>(1, c)(rng);
    std::vector<double> pop(c);
    for (auto& p : pop) p = 0.01 + unit(rng);
    std::sort(pop.rbegin(), pop.rend());
    pop = renormalize(pop);
    double load = std::exp(std::log(0.05) + unit(rng) * std::log(1000.0));

    auto wf = solve_water_filling(pop, load, m);
    auto lp = solve_opt2_lp(pop, load, m);
    out.max_gap = std::max(out.max_gap, std::abs(wf.objective - lp.objective));
    out.max_violation = std::max(out.max_violation, opt2_max_violation(wf, m));
    ++out.instances;
  }
  return out;
}

std::vector<CheckResult> run_validation_suite(const std::string& suite,
                                              std::uint64_t seed) {
  std::vector<CheckResult> out;
  const bool all = suite == "all";
  bool known = all;

  if (all || suite == "hall") {
    known = true;
    auto ex = hall_exhaustive_sweep();
    out.push_back({"hall-exhaustive", ex.mismatches == 0,
                   std::to_string(ex.mismatches) + " mismatches over " +
                       std::to_string(ex.instances) + " instances (" +
                       std::to_string(ex.feasible) + " feasible)"});
    auto rnd = hall_random_sweep(10000, 6, seed);
    out.push_back({"hall-random", rnd.mismatches == 0,
                   std::to_string(rnd.mismatches) + " mismatches over " +
                       std::to_string(rnd.instances) + " instances (" +
                       std::to_string(rnd.feasible) + " feasible)"});
  }
  if (all || suite == "ctmc") {
    known = true;
    auto cfg = single_content_erlang_config(2000.0);
    Placement both(1, {{0}, {0}});
    auto one = ctmc_comparison(cfg, both, 20, seed);
    out.push_back({"ctmc-erlang", one.within(3.0),
                   "simulated " + fmt(one.mean) + " +- " + fmt(one.standard_error) +
                       " vs exact " + fmt(one.exact)});

    SystemConfig pair = cfg;
    pair.box_count = 1;
    pair.storage_per_box = 2;
    pair.uplink_slots = 1;
    pair.load = 2.0;
    pair.catalogue = FixedCatalogue{{0.5, 0.5}, std::nullopt, 0.0};
    auto two = ctmc_comparison(pair, Placement(2, {{0, 1}}), 20, seed + 1);
    out.push_back({"ctmc-shared-box", two.within(3.0),
                   "simulated " + fmt(two.mean) + " +- " + fmt(two.standard_error) +
                       " vs exact " + fmt(two.exact)});
  }
  if (all || suite == "product-form") {
    known = true;
    auto pf = product_form_comparison(zipf_popularity(5, 0.8), 2, 1000000, seed);
    out.push_back({"product-form", pf.total_variation < 0.05,
                   "total variation " + fmt(pf.total_variation) + " over " +
                       std::to_string(pf.states) + " states, " +
                       std::to_string(pf.steps) + " updates"});
  }
  if (all || suite == "lp") {
    known = true;
    auto lp = lp_comparison(100, 12, seed);
    out.push_back({"lp-objective", lp.max_gap < 1e-9 && lp.max_violation <= 1e-12,
                   "max objective gap " + fmt(lp.max_gap) + ", max violation " +
                       fmt(lp.max_violation) + " over " +
                       std::to_string(lp.instances) + " instances"});
    std::vector<double> pop{0.4, 0.3, 0.2, 0.1};
    auto wf = solve_water_filling(pop, 10.0, 2);
    out.push_back({"lp-worked-example", std::abs(wf.absorbed_load - 7.75) < 1e-12,
                   "absorbed load " + fmt(wf.absorbed_load) + ", threshold " +
                       std::to_string(wf.threshold)});
  }
  if (!known) throw ConfigError("unknown validation suite '" + suite + "'");
  return out;
}

}  // namespace vodsim
