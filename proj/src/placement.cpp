#include "vodsim/placement.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "vodsim/analysis.hpp"

namespace vodsim {
namespace {

const FixedCatalogue& require_fixed(const SystemConfig& config,
                                    const char* who) {
  const auto* fixed = std::get_if<FixedCatalogue>(&config.catalogue);
  if (!fixed) {
    throw ConfigError(std::string(who) + " requires a fixed catalogue");
  }
  return *fixed;
}

std::string cap_message(const char* who, std::size_t cap, BoxId box) {
  std::ostringstream msg;
  msg << who << ": no duplicate-free draw for box " << box << " after " << cap
      << " attempts; popularity is too skewed for this sampler";
  if (std::string(who) == "sample_proportional_to_product") {
    msg << " (try the Bernoulli sampler with solve_beta)";
  }
  return msg.str();
}

}  // namespace

std::optional<std::size_t> CacheStateDistribution::index_of(
    std::span<const ContentId> subset) const {
  std::vector<ContentId> key(subset.begin(), subset.end());
  auto it = std::lower_bound(support.begin(), support.end(), key);
  if (it == support.end() || *it != key) return std::nullopt;
  return static_cast<std::size_t>(it - support.begin());
}

Placement uniform_placement_from_permutation(
    std::span<const ContentId> permutation, std::size_t box_count,
    std::size_t storage_per_box) {
  const std::size_t content_count = permutation.size();
  if (storage_per_box > content_count) {
    throw ConfigError("uniform placement needs C >= M");
  }
  std::vector<std::vector<ContentId>> caches(box_count);
  for (std::size_t b = 1; b <= box_count; ++b) {
    auto& cache = caches[b - 1];
    cache.reserve(storage_per_box);
    // Entry j of the cyclic sequence is c_{j mod C}, with c_0 read as c_C.
    for (std::size_t j = b * storage_per_box + 1;
         j <= (b + 1) * storage_per_box; ++j) {
      cache.push_back(permutation[(j - 1) % content_count]);
    }
    std::sort(cache.begin(), cache.end());
  }
  return Placement(content_count, std::move(caches));
}

Placement uniform_placement(const SystemConfig& config, Rng& rng) {
  const auto& fixed = require_fixed(config, "uniform_placement");
  if (config.storage_per_box > fixed.content_count()) {
    throw ConfigError("uniform placement needs C >= M");
  }
  std::vector<ContentId> perm(fixed.content_count());
  std::iota(perm.begin(), perm.end(), ContentId{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  return uniform_placement_from_permutation(perm, config.box_count,
                                            config.storage_per_box);
}

Placement sample_proportional_to_product(const SystemConfig& config, Rng& rng,
                                         std::size_t resample_cap) {
  const auto& fixed = require_fixed(config, "sample_proportional_to_product");
  const std::size_t m = config.storage_per_box;
  if (m > fixed.content_count()) throw ConfigError("sampling needs C >= M");
  std::discrete_distribution<ContentId> draw(fixed.popularity.begin(),
                                             fixed.popularity.end());
  std::vector<std::vector<ContentId>> caches(config.box_count);
  std::vector<ContentId> cache;
  for (BoxId b = 0; b < config.box_count; ++b) {
    std::size_t attempts = 0;
    while (true) {
      if (attempts++ == resample_cap) {
        throw SamplingError(cap_message("sample_proportional_to_product",
                                        resample_cap, b));
      }
      cache.clear();
      bool duplicate = false;
      for (std::size_t i = 0; i < m && !duplicate; ++i) {
        ContentId c = draw(rng);
        duplicate = std::find(cache.begin(), cache.end(), c) != cache.end();
        cache.push_back(c);
      }
      if (!duplicate) break;
    }
    std::sort(cache.begin(), cache.end());
    caches[b] = cache;
  }
  return Placement(fixed.content_count(), std::move(caches));
}

Placement bernoulli_sample_placement(const SystemConfig& config, double beta,
                                     Rng& rng, std::size_t resample_cap) {
  const auto& fixed = require_fixed(config, "bernoulli_sample_placement");
  if (!(beta > 0.0)) throw ConfigError("bernoulli sampling needs beta > 0");
  const std::size_t m = config.storage_per_box;
  const std::size_t content_count = fixed.content_count();
  if (m > content_count) throw ConfigError("sampling needs C >= M");
  std::vector<double> inclusion(content_count);
  for (std::size_t c = 0; c < content_count; ++c) {
    double w = beta * fixed.popularity[c];
    inclusion[c] = w / (1.0 + w);
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<ContentId>> caches(config.box_count);
  std::vector<ContentId> cache;
  for (BoxId b = 0; b < config.box_count; ++b) {
    std::size_t attempts = 0;
    while (true) {
      if (attempts++ == resample_cap) {
        throw SamplingError(
            cap_message("bernoulli_sample_placement", resample_cap, b));
      }
      cache.clear();
      // All C variables are drawn even past M so each attempt consumes the
      // same amount of randomness.
      for (ContentId c = 0; c < content_count; ++c) {
        if (unit(rng) < inclusion[c]) cache.push_back(c);
      }
      if (cache.size() == m) break;
    }
    caches[b] = cache;
  }
  return Placement(content_count, std::move(caches));
}

double solve_beta(std::span<const double> popularity, std::size_t storage) {
  const std::size_t content_count = popularity.size();
  if (storage < 1 || storage >= content_count) {
    throw ConfigError("solve_beta needs 1 <= M < C");
  }
  const double m = static_cast<double>(storage);
  auto f = [&](double beta) {
    double sum = 0.0;
    for (double p : popularity) sum += p / (1.0 + beta * p);
    return m / beta - sum;
  };
  double lo = 1.0;
  while (f(lo) <= 0.0) lo *= 0.5;
  double hi = 1.0;
  while (f(hi) >= 0.0) hi *= 2.0;
  std::uintmax_t iterations = 200;
  auto [a, b] = boost::math::tools::toms748_solve(
      f, lo, hi, boost::math::tools::eps_tolerance<double>(52), iterations);
  double root = 0.5 * (a + b);
  // Polish with Newton; f'(beta) = -M/beta^2 + sum p^2/(1+beta p)^2.
  for (int i = 0; i < 3; ++i) {
    double deriv = -m / (root * root);
    for (double p : popularity) {
      double d = 1.0 + root * p;
      deriv += p * p / (d * d);
    }
    double next = root - f(root) / deriv;
    if (!(next > 0.0) || std::abs(f(next)) >= std::abs(f(root))) break;
    root = next;
  }
  return root;
}

CacheUpdateResult cache_update_step(Placement& placement, BoxId box,
                                    ContentId content, Rng& rng) {
  CacheUpdateResult result;
  if (placement.holds(box, content)) return result;
  const auto cache = placement.cache(box);
  std::uniform_int_distribution<std::size_t> pick(0, cache.size() - 1);
  result.slot = pick(rng);
  result.evicted = cache[result.slot];
  result.changed = true;
  placement.replace(box, result.slot, content);
  return result;
}

CacheStateDistribution product_form_distribution(
    std::span<const double> popularity, std::size_t storage) {
  const std::size_t content_count = popularity.size();
  if (content_count > 20) {
    throw CapacityError("product_form_distribution enumerates subsets; C <= 20");
  }
  if (storage < 1 || storage > content_count) {
    throw ConfigError("product_form_distribution needs 1 <= M <= C");
  }
  CacheStateDistribution dist;
  std::vector<ContentId> subset(storage);
  std::iota(subset.begin(), subset.end(), ContentId{0});
  while (true) {
    double weight = 1.0;
    for (ContentId c : subset) weight *= popularity[c];
    dist.support.push_back(subset);
    dist.probability.push_back(weight);
    // Advance to the next combination in lexicographic order.
    std::size_t i = storage;
    while (i > 0 && subset[i - 1] == content_count - storage + i - 1) --i;
    if (i == 0) break;
    ++subset[i - 1];
    for (std::size_t k = i; k < storage; ++k) subset[k] = subset[k - 1] + 1;
  }
  double total = 0.0;
  for (double w : dist.probability) total += w;
  for (double& w : dist.probability) w /= total;
  return dist;
}

std::vector<std::size_t> warm_box_counts(const WaterFilling& wf,
                                         std::size_t box_count) {
  auto warm = wf.warm_contents();
  double warm_mass = 0.0;
  for (ContentId c : warm) warm_mass += wf.cache_fraction[c];
  // When the catalogue cannot fill the last slot the leftover boxes are
  // spread over the warm band in proportion to its fractions.
  double scale = warm_mass < 1.0 ? 1.0 / warm_mass : 1.0;

  std::vector<std::size_t> counts(warm.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < warm.size(); ++i) {
    double target = wf.cache_fraction[warm[i]] * scale *
                     static_cast<double>(box_count);
    // Guard against 74.99999999 when the exact target is integral.
    double floored = std::floor(target + 1e-9);
    counts[i] = static_cast<std::size_t>(floored);
    assigned += counts[i];
    remainders.emplace_back(target - floored, i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < box_count; ++k, ++assigned) {
    ++counts[remainders[k % remainders.size()].second];
  }
  return counts;
}

Placement hot_warm_cold_placement(const WaterFilling& wf,
                                  const SystemConfig& config, Rng& rng) {
  if (config.network_mode != NetworkMode::PP2PN) {
    throw ConfigError("hot-warm-cold placement applies to PP2PN only");
  }
  const std::size_t content_count = config.content_count();
  if (wf.cache_fraction.size() != content_count) {
    throw ConfigError("water-filling solution does not match the catalogue");
  }
  const std::size_t hot = wf.hot_count();
  if (hot + 1 != config.storage_per_box) {
    throw ConfigError("water-filling solution was computed for another M");
  }
  auto warm = wf.warm_contents();
  auto counts = warm_box_counts(wf, config.box_count);

  std::vector<ContentId> labels;
  labels.reserve(config.box_count);
  for (std::size_t i = 0; i < warm.size(); ++i) {
    labels.insert(labels.end(), counts[i], warm[i]);
  }
  std::shuffle(labels.begin(), labels.end(), rng);

  std::vector<std::vector<ContentId>> caches(config.box_count);
  for (BoxId b = 0; b < config.box_count; ++b) {
    auto& cache = caches[b];
    cache.reserve(config.storage_per_box);
    for (ContentId c = 0; c < hot; ++c) cache.push_back(c);
    cache.push_back(labels[b]);
  }
  return Placement(content_count, std::move(caches));
}

Placement modified_p2p_placement(const SystemConfig& config, Rng& rng) {
  const auto* classes = std::get_if<ClassCatalogue>(&config.catalogue);
  if (!classes) {
    throw ConfigError("modified proportional placement needs a class catalogue");
  }
  config.validate();
  auto sizes = classes->realized_sizes(config.box_count);
  std::vector<double> class_mass(sizes.size());
  std::vector<ContentId> offset(sizes.size());
  ContentId next = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    class_mass[i] = static_cast<double>(sizes[i]) * classes->classes[i].rate;
    offset[i] = next;
    next += static_cast<ContentId>(sizes[i]);
  }
  // Class first, then a uniform member: content probability nu_i / sum nu.
  std::discrete_distribution<std::size_t> pick_class(class_mass.begin(),
                                                     class_mass.end());
  std::vector<std::vector<ContentId>> caches(config.box_count);
  for (auto& cache : caches) {
    cache.resize(config.storage_per_box);
    for (auto& slot : cache) {
      std::size_t i = pick_class(rng);
      std::uniform_int_distribution<ContentId> member(
          0, static_cast<ContentId>(sizes[i] - 1));
      slot = offset[i] + member(rng);
    }
    std::sort(cache.begin(), cache.end());
  }
  return Placement(next, std::move(caches));
}

}  // namespace vodsim
