#include "vodsim/core.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace vodsim {

FixedCatalogue FixedCatalogue::zipf(std::size_t content_count, double alpha,
                                    double shift) {
  FixedCatalogue cat;
  cat.popularity = zipf_popularity(content_count, alpha, shift);
  cat.zipf_alpha = alpha;
  cat.zipf_shift = shift;
  return cat;
}

double ClassCatalogue::total_scale() const {
  double total = 0.0;
  for (const auto& cls : classes) total += cls.scale;
  return total;
}

double ClassCatalogue::min_rate() const {
  double low = classes.empty() ? 0.0 : classes.front().rate;
  for (const auto& cls : classes) low = std::min(low, cls.rate);
  return low;
}

std::vector<std::size_t> ClassCatalogue::realized_sizes(
    std::size_t box_count) const {
  std::vector<std::size_t> sizes;
  sizes.reserve(classes.size());
  for (const auto& cls : classes) {
    // Absorb representation error so that e.g. 0.2 * 5000 stays 1000.
    double exact = cls.scale * static_cast<double>(box_count);
    sizes.push_back(static_cast<std::size_t>(std::ceil(exact - 1e-9)));
  }
  return sizes;
}

std::vector<double> zipf_popularity(std::size_t content_count, double alpha,
                                    double shift) {
  if (content_count == 0) throw ConfigError("zipf: content count must be >= 1");
  if (!(alpha > 0.0)) throw ConfigError("zipf: exponent must be positive");
  if (!(shift >= 0.0)) throw ConfigError("zipf: shift must be nonnegative");
  std::vector<double> weights(content_count);
  for (std::size_t c = 0; c < content_count; ++c) {
    weights[c] = std::pow(shift + static_cast<double>(c + 1), -alpha);
  }
  return renormalize(weights);
}

std::vector<double> renormalize(std::span<const double> rates) {
  // Summing smallest-first keeps the total accurate for long zipf tails.
  std::vector<double> sorted(rates.begin(), rates.end());
  std::sort(sorted.begin(), sorted.end());
  double total = std::accumulate(sorted.begin(), sorted.end(), 0.0);
  if (!(total > 0.0)) throw ConfigError("renormalize: rates must sum to > 0");
  std::vector<double> out(rates.begin(), rates.end());
  for (double& r : out) r /= total;
  return out;
}

// ---------------------------------------------------------------------------

void SystemConfig::validate() const {
  if (box_count < 1) throw ConfigError("box_count must be >= 1");
  if (storage_per_box < 1) throw ConfigError("storage_per_box must be >= 1");
  if (uplink_slots < 1) throw ConfigError("uplink_slots must be >= 1");
  if (!(load > 0.0) || !std::isfinite(load)) {
    throw ConfigError("load must be positive");
  }
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) {
    throw ConfigError("warmup_fraction must lie in [0, 1)");
  }
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");

  if (const auto* fixed = std::get_if<FixedCatalogue>(&catalogue)) {
    if (fixed->popularity.empty()) {
      throw ConfigError("catalogue must contain at least one content");
    }
    double total = 0.0;
    for (double p : fixed->popularity) {
      if (!(p > 0.0)) throw ConfigError("popularity entries must be positive");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw ConfigError("popularity must sum to 1 (within 1e-12)");
    }
    if (storage_per_box > fixed->content_count()) {
      throw ConfigError("storage_per_box exceeds the catalogue size");
    }
  } else {
    const auto& classes = std::get<ClassCatalogue>(catalogue);
    if (classes.classes.empty()) throw ConfigError("no content classes given");
    double weighted = 0.0;
    for (const auto& cls : classes.classes) {
      if (!(cls.scale > 0.0) || !(cls.rate > 0.0)) {
        throw ConfigError("class scale and rate must be positive");
      }
      weighted += cls.scale * cls.rate;
    }
    double implied = weighted / static_cast<double>(uplink_slots);
    if (std::abs(implied - load) > 1e-9 * std::max(1.0, load)) {
      std::ostringstream msg;
      msg << "class rates imply load " << implied << " but load is " << load;
      throw ConfigError(msg.str());
    }
  }

  if (cache_update) {
    double eps = cache_update_epsilon();
    if (!(eps > 0.0) || eps * static_cast<double>(box_count) > 1.0 + 1e-12) {
      throw ConfigError("cache update epsilon must satisfy 0 < epsilon*B <= 1");
    }
  }
  if (const auto* counter = std::get_if<CounterPolicy>(&acceptance_policy)) {
    if (counter->boxes_per_request && *counter->boxes_per_request == 0) {
      throw ConfigError("counter policy needs at least one box per request");
    }
    if (!(counter->eligibility_exponent >= 0.0)) {
      throw ConfigError("eligibility exponent must be nonnegative");
    }
    if (cache_update) {
      throw ConfigError("cache updates need the repacking acceptance policy");
    }
  }
}

std::size_t SystemConfig::content_count() const {
  if (const auto* fixed = std::get_if<FixedCatalogue>(&catalogue)) {
    return fixed->content_count();
  }
  auto sizes = std::get<ClassCatalogue>(catalogue).realized_sizes(box_count);
  return std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
}

std::vector<double> SystemConfig::normalized_popularity() const {
  if (const auto* fixed = std::get_if<FixedCatalogue>(&catalogue)) {
    return fixed->popularity;
  }
  return renormalize(per_content_rates(*this));
}

std::size_t SystemConfig::repacking_budget() const {
  const auto* policy = std::get_if<RepackingPolicy>(&acceptance_policy);
  if (!policy) throw ConfigError("acceptance policy is not repacking");
  return policy->t_r_max.value_or(content_count());
}

double SystemConfig::cache_update_epsilon() const {
  if (!cache_update) return 0.0;
  return cache_update->epsilon.value_or(1.0 / static_cast<double>(box_count));
}

std::size_t SystemConfig::counter_boxes_per_request() const {
  const auto* policy = std::get_if<CounterPolicy>(&acceptance_policy);
  if (policy && policy->boxes_per_request) return *policy->boxes_per_request;
  auto root = static_cast<std::size_t>(
      std::floor(std::pow(static_cast<double>(storage_per_box), 0.25) + 1e-12));
  return std::max<std::size_t>(1, root);
}

std::size_t SystemConfig::eligibility_threshold() const {
  const auto* policy = std::get_if<CounterPolicy>(&acceptance_policy);
  double exponent = policy ? policy->eligibility_exponent : 0.75;
  return static_cast<std::size_t>(std::ceil(
      std::pow(static_cast<double>(storage_per_box), exponent) - 1e-12));
}

std::vector<double> per_content_rates(const SystemConfig& config) {
  config.validate();
  if (const auto* fixed = std::get_if<FixedCatalogue>(&config.catalogue)) {
    double scale = config.load * static_cast<double>(config.box_count) *
                   static_cast<double>(config.uplink_slots);
    std::vector<double> rates(fixed->popularity);
    for (double& r : rates) r *= scale;
    return rates;
  }
  const auto& classes = std::get<ClassCatalogue>(config.catalogue);
  auto sizes = classes.realized_sizes(config.box_count);
  std::vector<double> rates;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    rates.insert(rates.end(), sizes[i], classes.classes[i].rate);
  }
  return rates;
}

// ---------------------------------------------------------------------------

Placement::Placement(std::size_t content_count,
                     std::vector<std::vector<ContentId>> caches)
    : caches_(std::move(caches)), holders_(content_count) {
  for (const auto& cache : caches_) {
    for (ContentId c : cache) {
      if (c >= content_count) {
        throw ConfigError("placement references content " + std::to_string(c) +
                          " outside the catalogue");
      }
    }
  }
  rebuild_holders();
}

void Placement::rebuild_holders() {
  for (auto& h : holders_) h.clear();
  for (BoxId b = 0; b < caches_.size(); ++b) {
    for (ContentId c : caches_[b]) {
      auto& h = holders_[c];
      if (h.empty() || h.back() != b) h.push_back(b);
    }
  }
}

bool Placement::holds(BoxId box, ContentId content) const {
  const auto& cache = caches_[box];
  return std::find(cache.begin(), cache.end(), content) != cache.end();
}

bool Placement::distinct(BoxId box) const {
  std::vector<ContentId> sorted(caches_[box]);
  std::sort(sorted.begin(), sorted.end());
  return std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
}

void Placement::replace(BoxId box, std::size_t slot, ContentId content) {
  auto& cache = caches_[box];
  ContentId old = cache[slot];
  if (old == content) return;
  cache[slot] = content;
  if (!holds(box, old)) {
    auto& h = holders_[old];
    h.erase(std::lower_bound(h.begin(), h.end(), box));
  }
  auto& h = holders_[content];
  auto it = std::lower_bound(h.begin(), h.end(), box);
  if (it == h.end() || *it != box) h.insert(it, box);
}

void Placement::write_text(std::ostream& out) const {
  for (const auto& cache : caches_) {
    for (std::size_t i = 0; i < cache.size(); ++i) {
      if (i) out << ' ';
      out << cache[i];
    }
    out << '\n';
  }
}

Placement Placement::read_text(std::istream& in, std::size_t content_count) {
  std::vector<std::vector<ContentId>> caches;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::vector<ContentId> cache;
    long long value = 0;
    while (fields >> value) {
      if (value < 0) {
        throw ConfigError("placement line " + std::to_string(lineno) +
                          ": negative content id");
      }
      cache.push_back(static_cast<ContentId>(value));
    }
    if (!fields.eof()) {
      throw ConfigError("placement line " + std::to_string(lineno) +
                        ": expected integers");
    }
    caches.push_back(std::move(cache));
  }
  return Placement(content_count, std::move(caches));
}

std::size_t RequestVector::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

}  // namespace vodsim
