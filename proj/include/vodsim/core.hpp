#pragma once

// Domain types shared by every part of the simulator: scenario
// configuration, catalogue models, and the static cache placement.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace vodsim {

using ContentId = std::uint32_t;
using BoxId = std::uint32_t;
using RequestId = std::uint64_t;
using Rng = std::mt19937_64;

/// Raised when a scenario or input violates a documented precondition.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an exact (enumerating) routine is asked for an instance
/// beyond its combinatorial guard rail.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Raised when a rejection sampler exhausts its retry budget.
class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Catalogue models

/// A fixed catalogue of C contents with normalized popularity.
struct FixedCatalogue {
  std::vector<double> popularity;
  /// Zipf exponent the popularity was generated from, kept for reporting.
  std::optional<double> zipf_alpha;
  double zipf_shift = 0.0;

  static FixedCatalogue zipf(std::size_t content_count, double alpha,
                             double shift = 0.0);
  std::size_t content_count() const { return popularity.size(); }
};

struct ContentClass {
  double scale;  // class holds ceil(scale * B) contents
  double rate;   // per-content arrival rate
};

/// Large-catalogue model: a few popularity classes whose sizes grow with B.
struct ClassCatalogue {
  std::vector<ContentClass> classes;

  double total_scale() const;
  double min_rate() const;
  /// Number of contents realized per class for a population of B boxes.
  std::vector<std::size_t> realized_sizes(std::size_t box_count) const;
};

using Catalogue = std::variant<FixedCatalogue, ClassCatalogue>;

// ---------------------------------------------------------------------------
// Policies

enum class NetworkMode { DSN, PP2PN };

struct RepackingPolicy {
  /// Maximum number of repacking swaps per request; nullopt is unlimited
  /// (resolved to the catalogue size, the algorithm's natural bound).
  std::optional<std::size_t> t_r_max;
};

struct CounterPolicy {
  /// Number of associated boxes per request; nullopt selects
  /// max(1, floor(M^(1/4))).
  std::optional<std::size_t> boxes_per_request;
  /// Contents replicated fewer than ceil(M^exponent) times are never served.
  double eligibility_exponent = 0.75;
};

using AcceptancePolicy = std::variant<RepackingPolicy, CounterPolicy>;

enum class ServiceModel { Exponential, Deterministic };

enum class InitialPlacement { Uniform, Sampling };

struct CacheUpdatePolicy {
  /// Per-box push probability; nullopt selects 1/B.
  std::optional<double> epsilon;
  /// Placement the demand-driven dynamic starts from.
  InitialPlacement initial = InitialPlacement::Uniform;
};

// ---------------------------------------------------------------------------

struct SystemConfig {
  std::size_t box_count = 4000;
  std::size_t storage_per_box = 10;
  std::size_t uplink_slots = 4;
  double load = 1.0;
  Catalogue catalogue = FixedCatalogue::zipf(500, 0.8);
  NetworkMode network_mode = NetworkMode::DSN;
  AcceptancePolicy acceptance_policy = RepackingPolicy{};
  ServiceModel service_time_model = ServiceModel::Exponential;
  double warmup_fraction = 0.2;
  std::size_t repetitions = 10;
  double horizon = 10.0;
  std::optional<CacheUpdatePolicy> cache_update;
  std::uint64_t rng_seed = 1;

  /// Throws ConfigError on the first violated invariant.
  void validate() const;

  std::size_t content_count() const;
  /// nu-hat: per-content arrival rate divided by the total.
  std::vector<double> normalized_popularity() const;
  /// Resolved repacking budget; throws if the policy is counter-based.
  std::size_t repacking_budget() const;
  double cache_update_epsilon() const;
  std::size_t counter_boxes_per_request() const;
  std::size_t eligibility_threshold() const;

  bool uses_class_catalogue() const {
    return std::holds_alternative<ClassCatalogue>(catalogue);
  }
};

/// Normalized zipf-like popularity: (c0+c)^-alpha for c = 1..C.
std::vector<double> zipf_popularity(std::size_t content_count, double alpha,
                                    double shift = 0.0);

/// Poisson arrival rate of every content (fixed: nu-hat * rho * B * U;
/// classes: the class rate for each member).
std::vector<double> per_content_rates(const SystemConfig& config);

/// Divides by the sum; the inverse of per_content_rates on a fixed catalogue.
std::vector<double> renormalize(std::span<const double> rates);

// ---------------------------------------------------------------------------

/// Per-box cache contents with the derived content -> holder index.
///
/// Holders are distinct boxes sorted ascending; replica_count(c) is the
/// number of distinct boxes caching c. Caches may hold a content twice only
/// under the modified proportional placement.
class Placement {
 public:
  Placement() = default;
  Placement(std::size_t content_count,
            std::vector<std::vector<ContentId>> caches);

  std::size_t box_count() const { return caches_.size(); }
  std::size_t content_count() const { return holders_.size(); }

  std::span<const ContentId> cache(BoxId box) const { return caches_[box]; }
  std::span<const BoxId> holders(ContentId content) const {
    return holders_[content];
  }
  std::size_t replica_count(ContentId content) const {
    return holders_[content].size();
  }
  bool holds(BoxId box, ContentId content) const;
  /// True when the box caches no content twice.
  bool distinct(BoxId box) const;

  /// Overwrites one cache slot, keeping the holder index consistent.
  void replace(BoxId box, std::size_t slot, ContentId content);

  /// One line per box, space-separated content identifiers.
  void write_text(std::ostream& out) const;
  static Placement read_text(std::istream& in, std::size_t content_count);

  friend bool operator==(const Placement&, const Placement&) = default;

 private:
  void rebuild_holders();

  std::vector<std::vector<ContentId>> caches_;
  std::vector<std::vector<BoxId>> holders_;
};

/// Concurrent request counts per content.
struct RequestVector {
  std::vector<std::size_t> counts;

  std::size_t total() const;
};

}  // namespace vodsim
