#pragma once

// Content placement strategies: static generators, the demand-driven
// cache-update step, and the exact product-form law used as a test oracle.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "vodsim/core.hpp"

namespace vodsim {

struct WaterFilling;

inline constexpr std::size_t kDefaultResampleCap = 1'000'000;

/// Law of a single box's cache set: every size-M subset with its mass.
struct CacheStateDistribution {
  std::vector<std::vector<ContentId>> support;  // sorted subsets, lexicographic
  std::vector<double> probability;

  /// Index of a sorted subset in `support`, if present.
  std::optional<std::size_t> index_of(std::span<const ContentId> subset) const;
};

/// Random permutation laid cyclically over boxes, M consecutive entries each.
Placement uniform_placement(const SystemConfig& config, Rng& rng);

/// Same layout as uniform_placement for a given permutation (1-based box b
/// takes entries b*M+1 .. (b+1)*M of the cyclic sequence).
Placement uniform_placement_from_permutation(
    std::span<const ContentId> permutation, std::size_t box_count,
    std::size_t storage_per_box);

/// Draws M i.i.d. contents from nu-hat per box, redrawing the whole box on a
/// duplicate. Per-box subset law is proportional to the product of
/// popularities.
Placement sample_proportional_to_product(
    const SystemConfig& config, Rng& rng,
    std::size_t resample_cap = kDefaultResampleCap);

/// Conditioned-Bernoulli sampler with the same subset law; p_c =
/// beta*nu_c/(1+beta*nu_c), a draw is kept only if exactly M succeed.
Placement bernoulli_sample_placement(
    const SystemConfig& config, double beta, Rng& rng,
    std::size_t resample_cap = kDefaultResampleCap);

/// Root of M/beta = sum nu_c/(1+beta*nu_c), which maximizes the acceptance
/// lower bound of the Bernoulli sampler. Requires 1 <= M < C.
double solve_beta(std::span<const double> popularity, std::size_t storage);

struct CacheUpdateResult {
  bool changed = false;
  std::size_t slot = 0;       // cache slot overwritten
  ContentId evicted = 0;      // previous content of that slot
};

/// Pushes `content` into `box`: no-op if already cached, otherwise a
/// uniformly chosen cached content is evicted.
CacheUpdateResult cache_update_step(Placement& placement, BoxId box,
                                    ContentId content, Rng& rng);

/// Exact product-form law m_j proportional to prod_{c in j} nu_c. C <= 20.
CacheStateDistribution product_form_distribution(
    std::span<const double> popularity, std::size_t storage);

/// Hot contents everywhere, one water-filled warm slot per box, cold
/// contents uncached. Warm box counts use largest-remainder rounding.
Placement hot_warm_cold_placement(const WaterFilling& water_filling,
                                  const SystemConfig& config, Rng& rng);

/// Warm-slot box counts for B boxes, aligned with
/// water_filling.warm_contents() (largest-remainder rounding of
/// cache_fraction * B over the warm band, summing to B).
std::vector<std::size_t> warm_box_counts(const WaterFilling& water_filling,
                                         std::size_t box_count);

/// Every one of the M*B slots filled independently; a class-i content is
/// chosen with probability nu_i / (rho*B*U). Duplicates are allowed.
Placement modified_p2p_placement(const SystemConfig& config, Rng& rng);

}  // namespace vodsim
