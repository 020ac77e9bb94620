#pragma once

// Exact feasibility of request vectors, plus the online state used by the
// simulator: slot assignments, load-balancing box selection, and the
// heuristic repacking of ongoing streams.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vodsim/core.hpp"

namespace vodsim {

/// Decides whether integers z_cb >= 0 exist with sum_b z_cb = n_c over the
/// holders of c and sum_c z_cb <= U per box, via max flow.
bool is_feasible_matching(const RequestVector& requests,
                          const Placement& placement, std::size_t uplink_slots);

struct HallResult {
  bool feasible = true;
  /// Content set violating the cut condition when infeasible.
  std::vector<ContentId> witness;
};

/// Subset form: for every S, sum_{c in S} n_c <= U * |boxes meeting S|.
/// Enumerates 2^C subsets, so C <= 20.
HallResult hall_check(const RequestVector& requests, const Placement& placement,
                      std::size_t uplink_slots);

inline bool is_feasible_hall(const RequestVector& requests,
                             const Placement& placement,
                             std::size_t uplink_slots) {
  return hall_check(requests, placement, uplink_slots).feasible;
}

// ---------------------------------------------------------------------------

struct SlotRef {
  BoxId box = 0;
  std::size_t slot = 0;
};

/// Live box-serving-request mapping.
///
/// Boxes holding content c are bucketed by their free slot count k = 0..U,
/// so the most idle holder is found in O(U). The state owns its placement
/// so cache updates keep both in step.
class AssignmentState {
 public:
  AssignmentState(Placement placement, std::size_t uplink_slots);

  const Placement& placement() const { return placement_; }
  std::size_t uplink_slots() const { return uplink_slots_; }
  std::size_t box_count() const { return placement_.box_count(); }
  std::size_t content_count() const { return placement_.content_count(); }

  std::size_t free_slots(BoxId box) const { return free_[box]; }
  std::size_t total_free_slots() const { return total_free_; }
  /// n_c: streams of c currently assigned to boxes.
  std::size_t in_service(ContentId c) const { return in_service_[c]; }
  /// D_c: distinct boxes holding c.
  std::size_t replica_count(ContentId c) const {
    return placement_.replica_count(c);
  }
  /// Holders of c with exactly k free slots.
  std::span<const BoxId> holders_with_free(ContentId c, std::size_t k) const {
    return buckets_[bucket_index(c, k)];
  }

  /// Request occupying a slot, if any.
  std::optional<RequestId> occupant(BoxId box, std::size_t slot) const;
  ContentId slot_content(BoxId box, std::size_t slot) const;
  bool is_active(RequestId request) const;
  SlotRef location(RequestId request) const;
  ContentId content_of(RequestId request) const;
  std::size_t active_count() const { return active_; }

  /// Puts a request on a free slot of a box holding its content.
  void assign(RequestId request, ContentId content, BoxId box);
  /// Ends a stream; returns its content.
  ContentId release(RequestId request);
  /// Replaces the stream on an occupied slot with `incoming`, returning the
  /// displaced request. Free-slot counts are unchanged.
  RequestId swap_in(SlotRef where, RequestId incoming, ContentId content);

  struct CacheChange {
    bool changed = false;
    ContentId evicted = 0;
    /// Streams of the evicted content that the box was serving; they have
    /// already been released.
    std::vector<RequestId> orphans;
  };
  /// Demand-driven push of `content` into `box` (uniform eviction).
  CacheChange update_cache(BoxId box, ContentId content, Rng& rng);

  /// Throws std::logic_error describing the first broken invariant.
  void check_invariants() const;
  std::string dump() const;

 private:
  static constexpr RequestId kEmpty = ~RequestId{0};

  std::size_t bucket_index(ContentId c, std::size_t k) const {
    return c * (uplink_slots_ + 1) + k;
  }
  void bucket_insert(BoxId box, std::size_t j);
  void bucket_erase(BoxId box, std::size_t j);
  void set_free(BoxId box, std::size_t value);
  void rebuild_box_contents(BoxId box);

  Placement placement_;
  std::size_t uplink_slots_;
  std::vector<std::size_t> free_;
  std::size_t total_free_ = 0;
  std::vector<std::size_t> in_service_;
  std::vector<RequestId> slots_;          // box * U + i
  std::vector<ContentId> slot_content_;   // meaningful when occupied
  // Distinct contents of each box and the box's position in each bucket.
  std::vector<std::vector<ContentId>> box_contents_;
  std::vector<std::vector<std::size_t>> bucket_pos_;
  std::vector<std::vector<BoxId>> buckets_;
  // Request id -> slot; ids are dense in practice, kNoSlot marks inactive.
  std::vector<std::size_t> where_;
  std::size_t active_ = 0;
};

/// Holder of c with the most free slots (k >= 1), ties broken uniformly.
std::optional<BoxId> select_box(const AssignmentState& state, ContentId content,
                                Rng& rng);

struct RepackOutcome {
  bool accepted = false;
  BoxId box = 0;             // where the new request landed when accepted
  std::size_t swaps = 0;     // swaps performed (undone if not accepted)
};

/// Repacking heuristic for a request that found no free holder. Each round
/// displaces a stream of the content with the highest utilization n/D
/// (strictly above the orphan's, not yet orphaned) from a fully busy holder
/// of the orphan; the displaced stream becomes the new orphan and is placed
/// on a free holder if one exists. Gives up once `t_r_max` swaps are spent
/// or no candidate remains; a rejected request leaves the state untouched.
RepackOutcome repack(AssignmentState& state, RequestId request,
                     ContentId content, std::size_t t_r_max, Rng& rng);

struct Orphan {
  RequestId request = 0;
  ContentId content = 0;
  double remaining_service = 0.0;
};

enum class RescueResult { Repacked, Lost };

struct RescueOutcome {
  RequestId request = 0;
  RescueResult result = RescueResult::Lost;
};

/// Re-homes streams cut off by a cache eviction, shortest remaining
/// service first. Each orphan first tries a free holder, then repacking;
/// after the first failure every remaining orphan is lost. With
/// t_r_max == 0 no rescue is attempted.
std::vector<RescueOutcome> orphan_rescue(AssignmentState& state,
                                         std::vector<Orphan> orphans,
                                         std::size_t t_r_max, Rng& rng);

}  // namespace vodsim
