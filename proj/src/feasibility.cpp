#include "vodsim/feasibility.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace vodsim {
namespace {

constexpr std::size_t kNoSlot = std::numeric_limits<std::size_t>::max();

// Dinic's algorithm on a small residual graph.
class MaxFlow {
 public:
  explicit MaxFlow(std::size_t nodes) : adj_(nodes), level_(nodes), next_(nodes) {}

  void add_edge(std::size_t from, std::size_t to, std::uint64_t cap) {
    adj_[from].push_back({to, adj_[to].size(), cap});
    adj_[to].push_back({from, adj_[from].size() - 1, 0});
  }

  std::uint64_t run(std::size_t source, std::size_t sink) {
    std::uint64_t flow = 0;
    while (bfs(source, sink)) {
      std::fill(next_.begin(), next_.end(), 0);
      while (auto pushed = dfs(source, sink, std::numeric_limits<std::uint64_t>::max())) {
        flow += pushed;
      }
    }
    return flow;
  }

 private:
  struct Edge {
    std::size_t to;
    std::size_t rev;
    std::uint64_t cap;
  };

  bool bfs(std::size_t source, std::size_t sink) {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<std::size_t> queue;
    level_[source] = 0;
    queue.push(source);
    while (!queue.empty()) {
      auto v = queue.front();
      queue.pop();
      for (const auto& e : adj_[v]) {
        if (e.cap > 0 && level_[e.to] < 0) {
          level_[e.to] = level_[v] + 1;
          queue.push(e.to);
        }
      }
    }
    return level_[sink] >= 0;
  }

  std::uint64_t dfs(std::size_t v, std::size_t sink, std::uint64_t limit) {
    if (v == sink) return limit;
    for (auto& i = next_[v]; i < adj_[v].size(); ++i) {
      auto& e = adj_[v][i];
      if (e.cap == 0 || level_[e.to] != level_[v] + 1) continue;
      if (auto pushed = dfs(e.to, sink, std::min(limit, e.cap))) {
        e.cap -= pushed;
        adj_[e.to][e.rev].cap += pushed;
        return pushed;
      }
    }
    return 0;
  }

  std::vector<std::vector<Edge>> adj_;
  std::vector<int> level_;
  std::vector<std::size_t> next_;
};

void check_request_vector(const RequestVector& requests,
                          const Placement& placement) {
  if (requests.counts.size() > placement.content_count()) {
    throw ConfigError("request vector names contents outside the catalogue");
  }
}

}  // namespace

bool is_feasible_matching(const RequestVector& requests,
                          const Placement& placement,
                          std::size_t uplink_slots) {
  check_request_vector(requests, placement);
  const std::size_t contents = requests.counts.size();
  const std::size_t boxes = placement.box_count();
  const std::size_t source = 0;
  const std::size_t sink = 1 + contents + boxes;
  MaxFlow flow(sink + 1);
  std::uint64_t demand = 0;
  for (ContentId c = 0; c < contents; ++c) {
    auto n = requests.counts[c];
    if (n == 0) continue;
    demand += n;
    flow.add_edge(source, 1 + c, n);
    for (BoxId b : placement.holders(c)) flow.add_edge(1 + c, 1 + contents + b, n);
  }
  if (demand == 0) return true;
  if (demand > static_cast<std::uint64_t>(boxes) * uplink_slots) return false;
  for (BoxId b = 0; b < boxes; ++b) flow.add_edge(1 + contents + b, sink, uplink_slots);
  return flow.run(source, sink) == demand;
}

HallResult hall_check(const RequestVector& requests, const Placement& placement,
                      std::size_t uplink_slots) {
  check_request_vector(requests, placement);
  const std::size_t contents = placement.content_count();
  if (contents > 20) {
    throw CapacityError(
        "hall_check enumerates 2^C subsets (C <= 20); use is_feasible_matching");
  }
  std::vector<std::uint32_t> box_mask(placement.box_count(), 0);
  for (BoxId b = 0; b < placement.box_count(); ++b) {
    for (ContentId c : placement.cache(b)) box_mask[b] |= 1u << c;
  }
  auto count = [&](ContentId c) -> std::uint64_t {
    return c < requests.counts.size() ? requests.counts[c] : 0;
  };
  HallResult result;
  for (std::uint32_t subset = 1; subset < (1u << contents); ++subset) {
    std::uint64_t demand = 0;
    for (ContentId c = 0; c < contents; ++c) {
      if (subset & (1u << c)) demand += count(c);
    }
    if (demand == 0) continue;
    std::uint64_t touching = 0;
    for (auto mask : box_mask) touching += (mask & subset) != 0;
    if (demand > touching * uplink_slots) {
      result.feasible = false;
      for (ContentId c = 0; c < contents; ++c) {
        if (subset & (1u << c)) result.witness.push_back(c);
      }
      return result;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

AssignmentState::AssignmentState(Placement placement, std::size_t uplink_slots)
    : placement_(std::move(placement)),
      uplink_slots_(uplink_slots),
      free_(placement_.box_count(), uplink_slots),
      total_free_(placement_.box_count() * uplink_slots),
      in_service_(placement_.content_count(), 0),
      slots_(placement_.box_count() * uplink_slots, kEmpty),
      slot_content_(placement_.box_count() * uplink_slots, 0),
      box_contents_(placement_.box_count()),
      bucket_pos_(placement_.box_count()),
      buckets_(placement_.content_count() * (uplink_slots + 1)) {
  if (uplink_slots == 0) throw ConfigError("uplink_slots must be >= 1");
  for (BoxId b = 0; b < placement_.box_count(); ++b) {
    rebuild_box_contents(b);
    for (std::size_t j = 0; j < box_contents_[b].size(); ++j) bucket_insert(b, j);
  }
}

void AssignmentState::rebuild_box_contents(BoxId box) {
  auto cache = placement_.cache(box);
  auto& contents = box_contents_[box];
  contents.assign(cache.begin(), cache.end());
  std::sort(contents.begin(), contents.end());
  contents.erase(std::unique(contents.begin(), contents.end()), contents.end());
  bucket_pos_[box].assign(contents.size(), 0);
}

void AssignmentState::bucket_insert(BoxId box, std::size_t j) {
  auto& bucket = buckets_[bucket_index(box_contents_[box][j], free_[box])];
  bucket_pos_[box][j] = bucket.size();
  bucket.push_back(box);
}

void AssignmentState::bucket_erase(BoxId box, std::size_t j) {
  ContentId c = box_contents_[box][j];
  auto& bucket = buckets_[bucket_index(c, free_[box])];
  std::size_t pos = bucket_pos_[box][j];
  BoxId moved = bucket.back();
  bucket[pos] = moved;
  bucket.pop_back();
  if (moved != box) {
    const auto& mc = box_contents_[moved];
    auto idx = static_cast<std::size_t>(
        std::lower_bound(mc.begin(), mc.end(), c) - mc.begin());
    bucket_pos_[moved][idx] = pos;
  }
}

void AssignmentState::set_free(BoxId box, std::size_t value) {
  for (std::size_t j = 0; j < box_contents_[box].size(); ++j) bucket_erase(box, j);
  total_free_ = total_free_ - free_[box] + value;
  free_[box] = value;
  for (std::size_t j = 0; j < box_contents_[box].size(); ++j) bucket_insert(box, j);
}

std::optional<RequestId> AssignmentState::occupant(BoxId box,
                                                   std::size_t slot) const {
  auto id = slots_[box * uplink_slots_ + slot];
  if (id == kEmpty) return std::nullopt;
  return id;
}

ContentId AssignmentState::slot_content(BoxId box, std::size_t slot) const {
  return slot_content_[box * uplink_slots_ + slot];
}

bool AssignmentState::is_active(RequestId request) const {
  return request < where_.size() && where_[request] != kNoSlot;
}

SlotRef AssignmentState::location(RequestId request) const {
  if (!is_active(request)) throw std::out_of_range("request is not active");
  auto idx = where_[request];
  return {static_cast<BoxId>(idx / uplink_slots_), idx % uplink_slots_};
}

ContentId AssignmentState::content_of(RequestId request) const {
  if (!is_active(request)) throw std::out_of_range("request is not active");
  return slot_content_[where_[request]];
}

void AssignmentState::assign(RequestId request, ContentId content, BoxId box) {
  if (is_active(request)) throw std::logic_error("request already assigned");
  if (free_[box] == 0) throw std::logic_error("box has no free slot");
  if (!std::binary_search(box_contents_[box].begin(), box_contents_[box].end(),
                          content)) {
    throw std::logic_error("box does not hold the requested content");
  }
  std::size_t base = box * uplink_slots_;
  std::size_t slot = 0;
  while (slots_[base + slot] != kEmpty) ++slot;
  slots_[base + slot] = request;
  slot_content_[base + slot] = content;
  if (request >= where_.size()) {
    where_.resize(std::max<std::size_t>(request + 1, where_.size() * 2), kNoSlot);
  }
  where_[request] = base + slot;
  ++in_service_[content];
  ++active_;
  set_free(box, free_[box] - 1);
}

ContentId AssignmentState::release(RequestId request) {
  if (!is_active(request)) throw std::logic_error("request is not active");
  std::size_t idx = where_[request];
  ContentId content = slot_content_[idx];
  slots_[idx] = kEmpty;
  where_[request] = kNoSlot;
  --in_service_[content];
  --active_;
  auto box = static_cast<BoxId>(idx / uplink_slots_);
  set_free(box, free_[box] + 1);
  return content;
}

RequestId AssignmentState::swap_in(SlotRef where, RequestId incoming,
                                   ContentId content) {
  std::size_t idx = where.box * uplink_slots_ + where.slot;
  RequestId displaced = slots_[idx];
  if (displaced == kEmpty) throw std::logic_error("swap_in on an empty slot");
  if (is_active(incoming)) throw std::logic_error("incoming stream is active");
  if (!placement_.holds(where.box, content)) {
    throw std::logic_error("swap_in target box does not hold the content");
  }
  --in_service_[slot_content_[idx]];
  where_[displaced] = kNoSlot;
  slots_[idx] = incoming;
  slot_content_[idx] = content;
  if (incoming >= where_.size()) {
    where_.resize(std::max<std::size_t>(incoming + 1, where_.size() * 2), kNoSlot);
  }
  where_[incoming] = idx;
  ++in_service_[content];
  return displaced;
}

AssignmentState::CacheChange AssignmentState::update_cache(BoxId box,
                                                           ContentId content,
                                                           Rng& rng) {
  CacheChange change;
  if (placement_.holds(box, content)) return change;
  auto cache = placement_.cache(box);
  std::uniform_int_distribution<std::size_t> pick(0, cache.size() - 1);
  std::size_t slot = pick(rng);
  change.changed = true;
  change.evicted = cache[slot];

  std::size_t base = box * uplink_slots_;
  bool still_held = std::count(cache.begin(), cache.end(), change.evicted) > 1;
  if (!still_held) {
    for (std::size_t i = 0; i < uplink_slots_; ++i) {
      if (slots_[base + i] != kEmpty && slot_content_[base + i] == change.evicted) {
        change.orphans.push_back(slots_[base + i]);
      }
    }
    for (RequestId r : change.orphans) release(r);
  }

  for (std::size_t j = 0; j < box_contents_[box].size(); ++j) bucket_erase(box, j);
  placement_.replace(box, slot, content);
  rebuild_box_contents(box);
  for (std::size_t j = 0; j < box_contents_[box].size(); ++j) bucket_insert(box, j);
  return change;
}

void AssignmentState::check_invariants() const {
  auto fail = [](const std::string& what) { throw std::logic_error(what); };
  std::vector<std::size_t> counted(content_count(), 0);
  std::size_t total_free = 0;
  std::size_t active = 0;
  for (BoxId b = 0; b < box_count(); ++b) {
    std::size_t busy = 0;
    for (std::size_t i = 0; i < uplink_slots_; ++i) {
      std::size_t idx = b * uplink_slots_ + i;
      if (slots_[idx] == kEmpty) continue;
      ++busy;
      ContentId c = slot_content_[idx];
      if (!placement_.holds(b, c)) fail("box serves a content it does not hold");
      if (!is_active(slots_[idx]) || where_[slots_[idx]] != idx) {
        fail("request location index out of sync");
      }
      ++counted[c];
    }
    if (busy > uplink_slots_) fail("box over capacity");
    if (free_[b] != uplink_slots_ - busy) fail("free-slot count out of sync");
    total_free += free_[b];
    active += busy;
  }
  if (total_free != total_free_) fail("total free-slot count out of sync");
  if (active != active_) fail("active request count out of sync");
  for (ContentId c = 0; c < content_count(); ++c) {
    if (counted[c] != in_service_[c]) fail("n_c does not match slot table");
    std::size_t bucketed = 0;
    for (std::size_t k = 0; k <= uplink_slots_; ++k) {
      for (BoxId b : buckets_[bucket_index(c, k)]) {
        if (free_[b] != k) fail("box filed under the wrong free-slot bucket");
        if (!placement_.holds(b, c)) fail("bucket lists a non-holder");
      }
      bucketed += buckets_[bucket_index(c, k)].size();
    }
    if (bucketed != placement_.replica_count(c)) fail("buckets do not partition holders");
  }
}

std::string AssignmentState::dump() const {
  std::ostringstream out;
  out << "boxes=" << box_count() << " U=" << uplink_slots_
      << " free=" << total_free_ << " active=" << active_ << '\n';
  for (BoxId b = 0; b < box_count(); ++b) {
    out << "box " << b << " cache[";
    auto cache = placement_.cache(b);
    for (std::size_t i = 0; i < cache.size(); ++i) out << (i ? " " : "") << cache[i];
    out << "] slots[";
    for (std::size_t i = 0; i < uplink_slots_; ++i) {
      std::size_t idx = b * uplink_slots_ + i;
      if (i) out << ' ';
      if (slots_[idx] == kEmpty) out << '-';
      else out << slots_[idx] << ':' << slot_content_[idx];
    }
    out << "]\n";
  }
  for (ContentId c = 0; c < content_count(); ++c) {
    if (in_service_[c] || replica_count(c)) {
      out << "content " << c << " n=" << in_service_[c] << " D=" << replica_count(c)
          << '\n';
    }
  }
  return out.str();
}

// ---------------------------------------------------------------------------

std::optional<BoxId> select_box(const AssignmentState& state, ContentId content,
                                Rng& rng) {
  for (std::size_t k = state.uplink_slots(); k >= 1; --k) {
    auto boxes = state.holders_with_free(content, k);
    if (boxes.empty()) continue;
    if (boxes.size() == 1) return boxes.front();
    std::uniform_int_distribution<std::size_t> pick(0, boxes.size() - 1);
    return boxes[pick(rng)];
  }
  return std::nullopt;
}

namespace {

struct Move {
  SlotRef where;
  RequestId displaced;
  ContentId displaced_content;
};

// Utilization n_c / D_c, compared exactly by cross-multiplication.
struct Ratio {
  std::uint64_t n = 0;
  std::uint64_t d = 1;
  bool operator>(const Ratio& o) const { return n * o.d > o.n * d; }
};

inline Ratio utilization(const AssignmentState& s, ContentId c) {
  return {s.in_service(c), s.replica_count(c)};
}

// Moves an unassigned stream into the system, displacing others as needed.
// On failure every swap is undone and the stream stays unassigned.
bool rehome(AssignmentState& state, RequestId request, ContentId content,
            std::size_t t_r_max, bool try_free_first, Rng& rng,
            RepackOutcome& outcome) {
  if (try_free_first) {
    if (auto box = select_box(state, content, rng)) {
      state.assign(request, content, *box);
      outcome.accepted = true;
      outcome.box = *box;
      return true;
    }
  }

  // Epoch-stamped marks so each call starts with an empty visited set.
  thread_local std::vector<std::uint64_t> stamp;
  thread_local std::uint64_t epoch = 0;
  if (stamp.size() < state.content_count()) stamp.assign(state.content_count(), 0);
  ++epoch;
  auto visited = [&](ContentId c) { return stamp[c] == epoch; };
  stamp[content] = epoch;

  std::vector<Move> moves;
  RequestId orphan = request;
  ContentId orphan_content = content;
  std::vector<std::pair<SlotRef, ContentId>> best;
  std::vector<ContentId> tied;

  auto undo = [&] {
    for (auto it = moves.rbegin(); it != moves.rend(); ++it) {
      state.swap_in(it->where, it->displaced, it->displaced_content);
    }
  };

  while (true) {
    // Nothing can land without a free slot somewhere, so swapping is futile.
    if (outcome.swaps >= t_r_max || state.total_free_slots() == 0) break;

    best.clear();
    std::optional<ContentId> best_content;
    const Ratio floor = utilization(state, orphan_content);
    Ratio top = floor;
    for (BoxId b : state.holders_with_free(orphan_content, 0)) {
      for (std::size_t i = 0; i < state.uplink_slots(); ++i) {
        ContentId cand = state.slot_content(b, i);
        if (visited(cand)) continue;
        Ratio r = utilization(state, cand);
        if (!(r > floor) || top > r) continue;
        if (!best_content || r > top) {
          best.clear();
          best_content = cand;
          top = r;
        }
        best.push_back({SlotRef{b, i}, cand});
      }
    }
    if (best.empty()) break;

    // Uniform choice among tied contents, then among that content's pairs.
    tied.clear();
    for (const auto& [where, c] : best) {
      if (std::find(tied.begin(), tied.end(), c) == tied.end()) tied.push_back(c);
    }
    std::sort(tied.begin(), tied.end());
    ContentId chosen = tied.front();
    if (tied.size() > 1) {
      std::uniform_int_distribution<std::size_t> pick(0, tied.size() - 1);
      chosen = tied[pick(rng)];
    }
    std::erase_if(best, [&](const auto& p) { return p.second != chosen; });
    SlotRef where = best.front().first;
    if (best.size() > 1) {
      std::uniform_int_distribution<std::size_t> pick(0, best.size() - 1);
      where = best[pick(rng)].first;
    }

    RequestId displaced = state.swap_in(where, orphan, orphan_content);
    moves.push_back({where, displaced, chosen});
    ++outcome.swaps;
    orphan = displaced;
    orphan_content = chosen;
    stamp[chosen] = epoch;

    if (auto box = select_box(state, orphan_content, rng)) {
      state.assign(orphan, orphan_content, *box);
      outcome.accepted = true;
      outcome.box = state.location(request).box;
      return true;
    }
  }
  undo();
  return false;
}

}  // namespace

RepackOutcome repack(AssignmentState& state, RequestId request,
                     ContentId content, std::size_t t_r_max, Rng& rng) {
  RepackOutcome outcome;
  rehome(state, request, content, t_r_max, /*try_free_first=*/false, rng,
         outcome);
  return outcome;
}

std::vector<RescueOutcome> orphan_rescue(AssignmentState& state,
                                         std::vector<Orphan> orphans,
                                         std::size_t t_r_max, Rng& rng) {
  std::stable_sort(orphans.begin(), orphans.end(),
                   [](const Orphan& a, const Orphan& b) {
                     return a.remaining_service < b.remaining_service;
                   });
  std::vector<RescueOutcome> outcomes;
  outcomes.reserve(orphans.size());
  bool failed = t_r_max == 0;
  for (const auto& orphan : orphans) {
    RescueOutcome out{orphan.request, RescueResult::Lost};
    if (!failed) {
      RepackOutcome scratch;
      if (rehome(state, orphan.request, orphan.content, t_r_max,
                 /*try_free_first=*/true, rng, scratch)) {
        out.result = RescueResult::Repacked;
      } else {
        failed = true;
      }
    }
    outcomes.push_back(out);
  }
  return outcomes;
}

}  // namespace vodsim
