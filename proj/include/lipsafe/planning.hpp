#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "lipsafe/core.hpp"

namespace lipsafe {

/// Ordered list of action indices; empty means "already there".
using ActionSequence = std::vector<ActionIndex>;

/// Recorded outcome of (s, a), or nullopt when the transition is unknown.
inline std::optional<StateIndex> f_certain(StateIndex s, ActionIndex a,
                                           const KnowledgeSet& knowledge) {
  return knowledge.outcome(s, a);
}

/// Fold over an action sequence; unknown as soon as any step is unknown.
inline std::optional<StateIndex> f_certain(StateIndex s, const ActionSequence& seq,
                                           const KnowledgeSet& knowledge) {
  StateIndex cur = s;
  for (ActionIndex a : seq) {
    auto next = knowledge.outcome(cur, a);
    if (!next) return std::nullopt;
    cur = *next;
  }
  return cur;
}

/// Breadth-first search over the knowledge graph from a single source.
/// Levels are processed in ascending state-index order and edges in ascending
/// action-index order, so parents (and hence paths) are deterministic.
class CertainPaths {
 public:
  CertainPaths(StateIndex source, const KnowledgeSet& knowledge, std::size_t n_states)
      : source_(source), parent_(n_states, {-1, -1}), dist_(n_states, -1) {
    if (static_cast<std::size_t>(source) >= n_states) return;
    dist_[static_cast<std::size_t>(source)] = 0;
    std::vector<StateIndex> level{source};
    while (!level.empty()) {
      std::vector<StateIndex> next_level;
      for (StateIndex s : level) {
        for (auto [a, t] : knowledge.edges(s)) {
          auto ti = static_cast<std::size_t>(t);
          if (ti >= dist_.size() || dist_[ti] >= 0) continue;
          dist_[ti] = dist_[static_cast<std::size_t>(s)] + 1;
          parent_[ti] = {s, a};
          next_level.push_back(t);
        }
      }
      std::sort(next_level.begin(), next_level.end());
      level = std::move(next_level);
    }
  }

  bool reachable(StateIndex t) const {
    return static_cast<std::size_t>(t) < dist_.size() &&
           dist_[static_cast<std::size_t>(t)] >= 0;
  }
  int distance(StateIndex t) const { return dist_[static_cast<std::size_t>(t)]; }

  std::optional<ActionSequence> path_to(StateIndex t) const {
    if (!reachable(t)) return std::nullopt;
    ActionSequence seq;
    StateIndex cur = t;
    while (cur != source_) {
      auto [ps, pa] = parent_[static_cast<std::size_t>(cur)];
      seq.push_back(pa);
      cur = ps;
    }
    std::reverse(seq.begin(), seq.end());
    return seq;
  }

 private:
  StateIndex source_;
  std::vector<std::pair<StateIndex, ActionIndex>> parent_;
  std::vector<int> dist_;
};

/// Path-knowledge predicate q: is t reachable from s through known triplets?
/// q(s, s) holds via the empty sequence.
inline bool path_exists(StateIndex s, StateIndex t, const KnowledgeSet& knowledge,
                        std::size_t n_states) {
  if (s == t) return true;
  return CertainPaths(s, knowledge, n_states).reachable(t);
}

/// Path-planning function g: a minimum-length action sequence from s to t, or
/// nullopt when unreachable. g(s, s) is the empty sequence.
inline std::optional<ActionSequence> shortest_path(StateIndex s, StateIndex t,
                                                   const KnowledgeSet& knowledge,
                                                   std::size_t n_states) {
  if (s == t) return ActionSequence{};
  return CertainPaths(s, knowledge, n_states).path_to(t);
}

}  // namespace lipsafe
