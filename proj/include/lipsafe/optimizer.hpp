#pragma once

#include <optional>

#include "lipsafe/planning.hpp"
#include "lipsafe/safety.hpp"
#include "lipsafe/uncertainty.hpp"

namespace lipsafe {

struct Candidate {
  StateIndex launch_state;
  ActionIndex action;
  ActionSequence path;  // certain path from the current state to launch_state
  double score;
};

/// Expected total uncertainty reduction from hypothetically taking action a at
/// state s, averaged uniformly over the candidate outcomes. The inner sum runs
/// over original-sample source states only.
double expected_reduction(StateIndex s, ActionIndex a, UncertaintyMap& map);

/// Greedy selection of the reachable safe candidate maximizing
/// expected_reduction / (path length + 1). Strict-improvement comparison, so
/// ties keep the earliest (state index, action index) candidate; nullopt when
/// every score is zero or no candidate exists.
std::optional<Candidate> optimize_greedily(StateIndex current, const SafeSet& safe_next,
                                           UncertaintyMap& map);

/// Expected growth of the safe set (original samples only) from hypothetically
/// learning the outcome of (s, a), averaged uniformly over candidates.
double expected_expansion(StateIndex s, ActionIndex a, UncertaintyMap& map,
                          const SafeSet& safe_next);

/// Greedy selection maximizing expected_expansion / (path length + 1).
std::optional<Candidate> optimize_expansion(StateIndex current, const SafeSet& safe_next,
                                            UncertaintyMap& map);

/// Among reachable safe candidates, minimizes the expected distance from the
/// outcome to the nearest safe-set boundary state. Boundary states are safe
/// members at minimal distance to the nearest original-sample non-member.
/// The score field carries the negated expected distance.
std::optional<Candidate> boundary_seeking_action(StateIndex current,
                                                 const SafeSet& safe_next,
                                                 UncertaintyMap& map);

}  // namespace lipsafe
