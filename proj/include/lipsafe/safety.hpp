#pragma once

#include <algorithm>
#include <limits>
#include <utility>
#include <vector>

#include "lipsafe/core.hpp"
#include "lipsafe/environments.hpp"
#include "lipsafe/index_set.hpp"
#include "lipsafe/uncertainty.hpp"

namespace lipsafe {

struct SafeSet {
  IndexSet members;
  int generation = 0;
  // convex hull of the certified member coordinates (1-D instances only,
  // maintained by the simulation; inverted when unknown). The true safe set
  // of these systems is an interval, so everything between two certified
  // states is itself safe.
  double hull_lo = std::numeric_limits<double>::infinity();
  double hull_hi = -std::numeric_limits<double>::infinity();

  std::size_t size_original(std::size_t original_count) const {
    std::size_t n = 0;
    members.for_each([&](std::size_t i) {
      if (i < original_count) ++n;
    });
    return n;
  }
  std::size_t size_total() const { return members.count(); }
};

struct ExpansionResult {
  SafeSet safe;
  // induction order of newly certified states with the action whose whole
  // candidate set was already certified when the state was added
  std::vector<std::pair<StateIndex, ActionIndex>> added;
};

/// A pair certifies safety when its candidate set is non-empty and every
/// candidate outcome is already certified safe. An empty candidate set
/// certifies nothing: the constraint interval then lies in a gap between
/// samples and carries no evidence about where the system would land.
inline bool pair_certifies(const PairSet& p, const SafeSet& safe) {
  return p.count > 0 && p.set.is_subset_of(safe.members);
}

/// Gate for actually performing an action: the whole constraint interval must
/// lie between certified coordinates, so the realized outcome of the
/// continuous system is guaranteed to land among provably safe states. This
/// is stricter than certification, which only inspects sampled candidates.
inline bool pair_executable(const PairSet& p, const SafeSet& safe) {
  if (safe.hull_lo <= safe.hull_hi)
    return p.lo >= safe.hull_lo - kGeomEps && p.hi <= safe.hull_hi + kGeomEps &&
           p.set.is_subset_of(safe.members);
  return pair_certifies(p, safe);
}

/// Least fixed point of the expansion operator: repeatedly add every state
/// with an action whose entire candidate set lies inside the current set.
ExpansionResult expand_safe_set(const SafeSet& current, UncertaintyMap& map);

/// Actions whose entire candidate set at s is certified safe, ascending index.
std::vector<ActionIndex> safe_actions(StateIndex s, UncertaintyMap& map,
                                      const SafeSet& safe);

/// Brute-force backward-reachability oracle on a fine evaluation grid.
/// Simulator-side ground truth only; never visible to the explorer.
class GroundTruthSafety {
 public:
  GroundTruthSafety(const EnvironmentSpec& env, double resolution);

  bool marked(double s) const {
    auto k = std::llround((s - grid_min_) / step_);
    if (k < 0 || k >= static_cast<long long>(safe_.size())) return false;
    return safe_[static_cast<std::size_t>(k)] != 0;
  }

  double resolution() const { return step_; }
  double grid_min() const { return grid_min_; }
  double grid_max() const { return grid_max_; }
  std::size_t marked_count() const;

 private:
  double grid_min_, grid_max_, step_;
  std::vector<char> safe_;
};

GroundTruthSafety ground_truth_safe(const EnvironmentSpec& env, double resolution);

/// True iff the nearest oracle grid point to s is unmarked.
bool is_crash(const Vec& s, const GroundTruthSafety& oracle);

}  // namespace lipsafe
