#pragma once

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lipsafe/core.hpp"
#include "lipsafe/index_set.hpp"

namespace lipsafe {

/// Raised when the constraint balls of a pair become contradictory (no real
/// successor could satisfy them all, or a recorded outcome is excluded): the
/// observed transitions are inconsistent with the supplied Lipschitz constants.
/// A set that is merely empty over the sampled universe is not an error — the
/// true successor may simply not have been interned yet.
struct LipschitzViolation : std::runtime_error {
  StateIndex s;
  ActionIndex a;
  LipschitzViolation(StateIndex s_, ActionIndex a_)
      : std::runtime_error("contradictory uncertainty constraints for pair (state " +
                           std::to_string(s_) + ", action " + std::to_string(a_) +
                           "); Lipschitz constants are too small"),
        s(s_),
        a(a_) {}
};

struct UpdateSummary {
  std::size_t removed = 0;  // candidates removed across all pairs
  bool fresh = false;       // triplet was not already known
};

/// Candidate-outcome set for one (state, action) pair. In 1-D euclidean mode
/// [lo, hi] is the exact analytic intersection of all constraint balls, so
/// set == universe restricted to [lo, hi]; member_lo/member_hi bound the
/// actual member coordinates for cheap covered-ball tests.
struct PairSet {
  IndexSet set;
  std::size_t count = 0;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  double member_lo = -std::numeric_limits<double>::infinity();
  double member_hi = std::numeric_limits<double>::infinity();
};

/// Maintains f_u for every (state, action) pair, incrementally intersecting
/// one ball per stored pair per new triplet. Rows for visited (non-original)
/// source states are created lazily on first access.
class UncertaintyMap {
 public:
  UncertaintyMap(StateTable& states, const ActionTable& actions, LipschitzConstants lip,
                 KnowledgeSet& knowledge);

  /// Scratch evaluation straight from the definition: intersection of one
  /// hypersphere per triplet over the current universe. Reference route; the
  /// incrementally maintained sets must always agree with it.
  IndexSet compute_fu(StateIndex s, ActionIndex a) const;

  /// Inserts the triplet and intersects every stored pair with the induced
  /// ball. Throws LipschitzViolation if any pair's constraints become
  /// contradictory; throws KnowledgeConflict if (s, a) is known with a
  /// different outcome.
  UpdateSummary record_transition(StateIndex s, ActionIndex a, StateIndex s_next);

  /// Adds every unknown pair whose outcome is fully determined to the
  /// knowledge set, repeating until closure. Returns the number of additions.
  /// With discrete outcomes the test is |candidates| = 1; in continuous 1-D
  /// mode it is that the analytic constraint interval collapses to a point
  /// (the pinned outcome is interned if it is not yet a sampled state).
  std::size_t expand_knowledge();

  /// Declares that outcomes always coincide with sampled states (a genuinely
  /// discrete MDP), enabling cardinality-1 knowledge promotion in 1-D mode.
  void set_discrete_outcomes(bool v) { discrete_outcomes_ = v; }

  /// Sum of candidate-set sizes over original-sample source states.
  std::size_t total_uncertainty() const;

  /// Extends the universe with a freshly interned state and inserts it into
  /// every pair it is geometrically consistent with.
  void notify_state_added(StateIndex idx);

  const IndexSet& fu(StateIndex s, ActionIndex a) {
    ensure_row(s);
    return pair(s, a).set;
  }

  void ensure_row(StateIndex s);
  bool row_present(StateIndex s) const {
    return static_cast<std::size_t>(s) < rows_.size() &&
           rows_[static_cast<std::size_t>(s)].has_value();
  }
  const PairSet& pair(StateIndex s, ActionIndex a) const {
    return (*rows_[static_cast<std::size_t>(s)])[static_cast<std::size_t>(a)];
  }

  const StateTable& states() const { return *states_; }
  const ActionTable& actions() const { return *actions_; }
  const KnowledgeSet& knowledge() const { return *knowledge_; }
  const LipschitzConstants& lipschitz() const { return lip_; }
  const IndexSet& universe() const { return universe_; }
  bool interval_mode() const { return interval_mode_; }
  std::size_t state_count() const { return rows_.size(); }

 private:
  std::vector<PairSet> build_row(StateIndex s) const;
  void refresh_member_bounds(PairSet& p) const;

  StateTable* states_;
  const ActionTable* actions_;
  LipschitzConstants lip_;
  KnowledgeSet* knowledge_;
  IndexSet universe_;
  bool interval_mode_;
  bool discrete_outcomes_ = false;
  std::vector<double> da_matrix_;  // L_a * d^a(i, j), row-major
  std::vector<std::optional<std::vector<PairSet>>> rows_;
};

}  // namespace lipsafe
