#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <vector>

#include "lipsafe/environments.hpp"
#include "lipsafe/optimizer.hpp"
#include "lipsafe/safety.hpp"

namespace lipsafe {

enum class PolicyKind { uncertainty_reduction, random, safe_no_opt, expansion_opt };

struct Policy {
  PolicyKind kind = PolicyKind::uncertainty_reduction;
  std::uint64_t seed = 0;
};

const char* policy_name(PolicyKind kind);
PolicyKind parse_policy(const std::string& name);

struct TraceRecord {
  int action;  // ordinal m; counts every executed action including path steps
  std::size_t safe_size_original;
  std::size_t safe_size_total;
  std::size_t total_uncertainty;
  Vec state;
  bool crashed;
};

struct RunTrace {
  enum class Status { completed, crashed };
  std::vector<TraceRecord> records;
  Status status = Status::completed;
};

/// A certified policy visited a ground-truth-unsafe state or contradicted its
/// own knowledge: the deterministic guarantee is broken.
struct GuaranteeViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One seeded exploration run: owns the tables, knowledge, uncertainty map,
/// safe set and the simulator-side ground-truth oracle.
class Simulation {
 public:
  Simulation(EnvironmentSpec env, Policy policy,
             std::shared_ptr<const GroundTruthSafety> oracle = nullptr);

  RunTrace run(int n_actions);

  /// Called after every metric record; used by verification harnesses.
  std::function<void(const Simulation&, const TraceRecord&)> observer;

  const StateTable& states() const { return states_; }
  const ActionTable& actions() const { return actions_; }
  const KnowledgeSet& knowledge() const { return knowledge_; }
  UncertaintyMap& map() { return *map_; }
  const SafeSet& safe() const { return safe_; }
  const GroundTruthSafety& oracle() const { return *oracle_; }
  const EnvironmentSpec& environment() const { return env_; }
  StateIndex current_state() const { return current_; }

 private:
  void refresh_certification();
  void execute_action(ActionIndex a, RunTrace& trace, int& m, bool expect_known);
  std::optional<Candidate> select_candidate();

  EnvironmentSpec env_;
  Policy policy_;
  StateTable states_;
  ActionTable actions_;
  KnowledgeSet knowledge_;
  std::unique_ptr<UncertaintyMap> map_;
  SafeSet safe_;
  std::shared_ptr<const GroundTruthSafety> oracle_;
  StateIndex current_;
  std::mt19937_64 rng_;
  bool crashed_ = false;
};

/// All true transitions that start from an S_0 sample and land inside the S_0
/// interval, with outcomes interned. Verifies the every-pair reachability
/// assumption on the initial safe set and fails loudly when it does not hold.
KnowledgeSet seed_initial_knowledge(const EnvironmentSpec& env, StateTable& states,
                                    const ActionTable& actions);

/// Original samples lying inside the S_0 interval.
std::vector<StateIndex> initial_safe_states(const EnvironmentSpec& env,
                                            const StateTable& states);

}  // namespace lipsafe
