#include "lipsafe/explorer.hpp"

#include "lipsafe/planning.hpp"

namespace lipsafe {

const char* policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::uncertainty_reduction: return "uncertainty-reduction";
    case PolicyKind::random: return "random";
    case PolicyKind::safe_no_opt: return "safe-no-opt";
    case PolicyKind::expansion_opt: return "expansion-opt";
  }
  return "?";
}

PolicyKind parse_policy(const std::string& name) {
  if (name == "uncertainty-reduction") return PolicyKind::uncertainty_reduction;
  if (name == "random") return PolicyKind::random;
  if (name == "safe-no-opt") return PolicyKind::safe_no_opt;
  if (name == "expansion-opt") return PolicyKind::expansion_opt;
  throw std::invalid_argument("unknown policy: " + name);
}

std::vector<StateIndex> initial_safe_states(const EnvironmentSpec& env,
                                            const StateTable& states) {
  std::vector<StateIndex> out;
  for (std::size_t i = 0; i < states.original_count(); ++i) {
    double x = states.coords(static_cast<StateIndex>(i))[0];
    if (x >= env.s0_lo - kGeomEps && x <= env.s0_hi + kGeomEps)
      out.push_back(static_cast<StateIndex>(i));
  }
  return out;
}

KnowledgeSet seed_initial_knowledge(const EnvironmentSpec& env, StateTable& states,
                                    const ActionTable& actions) {
  KnowledgeSet knowledge;
  auto s0_states = initial_safe_states(env, states);
  if (s0_states.empty())
    throw std::runtime_error("no sampled states inside the initial safe interval");

  for (StateIndex s : s0_states) {
    double x = states.coords(s)[0];
    for (std::size_t a = 0; a < actions.size(); ++a) {
      double y = env.step(x, actions.coords(static_cast<ActionIndex>(a))[0]);
      if (y < env.s0_lo - kGeomEps || y > env.s0_hi + kGeomEps) continue;
      Vec yc(1);
      yc[0] = y;
      auto [idx, fresh] = states.intern(yc);
      (void)fresh;
      knowledge.insert(s, static_cast<ActionIndex>(a), idx);
    }
  }

  for (StateIndex s : s0_states)
    for (StateIndex t : s0_states)
      if (!path_exists(s, t, knowledge, states.size()))
        throw std::runtime_error(
            "initial knowledge does not connect every pair of initial safe states");
  return knowledge;
}

Simulation::Simulation(EnvironmentSpec env, Policy policy,
                       std::shared_ptr<const GroundTruthSafety> oracle)
    : env_(std::move(env)),
      policy_(policy),
      states_(env_.state_grid.sample()),
      actions_(env_.action_grid.sample()),
      oracle_(std::move(oracle)),
      current_(-1),
      rng_(policy.seed) {
  env_.validate();
  if (!oracle_)
    oracle_ = std::make_shared<GroundTruthSafety>(env_, env_.state_grid.step / 50.0);

  Vec s0(1);
  s0[0] = env_.s0;
  auto [idx, fresh] = states_.intern(s0);
  if (fresh) throw std::runtime_error("s0 must be one of the sampled states");
  current_ = idx;

  KnowledgeSet seeded = seed_initial_knowledge(env_, states_, actions_);
  map_ = std::make_unique<UncertaintyMap>(states_, actions_, env_.lipschitz, knowledge_);
  for (const Triplet& t : seeded.triplets()) map_->record_transition(t.s, t.a, t.s_next);

  safe_.members = IndexSet(states_.size());
  safe_.generation = 0;
  for (StateIndex s : initial_safe_states(env_, states_))
    safe_.members.insert(static_cast<std::size_t>(s));
}

void Simulation::refresh_certification() {
  map_->expand_knowledge();
  // hull growth can certify further pairs, so iterate to a joint fixed point
  for (;;) {
    safe_ = expand_safe_set(safe_, *map_).safe;
    double lo = safe_.hull_lo, hi = safe_.hull_hi;
    safe_.members.for_each([&](std::size_t i) {
      double x = states_.coords(static_cast<StateIndex>(i))[0];
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    });
    if (lo == safe_.hull_lo && hi == safe_.hull_hi) break;
    safe_.hull_lo = lo;
    safe_.hull_hi = hi;
  }
}

void Simulation::execute_action(ActionIndex a, RunTrace& trace, int& m, bool expect_known) {
  const double x = states_.coords(current_)[0];
  const double y = env_.step(x, actions_.coords(a)[0]);
  Vec yc(1);
  yc[0] = y;
  const bool certified = policy_.kind != PolicyKind::random;

  if (!certified && is_crash(yc, *oracle_)) {
    // control baseline walked out; stop before touching knowledge
    crashed_ = true;
    ++m;
    TraceRecord rec{m, safe_.size_original(states_.original_count()), safe_.size_total(),
                    map_->total_uncertainty(), yc, true};
    trace.records.push_back(rec);
    if (observer) observer(*this, rec);
    return;
  }

  auto [idx, fresh] = states_.intern(yc);
  if (fresh) map_->notify_state_added(idx);

  if (auto known = knowledge_.outcome(current_, a); known && *known != idx)
    throw GuaranteeViolation("actual outcome contradicts recorded knowledge");
  if (expect_known && !knowledge_.contains(current_, a))
    throw GuaranteeViolation("path step is not a known transition");

  map_->ensure_row(current_);
  if (!map_->pair(current_, a).set.contains(static_cast<std::size_t>(idx)))
    throw GuaranteeViolation("actual outcome outside the candidate set");

  map_->record_transition(current_, a, idx);
  current_ = idx;

  if (certified) {
    if (is_crash(yc, *oracle_))
      throw GuaranteeViolation("certified policy visited a ground-truth-unsafe state");
    // every possible outcome of a certified action is safe, so the realized
    // outcome is safe by construction and joins the safe set immediately
    safe_.members.resize(states_.size());
    safe_.members.insert(static_cast<std::size_t>(idx));
  }

  refresh_certification();
  ++m;
  TraceRecord rec{m, safe_.size_original(states_.original_count()), safe_.size_total(),
                  map_->total_uncertainty(), yc, false};
  trace.records.push_back(rec);
  if (observer) observer(*this, rec);
}

std::optional<Candidate> Simulation::select_candidate() {
  std::optional<Candidate> cand;
  if (policy_.kind == PolicyKind::uncertainty_reduction)
    cand = optimize_greedily(current_, safe_, *map_);
  else
    cand = optimize_expansion(current_, safe_, *map_);
  if (!cand) cand = boundary_seeking_action(current_, safe_, *map_);
  return cand;
}

RunTrace Simulation::run(int n_actions) {
  RunTrace trace;
  refresh_certification();
  TraceRecord initial{0, safe_.size_original(states_.original_count()), safe_.size_total(),
                      map_->total_uncertainty(), states_.coords(current_), false};
  trace.records.push_back(initial);
  if (observer) observer(*this, initial);

  int m = 0;
  while (m < n_actions && !crashed_) {
    switch (policy_.kind) {
      case PolicyKind::random: {
        std::uniform_int_distribution<std::size_t> pick(0, actions_.size() - 1);
        execute_action(static_cast<ActionIndex>(pick(rng_)), trace, m, false);
        break;
      }
      case PolicyKind::safe_no_opt: {
        auto acts = safe_actions(current_, *map_, safe_);
        if (acts.empty()) {
          // the realized state is safe but no action is certifiable from the
          // current knowledge; nothing further can be done without a guess
          m = n_actions;
          break;
        }
        std::uniform_int_distribution<std::size_t> pick(0, acts.size() - 1);
        execute_action(acts[pick(rng_)], trace, m, false);
        break;
      }
      case PolicyKind::uncertainty_reduction:
      case PolicyKind::expansion_opt: {
        auto cand = select_candidate();
        if (!cand) {
          m = n_actions;  // nothing left to explore or approach
          break;
        }
        for (ActionIndex step : cand->path) {
          if (m >= n_actions) break;
          execute_action(step, trace, m, true);
        }
        if (m < n_actions) execute_action(cand->action, trace, m, false);
        break;
      }
    }
  }
  trace.status = crashed_ ? RunTrace::Status::crashed : RunTrace::Status::completed;
  return trace;
}

}  // namespace lipsafe
