#include "lipsafe/safety.hpp"

namespace lipsafe {

ExpansionResult expand_safe_set(const SafeSet& current, UncertaintyMap& map) {
  ExpansionResult result;
  result.safe = current;
  result.safe.members.resize(map.states().size());
  result.safe.generation = current.generation + 1;

  const std::size_t n = map.states().size();
  const std::size_t n_actions = map.actions().size();
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<std::pair<StateIndex, ActionIndex>> adds;
    for (std::size_t s = 0; s < n; ++s) {
      if (result.safe.members.contains(s)) continue;
      map.ensure_row(static_cast<StateIndex>(s));
      for (std::size_t a = 0; a < n_actions; ++a) {
        const PairSet& p =
            map.pair(static_cast<StateIndex>(s), static_cast<ActionIndex>(a));
        if (pair_certifies(p, result.safe)) {
          adds.emplace_back(static_cast<StateIndex>(s), static_cast<ActionIndex>(a));
          break;
        }
      }
    }
    for (auto [s, a] : adds) {
      result.safe.members.insert(static_cast<std::size_t>(s));
      result.added.emplace_back(s, a);
      changed = true;
    }
  }
  return result;
}

std::vector<ActionIndex> safe_actions(StateIndex s, UncertaintyMap& map,
                                      const SafeSet& safe) {
  std::vector<ActionIndex> out;
  map.ensure_row(s);
  for (std::size_t a = 0; a < map.actions().size(); ++a) {
    if (pair_certifies(map.pair(s, static_cast<ActionIndex>(a)), safe))
      out.push_back(static_cast<ActionIndex>(a));
  }
  return out;
}

GroundTruthSafety::GroundTruthSafety(const EnvironmentSpec& env, double resolution)
    : grid_min_(env.state_grid.min), grid_max_(env.state_grid.max), step_(resolution) {
  auto n = static_cast<std::size_t>(std::llround((grid_max_ - grid_min_) / step_)) + 1;
  safe_.assign(n, 0);
  auto coord = [&](std::size_t k) { return grid_min_ + static_cast<double>(k) * step_; };
  auto in_s0 = [&](double s) {
    return s >= env.s0_lo - kGeomEps && s <= env.s0_hi + kGeomEps;
  };
  for (std::size_t k = 0; k < n; ++k)
    if (in_s0(coord(k))) safe_[k] = 1;

  const int n_actions = env.action_grid.count();
  auto cell_of = [&](double y) { return std::llround((y - grid_min_) / step_); };
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t k = 0; k < n; ++k) {
      if (safe_[k]) continue;
      double s = coord(k);
      for (int j = 0; j < n_actions; ++j) {
        double a = env.action_grid.coord(j);
        double y = env.step(s, a);
        bool ok = in_s0(y) || marked(y);
        if (!ok && cell_of(y) == static_cast<long long>(k)) {
          // Sub-cell creep: the successor rounds back to this cell, so the
          // plain fixed point would deadlock even though the continuous
          // trajectory drifts toward S_0. Accept the cell when both cell
          // edges make strict progress toward S_0 and the inward neighbour
          // is already marked: the trajectory then must exit on that side.
          double e1 = s - step_ / 2, e2 = s + step_ / 2;
          double y1 = env.step(e1, a), y2 = env.step(e2, a);
          if (s > env.s0_hi && k > 0 && safe_[k - 1] && y1 < e1 && y2 < e2)
            ok = true;
          else if (s < env.s0_lo && k + 1 < n && safe_[k + 1] && y1 > e1 && y2 > e2)
            ok = true;
        }
        if (ok) {
          safe_[k] = 1;
          changed = true;
          break;
        }
      }
    }
  }
}

std::size_t GroundTruthSafety::marked_count() const {
  std::size_t n = 0;
  for (char c : safe_) n += c != 0;
  return n;
}

GroundTruthSafety ground_truth_safe(const EnvironmentSpec& env, double resolution) {
  return GroundTruthSafety(env, resolution);
}

bool is_crash(const Vec& s, const GroundTruthSafety& oracle) {
  return !oracle.marked(s[0]);
}

}  // namespace lipsafe
