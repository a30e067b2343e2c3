#include "lipsafe/optimizer.hpp"

#include <cassert>
#include <cmath>
#include <limits>
#include <vector>

namespace lipsafe {

namespace {

struct RadiusCache {
  std::vector<double> ds;  // L_s * d(s, s') per source state
  std::vector<double> da;  // L_a * d(a, a') per action

  RadiusCache(StateIndex s, ActionIndex a, const UncertaintyMap& map, std::size_t n_states) {
    ds.resize(n_states);
    da.resize(map.actions().size());
    for (std::size_t i = 0; i < n_states; ++i)
      ds[i] = map.lipschitz().l_s * map.states().distance(static_cast<StateIndex>(i), s);
    for (std::size_t j = 0; j < da.size(); ++j)
      da[j] = map.lipschitz().l_a * map.actions().distance(static_cast<ActionIndex>(j), a);
  }
};

// removals over original-sample pairs caused by hypothetically learning that
// (s, a) leads to outcome, with radii precomputed for (s, a)
std::size_t hypothetical_removals_at(double c, const RadiusCache& radii,
                                     UncertaintyMap& map) {
  const StateTable& states = map.states();
  const std::size_t n_orig = states.original_count();
  const std::size_t n_actions = map.actions().size();
  std::size_t removed = 0;
  {
    for (std::size_t sp = 0; sp < n_orig; ++sp) {
      const double ds = radii.ds[sp];
      for (std::size_t ap = 0; ap < n_actions; ++ap) {
        const PairSet& p = map.pair(static_cast<StateIndex>(sp), static_cast<ActionIndex>(ap));
        const double r = ds + radii.da[ap] + kGeomEps;
        if (c - r <= p.member_lo && p.member_hi <= c + r) continue;
        std::size_t kept =
            states.count_in_interval(std::max(p.lo, c - r), std::min(p.hi, c + r));
        removed += p.count - kept;
      }
    }
  }
  return removed;
}

std::size_t hypothetical_removals(StateIndex outcome, const RadiusCache& radii,
                                  UncertaintyMap& map) {
  const StateTable& states = map.states();
  const std::size_t n_orig = states.original_count();
  const std::size_t n_actions = map.actions().size();
  std::size_t removed = 0;
  if (map.interval_mode()) {
    return hypothetical_removals_at(states.coord1(outcome), radii, map);
  } else {
    const Vec& center = states.coords(outcome);
    for (std::size_t sp = 0; sp < n_orig; ++sp) {
      const double ds = radii.ds[sp];
      for (std::size_t ap = 0; ap < n_actions; ++ap) {
        const PairSet& p = map.pair(static_cast<StateIndex>(sp), static_cast<ActionIndex>(ap));
        const double r = ds + radii.da[ap] + kGeomEps;
        p.set.for_each([&](std::size_t m) {
          if (states.distance_to(static_cast<StateIndex>(m), center) > r) ++removed;
        });
      }
    }
  }
  return removed;
}

// True iff at least one sampled state lies inside [lo, hi] and every sampled
// state inside is a member of s_prime, matching pair_certifies.
bool interval_certified(double lo, double hi, const StateTable& states,
                        const IndexSet& s_prime) {
  if (lo > hi) return false;
  bool any = false;
  auto [first, last] = states.original_range(lo, hi);
  for (std::ptrdiff_t i = first; i <= last; ++i) {
    if (!s_prime.contains(static_cast<std::size_t>(i))) return false;
    any = true;
  }
  for (const auto& [coord, idx] : states.appended_sorted()) {
    if (coord < lo || coord > hi) continue;
    if (!s_prime.contains(static_cast<std::size_t>(idx))) return false;
    any = true;
  }
  return any;
}

// number of original-sample states newly certified safe under the hypothesis
// that (s, a) leads to outcome
std::size_t hypothetical_expansion_at(double c, const RadiusCache& radii,
                                      UncertaintyMap& map, const SafeSet& safe_next) {
  const StateTable& states = map.states();
  const std::size_t n = map.state_count();
  const std::size_t n_actions = map.actions().size();
  IndexSet s_prime = safe_next.members;
  s_prime.resize(states.size());
  std::size_t added_original = 0;
  {
    bool first_sweep = true;
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t sp = 0; sp < n; ++sp) {
        if (s_prime.contains(sp) || !map.row_present(static_cast<StateIndex>(sp))) continue;
        const double ds = radii.ds[sp];
        for (std::size_t ap = 0; ap < n_actions; ++ap) {
          const PairSet& p =
              map.pair(static_cast<StateIndex>(sp), static_cast<ActionIndex>(ap));
          const double r = ds + radii.da[ap] + kGeomEps;
          // an uncut pair could not certify sp before and cannot now unless
          // the safe set itself grew, which only happens after sweep one
          if (first_sweep && c - r <= p.lo && p.hi <= c + r) continue;
          const double nlo = std::max(p.lo, c - r);
          const double nhi = std::min(p.hi, c + r);
          if (interval_certified(nlo, nhi, states, s_prime)) {
            s_prime.insert(sp);
            if (sp < states.original_count()) ++added_original;
            changed = true;
            break;
          }
        }
      }
      first_sweep = false;
    }
  }
  return added_original;
}

std::size_t hypothetical_expansion(StateIndex outcome, const RadiusCache& radii,
                                   UncertaintyMap& map, const SafeSet& safe_next) {
  const StateTable& states = map.states();
  const std::size_t n = map.state_count();
  const std::size_t n_actions = map.actions().size();
  IndexSet s_prime = safe_next.members;
  s_prime.resize(states.size());
  std::size_t added_original = 0;

  if (map.interval_mode()) {
    return hypothetical_expansion_at(states.coord1(outcome), radii, map, safe_next);
  } else {
    const Vec& center = states.coords(outcome);
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t sp = 0; sp < n; ++sp) {
        if (s_prime.contains(sp) || !map.row_present(static_cast<StateIndex>(sp))) continue;
        const double ds = radii.ds[sp];
        for (std::size_t ap = 0; ap < n_actions; ++ap) {
          const PairSet& p =
              map.pair(static_cast<StateIndex>(sp), static_cast<ActionIndex>(ap));
          const double r = ds + radii.da[ap] + kGeomEps;
          bool subset = true, any = false;
          p.set.for_each([&](std::size_t m) {
            if (states.distance_to(static_cast<StateIndex>(m), center) > r) return;
            any = true;
            if (!s_prime.contains(m)) subset = false;
          });
          if (subset && any) {
            s_prime.insert(sp);
            if (sp < states.original_count()) ++added_original;
            changed = true;
            break;
          }
        }
      }
    }
  }
  return added_original;
}

// Mean of x ↦ min_b |x − b| for x uniform on [lo, hi], with sorted breakpoints
// b. The map is piecewise linear with kinks at the b's and at midpoints of
// adjacent b's, so a trapezoid sum over those cut points is exact.
double expected_interval_distance(double lo, double hi, const std::vector<double>& bs) {
  auto dist = [&](double x) {
    auto it = std::lower_bound(bs.begin(), bs.end(), x);
    double d = std::numeric_limits<double>::infinity();
    if (it != bs.end()) d = std::min(d, *it - x);
    if (it != bs.begin()) d = std::min(d, x - *std::prev(it));
    return d;
  };
  if (hi - lo <= 0.0) return dist(lo);
  std::vector<double> cuts{lo, hi};
  for (std::size_t i = 0; i < bs.size(); ++i) {
    if (bs[i] > lo && bs[i] < hi) cuts.push_back(bs[i]);
    if (i + 1 < bs.size()) {
      double mid = (bs[i] + bs[i + 1]) / 2.0;
      if (mid > lo && mid < hi) cuts.push_back(mid);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    acc += (cuts[i + 1] - cuts[i]) * (dist(cuts[i]) + dist(cuts[i + 1])) / 2.0;
  return acc / (hi - lo);
}

template <typename ScoreFn>
std::optional<Candidate> greedy_select(StateIndex current, const SafeSet& safe_next,
                                       UncertaintyMap& map, ScoreFn score_fn) {
  CertainPaths paths(current, map.knowledge(), map.states().size());
  double best = 0.0;
  std::optional<Candidate> best_candidate;
  StateIndex best_state = -1;

  const std::size_t n = map.states().size();
  for (std::size_t s = 0; s < n; ++s) {
    if (!safe_next.members.contains(s)) continue;
    if (!paths.reachable(static_cast<StateIndex>(s))) continue;
    const int glen = paths.distance(static_cast<StateIndex>(s));
    map.ensure_row(static_cast<StateIndex>(s));
    for (std::size_t a = 0; a < map.actions().size(); ++a) {
      // known pairs score exactly zero and can never win the strict comparison
      if (map.knowledge().contains(static_cast<StateIndex>(s), static_cast<ActionIndex>(a)))
        continue;
      const PairSet& p = map.pair(static_cast<StateIndex>(s), static_cast<ActionIndex>(a));
      if (p.count == 0 || !pair_executable(p, safe_next)) continue;
      double v = score_fn(static_cast<StateIndex>(s), static_cast<ActionIndex>(a)) /
                 (glen + 1);
      assert(v >= 0.0);
      if (v > best) {
        best = v;
        best_candidate = Candidate{static_cast<StateIndex>(s), static_cast<ActionIndex>(a),
                                   {}, v};
        best_state = static_cast<StateIndex>(s);
      }
    }
  }
  if (best_candidate) best_candidate->path = *paths.path_to(best_state);
  return best_candidate;
}

}  // namespace

double expected_reduction(StateIndex s, ActionIndex a, UncertaintyMap& map) {
  map.ensure_row(s);
  const PairSet& cand = map.pair(s, a);
  assert(cand.count >= 1);
  if (!map.interval_mode()) {
    RadiusCache radii(s, a, map, map.states().original_count());
    std::size_t total = 0;
    cand.set.for_each([&](std::size_t outcome) {
      total += hypothetical_removals(static_cast<StateIndex>(outcome), radii, map);
    });
    return static_cast<double>(total) / static_cast<double>(cand.count);
  }

  const StateTable& states = map.states();
  // sorted member coordinates of the candidate set (the hypothetical outcomes)
  std::vector<double> outs;
  outs.reserve(cand.count);
  {
    auto [first, last] = states.original_range(cand.lo, cand.hi);
    for (std::ptrdiff_t i = first; i <= last; ++i)
      outs.push_back(states.coord1(static_cast<StateIndex>(i)));
    std::size_t mid = outs.size();
    for (const auto& [coord, idx] : states.appended_sorted())
      if (coord >= cand.lo && coord <= cand.hi) outs.push_back(coord);
    std::inplace_merge(outs.begin(), outs.begin() + static_cast<std::ptrdiff_t>(mid),
                       outs.end());
  }
  assert(outs.size() == cand.count);
  const double omin = outs.front(), omax = outs.back();

  RadiusCache radii(s, a, map, map.states().original_count());
  const std::size_t n_orig = states.original_count();
  const std::size_t n_actions = map.actions().size();
  std::size_t total = 0;
  auto eval = [&](const PairSet& p, double r, double c) {
    std::size_t kept = states.count_in_interval(std::max(p.lo, c - r), std::min(p.hi, c + r));
    total += p.count - kept;
  };
  for (std::size_t sp = 0; sp < n_orig; ++sp) {
    const double ds = radii.ds[sp];
    for (std::size_t ap = 0; ap < n_actions; ++ap) {
      const PairSet& p = map.pair(static_cast<StateIndex>(sp), static_cast<ActionIndex>(ap));
      const double r = ds + radii.da[ap] + kGeomEps;
      // a ball at c covers all members iff c ∈ [member_hi − r, member_lo + r];
      // such outcomes remove nothing and are pruned wholesale
      const double cov_lo = p.member_hi - r;
      const double cov_hi = p.member_lo + r;
      if (cov_lo <= cov_hi) {
        if (omin >= cov_lo && omax <= cov_hi) continue;
        auto lo_end = std::lower_bound(outs.begin(), outs.end(), cov_lo);
        for (auto it = outs.begin(); it != lo_end; ++it) eval(p, r, *it);
        auto hi_beg = std::upper_bound(outs.begin(), outs.end(), cov_hi);
        for (auto it = hi_beg; it != outs.end(); ++it) eval(p, r, *it);
      } else {
        for (double c : outs) eval(p, r, c);
      }
    }
  }
  return static_cast<double>(total) / static_cast<double>(cand.count);
}

std::optional<Candidate> optimize_greedily(StateIndex current, const SafeSet& safe_next,
                                           UncertaintyMap& map) {
  return greedy_select(current, safe_next, map, [&](StateIndex s, ActionIndex a) {
    return expected_reduction(s, a, map);
  });
}

double expected_expansion(StateIndex s, ActionIndex a, UncertaintyMap& map,
                          const SafeSet& safe_next) {
  map.ensure_row(s);
  const PairSet& pair = map.pair(s, a);
  assert(pair.count >= 1);
  RadiusCache radii(s, a, map, map.states().size());
  std::size_t total = 0;
  pair.set.for_each([&](std::size_t outcome) {
    total += hypothetical_expansion(static_cast<StateIndex>(outcome), radii, map, safe_next);
  });
  return static_cast<double>(total) / static_cast<double>(pair.count);
}

std::optional<Candidate> optimize_expansion(StateIndex current, const SafeSet& safe_next,
                                            UncertaintyMap& map) {
  return greedy_select(current, safe_next, map, [&](StateIndex s, ActionIndex a) {
    return expected_expansion(s, a, map, safe_next);
  });
}

std::optional<Candidate> boundary_seeking_action(StateIndex current,
                                                 const SafeSet& safe_next,
                                                 UncertaintyMap& map) {
  const StateTable& states = map.states();
  const std::size_t n = states.size();

  // boundary = safe members at minimal distance to the nearest original
  // non-member
  std::vector<StateIndex> exterior;
  for (std::size_t i = 0; i < states.original_count(); ++i)
    if (!safe_next.members.contains(i)) exterior.push_back(static_cast<StateIndex>(i));
  if (exterior.empty()) return std::nullopt;

  double dmin = std::numeric_limits<double>::infinity();
  std::vector<std::pair<StateIndex, double>> member_exterior_dist;
  safe_next.members.for_each([&](std::size_t m) {
    double d = std::numeric_limits<double>::infinity();
    for (StateIndex e : exterior)
      d = std::min(d, states.distance(static_cast<StateIndex>(m), e));
    member_exterior_dist.emplace_back(static_cast<StateIndex>(m), d);
    dmin = std::min(dmin, d);
  });
  std::vector<StateIndex> boundary;
  for (auto [m, d] : member_exterior_dist)
    if (d <= dmin + kGeomEps) boundary.push_back(m);
  std::vector<double> boundary_coords;
  if (map.interval_mode()) {
    boundary_coords.reserve(boundary.size());
    for (StateIndex b : boundary) boundary_coords.push_back(states.coord1(b));
    std::sort(boundary_coords.begin(), boundary_coords.end());
  }

  CertainPaths paths(current, map.knowledge(), n);
  // Primary tier: pairs whose uncertainty set contains at least one sampled
  // state (the same evidence grade that certification uses). Secondary tier:
  // executable pairs whose interval falls in a gap between samples; these are
  // considered only when the primary tier is empty, so the system can keep
  // moving instead of stranding at a freshly visited state.
  double best[2] = {std::numeric_limits<double>::infinity(),
                    std::numeric_limits<double>::infinity()};
  std::optional<Candidate> best_candidate[2];
  StateIndex best_state[2] = {-1, -1};
  for (std::size_t s = 0; s < n; ++s) {
    if (!safe_next.members.contains(s)) continue;
    if (!paths.reachable(static_cast<StateIndex>(s))) continue;
    map.ensure_row(static_cast<StateIndex>(s));
    for (std::size_t a = 0; a < map.actions().size(); ++a) {
      const PairSet& p = map.pair(static_cast<StateIndex>(s), static_cast<ActionIndex>(a));
      if (!pair_executable(p, safe_next)) continue;
      // expected (uniform over the uncertainty set) distance from the outcome
      // to the nearest boundary state; a known action stepping exactly onto a
      // boundary state therefore scores 0 and wins
      double expected;
      if (map.interval_mode()) {
        // the uncertainty set is the interval [lo, hi]: integrate the
        // piecewise-linear distance-to-boundary map over it
        expected = expected_interval_distance(p.lo, p.hi, boundary_coords);
      } else {
        if (p.count == 0) continue;
        double sum = 0.0;
        p.set.for_each([&](std::size_t m) {
          double d = std::numeric_limits<double>::infinity();
          for (StateIndex b : boundary)
            d = std::min(d, states.distance(static_cast<StateIndex>(m), b));
          sum += d;
        });
        expected = sum / static_cast<double>(p.count);
      }
      const int tier = p.count > 0 ? 0 : 1;
      if (expected < best[tier] - kGeomEps) {
        best[tier] = expected;
        best_candidate[tier] = Candidate{static_cast<StateIndex>(s),
                                         static_cast<ActionIndex>(a), {}, -expected};
        best_state[tier] = static_cast<StateIndex>(s);
      }
    }
  }
  const int chosen = best_candidate[0] ? 0 : 1;
  if (best_candidate[chosen])
    best_candidate[chosen]->path = *paths.path_to(best_state[chosen]);
  return best_candidate[chosen];
}

}  // namespace lipsafe
