#include "lipsafe/uncertainty.hpp"

#include <algorithm>
#include <cassert>

namespace lipsafe {

UncertaintyMap::UncertaintyMap(StateTable& states, const ActionTable& actions,
                               LipschitzConstants lip, KnowledgeSet& knowledge)
    : states_(&states),
      actions_(&actions),
      lip_(lip),
      knowledge_(&knowledge),
      universe_(IndexSet::full(states.size())),
      interval_mode_(states.sorted_1d()),
      rows_(states.size()) {
  const std::size_t n_a = actions.size();
  da_matrix_.resize(n_a * n_a);
  for (std::size_t i = 0; i < n_a; ++i)
    for (std::size_t j = 0; j < n_a; ++j)
      da_matrix_[i * n_a + j] =
          lip_.l_a * actions.distance(static_cast<ActionIndex>(i), static_cast<ActionIndex>(j));
  for (std::size_t s = 0; s < states_->original_count(); ++s)
    rows_[s] = build_row(static_cast<StateIndex>(s));
}

void UncertaintyMap::refresh_member_bounds(PairSet& p) const {
  auto [first, last] = states_->original_range(p.lo, p.hi);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  if (first <= last) {
    lo = states_->coord1(static_cast<StateIndex>(first));
    hi = states_->coord1(static_cast<StateIndex>(last));
  }
  auto app = states_->appended_sorted();
  auto a = std::lower_bound(app.begin(), app.end(), std::pair{p.lo, StateIndex{-1}});
  auto b = std::upper_bound(app.begin(), app.end(),
                            std::pair{p.hi, std::numeric_limits<StateIndex>::max()});
  if (a != b) {
    lo = std::min(lo, a->first);
    hi = std::max(hi, (b - 1)->first);
  }
  p.member_lo = lo;
  p.member_hi = hi;
}

std::vector<PairSet> UncertaintyMap::build_row(StateIndex s) const {
  const std::size_t n_a = actions_->size();
  std::vector<PairSet> row(n_a);
  if (interval_mode_) {
    for (const Triplet& t : knowledge_->triplets()) {
      const double ds = lip_.l_s * states_->distance(s, t.s) + kGeomEps;
      const double c = states_->coord1(t.s_next);
      const double* da = &da_matrix_[static_cast<std::size_t>(t.a) * n_a];
      for (std::size_t a = 0; a < n_a; ++a) {
        PairSet& p = row[a];
        const double r = ds + da[a];
        p.lo = std::max(p.lo, c - r);
        p.hi = std::min(p.hi, c + r);
      }
    }
  }
  for (std::size_t a = 0; a < n_a; ++a) {
    PairSet& p = row[a];
    if (interval_mode_) {
      p.set = IndexSet(universe_.capacity());
      auto [first, last] = states_->original_range(p.lo, p.hi);
      for (std::ptrdiff_t i = first; i <= last; ++i)
        p.set.insert(static_cast<std::size_t>(i));
      auto app = states_->appended_sorted();
      for (const auto& [coord, idx] : app)
        if (coord >= p.lo && coord <= p.hi) p.set.insert(static_cast<std::size_t>(idx));
      p.count = p.set.count();
      refresh_member_bounds(p);
    } else {
      p.set = compute_fu(s, static_cast<ActionIndex>(a));
      p.count = p.set.count();
    }
    if (interval_mode_ && p.lo > p.hi)
      throw LipschitzViolation(s, static_cast<ActionIndex>(a));
  }
  return row;
}

void UncertaintyMap::ensure_row(StateIndex s) {
  if (static_cast<std::size_t>(s) >= rows_.size()) rows_.resize(states_->size());
  if (!rows_[static_cast<std::size_t>(s)]) rows_[static_cast<std::size_t>(s)] = build_row(s);
}

IndexSet UncertaintyMap::compute_fu(StateIndex s, ActionIndex a) const {
  IndexSet result = universe_;
  for (const Triplet& t : knowledge_->triplets()) {
    double r =
        lip_.l_s * states_->distance(s, t.s) + lip_.l_a * actions_->distance(a, t.a);
    result.intersect_with(states_->hypersphere(t.s_next, r, universe_));
  }
  return result;
}

UpdateSummary UncertaintyMap::record_transition(StateIndex s, ActionIndex a,
                                                StateIndex s_next) {
  if (auto known = knowledge_->outcome(s, a)) {
    if (*known != s_next)
      throw KnowledgeConflict("conflicting outcome for a known (state, action) pair");
    return {0, false};
  }
  knowledge_->insert(s, a, s_next);

  UpdateSummary summary{0, true};
  std::vector<double> da(actions_->size());
  for (std::size_t j = 0; j < actions_->size(); ++j)
    da[j] = lip_.l_a * actions_->distance(static_cast<ActionIndex>(j), a);

  const double c = interval_mode_ ? states_->coord1(s_next) : 0.0;
  for (std::size_t src = 0; src < rows_.size(); ++src) {
    if (!rows_[src]) continue;
    const double ds = lip_.l_s * states_->distance(static_cast<StateIndex>(src), s);
    auto& row = *rows_[src];
    for (std::size_t j = 0; j < row.size(); ++j) {
      PairSet& p = row[j];
      const double r = ds + da[j] + kGeomEps;
      if (interval_mode_) {
        const double blo = c - r;
        const double bhi = c + r;
        if (blo <= p.member_lo && p.member_hi <= bhi) {
          // no member lost; still tighten the analytic interval
          p.lo = std::max(p.lo, blo);
          p.hi = std::min(p.hi, bhi);
          continue;
        }
        p.lo = std::max(p.lo, blo);
        p.hi = std::min(p.hi, bhi);
        if (p.lo > p.hi)
          throw LipschitzViolation(static_cast<StateIndex>(src),
                                   static_cast<ActionIndex>(j));
        std::size_t n = states_->count_in_interval(p.lo, p.hi);
        if (n != p.count) {
          auto [first, last] = states_->original_range(p.lo, p.hi);
          const double lo = p.lo, hi = p.hi;
          p.set.intersect_with_range_and_tail(
              first, last, states_->original_count(), [&](std::size_t idx) {
                double x = states_->coord1(static_cast<StateIndex>(idx));
                return x >= lo && x <= hi;
              });
          summary.removed += p.count - n;
          p.count = n;
        }
        refresh_member_bounds(p);
      } else {
        const Vec& center = states_->coords(s_next);
        std::vector<std::size_t> gone;
        p.set.for_each([&](std::size_t m) {
          if (states_->distance_to(static_cast<StateIndex>(m), center) > r) gone.push_back(m);
        });
        if (auto k = knowledge_->outcome(static_cast<StateIndex>(src),
                                         static_cast<ActionIndex>(j));
            k && std::find(gone.begin(), gone.end(), static_cast<std::size_t>(*k)) !=
                     gone.end())
          throw LipschitzViolation(static_cast<StateIndex>(src),
                                   static_cast<ActionIndex>(j));
        for (std::size_t m : gone) p.set.erase(m);
        p.count -= gone.size();
        summary.removed += gone.size();
      }
    }
  }
  return summary;
}

std::size_t UncertaintyMap::expand_knowledge() {
  std::size_t added = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t s = 0; s < rows_.size(); ++s) {
      if (!rows_[s]) continue;
      for (std::size_t a = 0; a < actions_->size(); ++a) {
        if (knowledge_->contains(static_cast<StateIndex>(s), static_cast<ActionIndex>(a)))
          continue;
        StateIndex outcome = -1;
        if (interval_mode_ && !discrete_outcomes_) {
          // continuous-state promotion: the constraint interval must pin the
          // outcome to a point; a lone sampled candidate in a wide interval
          // proves nothing about the true successor
          const PairSet& p = (*rows_[s])[a];
          if (p.hi - p.lo > 3 * kGeomEps) continue;
          const double mid = 0.5 * (p.lo + p.hi);
          if (p.count > 0) {
            double best = std::numeric_limits<double>::infinity();
            p.set.for_each([&](std::size_t m) {
              double d = std::abs(states_->coord1(static_cast<StateIndex>(m)) - mid);
              if (d < best) {
                best = d;
                outcome = static_cast<StateIndex>(m);
              }
            });
          } else {
            Vec c(1);
            c[0] = mid;
            auto [idx, fresh] = states_->intern(c);
            if (fresh) notify_state_added(idx);
            outcome = idx;
          }
        } else {
          const PairSet& p = (*rows_[s])[a];
          if (p.count != 1) continue;
          outcome = static_cast<StateIndex>(*p.set.sole_element());
        }
        record_transition(static_cast<StateIndex>(s), static_cast<ActionIndex>(a), outcome);
        ++added;
        changed = true;
      }
    }
  }
  return added;
}

std::size_t UncertaintyMap::total_uncertainty() const {
  std::size_t total = 0;
  for (std::size_t s = 0; s < states_->original_count(); ++s) {
    const auto& row = *rows_[s];
    for (const PairSet& p : row) total += p.count;
  }
  return total;
}

void UncertaintyMap::notify_state_added(StateIndex idx) {
  universe_.resize(states_->size());
  universe_.insert(static_cast<std::size_t>(idx));
  rows_.resize(states_->size());
  const double x = interval_mode_ ? states_->coord1(idx) : 0.0;
  for (std::size_t src = 0; src < rows_.size(); ++src) {
    if (!rows_[src]) continue;
    auto& row = *rows_[src];
    for (std::size_t j = 0; j < row.size(); ++j) {
      PairSet& p = row[j];
      p.set.resize(states_->size());
      bool member;
      if (interval_mode_) {
        member = x >= p.lo && x <= p.hi;
      } else {
        member = true;
        for (const Triplet& t : knowledge_->triplets()) {
          double r = lip_.l_s * states_->distance(static_cast<StateIndex>(src), t.s) +
                     lip_.l_a * actions_->distance(static_cast<ActionIndex>(j), t.a) +
                     kGeomEps;
          if (states_->distance(idx, t.s_next) > r) {
            member = false;
            break;
          }
        }
      }
      if (member) {
        p.set.insert(static_cast<std::size_t>(idx));
        ++p.count;
        if (interval_mode_) {
          p.member_lo = std::min(p.member_lo, x);
          p.member_hi = std::max(p.member_hi, x);
        }
      }
    }
  }
}

}  // namespace lipsafe
