#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "lipsafe/index_set.hpp"

namespace lipsafe {

using Vec = Eigen::VectorXd;
using StateIndex = int;
using ActionIndex = int;

/// Absolute slack added to every ball-membership comparison so float grid
/// arithmetic reproduces exact-arithmetic set membership.
inline constexpr double kGeomEps = 1e-9;

enum class MetricKind { euclidean };

struct Metric {
  MetricKind kind = MetricKind::euclidean;
  double operator()(const Vec& a, const Vec& b) const { return (a - b).norm(); }
};

struct LipschitzConstants {
  double l_s;
  double l_a;
  LipschitzConstants(double ls, double la) : l_s(ls), l_a(la) {
    if (!(ls > 0) || !std::isfinite(ls) || !(la > 0) || !std::isfinite(la))
      throw std::invalid_argument("Lipschitz constants must be positive and finite");
  }
};

/// Indexed universe of states: the initial uniform samples followed by states
/// interned while running. Indices are stable; downstream code identifies
/// states by index only.
class StateTable {
 public:
  StateTable(std::vector<Vec> samples, double dedup_tolerance = kGeomEps,
             Metric metric = Metric{});

  std::size_t size() const { return entries_.size(); }
  std::size_t original_count() const { return original_count_; }
  double dedup_tolerance() const { return dedup_tolerance_; }
  const Vec& coords(StateIndex i) const { return entries_.at(static_cast<std::size_t>(i)); }
  const Metric& metric() const { return metric_; }

  double distance(StateIndex i, StateIndex j) const {
    return metric_(coords(i), coords(j));
  }
  double distance_to(StateIndex i, const Vec& p) const { return metric_(coords(i), p); }

  /// Index of the existing entry within dedup_tolerance (nearest wins, lowest
  /// index on ties), or a freshly appended index.
  std::pair<StateIndex, bool> intern(const Vec& coords);

  /// {j in universe : d(center, j) <= radius + eps}
  IndexSet hypersphere(StateIndex center, double radius, const IndexSet& universe) const;

  /// True when states are scalars and the original samples are strictly
  /// ascending; enables the interval fast path for ball arithmetic.
  bool sorted_1d() const { return sorted_1d_; }
  double coord1(StateIndex i) const { return entries_[static_cast<std::size_t>(i)][0]; }

  /// Inclusive index range of original samples with coordinate in [lo, hi]
  /// (1-D only). first > last when empty.
  std::pair<std::ptrdiff_t, std::ptrdiff_t> original_range(double lo, double hi) const;

  /// Number of universe states (original + appended) with coordinate in
  /// [lo, hi] (1-D only).
  std::size_t count_in_interval(double lo, double hi) const;

  /// Appended states with coordinate in [lo, hi], ascending coordinate (1-D).
  std::span<const std::pair<double, StateIndex>> appended_sorted() const {
    return appended_sorted_;
  }

 private:
  std::vector<Vec> entries_;
  std::size_t original_count_;
  double dedup_tolerance_;
  Metric metric_;
  bool sorted_1d_ = false;
  std::vector<double> original_coords_;                    // 1-D, ascending
  std::vector<std::pair<double, StateIndex>> appended_sorted_;  // 1-D
};

/// Fixed action universe sampled once up front.
class ActionTable {
 public:
  explicit ActionTable(std::vector<Vec> entries, Metric metric = Metric{})
      : entries_(std::move(entries)), metric_(metric) {
    for (std::size_t i = 0; i < entries_.size(); ++i)
      for (std::size_t j = i + 1; j < entries_.size(); ++j)
        if (metric_(entries_[i], entries_[j]) == 0.0)
          throw std::invalid_argument("duplicate action entries");
  }

  std::size_t size() const { return entries_.size(); }
  const Vec& coords(ActionIndex i) const { return entries_.at(static_cast<std::size_t>(i)); }
  double distance(ActionIndex i, ActionIndex j) const {
    return metric_(coords(i), coords(j));
  }

 private:
  std::vector<Vec> entries_;
  Metric metric_;
};

struct Triplet {
  StateIndex s;
  ActionIndex a;
  StateIndex s_next;
};

struct KnowledgeConflict : std::logic_error {
  using std::logic_error::logic_error;
};

/// Certain transition triplets. Insert-only; rejects a second outcome for the
/// same (s, a) since the underlying MDP is deterministic.
class KnowledgeSet {
 public:
  bool contains(StateIndex s, ActionIndex a) const { return outcome_.count(key(s, a)) > 0; }

  std::optional<StateIndex> outcome(StateIndex s, ActionIndex a) const {
    auto it = outcome_.find(key(s, a));
    if (it == outcome_.end()) return std::nullopt;
    return it->second;
  }

  /// Returns false when the triplet was already present.
  bool insert(StateIndex s, ActionIndex a, StateIndex s_next) {
    auto [it, fresh] = outcome_.try_emplace(key(s, a), s_next);
    if (!fresh) {
      if (it->second != s_next)
        throw KnowledgeConflict("conflicting outcome for a known (state, action) pair");
      return false;
    }
    triplets_.push_back({s, a, s_next});
    if (static_cast<std::size_t>(s) >= adjacency_.size())
      adjacency_.resize(static_cast<std::size_t>(s) + 1);
    auto& edges = adjacency_[static_cast<std::size_t>(s)];
    edges.insert(std::lower_bound(edges.begin(), edges.end(), std::pair{a, s_next}),
                 {a, s_next});
    return true;
  }

  std::span<const Triplet> triplets() const { return triplets_; }
  std::size_t size() const { return triplets_.size(); }

  /// Outgoing edges of s as (action, outcome), ascending action index.
  std::span<const std::pair<ActionIndex, StateIndex>> edges(StateIndex s) const {
    static const std::vector<std::pair<ActionIndex, StateIndex>> kEmpty;
    if (static_cast<std::size_t>(s) >= adjacency_.size()) return kEmpty;
    return adjacency_[static_cast<std::size_t>(s)];
  }

 private:
  static std::uint64_t key(StateIndex s, ActionIndex a) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s)) << 32) |
           static_cast<std::uint32_t>(a);
  }

  std::vector<Triplet> triplets_;
  std::unordered_map<std::uint64_t, StateIndex> outcome_;
  std::vector<std::vector<std::pair<ActionIndex, StateIndex>>> adjacency_;
};

}  // namespace lipsafe
