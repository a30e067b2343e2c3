#include "lipsafe/core.hpp"

#include <limits>

namespace lipsafe {

StateTable::StateTable(std::vector<Vec> samples, double dedup_tolerance, Metric metric)
    : entries_(std::move(samples)),
      original_count_(entries_.size()),
      dedup_tolerance_(dedup_tolerance),
      metric_(metric) {
  if (dedup_tolerance_ < 0) throw std::invalid_argument("dedup_tolerance must be >= 0");
  for (std::size_t i = 0; i < entries_.size(); ++i)
    for (std::size_t j = i + 1; j < entries_.size(); ++j)
      if (metric_(entries_[i], entries_[j]) <= dedup_tolerance_)
        throw std::invalid_argument("initial samples closer than dedup_tolerance");

  if (!entries_.empty() && entries_[0].size() == 1) {
    sorted_1d_ = true;
    original_coords_.reserve(entries_.size());
    for (const auto& e : entries_) original_coords_.push_back(e[0]);
    for (std::size_t i = 1; i < original_coords_.size(); ++i)
      if (original_coords_[i] <= original_coords_[i - 1]) {
        sorted_1d_ = false;
        break;
      }
    if (!sorted_1d_) original_coords_.clear();
  }
}

std::pair<StateIndex, bool> StateTable::intern(const Vec& coords) {
  if (!coords.allFinite()) throw std::invalid_argument("non-finite state coordinates");
  StateIndex best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    double d = metric_(entries_[i], coords);
    if (d <= dedup_tolerance_ && d < best_d) {
      best_d = d;
      best = static_cast<StateIndex>(i);
    }
  }
  if (best >= 0) return {best, false};
  entries_.push_back(coords);
  StateIndex idx = static_cast<StateIndex>(entries_.size() - 1);
  if (sorted_1d_) {
    std::pair<double, StateIndex> item{coords[0], idx};
    appended_sorted_.insert(
        std::lower_bound(appended_sorted_.begin(), appended_sorted_.end(), item), item);
  }
  return {idx, true};
}

IndexSet StateTable::hypersphere(StateIndex center, double radius,
                                 const IndexSet& universe) const {
  IndexSet out(universe.capacity());
  const Vec& c = coords(center);
  universe.for_each([&](std::size_t j) {
    if (metric_(entries_[j], c) <= radius + kGeomEps) out.insert(j);
  });
  return out;
}

std::pair<std::ptrdiff_t, std::ptrdiff_t> StateTable::original_range(double lo,
                                                                     double hi) const {
  auto first = std::lower_bound(original_coords_.begin(), original_coords_.end(), lo);
  auto last = std::upper_bound(original_coords_.begin(), original_coords_.end(), hi);
  return {first - original_coords_.begin(), last - original_coords_.begin() - 1};
}

std::size_t StateTable::count_in_interval(double lo, double hi) const {
  if (lo > hi) return 0;
  auto [first, last] = original_range(lo, hi);
  std::size_t n = last >= first ? static_cast<std::size_t>(last - first + 1) : 0;
  auto a = std::lower_bound(appended_sorted_.begin(), appended_sorted_.end(),
                            std::pair{lo, StateIndex{-1}});
  auto b = std::upper_bound(appended_sorted_.begin(), appended_sorted_.end(),
                            std::pair{hi, std::numeric_limits<StateIndex>::max()});
  return n + static_cast<std::size_t>(b - a);
}

}  // namespace lipsafe
