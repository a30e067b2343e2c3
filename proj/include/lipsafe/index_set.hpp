#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace lipsafe {

/// Dense bit-set over state indices. Capacity grows as states are interned;
/// bits beyond the current capacity read as absent.
class IndexSet {
 public:
  IndexSet() = default;
  explicit IndexSet(std::size_t capacity) : bits_((capacity + 63) / 64, 0), capacity_(capacity) {}

  static IndexSet full(std::size_t capacity) {
    IndexSet s(capacity);
    for (std::size_t i = 0; i < s.bits_.size(); ++i) s.bits_[i] = ~std::uint64_t{0};
    s.trim();
    return s;
  }

  std::size_t capacity() const { return capacity_; }

  void resize(std::size_t capacity) {
    bits_.resize((capacity + 63) / 64, 0);
    capacity_ = capacity;
    trim();
  }

  void insert(std::size_t i) { bits_[i / 64] |= std::uint64_t{1} << (i % 64); }
  void erase(std::size_t i) {
    if (i < capacity_) bits_[i / 64] &= ~(std::uint64_t{1} << (i % 64));
  }
  bool contains(std::size_t i) const {
    if (i >= capacity_) return false;
    return (bits_[i / 64] >> (i % 64)) & 1;
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto w : bits_) n += std::popcount(w);
    return n;
  }

  bool empty() const {
    for (auto w : bits_)
      if (w) return false;
    return true;
  }

  bool is_subset_of(const IndexSet& other) const {
    for (std::size_t i = 0; i < bits_.size(); ++i) {
      std::uint64_t ow = i < other.bits_.size() ? other.bits_[i] : 0;
      if (bits_[i] & ~ow) return false;
    }
    return true;
  }

  void intersect_with(const IndexSet& other) {
    for (std::size_t i = 0; i < bits_.size(); ++i)
      bits_[i] &= i < other.bits_.size() ? other.bits_[i] : 0;
  }

  /// Keeps only indices in [first, last] plus indices >= tail_begin for which
  /// tail_pred holds. Used for intersecting with a metric ball whose original
  /// (sorted-grid) part is a contiguous index range; appended states are
  /// filtered individually. Pass first > last for an empty grid part.
  template <typename TailPred>
  void intersect_with_range_and_tail(std::ptrdiff_t first, std::ptrdiff_t last,
                                     std::size_t tail_begin, TailPred tail_pred) {
    for (std::size_t w = 0; w < bits_.size(); ++w) {
      std::uint64_t keep = 0;
      std::ptrdiff_t base = static_cast<std::ptrdiff_t>(w) * 64;
      // grid part
      if (first <= last) {
        std::ptrdiff_t lo = std::max<std::ptrdiff_t>(first, base);
        std::ptrdiff_t hi = std::min<std::ptrdiff_t>(
            {last, base + 63, static_cast<std::ptrdiff_t>(tail_begin) - 1});
        if (lo <= hi) {
          std::uint64_t m = ~std::uint64_t{0} >> (63 - (hi - base));
          m &= ~std::uint64_t{0} << (lo - base);
          keep |= m;
        }
      }
      // appended part
      std::uint64_t word = bits_[w];
      std::uint64_t tail = word;
      if (base + 63 >= static_cast<std::ptrdiff_t>(tail_begin) && tail) {
        std::uint64_t tmask = 0;
        std::uint64_t probe = tail;
        while (probe) {
          int b = std::countr_zero(probe);
          probe &= probe - 1;
          std::size_t idx = static_cast<std::size_t>(base + b);
          if (idx >= tail_begin && tail_pred(idx)) tmask |= std::uint64_t{1} << b;
        }
        keep |= tmask;
      }
      bits_[w] = word & keep;
    }
  }

  std::optional<std::size_t> sole_element() const {
    std::optional<std::size_t> found;
    for (std::size_t w = 0; w < bits_.size(); ++w) {
      std::uint64_t word = bits_[w];
      if (!word) continue;
      if (found || (word & (word - 1))) return std::nullopt;
      found = w * 64 + static_cast<std::size_t>(std::countr_zero(word));
    }
    return found;
  }

  template <typename F>
  void for_each(F f) const {
    for (std::size_t w = 0; w < bits_.size(); ++w) {
      std::uint64_t word = bits_[w];
      while (word) {
        int b = std::countr_zero(word);
        word &= word - 1;
        f(w * 64 + static_cast<std::size_t>(b));
      }
    }
  }

  std::vector<std::size_t> to_vector() const {
    std::vector<std::size_t> v;
    v.reserve(count());
    for_each([&](std::size_t i) { v.push_back(i); });
    return v;
  }

  bool operator==(const IndexSet& other) const {
    std::size_t n = std::max(bits_.size(), other.bits_.size());
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t a = i < bits_.size() ? bits_[i] : 0;
      std::uint64_t b = i < other.bits_.size() ? other.bits_[i] : 0;
      if (a != b) return false;
    }
    return true;
  }

 private:
  void trim() {
    if (capacity_ % 64 && !bits_.empty())
      bits_.back() &= ~std::uint64_t{0} >> (64 - capacity_ % 64);
  }

  std::vector<std::uint64_t> bits_;
  std::size_t capacity_ = 0;
};

}  // namespace lipsafe
