#pragma once

// Grid-backed set algebra over a uniform time axis.
//
// A CoverageSet is a bit mask over the cells of a TimeGrid.  Cell j covers
// [t0 + j*dt, t0 + (j+1)*dt) and belongs to a set iff the set's defining
// predicate holds at the cell's left edge.  The measure of a set is
// dt * popcount, so inclusion-exclusion identities hold exactly.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace covgame {

class TimeGrid {
 public:
  TimeGrid() = default;

  TimeGrid(double t0, double tf, double dt) : t0_(t0), tf_(tf), dt_(dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("TimeGrid: dt must be positive and finite");
    if (!(tf > t0) || !std::isfinite(tf) || !std::isfinite(t0))
      throw std::invalid_argument("TimeGrid: tf must exceed t0");
    const double steps = std::round((tf - t0) / dt);
    if (steps < 1.0) throw std::invalid_argument("TimeGrid: fewer than one step");
    n_steps_ = static_cast<std::size_t>(steps);
  }

  double t0() const { return t0_; }
  double tf() const { return tf_; }
  double dt() const { return dt_; }
  std::size_t n_steps() const { return n_steps_; }
  double duration() const { return tf_ - t0_; }

  /// Left edge of cell j.
  double cell_start(std::size_t j) const { return t0_ + static_cast<double>(j) * dt_; }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  double t0_ = 0.0;
  double tf_ = 1.0;
  double dt_ = 1.0;
  std::size_t n_steps_ = 1;
};

class CoverageSet {
 public:
  using Word = std::uint64_t;
  static constexpr std::size_t kWordBits = 64;

  CoverageSet() = default;

  /// Empty set on `grid`.
  explicit CoverageSet(const TimeGrid& grid)
      : grid_(grid), words_((grid.n_steps() + kWordBits - 1) / kWordBits, Word{0}) {}

  static CoverageSet from_bools(const TimeGrid& grid, std::span<const bool> cells) {
    if (cells.size() != grid.n_steps()) throw std::invalid_argument("CoverageSet: mask length does not match grid");
    CoverageSet s(grid);
    for (std::size_t j = 0; j < cells.size(); ++j)
      if (cells[j]) s.insert(j);
    return s;
  }

  /// Parses a string of '0'/'1' characters, cell 0 first.
  static CoverageSet from_string(const TimeGrid& grid, const std::string& bits) {
    if (bits.size() != grid.n_steps()) throw std::invalid_argument("CoverageSet: mask length does not match grid");
    CoverageSet s(grid);
    for (std::size_t j = 0; j < bits.size(); ++j) {
      if (bits[j] == '1')
        s.insert(j);
      else if (bits[j] != '0')
        throw std::invalid_argument("CoverageSet: mask string must contain only 0 and 1");
    }
    return s;
  }

  /// Takes packed words, cell j at bit j % 64 of word j / 64.  Bits past the
  /// end of the grid are cleared.
  static CoverageSet from_words(const TimeGrid& grid, std::vector<Word> words) {
    CoverageSet s(grid);
    if (words.size() != s.words_.size()) throw std::invalid_argument("CoverageSet: word count does not match grid");
    s.words_ = std::move(words);
    s.clear_tail();
    return s;
  }

  /// Every cell of the grid.
  static CoverageSet full(const TimeGrid& grid) {
    CoverageSet s(grid);
    std::fill(s.words_.begin(), s.words_.end(), ~Word{0});
    s.clear_tail();
    return s;
  }

  const TimeGrid& grid() const { return grid_; }
  std::size_t size() const { return grid_.n_steps(); }

  bool contains(std::size_t j) const { return (words_[j / kWordBits] >> (j % kWordBits)) & Word{1}; }
  void insert(std::size_t j) { words_[j / kWordBits] |= Word{1} << (j % kWordBits); }
  void erase(std::size_t j) { words_[j / kWordBits] &= ~(Word{1} << (j % kWordBits)); }

  std::size_t count() const {
    std::size_t n = 0;
    for (Word w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  bool empty() const {
    return std::all_of(words_.begin(), words_.end(), [](Word w) { return w == 0; });
  }

  /// Lebesgue measure in seconds.
  double measure() const { return grid_.dt() * static_cast<double>(count()); }

  bool is_subset_of(const CoverageSet& other) const {
    check_same_grid(other);
    for (std::size_t i = 0; i < words_.size(); ++i)
      if (words_[i] & ~other.words_[i]) return false;
    return true;
  }

  std::span<const Word> words() const { return words_; }

  std::string to_string() const {
    std::string out(size(), '0');
    for (std::size_t j = 0; j < size(); ++j)
      if (contains(j)) out[j] = '1';
    return out;
  }

  CoverageSet& operator|=(const CoverageSet& o) {
    check_same_grid(o);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
    return *this;
  }
  CoverageSet& operator&=(const CoverageSet& o) {
    check_same_grid(o);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
    return *this;
  }
  CoverageSet& operator-=(const CoverageSet& o) {
    check_same_grid(o);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= ~o.words_[i];
    return *this;
  }

  friend bool operator==(const CoverageSet&, const CoverageSet&) = default;

  /// Grid mismatch is a programming fault, not a recoverable condition.
  void check_same_grid(const CoverageSet& o) const {
    if (!(grid_ == o.grid_)) throw std::logic_error("CoverageSet: operands live on different time grids");
  }

 private:
  void clear_tail() {
    const std::size_t rem = grid_.n_steps() % kWordBits;
    if (rem != 0 && !words_.empty()) words_.back() &= (Word{1} << rem) - 1;
  }

  TimeGrid grid_;
  std::vector<Word> words_ = std::vector<Word>(1, Word{0});
};

inline CoverageSet set_union(CoverageSet a, const CoverageSet& b) { return a |= b; }
inline CoverageSet intersect(CoverageSet a, const CoverageSet& b) { return a &= b; }
inline CoverageSet difference(CoverageSet a, const CoverageSet& b) { return a -= b; }

inline CoverageSet operator|(CoverageSet a, const CoverageSet& b) { return a |= b; }
inline CoverageSet operator&(CoverageSet a, const CoverageSet& b) { return a &= b; }
inline CoverageSet operator-(CoverageSet a, const CoverageSet& b) { return a -= b; }

inline double measure(const CoverageSet& s) { return s.measure(); }

/// |a - b| without materializing the difference.
inline double difference_measure(const CoverageSet& a, const CoverageSet& b) {
  a.check_same_grid(b);
  const auto wa = a.words();
  const auto wb = b.words();
  std::size_t n = 0;
  for (std::size_t i = 0; i < wa.size(); ++i) n += static_cast<std::size_t>(std::popcount(wa[i] & ~wb[i]));
  return a.grid().dt() * static_cast<double>(n);
}

/// Left fold of union.  An empty list yields the empty set on `grid`.
inline CoverageSet union_many(std::span<const CoverageSet> sets, const TimeGrid& grid) {
  CoverageSet out(grid);
  for (const auto& s : sets) out |= s;
  return out;
}

inline CoverageSet union_many(std::span<const CoverageSet> sets) {
  if (sets.empty()) throw std::invalid_argument("union_many: empty list needs an explicit grid");
  return union_many(sets, sets.front().grid());
}

}  // namespace covgame
