#pragma once

#include <cstdint>
#include <string>

namespace contcount {

// Exact C(n, k) for 0 <= n <= 64 (all values fit in uint64_t). k outside
// [0, n] yields 0; n outside [0, 64] throws std::out_of_range. No floating
// point anywhere in the ranking machinery.
std::uint64_t binomial(int n, int k);

// An h-bit word encoding a root-to-leaf path, MSB = first branch. Bit i is
// the i-th least significant bit.
struct PathWord {
  std::uint64_t bits = 0;
  int width = 0;

  PathWord() = default;
  PathWord(std::uint64_t bits_, int width_);

  int popcount() const;
  bool bit(int i) const;
  // MSB-first digit string, for diagnostics.
  std::string to_string() const;

  friend bool operator==(const PathWord&, const PathWord&) = default;
};

int popcount(const PathWord& w);

// All-ones mask of the given width (1..64).
std::uint64_t word_mask(int width);

// Tree shape: words of `height` bits with exactly `zeros` zero bits are the
// usable leaves; capacity = C(height, zeros) - 1 of them get stream elements
// (the last balanced leaf is never assigned).
struct TreeGeometry {
  int height = 0;
  int zeros = 0;
  std::uint64_t capacity = 0;

  int ones() const { return height - zeros; }

  static TreeGeometry with_zeros(int height, int zeros);
  // zeros = height / 2; height must be even.
  static TreeGeometry balanced(int height);
};

// Smallest even height h with C(h, h/2) >= horizon + 1. Capped at the
// machine word: h <= 64, which covers horizons beyond 1.8e18.
TreeGeometry choose_height(std::uint64_t horizon);

// rank-th smallest (0-indexed) word of geom.height bits with geom.ones()
// set bits. Combinatorial number system; O(height).
PathWord balanced_unrank(const TreeGeometry& geom, std::uint64_t rank);

// Inverse of balanced_unrank. The word must have exactly geom.ones() set
// bits and geom.height width.
std::uint64_t balanced_rank(const TreeGeometry& geom, const PathWord& w);

// Next larger word with the same popcount, by constant-time word ops.
// Throws std::out_of_range on the largest such word.
PathWord next_balanced(const PathWord& w);

// Length of the least-significant maximal run of 1-bits, ignoring any
// trailing zeros below it. The word must be nonzero.
int trailing_ones_block(const PathWord& w);

}  // namespace contcount
