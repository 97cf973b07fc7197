#include "contcount/bitcodec.hpp"

#include <array>
#include <bit>
#include <limits>
#include <stdexcept>
#include <string>

namespace contcount {

namespace {

constexpr int kMaxWidth = 64;

using PascalTable =
    std::array<std::array<std::uint64_t, kMaxWidth + 1>, kMaxWidth + 1>;

consteval PascalTable build_pascal() {
  PascalTable t{};
  for (int n = 0; n <= kMaxWidth; ++n) {
    t[n][0] = 1;
    for (int k = 1; k <= n; ++k) {
      t[n][k] = t[n - 1][k - 1] + (k <= n - 1 ? t[n - 1][k] : 0);
    }
  }
  return t;
}

constexpr PascalTable kPascal = build_pascal();

}  // namespace

std::uint64_t binomial(int n, int k) {
  if (n < 0 || n > kMaxWidth) {
    throw std::out_of_range("binomial: n must be in [0, 64], got " +
                            std::to_string(n));
  }
  if (k < 0 || k > n) return 0;
  return kPascal[n][k];
}

std::uint64_t word_mask(int width) {
  if (width < 1 || width > kMaxWidth) {
    throw std::invalid_argument("word_mask: width must be in [1, 64]");
  }
  return width == kMaxWidth ? ~std::uint64_t{0}
                            : (std::uint64_t{1} << width) - 1;
}

PathWord::PathWord(std::uint64_t bits_, int width_)
    : bits(bits_), width(width_) {
  if (width < 1 || width > kMaxWidth) {
    throw std::invalid_argument("PathWord: width must be in [1, 64]");
  }
  if ((bits & ~word_mask(width)) != 0) {
    throw std::invalid_argument("PathWord: bits do not fit the width");
  }
}

int PathWord::popcount() const { return std::popcount(bits); }

bool PathWord::bit(int i) const {
  if (i < 0 || i >= width) {
    throw std::out_of_range("PathWord::bit: index outside the word");
  }
  return (bits >> i) & 1u;
}

std::string PathWord::to_string() const {
  std::string s(static_cast<std::size_t>(width), '0');
  for (int i = 0; i < width; ++i) {
    if ((bits >> i) & 1u) s[static_cast<std::size_t>(width - 1 - i)] = '1';
  }
  return s;
}

int popcount(const PathWord& w) { return w.popcount(); }

TreeGeometry TreeGeometry::with_zeros(int height, int zeros) {
  if (height < 1 || height > kMaxWidth) {
    throw std::invalid_argument("TreeGeometry: height must be in [1, 64]");
  }
  if (zeros < 0 || zeros > height) {
    throw std::invalid_argument("TreeGeometry: zeros must be in [0, height]");
  }
  std::uint64_t words = binomial(height, zeros);
  return TreeGeometry{height, zeros, words - 1};
}

TreeGeometry TreeGeometry::balanced(int height) {
  if (height < 2 || height % 2 != 0) {
    throw std::invalid_argument("TreeGeometry: balanced height must be even");
  }
  return with_zeros(height, height / 2);
}

TreeGeometry choose_height(std::uint64_t horizon) {
  if (horizon < 1) {
    throw std::invalid_argument("choose_height: horizon must be >= 1");
  }
  for (int h = 2; h <= kMaxWidth; h += 2) {
    // binomial(h, h/2) >= horizon + 1, written overflow-safe.
    if (binomial(h, h / 2) - 1 >= horizon) return TreeGeometry::balanced(h);
  }
  throw std::domain_error(
      "choose_height: horizon exceeds the 64-bit word capacity");
}

PathWord balanced_unrank(const TreeGeometry& geom, std::uint64_t rank) {
  const std::uint64_t total = binomial(geom.height, geom.zeros);
  if (rank >= total) {
    throw std::out_of_range("balanced_unrank: rank out of range");
  }
  std::uint64_t bits = 0;
  int ones_left = geom.ones();
  // MSB-down: a 1 at position i skips the C(i, ones_left) smaller words
  // that have a 0 there.
  for (int i = geom.height - 1; i >= 0; --i) {
    if (ones_left == 0) break;
    const std::uint64_t with_zero = binomial(i, ones_left);
    if (rank >= with_zero) {
      rank -= with_zero;
      bits |= std::uint64_t{1} << i;
      --ones_left;
    }
  }
  return PathWord(bits, geom.height);
}

std::uint64_t balanced_rank(const TreeGeometry& geom, const PathWord& w) {
  if (w.width != geom.height) {
    throw std::invalid_argument("balanced_rank: word width != tree height");
  }
  if (w.popcount() != geom.ones()) {
    throw std::invalid_argument(
        "balanced_rank: word popcount does not match the geometry");
  }
  std::uint64_t rank = 0;
  int ones_left = geom.ones();
  for (int i = geom.height - 1; i >= 0 && ones_left > 0; --i) {
    if ((w.bits >> i) & 1u) {
      rank += binomial(i, ones_left);
      --ones_left;
    }
  }
  return rank;
}

PathWord next_balanced(const PathWord& w) {
  if (w.bits == 0) {
    throw std::out_of_range("next_balanced: zero word has no successor");
  }
  const int ones = w.popcount();
  const std::uint64_t largest = word_mask(ones)
                                << (w.width - ones);  // all ones on top
  if (w.bits == largest) {
    throw std::out_of_range("next_balanced: word is the largest of its class");
  }
  // Same-popcount successor: move the lowest carry bit up one position and
  // compact the rest of the trailing ones block to the bottom.
  const std::uint64_t u = w.bits;
  const std::uint64_t c = u & (~u + 1);
  const std::uint64_t r = u + c;
  return PathWord(r | (((u ^ r) >> 2) / c), w.width);
}

int trailing_ones_block(const PathWord& w) {
  if (w.bits == 0) {
    throw std::invalid_argument("trailing_ones_block: word is zero");
  }
  const int skip = std::countr_zero(w.bits);
  return std::countr_one(w.bits >> skip);
}

}  // namespace contcount
