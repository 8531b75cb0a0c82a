#pragma once

#include <bit>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace pdist {

// Fixed-width bit string over GF(2). Bit 0 is the leftmost / most significant
// position, matching the qubit-0-is-the-most-significant-index-bit convention
// used by the state types: a register holding BitString b contributes the
// integer b.value to the amplitude index.
struct BitString {
  std::uint32_t value = 0;
  int width = 0;

  BitString() = default;
  BitString(std::uint32_t v, int w) : value(v), width(w) {
    if (w < 0 || w > 30) throw std::invalid_argument("BitString width out of range");
    if (w < 30 && v >> w) throw std::invalid_argument("BitString value exceeds width");
  }

  static BitString zeros(int w) { return BitString(0, w); }
  static BitString ones(int w) { return BitString(w ? ((1u << w) - 1) : 0, w); }

  static BitString parse(const std::string& s) {
    BitString b(0, static_cast<int>(s.size()));
    for (char c : s) {
      if (c != '0' && c != '1') throw std::invalid_argument("BitString::parse: expected 0/1");
      b.value = (b.value << 1) | static_cast<std::uint32_t>(c - '0');
    }
    return b;
  }

  // bit(0) is the most significant position
  int bit(int t) const {
    if (t < 0 || t >= width) throw std::out_of_range("BitString::bit");
    return static_cast<int>((value >> (width - 1 - t)) & 1u);
  }

  BitString with_bit(int t, int b) const {
    BitString r = *this;
    std::uint32_t mask = 1u << (width - 1 - t);
    r.value = b ? (r.value | mask) : (r.value & ~mask);
    return r;
  }

  int weight() const { return std::popcount(value); }

  // GF(2) inner product
  int dot(const BitString& o) const {
    if (o.width != width) throw std::invalid_argument("BitString::dot: width mismatch");
    return std::popcount(value & o.value) & 1;
  }

  BitString operator^(const BitString& o) const {
    if (o.width != width) throw std::invalid_argument("BitString::^: width mismatch");
    return BitString(value ^ o.value, width);
  }

  friend bool operator==(const BitString&, const BitString&) = default;
  friend auto operator<=>(const BitString& a, const BitString& b) {
    if (auto c = a.width <=> b.width; c != 0) return c;
    return a.value <=> b.value;
  }

  std::string str() const {
    std::string s(static_cast<std::size_t>(width), '0');
    for (int t = 0; t < width; ++t) s[static_cast<std::size_t>(t)] = bit(t) ? '1' : '0';
    return s;
  }
};

}  // namespace pdist
