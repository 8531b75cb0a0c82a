#pragma once

// Binary linear codes given by full-rank parity-check matrices, with the
// syndrome/coset machinery used by bit and phase error correction.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pdist/bits.hpp"
#include "pdist/rng.hpp"

namespace pdist {

namespace gf2 {

// Row-reduce over GF(2); returns rank. Rows are width-n bit strings.
inline int rank(std::vector<std::uint32_t> rows, int n) {
  int r = 0;
  for (int col = 0; col < n && r < static_cast<int>(rows.size()); ++col) {
    const std::uint32_t mask = 1u << (n - 1 - col);
    int pivot = -1;
    for (int i = r; i < static_cast<int>(rows.size()); ++i)
      if (rows[static_cast<std::size_t>(i)] & mask) { pivot = i; break; }
    if (pivot < 0) continue;
    std::swap(rows[static_cast<std::size_t>(r)], rows[static_cast<std::size_t>(pivot)]);
    for (int i = 0; i < static_cast<int>(rows.size()); ++i)
      if (i != r && (rows[static_cast<std::size_t>(i)] & mask))
        rows[static_cast<std::size_t>(i)] ^= rows[static_cast<std::size_t>(r)];
    ++r;
  }
  return r;
}

}  // namespace gf2

// k x n parity-check matrix over GF(2) with independent rows. k = 0 (no
// checks) is allowed; k = n identifies every pattern exactly.
class LinearCode {
 public:
  LinearCode(int n, std::vector<BitString> rows) : n_(n), rows_(std::move(rows)) {
    if (n < 1 || n > 20) throw std::invalid_argument("LinearCode: n out of range");
    std::vector<std::uint32_t> raw;
    for (const auto& r : rows_) {
      if (r.width != n) throw std::invalid_argument("LinearCode: row width != n");
      raw.push_back(r.value);
    }
    if (gf2::rank(raw, n) != static_cast<int>(rows_.size()))
      throw std::invalid_argument("LinearCode: parity-check rows are not independent");
  }

  // syndrome identifies every error pattern (identity checks)
  static LinearCode full(int n) {
    std::vector<BitString> rows;
    for (int i = 0; i < n; ++i) rows.push_back(BitString::zeros(n).with_bit(i, 1));
    return LinearCode(n, std::move(rows));
  }

  // no checks at all
  static LinearCode none(int n) { return LinearCode(n, {}); }

  // k independent uniformly random rows
  static LinearCode random_code(int n, int k, Rng& rng) {
    if (k < 0 || k > n) throw std::invalid_argument("LinearCode::random_code: bad rank");
    std::vector<BitString> rows;
    std::vector<std::uint32_t> raw;
    while (static_cast<int>(rows.size()) < k) {
      const auto v = static_cast<std::uint32_t>(rng.raw() & ((1u << n) - 1));
      raw.push_back(v);
      if (gf2::rank(raw, n) == static_cast<int>(raw.size())) {
        rows.emplace_back(v, n);
      } else {
        raw.pop_back();
      }
    }
    return LinearCode(n, std::move(rows));
  }

  int n() const { return n_; }
  int k() const { return static_cast<int>(rows_.size()); }
  const std::vector<BitString>& rows() const { return rows_; }

  // width-k syndrome of an error pattern
  BitString syndrome(const BitString& e) const {
    if (e.width != n_) throw std::invalid_argument("LinearCode::syndrome: width mismatch");
    BitString s = BitString::zeros(k());
    for (int i = 0; i < k(); ++i) s = s.with_bit(i, rows_[static_cast<std::size_t>(i)].dot(e));
    return s;
  }

  // coset-leader decoding: minimum-weight pattern with the given syndrome,
  // ties broken by smallest value
  BitString decode(const BitString& s) const {
    build_tables();
    if (s.width != k()) throw std::invalid_argument("LinearCode::decode: syndrome width mismatch");
    return leaders_->at(s.value);
  }

  // basis of ker H (dimension n - k)
  std::vector<BitString> nullspace() const {
    // reduce H to row-echelon form, read the free-column solutions
    std::vector<std::uint32_t> rows;
    for (const auto& r : rows_) rows.push_back(r.value);
    std::vector<int> pivot_col(rows.size(), -1);
    int r = 0;
    for (int col = 0; col < n_ && r < static_cast<int>(rows.size()); ++col) {
      const std::uint32_t mask = 1u << (n_ - 1 - col);
      int pivot = -1;
      for (int i = r; i < static_cast<int>(rows.size()); ++i)
        if (rows[static_cast<std::size_t>(i)] & mask) { pivot = i; break; }
      if (pivot < 0) continue;
      std::swap(rows[static_cast<std::size_t>(r)], rows[static_cast<std::size_t>(pivot)]);
      for (int i = 0; i < static_cast<int>(rows.size()); ++i)
        if (i != r && (rows[static_cast<std::size_t>(i)] & mask))
          rows[static_cast<std::size_t>(i)] ^= rows[static_cast<std::size_t>(r)];
      pivot_col[static_cast<std::size_t>(r)] = col;
      ++r;
    }
    std::vector<bool> is_pivot(static_cast<std::size_t>(n_), false);
    for (int i = 0; i < r; ++i) is_pivot[static_cast<std::size_t>(pivot_col[static_cast<std::size_t>(i)])] = true;
    std::vector<BitString> basis;
    for (int free = 0; free < n_; ++free) {
      if (is_pivot[static_cast<std::size_t>(free)]) continue;
      BitString v = BitString::zeros(n_).with_bit(free, 1);
      for (int i = 0; i < r; ++i) {
        const BitString row(rows[static_cast<std::size_t>(i)], n_);
        if (row.bit(free)) v = v.with_bit(pivot_col[static_cast<std::size_t>(i)], 1);
      }
      basis.push_back(v);
    }
    return basis;
  }

  // all patterns with the given syndrome, sorted ascending
  std::vector<BitString> coset(const BitString& s) const {
    build_tables();
    std::vector<BitString> out;
    const BitString leader = leaders_->at(s.value);
    const auto ns = nullspace();
    const std::uint32_t count = 1u << ns.size();
    for (std::uint32_t m = 0; m < count; ++m) {
      BitString v = leader;
      for (std::size_t i = 0; i < ns.size(); ++i)
        if ((m >> i) & 1u) v = v ^ ns[i];
      out.push_back(v);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  void build_tables() const {
    if (leaders_) return;
    std::map<std::uint32_t, BitString> leaders;
    // enumerate patterns by ascending weight, then value, so the first hit
    // per syndrome is the coset leader
    std::vector<BitString> all;
    for (std::uint32_t v = 0; v < (1u << n_); ++v) all.emplace_back(v, n_);
    std::stable_sort(all.begin(), all.end(),
                     [](const BitString& a, const BitString& b) { return a.weight() < b.weight(); });
    for (const auto& e : all) {
      const auto s = syndrome(e).value;
      leaders.emplace(s, e);
    }
    leaders_ = std::move(leaders);
  }

  int n_;
  std::vector<BitString> rows_;
  mutable std::optional<std::map<std::uint32_t, BitString>> leaders_;
};

}  // namespace pdist
