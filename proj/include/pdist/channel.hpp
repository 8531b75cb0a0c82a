#pragma once

// Pauli error model, noisy processing, and the structured (block) form of the
// coherent protocol states. Eve's error labels (u, v) index orthogonal
// sectors, so a family of labeled Alice-Bob pure states is an exact
// representation with Eve's registers left implicit; expand_with_eve() is the
// explicit-register path used as a test oracle at small n.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pdist/core.hpp"
#include "pdist/rng.hpp"

namespace pdist {

// canonical register names used by the protocol pipeline
namespace reg {
inline constexpr const char* kAliceKey = "A";
inline constexpr const char* kBobKey = "B";
inline constexpr const char* kNoiseShield = "Ap";    // purification of Alice's added noise
inline constexpr const char* kSyndromeShield = "Bp"; // Bob's error record
inline constexpr const char* kExtension = "Ax";      // Neumark extension
inline constexpr const char* kEveBit = "E1";
inline constexpr const char* kEvePhase = "E2";
}  // namespace reg

// Single-qubit Pauli rates p_uv, u = bit-flip bit, v = phase-flip bit
// (order: I, Z, X, XZ).
struct PauliDistribution {
  double p00 = 1, p01 = 0, p10 = 0, p11 = 0;

  PauliDistribution() = default;
  PauliDistribution(double i, double z, double x, double xz) : p00(i), p01(z), p10(x), p11(xz) {
    detail::require(p00 >= 0 && p01 >= 0 && p10 >= 0 && p11 >= 0,
                    "PauliDistribution: negative rate");
    detail::require(std::abs(p00 + p01 + p10 + p11 - 1.0) <= tol::kProbability,
                    "PauliDistribution: rates do not sum to 1");
  }

  double at(int u, int v) const {
    return u ? (v ? p11 : p10) : (v ? p01 : p00);
  }
};

struct ErrorPattern {
  BitString u, v;
  ErrorPattern(BitString bu, BitString bv) : u(bu), v(bv) {
    detail::require(u.width == v.width, "ErrorPattern: u and v lengths differ");
  }
  double probability(const PauliDistribution& d) const {
    double p = 1.0;
    for (int t = 0; t < u.width; ++t) p *= d.at(u.bit(t), v.bit(t));
    return p;
  }
};

enum class ProtocolKind { BB84, SixState, Custom };

struct ProtocolModel {
  ProtocolKind kind = ProtocolKind::BB84;
  double Q = 0.0;                                // observed bit-error rate
  std::optional<PauliDistribution> custom;       // for ProtocolKind::Custom

  ProtocolModel() = default;
  ProtocolModel(ProtocolKind k, double q_obs) : kind(k), Q(q_obs) {
    detail::require(Q >= 0 && Q < 0.5, "ProtocolModel: Q must be in [0, 1/2)");
  }
  static ProtocolModel custom_model(const PauliDistribution& d) {
    ProtocolModel m;
    m.kind = ProtocolKind::Custom;
    m.custom = d;
    m.Q = d.p10 + d.p11;
    return m;
  }
};

// BB84: bit and phase errors equal and uncorrelated, p_uv = q_u q_v with
// q_1 = Q. Six-state: all three nontrivial Paulis at rate Q/2.
inline PauliDistribution model_to_distribution(const ProtocolModel& m) {
  switch (m.kind) {
    case ProtocolKind::BB84: {
      const double q1 = m.Q, q0 = 1.0 - m.Q;
      return PauliDistribution(q0 * q0, q0 * q1, q1 * q0, q1 * q1);
    }
    case ProtocolKind::SixState: {
      detail::require(m.Q <= 2.0 / 3.0, "six-state: Q > 2/3 is infeasible");
      const double w = m.Q / 2.0;
      return PauliDistribution(1.0 - 3.0 * w, w, w, w);
    }
    case ProtocolKind::Custom:
      detail::require(m.custom.has_value(), "custom model lacks a distribution");
      return *m.custom;
  }
  throw std::logic_error("model_to_distribution: unreachable");
}

struct Marginals {
  double p_x = 0;            // bit-error rate   p10 + p11
  double p_z = 0;            // phase-error rate p01 + p11
  double p1_given_u0 = 0;    // phase-error rate conditioned on no bit error
  double p1_given_u1 = 0;    // ... conditioned on a bit error
  double p_u1 = 0;           // marginal bit-flip probability
  bool cond_u0_defined = true;  // false when the conditioning event has zero mass
  bool cond_u1_defined = true;

  double p1_given_u(int u) const { return u ? p1_given_u1 : p1_given_u0; }
  double p_u(int u) const { return u ? p_u1 : 1.0 - p_u1; }
};

inline Marginals marginals(const PauliDistribution& d) {
  Marginals m;
  m.p_x = d.p10 + d.p11;
  m.p_z = d.p01 + d.p11;
  m.p_u1 = m.p_x;
  const double pu0 = d.p00 + d.p01;
  if (pu0 > 0) {
    m.p1_given_u0 = d.p01 / pu0;
  } else {
    m.p1_given_u0 = 0;
    m.cond_u0_defined = false;
  }
  if (m.p_u1 > 0) {
    m.p1_given_u1 = d.p11 / m.p_u1;
  } else {
    m.p1_given_u1 = 0;
    m.cond_u1_defined = false;
  }
  return m;
}

// p~ = p_x (1-q) + q (1-p_x): channel bit errors convolved with Alice's
// deliberate flips at rate q.
inline double effective_bit_error(double p_x, double q) {
  detail::require(p_x >= 0 && p_x <= 1 && q >= 0 && q <= 1,
                  "effective_bit_error: rates outside [0,1]");
  return p_x * (1.0 - q) + q * (1.0 - p_x);
}

// ---------------------------------------------------------------------------
// block states

struct Block {
  BitString u, v;        // Eve's error labels
  BitString syndrome;    // phase syndrome; width 0 before phase correction
  double weight = 0;     // p_uv
  StateVector state;     // pure Alice-Bob state for this label
};

class BlockState {
 public:
  BlockState(int n, std::vector<Block> blocks) : n_(n), blocks_(std::move(blocks)) {
    detail::require(!blocks_.empty(), "BlockState: no blocks");
    double total = 0;
    for (const auto& b : blocks_) {
      detail::require(b.u.width == n_ && b.v.width == n_, "BlockState: label width != n");
      detail::require(b.weight >= 0, "BlockState: negative weight");
      detail::require(b.state.registers() == blocks_.front().state.registers(),
                      "BlockState: blocks disagree on register layout");
      total += b.weight;
    }
    detail::require(std::abs(total - 1.0) <= tol::kStructural,
                    "BlockState: weights sum to " + std::to_string(total));
  }

  int n() const { return n_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  const RegisterList& registers() const { return blocks_.front().state.registers(); }
  bool has_register(std::string_view name) const { return registers().has(name); }

 private:
  int n_;
  std::vector<Block> blocks_;
};

inline constexpr int kDefaultMaxBlockQubits = 8;

// The coherent key state: one block per error pattern (u, v), weight
// prod_i p_{u_i v_i}, state (1 (x) X^u Z^v) |Phi>^(x)n on registers A, B.
// Zero-weight patterns are omitted.
inline BlockState build_key_state(int n, const PauliDistribution& d,
                                  int max_n = kDefaultMaxBlockQubits) {
  detail::require(n >= 1, "build_key_state: n must be >= 1");
  if (n > max_n)
    throw budget_error("build_key_state: n = " + std::to_string(n) + " exceeds the configured max " +
                       std::to_string(max_n));
  const StateVector phi = bell_pairs(n, reg::kAliceKey, reg::kBobKey);
  std::vector<Block> blocks;
  const std::uint32_t dn = 1u << n;
  long long entries = 0;
  for (std::uint32_t uu = 0; uu < dn; ++uu)
    for (std::uint32_t vv = 0; vv < dn; ++vv) {
      const ErrorPattern e{BitString(uu, n), BitString(vv, n)};
      const double w = e.probability(d);
      if (w <= 0.0) continue;
      entries += static_cast<long long>(phi.dim());
      detail::check_budget(entries, "build_key_state");
      blocks.push_back({e.u, e.v, BitString::zeros(0), w, apply_pauli(phi, reg::kBobKey, e.u, e.v)});
    }
  return BlockState(n, std::move(blocks));
}

// Alice's added noise at rate q, kept coherent: each block's state is
// extended by Ap in sum_f sqrt(q_f) |f>_Ap X^f_A (...), with
// q_f = q^|f| (1-q)^(n-|f|).
inline BlockState apply_noisy_processing(const BlockState& s, double q) {
  detail::require(q >= 0 && q <= 1, "apply_noisy_processing: q outside [0,1]");
  detail::require(!s.has_register(reg::kNoiseShield),
                  "apply_noisy_processing: noise register already present");
  const int n = s.n();
  const std::uint64_t dn = std::uint64_t{1} << n;
  detail::check_budget(static_cast<long long>(s.blocks().size()) *
                           static_cast<long long>(s.registers().dim() * dn),
                       "apply_noisy_processing");

  std::vector<double> amp_f(static_cast<std::size_t>(dn));
  for (std::uint64_t f = 0; f < dn; ++f) {
    const int w = std::popcount(f);
    amp_f[static_cast<std::size_t>(f)] =
        std::sqrt(std::pow(q, w) * std::pow(1.0 - q, n - w));
  }

  RegisterList out_regs = s.registers();
  out_regs.append({reg::kNoiseShield, n});
  const int sh_a = out_regs.shift(reg::kAliceKey);
  const int sh_f = out_regs.shift(reg::kNoiseShield);
  const std::uint64_t old_dim = s.registers().dim();

  std::vector<Block> blocks;
  blocks.reserve(s.blocks().size());
  for (const auto& b : s.blocks()) {
    Vec out = Vec::Zero(static_cast<Eigen::Index>(old_dim * dn));
    for (std::uint64_t f = 0; f < dn; ++f) {
      const double a = amp_f[static_cast<std::size_t>(f)];
      if (a == 0.0) continue;
      for (std::uint64_t i = 0; i < old_dim; ++i) {
        // X^f on A, with |f> recorded in Ap
        const std::uint64_t j = ((i << n) ^ (f << sh_a)) | (f << sh_f);
        out(static_cast<Eigen::Index>(j)) += a * b.state.amplitudes()(static_cast<Eigen::Index>(i));
      }
    }
    blocks.push_back({b.u, b.v, b.syndrome, b.weight, StateVector(std::move(out), out_regs)});
  }
  return BlockState(n, std::move(blocks));
}

// Expands a block family to one explicit pure state including Eve's label
// registers |u>_E1 |v>_E2. Test oracle; refuses once budget-bound.
inline StateVector expand_with_eve(const BlockState& s) {
  detail::require(s.blocks().front().syndrome.width == 0,
                  "expand_with_eve: phase-corrected states carry classical sector labels");
  const int n = s.n();
  RegisterList regs = s.registers();
  regs.append({reg::kEveBit, n});
  regs.append({reg::kEvePhase, n});
  detail::check_budget(static_cast<long long>(regs.dim()), "expand_with_eve");
  const std::uint64_t dn = std::uint64_t{1} << n;
  Vec out = Vec::Zero(static_cast<Eigen::Index>(regs.dim()));
  for (const auto& b : s.blocks()) {
    const double w = std::sqrt(b.weight);
    const std::uint64_t tail = (static_cast<std::uint64_t>(b.u.value) << n) | b.v.value;
    for (std::uint64_t i = 0; i < b.state.dim(); ++i)
      out(static_cast<Eigen::Index>(i * dn * dn + tail)) +=
          w * b.state.amplitudes()(static_cast<Eigen::Index>(i));
  }
  return StateVector(std::move(out), std::move(regs));
}

// Mixes the blocks into a dense density operator on the common registers.
inline DensityOperator block_density(const BlockState& s) {
  const auto d = static_cast<long long>(s.registers().dim());
  detail::check_budget(d * d, "block_density");
  Mat rho = Mat::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (const auto& b : s.blocks())
    rho += b.weight * (b.state.amplitudes() * b.state.amplitudes().adjoint());
  return DensityOperator(std::move(rho), s.registers());
}

// ---------------------------------------------------------------------------
// parameter estimation

// Empirical Pauli frequencies plus a two-sided Hoeffding deviation bound,
// union-bounded over the four categories:
//   P(any |f_est - f| >= eps) <= 8 exp(-2 N eps^2) <= 1 - confidence.
inline std::pair<PauliDistribution, double> estimate_rates(
    std::span<const std::pair<int, int>> samples, double confidence) {
  detail::require(!samples.empty(), "estimate_rates: empty sample");
  detail::require(confidence > 0 && confidence < 1, "estimate_rates: confidence outside (0,1)");
  double c[2][2] = {{0, 0}, {0, 0}};
  for (const auto& [u, v] : samples) {
    detail::require((u == 0 || u == 1) && (v == 0 || v == 1),
                    "estimate_rates: outcomes must be bits");
    c[u][v] += 1.0;
  }
  const double N = static_cast<double>(samples.size());
  const PauliDistribution f_est(c[0][0] / N, c[0][1] / N, c[1][0] / N, c[1][1] / N);
  const double eps = std::sqrt(std::log(8.0 / (1.0 - confidence)) / (2.0 * N));
  return {f_est, eps};
}

// seeded i.i.d. sampler for the estimator's inputs
inline std::vector<std::pair<int, int>> sample_patterns(const PauliDistribution& d, int count,
                                                        std::uint64_t seed) {
  Rng rng(seed);
  const double w[4] = {d.p00, d.p01, d.p10, d.p11};
  std::vector<std::pair<int, int>> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const int c = rng.sample(std::span<const double>(w, 4));
    out.emplace_back(c >> 1, c & 1);
  }
  return out;
}

}  // namespace pdist
