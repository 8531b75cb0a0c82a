#pragma once

// Asymptotic key-rate formula, optimization of Alice's added noise, and
// threshold finding:
//   R = 1 - H2(p~) - sum_u p_u (H2(p_{1|u}) - H2(lambda+_u)).
// R(q = 1/2) = 0 identically (p~ = 1/2 and lambda+_u = 1 - p_{1|u}), so the
// threshold is where the supremum over q < 1/2 stops being positive.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "pdist/channel.hpp"
#include "pdist/core.hpp"

namespace pdist {

// larger eigenvalue of sigma_u: 1/2 (1 + sqrt(1 - 16 q (1-q) p (1-p)))
inline double lambda_plus(double q, double p1u) {
  detail::require(q >= 0 && q <= 1 && p1u >= 0 && p1u <= 1, "lambda_plus: rates outside [0,1]");
  double radicand = 1.0 - 16.0 * q * (1.0 - q) * p1u * (1.0 - p1u);
  detail::require(radicand >= -tol::kProbability, "lambda_plus: radicand below tolerance");
  if (radicand < 0) radicand = 0;
  return 0.5 * (1.0 + std::sqrt(radicand));
}

struct RateInput {
  PauliDistribution dist;
  double q = 0;

  RateInput(PauliDistribution d, double noise) : dist(d), q(noise) {
    detail::require(q >= 0 && q <= 0.5, "RateInput: q outside [0, 1/2]");
  }
};

struct RateResult {
  double R = 0;
  double bit_cost = 0;     // H2(p~)
  double phase_cost = 0;   // sum_u p_u H2(p_{1|u})
  double shield_gain = 0;  // sum_u p_u H2(lambda+_u)
  double p_tilde = 0;
};

inline RateResult key_rate(const RateInput& in) {
  const auto m = marginals(in.dist);
  RateResult r;
  r.p_tilde = effective_bit_error(m.p_x, in.q);
  r.bit_cost = binary_entropy(r.p_tilde);
  for (int u = 0; u < 2; ++u) {
    const double pu = m.p_u(u);
    if (pu <= 0) continue;  // zero-mass conditionals contribute nothing
    const double p1u = m.p1_given_u(u);
    r.phase_cost += pu * binary_entropy(p1u);
    r.shield_gain += pu * binary_entropy(lambda_plus(in.q, p1u));
  }
  r.R = 1.0 - r.bit_cost - r.phase_cost + r.shield_gain;
  return r;
}

struct OptimizeResult {
  double q_star = 0;
  double R_star = 0;
};

// Maximizes R over q in [0, 1/2]: 201-point grid, extra probes hugging the
// q -> 1/2 boundary (the near-threshold maximum lives there), then
// golden-section refinement of the best bracket to |dq| < 1e-8.
inline OptimizeResult optimize_q(const PauliDistribution& d) {
  std::vector<double> qs;
  for (int i = 0; i <= 200; ++i) qs.push_back(0.5 * static_cast<double>(i) / 200.0);
  for (double delta : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) qs.push_back(0.5 - delta);
  std::sort(qs.begin(), qs.end());

  auto rate_at = [&](double q) { return key_rate(RateInput(d, q)).R; };
  std::size_t best = 0;
  double best_r = rate_at(qs[0]);
  std::vector<double> rs(qs.size());
  rs[0] = best_r;
  for (std::size_t i = 1; i < qs.size(); ++i) {
    rs[i] = rate_at(qs[i]);
    if (rs[i] > best_r) {
      best_r = rs[i];
      best = i;
    }
  }

  double lo = best > 0 ? qs[best - 1] : qs[best];
  double hi = best + 1 < qs.size() ? qs[best + 1] : qs[best];
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - gr * (hi - lo);
  double dpt = lo + gr * (hi - lo);
  double fc = rate_at(c), fd = rate_at(dpt);
  while (hi - lo > 1e-8) {
    if (fc > fd) {
      hi = dpt;
      dpt = c;
      fd = fc;
      c = hi - gr * (hi - lo);
      fc = rate_at(c);
    } else {
      lo = c;
      c = dpt;
      fc = fd;
      dpt = lo + gr * (hi - lo);
      fd = rate_at(dpt);
    }
  }
  const double q_mid = 0.5 * (lo + hi);
  const double r_mid = rate_at(q_mid);
  if (r_mid > best_r) return {q_mid, r_mid};
  return {qs[best], best_r};
}

enum class QPolicy { Optimized, Fixed };

// Largest Q at which the (optimized or fixed-q) rate stays positive;
// bisection to 1e-5 in Q. Brackets widen automatically if needed.
inline double threshold(ProtocolKind kind, QPolicy policy = QPolicy::Optimized,
                        double fixed_q = 0.0) {
  detail::require(kind != ProtocolKind::Custom, "threshold: custom models need an explicit Q scan");
  auto r_star = [&](double Q) {
    const auto d = model_to_distribution(ProtocolModel(kind, Q));
    if (policy == QPolicy::Fixed) return key_rate(RateInput(d, fixed_q)).R;
    return optimize_q(d).R_star;
  };
  double lo = 0.0;
  double hi = (kind == ProtocolKind::BB84) ? 0.25 : 0.30;
  detail::require(r_star(lo) > tol::kRatePositive, "threshold: rate not positive at Q = 0");
  double hi_cap = (kind == ProtocolKind::SixState) ? 0.66 : 0.499;
  while (r_star(hi) > tol::kRatePositive && hi < hi_cap)
    hi = std::min(hi_cap, hi + 0.05);
  while (hi - lo > 1e-5) {
    const double mid = 0.5 * (lo + hi);
    if (r_star(mid) > tol::kRatePositive)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

struct CurveRow {
  double Q = 0;
  double q = 0;  // the q used (fixed or optimized)
  RateResult rate;
};

// Per-Q rate table. With the optimized policy the rate must be non-increasing
// in Q; that is asserted here (small numerical slack).
inline std::vector<CurveRow> rate_curve(ProtocolKind kind, std::span<const double> q_grid,
                                        QPolicy policy, double fixed_q = 0.0) {
  std::vector<CurveRow> rows;
  double prev = 2.0;
  for (const double Q : q_grid) {
    detail::require(Q >= 0 && Q < 0.5, "rate_curve: Q outside [0, 1/2)");
    const auto d = model_to_distribution(ProtocolModel(kind, Q));
    CurveRow row;
    row.Q = Q;
    if (policy == QPolicy::Fixed) {
      row.q = fixed_q;
      row.rate = key_rate(RateInput(d, fixed_q));
    } else {
      const auto opt = optimize_q(d);
      row.q = opt.q_star;
      row.rate = key_rate(RateInput(d, opt.q_star));
      if (row.rate.R > prev + 1e-9)
        throw std::logic_error("rate_curve: optimized rate increased with Q");
      prev = row.rate.R;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace pdist
