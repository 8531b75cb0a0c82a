#pragma once

// Test-only helpers: random instance generators and independent literal
// transcriptions of the coherent protocol states. Nothing here reuses the
// block-state pipeline it is used to check.

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <cstdint>

#include "pdist/channel.hpp"
#include "pdist/core.hpp"
#include "pdist/rng.hpp"

namespace oracle {

using pdist::BitString;
using pdist::cxd;
using pdist::DensityOperator;
using pdist::Mat;
using pdist::PauliDistribution;
using pdist::RegisterList;
using pdist::Rng;
using pdist::StateVector;
using pdist::Vec;

inline Vec random_pure(int dim, Rng& rng) {
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v(i) = cxd(rng.normal(), rng.normal());
  v /= v.norm();
  return v;
}

inline StateVector random_state(const RegisterList& regs, Rng& rng) {
  return StateVector(random_pure(static_cast<int>(regs.dim()), rng), regs);
}

// Ginibre construction; rank = 0 means full rank
inline DensityOperator random_density(const RegisterList& regs, Rng& rng, int rank = 0) {
  const int d = static_cast<int>(regs.dim());
  if (rank <= 0 || rank > d) rank = d;
  Mat g(d, rank);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < rank; ++j) g(i, j) = cxd(rng.normal(), rng.normal());
  Mat rho = g * g.adjoint();
  rho /= rho.trace().real();
  return DensityOperator(std::move(rho), regs);
}

// Haar-ish unitary: QR of a Ginibre matrix with phase fix
inline Mat random_unitary(int dim, Rng& rng) {
  Mat g(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) g(i, j) = cxd(rng.normal(), rng.normal());
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j) {
    const cxd d = r(j, j);
    q.col(j) *= (std::abs(d) > 0 ? d / std::abs(d) : cxd(1, 0));
  }
  return q;
}

// ---------------------------------------------------------------------------
// literal transcriptions of the coherent protocol states, with explicit Eve
// registers. Amplitude bookkeeping only; no reuse of the pipeline code.

// sum_{u,v} sqrt(p_uv) (1_A (x) X^u Z^v_B) |Phi>^n |u>_E1 |v>_E2
inline StateVector key_state_literal(int n, const PauliDistribution& d) {
  RegisterList regs{{pdist::reg::kAliceKey, n},
                    {pdist::reg::kBobKey, n},
                    {pdist::reg::kEveBit, n},
                    {pdist::reg::kEvePhase, n}};
  const std::uint64_t dn = std::uint64_t{1} << n;
  const double root = std::sqrt(static_cast<double>(dn));
  Vec out = Vec::Zero(static_cast<Eigen::Index>(regs.dim()));
  for (std::uint64_t u = 0; u < dn; ++u)
    for (std::uint64_t v = 0; v < dn; ++v) {
      const double w = pdist::ErrorPattern{BitString(static_cast<std::uint32_t>(u), n),
                                           BitString(static_cast<std::uint32_t>(v), n)}
                           .probability(d);
      if (w <= 0) continue;
      const double amp = std::sqrt(w) / root;
      for (std::uint64_t x = 0; x < dn; ++x) {
        // X^u Z^v |x>_B = (-1)^{v.x} |x^u>
        const double sign = (std::popcount(v & x) & 1) ? -1.0 : 1.0;
        const std::uint64_t idx = (((x << n) | (x ^ u)) << (2 * n)) | (u << n) | v;
        out(static_cast<Eigen::Index>(idx)) += sign * amp;
      }
    }
  return StateVector(std::move(out), std::move(regs));
}

// sum_{u,v,f} sqrt(p_uv q_f) |f>_Ap (X^f_A (x) X^u Z^v_B) |Phi>^n |u> |v>
inline StateVector noisy_state_literal(int n, const PauliDistribution& d, double q) {
  RegisterList regs{{pdist::reg::kAliceKey, n},
                    {pdist::reg::kBobKey, n},
                    {pdist::reg::kNoiseShield, n},
                    {pdist::reg::kEveBit, n},
                    {pdist::reg::kEvePhase, n}};
  const std::uint64_t dn = std::uint64_t{1} << n;
  const double root = std::sqrt(static_cast<double>(dn));
  Vec out = Vec::Zero(static_cast<Eigen::Index>(regs.dim()));
  for (std::uint64_t u = 0; u < dn; ++u)
    for (std::uint64_t v = 0; v < dn; ++v) {
      const double w = pdist::ErrorPattern{BitString(static_cast<std::uint32_t>(u), n),
                                           BitString(static_cast<std::uint32_t>(v), n)}
                           .probability(d);
      if (w <= 0) continue;
      for (std::uint64_t f = 0; f < dn; ++f) {
        const int fw = std::popcount(f);
        const double qf = std::pow(q, fw) * std::pow(1.0 - q, n - fw);
        if (qf <= 0) continue;
        const double amp = std::sqrt(w * qf) / root;
        for (std::uint64_t x = 0; x < dn; ++x) {
          // <a,b| X^f (x) X^u Z^v |Phi> with a = x^f, b = x^u, phase (-1)^{v.x}
          const double sign = (std::popcount(v & x) & 1) ? -1.0 : 1.0;
          std::uint64_t idx = (x ^ f);
          idx = (idx << n) | (x ^ u);
          idx = (idx << n) | f;
          idx = (idx << n) | u;
          idx = (idx << n) | v;
          out(static_cast<Eigen::Index>(idx)) += sign * amp;
        }
      }
    }
  return StateVector(std::move(out), std::move(regs));
}

// sum_{u,v,f} sqrt(p_uv q_f) Z^v_Ap |f>_Ap |u+f>_Bp Z^v_B |Phi>^n |u> |v>
// (the state after breeding-style bit correction with a full-rank code)
inline StateVector corrected_state_literal(int n, const PauliDistribution& d, double q) {
  RegisterList regs{{pdist::reg::kAliceKey, n},
                    {pdist::reg::kBobKey, n},
                    {pdist::reg::kNoiseShield, n},
                    {pdist::reg::kSyndromeShield, n},
                    {pdist::reg::kEveBit, n},
                    {pdist::reg::kEvePhase, n}};
  const std::uint64_t dn = std::uint64_t{1} << n;
  const double root = std::sqrt(static_cast<double>(dn));
  Vec out = Vec::Zero(static_cast<Eigen::Index>(regs.dim()));
  for (std::uint64_t u = 0; u < dn; ++u)
    for (std::uint64_t v = 0; v < dn; ++v) {
      const double w = pdist::ErrorPattern{BitString(static_cast<std::uint32_t>(u), n),
                                           BitString(static_cast<std::uint32_t>(v), n)}
                           .probability(d);
      if (w <= 0) continue;
      for (std::uint64_t f = 0; f < dn; ++f) {
        const int fw = std::popcount(f);
        const double qf = std::pow(q, fw) * std::pow(1.0 - q, n - fw);
        if (qf <= 0) continue;
        const double zf = (std::popcount(v & f) & 1) ? -1.0 : 1.0;  // Z^v on |f>_Ap
        const double amp = zf * std::sqrt(w * qf) / root;
        for (std::uint64_t x = 0; x < dn; ++x) {
          const double sign = (std::popcount(v & x) & 1) ? -1.0 : 1.0;  // Z^v_B |Phi>
          std::uint64_t idx = x;
          idx = (idx << n) | x;
          idx = (idx << n) | f;
          idx = (idx << n) | (u ^ f);
          idx = (idx << n) | u;
          idx = (idx << n) | v;
          out(static_cast<Eigen::Index>(idx)) += sign * amp;
        }
      }
    }
  return StateVector(std::move(out), std::move(regs));
}

}  // namespace oracle
