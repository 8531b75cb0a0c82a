#pragma once

// Private states (pdits), twisting operators, and the trace-distance
// security metric. The metric purifies its input internally -- the
// adversary holds exactly the purifying system -- measures both key
// registers in the Z basis, and compares against the ideal uniform shared
// key kappa = sum_j |jj><jj| / d tensored with Eve's actual state.

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pdist/core.hpp"

namespace pdist {

// U_twist = sum_j |jj><jj|_AB (x) U^(j) on the shield. Off-diagonal key
// sectors |jk>, j != k, act as identity, which completes the operator to a
// unitary without touching any twisted pdit.
class TwistingOperator {
 public:
  TwistingOperator(int key_dim, std::vector<Mat> unitaries)
      : d_(key_dim), us_(std::move(unitaries)) {
    detail::require(d_ >= 2 && (d_ & (d_ - 1)) == 0, "TwistingOperator: key dim must be a power of 2");
    detail::require(static_cast<int>(us_.size()) == d_, "TwistingOperator: need one unitary per key value");
    for (const auto& u : us_) {
      detail::require(u.rows() == u.cols() && u.rows() == us_[0].rows(),
                      "TwistingOperator: shield dimensions disagree");
      detail::require((u.adjoint() * u - Mat::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff() <=
                          tol::kStructural,
                      "TwistingOperator: U^(j) not unitary");
    }
  }

  int key_dim() const { return d_; }
  int shield_dim() const { return static_cast<int>(us_[0].rows()); }
  const Mat& unitary(int j) const { return us_[static_cast<std::size_t>(j)]; }

  int key_qubits() const {
    int k = 0;
    while ((1 << k) < d_) ++k;
    return k;
  }

  // full unitary on (key_a, key_b, shield...)
  Operator to_operator(const RegisterList& regs) const {
    const int kq = key_qubits();
    detail::require(regs.count() >= 3, "TwistingOperator: need key A, key B and shield registers");
    detail::require(regs[0].qubits == kq && regs[1].qubits == kq,
                    "TwistingOperator: key register widths must match key dim");
    const auto ds = static_cast<Eigen::Index>(shield_dim());
    detail::require(regs.dim() == static_cast<std::size_t>(d_) * static_cast<std::size_t>(d_) *
                                      static_cast<std::size_t>(ds),
                    "TwistingOperator: register dims must be d*d*shield");
    Mat m = Mat::Zero(static_cast<Eigen::Index>(regs.dim()), static_cast<Eigen::Index>(regs.dim()));
    for (int j = 0; j < d_; ++j)
      for (int k = 0; k < d_; ++k) {
        const auto base = static_cast<Eigen::Index>((static_cast<std::size_t>(j) * d_ + k) * ds);
        m.block(base, base, ds, ds) = (j == k) ? us_[static_cast<std::size_t>(j)]
                                               : Mat::Identity(ds, ds);
      }
    return Operator::unitary(std::move(m), regs);
  }

 private:
  int d_;
  std::vector<Mat> us_;
};

struct PrivateState {
  DensityOperator gamma;  // on (key_a, key_b, shield...)
  int key_dim;
};

// |Phi_d> on two log2(d)-qubit registers
inline StateVector max_entangled(int key_dim, const std::string& a = "A", const std::string& b = "B") {
  int kq = 0;
  while ((1 << kq) < key_dim) ++kq;
  detail::require((1 << kq) == key_dim && key_dim >= 2, "max_entangled: dim must be a power of 2");
  return bell_pairs(kq, a, b);
}

// general conjugation by the (completed) twisting unitary
inline DensityOperator apply_twist(const DensityOperator& state, const TwistingOperator& t) {
  return t.to_operator(state.registers()).apply(state);
}

// gamma = U_twist (phi_d (x) rho_shield) U_twist^dagger. The key part must be
// the maximally entangled state -- that is what certifies the output as a
// pdit; use apply_twist for anything else.
inline PrivateState twist(const DensityOperator& phi_d, const DensityOperator& shield,
                          const TwistingOperator& t) {
  detail::require(phi_d.registers().count() == 2, "twist: key state must have exactly registers A, B");
  const int kq = t.key_qubits();
  detail::require(phi_d.registers()[0].qubits == kq && phi_d.registers()[1].qubits == kq,
                  "twist: key register widths must match the twisting operator");
  detail::require(static_cast<int>(shield.dim()) == t.shield_dim(),
                  "twist: shield dimension mismatch");
  const auto ideal = max_entangled(t.key_dim(), phi_d.registers()[0].name, phi_d.registers()[1].name);
  detail::require(fidelity(phi_d, ideal) >= 1.0 - 1e-9,
                  "twist: key part is not the maximally entangled state");
  return PrivateState{apply_twist(tensor(phi_d, shield), t), t.key_dim()};
}

// ---------------------------------------------------------------------------
// security metric

namespace detail {

// Shared implementation: the purification is given as a list of weighted pure
// states |Psi> = sum_k sqrt(w_k) |psi_k>|k>_E (any purification gives the
// same distance). Measures key_a, key_b in the Z basis and returns
// ||rho_KE - kappa (x) rho_E||_1.
inline double key_security_from_branches(const RegisterList& regs, std::span<const Vec> branches,
                                         std::span<const double> weights, std::string_view key_a,
                                         std::string_view key_b) {
  const auto& ra = regs.get(key_a);
  const auto& rb = regs.get(key_b);
  require(ra.qubits == rb.qubits, "key_security_distance: key registers must have equal width");
  const int kq = ra.qubits;
  const std::uint64_t dkey = std::uint64_t{1} << kq;
  const int sha = regs.shift(key_a);
  const int shb = regs.shift(key_b);

  // shield = everything but the two key registers
  std::vector<std::pair<int, int>> shield_spans;  // (shift, width)
  std::uint64_t dshield = 1;
  for (const auto& r : regs.items()) {
    if (r.name == key_a || r.name == key_b) continue;
    shield_spans.emplace_back(regs.shift(r.name), r.qubits);
    dshield <<= r.qubits;
  }

  const auto rank = static_cast<Eigen::Index>(branches.size());
  check_budget(static_cast<long long>(dkey) * static_cast<long long>(dkey) *
                   static_cast<long long>(dshield) * rank,
               "key_security_distance");

  // conditional Eve operators rho_E^(a,b); Eve's index is the branch label
  std::vector<Mat> cond(static_cast<std::size_t>(dkey * dkey), Mat::Zero(rank, rank));
  Mat rho_e = Mat::Zero(rank, rank);
  Mat amp(static_cast<Eigen::Index>(dshield), rank);  // per (a,b): shield x eve amplitudes
  for (std::uint64_t a = 0; a < dkey; ++a)
    for (std::uint64_t b = 0; b < dkey; ++b) {
      amp.setZero();
      for (Eigen::Index k = 0; k < rank; ++k) {
        const double w = std::sqrt(weights[static_cast<std::size_t>(k)]);
        for (std::uint64_t srow = 0; srow < dshield; ++srow) {
          std::uint64_t idx = (a << sha) | (b << shb);
          std::uint64_t rem = srow;
          for (auto it = shield_spans.rbegin(); it != shield_spans.rend(); ++it) {
            idx |= (rem & ((std::uint64_t{1} << it->second) - 1)) << it->first;
            rem >>= it->second;
          }
          amp(static_cast<Eigen::Index>(srow), k) =
              w * branches[static_cast<std::size_t>(k)](static_cast<Eigen::Index>(idx));
        }
      }
      Mat r = amp.adjoint() * amp;  // trace out the shield
      r = r.conjugate().eval();     // <k|rho|k'> = sum_s psi(s,k) psi*(s,k')
      cond[static_cast<std::size_t>(a * dkey + b)] = r;
      rho_e += r;
    }

  double dist = 0;
  const double unif = 1.0 / static_cast<double>(dkey);
  for (std::uint64_t a = 0; a < dkey; ++a)
    for (std::uint64_t b = 0; b < dkey; ++b) {
      Mat diff = cond[static_cast<std::size_t>(a * dkey + b)];
      if (a == b) diff -= unif * rho_e;
      Eigen::SelfAdjointEigenSolver<Mat> es(diff, Eigen::EigenvaluesOnly);
      dist += es.eigenvalues().cwiseAbs().sum();
    }
  return dist;
}

}  // namespace detail

// ||rho_KE - kappa (x) rho_E||_1 for the key obtained by measuring the two
// named registers of rho in the Z basis, with Eve holding the purification.
inline double key_security_distance(const DensityOperator& rho, std::string_view key_a = "A",
                                    std::string_view key_b = "B") {
  Eigen::SelfAdjointEigenSolver<Mat> es(rho.matrix());
  detail::require(es.info() == Eigen::Success, "key_security_distance: eigensolve failed");
  const Eigen::VectorXd lam = detail::clamped_spectrum(es.eigenvalues(), "key_security_distance");
  std::vector<Vec> branches;
  std::vector<double> weights;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) <= tol::kEigenFloor) continue;
    branches.push_back(es.eigenvectors().col(i));
    weights.push_back(lam(i));
  }
  return detail::key_security_from_branches(rho.registers(), branches, weights, key_a, key_b);
}

struct PditCertificate {
  double fidelity_to_ideal = 0;
  double epsilon = 0;  // sqrt(1 - F^2)
};

// Applies a candidate untwisting operation (unitary or isometry on shield
// and/or Bob-side registers), measures how close the key marginal is to
// |Phi_d>, and returns the epsilon certificate. The state is epsilon-secure
// whenever some untwist achieves fidelity F: distance <= 2 sqrt(1 - F^2).
inline PditCertificate verify_private_state(const DensityOperator& gamma,
                                            const Operator& candidate_untwist,
                                            std::string_view key_a = "A",
                                            std::string_view key_b = "B") {
  const DensityOperator untwisted = candidate_untwist.apply(gamma);
  const auto& ra = untwisted.registers().get(key_a);
  std::vector<std::string> keep{std::string(key_a), std::string(key_b)};
  const DensityOperator ab = untwisted.partial_trace(std::span<const std::string>(keep));
  const auto ideal = max_entangled(1 << ra.qubits, std::string(key_a), std::string(key_b));
  const double f = fidelity(ab, ideal);
  return {f, std::sqrt(std::max(0.0, 1.0 - f * f))};
}

}  // namespace pdist
