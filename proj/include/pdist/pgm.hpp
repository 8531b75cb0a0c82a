#pragma once

// Pretty-good measurement over the phase-flipped ancilla ensemble, its exact
// average decoding error, and the Neumark isometric extension that the
// untwisting construction consumes.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "pdist/channel.hpp"
#include "pdist/codes.hpp"
#include "pdist/core.hpp"
#include "pdist/rng.hpp"

namespace pdist {

// |phi^v> = Z^v |phi>^(x)n with |phi> = sqrt(1-q)|0> + sqrt(q)|1>, on the
// noise-shield register. Overlaps obey <phi^0|phi^v> = (1-2q)^|v|.
inline StateVector phi_v(int n, double q, const BitString& v) {
  detail::require(v.width == n, "phi_v: |v| != n");
  detail::require(q >= 0 && q <= 1, "phi_v: q outside [0,1]");
  const double c0 = std::sqrt(1.0 - q), c1 = std::sqrt(q);
  Vec out(static_cast<Eigen::Index>(std::uint64_t{1} << n));
  for (std::uint64_t f = 0; f < (std::uint64_t{1} << n); ++f) {
    double a = 1.0;
    for (int t = 0; t < n; ++t) a *= ((f >> (n - 1 - t)) & 1) ? c1 : c0;
    const int sign = (std::popcount(f & v.value) & 1) ? -1 : 1;
    out(static_cast<Eigen::Index>(f)) = sign * a;
  }
  return StateVector(std::move(out), RegisterList{{reg::kNoiseShield, n}});
}

// Finite ensemble of pure states with priors. Label bookkeeping is optional;
// the phase-flip factory records the v strings so cosets can be traced back.
struct Ensemble {
  std::vector<Vec> states;
  std::vector<double> priors;
  std::vector<BitString> labels;  // may be empty for generic ensembles

  Ensemble(std::vector<Vec> sts, std::vector<double> prs, std::vector<BitString> lbls = {})
      : states(std::move(sts)), priors(std::move(prs)), labels(std::move(lbls)) {
    detail::require(!states.empty(), "Ensemble: empty");
    detail::require(states.size() == priors.size(), "Ensemble: prior count mismatch");
    double total = 0;
    for (std::size_t i = 0; i < states.size(); ++i) {
      detail::require(states[i].size() == states[0].size(), "Ensemble: dimension mismatch");
      detail::require(std::abs(states[i].norm() - 1.0) <= tol::kStructural,
                      "Ensemble: state not normalized");
      detail::require(priors[i] >= 0, "Ensemble: negative prior");
      total += priors[i];
    }
    detail::require(std::abs(total - 1.0) <= tol::kStructural, "Ensemble: priors do not sum to 1");
  }

  int dim() const { return static_cast<int>(states[0].size()); }

  // {|phi^v>, p_v} for v in `members`, priors proportional to the phase-error
  // profile prod_t p_z^{v_t} (1-p_z)^{1-v_t}
  static Ensemble phase_flip(int n, double q, std::span<const BitString> members, double p_z) {
    detail::require(!members.empty(), "Ensemble::phase_flip: empty member set");
    std::vector<Vec> states;
    std::vector<double> priors;
    std::vector<BitString> labels;
    double total = 0;
    for (const auto& v : members) {
      double p = 1.0;
      for (int t = 0; t < n; ++t) p *= v.bit(t) ? p_z : (1.0 - p_z);
      total += p;
      priors.push_back(p);
      labels.push_back(v);
      states.push_back(phi_v(n, q, v).amplitudes());
    }
    detail::require(total > 0, "Ensemble::phase_flip: zero total prior mass");
    for (auto& p : priors) p /= total;
    return Ensemble(std::move(states), std::move(priors), std::move(labels));
  }
};

// Rank-one POVM {|theta~^v><theta~^v|}, completed by the junk element
// I - sum_v |theta~^v><theta~^v| (decoding failure). For the PGM the sum is
// exactly the projector onto the ensemble's span.
struct RankOnePOVM {
  std::vector<Vec> theta_tilde;

  int dim() const { return static_cast<int>(theta_tilde.at(0).size()); }

  Mat element_sum() const {
    Mat s = Mat::Zero(dim(), dim());
    for (const auto& t : theta_tilde) s += t * t.adjoint();
    return s;
  }

  // largest eigenvalue excess over I; positive values beyond tolerance mean
  // the family is not a sub-measurement
  double completeness_defect() const {
    Eigen::SelfAdjointEigenSolver<Mat> es(element_sum(), Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff() - 1.0;
  }
};

// PGM: |theta~^v> = S^{-1/2} sqrt(p_v) |phi^v> with S = sum_v p_v [phi^v],
// the inverse square root taken on the support of S.
inline RankOnePOVM pgm_construct(const Ensemble& e) {
  const int d = e.dim();
  detail::check_budget(static_cast<long long>(d) * d, "pgm_construct");
  Mat s = Mat::Zero(d, d);
  for (std::size_t i = 0; i < e.states.size(); ++i)
    s += e.priors[i] * (e.states[i] * e.states[i].adjoint());
  Eigen::SelfAdjointEigenSolver<Mat> es(s);
  detail::require(es.info() == Eigen::Success, "pgm_construct: eigensolve failed");
  Eigen::VectorXd inv_sqrt = es.eigenvalues();
  for (Eigen::Index i = 0; i < inv_sqrt.size(); ++i)
    inv_sqrt(i) = inv_sqrt(i) > tol::kEigenFloor ? 1.0 / std::sqrt(inv_sqrt(i)) : 0.0;
  const Mat root = es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().adjoint();

  RankOnePOVM povm;
  for (std::size_t i = 0; i < e.states.size(); ++i)
    povm.theta_tilde.push_back(root * (std::sqrt(e.priors[i]) * e.states[i]));
  if (povm.completeness_defect() > tol::kPovmCompleteness)
    throw std::logic_error("pgm_construct: completeness defect beyond tolerance");
  return povm;
}

// exact average misidentification probability
// P_e = sum_v p_v sum_{w != v} |<theta~^w|phi^v>|^2, with any component
// outside the measured span counted as error (junk outcome).
inline double average_error(const Ensemble& e, const RankOnePOVM& m) {
  detail::require(e.dim() == m.dim(), "average_error: dimension mismatch");
  detail::require(e.states.size() == m.theta_tilde.size(), "average_error: outcome count mismatch");
  double err = 0;
  for (std::size_t v = 0; v < e.states.size(); ++v) {
    const double ps = std::norm(m.theta_tilde[v].dot(e.states[v]));
    err += e.priors[v] * (1.0 - ps);
  }
  return std::max(0.0, err);
}

// <sqrt(P_s^v)> = sum_v p_v |<theta~^v|phi^v>| -- the fidelity the untwisting
// construction achieves on this ensemble.
inline double mean_success_amplitude(const Ensemble& e, const RankOnePOVM& m) {
  detail::require(e.dim() == m.dim() && e.states.size() == m.theta_tilde.size(),
                  "mean_success_amplitude: mismatch");
  double f = 0;
  for (std::size_t v = 0; v < e.states.size(); ++v)
    f += e.priors[v] * std::abs(m.theta_tilde[v].dot(e.states[v]));
  return f;
}

// Neumark extension: orthonormal |theta^v> on A' (x) A'' whose A' (x) |0>
// block equals |theta~^v>, so every inner product against embedded inputs is
// reproduced: <theta^v| (|psi>|0>) = <theta~^v|psi>.
struct IsometricExtension {
  std::vector<Vec> theta;  // orthonormal, dimension base_dim * ext_dim
  int base_dim = 0;
  int ext_dim = 1;  // A'' dimension: 1 when the POVM is already projective

  // embedded coordinate of (a', a'')
  Eigen::Index at(int a_base, int a_ext) const {
    return static_cast<Eigen::Index>(a_base) * ext_dim + a_ext;
  }
};

inline IsometricExtension neumark_extend(const RankOnePOVM& m) {
  const int d = m.dim();
  const int count = static_cast<int>(m.theta_tilde.size());
  // Gram defect B = I - W'W; its rank is the number of junk coordinates needed
  Mat w(d, count);
  for (int v = 0; v < count; ++v) w.col(v) = m.theta_tilde[static_cast<std::size_t>(v)];
  Mat b = Mat::Identity(count, count) - w.adjoint() * w;
  Eigen::SelfAdjointEigenSolver<Mat> es(b);
  detail::require(es.info() == Eigen::Success, "neumark_extend: eigensolve failed");
  if (es.eigenvalues().minCoeff() < -tol::kNeumarkDefect)
    throw std::invalid_argument("neumark_extend: completeness defect beyond tolerance");

  std::vector<Eigen::Index> junk_rows;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) > tol::kEigenFloor) junk_rows.push_back(i);
  const int rank = static_cast<int>(junk_rows.size());

  IsometricExtension ext;
  ext.base_dim = d;
  ext.ext_dim = 1;
  while (d * (ext.ext_dim - 1) < rank) ext.ext_dim *= 2;

  // R = Lambda^(1/2) V', embedded into the a'' >= 1 coordinates
  for (int v = 0; v < count; ++v) {
    Vec t = Vec::Zero(static_cast<Eigen::Index>(d) * ext.ext_dim);
    for (int a = 0; a < d; ++a) t(ext.at(a, 0)) = w(a, v);
    for (int j = 0; j < rank; ++j) {
      const Eigen::Index row = junk_rows[static_cast<std::size_t>(j)];
      const cxd r = std::sqrt(std::max(0.0, es.eigenvalues()(row))) *
                    std::conj(es.eigenvectors()(v, row));
      const int a_base = j / (ext.ext_dim - 1);
      const int a_ext = 1 + j % (ext.ext_dim - 1);
      t(ext.at(a_base, a_ext)) = r;
    }
    ext.theta.push_back(std::move(t));
  }

  // defining properties, checked numerically
  for (int v = 0; v < count; ++v)
    for (int u2 = 0; u2 < count; ++u2) {
      const cxd g = ext.theta[static_cast<std::size_t>(v)].dot(ext.theta[static_cast<std::size_t>(u2)]);
      const double target = (v == u2) ? 1.0 : 0.0;
      if (std::abs(g - target) > tol::kNeumarkDefect)
        throw std::logic_error("neumark_extend: extension is not orthonormal");
    }
  return ext;
}

// sigma = (1-p_z)[phi] + p_z Z[phi]Z on one ancilla qubit; its larger
// eigenvalue is the lambda+ of the rate formula.
inline DensityOperator sigma_state(double q, double p_z) {
  detail::require(q >= 0 && q <= 1 && p_z >= 0 && p_z <= 1, "sigma_state: rates outside [0,1]");
  const Vec phi = phi_v(1, q, BitString(0, 1)).amplitudes();
  const Vec phiz = phi_v(1, q, BitString(1, 1)).amplitudes();
  Mat rho = (1.0 - p_z) * (phi * phi.adjoint()) + p_z * (phiz * phiz.adjoint());
  return DensityOperator(std::move(rho), RegisterList{{reg::kNoiseShield, 1}});
}

// ---------------------------------------------------------------------------
// random-subset decoding experiments

enum class SubsetMethod { RandomCoset, UniformSubset };

struct CosetErrorSample {
  double error = 0;
  int set_size = 0;
};

struct CosetErrorStats {
  int n = 0;
  double q = 0;
  double set_exponent = 0;
  SubsetMethod method = SubsetMethod::RandomCoset;
  int trials = 0;
  std::uint64_t seed = 0;
  int set_size = 0;       // realized size (coset method: nearest power of two)
  double mean = 0;
  double max = 0;
  double q25 = 0, median = 0, q75 = 0;
  std::vector<double> errors;  // per-trial, in trial order
};

// Empirical distribution of the PGM average error over randomly drawn
// subsets V_s of size 2^(n * setExponent). The coset method (default, since
// phase correction narrows v to a coset of a linear code) draws cosets of
// random codes, so sizes are powers of two and the exponent is rounded; the
// uniform method draws arbitrary subsets of the rounded target size.
inline CosetErrorStats random_coset_error(int n, double q, const PauliDistribution& d,
                                          double set_exponent, int trials, std::uint64_t seed,
                                          SubsetMethod method = SubsetMethod::RandomCoset) {
  detail::require(n >= 1 && n <= 16, "random_coset_error: n out of range");
  detail::require(set_exponent >= 0 && set_exponent <= 1, "random_coset_error: exponent outside [0,1]");
  detail::require(trials >= 1, "random_coset_error: trials must be positive");
  const double target_bits = static_cast<double>(n) * set_exponent;
  detail::check_budget(static_cast<long long>(std::pow(2.0, target_bits)) *
                           (static_cast<long long>(1) << n),
                       "random_coset_error");
  const double p_z = marginals(d).p_z;

  CosetErrorStats stats;
  stats.n = n;
  stats.q = q;
  stats.set_exponent = set_exponent;
  stats.method = method;
  stats.trials = trials;
  stats.seed = seed;

  const std::uint64_t dn = std::uint64_t{1} << n;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(trial)));
    std::vector<BitString> members;
    if (method == SubsetMethod::RandomCoset) {
      const int kdim = std::clamp(static_cast<int>(std::lround(target_bits)), 0, n);
      const auto code = LinearCode::random_code(n, n - kdim, rng);
      const auto shift = BitString(static_cast<std::uint32_t>(rng.raw() & (dn - 1)), n);
      members = code.coset(code.syndrome(shift));
    } else {
      const int size = std::clamp(static_cast<int>(std::lround(std::pow(2.0, target_bits))), 1,
                                  static_cast<int>(dn));
      std::vector<std::uint32_t> pool(dn);
      for (std::uint64_t i = 0; i < dn; ++i) pool[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(i);
      for (int i = 0; i < size; ++i) {
        const int j = i + rng.uniform_int(static_cast<int>(dn) - i);
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
        members.emplace_back(pool[static_cast<std::size_t>(i)], n);
      }
    }
    stats.set_size = static_cast<int>(members.size());
    const auto ensemble = Ensemble::phase_flip(n, q, members, p_z);
    stats.errors.push_back(average_error(ensemble, pgm_construct(ensemble)));
  }

  std::vector<double> sorted = stats.errors;
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double p) {
    const double idx = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(idx);
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = idx - static_cast<double>(lo);
    return sorted[lo] * (1 - frac) + sorted[hi] * frac;
  };
  for (double e : stats.errors) stats.mean += e;
  stats.mean /= static_cast<double>(stats.errors.size());
  stats.max = sorted.back();
  stats.q25 = quantile(0.25);
  stats.median = quantile(0.5);
  stats.q75 = quantile(0.75);
  return stats;
}

}  // namespace pdist
