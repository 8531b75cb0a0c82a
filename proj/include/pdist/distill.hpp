#pragma once

// The distillation pipeline at small n: breeding-style bit error correction,
// reduced-rate phase correction, untwisting built from per-coset pretty-good
// measurements, and the end-to-end security certificate.
//
// Pipeline register layout: (A, B) -> +Ap (noisy processing) -> +Bp (bit
// correction) -> +Ax (untwisting extension). Eve's labels (u, v) stay on the
// blocks; the phase syndrome becomes a classical sector label.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pdist/channel.hpp"
#include "pdist/codes.hpp"
#include "pdist/core.hpp"
#include "pdist/pgm.hpp"
#include "pdist/pstate.hpp"

namespace pdist {

// ---------------------------------------------------------------------------
// bit error correction

// Breeding-style syndrome extraction is ideal: Bob coherently computes his
// estimate e^ = decode(H (a xor b)) into Bp and corrects B, so Bp keeps the
// error record |u+f> whenever the code identifies the pattern. Phases ride
// along untouched, which is what moves the Z^v kick onto Ap.
inline BlockState bit_error_correct(const BlockState& s, const LinearCode& bit_code) {
  detail::require(bit_code.n() == s.n(), "bit_error_correct: code length != n");
  detail::require(s.has_register(reg::kNoiseShield),
                  "bit_error_correct: noisy processing must run first");
  detail::require(!s.has_register(reg::kSyndromeShield),
                  "bit_error_correct: error record already present");
  const int n = s.n();
  const std::uint64_t dn = std::uint64_t{1} << n;
  detail::check_budget(static_cast<long long>(s.blocks().size()) *
                           static_cast<long long>(s.registers().dim() * dn),
                       "bit_error_correct");

  std::vector<std::uint64_t> corrected(static_cast<std::size_t>(dn));
  for (std::uint64_t e = 0; e < dn; ++e)
    corrected[static_cast<std::size_t>(e)] =
        bit_code.decode(bit_code.syndrome(BitString(static_cast<std::uint32_t>(e), n))).value;

  RegisterList out_regs = s.registers();
  out_regs.append({reg::kSyndromeShield, n});
  const int sh_a = s.registers().shift(reg::kAliceKey);
  const int sh_b = s.registers().shift(reg::kBobKey);
  const std::uint64_t mask = dn - 1;

  std::vector<Block> blocks;
  blocks.reserve(s.blocks().size());
  for (const auto& b : s.blocks()) {
    Vec out = Vec::Zero(static_cast<Eigen::Index>(b.state.dim() * dn));
    for (std::uint64_t i = 0; i < b.state.dim(); ++i) {
      const cxd amp = b.state.amplitudes()(static_cast<Eigen::Index>(i));
      if (amp == cxd(0, 0)) continue;
      const std::uint64_t a = (i >> sh_a) & mask;
      const std::uint64_t bb = (i >> sh_b) & mask;
      const std::uint64_t est = corrected[static_cast<std::size_t>(a ^ bb)];
      const std::uint64_t j = ((i ^ (est << sh_b)) << n) | est;  // correct B, record in Bp
      out(static_cast<Eigen::Index>(j)) = amp;
    }
    blocks.push_back({b.u, b.v, b.syndrome, b.weight, StateVector(std::move(out), out_regs)});
  }
  return BlockState(s.n(), std::move(blocks));
}

// The state Alice and Bob actually hold: blocks mixed over the (u, v) weights.
inline DensityOperator build_rho(const BlockState& s) { return block_density(s); }

// ---------------------------------------------------------------------------
// reduced-rate phase correction

struct Coset {
  BitString syndrome;
  std::vector<BitString> members;
};

struct PhaseCorrected {
  BlockState state;           // blocks re-indexed by (syndrome, u, v)
  std::vector<Coset> cosets;  // all 2^k cosets, partitioning {0,1}^n
  int phase_rank = 0;
};

// The phase syndrome s(v) is extracted breeding-style; v is one of Eve's
// orthogonal labels, so this only relabels blocks. The surviving ambiguity
// within each sector is the coset V_s.
inline PhaseCorrected phase_correct(const BlockState& s, const LinearCode& phase_code) {
  detail::require(phase_code.n() == s.n(), "phase_correct: code length != n");
  std::vector<Block> blocks = s.blocks();
  for (auto& b : blocks) b.syndrome = phase_code.syndrome(b.v);
  std::sort(blocks.begin(), blocks.end(), [](const Block& x, const Block& y) {
    if (x.syndrome != y.syndrome) return x.syndrome < y.syndrome;
    if (x.u != y.u) return x.u < y.u;
    return x.v < y.v;
  });
  std::vector<Coset> cosets;
  for (std::uint32_t sv = 0; sv < (1u << phase_code.k()); ++sv) {
    const BitString syn(sv, phase_code.k());
    cosets.push_back({syn, phase_code.coset(syn)});
  }
  return {BlockState(s.n(), std::move(blocks)), std::move(cosets), phase_code.k()};
}

// ---------------------------------------------------------------------------
// untwisting

// U = (sum_v [theta^v]_{Ap,Ax} (x) Z^v_B) C_{Ap,Bp}^dagger, built per phase
// sector, with the PGM conditioned on Bob's error record when bit and phase
// errors are correlated. Components of Ap outside the measured span route to
// junk outcomes (no Z correction) so the whole operator is an isometry.
class UntwistingOperator {
 public:
  struct Outcome {
    Vec theta;                // dim base * ext; orthonormal within a sector
    Vec theta_tilde;          // dim base; the PGM element (kernel image for junk)
    std::uint32_t zmask = 0;  // phase correction applied to B
    int label = -1;           // index into the sector's coset; -1 for junk
  };
  struct Sector {
    std::vector<Outcome> outcomes;
    std::vector<BitString> members;  // the coset, in outcome order
  };

  int n = 0;
  int ext_dim = 1;  // global A'' dimension (power of two; 1 = no extension)
  // keyed by (phase syndrome value, Bp value after the CNOT stage)
  std::map<std::pair<std::uint32_t, std::uint32_t>, Sector> sectors;

  int ext_qubits() const {
    int k = 0;
    while ((1 << k) < ext_dim) ++k;
    return k;
  }

  const Sector& sector(std::uint32_t syndrome, std::uint32_t w) const {
    const auto it = sectors.find({syndrome, w});
    detail::require(it != sectors.end(), "UntwistingOperator: unknown sector");
    return it->second;
  }

  StateVector apply(const StateVector& block, const BitString& syndrome) const;
  Operator to_operator(const BitString& syndrome) const;
};

namespace detail {

// PGM + Neumark for one coset with explicit normalized priors, plus the
// isometric completion mapping the kernel of the measured span to junk
// outcomes.
inline UntwistingOperator::Sector build_sector(int n, double q,
                                               const std::vector<BitString>& members,
                                               std::vector<double> priors, int* ext_dim_out) {
  std::vector<Vec> states;
  for (const auto& v : members) states.push_back(phi_v(n, q, v).amplitudes());
  Ensemble ensemble(std::move(states), std::move(priors), std::vector<BitString>(members));
  const auto povm = pgm_construct(ensemble);
  const auto ext = neumark_extend(povm);
  const int d = ext.base_dim;
  *ext_dim_out = ext.ext_dim;

  UntwistingOperator::Sector sec;
  sec.members = members;
  for (std::size_t v = 0; v < members.size(); ++v)
    sec.outcomes.push_back({ext.theta[v], povm.theta_tilde[v], members[v].value,
                            static_cast<int>(v)});

  // kernel of the measured span on Ap -> junk outcomes (decoding failure)
  Eigen::SelfAdjointEigenSolver<Mat> es(povm.element_sum());
  require(es.info() == Eigen::Success, "build_sector: eigensolve failed");
  std::vector<Vec> kernel;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) < 0.5) kernel.push_back(es.eigenvectors().col(i));
  if (kernel.empty()) return sec;

  const auto full = static_cast<Eigen::Index>(d) * ext.ext_dim;
  Mat basis(full, static_cast<Eigen::Index>(members.size()));
  for (std::size_t v = 0; v < members.size(); ++v)
    basis.col(static_cast<Eigen::Index>(v)) = ext.theta[v];
  Eigen::HouseholderQR<Mat> qr(basis);
  const Mat qfull = qr.householderQ() * Mat::Identity(full, full);
  std::size_t next = members.size();
  for (const auto& zeta : kernel) {
    require(next < static_cast<std::size_t>(full), "build_sector: no room for junk images");
    UntwistingOperator::Outcome junk;
    junk.theta = qfull.col(static_cast<Eigen::Index>(next++));
    junk.theta_tilde = zeta;
    junk.zmask = 0;
    junk.label = -1;
    sec.outcomes.push_back(std::move(junk));
  }
  return sec;
}

inline void pad_outcomes(std::vector<UntwistingOperator::Outcome>& outcomes, int d, int from_ext,
                         int to_ext) {
  if (from_ext == to_ext) return;
  for (auto& o : outcomes) {
    Vec padded = Vec::Zero(static_cast<Eigen::Index>(d) * to_ext);
    for (int a = 0; a < d; ++a)
      for (int x = 0; x < from_ext; ++x)
        padded(static_cast<Eigen::Index>(a) * to_ext + x) =
            o.theta(static_cast<Eigen::Index>(a) * from_ext + x);
    o.theta = std::move(padded);
  }
}

}  // namespace detail

// Builds the per-sector untwisting from the coset family. Priors come from
// the Pauli distribution, restricted to each coset; when bit and phase errors
// are correlated the PGM is conditioned on u (read from Bp), otherwise one
// measurement per coset is shared by every u sector.
inline UntwistingOperator construct_untwisting(const std::vector<Coset>& cosets, int n, double q,
                                               const PauliDistribution& d) {
  detail::require(!cosets.empty(), "construct_untwisting: no cosets");
  const auto m = marginals(d);
  const bool correlated = m.cond_u0_defined && m.cond_u1_defined &&
                          std::abs(m.p1_given_u0 - m.p1_given_u1) > tol::kProbability;
  const std::uint64_t dn = std::uint64_t{1} << n;
  const int dim = static_cast<int>(dn);
  detail::check_budget(static_cast<long long>(cosets.size()) *
                           static_cast<long long>(correlated ? dim : 1) * dim * dim * 4,
                       "construct_untwisting");

  // prior prod_t p(v_t | u_t = w_t), normalized over the coset. A coset with
  // zero total mass never receives amplitude; its sector only has to stay
  // isometric, so uniform priors serve.
  auto conditional_priors = [&](const std::vector<BitString>& members, std::uint64_t w) {
    std::vector<double> priors;
    double total = 0;
    for (const auto& v : members) {
      double p = 1.0;
      for (int t = 0; t < n; ++t) {
        const int u_t = static_cast<int>((w >> (n - 1 - t)) & 1);
        const double pz = u_t ? m.p1_given_u1 : m.p1_given_u0;
        p *= v.bit(t) ? pz : (1.0 - pz);
      }
      priors.push_back(p);
      total += p;
    }
    if (total <= 0) {
      std::fill(priors.begin(), priors.end(), 1.0 / static_cast<double>(members.size()));
      return priors;
    }
    for (auto& p : priors) p /= total;
    return priors;
  };

  UntwistingOperator op;
  op.n = n;
  for (const auto& coset : cosets) {
    if (!correlated) {
      int local_ext = 1;
      const std::uint64_t w_ref = m.cond_u0_defined ? 0 : dn - 1;
      auto sec = detail::build_sector(n, q, coset.members,
                                      conditional_priors(coset.members, w_ref), &local_ext);
      op.ext_dim = std::max(op.ext_dim, local_ext);
      for (std::uint64_t w = 0; w < dn; ++w)
        op.sectors[{coset.syndrome.value, static_cast<std::uint32_t>(w)}] = sec;
    } else {
      for (std::uint64_t w = 0; w < dn; ++w) {
        int local_ext = 1;
        auto sec = detail::build_sector(n, q, coset.members,
                                        conditional_priors(coset.members, w), &local_ext);
        op.ext_dim = std::max(op.ext_dim, local_ext);
        op.sectors[{coset.syndrome.value, static_cast<std::uint32_t>(w)}] = std::move(sec);
      }
    }
  }

  for (auto& [key, sec] : op.sectors) {
    if (sec.outcomes.empty()) continue;
    const int local_ext = static_cast<int>(sec.outcomes.front().theta.size()) / dim;
    detail::pad_outcomes(sec.outcomes, dim, local_ext, op.ext_dim);
  }
  return op;
}

inline StateVector UntwistingOperator::apply(const StateVector& block,
                                             const BitString& syndrome) const {
  const auto& regs = block.registers();
  const std::uint64_t dn = std::uint64_t{1} << n;
  const int sh_b = regs.shift(reg::kBobKey);
  const int sh_f = regs.shift(reg::kNoiseShield);
  const int sh_w = regs.shift(reg::kSyndromeShield);
  const std::uint64_t mask = dn - 1;

  RegisterList out_regs = regs;
  const int xq = ext_qubits();
  if (xq > 0) out_regs.append({reg::kExtension, xq});
  detail::check_budget(static_cast<long long>(out_regs.dim()), "UntwistingOperator::apply");
  Vec out = Vec::Zero(static_cast<Eigen::Index>(out_regs.dim()));

  for (std::uint64_t base = 0; base < block.dim(); ++base) {
    // one pass per (everything except Ap, Bp); those bits anchor at zero
    if (((base >> sh_f) & mask) != 0 || ((base >> sh_w) & mask) != 0) continue;
    const std::uint64_t bval = (base >> sh_b) & mask;
    for (std::uint64_t w = 0; w < dn; ++w) {
      // CNOT^dagger folds Bp into w = bp ^ f; gather the Ap column for this w
      Vec psi = Vec::Zero(static_cast<Eigen::Index>(dn));
      bool nonzero = false;
      for (std::uint64_t f = 0; f < dn; ++f) {
        const std::uint64_t idx = base | (f << sh_f) | ((w ^ f) << sh_w);
        const cxd a = block.amplitudes()(static_cast<Eigen::Index>(idx));
        if (a != cxd(0, 0)) nonzero = true;
        psi(static_cast<Eigen::Index>(f)) = a;
      }
      if (!nonzero) continue;
      const auto& sec = sector(syndrome.value, static_cast<std::uint32_t>(w));
      for (const auto& oc : sec.outcomes) {
        const cxd c = oc.theta_tilde.dot(psi);
        if (c == cxd(0, 0)) continue;
        const double sign =
            (std::popcount(bval & static_cast<std::uint64_t>(oc.zmask)) & 1) ? -1.0 : 1.0;
        const cxd coeff = sign * c;
        for (std::uint64_t ap = 0; ap < dn; ++ap)
          for (int ax = 0; ax < ext_dim; ++ax) {
            const cxd t = oc.theta(static_cast<Eigen::Index>(ap) * ext_dim + ax);
            if (t == cxd(0, 0)) continue;
            const std::uint64_t j =
                ((base | (ap << sh_f) | (w << sh_w)) << xq) | static_cast<std::uint64_t>(ax);
            out(static_cast<Eigen::Index>(j)) += coeff * t;
          }
      }
    }
  }
  return StateVector(std::move(out), out_regs);
}

inline Operator UntwistingOperator::to_operator(const BitString& syndrome) const {
  const std::uint64_t dn = std::uint64_t{1} << n;
  const int xq = ext_qubits();
  RegisterList dom{{reg::kBobKey, n}, {reg::kNoiseShield, n}, {reg::kSyndromeShield, n}};
  RegisterList cod = dom;
  if (xq > 0) cod.append({reg::kExtension, xq});
  Mat m = Mat::Zero(static_cast<Eigen::Index>(cod.dim()), static_cast<Eigen::Index>(dom.dim()));
  for (std::uint64_t b = 0; b < dn; ++b)
    for (std::uint64_t ap = 0; ap < dn; ++ap)
      for (std::uint64_t bp = 0; bp < dn; ++bp) {
        const std::uint64_t col = (((b << n) | ap) << n) | bp;
        const std::uint64_t w = bp ^ ap;  // CNOT^dagger
        const auto& sec = sector(syndrome.value, static_cast<std::uint32_t>(w));
        for (const auto& oc : sec.outcomes) {
          const cxd weight = std::conj(oc.theta_tilde(static_cast<Eigen::Index>(ap)));
          if (weight == cxd(0, 0)) continue;
          const double sign =
              (std::popcount(b & static_cast<std::uint64_t>(oc.zmask)) & 1) ? -1.0 : 1.0;
          for (std::uint64_t a2 = 0; a2 < dn; ++a2)
            for (int ax = 0; ax < ext_dim; ++ax) {
              const cxd t = oc.theta(static_cast<Eigen::Index>(a2) * ext_dim + ax);
              if (t == cxd(0, 0)) continue;
              const std::uint64_t row =
                  (((((b << n) | a2) << n) | w) << xq) | static_cast<std::uint64_t>(ax);
              m(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) +=
                  sign * weight * t;
            }
        }
      }
  return Operator::isometry(std::move(m), dom, cod);
}

// ---------------------------------------------------------------------------
// fidelity of the untwisted state

struct SectorReport {
  BitString syndrome;
  double probability = 0;
  int coset_size = 0;
  double fidelity = 0;
};

struct DistillationOutcome {
  double fidelity = 0;
  double epsilon = 0;  // sqrt(1 - F^2)
  std::vector<SectorReport> sectors;
  int bit_code_rank = 0;
  int phase_code_rank = 0;
  std::optional<BlockState> untwisted;
};

// F by the <sqrt(P_s^v)> formula: sum over blocks of p_uv |<theta~^{v|u}|phi^v>|.
// Exact when every bit error is corrected (full-rank bit code).
inline double untwist_fidelity_formula(const PhaseCorrected& pc, const UntwistingOperator& op,
                                       double q) {
  double f = 0;
  for (const auto& b : pc.state.blocks()) {
    const auto& sec = op.sector(b.syndrome.value, b.u.value);
    const Vec phi = phi_v(op.n, q, b.v).amplitudes();
    for (const auto& oc : sec.outcomes) {
      if (oc.label < 0 || sec.members[static_cast<std::size_t>(oc.label)] != b.v) continue;
      f += b.weight * std::abs(oc.theta_tilde.dot(phi));
      break;
    }
  }
  return f;
}

// Explicit route: applies U to every block and computes the fidelity of the
// resulting mixture against rho' = [Phi]^n (x) (theta-basis shield mixture),
// sector by sector. rho' is diagonal in the orthonormal family
// {|Phi^n>|theta^{v|u}>|u>}, so F_s = Tr sqrt(Dp (A A^dagger) Dp) with A the
// matrix of overlaps against that family.
inline DistillationOutcome untwist_fidelity(const PhaseCorrected& pc,
                                            const UntwistingOperator& op, double q) {
  const int n = pc.state.n();
  const std::uint64_t dn = std::uint64_t{1} << n;
  const double phi_amp = 1.0 / std::sqrt(static_cast<double>(dn));
  const double disagreement_mass = [&] {
    const auto& regs = pc.state.registers();
    const int sh_a = regs.shift(reg::kAliceKey);
    const int sh_b = regs.shift(reg::kBobKey);
    const std::uint64_t mask = dn - 1;
    double err = 0;
    for (const auto& b : pc.state.blocks())
      for (std::uint64_t i = 0; i < b.state.dim(); ++i)
        if (((i >> sh_a) & mask) != ((i >> sh_b) & mask))
          err += b.weight * std::norm(b.state.amplitudes()(static_cast<Eigen::Index>(i)));
    return err;
  }();

  std::vector<Block> untwisted;
  for (const auto& b : pc.state.blocks()) {
    Block nb = b;
    nb.state = op.apply(b.state, b.syndrome);
    untwisted.push_back(std::move(nb));
  }
  const auto& out_regs = untwisted.front().state.registers();
  const int sh_a = out_regs.shift(reg::kAliceKey);
  const int sh_b = out_regs.shift(reg::kBobKey);
  const int sh_f = out_regs.shift(reg::kNoiseShield);
  const int sh_w = out_regs.shift(reg::kSyndromeShield);
  const int sh_x = out_regs.has(reg::kExtension) ? out_regs.shift(reg::kExtension) : 0;

  std::map<std::uint32_t, std::vector<const Block*>> groups;
  for (const auto& b : untwisted) groups[b.syndrome.value].push_back(&b);

  DistillationOutcome out;
  out.phase_code_rank = pc.phase_rank;
  double total_f = 0;
  double total_pe = 0;
  for (const auto& [syn, blocks] : groups) {
    double prob = 0;
    for (const auto* b : blocks) prob += b->weight;

    const auto count = static_cast<Eigen::Index>(blocks.size());
    Mat overlaps(count, count);
    Eigen::VectorXd root_p(count);
    for (Eigen::Index li = 0; li < count; ++li) {
      const auto* lb = blocks[static_cast<std::size_t>(li)];
      root_p(li) = std::sqrt(lb->weight / prob);
      const auto& sec = op.sector(syn, lb->u.value);
      const Vec* theta = nullptr;
      for (const auto& oc : sec.outcomes)
        if (oc.label >= 0 && sec.members[static_cast<std::size_t>(oc.label)] == lb->v) {
          theta = &oc.theta;
          break;
        }
      detail::require(theta != nullptr, "untwist_fidelity: missing outcome for label");
      // <e_{u,v}| block>, e = |Phi^n> |theta^{v|u}> |u>
      for (Eigen::Index bi = 0; bi < count; ++bi) {
        const auto& amps = blocks[static_cast<std::size_t>(bi)]->state.amplitudes();
        cxd acc = 0;
        for (std::uint64_t x = 0; x < dn; ++x)
          for (std::uint64_t ap = 0; ap < dn; ++ap)
            for (int ax = 0; ax < op.ext_dim; ++ax) {
              const cxd t = (*theta)(static_cast<Eigen::Index>(ap) * op.ext_dim + ax);
              if (t == cxd(0, 0)) continue;
              const std::uint64_t idx = (x << sh_a) | (x << sh_b) | (ap << sh_f) |
                                        (static_cast<std::uint64_t>(lb->u.value) << sh_w) |
                                        (static_cast<std::uint64_t>(ax) << sh_x);
              acc += phi_amp * std::conj(t) * amps(static_cast<Eigen::Index>(idx));
            }
        overlaps(li, bi) = std::sqrt(blocks[static_cast<std::size_t>(bi)]->weight / prob) * acc;
      }
    }

    const Mat gram = root_p.asDiagonal() * (overlaps * overlaps.adjoint()) * root_p.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Mat> es(gram, Eigen::EigenvaluesOnly);
    double fs = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
      fs += std::sqrt(std::max(0.0, es.eigenvalues()(i)));
    fs = std::min(fs, 1.0);

    out.sectors.push_back({BitString(syn, pc.phase_rank), prob,
                           static_cast<int>(op.sector(syn, blocks.front()->u.value).members.size()),
                           fs});
    total_f += prob * fs;

    for (const auto* b : blocks) {
      const auto& sec = op.sector(syn, b->u.value);
      const Vec phi = phi_v(n, q, b->v).amplitudes();
      for (const auto& oc : sec.outcomes)
        if (oc.label >= 0 && sec.members[static_cast<std::size_t>(oc.label)] == b->v) {
          total_pe += b->weight * (1.0 - std::norm(oc.theta_tilde.dot(phi)));
          break;
        }
    }
  }

  out.fidelity = total_f;
  out.epsilon = std::sqrt(std::max(0.0, 1.0 - total_f * total_f));
  // success-amplitude identity <sqrt(P_s)> >= 1 - P_e; meaningful only when
  // bit correction left no residual errors
  if (disagreement_mass <= tol::kProbability &&
      out.fidelity < 1.0 - total_pe - tol::kEntropic)
    throw std::logic_error("untwist_fidelity: F < 1 - P_e, success-amplitude identity violated");
  out.untwisted = BlockState(n, std::move(untwisted));
  return out;
}

// ---------------------------------------------------------------------------
// security of the held state

// Key-security distance for a block family: phase sectors are classical
// labels the adversary also sees, so the distance is the sector average.
// Eve's register is the block label within the sector -- exactly the
// |u>_E1 |v>_E2 purification.
inline double key_security_distance(const BlockState& s, std::string_view key_a = "A",
                                    std::string_view key_b = "B") {
  std::map<std::uint32_t, std::vector<const Block*>> groups;
  for (const auto& b : s.blocks()) groups[b.syndrome.value].push_back(&b);
  double total = 0;
  for (const auto& [syn, blocks] : groups) {
    double prob = 0;
    for (const auto* b : blocks) prob += b->weight;
    std::vector<Vec> branches;
    std::vector<double> weights;
    for (const auto* b : blocks) {
      branches.push_back(b->state.amplitudes());
      weights.push_back(b->weight / prob);
    }
    total +=
        prob * detail::key_security_from_branches(s.registers(), branches, weights, key_a, key_b);
  }
  return total;
}

// probability that Alice's and Bob's Z-basis keys disagree
inline double key_disagreement(const BlockState& s) {
  const auto& regs = s.registers();
  const int sh_a = regs.shift(reg::kAliceKey);
  const int sh_b = regs.shift(reg::kBobKey);
  const std::uint64_t mask = (std::uint64_t{1} << s.n()) - 1;
  double err = 0;
  for (const auto& b : s.blocks()) {
    double p = 0;
    for (std::uint64_t i = 0; i < b.state.dim(); ++i)
      if (((i >> sh_a) & mask) != ((i >> sh_b) & mask))
        p += std::norm(b.state.amplitudes()(static_cast<Eigen::Index>(i)));
    err += b.weight * p;
  }
  return err;
}

// ---------------------------------------------------------------------------
// end-to-end pipeline

struct CodeSpec {
  enum class Kind { Full, Empty, Explicit, Random };
  Kind kind = Kind::Full;
  int rank = 0;
  std::optional<LinearCode> code;

  static CodeSpec full() { return {Kind::Full, 0, std::nullopt}; }
  static CodeSpec empty() { return {Kind::Empty, 0, std::nullopt}; }
  static CodeSpec explicit_code(LinearCode c) {
    const int k = c.k();
    return {Kind::Explicit, k, std::move(c)};
  }
  static CodeSpec random(int rank) { return {Kind::Random, rank, std::nullopt}; }

  LinearCode realize(int n, Rng& rng) const {
    switch (kind) {
      case Kind::Full: return LinearCode::full(n);
      case Kind::Empty: return LinearCode::none(n);
      case Kind::Explicit:
        detail::require(code.has_value() && code->n() == n, "CodeSpec: explicit code length != n");
        return *code;
      case Kind::Random: return LinearCode::random_code(n, rank, rng);
    }
    throw std::logic_error("CodeSpec: unreachable");
  }
};

struct EndToEndResult {
  DistillationOutcome outcome;
  std::optional<double> key_security;  // computed when the dimension budget allows
  double epsilon_bound = 0;            // 2 sqrt(1 - F^2)
  double disagreement = 0;             // correctness statistic
  int n = 0;
  double q = 0;
  std::uint64_t seed = 0;
};

inline EndToEndResult end_to_end(int n, const ProtocolModel& model, double q,
                                 const CodeSpec& bit_spec, const CodeSpec& phase_spec,
                                 std::uint64_t seed) {
  Rng rng(seed);
  const auto d = model_to_distribution(model);
  const LinearCode bit_code = bit_spec.realize(n, rng);
  const LinearCode phase_code = phase_spec.realize(n, rng);

  const auto key_state = build_key_state(n, d);
  const auto noisy = apply_noisy_processing(key_state, q);
  const auto bit_corrected = bit_error_correct(noisy, bit_code);
  const auto pc = phase_correct(bit_corrected, phase_code);
  const auto untwist = construct_untwisting(pc.cosets, n, q, d);

  EndToEndResult result;
  result.n = n;
  result.q = q;
  result.seed = seed;
  result.outcome = untwist_fidelity(pc, untwist, q);
  result.outcome.bit_code_rank = bit_code.k();
  result.epsilon_bound = 2.0 * result.outcome.epsilon;
  result.disagreement = key_disagreement(pc.state);

  // direct security distance on the held (pre-untwist) state, when feasible
  const long long cost = static_cast<long long>(pc.state.registers().dim()) *
                         static_cast<long long>(pc.state.blocks().size());
  if (cost <= tol::kMaxDenseEntries && n <= 3) {
    const double dist = key_security_distance(pc.state);
    result.key_security = dist;
    if (dist > result.epsilon_bound + tol::kEntropic)
      throw std::logic_error("end_to_end: key-security distance exceeds 2*epsilon");
  }
  return result;
}

}  // namespace pdist
