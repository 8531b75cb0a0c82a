#pragma once

// Dense complex linear algebra over labeled multi-qubit registers, plus the
// entropy and distance functionals used by every other header.
//
// Index convention (tested in test_core.cpp): qubit 0 of the register list is
// the most significant bit of the amplitude index. A register starting at
// qubit position `off` with width `w` in an m-qubit system therefore occupies
// index bits [m-off-w, m-off), read MSB-first, so the register's value can be
// extracted with (index >> shift) & mask. Matrices are column-major.

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pdist/bits.hpp"
#include "pdist/tolerances.hpp"

namespace pdist {

using cxd = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

// Raised when a requested computation would exceed the dense-representation
// budget; the CLI maps it to its own exit code.
class budget_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
inline void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}
inline void check_budget(long long entries, const std::string& what) {
  if (entries > tol::kMaxDenseEntries)
    throw budget_error(what + ": " + std::to_string(entries) +
                       " dense entries exceed the budget of " +
                       std::to_string(tol::kMaxDenseEntries));
}
}  // namespace detail

struct Register {
  std::string name;
  int qubits = 0;
};

class RegisterList {
 public:
  RegisterList() = default;
  RegisterList(std::initializer_list<Register> rs) {
    for (const auto& r : rs) append(r);
  }

  void append(const Register& r) {
    detail::require(r.qubits >= 0, "register '" + r.name + "' has negative width");
    detail::require(!has(r.name), "register name collision: '" + r.name + "'");
    regs_.push_back(r);
    total_ += r.qubits;
  }

  int total_qubits() const { return total_; }
  std::size_t dim() const { return std::size_t{1} << total_; }
  std::size_t count() const { return regs_.size(); }
  const Register& operator[](std::size_t i) const { return regs_[i]; }
  const std::vector<Register>& items() const { return regs_; }

  bool has(std::string_view name) const {
    return std::any_of(regs_.begin(), regs_.end(),
                       [&](const Register& r) { return r.name == name; });
  }

  const Register& get(std::string_view name) const {
    for (const auto& r : regs_)
      if (r.name == name) return r;
    throw std::invalid_argument("unknown register '" + std::string(name) + "'");
  }

  // first qubit position of the register
  int offset(std::string_view name) const {
    int off = 0;
    for (const auto& r : regs_) {
      if (r.name == name) return off;
      off += r.qubits;
    }
    throw std::invalid_argument("unknown register '" + std::string(name) + "'");
  }

  // shift such that (index >> shift) & (2^w - 1) is the register's value
  int shift(std::string_view name) const {
    return total_ - offset(name) - get(name).qubits;
  }

  std::uint64_t extract(std::string_view name, std::uint64_t index) const {
    const auto& r = get(name);
    return (index >> shift(name)) & ((std::uint64_t{1} << r.qubits) - 1);
  }

  friend bool operator==(const RegisterList& a, const RegisterList& b) {
    if (a.regs_.size() != b.regs_.size()) return false;
    for (std::size_t i = 0; i < a.regs_.size(); ++i)
      if (a.regs_[i].name != b.regs_[i].name || a.regs_[i].qubits != b.regs_[i].qubits)
        return false;
    return true;
  }

 private:
  std::vector<Register> regs_;
  int total_ = 0;
};

class DensityOperator;

class StateVector {
 public:
  StateVector(Vec amplitudes, RegisterList regs) : amps_(std::move(amplitudes)), regs_(std::move(regs)) {
    detail::require(static_cast<std::size_t>(amps_.size()) == regs_.dim(),
                    "StateVector: amplitude count does not match register widths");
    const double n = amps_.norm();
    detail::require(std::abs(n - 1.0) <= tol::kStructural,
                    "StateVector: not normalized (|norm-1| = " + std::to_string(std::abs(n - 1.0)) + ")");
  }

  // computational basis state |index>
  static StateVector basis(RegisterList regs, std::uint64_t index) {
    Vec v = Vec::Zero(static_cast<Eigen::Index>(regs.dim()));
    v(static_cast<Eigen::Index>(index)) = 1.0;
    return StateVector(std::move(v), std::move(regs));
  }

  const Vec& amplitudes() const { return amps_; }
  const RegisterList& registers() const { return regs_; }
  int qubits() const { return regs_.total_qubits(); }
  std::size_t dim() const { return regs_.dim(); }

  cxd inner(const StateVector& other) const {
    detail::require(regs_ == other.regs_, "StateVector::inner: register layouts differ");
    return amps_.dot(other.amps_);  // Eigen's dot conjugates the left side
  }

  DensityOperator to_density() const;

 private:
  Vec amps_;
  RegisterList regs_;
};

class DensityOperator {
 public:
  DensityOperator(Mat matrix, RegisterList regs) : m_(std::move(matrix)), regs_(std::move(regs)) {
    const auto d = static_cast<Eigen::Index>(regs_.dim());
    detail::require(m_.rows() == d && m_.cols() == d,
                    "DensityOperator: matrix dimension does not match register widths");
    detail::require((m_ - m_.adjoint()).cwiseAbs().maxCoeff() <= tol::kStructural,
                    "DensityOperator: not Hermitian");
    detail::require(std::abs(m_.trace().real() - 1.0) <= tol::kStructural &&
                        std::abs(m_.trace().imag()) <= tol::kStructural,
                    "DensityOperator: trace != 1");
    if (d <= tol::kSpectralCheckDim) {
      Eigen::SelfAdjointEigenSolver<Mat> es(m_, Eigen::EigenvaluesOnly);
      detail::require(es.eigenvalues().minCoeff() >= -tol::kStructural,
                      "DensityOperator: negative eigenvalue beyond tolerance");
    }
  }

  static DensityOperator maximally_mixed(RegisterList regs) {
    const auto d = static_cast<Eigen::Index>(regs.dim());
    return DensityOperator(Mat::Identity(d, d) / static_cast<double>(d), std::move(regs));
  }

  const Mat& matrix() const { return m_; }
  const RegisterList& registers() const { return regs_; }
  std::size_t dim() const { return regs_.dim(); }

  // reduced state on the kept registers, in their current order
  DensityOperator partial_trace(std::span<const std::string> keep) const;
  DensityOperator partial_trace(std::initializer_list<std::string> keep) const {
    std::vector<std::string> k(keep);
    return partial_trace(std::span<const std::string>(k));
  }

 private:
  Mat m_;
  RegisterList regs_;
};

inline DensityOperator StateVector::to_density() const {
  detail::check_budget(static_cast<long long>(dim()) * static_cast<long long>(dim()),
                       "StateVector::to_density");
  return DensityOperator(amps_ * amps_.adjoint(), regs_);
}

// Unitary or isometry with named domain/codomain registers. Isometries may
// grow the register list (codomain adds registers); V†V = I is verified on
// the domain at construction.
class Operator {
 public:
  static Operator unitary(Mat m, RegisterList regs) {
    return Operator(std::move(m), regs, regs, /*unitary=*/true);
  }

  static Operator isometry(Mat m, RegisterList domain, RegisterList codomain) {
    return Operator(std::move(m), std::move(domain), std::move(codomain), /*unitary=*/false);
  }

  const Mat& matrix() const { return m_; }
  const RegisterList& domain() const { return dom_; }
  const RegisterList& codomain() const { return cod_; }
  bool is_unitary() const { return unitary_; }

  // Applies the operator to the named registers of `s`. Output register
  // order: untouched registers first (original order), then the codomain
  // registers in the operator's order.
  StateVector apply(const StateVector& s) const;
  DensityOperator apply(const DensityOperator& rho) const;

 private:
  Operator(Mat m, RegisterList dom, RegisterList cod, bool unitary)
      : m_(std::move(m)), dom_(std::move(dom)), cod_(std::move(cod)), unitary_(unitary) {
    detail::require(static_cast<std::size_t>(m_.cols()) == dom_.dim() &&
                        static_cast<std::size_t>(m_.rows()) == cod_.dim(),
                    "Operator: matrix shape does not match register widths");
    Mat gram = m_.adjoint() * m_;
    gram -= Mat::Identity(gram.rows(), gram.cols());
    detail::require(gram.cwiseAbs().maxCoeff() <= tol::kStructural,
                    unitary_ ? "Operator: U†U != I" : "Operator: V†V != I");
    if (unitary_)
      detail::require(dom_.dim() == cod_.dim(), "Operator: unitary must be square");
  }

  Mat m_;
  RegisterList dom_, cod_;
  bool unitary_;
};

// ---------------------------------------------------------------------------
// register plumbing

namespace detail {

// Permutation taking a state laid out as `from` to layout `to` (same register
// names and widths, possibly different order). Returns out-index for each
// in-index.
inline std::vector<std::uint64_t> layout_permutation(const RegisterList& from, const RegisterList& to) {
  require(from.count() == to.count() && from.total_qubits() == to.total_qubits(),
          "reorder: register sets differ");
  struct Span { int from_shift, to_shift, width; };
  std::vector<Span> spans;
  for (const auto& r : from.items()) {
    require(to.has(r.name) && to.get(r.name).qubits == r.qubits, "reorder: register sets differ");
    spans.push_back({from.shift(r.name), to.shift(r.name), r.qubits});
  }
  const std::size_t d = from.dim();
  std::vector<std::uint64_t> perm(d);
  for (std::uint64_t i = 0; i < d; ++i) {
    std::uint64_t j = 0;
    for (const auto& sp : spans) {
      const std::uint64_t val = (i >> sp.from_shift) & ((std::uint64_t{1} << sp.width) - 1);
      j |= val << sp.to_shift;
    }
    perm[i] = j;
  }
  return perm;
}

}  // namespace detail

inline StateVector reorder(const StateVector& s, const RegisterList& target) {
  const auto perm = detail::layout_permutation(s.registers(), target);
  Vec out = Vec::Zero(s.amplitudes().size());
  for (std::uint64_t i = 0; i < s.dim(); ++i)
    out(static_cast<Eigen::Index>(perm[i])) = s.amplitudes()(static_cast<Eigen::Index>(i));
  return StateVector(std::move(out), target);
}

inline DensityOperator reorder(const DensityOperator& rho, const RegisterList& target) {
  const auto perm = detail::layout_permutation(rho.registers(), target);
  const auto d = static_cast<Eigen::Index>(rho.dim());
  Mat out = Mat::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      out(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]),
          static_cast<Eigen::Index>(perm[static_cast<std::size_t>(j)])) = rho.matrix()(i, j);
  return DensityOperator(std::move(out), target);
}

inline StateVector Operator::apply(const StateVector& s) const {
  // move the domain registers to the least significant end, in domain order
  RegisterList staged;
  for (const auto& r : s.registers().items())
    if (!dom_.has(r.name)) staged.append(r);
  RegisterList out_regs = staged;
  const std::size_t rest_dim = staged.dim();
  for (const auto& r : dom_.items()) {
    detail::require(s.registers().has(r.name) && s.registers().get(r.name).qubits == r.qubits,
                    "Operator::apply: state lacks register '" + r.name + "'");
    staged.append(r);
  }
  for (const auto& r : cod_.items()) out_regs.append(r);
  detail::check_budget(static_cast<long long>(out_regs.dim()), "Operator::apply");

  const StateVector in = reorder(s, staged);
  const auto din = static_cast<Eigen::Index>(dom_.dim());
  const auto dout = static_cast<Eigen::Index>(cod_.dim());
  Vec out(static_cast<Eigen::Index>(rest_dim) * dout);
  for (std::size_t r = 0; r < rest_dim; ++r)
    out.segment(static_cast<Eigen::Index>(r) * dout, dout) =
        m_ * in.amplitudes().segment(static_cast<Eigen::Index>(r) * din, din);
  return StateVector(std::move(out), out_regs);
}

inline DensityOperator Operator::apply(const DensityOperator& rho) const {
  RegisterList staged;
  for (const auto& r : rho.registers().items())
    if (!dom_.has(r.name)) staged.append(r);
  RegisterList out_regs = staged;
  const std::size_t rest_dim = staged.dim();
  for (const auto& r : dom_.items()) {
    detail::require(rho.registers().has(r.name) && rho.registers().get(r.name).qubits == r.qubits,
                    "Operator::apply: state lacks register '" + r.name + "'");
    staged.append(r);
  }
  for (const auto& r : cod_.items()) out_regs.append(r);
  detail::check_budget(static_cast<long long>(out_regs.dim()) * static_cast<long long>(out_regs.dim()),
                       "Operator::apply");

  const DensityOperator in = reorder(rho, staged);
  const auto din = static_cast<Eigen::Index>(dom_.dim());
  const auto dout = static_cast<Eigen::Index>(cod_.dim());
  const auto rd = static_cast<Eigen::Index>(rest_dim);
  Mat out = Mat::Zero(rd * dout, rd * dout);
  for (Eigen::Index r = 0; r < rd; ++r)
    for (Eigen::Index c = 0; c < rd; ++c)
      out.block(r * dout, c * dout, dout, dout) =
          m_ * in.matrix().block(r * din, c * din, din, din) * m_.adjoint();
  return DensityOperator(std::move(out), out_regs);
}

// ---------------------------------------------------------------------------
// construction helpers

// |0...0> + n maximally-entangled pairs: sum_x |x>_a |x>_b / 2^(n/2),
// where pair i is (qubit i of a, qubit i of b).
inline StateVector bell_pairs(int n, const std::string& a = "A", const std::string& b = "B") {
  detail::require(n >= 1, "bell_pairs: n must be >= 1");
  RegisterList regs{{a, n}, {b, n}};
  const std::uint64_t dn = std::uint64_t{1} << n;
  Vec v = Vec::Zero(static_cast<Eigen::Index>(dn * dn));
  const double amp = 1.0 / std::sqrt(static_cast<double>(dn));
  for (std::uint64_t x = 0; x < dn; ++x) v(static_cast<Eigen::Index>((x << n) | x)) = amp;
  return StateVector(std::move(v), std::move(regs));
}

inline StateVector tensor(const StateVector& a, const StateVector& b) {
  RegisterList regs = a.registers();
  for (const auto& r : b.registers().items()) regs.append(r);  // collision -> throw
  detail::check_budget(static_cast<long long>(regs.dim()), "tensor");
  Vec v(static_cast<Eigen::Index>(regs.dim()));
  const auto db = static_cast<Eigen::Index>(b.dim());
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(a.dim()); ++i)
    v.segment(i * db, db) = a.amplitudes()(i) * b.amplitudes();
  return StateVector(std::move(v), std::move(regs));
}

inline DensityOperator tensor(const DensityOperator& a, const DensityOperator& b) {
  RegisterList regs = a.registers();
  for (const auto& r : b.registers().items()) regs.append(r);
  const auto d = static_cast<long long>(regs.dim());
  detail::check_budget(d * d, "tensor");
  const auto da = static_cast<Eigen::Index>(a.dim());
  const auto db = static_cast<Eigen::Index>(b.dim());
  Mat m(da * db, da * db);
  for (Eigen::Index i = 0; i < da; ++i)
    for (Eigen::Index j = 0; j < da; ++j)
      m.block(i * db, j * db, db, db) = a.matrix()(i, j) * b.matrix();
  return DensityOperator(std::move(m), std::move(regs));
}

inline Operator tensor(const Operator& a, const Operator& b) {
  RegisterList dom = a.domain(), cod = a.codomain();
  for (const auto& r : b.domain().items()) dom.append(r);
  for (const auto& r : b.codomain().items()) cod.append(r);
  const auto ra = a.matrix().rows(), ca = a.matrix().cols();
  const auto rb = b.matrix().rows(), cb = b.matrix().cols();
  Mat m(ra * rb, ca * cb);
  for (Eigen::Index i = 0; i < ra; ++i)
    for (Eigen::Index j = 0; j < ca; ++j)
      m.block(i * rb, j * cb, rb, cb) = a.matrix()(i, j) * b.matrix();
  return (a.is_unitary() && b.is_unitary()) ? Operator::unitary(std::move(m), dom)
                                            : Operator::isometry(std::move(m), dom, cod);
}

// X^u Z^v applied qubit-wise to one register: qubit t gets X^{u_t} Z^{v_t}.
// X^u Z^v |y> = (-1)^{v.y} |y^u>.
inline StateVector apply_pauli(const StateVector& s, std::string_view reg, const BitString& u,
                               const BitString& v) {
  const auto& r = s.registers().get(reg);
  detail::require(u.width == r.qubits && v.width == r.qubits,
                  "apply_pauli: bit string length does not match register width");
  const int sh = s.registers().shift(reg);
  const std::uint64_t xmask = static_cast<std::uint64_t>(u.value) << sh;
  Vec out(s.amplitudes().size());
  for (std::uint64_t i = 0; i < s.dim(); ++i) {
    const std::uint64_t y = (i >> sh) & ((std::uint64_t{1} << r.qubits) - 1);
    const int sign = (std::popcount(y & v.value) & 1) ? -1 : 1;
    out(static_cast<Eigen::Index>(i ^ xmask)) =
        static_cast<double>(sign) * s.amplitudes()(static_cast<Eigen::Index>(i));
  }
  return StateVector(std::move(out), s.registers());
}

// ---------------------------------------------------------------------------
// partial trace

inline DensityOperator DensityOperator::partial_trace(std::span<const std::string> keep) const {
  RegisterList kept;
  for (const auto& name : keep) kept.append(regs_.get(name));  // throws on unknown register
  std::vector<std::pair<int, int>> keep_spans;   // (shift in full index, width)
  std::vector<std::pair<int, int>> trace_spans;
  for (const auto& r : regs_.items()) {
    const bool k = std::find(keep.begin(), keep.end(), r.name) != keep.end();
    (k ? keep_spans : trace_spans).emplace_back(regs_.shift(r.name), r.qubits);
  }
  // kept registers appear in keep-list order in the output
  keep_spans.clear();
  for (const auto& name : keep) keep_spans.emplace_back(regs_.shift(name), regs_.get(name).qubits);

  const std::size_t dk = kept.dim();
  std::size_t dt = 1;
  for (const auto& [sh, w] : trace_spans) dt <<= w;

  auto assemble = [&](std::uint64_t kv, std::uint64_t tv) {
    std::uint64_t idx = 0;
    std::uint64_t rem = kv;
    for (auto it = keep_spans.rbegin(); it != keep_spans.rend(); ++it) {
      idx |= (rem & ((std::uint64_t{1} << it->second) - 1)) << it->first;
      rem >>= it->second;
    }
    rem = tv;
    for (auto it = trace_spans.rbegin(); it != trace_spans.rend(); ++it) {
      idx |= (rem & ((std::uint64_t{1} << it->second) - 1)) << it->first;
      rem >>= it->second;
    }
    return idx;
  };

  Mat out = Mat::Zero(static_cast<Eigen::Index>(dk), static_cast<Eigen::Index>(dk));
  for (std::uint64_t i = 0; i < dk; ++i)
    for (std::uint64_t j = 0; j < dk; ++j) {
      cxd acc = 0;
      for (std::uint64_t t = 0; t < dt; ++t)
        acc += m_(static_cast<Eigen::Index>(assemble(i, t)), static_cast<Eigen::Index>(assemble(j, t)));
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = acc;
    }
  return DensityOperator(std::move(out), std::move(kept));
}

// ---------------------------------------------------------------------------
// spectral helpers and functionals

namespace detail {

// Eigenvalues clamped per the central policy: tiny negatives to zero, larger
// negatives are an error.
inline Eigen::VectorXd clamped_spectrum(const Eigen::VectorXd& evals, const std::string& ctx) {
  Eigen::VectorXd out = evals;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (out(i) < -tol::kStructural)
      throw std::invalid_argument(ctx + ": negative eigenvalue " + std::to_string(out(i)));
    if (out(i) < 0) out(i) = 0;
  }
  return out;
}

inline Mat sqrt_psd(const Mat& m, const std::string& ctx) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  require(es.info() == Eigen::Success, ctx + ": eigensolve failed");
  const Eigen::VectorXd lam = clamped_spectrum(es.eigenvalues(), ctx);
  return es.eigenvectors() * lam.cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace detail

// H2(x) = -x log2 x - (1-x) log2 (1-x), with 0 log 0 = 0.
inline double binary_entropy(double x) {
  detail::require(x >= -tol::kProbability && x <= 1.0 + tol::kProbability,
                  "binary_entropy: argument outside [0,1]");
  x = std::clamp(x, 0.0, 1.0);
  double h = 0.0;
  if (x > 0.0) h -= x * std::log2(x);
  if (x < 1.0) h -= (1.0 - x) * std::log2(1.0 - x);
  return h;
}

// F(rho, sigma) = Tr sqrt(sqrt(rho) sigma sqrt(rho)); 1 iff equal, symmetric.
inline double fidelity(const DensityOperator& rho, const DensityOperator& sigma) {
  detail::require(rho.dim() == sigma.dim(), "fidelity: dimension mismatch");
  const Mat sr = detail::sqrt_psd(rho.matrix(), "fidelity");
  Eigen::SelfAdjointEigenSolver<Mat> es(sr * sigma.matrix() * sr, Eigen::EigenvaluesOnly);
  double f = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    f += std::sqrt(std::max(0.0, es.eigenvalues()(i)));
  return std::min(f, 1.0);
}

// fidelity against a pure target, F = sqrt(<psi| rho |psi>)
inline double fidelity(const DensityOperator& rho, const StateVector& psi) {
  detail::require(rho.dim() == psi.dim(), "fidelity: dimension mismatch");
  const double f2 = std::real(psi.amplitudes().dot(rho.matrix() * psi.amplitudes()));
  return std::sqrt(std::clamp(f2, 0.0, 1.0));
}

// ||rho - sigma||_1 = sum of absolute eigenvalues of the difference.
inline double trace_distance(const DensityOperator& rho, const DensityOperator& sigma) {
  detail::require(rho.dim() == sigma.dim(), "trace_distance: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Mat> es(rho.matrix() - sigma.matrix(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

// S(rho) = -sum lambda log2 lambda in bits, eigenvalues below kEigenFloor
// treated as zero.
inline double von_neumann_entropy(const DensityOperator& rho) {
  detail::require((rho.matrix() - rho.matrix().adjoint()).cwiseAbs().maxCoeff() <= tol::kStructural,
                  "von_neumann_entropy: non-Hermitian input");
  Eigen::SelfAdjointEigenSolver<Mat> es(rho.matrix(), Eigen::EigenvaluesOnly);
  const Eigen::VectorXd lam = detail::clamped_spectrum(es.eigenvalues(), "von_neumann_entropy");
  double s = 0.0;
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    if (lam(i) > tol::kEigenFloor) s -= lam(i) * std::log2(lam(i));
  return s;
}

// Canonical purification |Psi> = sum_k sqrt(lambda_k) |psi_k> |k>_eve.
// The purifying register is appended last.
inline StateVector purify(const DensityOperator& rho, const std::string& eve = "E") {
  Eigen::SelfAdjointEigenSolver<Mat> es(rho.matrix());
  detail::require(es.info() == Eigen::Success, "purify: eigensolve failed");
  const Eigen::VectorXd lam = detail::clamped_spectrum(es.eigenvalues(), "purify");
  int rank = 0;
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    if (lam(i) > tol::kEigenFloor) ++rank;
  rank = std::max(rank, 1);
  int ew = 1;
  while ((1 << ew) < rank) ++ew;

  RegisterList regs = rho.registers();
  regs.append({eve, ew});
  detail::check_budget(static_cast<long long>(regs.dim()), "purify");
  const auto de = std::uint64_t{1} << ew;
  Vec out = Vec::Zero(static_cast<Eigen::Index>(rho.dim() * de));
  int k = 0;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) <= tol::kEigenFloor) continue;
    const double w = std::sqrt(lam(i));
    for (std::uint64_t x = 0; x < rho.dim(); ++x)
      out(static_cast<Eigen::Index>(x * de + static_cast<std::uint64_t>(k))) +=
          w * es.eigenvectors()(static_cast<Eigen::Index>(x), i);
    ++k;
  }
  // renormalize away the truncated tail below the eigen floor
  out /= out.norm();
  return StateVector(std::move(out), std::move(regs));
}

}  // namespace pdist
