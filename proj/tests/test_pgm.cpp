#include <catch2/catch.hpp>

#include <cmath>
#include <complex>

#include "oracles.hpp"
#include "pdist/pgm.hpp"

using namespace pdist;

namespace {

// Brute-force minimum error for two pure states with a two-outcome projective
// measurement in their (real-rotated) span: grid plus local refinement.
double two_state_min_error_search(const Vec& s0, const Vec& s1, double p0, double p1) {
  // orthonormal basis of the span, phases chosen so both states are real
  Vec e0 = s0;
  Vec rest = s1 - e0.dot(s1) * e0;
  const double rest_norm = rest.norm();
  if (rest_norm < 1e-14) return std::min(p0, p1);  // identical states
  Vec e1 = rest / rest_norm;
  const cxd c01 = e0.dot(s1);
  // rotate e1's phase so <e1|s1> is real and positive; make <e0|s1> real too
  const cxd phase = (std::abs(c01) > 1e-14) ? c01 / std::abs(c01) : cxd(1, 0);
  const double a = std::abs(c01);
  const double b = rest_norm;
  (void)phase;
  // states in the span: s0 = (1, 0), s1 = (a, b) with a^2 + b^2 = 1
  auto error_at = [&](double th) {
    const double m0 = std::cos(th), m1 = std::sin(th);  // projector |m><m|
    const double keep0 = m0 * m0;                        // |<m|s0>|^2
    const double keep1 = (m0 * a + m1 * b) * (m0 * a + m1 * b);
    return p0 * (1.0 - keep0) + p1 * keep1;
  };
  double best = 1.0;
  double best_th = 0;
  for (int i = 0; i < 4000; ++i) {
    const double th = 3.14159265358979323846 * static_cast<double>(i) / 4000.0;
    const double e = error_at(th);
    if (e < best) {
      best = e;
      best_th = th;
    }
  }
  double lo = best_th - 0.001, hi = best_th + 0.001;
  for (int iter = 0; iter < 60; ++iter) {
    const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
    if (error_at(m1) < error_at(m2))
      hi = m2;
    else
      lo = m1;
  }
  return std::min(best, error_at(0.5 * (lo + hi)));
}

}  // namespace

TEST_CASE("phi_v product states") {
  SECTION("v = 0 gives |phi>^n") {
    const auto s = phi_v(2, 0.2, BitString(0, 2));
    const double c0 = std::sqrt(0.8), c1 = std::sqrt(0.2);
    CHECK(std::abs(s.amplitudes()(0) - c0 * c0) < 1e-15);
    CHECK(std::abs(s.amplitudes()(3) - c1 * c1) < 1e-15);
  }
  SECTION("q = 1/2 makes distinct v orthogonal") {
    for (std::uint32_t v = 1; v < 8; ++v) {
      const auto a = phi_v(3, 0.5, BitString(0, 3));
      const auto b = phi_v(3, 0.5, BitString(v, 3));
      CHECK(std::abs(a.inner(b)) < 1e-12);
    }
  }
  SECTION("overlap is (1-2q)^|v|") {
    const double q = 0.13;
    for (std::uint32_t v = 0; v < 8; ++v) {
      const auto a = phi_v(3, q, BitString(0, 3));
      const auto b = phi_v(3, q, BitString(v, 3));
      const double expect = std::pow(1.0 - 2.0 * q, BitString(v, 3).weight());
      CHECK(std::real(a.inner(b)) == Approx(expect).margin(1e-12));
    }
  }
}

TEST_CASE("PGM on orthogonal states is projective with zero error") {
  const std::vector<BitString> all{BitString(0, 2), BitString(1, 2), BitString(2, 2),
                                   BitString(3, 2)};
  const auto e = Ensemble::phase_flip(2, 0.5, all, 0.5);
  const auto m = pgm_construct(e);
  CHECK(average_error(e, m) == Approx(0.0).margin(1e-12));
  CHECK(std::abs(m.completeness_defect()) < 1e-9);
  // projective: elements are the states themselves
  for (std::size_t v = 0; v < e.states.size(); ++v)
    CHECK(std::abs(std::abs(m.theta_tilde[v].dot(e.states[v])) - 1.0) < 1e-10);
}

TEST_CASE("PGM elements stay complete and positive on random ensembles") {
  Rng rng(57);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + rng.uniform_int(2);
    const int count = 2 + rng.uniform_int((1 << n) - 2);
    std::vector<BitString> members;
    std::vector<std::uint32_t> pool;
    while (static_cast<int>(members.size()) < count) {
      const auto v = static_cast<std::uint32_t>(rng.uniform_int(1 << n));
      if (std::find(pool.begin(), pool.end(), v) != pool.end()) continue;
      pool.push_back(v);
      members.emplace_back(v, n);
    }
    const auto e = Ensemble::phase_flip(n, 0.1 + 0.3 * rng.uniform(), members, rng.uniform());
    const auto m = pgm_construct(e);
    // sum of elements <= I within tolerance, and junk = I - sum is PSD
    CHECK(m.completeness_defect() <= 1e-9);
    Eigen::SelfAdjointEigenSolver<Mat> es(Mat::Identity(m.dim(), m.dim()) - m.element_sum(),
                                          Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-9);
  }
}

TEST_CASE("PGM on two identical equiprobable states errs half the time") {
  Vec s(2);
  s << 1, 0;
  const Ensemble e({s, s}, {0.5, 0.5});
  const auto m = pgm_construct(e);
  CHECK(average_error(e, m) == Approx(0.5).margin(1e-12));
}

TEST_CASE("single-element ensemble decodes perfectly") {
  Vec s(2);
  s << std::sqrt(0.3), std::sqrt(0.7);
  const Ensemble e({s}, {1.0});
  CHECK(average_error(e, pgm_construct(e)) == Approx(0.0).margin(1e-14));
}

TEST_CASE("PGM achieves the Helstrom bound on equiprobable pure pairs") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const int dim = 2 + rng.uniform_int(5);
    const Vec s0 = oracle::random_pure(dim, rng);
    const Vec s1 = oracle::random_pure(dim, rng);
    const Ensemble e({s0, s1}, {0.5, 0.5});
    const double err = average_error(e, pgm_construct(e));
    const double c = std::abs(s0.dot(s1));
    const double helstrom = 0.5 * (1.0 - std::sqrt(std::max(0.0, 1.0 - c * c)));
    CHECK(err == Approx(helstrom).margin(1e-6));
    // and the exhaustive two-outcome search agrees
    const double brute = two_state_min_error_search(s0, s1, 0.5, 0.5);
    CHECK(brute == Approx(helstrom).margin(1e-6));
  }
}

TEST_CASE("average error matches a Monte-Carlo measurement simulation") {
  // n = 4, q = 0.1, random coset of size 2
  Rng rng(77);
  const int n = 4;
  const double q = 0.1;
  const auto code = LinearCode::random_code(n, n - 1, rng);
  const auto members = code.coset(BitString(1, n - 1));
  REQUIRE(members.size() == 2);
  const auto e = Ensemble::phase_flip(n, q, members, 0.3);
  const auto m = pgm_construct(e);
  const double exact = average_error(e, m);

  // simulate: draw v from priors, measure {|theta~^w><theta~^w|, junk}
  const int shots = 200000;
  int wrong = 0;
  Rng sim(991);
  for (int shot = 0; shot < shots; ++shot) {
    const int v = sim.sample(e.priors);
    std::vector<double> outcome_probs;
    double total = 0;
    for (const auto& t : m.theta_tilde) {
      const double p = std::norm(t.dot(e.states[static_cast<std::size_t>(v)]));
      outcome_probs.push_back(p);
      total += p;
    }
    outcome_probs.push_back(std::max(0.0, 1.0 - total));  // junk = failure
    const int w = sim.sample(outcome_probs);
    if (w != v) ++wrong;
  }
  const double simulated = static_cast<double>(wrong) / shots;
  const double sigma = std::sqrt(exact * (1.0 - exact) / shots);
  CHECK(std::abs(simulated - exact) < 3.0 * sigma + 1e-12);
}

TEST_CASE("Neumark extension") {
  SECTION("projective input needs no extension") {
    const std::vector<BitString> all{BitString(0, 1), BitString(1, 1)};
    const auto e = Ensemble::phase_flip(1, 0.5, all, 0.5);
    const auto ext = neumark_extend(pgm_construct(e));
    CHECK(ext.ext_dim == 1);
  }
  SECTION("three symmetric states in two dimensions extend to dimension four") {
    // trine: equiprobable, pairwise overlap -1/2
    std::vector<Vec> states;
    for (int k = 0; k < 3; ++k) {
      Vec s(2);
      const double th = 2.0 * 3.14159265358979323846 * k / 3.0;
      s << std::cos(th), std::sin(th);
      states.push_back(s);
    }
    const Ensemble e(states, {1.0 / 3, 1.0 / 3, 1.0 / 3});
    const auto povm = pgm_construct(e);
    const auto ext = neumark_extend(povm);
    CHECK(ext.base_dim * ext.ext_dim == 4);
    REQUIRE(ext.theta.size() == 3);
    for (int v = 0; v < 3; ++v)
      for (int w = 0; w < 3; ++w) {
        const cxd g = ext.theta[static_cast<std::size_t>(v)].dot(ext.theta[static_cast<std::size_t>(w)]);
        CHECK(std::abs(g - (v == w ? cxd(1, 0) : cxd(0, 0))) < 1e-10);
      }
  }
  SECTION("inner products against embedded inputs are reproduced") {
    const std::vector<BitString> members{BitString(0, 2), BitString(1, 2), BitString(3, 2)};
    const auto e = Ensemble::phase_flip(2, 0.2, members, 0.4);
    const auto povm = pgm_construct(e);
    const auto ext = neumark_extend(povm);
    for (std::size_t v = 0; v < members.size(); ++v)
      for (std::size_t w = 0; w < members.size(); ++w) {
        // <theta^v| (|phi^w> |0>) over the embedded block
        cxd lhs = 0;
        for (int a = 0; a < ext.base_dim; ++a)
          lhs += std::conj(ext.theta[v](ext.at(a, 0))) * e.states[w](a);
        const cxd rhs = povm.theta_tilde[v].dot(e.states[w]);
        CHECK(std::abs(lhs - rhs) < 1e-10);
      }
  }
}

TEST_CASE("sigma state") {
  SECTION("no phase noise is pure") {
    CHECK(von_neumann_entropy(sigma_state(0.3, 0.0)) == Approx(0.0).margin(1e-10));
  }
  SECTION("q = p_z = 1/2 is maximally mixed") {
    const auto s = sigma_state(0.5, 0.5);
    CHECK((s.matrix() - Mat::Identity(2, 2) / 2.0).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(von_neumann_entropy(s) == Approx(1.0).margin(1e-12));
  }
  SECTION("eigenvalues are {lambda+, 1-lambda+}") {
    for (double q : {0.1, 0.3, 0.45})
      for (double pz : {0.05, 0.2, 0.5}) {
        Eigen::SelfAdjointEigenSolver<Mat> es(sigma_state(q, pz).matrix(), Eigen::EigenvaluesOnly);
        const double lp = 0.5 * (1.0 + std::sqrt(1.0 - 16.0 * q * (1 - q) * pz * (1 - pz)));
        CHECK(es.eigenvalues().maxCoeff() == Approx(lp).margin(1e-12));
      }
  }
}

TEST_CASE("random subset decoding error") {
  const PauliDistribution d(0.25, 0.25, 0.25, 0.25);  // p_z = 1/2, uniform priors

  SECTION("zero exponent means singleton sets and zero error") {
    const auto stats = random_coset_error(4, 0.1, d, 0.0, 5, 1);
    CHECK(stats.set_size == 1);
    CHECK(stats.mean == Approx(0.0).margin(1e-12));
  }
  SECTION("q = 1/2 decodes any coset perfectly") {
    const auto stats = random_coset_error(4, 0.5, d, 0.5, 5, 2);
    CHECK(stats.mean == Approx(0.0).margin(1e-10));
  }
  SECTION("identical seeds reproduce identical trials") {
    const auto a = random_coset_error(5, 0.1, d, 0.4, 10, 99);
    const auto b = random_coset_error(5, 0.1, d, 0.4, 10, 99);
    CHECK(a.errors == b.errors);
  }
  SECTION("uniform subsets hit the rounded target size") {
    const auto stats =
        random_coset_error(4, 0.1, d, 0.5, 3, 7, SubsetMethod::UniformSubset);
    CHECK(stats.set_size == 4);  // round(2^2) = 4
  }
  SECTION("mean error decreases with n at fixed sub-capacity exponent") {
    // p_z = 0.17 keeps the rounded coset dimension at 1 for n = 4, 6, 8
    const auto bb = model_to_distribution(ProtocolModel(ProtocolKind::BB84, 0.17));
    const double s_sigma =
        von_neumann_entropy(sigma_state(0.1, marginals(bb).p_z));
    const double exponent = 0.5 * s_sigma;
    double prev = 1.0;
    for (int n : {4, 6, 8}) {
      const auto stats = random_coset_error(n, 0.1, bb, exponent, 50, 12345);
      CHECK(stats.set_size == 2);
      CHECK(stats.mean < prev);
      prev = stats.mean;
    }
  }
}
