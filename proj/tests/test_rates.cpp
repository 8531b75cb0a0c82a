#include <catch2/catch.hpp>

#include <cmath>

#include "pdist/pgm.hpp"
#include "pdist/rates.hpp"

using namespace pdist;

TEST_CASE("lambda_plus") {
  CHECK(lambda_plus(0.0, 0.3) == 1.0);
  CHECK(lambda_plus(0.5, 0.5) == Approx(0.5).margin(1e-15));
  SECTION("matches the sigma-state eigensolver on a grid") {
    for (int i = 0; i <= 20; ++i)
      for (int j = 0; j <= 20; ++j) {
        const double q = i / 20.0, pz = j / 20.0;
        Eigen::SelfAdjointEigenSolver<Mat> es(sigma_state(q, pz).matrix(),
                                              Eigen::EigenvaluesOnly);
        CHECK(lambda_plus(q, pz) == Approx(es.eigenvalues().maxCoeff()).margin(1e-12));
      }
  }
}

TEST_CASE("key rate formula") {
  SECTION("no channel noise, no added noise: one key bit per signal") {
    const auto r = key_rate(RateInput(PauliDistribution(1, 0, 0, 0), 0.0));
    CHECK(r.R == Approx(1.0).margin(1e-15));
  }
  SECTION("BB84 at q = 0 collapses to 1 - 2 H2(Q)") {
    for (double Q : {0.02, 0.06, 0.1}) {
      const auto d = model_to_distribution(ProtocolModel(ProtocolKind::BB84, Q));
      const auto r = key_rate(RateInput(d, 0.0));
      CHECK(r.R == Approx(1.0 - 2.0 * binary_entropy(Q)).margin(1e-12));
    }
  }
  SECTION("q = 0 recovers the no-processing rate exactly") {
    const auto d = model_to_distribution(ProtocolModel(ProtocolKind::SixState, 0.08));
    const auto m = marginals(d);
    const auto r = key_rate(RateInput(d, 0.0));
    const double expect = 1.0 - binary_entropy(m.p_x) -
                          (1 - m.p_u1) * binary_entropy(m.p1_given_u0) -
                          m.p_u1 * binary_entropy(m.p1_given_u1);
    CHECK(r.R == Approx(expect).margin(1e-14));
    CHECK(r.shield_gain == Approx(0.0).margin(1e-14));  // lambda+ = 1 at q = 0
  }
  SECTION("the term identity holds as stated") {
    const auto d = model_to_distribution(ProtocolModel(ProtocolKind::BB84, 0.09));
    const auto r = key_rate(RateInput(d, 0.31));
    CHECK(r.R == Approx(1.0 - r.bit_cost - r.phase_cost + r.shield_gain).margin(1e-12));
  }
  SECTION("R(q = 1/2) vanishes identically") {
    for (double Q : {0.05, 0.12, 0.2}) {
      const auto d = model_to_distribution(ProtocolModel(ProtocolKind::BB84, Q));
      CHECK(key_rate(RateInput(d, 0.5)).R == Approx(0.0).margin(1e-12));
    }
  }
  SECTION("shield gain equals the weighted sigma entropy") {
    for (double Q : {0.05, 0.1})
      for (double q : {0.1, 0.3, 0.5}) {
        const auto d = model_to_distribution(ProtocolModel(ProtocolKind::SixState, Q));
        const auto m = marginals(d);
        const auto r = key_rate(RateInput(d, q));
        const double direct = (1 - m.p_u1) * von_neumann_entropy(sigma_state(q, m.p1_given_u0)) +
                              m.p_u1 * von_neumann_entropy(sigma_state(q, m.p1_given_u1));
        CHECK(r.shield_gain == Approx(direct).margin(1e-10));
      }
  }
}

TEST_CASE("optimizing the added noise") {
  SECTION("a perfect channel wants no noise") {
    const auto opt = optimize_q(PauliDistribution(1, 0, 0, 0));
    CHECK(opt.q_star == Approx(0.0).margin(1e-8));
    CHECK(opt.R_star == Approx(1.0).margin(1e-12));
  }
  SECTION("optimization dominates any feasible point") {
    const auto d = model_to_distribution(ProtocolModel(ProtocolKind::BB84, 0.05));
    const auto opt = optimize_q(d);
    CHECK(opt.R_star >= key_rate(RateInput(d, 0.0)).R - 1e-12);
  }
  SECTION("approaching the threshold drives the optimal noise toward 1/2") {
    const auto near = optimize_q(model_to_distribution(ProtocolModel(ProtocolKind::BB84, 0.123)));
    CHECK(near.R_star > 1e-12);
    // the maximizer marches toward q = 1/2 as Q climbs
    double prev_q = -1;
    for (double Q : {0.11, 0.12, 0.123, 0.124}) {
      const auto opt = optimize_q(model_to_distribution(ProtocolModel(ProtocolKind::BB84, Q)));
      CHECK(opt.q_star > prev_q);
      prev_q = opt.q_star;
    }
    CHECK(prev_q > 0.4);
  }
  SECTION("above threshold no q < 1/2 helps") {
    const auto d = model_to_distribution(ProtocolModel(ProtocolKind::BB84, 0.125));
    for (int i = 0; i < 200; ++i) {
      const double q = 0.4999 * i / 199.0;
      CHECK(key_rate(RateInput(d, q)).R < 0.0);
    }
    CHECK(optimize_q(d).R_star <= 1e-9);
  }
  SECTION("positive rate at Q = 0.12 for BB84") {
    CHECK(optimize_q(model_to_distribution(ProtocolModel(ProtocolKind::BB84, 0.12))).R_star >
          1e-6);
  }
}

TEST_CASE("thresholds") {
  SECTION("BB84 with optimized noise") {
    const double t = threshold(ProtocolKind::BB84);
    CHECK(t == Approx(0.1240).margin(5e-4));
  }
  SECTION("six-state with optimized noise") {
    const double t = threshold(ProtocolKind::SixState);
    CHECK(t == Approx(0.1410).margin(5e-4));
  }
  SECTION("BB84 with q forced to zero reduces to the plain one-way threshold") {
    const double t = threshold(ProtocolKind::BB84, QPolicy::Fixed, 0.0);
    CHECK(t == Approx(0.1100).margin(5e-4));
    // oracle: direct bisection of 1 - 2 H2(Q)
    double lo = 0.05, hi = 0.25;
    while (hi - lo > 1e-7) {
      const double mid = 0.5 * (lo + hi);
      if (1.0 - 2.0 * binary_entropy(mid) > 0)
        lo = mid;
      else
        hi = mid;
    }
    CHECK(t == Approx(0.5 * (lo + hi)).margin(2e-5));
  }
  SECTION("six-state with q forced to zero lands on the plain one-way value") {
    CHECK(threshold(ProtocolKind::SixState, QPolicy::Fixed, 0.0) ==
          Approx(0.1262).margin(5e-4));
  }
}

TEST_CASE("rate curves") {
  std::vector<double> grid;
  for (int i = 0; i <= 14; ++i) grid.push_back(0.01 * i);

  SECTION("Q = 0 row gives R = 1 and the optimized curve dominates fixed q") {
    const auto opt = rate_curve(ProtocolKind::BB84, grid, QPolicy::Optimized);
    const auto fixed = rate_curve(ProtocolKind::BB84, grid, QPolicy::Fixed, 0.2);
    CHECK(opt.front().rate.R == Approx(1.0).margin(1e-12));
    for (std::size_t i = 0; i < grid.size(); ++i)
      CHECK(opt[i].rate.R >= fixed[i].rate.R - 1e-9);
  }
  SECTION("the optimized curve brackets the threshold") {
    const auto rows = rate_curve(ProtocolKind::BB84, grid, QPolicy::Optimized);
    bool seen_positive = false, seen_nonpositive = false;
    for (const auto& row : rows) {
      if (row.Q < 0.12) seen_positive = seen_positive || row.rate.R > 1e-12;
      if (row.Q > 0.125) seen_nonpositive = seen_nonpositive || row.rate.R <= 1e-9;
    }
    CHECK(seen_positive);
    CHECK(seen_nonpositive);
  }
  SECTION("rates never exceed one") {
    for (const auto& row : rate_curve(ProtocolKind::SixState, grid, QPolicy::Optimized))
      CHECK(row.rate.R <= 1.0 + 1e-12);
  }
}
