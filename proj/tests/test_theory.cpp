#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "coirlq/rng.hpp"
#include "coirlq/theory.hpp"

using namespace coirlq;

namespace {

TheoryInputs inputs(double d1, double d2, double kappa, double rho, double q, double sigma_min = 1.0) {
  TheoryInputs in;
  in.delta_rho_s = d1;
  in.delta_rho1_s = d2;
  in.kappa = kappa;
  in.block_ratio = rho;
  in.q = q;
  in.sigma_min = sigma_min;
  return in;
}

}  // namespace

TEST_CASE("check_condition") {
  REQUIRE(check_condition(inputs(0.0, 0.0, 1.0, 9.0, 1.0)));
  // rho = 4, q = 1: t = 1, right-hand side collapses to zero
  REQUIRE_FALSE(check_condition(inputs(0.0, 0.0, 1.0, 4.0, 1.0)));
  // evaluated independently: t = 1.2^-0.7 * 9^0.65 - 1 = 2.67139...,
  // lhs = 0.3 + 16.5672*0.3 = 5.2702 < rhs = 15.5672
  REQUIRE(check_condition(inputs(0.3, 0.3, 1.2, 9.0, 0.7)));
  // kappa hypothesis violated -> error, not false
  REQUIRE_THROWS_AS(check_condition(inputs(0.0, 0.0, 3.0, 2.0, 1.0)), InfeasibleError);
  REQUIRE_THROWS_AS(check_condition(inputs(-0.1, 0.0, 1.0, 9.0, 1.0)), ConfigError);
}

TEST_CASE("strong_threshold") {
  REQUIRE(strong_threshold(1.0, 1.0, 9.0) == 0.6);
  REQUIRE(strong_threshold(1.0, 1.0, 4.0) == 0.0);
  // t = 9^0.75 - 1 = 4.19615..., threshold = (t^4-1)/(t^4+1) = 0.9935697713...
  REQUIRE(std::abs(strong_threshold(1.0, 0.5, 9.0) - 0.99356977131297934) <= 1e-14);
  REQUIRE_THROWS_AS(strong_threshold(3.0, 1.0, 2.0), InfeasibleError);
  REQUIRE_THROWS_AS(strong_threshold(0.5, 1.0, 9.0), ConfigError);
}

TEST_CASE("bound_constants") {
  SECTION("exact rational point") {
    const BoundConstants c = bound_constants(inputs(0.0, 0.0, 1.0, 9.0, 1.0));
    REQUIRE(c.c1 == 3.0);
    REQUIRE(c.c2 == 4.0);
  }
  SECTION("degenerate denominator") {
    REQUIRE_THROWS_AS(bound_constants(inputs(0.0, 0.0, 1.0, 4.0, 1.0)), InfeasibleError);
  }
  SECTION("derived point, frozen from extended-precision evaluation") {
    const BoundConstants c = bound_constants(inputs(0.1, 0.2, 1.0, 9.0, 0.7));
    REQUIRE(std::abs(c.c1 - 2.1965051572651745) <= 1e-13);
    REQUIRE(std::abs(c.c2 - 2.0629709617295567) <= 1e-13);
  }
  SECTION("agrees with check_condition on random inputs (two routes, one condition)") {
    Rng rng(404);
    for (int rep = 0; rep < 500; ++rep) {
      const double q = 0.1 + 0.9 * rng.uniform();
      const double rho = 2.0 + 20.0 * rng.uniform();
      const double kappa = 1.0 + 0.5 * rng.uniform();
      const double d1 = rng.uniform() * 0.999;
      const double d2 = rng.uniform() * 0.999;
      const TheoryInputs in = inputs(d1, d2, kappa, rho, q);
      bool holds;
      try {
        holds = check_condition(in);
      } catch (const InfeasibleError&) {
        REQUIRE_THROWS_AS(bound_constants(in), InfeasibleError);
        continue;
      }
      if (holds) {
        const BoundConstants c = bound_constants(in);
        REQUIRE(c.c1 > 0.0);
        REQUIRE(c.c2 > 0.0);
        REQUIRE(std::isfinite(c.c1));
        REQUIRE(std::isfinite(c.c2));
      } else {
        REQUIRE_THROWS_AS(bound_constants(in), InfeasibleError);
      }
    }
  }
}

TEST_CASE("sq_from_s1") {
  SECTION("q = 1 is the identity map") {
    for (long s1 : {1L, 3L, 10L}) {
      const SparsityMap mp = sq_from_s1(s1, 7.0, 1.0);
      REQUIRE(mp.s_q == s1);
      REQUIRE(mp.rho_q == 7.0);
    }
  }
  SECTION("worked example") {
    const SparsityMap mp = sq_from_s1(2, 9.0, 0.1);
    REQUIRE(mp.s_q == 4);
    REQUIRE(mp.rho_q == 4.0);
  }
  SECTION("product identity exact on the integer grid") {
    for (long rho1 = 2; rho1 <= 20; ++rho1)
      for (long s1 = 1; s1 <= 10; ++s1)
        for (int qi = 1; qi <= 10; ++qi) {
          const double q = qi / 10.0;
          const SparsityMap mp = sq_from_s1(s1, static_cast<double>(rho1), q);
          REQUIRE(mp.s_q >= 1);
          REQUIRE(mp.rho_q >= 2.0);
          const double lhs = (mp.rho_q + 1.0) * static_cast<double>(mp.s_q);
          const double rhs = (static_cast<double>(rho1) + 1.0) * static_cast<double>(s1);
          REQUIRE(lhs == rhs);
        }
  }
  SECTION("non-integer product rejected") {
    REQUIRE_THROWS_AS(sq_from_s1(2, 9.2, 0.5), ConfigError);
  }
}

TEST_CASE("monotonicity of the recovery conditions") {
  SECTION("strong_threshold strictly decreasing in q") {
    // rho capped at 8: past that the q = 0.1 threshold is within half an
    // ulp of 1 in double and strictness cannot be represented
    for (const double rho : {5.0, 6.0, 7.0, 8.0}) {
      double prev = 2.0;
      for (int qi = 1; qi <= 10; ++qi) {
        const double thr = strong_threshold(1.0, qi / 10.0, rho);
        REQUIRE(thr < prev);
        prev = thr;
      }
    }
  }
  SECTION("strong_threshold decreasing in kappa") {
    double prev = 2.0;
    for (const double kappa : {1.0, 1.1, 1.3, 1.6}) {
      const double thr = strong_threshold(kappa, 0.7, 9.0);
      REQUIRE(thr < prev);
      prev = thr;
    }
  }
  SECTION("C1 strictly increasing in q") {
    double prev = 0.0;
    for (int qi = 1; qi <= 10; ++qi) {
      const BoundConstants c = bound_constants(inputs(0.1, 0.1, 1.0, 9.0, qi / 10.0));
      REQUIRE(c.c1 > prev);
      prev = c.c1;
    }
  }
  SECTION("the threshold form implies the two-delta condition") {
    Rng rng(909);
    for (int rep = 0; rep < 500; ++rep) {
      const double q = 0.1 + 0.9 * rng.uniform();
      const double rho = 2.0 + 30.0 * rng.uniform();
      const double kappa = 1.0 + 0.3 * rng.uniform();
      double thr;
      try {
        thr = strong_threshold(kappa, q, rho);
      } catch (const InfeasibleError&) {
        continue;
      }
      if (thr <= 0.0) continue;
      const double d2 = thr * rng.uniform() * 0.999999;
      const double d1 = d2 * rng.uniform();
      REQUIRE(check_condition(inputs(d1, d2, kappa, rho, q)));
    }
  }
}

TEST_CASE("min_feasible_q") {
  SECTION("q = 1 feasible when the threshold clears delta") {
    const auto res = min_feasible_q(0.5, 1.0, {1.0}, {9.0});
    REQUIRE(res.has_value());
    REQUIRE(res->q == 1.0);
    REQUIRE(res->rho == 9.0);
  }
  SECTION("tight delta forces small q") {
    const auto res = min_feasible_q(0.99, 1.0, default_q_grid(), default_rho_grid());
    REQUIRE(res.has_value());
    REQUIRE(res->q <= 0.5);
    REQUIRE(strong_threshold(1.0, res->q, res->rho) > 0.99);
  }
  SECTION("delta near one still admits a small enough q") {
    const auto res = min_feasible_q(0.999999, 1.0, default_q_grid(), default_rho_grid());
    REQUIRE(res.has_value());
  }
  SECTION("no feasible point is a valid outcome") {
    const auto res = min_feasible_q(0.999, 1.0, {1.0}, {9.0});
    REQUIRE_FALSE(res.has_value());
  }
  SECTION("grid validation") {
    REQUIRE_THROWS_AS(min_feasible_q(0.5, 1.0, {}, {9.0}), ConfigError);
    REQUIRE_THROWS_AS(min_feasible_q(1.5, 1.0, {1.0}, {9.0}), ConfigError);
  }
}

TEST_CASE("recovery_error_bound") {
  REQUIRE(recovery_error_bound(0.0, 1e-4, 0.0, 1.0) == 1.0);
  REQUIRE(recovery_error_bound(0.75, 1e-4, 0.0, 1.0) == 2.0);
  REQUIRE(std::abs(recovery_error_bound(0.19, 1e-4, 2.0, 0.1) - 2.1 / 0.9) <= 1e-15);
  REQUIRE_THROWS_AS(recovery_error_bound(1.0, 1e-4, 0.0, 1.0), InfeasibleError);
  REQUIRE_THROWS_AS(recovery_error_bound(0.5, 0.0, 0.0, 1.0), ConfigError);
  REQUIRE_THROWS_AS(recovery_error_bound(0.5, 1e-4, -1.0, 1.0), ConfigError);
}
