#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "coirlq/linops.hpp"
#include "coirlq/model.hpp"
#include "coirlq/solver.hpp"

using namespace coirlq;

TEST_CASE("weight_update") {
  SECTION("unit smoothing of zero coefficients") {
    const Vector eta = weight_update(Vector::Zero(2), 1.0, 1.0, 2.0);
    REQUIRE(eta(0) == 1.0);
    REQUIRE(eta(1) == 1.0);
  }
  SECTION("no smoothing, nonzero coefficient") {
    Vector z(1);
    z << 2.0;
    const Vector eta = weight_update(z, 0.0, 1.0, 2.0);
    REQUIRE(std::abs(eta(0) - 0.5) <= 1e-16);
  }
  SECTION("q = 0.5 derived values") {
    Vector z(2);
    z << 1.0, 3.0;
    const Vector eta = weight_update(z, 1.0, 0.5, 2.0);
    // (z^2 + 1)^(-3/4), evaluated independently in extended precision
    for (Index i = 0; i < 2; ++i) {
      const long double expect = std::pow(static_cast<long double>(z(i)) * z(i) + 1.0L, -0.75L);
      REQUIRE(std::abs(eta(i) - static_cast<double>(expect)) <= 1e-14);
    }
    REQUIRE(std::abs(eta(0) - 0.5946035575013605) <= 1e-12);
    REQUIRE(std::abs(eta(1) - 0.1778279410038923) <= 1e-12);
  }
  SECTION("infinite weight signals an error") {
    REQUIRE_THROWS_AS(weight_update(Vector::Zero(3), 0.0, 0.5, 2.0), NumericError);
  }
  SECTION("domain checks") {
    REQUIRE_THROWS_AS(weight_update(Vector::Zero(1), 1.0, 0.0, 2.0), ConfigError);
    REQUIRE_THROWS_AS(weight_update(Vector::Zero(1), 1.0, 1.5, 2.0), ConfigError);
    REQUIRE_THROWS_AS(weight_update(Vector::Zero(1), 1.0, 0.5, 0.5), ConfigError);
  }
}

TEST_CASE("x_update") {
  SECTION("scalar instance") {
    Matrix a(1, 1), omega(1, 1);
    a << 1.0;
    omega << 1.0;
    Vector y(1), eta(1);
    y << 4.0;
    eta << 1.0;
    const Vector x = x_update(a, y, omega, eta, 1.0, 1.0);
    REQUIRE(std::abs(x(0) - 2.0) <= 1e-12);
  }
  SECTION("zero weight reduces to plain least squares") {
    Matrix a(1, 1), omega(1, 1);
    a << 2.0;
    omega << 1.0;
    Vector y(1), eta(1);
    y << 6.0;
    eta << 0.0;
    const Vector x = x_update(a, y, omega, eta, 1.0, 1.0);
    REQUIRE(std::abs(x(0) - 3.0) <= 1e-12);
  }
  SECTION("diagonal system") {
    const Matrix a = Matrix::Identity(2, 2);
    Vector y(2), eta(2);
    y << 1.0, 2.0;
    eta << 1.0, 4.0;
    const Vector x = x_update(a, y, a, eta, 0.5, 1.0);
    REQUIRE(std::abs(x(0) - 2.0 / 3.0) <= 1e-12);
    REQUIRE(std::abs(x(1) - 2.0 / 3.0) <= 1e-12);
  }
  SECTION("normal-equation residual stays below 1e-8, benign and stiff") {
    const Matrix a = gaussian_measurement(10, 6, 3);
    const Matrix omega = random_tight_frame(9, 6, 4);
    const Vector y = observe(a, Vector::Ones(6), 0.0, 0);
    Vector eta = Vector::Ones(9);
    Vector x = x_update(a, y, omega, eta, 1e-3, 0.7);
    REQUIRE(normal_equation_residual(a, y, omega, eta, 1e-3, 0.7, x) <= 1e-8);

    // weight spread far past what a formed normal matrix can hold
    for (Index i = 0; i < 4; ++i) eta(i) = 1e18;
    x = x_update(a, y, omega, eta, 1e-3, 0.7);
    REQUIRE(x.allFinite());
    REQUIRE(normal_equation_residual(a, y, omega, eta, 1e-3, 0.7, x) <= 1e-8);
  }
  SECTION("perturbations never improve the weighted objective") {
    const Matrix a = gaussian_measurement(8, 5, 9);
    const Matrix omega = random_tight_frame(7, 5, 10);
    Vector xsig(5);
    xsig << 1, -1, 2, 0.5, -0.25;
    const Vector y = a * xsig;
    Rng rng(31);
    Vector eta(7);
    for (Index i = 0; i < 7; ++i) eta(i) = std::exp(rng.gaussian());
    const double lambda = 0.01, q = 0.7;
    const Vector x = x_update(a, y, omega, eta, lambda, q);
    const auto weighted = [&](const Vector& v) {
      return 0.5 * (y - a * v).squaredNorm() +
             0.5 * lambda * q * eta.cwiseProduct((omega * v).cwiseAbs2()).sum();
    };
    const double base = weighted(x);
    for (int dir = 0; dir < 10; ++dir) {
      Vector delta(5);
      for (Index i = 0; i < 5; ++i) delta(i) = rng.gaussian();
      delta *= 1e-5 / delta.norm();
      REQUIRE(weighted(x + delta) >= base - 1e-12 * (1.0 + base));
      REQUIRE(weighted(x - delta) >= base - 1e-12 * (1.0 + base));
    }
  }
}

TEST_CASE("epsilon_update") {
  Vector z(4);
  z << 3, 1, 2, 0.5;
  REQUIRE(epsilon_update(z, 1.0, 0.5, 2) == 0.5);

  Vector z2(3);
  z2 << 0, 0, 5;
  REQUIRE(epsilon_update(z2, 1.0, 0.9, 2) == 0.0);

  Vector z3(4);
  z3 << 3, 1, 2, 0.9;  // candidate 0.45
  REQUIRE(epsilon_update(z3, 0.1, 0.5, 2) == 0.1);

  REQUIRE_THROWS_AS(epsilon_update(z, 1.0, 0.5, 0), ConfigError);
  REQUIRE_THROWS_AS(epsilon_update(z, 1.0, 0.5, 5), ConfigError);
}

TEST_CASE("objective") {
  SECTION("zero at a consistent cosparse point") {
    const Matrix a = Matrix::Identity(3, 3);
    const Matrix omega = Matrix::Identity(3, 3);
    REQUIRE(objective(Vector::Zero(3), 0.0, a, Vector::Zero(3), omega, 1.0, 0.7, 2.0) == 0.0);
  }
  SECTION("scalar arithmetic") {
    Matrix a(1, 1), omega(1, 1);
    a << 1.0;
    omega << 1.0;
    Vector y(1), x(1);
    y << 2.0;
    x << 1.0;
    REQUIRE(std::abs(objective(x, 0.0, a, y, omega, 1.0, 1.0, 2.0) - 1.5) <= 1e-15);
  }
  SECTION("variational identity at the optimal weights") {
    Rng rng(77);
    for (const double alpha : {2.0, 3.0}) {
      for (const double q : {0.4, 1.0}) {
        for (const double eps : {0.3, 1.0}) {
          Matrix a(7, 5), omega(9, 5);
          for (Index i = 0; i < a.size(); ++i) a(i / 5, i % 5) = rng.gaussian();
          for (Index i = 0; i < omega.size(); ++i) omega(i / 5, i % 5) = rng.gaussian();
          Vector x(5), y(7);
          for (Index i = 0; i < 5; ++i) x(i) = rng.gaussian();
          for (Index i = 0; i < 7; ++i) y(i) = rng.gaussian();
          const double lambda = 0.05;

          const Vector z = omega * x;
          const Vector eta = weight_update(z, eps, q, alpha);
          double inner = 0.0;
          for (Index i = 0; i < z.size(); ++i) {
            const double za = std::pow(std::abs(z(i)), alpha) + std::pow(eps, alpha);
            inner += eta(i) * za + ((alpha - q) / q) * std::pow(eta(i), -q / (alpha - q));
          }
          const double via_weights = 0.5 * (y - a * x).squaredNorm() + (lambda * q / alpha) * inner;
          const double closed = objective(x, eps, a, y, omega, lambda, q, alpha);
          REQUIRE(std::abs(closed - via_weights) <= 1e-12 * (1.0 + std::abs(closed)));
        }
      }
    }
  }
}

TEST_CASE("solve") {
  SECTION("zero observations give the zero signal") {
    const Matrix a = gaussian_measurement(5, 8, 1);
    const Matrix omega = random_tight_frame(10, 8, 2);
    SolverConfig cfg;
    cfg.q = 0.7;
    cfg.l = 7;
    const SolverResult res = solve(a, Vector::Zero(5), omega, cfg);
    REQUIRE(res.converged);
    REQUIRE(res.x_hat.norm() == 0.0);
    // F at the exit point and exit eps is exactly zero (the trace column
    // carries the eps_floor-smoothed value, which is merely tiny)
    REQUIRE(objective(res.x_hat, res.trace.back().eps, a, Vector::Zero(5), omega, cfg.lambda,
                      cfg.q, cfg.alpha) == 0.0);
    REQUIRE(res.trace.back().objective <= 1e-9);
  }
  SECTION("recovers a cosparse signal from 80 of 120 measurements") {
    const Problem prob = make_problem(120, 144, 80, 99, 0.0, 7);
    SolverConfig cfg;
    cfg.q = 0.7;
    cfg.lambda = 1e-4;
    cfg.l = 99;
    const SolverResult res = solve(prob.A, prob.y, prob.omega, cfg);
    REQUIRE(res.converged);
    REQUIRE(relative_error(res.x_hat, prob.x_true) <= 1e-4);
    REQUIRE(res.nonmonotone_iterations.empty());
  }
  SECTION("descent and eps monotonicity across q") {
    for (const double q : {0.3, 0.7, 1.0}) {
      const Problem prob = make_problem(30, 36, 18, 24, 0.0, 100 + static_cast<int>(q * 10));
      SolverConfig cfg;
      cfg.q = q;
      cfg.lambda = 1e-4;
      cfg.l = 24;
      cfg.max_iter = 400;
      const SolverResult res = solve(prob.A, prob.y, prob.omega, cfg);
      for (std::size_t i = 1; i < res.trace.size(); ++i) {
        const double prev = res.trace[i - 1].objective;
        REQUIRE(res.trace[i].objective <= prev + 1e-9 * (1.0 + prev));
        REQUIRE(res.trace[i].eps <= res.trace[i - 1].eps);
      }
      REQUIRE(res.nonmonotone_iterations.empty());
    }
  }
  SECTION("iterate norms respect the q = 1 bound") {
    const Problem prob = make_problem(24, 30, 14, 18, 0.0, 55);
    SolverConfig cfg;
    cfg.q = 1.0;
    cfg.lambda = 1e-3;
    cfg.l = 18;
    cfg.max_iter = 300;
    CoirlqSession session(prob.A, prob.y, prob.omega, cfg);
    const double f0 = session.current_objective();
    const double sigma_min = spectrum(prob.omega).sigma_min;
    REQUIRE(sigma_min > 0.0);
    const double bound = (f0 / cfg.lambda) / sigma_min;
    for (long k = 1; k <= cfg.max_iter; ++k) {
      const auto info = session.step();
      REQUIRE(session.x().norm() <= bound * (1.0 + 1e-9));
      if (session.should_stop(info.diff_inf)) break;
    }
  }
  SECTION("the zero fixed point reproduces itself exactly") {
    const Matrix a = gaussian_measurement(4, 6, 12);
    const Matrix omega = random_tight_frame(8, 6, 13);
    SolverConfig cfg;
    cfg.l = 6;
    CoirlqSession session(a, Vector::Zero(4), omega, cfg);
    session.step();
    REQUIRE(session.x() == Vector::Zero(6));
    REQUIRE(session.eps() == 0.0);
    session.step();
    REQUIRE(session.x() == Vector::Zero(6));
    REQUIRE(session.eps() == 0.0);
  }
  SECTION("trace bookkeeping") {
    const Problem prob = make_problem(12, 16, 8, 10, 0.0, 3);
    SolverConfig cfg;
    cfg.l = 10;
    cfg.max_iter = 50;
    const SolverResult res = solve(prob.A, prob.y, prob.omega, cfg);
    REQUIRE(res.trace.front().k == 0);
    REQUIRE(res.trace.size() == static_cast<std::size_t>(res.iterations) + 1);
    for (std::size_t i = 0; i < res.trace.size(); ++i)
      REQUIRE(res.trace[i].k == static_cast<long>(i));
  }
  SECTION("configuration errors") {
    const Matrix a = Matrix::Identity(3, 3);
    SolverConfig cfg;
    cfg.l = 3;
    cfg.alpha = 3.0;
    REQUIRE_THROWS_AS(solve(a, Vector::Zero(3), a, cfg), ConfigError);
    cfg.alpha = 2.0;
    cfg.q = 1.5;
    REQUIRE_THROWS_AS(solve(a, Vector::Zero(3), a, cfg), ConfigError);
    cfg.q = 0.7;
    cfg.shrink = 1.0;
    REQUIRE_THROWS_AS(solve(a, Vector::Zero(3), a, cfg), ConfigError);
  }
}
