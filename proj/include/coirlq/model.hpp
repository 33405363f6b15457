#ifndef COIRLQ_MODEL_HPP
#define COIRLQ_MODEL_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "linops.hpp"
#include "rng.hpp"
#include "types.hpp"

namespace coirlq {

struct Problem {
  Matrix A;       // m x d measurement matrix
  Vector y;       // m observations
  Matrix omega;   // p x d analysis operator
  Vector x_true;  // d, unit norm
  std::vector<Index> cosupport_target;
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

struct RecoveryMetrics {
  double relative_error = 0.0;
  bool success = false;
  long iterations = 0;
};

// Draw Lambda uniformly among size-l row subsets, then a random unit-norm
// element of null(Omega_Lambda).
inline std::pair<Vector, std::vector<Index>> gen_cosparse_signal(const Matrix& omega, Index l,
                                                                 std::uint64_t seed) {
  const Index p = omega.rows();
  if (l < 1 || l > p) throw ConfigError("gen_cosparse_signal: l must satisfy 1 <= l <= p");
  Rng rng(seed);

  std::vector<Index> pool(static_cast<std::size_t>(p));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < l; ++i) {
    const auto j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(p - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  std::vector<Index> lambda(pool.begin(), pool.begin() + l);
  std::sort(lambda.begin(), lambda.end());

  Matrix omega_lambda(l, omega.cols());
  for (Index i = 0; i < l; ++i) omega_lambda.row(i) = omega.row(lambda[static_cast<std::size_t>(i)]);

  const Matrix basis = null_space_basis(omega_lambda);
  if (basis.cols() == 0)
    throw InfeasibleError("infeasible cosparsity: null(Omega_Lambda) is trivial for l = " +
                          std::to_string(l));

  Vector coeff(basis.cols());
  for (Index i = 0; i < coeff.size(); ++i) coeff(i) = rng.gaussian();
  Vector x = basis * coeff;
  const double norm = x.norm();
  if (!(norm > 0) || !std::isfinite(norm))
    throw NumericError("gen_cosparse_signal: degenerate null-space sample");
  x /= norm;
  return {std::move(x), std::move(lambda)};
}

// i.i.d. standard normal entries, each column scaled to unit Euclidean norm.
inline Matrix gaussian_measurement(Index m, Index d, std::uint64_t seed) {
  if (m < 1 || d < 1) throw DimensionError("gaussian_measurement: dimensions must be positive");
  Rng rng(seed);
  Matrix a(m, d);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < d; ++j) a(i, j) = rng.gaussian();
  for (Index j = 0; j < d; ++j) {
    const double norm = a.col(j).norm();
    if (!(norm > 0)) throw NumericError("gaussian_measurement: zero column");
    a.col(j) /= norm;
  }
  return a;
}

// y = A x + sigma * eps with eps ~ N(0, I); sigma = 0 returns exactly A x.
inline Vector observe(const Matrix& A, const Vector& x, double sigma, std::uint64_t seed) {
  if (A.cols() != x.size())
    throw DimensionError("observe: A has " + std::to_string(A.cols()) +
                         " columns but x has length " + std::to_string(x.size()));
  if (sigma < 0) throw ConfigError("observe: sigma must be nonnegative");
  Vector y = A * x;
  if (sigma > 0) {
    Rng rng(seed);
    for (Index i = 0; i < y.size(); ++i) y(i) += sigma * rng.gaussian();
  }
  return y;
}

inline double relative_error(const Vector& x_hat, const Vector& x_true) {
  if (x_hat.size() != x_true.size())
    throw DimensionError("relative_error: length mismatch");
  const double denom = x_true.norm();
  if (!(denom > 0)) throw ConfigError("relative_error: undefined for a zero true signal");
  return (x_hat - x_true).norm() / denom;
}

// Full instance per the simulation protocol: random tight frame, l-cosparse
// unit-norm signal, column-normalized Gaussian measurements, noisy
// observation. Sub-generators get seeds derived from the master seed.
inline Problem make_problem(Index d, Index p, Index m, Index l, double sigma, std::uint64_t seed) {
  Problem prob;
  prob.sigma = sigma;
  prob.seed = seed;
  prob.omega = random_tight_frame(p, d, derive_seed(seed, 1));
  auto [x, lambda] = gen_cosparse_signal(prob.omega, l, derive_seed(seed, 2));
  prob.x_true = std::move(x);
  prob.cosupport_target = std::move(lambda);
  prob.A = gaussian_measurement(m, d, derive_seed(seed, 3));
  prob.y = observe(prob.A, prob.x_true, sigma, derive_seed(seed, 4));
  return prob;
}

}  // namespace coirlq

#endif
