#ifndef COIRLQ_ORACLE_HPP
#define COIRLQ_ORACLE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

#include "model.hpp"
#include "types.hpp"

// Exhaustive global solver of
//     min ||Omega x||_q^q   s.t.  ||y - A x||_2 <= noise_bound
// over the union of cosparse subspaces: every cosupport Lambda with
// |Lambda| >= l_min is enumerated, the residual is minimized over
// null(Omega_Lambda), and the best feasible candidate wins. Tiny instances
// only; verification tool, not a practical solver.

namespace coirlq {

struct OracleResult {
  Vector x_star;
  double objective = std::numeric_limits<double>::infinity();
  std::vector<Index> cosupport;
  bool feasible = false;
};

namespace detail {

inline double lq_power_sum(const Vector& z, double q) {
  double s = 0.0;
  for (Index i = 0; i < z.size(); ++i) s += std::pow(std::abs(z(i)), q);
  return s;
}

// Lexicographic size-k subsets of {0, ..., n-1}.
class SubsetEnumerator {
public:
  SubsetEnumerator(Index n, Index k) : n_(n), idx_(static_cast<std::size_t>(k)) {
    for (Index i = 0; i < k; ++i) idx_[static_cast<std::size_t>(i)] = i;
    done_ = k > n;
  }

  bool done() const { return done_; }
  const std::vector<Index>& current() const { return idx_; }

  void next() {
    const auto k = static_cast<Index>(idx_.size());
    if (k == 0) {
      done_ = true;
      return;
    }
    Index i = k - 1;
    while (i >= 0 && idx_[static_cast<std::size_t>(i)] == n_ - k + i) --i;
    if (i < 0) {
      done_ = true;
      return;
    }
    ++idx_[static_cast<std::size_t>(i)];
    for (Index j = i + 1; j < k; ++j)
      idx_[static_cast<std::size_t>(j)] = idx_[static_cast<std::size_t>(j - 1)] + 1;
  }

private:
  Index n_;
  std::vector<Index> idx_;
  bool done_ = false;
};

}  // namespace detail

inline OracleResult brute_force_lq(const Matrix& A, const Vector& y, const Matrix& omega, double q,
                                   double noise_bound, Index l_min) {
  const Index p = omega.rows();
  const Index d = omega.cols();
  if (A.cols() != d) throw DimensionError("oracle: A and Omega column mismatch");
  if (A.rows() != y.size()) throw DimensionError("oracle: A row / y length mismatch");
  if (!(q > 0.0 && q <= 1.0)) throw ConfigError("oracle: q must lie in (0, 1]");
  if (noise_bound < 0.0) throw ConfigError("oracle: noise_bound must be nonnegative");
  if (l_min < 1 || l_min > p) throw ConfigError("oracle: l_min out of range");
  if (p > 24 || p - l_min > 8)
    throw InfeasibleError("oracle: combinatorial guard exceeded (need p <= 24 and p - l_min <= 8)");

  constexpr double kResidualSlack = 1e-9;
  OracleResult best;
  best.x_star = Vector::Zero(d);

  for (Index size = p; size >= l_min; --size) {
    for (detail::SubsetEnumerator subsets(p, size); !subsets.done(); subsets.next()) {
      const std::vector<Index>& lambda = subsets.current();
      Matrix omega_lambda(size, d);
      for (Index i = 0; i < size; ++i)
        omega_lambda.row(i) = omega.row(lambda[static_cast<std::size_t>(i)]);

      const Matrix basis = null_space_basis(omega_lambda);
      Vector x;
      if (basis.cols() == 0) {
        x = Vector::Zero(d);
      } else {
        const Matrix an = A * basis;
        const Vector z = Eigen::CompleteOrthogonalDecomposition<Matrix>(an).solve(y);
        x = basis * z;
      }
      const double residual = (y - A * x).norm();
      if (residual > noise_bound + kResidualSlack) continue;

      const double obj = detail::lq_power_sum(omega * x, q);
      // enumeration order (|Lambda| descending, lexicographic) encodes the
      // tie-break; the tolerance band keeps numerically tied candidates
      // (the same point reached through different subspaces) from stealing it
      if (!best.feasible || obj < best.objective - 1e-12 * (1.0 + std::abs(best.objective))) {
        best.feasible = true;
        best.objective = obj;
        best.x_star = x;
        best.cosupport = lambda;
      }
    }
  }
  if (!best.feasible) best.objective = std::numeric_limits<double>::infinity();
  return best;
}

}  // namespace coirlq

#endif
