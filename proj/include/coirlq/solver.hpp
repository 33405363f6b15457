#ifndef COIRLQ_SOLVER_HPP
#define COIRLQ_SOLVER_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "linops.hpp"
#include "types.hpp"

// Iteratively reweighted solver for
//     min_x  1/2 ||y - A x||_2^2 + lambda ||Omega x||_q^q,   0 < q <= 1,
// smoothed through the variational objective
//     F(x, eps) = 1/2 ||y - A x||^2
//               + lambda * sum_i (|omega_i x|^alpha + eps^alpha)^(q/alpha).
// Each sweep updates the weights eta_i = (|omega_i x|^alpha + eps^alpha)^(q/alpha - 1),
// re-solves the weighted least-squares problem (alpha = 2), and shrinks eps
// with the l-th order statistic of |Omega x|.

namespace coirlq {

struct SolverConfig {
  double q = 0.7;
  double alpha = 2.0;       // x-update implemented for alpha = 2
  double lambda = 1e-4;
  Index l = 1;              // target cosparsity driving the eps update
  double shrink = 0.9;      // eps-update factor in (0, 1)
  double tau = 1e-8;        // sup-norm stopping tolerance on iterate diffs
  double eps0 = 1.0;
  double eps_floor = 1e-12; // eps at or below this counts as zero
  long max_iter = 1000;
  // project the returned x_hat onto the detected cosupport subspace (least
  // squares on null(Omega_Lambda)) once the smoothing reaches zero; removes
  // the O(lambda) bias of the penalized fixed point
  bool project_cosupport = true;
};

struct TraceEntry {
  long k = 0;
  double objective = 0.0;
  double eps = 0.0;
  double diff_inf = 0.0;
};

struct SolverResult {
  Vector x_hat;
  long iterations = 0;
  bool converged = false;
  std::vector<TraceEntry> trace;
  // iterations whose objective exceeded the previous one beyond tolerance;
  // diagnostic only, finite-precision solves can produce tiny violations
  std::vector<long> nonmonotone_iterations;
};

inline constexpr double kDescentSlack = 1e-9;

inline void validate_config(const SolverConfig& cfg, Index p) {
  if (!(cfg.q > 0.0 && cfg.q <= 1.0)) throw ConfigError("solver: q must lie in (0, 1]");
  if (!(cfg.alpha >= 1.0)) throw ConfigError("solver: alpha must be >= 1");
  if (!(cfg.lambda > 0.0)) throw ConfigError("solver: lambda must be positive");
  if (cfg.l < 1 || cfg.l > p) throw ConfigError("solver: l must satisfy 1 <= l <= p");
  if (!(cfg.shrink > 0.0 && cfg.shrink < 1.0)) throw ConfigError("solver: shrink must lie in (0, 1)");
  if (!(cfg.tau > 0.0)) throw ConfigError("solver: tau must be positive");
  if (!(cfg.eps0 > 0.0)) throw ConfigError("solver: eps0 must be positive");
  if (cfg.eps_floor < 0.0) throw ConfigError("solver: eps_floor must be nonnegative");
  if (cfg.max_iter < 1) throw ConfigError("solver: max_iter must be positive");
}

// eta_i = (|z_i|^alpha + eps^alpha)^(q/alpha - 1)
inline Vector weight_update(const Vector& z, double eps, double q, double alpha) {
  if (!(q > 0.0 && q <= 1.0)) throw ConfigError("weight_update: q must lie in (0, 1]");
  if (!(alpha >= 1.0)) throw ConfigError("weight_update: alpha must be >= 1");
  if (eps < 0.0) throw ConfigError("weight_update: eps must be nonnegative");
  const double expo = q / alpha - 1.0;
  Vector eta(z.size());
  const double ea = (alpha == 2.0) ? eps * eps : std::pow(eps, alpha);
  for (Index i = 0; i < z.size(); ++i) {
    const double za = (alpha == 2.0) ? z(i) * z(i) : std::pow(std::abs(z(i)), alpha);
    const double t = za + ea;
    if (t == 0.0)
      throw NumericError("weight_update: infinite weight (eps = 0 and a zero analysis coefficient)");
    eta(i) = std::pow(t, expo);
  }
  return eta;
}

// eps_new = min(eps_prev, shrink * l-th smallest |z_i|); values at or below
// eps_floor snap to zero.
inline double epsilon_update(const Vector& z, double eps_prev, double shrink, Index l,
                             double eps_floor = 1e-12) {
  if (l < 1 || l > z.size()) throw ConfigError("epsilon_update: l out of range");
  if (!(shrink > 0.0 && shrink < 1.0)) throw ConfigError("epsilon_update: shrink must lie in (0, 1)");
  if (eps_prev < 0.0) throw ConfigError("epsilon_update: eps_prev must be nonnegative");
  std::vector<double> mags(static_cast<std::size_t>(z.size()));
  for (Index i = 0; i < z.size(); ++i) mags[static_cast<std::size_t>(i)] = std::abs(z(i));
  std::nth_element(mags.begin(), mags.begin() + (l - 1), mags.end());
  const double r_l = mags[static_cast<std::size_t>(l - 1)];
  double e = std::min(eps_prev, shrink * r_l);
  if (e <= eps_floor) e = 0.0;
  return e;
}

// F(x, eps); at eps = 0 this is the unsmoothed objective
// 1/2 ||y - A x||^2 + lambda ||Omega x||_q^q.
inline double objective(const Vector& x, double eps, const Matrix& A, const Vector& y,
                        const Matrix& omega, double lambda, double q, double alpha) {
  if (A.cols() != x.size() || omega.cols() != x.size() || A.rows() != y.size())
    throw DimensionError("objective: dimension mismatch");
  if (!(q > 0.0 && q <= 1.0)) throw ConfigError("objective: q must lie in (0, 1]");
  if (!(alpha >= 1.0)) throw ConfigError("objective: alpha must be >= 1");
  const double fit = 0.5 * (y - A * x).squaredNorm();
  const Vector z = omega * x;
  const double ea = (alpha == 2.0) ? eps * eps : std::pow(eps, alpha);
  const double expo = q / alpha;
  double pen = 0.0;
  for (Index i = 0; i < z.size(); ++i) {
    const double za = (alpha == 2.0) ? z(i) * z(i) : std::pow(std::abs(z(i)), alpha);
    pen += std::pow(za + ea, expo);
  }
  return fit + lambda * pen;
}

namespace detail {

// Minimizer of 1/2 ||y - A x||^2 + (mu/2) sum_i eta_i (omega_i x)^2, i.e.
// the solution of (A^T A + mu Omega^T diag(eta) Omega) x = A^T y.
//
// Primary route: form the d x d normal matrix, LLT, then operator-level
// iterative refinement; a failed factorization gets one regularized retry
// (+1e-12 * trace/d on the diagonal). When mu * max(eta) dwarfs the data
// block (1e8 x), the formed sum cannot hold both scales in double and the
// solve switches to the equivalent stacked least-squares QR.
inline Vector weighted_least_squares(const Matrix& A, const Vector& y, const Matrix& omega,
                                     const Vector& eta, double mu, const Matrix* cached_AtA,
                                     const Vector* cached_Aty, double data_scale) {
  const Index d = A.cols();
  const Index p = omega.rows();
  const double eta_max = eta.size() ? eta.maxCoeff() : 0.0;
  const double eta_min = eta.size() ? eta.minCoeff() : 0.0;
  if (eta_min < 0.0) throw ConfigError("x_update: eta entries must be nonnegative");

  const auto apply_normal_op = [&](const Vector& v) -> Vector {
    return A.transpose() * (A * v) + mu * (omega.transpose() * eta.cwiseProduct(omega * v));
  };

  if (mu * eta_max > 1e8 * data_scale) {
    Matrix stacked(A.rows() + p, d);
    stacked.topRows(A.rows()) = A;
    stacked.bottomRows(p) = (mu * eta).cwiseSqrt().asDiagonal() * omega;
    Vector rhs = Vector::Zero(A.rows() + p);
    rhs.head(A.rows()) = y;
    Eigen::HouseholderQR<Matrix> qr(stacked);
    const Vector diag = qr.matrixQR().diagonal().cwiseAbs();
    const double dmax = diag.maxCoeff();
    const double dmin = diag.minCoeff();
    if (!(dmin > dmax * 1e-15))
      throw NumericError("x_update: singular weighted system, smallest eigenvalue estimate " +
                         std::to_string(dmin * dmin));
    return qr.solve(rhs);
  }

  Matrix M = cached_AtA ? *cached_AtA : Matrix(A.transpose() * A);
  M.noalias() += mu * (omega.transpose() * (eta.asDiagonal() * omega));
  const Vector b = cached_Aty ? *cached_Aty : Vector(A.transpose() * y);

  Eigen::LLT<Matrix> llt(M);
  if (llt.info() != Eigen::Success) {
    const double ridge = 1e-12 * M.trace() / static_cast<double>(d);
    Matrix Mreg = M + ridge * Matrix::Identity(d, d);
    llt.compute(Mreg);
    if (llt.info() != Eigen::Success) {
      const Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
      const double lam_min = es.eigenvalues().size() ? es.eigenvalues()(0) : 0.0;
      throw NumericError("x_update: system not positive definite, smallest eigenvalue estimate " +
                         std::to_string(lam_min));
    }
  }

  Vector x = llt.solve(b);
  const double m_fro = M.norm();
  for (int pass = 0; pass < 3; ++pass) {
    const Vector r = b - apply_normal_op(x);
    const double scale = b.norm() + m_fro * x.norm();
    if (r.norm() <= 1e-14 * (scale > 0.0 ? scale : 1.0)) break;
    x += llt.solve(r);
  }
  return x;
}

}  // namespace detail

// Spec surface for the alpha = 2 weighted step.
inline Vector x_update(const Matrix& A, const Vector& y, const Matrix& omega, const Vector& eta,
                       double lambda, double q) {
  if (A.cols() != omega.cols()) throw DimensionError("x_update: A and Omega column mismatch");
  if (A.rows() != y.size()) throw DimensionError("x_update: A row / y length mismatch");
  if (eta.size() != omega.rows()) throw DimensionError("x_update: eta length must equal Omega rows");
  if (!(lambda > 0.0)) throw ConfigError("x_update: lambda must be positive");
  if (!(q > 0.0 && q <= 1.0)) throw ConfigError("x_update: q must lie in (0, 1]");
  const double data_scale = 1.0 + A.squaredNorm() / static_cast<double>(std::max<Index>(A.cols(), 1));
  return detail::weighted_least_squares(A, y, omega, eta, lambda * q, nullptr, nullptr, data_scale);
}

// Residual of the normal equations at x, measured against
// ||b|| + ||M||_F ||x|| (the attainable scale at any weight spread).
inline double normal_equation_residual(const Matrix& A, const Vector& y, const Matrix& omega,
                                       const Vector& eta, double lambda, double q, const Vector& x) {
  const double mu = lambda * q;
  Matrix M = A.transpose() * A;
  M.noalias() += mu * (omega.transpose() * (eta.asDiagonal() * omega));
  const Vector b = A.transpose() * y;
  const double scale = b.norm() + M.norm() * x.norm();
  return (M * x - b).norm() / (scale > 0.0 ? scale : 1.0);
}

// One solve, resumable step by step. Holds x^(k), eta^(k), eps^(k).
class CoirlqSession {
public:
  CoirlqSession(Matrix A, Vector y, Matrix omega, SolverConfig cfg)
      : A_(std::move(A)), y_(std::move(y)), omega_(std::move(omega)), cfg_(cfg) {
    if (A_.cols() != omega_.cols()) throw DimensionError("solve: A and Omega column mismatch");
    if (A_.rows() != y_.size()) throw DimensionError("solve: A row / y length mismatch");
    if (A_.rows() < 1) throw DimensionError("solve: need at least one measurement");
    validate_config(cfg_, omega_.rows());
    if (cfg_.alpha != 2.0)
      throw ConfigError("solve: the x-update is implemented for alpha = 2 only");
    require_finite(A_, "A");
    require_finite(y_, "y");
    require_finite(omega_, "omega");

    // x^(0): minimum-norm solution of A x = y
    x_ = Eigen::CompleteOrthogonalDecomposition<Matrix>(A_).solve(y_);
    eps_ = cfg_.eps0;
    AtA_ = A_.transpose() * A_;
    Aty_ = A_.transpose() * y_;
    data_scale_ = 1.0 + AtA_.diagonal().maxCoeff();
    eta_ = weight_update(omega_ * x_, smoothing(), cfg_.q, cfg_.alpha);
  }

  struct StepInfo {
    double diff_inf = 0.0;
    double objective = 0.0;
    double eps = 0.0;
  };

  // One sweep: eta from (x^(k-1), eps^(k-1)), then x, then eps. When the
  // iterate has stalled but the order-statistic rule cannot lower eps any
  // further, eps is shrunk directly so the smoothing keeps tending to zero
  // instead of deadlocking at a positive value.
  StepInfo step() {
    eta_ = weight_update(omega_ * x_, smoothing(), cfg_.q, cfg_.alpha);
    Vector x_new = detail::weighted_least_squares(A_, y_, omega_, eta_, cfg_.lambda * cfg_.q,
                                                  &AtA_, &Aty_, data_scale_);
    const Vector z_new = omega_ * x_new;
    double eps_new = epsilon_update(z_new, eps_, cfg_.shrink, cfg_.l, cfg_.eps_floor);
    const double diff = (x_new - x_).lpNorm<Eigen::Infinity>();
    // settled at this smoothing level (movement under 1% of eps, or under
    // tau outright) without the order statistic dropping: shrink directly
    if (eps_new == eps_ && eps_ > cfg_.eps_floor && diff <= std::max(cfg_.tau, 0.01 * eps_)) {
      eps_new = cfg_.shrink * eps_;
      if (eps_new <= cfg_.eps_floor) eps_new = 0.0;
    }
    x_.swap(x_new);
    eps_ = eps_new;
    ++k_;
    return {diff, current_objective(), eps_};
  }

  bool should_stop(double diff_inf) const {
    return diff_inf <= cfg_.tau && eps_ <= cfg_.eps_floor;
  }

  // F at the smoothing level the weights actually use (eps clamped to the
  // floor), so the descent chain survives the snap of eps to zero.
  double current_objective() const {
    return objective(x_, smoothing(), A_, y_, omega_, cfg_.lambda, cfg_.q, cfg_.alpha);
  }

  const Vector& x() const { return x_; }
  const Vector& eta() const { return eta_; }
  double eps() const { return eps_; }
  long iteration() const { return k_; }
  const SolverConfig& config() const { return cfg_; }

private:
  double smoothing() const { return std::max(eps_, cfg_.eps_floor); }

  Matrix A_, omega_;
  Vector y_;
  SolverConfig cfg_;
  Matrix AtA_;
  Vector Aty_;
  double data_scale_ = 1.0;
  Vector x_, eta_;
  double eps_ = 1.0;
  long k_ = 0;
};

namespace detail {

// Least-squares fit of y constrained to null(Omega_Lambda); residual out.
inline Vector cosupport_ls(const Matrix& A, const Vector& y, const Matrix& omega,
                           const std::vector<Index>& lambda, double* residual) {
  Matrix omega_lambda(static_cast<Index>(lambda.size()), omega.cols());
  for (std::size_t i = 0; i < lambda.size(); ++i)
    omega_lambda.row(static_cast<Index>(i)) = omega.row(lambda[i]);
  const Matrix basis = null_space_basis(omega_lambda);
  if (basis.cols() == 0) {
    *residual = y.norm();
    return Vector::Zero(omega.cols());
  }
  const Vector coeff = Eigen::CompleteOrthogonalDecomposition<Matrix>(A * basis).solve(y);
  Vector x = basis * coeff;
  *residual = (y - A * x).norm();
  return x;
}

// Output map once the smoothing has reached zero: least-squares on the
// cosupport given by the l smallest analysis coefficients. If that subspace
// does not reproduce y and the miss is small, try one-row swaps against the
// next candidates (an absorbed borderline coefficient shifts the order
// statistics by one position).
inline void project_onto_cosupport(const Matrix& A, const Vector& y, const Matrix& omega,
                                   const SolverConfig& cfg, Vector& x_hat) {
  const Vector z = omega * x_hat;
  std::vector<Index> order(static_cast<std::size_t>(z.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return std::abs(z(a)) < std::abs(z(b)); });
  std::vector<Index> lambda(order.begin(), order.begin() + cfg.l);

  const double iterate_residual = (y - A * x_hat).norm();
  const double exact_tol = 1e-9 * (1.0 + y.norm());
  double residual = 0.0;
  Vector candidate = cosupport_ls(A, y, omega, lambda, &residual);
  if (residual > exact_tol && residual <= 0.02 * (1.0 + y.norm())) {
    const Index swap_candidates = std::min<Index>(z.size() - cfg.l, 3);
    double best = residual;
    for (Index add = 0; add < swap_candidates && best > exact_tol; ++add) {
      for (Index drop = cfg.l - 1; drop >= 0 && best > exact_tol; --drop) {
        std::vector<Index> trial = lambda;
        trial[static_cast<std::size_t>(drop)] = order[static_cast<std::size_t>(cfg.l + add)];
        double r = 0.0;
        const Vector xt = cosupport_ls(A, y, omega, trial, &r);
        if (r < best) {
          best = r;
          candidate = xt;
        }
      }
    }
    residual = best;
  }
  if (residual <= iterate_residual || residual <= exact_tol) x_hat = std::move(candidate);
}

}  // namespace detail

inline SolverResult solve(const Matrix& A, const Vector& y, const Matrix& omega,
                          const SolverConfig& cfg) {
  CoirlqSession session(A, y, omega, cfg);
  SolverResult res;
  res.trace.reserve(static_cast<std::size_t>(cfg.max_iter) + 1);
  res.trace.push_back({0, session.current_objective(), session.eps(), 0.0});
  double prev_f = res.trace.front().objective;
  for (long k = 1; k <= cfg.max_iter; ++k) {
    const auto info = session.step();
    res.trace.push_back({k, info.objective, info.eps, info.diff_inf});
    if (info.objective > prev_f + kDescentSlack * (1.0 + prev_f))
      res.nonmonotone_iterations.push_back(k);
    prev_f = info.objective;
    if (session.should_stop(info.diff_inf)) {
      res.converged = true;
      break;
    }
  }
  res.iterations = session.iteration();
  res.x_hat = session.x();
  if (cfg.project_cosupport && session.eps() <= cfg.eps_floor)
    detail::project_onto_cosupport(A, y, omega, cfg, res.x_hat);
  return res;
}

}  // namespace coirlq

#endif
