#ifndef COIRLQ_LINOPS_HPP
#define COIRLQ_LINOPS_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <vector>

#include "rng.hpp"
#include "types.hpp"

namespace coirlq {

struct OperatorSpectrum {
  double sigma_max = 0.0;
  double sigma_min = 0.0;
  double kappa = std::numeric_limits<double>::infinity();

  bool kappa_finite() const { return std::isfinite(kappa); }
};

// p x d operator with orthonormal columns (Omega^T Omega = I_d), built by
// orthonormalizing a Gaussian matrix with a thin Householder QR.
inline Matrix random_tight_frame(Index p, Index d, std::uint64_t seed) {
  if (p <= 0 || d <= 0) throw DimensionError("random_tight_frame: dimensions must be positive");
  if (p < d) throw DimensionError("random_tight_frame: requires p >= d");
  Rng rng(seed);
  Matrix g(p, d);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < d; ++j) g(i, j) = rng.gaussian();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(p, d);
  return q;
}

struct Fd2dDims {
  Index rows;
  Index cols;
};

inline Fd2dDims fd2d_dims(Index h, Index w) {
  if (h < 1 || w < 1) throw DimensionError("fd2d_operator: image sides must be >= 1");
  if (h * w < 2) throw DimensionError("fd2d_operator: image has no adjacent pixel pairs");
  return {h * (w - 1) + w * (h - 1), h * w};
}

// Finite differences of a row-major flattened h x w image: horizontal
// differences x[i,j+1]-x[i,j] in scan order first, then vertical
// x[i+1,j]-x[i,j].
inline Matrix fd2d_operator(Index h, Index w) {
  const Fd2dDims dims = fd2d_dims(h, w);
  Matrix omega = Matrix::Zero(dims.rows, dims.cols);
  Index r = 0;
  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j + 1 < w; ++j) {
      omega(r, i * w + j) = -1.0;
      omega(r, i * w + j + 1) = 1.0;
      ++r;
    }
  for (Index i = 0; i + 1 < h; ++i)
    for (Index j = 0; j < w; ++j) {
      omega(r, i * w + j) = -1.0;
      omega(r, (i + 1) * w + j) = 1.0;
      ++r;
    }
  return omega;
}

// Orthonormal basis of the (numerical) null space of M, with the rank
// cutoff 1e-10 * sigma_max shared by the generator, the oracle and the
// solver's cosupport projection.
inline Matrix null_space_basis(const Matrix& m, double rel_cutoff = 1e-10) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() ? sv(0) : 0.0;
  const double cutoff = rel_cutoff * smax;
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) ++rank;
  return svd.matrixV().rightCols(m.cols() - rank);
}

// Zero-detection tolerance used throughout the project when none is given.
inline double default_zero_tol(const Vector& z) {
  const double peak = z.size() ? z.cwiseAbs().maxCoeff() : 0.0;
  return 1e-12 * (1.0 + peak);
}

// Lambda = { j : |<omega_j, x>| <= tol }, ascending.
inline std::vector<Index> cosupport(const Matrix& omega, const Vector& x, double tol) {
  if (omega.cols() != x.size())
    throw DimensionError("cosupport: operator has " + std::to_string(omega.cols()) +
                         " columns but signal has length " + std::to_string(x.size()));
  if (tol < 0) throw ConfigError("cosupport: tolerance must be nonnegative");
  std::vector<Index> lambda;
  const Vector z = omega * x;
  for (Index j = 0; j < z.size(); ++j)
    if (std::abs(z(j)) <= tol) lambda.push_back(j);
  return lambda;
}

inline Index cosparsity(const Matrix& omega, const Vector& x, double tol) {
  return static_cast<Index>(cosupport(omega, x, tol).size());
}

inline OperatorSpectrum spectrum(const Matrix& omega) {
  require_finite(omega, "spectrum");
  Eigen::VectorXd sv;
  if (omega.rows() <= 32 && omega.cols() <= 32) {
    sv = Eigen::JacobiSVD<Matrix>(omega).singularValues();
  } else {
    sv = Eigen::BDCSVD<Matrix>(omega).singularValues();
  }
  OperatorSpectrum spec;
  spec.sigma_max = sv.size() ? sv(0) : 0.0;
  double smin = sv.size() ? sv(sv.size() - 1) : 0.0;
  if (omega.rows() < omega.cols()) smin = 0.0;  // wide operators always annihilate something
  if (smin <= 1e-10 * spec.sigma_max) smin = 0.0;
  spec.sigma_min = smin;
  spec.kappa = smin > 0.0 ? spec.sigma_max / smin : std::numeric_limits<double>::infinity();
  return spec;
}

}  // namespace coirlq

#endif
