// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef RAINGP_KERNEL_HPP
#define RAINGP_KERNEL_HPP

#include <Eigen/Dense>

#include <cstdint>

#include "raingp/rng.hpp"

namespace raingp {

// A spatial point is a p-vector of standardized covariates (coordinates
// plus topographical features). A point set stacks M of them as rows.
using SpatialPoint = Eigen::VectorXd;
using PointSet = Eigen::MatrixXd;

// Amplitude variance and per-dimension length scales of the Matern-3/2
// product kernel. The shape parameter is fixed at 3/2: the 1-d factor has
// the closed form exp(-sqrt(3) d / lambda) (1 + sqrt(3) d / lambda).
struct KernelParams {
  double sigma2 = 1.0;
  Eigen::VectorXd lambdas;

  void validate() const;  // throws std::domain_error on non-positive entries
};

// Lower-triangular Cholesky factor of (A + jitter_used * I).
struct CholFactor {
  Eigen::MatrixXd lower;
  double jitter_used = 0.0;

  Eigen::Index dim() const { return lower.rows(); }
  double log_det_half() const;  // sum of log of diagonal entries

  // Solves L x = b.
  Eigen::VectorXd solve_lower(const Eigen::VectorXd& b) const;
};

// 1-d Matern-3/2 correlation at distance d with length scale lambda.
double matern32_1d(double d, double lambda);

// sigma^2 * prod_h matern32_1d(|s_h - t_h|, lambda_h). Dimension-checked.
double kernel_eval(const SpatialPoint& s, const SpatialPoint& t,
                   const KernelParams& params);

// M x M covariance of a point set; entry (i,j) = kernel_eval(row i, row j).
// The production kernel fills rows in parallel; the serial variant is the
// reference implementation.
Eigen::MatrixXd covariance_matrix(const PointSet& points,
                                  const KernelParams& params);
Eigen::MatrixXd covariance_matrix_serial(const PointSet& points,
                                         const KernelParams& params);

// Row vector of kernel_eval(target, points_m) for m = 1..M.
Eigen::RowVectorXd cross_covariance(const SpatialPoint& target,
                                    const PointSet& points,
                                    const KernelParams& params);

// Cholesky of a symmetric matrix with a jitter ladder
// {0, 1e-10, 1e-8, 1e-6} * mean(diagonal). Throws NumericalError when the
// factorization still fails at the top of the ladder.
CholFactor cholesky_jittered(const Eigen::MatrixXd& matrix);

// Exact multivariate normal log density via triangular solves.
double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                  const CholFactor& chol);

// mean + L z with z iid standard normal drawn from rng in index order.
Eigen::VectorXd mvn_sample(const Eigen::VectorXd& mean, const CholFactor& chol,
                           Rng& rng);

}  // namespace raingp

#endif
