// Apache License, Version 2.0, refer to LICENSE.txt

#include "raingp/kernel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "raingp/errors.hpp"

namespace raingp {

namespace {
constexpr double kSqrt3 = 1.7320508075688772;
}

void KernelParams::validate() const {
  if (!(sigma2 > 0.0)) {
    throw std::domain_error("KernelParams: sigma2 must be positive");
  }
  for (Eigen::Index h = 0; h < lambdas.size(); ++h) {
    if (!(lambdas[h] > 0.0)) {
      throw std::domain_error("KernelParams: lambda[" + std::to_string(h) +
                              "] must be positive");
    }
  }
}

double CholFactor::log_det_half() const {
  return lower.diagonal().array().log().sum();
}

Eigen::VectorXd CholFactor::solve_lower(const Eigen::VectorXd& b) const {
  return lower.triangularView<Eigen::Lower>().solve(b);
}

double matern32_1d(double d, double lambda) {
  if (!(lambda > 0.0)) {
    throw std::domain_error("matern32_1d: lambda must be positive");
  }
  const double u = kSqrt3 * d / lambda;
  return std::exp(-u) * (1.0 + u);
}

double kernel_eval(const SpatialPoint& s, const SpatialPoint& t,
                   const KernelParams& params) {
  const Eigen::Index p = params.lambdas.size();
  if (s.size() != p || t.size() != p) {
    throw std::invalid_argument("kernel_eval: dimension mismatch");
  }
  // Single exp of the summed exponents, then the polynomial product.
  double expo = 0.0;
  double poly = 1.0;
  for (Eigen::Index h = 0; h < p; ++h) {
    const double u = kSqrt3 * std::abs(s[h] - t[h]) / params.lambdas[h];
    expo += u;
    poly *= 1.0 + u;
  }
  return params.sigma2 * std::exp(-expo) * poly;
}

Eigen::MatrixXd covariance_matrix(const PointSet& points,
                                  const KernelParams& params) {
  params.validate();
  const Eigen::Index m = points.rows();
  Eigen::MatrixXd cov(m, m);
  // Entries are independent; upper triangle mirrored from the lower.
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(m); ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v =
          kernel_eval(points.row(i).transpose(), points.row(j).transpose(),
                      params);
      cov(i, j) = v;
      cov(j, i) = v;
    }
  }
  return cov;
}

Eigen::MatrixXd covariance_matrix_serial(const PointSet& points,
                                         const KernelParams& params) {
  params.validate();
  const Eigen::Index m = points.rows();
  Eigen::MatrixXd cov(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v =
          kernel_eval(points.row(i).transpose(), points.row(j).transpose(),
                      params);
      cov(i, j) = v;
      cov(j, i) = v;
    }
  }
  return cov;
}

Eigen::RowVectorXd cross_covariance(const SpatialPoint& target,
                                    const PointSet& points,
                                    const KernelParams& params) {
  const Eigen::Index m = points.rows();
  Eigen::RowVectorXd row(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    row[j] = kernel_eval(target, points.row(j).transpose(), params);
  }
  return row;
}

CholFactor cholesky_jittered(const Eigen::MatrixXd& matrix) {
  const Eigen::Index m = matrix.rows();
  if (matrix.cols() != m) {
    throw std::invalid_argument("cholesky_jittered: matrix must be square");
  }
  if (matrix.cwiseAbs().maxCoeff() == 0.0) {
    return {Eigen::MatrixXd::Zero(m, m), 0.0};  // L = 0 factors the 0 matrix
  }
  const double mean_diag = matrix.diagonal().mean();
  const double ladder[] = {0.0, 1e-10, 1e-8, 1e-6};
  for (double step : ladder) {
    const double jitter = step * mean_diag;
    Eigen::MatrixXd shifted = matrix;
    shifted.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() == Eigen::Success) {
      CholFactor factor;
      factor.lower = llt.matrixL();
      factor.jitter_used = jitter;
      return factor;
    }
  }
  throw NumericalError("cholesky_jittered: matrix singular at maximum jitter");
}

double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                  const CholFactor& chol) {
  const Eigen::Index m = chol.dim();
  if (x.size() != m || mean.size() != m) {
    throw std::invalid_argument("mvn_logpdf: dimension mismatch");
  }
  constexpr double kLog2Pi = 1.8378770664093453;
  const Eigen::VectorXd z = chol.solve_lower(x - mean);
  return -0.5 * static_cast<double>(m) * kLog2Pi - chol.log_det_half() -
         0.5 * z.squaredNorm();
}

Eigen::VectorXd mvn_sample(const Eigen::VectorXd& mean, const CholFactor& chol,
                           Rng& rng) {
  const Eigen::Index m = chol.dim();
  if (mean.size() != m) {
    throw std::invalid_argument("mvn_sample: dimension mismatch");
  }
  Eigen::VectorXd z(m);
  std::normal_distribution<double> std_normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < m; ++i) z[i] = std_normal(rng);
  return mean + chol.lower.triangularView<Eigen::Lower>() * z;
}

}  // namespace raingp
