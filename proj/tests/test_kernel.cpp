// Apache License, Version 2.0, refer to LICENSE.txt

#include "raingp/kernel.hpp"

#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <random>

#include "raingp/errors.hpp"

using namespace raingp;

namespace {

PointSet random_points(Eigen::Index m, Eigen::Index p, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  PointSet points(m, p);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index h = 0; h < p; ++h) points(i, h) = u(rng);
  }
  return points;
}

KernelParams random_params(Eigen::Index p, std::uint64_t seed) {
  Rng rng(seed);
  std::lognormal_distribution<double> ln(0.0, std::sqrt(2.0));
  KernelParams params;
  params.sigma2 = ln(rng);
  params.lambdas.resize(p);
  for (Eigen::Index h = 0; h < p; ++h) params.lambdas[h] = ln(rng);
  return params;
}

}  // namespace

TEST_CASE("matern32_1d closed form") {
  CHECK(matern32_1d(0.0, 1.0) == 1.0);
  CHECK(matern32_1d(0.0, 17.3) == 1.0);
  // exp(-sqrt(3)) (1 + sqrt(3))
  CHECK(matern32_1d(1.0, 1.0) ==
        doctest::Approx(0.4833577245965076).epsilon(1e-14));
  CHECK_THROWS_AS(matern32_1d(1.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(matern32_1d(1.0, -2.0), std::domain_error);
}

TEST_CASE("matern32_1d decays monotonically to zero") {
  double prev = 1.0;
  for (double d = 0.25; d < 40.0; d += 0.25) {
    const double v = matern32_1d(d, 1.0);
    CHECK(v < prev);
    CHECK(v > 0.0);
    prev = v;
  }
  CHECK(matern32_1d(500.0, 1.0) < 1e-300);
}

TEST_CASE("kernel_eval equals sigma2 at zero distance") {
  SpatialPoint s(3);
  s << 0.3, -0.2, 0.9;
  KernelParams params{2.0, Eigen::VectorXd::Ones(3)};
  CHECK(kernel_eval(s, s, params) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("kernel_eval reduces to the 1-d factor") {
  SpatialPoint a(2), b(2);
  a << 0.0, 0.0;
  b << 1.0, 0.0;
  KernelParams params{1.0, Eigen::VectorXd::Ones(2)};
  CHECK(kernel_eval(a, b, params) ==
        doctest::Approx(0.4833577245965076).epsilon(1e-14));
}

TEST_CASE("kernel_eval matches the product-of-factors oracle") {
  for (std::uint64_t trial = 0; trial < 200; ++trial) {
    const Eigen::Index p = 1 + trial % 4;
    const PointSet pts = random_points(2, p, 100 + trial);
    const KernelParams params = random_params(p, 900 + trial);
    double oracle = params.sigma2;
    for (Eigen::Index h = 0; h < p; ++h) {
      oracle *= matern32_1d(std::abs(pts(0, h) - pts(1, h)), params.lambdas[h]);
    }
    const double v =
        kernel_eval(pts.row(0).transpose(), pts.row(1).transpose(), params);
    CHECK(v == doctest::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("kernel_eval is stationary under shifts") {
  Rng rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    SpatialPoint a(2), b(2), c(2);
    a << u(rng), u(rng);
    b << u(rng), u(rng);
    c << u(rng), u(rng);
    const KernelParams params = random_params(2, 300 + trial);
    CHECK(kernel_eval(a, b, params) ==
          doctest::Approx(kernel_eval(a + c, b + c, params)).epsilon(1e-12));
  }
}

TEST_CASE("kernel_eval rejects dimension mismatches") {
  SpatialPoint a(2), b(3);
  a.setZero();
  b.setZero();
  KernelParams params{1.0, Eigen::VectorXd::Ones(2)};
  CHECK_THROWS_AS(kernel_eval(a, b, params), std::invalid_argument);
}

TEST_CASE("covariance_matrix is symmetric with sigma2 diagonal") {
  const PointSet pts = random_points(7, 3, 11);
  const KernelParams params = random_params(3, 12);
  const Eigen::MatrixXd cov = covariance_matrix(pts, params);
  CHECK((cov - cov.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (Eigen::Index i = 0; i < 7; ++i) {
    CHECK(cov(i, i) == doctest::Approx(params.sigma2).epsilon(1e-15));
  }
  const Eigen::MatrixXd single =
      covariance_matrix(random_points(1, 3, 13), params);
  CHECK(single.rows() == 1);
  CHECK(single(0, 0) == doctest::Approx(params.sigma2).epsilon(1e-15));
}

TEST_CASE("covariance matrices are positive semi-definite") {
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    const PointSet pts = random_points(5, 2, 40 + trial);
    const KernelParams params = random_params(2, 80 + trial);
    const Eigen::MatrixXd cov = covariance_matrix(pts, params);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * params.sigma2);
  }
}

TEST_CASE("cross_covariance rows reproduce the covariance matrix") {
  const PointSet pts = random_points(6, 2, 21);
  const KernelParams params = random_params(2, 22);
  const Eigen::MatrixXd cov = covariance_matrix(pts, params);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const Eigen::RowVectorXd row =
        cross_covariance(pts.row(i).transpose(), pts, params);
    CHECK((row - cov.row(i)).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(cross_covariance(pts.row(0).transpose(), pts, params)(0) ==
        doctest::Approx(params.sigma2).epsilon(1e-15));
}

TEST_CASE("cross_covariance vanishes far away") {
  const PointSet pts = random_points(4, 2, 31);
  KernelParams params{1.0, Eigen::VectorXd::Constant(2, 0.01)};
  SpatialPoint far(2);
  far << 50.0, 50.0;
  const Eigen::RowVectorXd row = cross_covariance(far, pts, params);
  CHECK(row.cwiseAbs().maxCoeff() < 1e-300);
}

TEST_CASE("cholesky_jittered: identity needs no jitter") {
  const CholFactor f = cholesky_jittered(Eigen::MatrixXd::Identity(4, 4));
  CHECK(f.jitter_used == 0.0);
  CHECK((f.lower - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("cholesky_jittered: rank-1 matrix succeeds with positive jitter") {
  Eigen::VectorXd v(5);
  v << 1.0, 2.0, -1.0, 0.5, 3.0;
  const Eigen::MatrixXd rank1 = v * v.transpose();
  const CholFactor f = cholesky_jittered(rank1);
  CHECK(f.jitter_used > 0.0);
  const Eigen::MatrixXd recon =
      f.lower * f.lower.transpose() -
      f.jitter_used * Eigen::MatrixXd::Identity(5, 5);
  CHECK((recon - rank1).cwiseAbs().maxCoeff() < 1e-8 * rank1.diagonal().mean());
}

TEST_CASE("cholesky_jittered: 31-point covariance reconstructs") {
  const PointSet pts = random_points(31, 2, 77);
  const KernelParams params = random_params(2, 78);
  const Eigen::MatrixXd cov = covariance_matrix(pts, params);
  const CholFactor f = cholesky_jittered(cov);
  const Eigen::MatrixXd recon =
      f.lower * f.lower.transpose() -
      f.jitter_used * Eigen::MatrixXd::Identity(31, 31);
  CHECK((recon - cov).cwiseAbs().maxCoeff() < 1e-8 * params.sigma2);
}

TEST_CASE("cholesky_jittered: indefinite input fails at maximum jitter") {
  Eigen::MatrixXd bad = -Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(cholesky_jittered(bad), NumericalError);
}

TEST_CASE("mvn_logpdf standard normal value") {
  const CholFactor f = cholesky_jittered(Eigen::MatrixXd::Identity(1, 1));
  Eigen::VectorXd x(1), m(1);
  x << 0.0;
  m << 0.0;
  CHECK(mvn_logpdf(x, m, f) ==
        doctest::Approx(-0.9189385332046727).epsilon(1e-15));
}

TEST_CASE("mvn_logpdf at the mean equals the normalization") {
  const PointSet pts = random_points(4, 2, 91);
  const KernelParams params = random_params(2, 92);
  const CholFactor f = cholesky_jittered(covariance_matrix(pts, params));
  Eigen::VectorXd m = Eigen::VectorXd::Constant(4, 0.7);
  const double expected =
      -0.5 * 4 * std::log(2.0 * 3.141592653589793) - f.log_det_half();
  CHECK(mvn_logpdf(m, m, f) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("mvn_logpdf matches the dense-inverse oracle") {
  const PointSet pts = random_points(3, 2, 93);
  const KernelParams params = random_params(2, 94);
  const Eigen::MatrixXd cov = covariance_matrix(pts, params);
  const CholFactor f = cholesky_jittered(cov);
  const Eigen::MatrixXd shifted =
      cov + f.jitter_used * Eigen::MatrixXd::Identity(3, 3);
  Rng rng(95);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x(3), m(3);
    for (int i = 0; i < 3; ++i) {
      x[i] = n(rng);
      m[i] = n(rng);
    }
    const Eigen::VectorXd d = x - m;
    const double dense =
        -0.5 * 3 * std::log(2.0 * 3.141592653589793) -
        0.5 * std::log(shifted.determinant()) -
        0.5 * d.dot(shifted.inverse() * d);
    CHECK(mvn_logpdf(x, m, f) == doctest::Approx(dense).epsilon(1e-10));
  }
}

TEST_CASE("mvn_logpdf integrates to one in 1-d") {
  Eigen::MatrixXd var(1, 1);
  var << 1.7;
  const CholFactor f = cholesky_jittered(var);
  Eigen::VectorXd m(1);
  m << 0.4;
  const auto density = [&](double x) {
    Eigen::VectorXd xv(1);
    xv << x;
    return std::exp(mvn_logpdf(xv, m, f));
  };
  const double mass = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      density, -30.0, 30.0, 10, 1e-10);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("mvn_sample: zero covariance returns the mean, fixed seed repeats") {
  const CholFactor zero = cholesky_jittered(Eigen::MatrixXd::Zero(3, 3));
  Eigen::VectorXd m(3);
  m << 1.0, -2.0, 3.0;
  Rng rng(5);
  CHECK((mvn_sample(m, zero, rng) - m).cwiseAbs().maxCoeff() == 0.0);

  const PointSet pts = random_points(4, 2, 96);
  const CholFactor f =
      cholesky_jittered(covariance_matrix(pts, random_params(2, 97)));
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(4);
  Rng r1(123), r2(123);
  const Eigen::VectorXd a = mvn_sample(mean, f, r1);
  const Eigen::VectorXd b = mvn_sample(mean, f, r2);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mvn_sample covariance matches L L^T") {
  Eigen::MatrixXd cov(2, 2);
  cov << 2.0, 0.8, 0.8, 1.0;
  const CholFactor f = cholesky_jittered(cov);
  Eigen::VectorXd mean(2);
  mean << 1.0, -1.0;
  Rng rng(17);
  const int n = 100000;
  Eigen::Matrix2d sum2 = Eigen::Matrix2d::Zero();
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd x = mvn_sample(mean, f, rng);
    sum += x;
    sum2 += x * x.transpose();
  }
  const Eigen::Vector2d mhat = sum / n;
  const Eigen::Matrix2d chat = sum2 / n - mhat * mhat.transpose();
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      CHECK(chat(i, j) == doctest::Approx(cov(i, j)).epsilon(0.05));
    }
  }
}

TEST_CASE("parallel and serial covariance assembly agree bitwise") {
  const PointSet pts = random_points(40, 3, 55);
  const KernelParams params = random_params(3, 56);
  const Eigen::MatrixXd a = covariance_matrix(pts, params);
  const Eigen::MatrixXd b = covariance_matrix_serial(pts, params);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}
