// Apache License, Version 2.0, refer to LICENSE.txt

#include "raingp/distributions.hpp"

#include <doctest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>

#include "test_support.hpp"

using namespace raingp;
using raingp::test::ks_critical;
using raingp::test::ks_distance;

TEST_CASE("weibull_loglik: unit exponential point values") {
  CHECK(weibull_loglik(1.0, {0.0, 0.0}) == doctest::Approx(-1.0).epsilon(1e-15));
  for (double delta : {-1.0, 0.0, 0.5, 2.0}) {
    CHECK(weibull_loglik(std::exp(delta), {0.0, delta}) ==
          doctest::Approx(-delta - 1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(weibull_loglik(0.0, {0.0, 0.0}), std::domain_error);
  CHECK_THROWS_AS(weibull_loglik(-1.0, {0.0, 0.0}), std::domain_error);
}

TEST_CASE("weibull_loglik normalizes to one") {
  const WeibullLogParams params{0.3, 0.7};
  boost::math::quadrature::exp_sinh<double> integrator;
  const double mass = integrator.integrate(
      [&](double w) { return std::exp(weibull_loglik(w, params)); }, 1e-12);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("weibull_loglik survives extreme parameters") {
  CHECK(weibull_loglik(1e300, {3.0, -50.0}) ==
        -std::numeric_limits<double>::infinity());
  CHECK(std::isfinite(weibull_loglik(1e-300, {0.0, 0.0})));
}

TEST_CASE("binomial_logit_loglik point values") {
  // p -> 1 limit: all-wet year has probability one
  CHECK(binomial_logit_loglik(365, 365, 700.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(binomial_logit_loglik(0, 365, 0.0) ==
        doctest::Approx(-252.99872090438004).epsilon(1e-13));
  CHECK_THROWS_AS(binomial_logit_loglik(-1, 10, 0.0), std::domain_error);
  CHECK_THROWS_AS(binomial_logit_loglik(11, 10, 0.0), std::domain_error);
}

TEST_CASE("binomial_logit_loglik normalizes over counts") {
  const int n = 20;
  const double pi = 1.3;
  double mass = 0.0;
  for (int count = 0; count <= n; ++count) {
    mass += std::exp(binomial_logit_loglik(count, n, pi));
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("binomial_logit_loglik is finite across the working range") {
  for (double pi : {-700.0, -100.0, -1.0, 0.0, 1.0, 100.0, 700.0}) {
    CHECK(std::isfinite(binomial_logit_loglik(5, 10, pi)));
  }
}

TEST_CASE("binomial_logit_loglik increases in count up to the mode") {
  const int n = 50;
  const double pi = 1.0;  // p ~ 0.731, mode ~ 37
  const int mode = static_cast<int>((n + 1) / (1.0 + std::exp(-pi)));
  for (int count = 1; count <= mode; ++count) {
    CHECK(binomial_logit_loglik(count, n, pi) >
          binomial_logit_loglik(count - 1, n, pi));
  }
}

TEST_CASE("coga_pdf normalizes and is unbounded near zero") {
  const CoGaParams params{0.5, 2.0, 2.0};
  boost::math::quadrature::gauss_kronrod<double, 31> gk;
  // substitute x = e^t: the transformed integrand decays exponentially
  const double mass = gk.integrate(
      [&](double t) {
        const double x = std::exp(t);
        return coga_pdf(x, params) * x;
      },
      -60.0, 60.0, 12, 1e-10);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));

  double prev = coga_pdf(1e-3, params);
  for (double x : {1e-4, 1e-5, 1e-6, 1e-8}) {
    const double v = coga_pdf(x, params);
    CHECK(v > prev);
    prev = v;
  }
  CHECK(coga_pdf(1e-12, params) > 1e5);
  CHECK_THROWS_AS(coga_pdf(0.0, params), std::domain_error);
  CHECK_THROWS_AS(coga_pdf(-1.0, params), std::domain_error);
}

TEST_CASE("coga_sample matches the compound construction") {
  const CoGaParams params{0.5, 2.0, 2.0};
  Rng r1(11), r2(11);
  CHECK(coga_sample(params, r1) == coga_sample(params, r2));

  Rng rng(12);
  const std::size_t n = 100000;
  std::vector<double> sample(n);
  for (double& x : sample) {
    x = coga_sample(params, rng);
    CHECK(x > 0.0);
  }
  // CDF via the beta-prime representation: X = (Gv/Gk)/r
  const auto cdf = [&](double x) {
    const double u = params.rate() * x / (1.0 + params.rate() * x);
    return boost::math::ibeta(params.v, params.k, u);
  };
  CHECK(ks_distance(sample, cdf) < ks_critical(n, 1e-3));
}

TEST_CASE("gamma and inverse gamma moments under shape-rate") {
  Rng rng(13);
  const int n = 1000000;
  double sum_ga = 0.0, sum_iga = 0.0;
  for (int i = 0; i < n; ++i) sum_ga += sample_gamma(2.0, 4.0, rng);
  for (int i = 0; i < n; ++i) sum_iga += sample_inverse_gamma(3.0, 2.0, rng);
  CHECK(sum_ga / n == doctest::Approx(0.5).epsilon(0.004));
  // IGa(3, 2) mean = 2 / (3 - 1) = 1
  CHECK(sum_iga / n == doctest::Approx(1.0).epsilon(0.005));
}

TEST_CASE("lognormal median and KS fit") {
  Rng rng(14);
  const std::size_t n = 100000;
  std::vector<double> sample(n);
  for (double& x : sample) x = sample_lognormal(0.0, 2.0, rng);
  std::sort(sample.begin(), sample.end());
  CHECK(sample[n / 2] == doctest::Approx(1.0).epsilon(0.01));
  const auto cdf = [](double x) {
    return 0.5 * (1.0 + std::erf(std::log(x) / 2.0));
  };
  CHECK(ks_distance(sample, cdf) < ks_critical(n, 1e-3));
}

TEST_CASE("gamma sampler KS fit") {
  Rng rng(15);
  const std::size_t n = 100000;
  std::vector<double> sample(n);
  for (double& x : sample) x = sample_gamma(2.5, 1.5, rng);
  const auto cdf = [](double x) {
    return boost::math::gamma_p(2.5, 1.5 * x);
  };
  CHECK(ks_distance(sample, cdf) < ks_critical(n, 1e-3));
}

TEST_CASE("weibull sampler KS fit") {
  Rng rng(16);
  const std::size_t n = 100000;
  const WeibullLogParams params{0.4, 0.9};
  std::vector<double> sample(n);
  for (double& x : sample) x = sample_weibull(params, rng);
  const double shape = std::exp(params.gamma);
  const double scale = std::exp(params.delta);
  const auto cdf = [&](double w) {
    return 1.0 - std::exp(-std::pow(w / scale, shape));
  };
  CHECK(ks_distance(sample, cdf) < ks_critical(n, 1e-3));
}

TEST_CASE("normal scale mixture with IGa(1,1) latent is Student-t(2)") {
  Rng rng(17);
  const std::size_t n = 100000;
  std::vector<double> sample(n);
  for (double& x : sample) {
    const double zeta = sample_inverse_gamma(1.0, 1.0, rng);
    x = sample_normal(0.0, zeta, rng);
  }
  CHECK(ks_distance(sample, raingp::test::student_t2_cdf) <
        ks_critical(n, 1e-3));
}

TEST_CASE("binomial sampler moments") {
  Rng rng(18);
  const int n = 200000;
  long sum = 0;
  for (int i = 0; i < n; ++i) sum += sample_binomial(365, 0.3, rng);
  CHECK(static_cast<double>(sum) / n ==
        doctest::Approx(365 * 0.3).epsilon(0.003));
}

TEST_CASE("coga median matches the pdf-implied value") {
  // median of CoGa(0.5, 2, 2), solved from the incomplete-beta CDF
  const CoGaParams params{0.5, 2.0, 2.0};
  Rng rng(19);
  const std::size_t n = 1000000;
  std::vector<double> sample(n);
  for (double& x : sample) x = coga_sample(params, rng);
  std::nth_element(sample.begin(), sample.begin() + n / 2, sample.end());
  CHECK(sample[n / 2] == doctest::Approx(0.27431608520651523).epsilon(0.02));
}
