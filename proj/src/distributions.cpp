// Apache License, Version 2.0, refer to LICENSE.txt

#include "raingp/distributions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace raingp {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// exp() overflows above ~709.78; proposals beyond that are treated as
// having zero likelihood.
constexpr double kExpArgMax = 709.0;
}  // namespace

void CoGaParams::validate() const {
  if (!(v > 0.0) || !(k > 0.0) || !(scale > 0.0)) {
    throw std::domain_error("CoGaParams: v, k, scale must be positive");
  }
}

double weibull_loglik(double w, const WeibullLogParams& params) {
  if (!(w > 0.0) || !std::isfinite(w)) {
    throw std::domain_error("weibull_loglik: w must be positive and finite");
  }
  const double log_w = std::log(w);
  const double shape = std::exp(params.gamma);
  const double t = shape * (log_w - params.delta);
  if (!(t < kExpArgMax)) return kNegInf;
  const double value = params.gamma - params.delta +
                       (shape - 1.0) * (log_w - params.delta) - std::exp(t);
  return std::isfinite(value) ? value : kNegInf;
}

double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

double binomial_logit_loglik(int count, int n_trials, double pi) {
  if (count < 0 || count > n_trials) {
    throw std::domain_error("binomial_logit_loglik: count out of [0, n]");
  }
  double value = std::lgamma(n_trials + 1.0) - std::lgamma(count + 1.0) -
                 std::lgamma(n_trials - count + 1.0);
  if (count > 0) value += count * log_sigmoid(pi);
  if (count < n_trials) value += (n_trials - count) * log_sigmoid(-pi);
  return value;
}

double coga_pdf(double x, const CoGaParams& params) {
  params.validate();
  if (!(x > 0.0)) {
    throw std::domain_error("coga_pdf: x must be positive");
  }
  const double r = params.rate();
  const double log_pdf = std::lgamma(params.k + params.v) -
                         std::lgamma(params.k) - std::lgamma(params.v) +
                         params.v * std::log(r) -
                         (params.k + 1.0) * std::log(x) -
                         (params.k + params.v) * std::log(r + 1.0 / x);
  return std::exp(log_pdf);
}

double coga_sample(const CoGaParams& params, Rng& rng) {
  params.validate();
  const double z = sample_gamma(params.v, params.rate(), rng);
  return sample_inverse_gamma(params.k, z, rng);
}

double sample_gamma(double shape, double rate, Rng& rng) {
  std::gamma_distribution<double> dist(shape, 1.0 / rate);
  return dist(rng);
}

double sample_inverse_gamma(double shape, double rate, Rng& rng) {
  // If G ~ Ga(a, b) under shape-rate, then 1/G ~ IGa(a, b).
  return 1.0 / sample_gamma(shape, rate, rng);
}

double sample_lognormal(double mu, double sigma2, Rng& rng) {
  return std::exp(sample_normal(mu, sigma2, rng));
}

double sample_normal(double mean, double var, Rng& rng) {
  std::normal_distribution<double> dist(mean, std::sqrt(var));
  return dist(rng);
}

double sample_uniform(double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(rng);
}

int sample_binomial(int n_trials, double prob, Rng& rng) {
  std::binomial_distribution<int> dist(n_trials, prob);
  return dist(rng);
}

double sample_weibull(const WeibullLogParams& params, Rng& rng) {
  // Inverse CDF in log space. The clamp keeps draws positive normal
  // doubles when extreme shape parameters (possible under the heavy-tailed
  // priors) would otherwise underflow or overflow.
  const double u = sample_uniform(0.0, 1.0, rng);
  double log_w =
      params.delta + std::exp(-params.gamma) * std::log(-std::log1p(-u));
  if (!(log_w > -600.0)) log_w = -600.0;
  if (log_w > 600.0) log_w = 600.0;
  return std::exp(log_w);
}

}  // namespace raingp
