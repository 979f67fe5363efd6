// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef RAINGP_DISTRIBUTIONS_HPP
#define RAINGP_DISTRIBUTIONS_HPP

#include "raingp/rng.hpp"

namespace raingp {

// Compounded gamma CoGa(v, k, scale): if Z ~ Ga(v, r) and X | Z ~ IGa(k, Z)
// with r = 1/scale, then X ~ CoGa(v, k, scale). Heavy-tailed and unbounded
// at zero; the default prior for variance parameters is CoGa(1/2, 2, 2).
struct CoGaParams {
  double v = 0.5;
  double k = 2.0;
  double scale = 2.0;

  double rate() const { return 1.0 / scale; }
  void validate() const;
};

// Weibull parameters on the log scale: shape = exp(gamma), scale = exp(delta).
struct WeibullLogParams {
  double gamma = 0.0;
  double delta = 0.0;
};

// Log density of Wei(exp(gamma), exp(delta)) at w > 0. Returns -infinity
// when the density underflows (extreme parameter proposals); throws
// std::domain_error for w <= 0 or non-finite w.
double weibull_loglik(double w, const WeibullLogParams& params);

// Log pmf of Bin(n_trials, logistic(pi)) at N, including the binomial
// coefficient. Stable for any finite pi via log-sigmoid.
double binomial_logit_loglik(int count, int n_trials, double pi);

// Numerically stable log(1 / (1 + exp(-x))).
double log_sigmoid(double x);

// Density of CoGa at x > 0:
//   Gamma(k+v) / (Gamma(k) Gamma(v)) r^v x^{-k-1} (r + 1/x)^{-(k+v)}.
double coga_pdf(double x, const CoGaParams& params);

// Draws Z ~ Ga(v, r) then X ~ IGa(k, Z).
double coga_sample(const CoGaParams& params, Rng& rng);

// Shape-rate convention throughout: Ga(a, b) has mean a/b; IGa(a, b) has
// density proportional to x^{-a-1} exp(-b/x); logN(mu, s2) is exp of
// N(mu, s2) where s2 is a variance.
double sample_gamma(double shape, double rate, Rng& rng);
double sample_inverse_gamma(double shape, double rate, Rng& rng);
double sample_lognormal(double mu, double sigma2, Rng& rng);
double sample_normal(double mean, double var, Rng& rng);
double sample_uniform(double lo, double hi, Rng& rng);
int sample_binomial(int n_trials, double prob, Rng& rng);
double sample_weibull(const WeibullLogParams& params, Rng& rng);

}  // namespace raingp

#endif
