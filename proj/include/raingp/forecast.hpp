// Apache License, Version 2.0, refer to LICENSE.txt
//
// Posterior-predictive parameter draws at unobserved points (marginal per
// target) and closed-form functionals of the implied rainfall law.

#ifndef RAINGP_FORECAST_HPP
#define RAINGP_FORECAST_HPP

#include <optional>
#include <string>
#include <vector>

#include "raingp/chain.hpp"
#include "raingp/distributions.hpp"
#include "raingp/model.hpp"

namespace raingp {

struct GpConditional {
  double mean = 0.0;
  double var = 0.0;
  bool clamped = false;  // negative rounding residual clamped to zero
};

// Per-draw context for predicting one GP block at many targets: the
// correlation factor at the draw's length scales and the solved residual
// are computed once, each target then costs one triangular solve.
struct GpPredictor {
  double psi = 0.0, sigma2 = 1.0, tau2 = 1.0;
  Eigen::VectorXd lambdas;
  const PointSet* points = nullptr;
  CholFactor corr;
  Eigen::VectorXd resid;  // L^{-1} (mu - psi 1)

  static GpPredictor make(const GpDraw& draw, const PointSet& points);
  GpConditional conditional(const SpatialPoint& target) const;
};

// Exact GP conditional mean and variance of mu at a target given the
// block's current state; the variance is clamped into [0, sigma2].
GpConditional conditional_mu(const SpatialPoint& target, GpBlockState& block,
                             const PointSet& points);

struct ForecastDraw {
  SpatialPoint point;
  double pi_star = 0.0;
  double gamma_star = 0.0;
  double delta_star = 0.0;
  long iteration = 0;
};

// Samples (pi*, gamma*, delta*) at a target from the current chain state:
// mu* from the GP conditional of each block, then the parameter from
// N(mu*, tau2). Targets are treated marginally (independent given state).
ForecastDraw draw_parameters_at(const SpatialPoint& target, ChainState& state,
                                const PointSet& points, Rng& rng);

// E[W] = exp(delta) Gamma(1 + exp(-gamma)) for Wei(exp(gamma), exp(delta)).
double expected_event_magnitude(double gamma, double delta);

// Var[W] = exp(2 delta) (Gamma(1 + 2 e^{-gamma}) - Gamma(1 + e^{-gamma})^2).
double event_variance(double gamma, double delta);

// n_trials * logistic(pi) * E[W]: expected rainfall per year.
double expected_annual(double pi, double gamma, double delta, int n_trials);

// n_trials * logistic(pi): expected wet days per year.
double expected_wet_days(double pi, int n_trials);

// KL(Wei(truth) || Wei(estimate)) in closed form; zero iff the parameters
// coincide.
double weibull_kl(const WeibullLogParams& truth, const WeibullLogParams& est);

enum class Functional {
  event_mean,
  event_variance,
  annual_mean,
  wet_days,
  kl_vs_truth
};

Functional functional_from_name(const std::string& name);
std::string functional_name(Functional f);

struct TruthGrid {
  Eigen::VectorXd gamma_true;  // one entry per target
  Eigen::VectorXd delta_true;
};

struct FunctionalGrid {
  PointSet targets_orig;  // original covariate units
  PointSet targets_std;
  Eigen::VectorXd median, q05, q95;
  std::string functional;
  long clamp_count = 0;   // clamped conditional variances
  long clamp_total = 0;   // conditional variance evaluations
};

// Applies the functional to every (stored draw, target) pair and summarizes
// per target by median and 5% / 95% quantiles. Per-pair generator streams
// derive from (seed, draw index, target index), so the result is identical
// for any thread count. kl_vs_truth requires a truth grid.
FunctionalGrid forecast_functional_grid(const ChainArchive& chain,
                                        const PointSet& targets_orig,
                                        Functional functional,
                                        std::uint64_t seed,
                                        const TruthGrid* truth = nullptr);

// Serial reference implementation with identical output.
FunctionalGrid forecast_functional_grid_serial(const ChainArchive& chain,
                                               const PointSet& targets_orig,
                                               Functional functional,
                                               std::uint64_t seed,
                                               const TruthGrid* truth = nullptr);

}  // namespace raingp

#endif
