// Apache License, Version 2.0, refer to LICENSE.txt

#include "raingp/forecast.hpp"

#include <cmath>

#include "raingp/errors.hpp"
#include "raingp/parallel.hpp"
#include "raingp/stats.hpp"

namespace raingp {

namespace {
constexpr double kEulerGamma = 0.5772156649015329;
}

GpPredictor GpPredictor::make(const GpDraw& draw, const PointSet& points) {
  GpPredictor pred;
  pred.psi = draw.psi;
  pred.sigma2 = draw.sigma2;
  pred.tau2 = draw.tau2;
  pred.lambdas = draw.lambdas;
  pred.points = &points;
  KernelParams unit{1.0, draw.lambdas};
  pred.corr = cholesky_jittered(covariance_matrix(points, unit));
  pred.resid = pred.corr.solve_lower(
      draw.mu - Eigen::VectorXd::Constant(points.rows(), draw.psi));
  return pred;
}

GpConditional GpPredictor::conditional(const SpatialPoint& target) const {
  KernelParams unit{1.0, lambdas};
  const Eigen::RowVectorXd r = cross_covariance(target, *points, unit);
  const Eigen::VectorXd v = corr.solve_lower(r.transpose());
  GpConditional out;
  out.mean = psi + v.dot(resid);
  double var = sigma2 * (1.0 - v.squaredNorm());
  if (var < 0.0) {
    var = 0.0;
    out.clamped = true;
  } else if (var > sigma2) {
    var = sigma2;
  }
  out.var = var;
  return out;
}

GpConditional conditional_mu(const SpatialPoint& target, GpBlockState& block,
                             const PointSet& points) {
  GpDraw draw;
  draw.psi = block.psi;
  draw.tau2 = block.tau2;
  draw.sigma2 = block.sigma2;
  draw.lambdas = block.lambdas;
  draw.mu = block.mu;
  return GpPredictor::make(draw, points).conditional(target);
}

namespace {

double sample_conditional(const GpConditional& cond, double tau2, Rng& rng) {
  const double mu_star =
      cond.var > 0.0 ? sample_normal(cond.mean, cond.var, rng) : cond.mean;
  return sample_normal(mu_star, tau2, rng);
}

}  // namespace

ForecastDraw draw_parameters_at(const SpatialPoint& target, ChainState& state,
                                const PointSet& points, Rng& rng) {
  ForecastDraw out;
  out.point = target;
  out.iteration = state.iteration;
  GpBlockState* blocks[] = {&state.pi_block, &state.gamma_block,
                            &state.delta_block};
  double* stars[] = {&out.pi_star, &out.gamma_star, &out.delta_star};
  for (int b = 0; b < 3; ++b) {
    const GpConditional cond = conditional_mu(target, *blocks[b], points);
    *stars[b] = sample_conditional(cond, blocks[b]->tau2, rng);
  }
  return out;
}

double expected_event_magnitude(double gamma, double delta) {
  return std::exp(delta + std::lgamma(1.0 + std::exp(-gamma)));
}

double event_variance(double gamma, double delta) {
  const double a = std::exp(-gamma);
  const double second = std::exp(2.0 * delta + std::lgamma(1.0 + 2.0 * a));
  const double mean_sq = std::exp(2.0 * (delta + std::lgamma(1.0 + a)));
  const double v = second - mean_sq;
  return v > 0.0 ? v : 0.0;
}

double expected_annual(double pi, double gamma, double delta, int n_trials) {
  return expected_wet_days(pi, n_trials) *
         expected_event_magnitude(gamma, delta);
}

double expected_wet_days(double pi, int n_trials) {
  return n_trials * std::exp(log_sigmoid(pi));
}

double weibull_kl(const WeibullLogParams& truth, const WeibullLogParams& est) {
  const double k1 = std::exp(truth.gamma);
  const double k2 = std::exp(est.gamma);
  const double shape_ratio = std::exp(est.gamma - truth.gamma);  // k2 / k1
  return (truth.gamma - k1 * truth.delta) - (est.gamma - k2 * est.delta) +
         (k1 - k2) * (truth.delta - kEulerGamma / k1) +
         std::exp(k2 * (truth.delta - est.delta) +
                  std::lgamma(shape_ratio + 1.0)) -
         1.0;
}

Functional functional_from_name(const std::string& name) {
  if (name == "event-mean") return Functional::event_mean;
  if (name == "event-variance") return Functional::event_variance;
  if (name == "annual-mean") return Functional::annual_mean;
  if (name == "wet-days") return Functional::wet_days;
  if (name == "kl-vs-truth") return Functional::kl_vs_truth;
  throw std::invalid_argument("unknown functional: " + name);
}

std::string functional_name(Functional f) {
  switch (f) {
    case Functional::event_mean: return "event-mean";
    case Functional::event_variance: return "event-variance";
    case Functional::annual_mean: return "annual-mean";
    case Functional::wet_days: return "wet-days";
    case Functional::kl_vs_truth: return "kl-vs-truth";
  }
  return "unknown";
}

namespace {

struct DrawContext {
  // semiparametric
  std::vector<GpPredictor> predictors;  // pi, gamma, delta
  // parametric
  std::vector<LinearDraw> linear;  // pi, gamma, delta
  bool parametric = false;
};

DrawContext make_context(const ChainArchive& chain, std::size_t row) {
  DrawContext ctx;
  if (chain.model == ModelKind::semiparametric) {
    ctx.predictors.reserve(3);
    for (int b = 0; b < 3; ++b) {
      ctx.predictors.push_back(
          GpPredictor::make(gp_draw(chain, row, b), chain.points));
    }
  } else {
    ctx.parametric = true;
    for (int b = 0; b < 3; ++b) ctx.linear.push_back(linear_draw(chain, row, b));
  }
  return ctx;
}

// Draws (pi*, gamma*, delta*) at one target; pi then gamma then delta, two
// normal draws per block, so the stream layout is fixed.
ForecastDraw draw_at(const DrawContext& ctx, const SpatialPoint& target,
                     Rng& rng, long* clamp_count) {
  ForecastDraw out;
  out.point = target;
  double* stars[] = {&out.pi_star, &out.gamma_star, &out.delta_star};
  if (!ctx.parametric) {
    for (int b = 0; b < 3; ++b) {
      const GpConditional cond = ctx.predictors[b].conditional(target);
      if (cond.clamped && clamp_count != nullptr) ++*clamp_count;
      *stars[b] = sample_conditional(cond, ctx.predictors[b].tau2, rng);
    }
  } else {
    for (int b = 0; b < 3; ++b) {
      const double mean =
          ctx.linear[b].beta[0] +
          ctx.linear[b].beta.tail(target.size()).dot(target);
      *stars[b] = sample_normal(mean, ctx.linear[b].tau2, rng);
    }
  }
  return out;
}

double apply_functional(Functional f, const ForecastDraw& d, int n_trials,
                        const TruthGrid* truth, Eigen::Index target_idx) {
  switch (f) {
    case Functional::event_mean:
      return expected_event_magnitude(d.gamma_star, d.delta_star);
    case Functional::event_variance:
      return event_variance(d.gamma_star, d.delta_star);
    case Functional::annual_mean:
      return expected_annual(d.pi_star, d.gamma_star, d.delta_star, n_trials);
    case Functional::wet_days:
      return expected_wet_days(d.pi_star, n_trials);
    case Functional::kl_vs_truth:
      return weibull_kl({truth->gamma_true[target_idx],
                         truth->delta_true[target_idx]},
                        {d.gamma_star, d.delta_star});
  }
  return 0.0;
}

template <bool Parallel>
FunctionalGrid grid_impl(const ChainArchive& chain,
                         const PointSet& targets_orig, Functional functional,
                         std::uint64_t seed, const TruthGrid* truth) {
  if (functional == Functional::kl_vs_truth &&
      (truth == nullptr ||
       truth->gamma_true.size() != targets_orig.rows() ||
       truth->delta_true.size() != targets_orig.rows())) {
    throw std::invalid_argument("kl-vs-truth needs a truth value per target");
  }
  const std::size_t n_draws = chain.n_stored();
  if (n_draws == 0) throw DataError("forecast: chain has no stored draws");
  const Eigen::Index n_targets = targets_orig.rows();
  if (targets_orig.cols() != chain.points.cols()) {
    throw std::invalid_argument("forecast: target dimension mismatch");
  }

  FunctionalGrid grid;
  grid.functional = functional_name(functional);
  grid.targets_orig = targets_orig;
  grid.targets_std = chain.transform.apply_all(targets_orig);

  Eigen::MatrixXd values(n_targets, static_cast<Eigen::Index>(n_draws));
  std::vector<long> clamps(n_draws, 0);

  const auto body = [&](std::size_t d) {
    const DrawContext ctx = make_context(chain, d);
    long clamp = 0;
    for (Eigen::Index g = 0; g < n_targets; ++g) {
      Rng rng(derive_seed(seed, d, static_cast<std::uint64_t>(g)));
      const ForecastDraw draw =
          draw_at(ctx, grid.targets_std.row(g).transpose(), rng, &clamp);
      values(g, static_cast<Eigen::Index>(d)) =
          apply_functional(functional, draw, chain.n_trials, truth, g);
    }
    clamps[d] = clamp;
  };
  if constexpr (Parallel) {
    parallel_for_dynamic(n_draws, body);
  } else {
    for (std::size_t d = 0; d < n_draws; ++d) body(d);
  }

  for (long c : clamps) grid.clamp_count += c;
  grid.clamp_total = chain.model == ModelKind::semiparametric
                         ? static_cast<long>(n_draws) * n_targets * 3
                         : 0;

  grid.median.resize(n_targets);
  grid.q05.resize(n_targets);
  grid.q95.resize(n_targets);
  const auto summarize = [&](std::size_t g) {
    const Eigen::Index gi = static_cast<Eigen::Index>(g);
    std::vector<double> vals(values.row(gi).begin(), values.row(gi).end());
    std::sort(vals.begin(), vals.end());
    grid.median[gi] = quantile_sorted(vals, 0.5);
    grid.q05[gi] = quantile_sorted(vals, 0.05);
    grid.q95[gi] = quantile_sorted(vals, 0.95);
  };
  if constexpr (Parallel) {
    parallel_for(static_cast<std::size_t>(n_targets), summarize);
  } else {
    for (Eigen::Index g = 0; g < n_targets; ++g)
      summarize(static_cast<std::size_t>(g));
  }
  return grid;
}

}  // namespace

FunctionalGrid forecast_functional_grid(const ChainArchive& chain,
                                        const PointSet& targets_orig,
                                        Functional functional,
                                        std::uint64_t seed,
                                        const TruthGrid* truth) {
  return grid_impl<true>(chain, targets_orig, functional, seed, truth);
}

FunctionalGrid forecast_functional_grid_serial(const ChainArchive& chain,
                                               const PointSet& targets_orig,
                                               Functional functional,
                                               std::uint64_t seed,
                                               const TruthGrid* truth) {
  return grid_impl<false>(chain, targets_orig, functional, seed, truth);
}

}  // namespace raingp
