// Apache License, Version 2.0, refer to LICENSE.txt

#include "raingp/geweke.hpp"

#include <algorithm>
#include <cmath>

#include "raingp/distributions.hpp"
#include "raingp/stats.hpp"

namespace raingp {

namespace {

GpBlockState sample_gp_block_from_prior(const ObservedData& shape,
                                        const PriorConfig& prior, Rng& rng) {
  const Eigen::Index m = shape.n_stations();
  const Eigen::Index t = shape.n_years();
  const Eigen::Index p = shape.n_dims();
  GpBlockState b = GpBlockState::zeros(m, t, p);
  b.zeta_psi =
      sample_inverse_gamma(prior.zeta_psi_shape, prior.zeta_psi_rate, rng);
  b.psi = sample_normal(0.0, b.zeta_psi, rng);
  const CoGaParams& cg = prior.variance_prior;
  b.zeta_tau2 = sample_gamma(cg.v, cg.rate(), rng);
  b.tau2 = sample_inverse_gamma(cg.k, b.zeta_tau2, rng);
  b.zeta_sigma2 = sample_gamma(cg.v, cg.rate(), rng);
  b.sigma2 = sample_inverse_gamma(cg.k, b.zeta_sigma2, rng);
  for (Eigen::Index h = 0; h < p; ++h) {
    b.lambdas[h] =
        sample_lognormal(prior.lambda_log_mean, prior.lambda_log_var, rng);
  }
  const CholFactor& corr = corr_factor(b, shape.points);
  Eigen::VectorXd z(m);
  std::normal_distribution<double> std_normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < m; ++i) z[i] = std_normal(rng);
  const Eigen::VectorXd gp_dev = corr.lower.triangularView<Eigen::Lower>() * z;
  b.mu = Eigen::VectorXd::Constant(m, b.psi) + std::sqrt(b.sigma2) * gp_dev;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < t; ++j) {
      b.field(i, j) = sample_normal(b.mu[i], b.tau2, rng);
    }
  }
  return b;
}

}  // namespace

ChainState sample_state_from_prior(const ObservedData& shape,
                                   const PriorConfig& prior, Rng& rng) {
  ChainState s;
  s.pi_block = sample_gp_block_from_prior(shape, prior, rng);
  s.gamma_block = sample_gp_block_from_prior(shape, prior, rng);
  s.delta_block = sample_gp_block_from_prior(shape, prior, rng);
  return s;
}

LinearModelState sample_linear_state_from_prior(const ObservedData& shape,
                                                const PriorConfig& prior,
                                                Rng& rng) {
  const Eigen::Index m = shape.n_stations();
  const Eigen::Index t = shape.n_years();
  const Eigen::Index q = shape.n_dims() + 1;
  LinearModelState s;
  const CoGaParams& cg = prior.variance_prior;

  struct Block {
    Eigen::VectorXd* beta;
    Eigen::VectorXd* zeta_beta;
    double* tau2;
    double* zeta_tau2;
    Eigen::MatrixXd* field;
  };
  Block blocks[] = {
      {&s.beta_pi, &s.zeta_beta_pi, &s.tau2_pi, &s.zeta_tau2_pi, &s.field_pi},
      {&s.beta_gamma, &s.zeta_beta_gamma, &s.tau2_gamma, &s.zeta_tau2_gamma,
       &s.field_gamma},
      {&s.beta_delta, &s.zeta_beta_delta, &s.tau2_delta, &s.zeta_tau2_delta,
       &s.field_delta}};
  for (Block& b : blocks) {
    b.beta->resize(q);
    b.zeta_beta->resize(q);
    for (Eigen::Index h = 0; h < q; ++h) {
      (*b.zeta_beta)[h] =
          sample_inverse_gamma(prior.zeta_psi_shape, prior.zeta_psi_rate, rng);
      (*b.beta)[h] = sample_normal(0.0, (*b.zeta_beta)[h], rng);
    }
    *b.zeta_tau2 = sample_gamma(cg.v, cg.rate(), rng);
    *b.tau2 = sample_inverse_gamma(cg.k, *b.zeta_tau2, rng);
    const Eigen::VectorXd pred = linear_predictor(shape.points, *b.beta);
    b.field->resize(m, t);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < t; ++j) {
        (*b.field)(i, j) = sample_normal(pred[i], *b.tau2, rng);
      }
    }
  }
  return s;
}

void regenerate_data(ObservedData& data, const Eigen::MatrixXd& pi_field,
                     const Eigen::MatrixXd& gamma_field,
                     const Eigen::MatrixXd& delta_field, Rng& rng) {
  const Eigen::Index m = data.n_stations();
  const Eigen::Index t = data.n_years();
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < t; ++j) {
      const double prob = std::exp(log_sigmoid(pi_field(i, j)));
      const int n = sample_binomial(data.n_trials, prob, rng);
      data.counts(i, j) = n;
      auto& mags = data.magnitudes(i, j);
      mags.resize(static_cast<std::size_t>(n));
      const WeibullLogParams wp{gamma_field(i, j), delta_field(i, j)};
      for (int e = 0; e < n; ++e) mags[static_cast<std::size_t>(e)] =
          sample_weibull(wp, rng);
    }
  }
  data.finalize();
}

namespace {

// Bounded / log transforms keep every test-function variance finite under
// the heavy-tailed priors (Student-t(2) levels, compounded-gamma variances),
// which a z-test on sample means requires.
void eval_functions(const ChainState& s, const ObservedData& data,
                    std::vector<double>& out) {
  out.clear();
  const GpBlockState* blocks[] = {&s.pi_block, &s.gamma_block, &s.delta_block};
  for (const GpBlockState* b : blocks) {
    const double f[] = {std::atan(b->psi),       std::log(b->tau2),
                        std::log(b->sigma2),     std::log(b->lambdas[0]),
                        std::atan(b->mu[0]),     std::atan(b->field(0, 0))};
    for (double v : f) {
      out.push_back(v);
      out.push_back(v * v);
    }
  }
  double count_sum = 0.0;
  for (Eigen::Index i = 0; i < data.n_stations(); ++i) {
    for (Eigen::Index j = 0; j < data.n_years(); ++j) {
      count_sum += data.counts(i, j);
    }
  }
  out.push_back(count_sum /
                (static_cast<double>(data.n_stations() * data.n_years()) *
                 data.n_trials));
}

void eval_functions_linear(const LinearModelState& s, const ObservedData& data,
                           std::vector<double>& out) {
  out.clear();
  struct View {
    const Eigen::VectorXd* beta;
    const double* tau2;
    const Eigen::MatrixXd* field;
  };
  const View blocks[] = {{&s.beta_pi, &s.tau2_pi, &s.field_pi},
                         {&s.beta_gamma, &s.tau2_gamma, &s.field_gamma},
                         {&s.beta_delta, &s.tau2_delta, &s.field_delta}};
  for (const View& b : blocks) {
    std::vector<double> f;
    f.push_back(std::atan((*b.beta)[0]));
    if (b.beta->size() > 1) f.push_back(std::atan((*b.beta)[1]));
    f.push_back(std::log(*b.tau2));
    f.push_back(std::atan((*b.field)(0, 0)));
    for (double v : f) {
      out.push_back(v);
      out.push_back(v * v);
    }
  }
  double count_sum = 0.0;
  for (Eigen::Index i = 0; i < data.n_stations(); ++i) {
    for (Eigen::Index j = 0; j < data.n_years(); ++j) {
      count_sum += data.counts(i, j);
    }
  }
  out.push_back(count_sum /
                (static_cast<double>(data.n_stations() * data.n_years()) *
                 data.n_trials));
}

std::vector<std::string> function_names(ModelKind model, int p) {
  std::vector<std::string> names;
  const char* blocks[] = {"pi", "gamma", "delta"};
  for (const char* b : blocks) {
    std::vector<std::string> base;
    if (model == ModelKind::semiparametric) {
      base = {"atan(psi)", "log(tau2)", "log(sigma2)",
              "log(lambda0)", "atan(mu0)", "atan(field00)"};
    } else {
      base.push_back("atan(beta0)");
      if (p > 0) base.push_back("atan(beta1)");
      base.push_back("log(tau2)");
      base.push_back("atan(field00)");
    }
    for (const std::string& f : base) {
      names.push_back(std::string(b) + "." + f);
      names.push_back(std::string(b) + "." + f + "^2");
    }
  }
  names.push_back("mean(count)/n");
  return names;
}

// Standard error of a correlated series via batch means.
double batch_se(const std::vector<double>& series, int n_batches) {
  const std::size_t n = series.size();
  const std::size_t len = n / static_cast<std::size_t>(n_batches);
  std::vector<double> batch_means;
  batch_means.reserve(static_cast<std::size_t>(n_batches));
  for (int b = 0; b < n_batches; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      s += series[static_cast<std::size_t>(b) * len + i];
    }
    batch_means.push_back(s / static_cast<double>(len));
  }
  return std::sqrt(variance(batch_means) /
                   static_cast<double>(n_batches));
}

PointSet geweke_points(const GewekeConfig& config) {
  Rng rng(derive_seed(config.seed, 0xface));
  PointSet points(config.m_stations, config.p_dims);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index h = 0; h < points.cols(); ++h) {
      points(i, h) = sample_uniform(-1.0, 1.0, rng);
    }
  }
  return points;
}

}  // namespace

GewekeReport run_geweke(const GewekeConfig& config) {
  ObservedData shape;
  std::vector<int> years(static_cast<std::size_t>(config.t_years));
  for (int j = 0; j < config.t_years; ++j) years[static_cast<std::size_t>(j)] = 2001 + j;
  shape.init(geweke_points(config), years, config.n_trials);
  shape.finalize();

  SamplerConfig scan_config;
  scan_config.prior = config.prior;
  scan_config.max_shrinks = config.max_shrinks;
  scan_config.step2 = config.step2;
  scan_config.update_counts_block = true;

  const std::size_t n = static_cast<std::size_t>(config.n_draws);
  std::vector<std::vector<double>> marginal, successive;
  std::vector<double> scratch;

  // marginal-conditional: independent prior + data draws
  {
    Rng rng(derive_seed(config.seed, 1));
    ObservedData data = shape;
    for (std::size_t i = 0; i < n; ++i) {
      if (config.model == ModelKind::semiparametric) {
        ChainState state = sample_state_from_prior(shape, config.prior, rng);
        regenerate_data(data, state.pi_block.field, state.gamma_block.field,
                        state.delta_block.field, rng);
        eval_functions(state, data, scratch);
      } else {
        LinearModelState state =
            sample_linear_state_from_prior(shape, config.prior, rng);
        regenerate_data(data, state.field_pi, state.field_gamma,
                        state.field_delta, rng);
        eval_functions_linear(state, data, scratch);
      }
      if (marginal.empty()) marginal.resize(scratch.size());
      for (std::size_t f = 0; f < scratch.size(); ++f) {
        marginal[f].push_back(scratch[f]);
      }
    }
  }

  // successive-conditional: alternate a full scan and data regeneration
  {
    Rng init_rng(derive_seed(config.seed, 2));
    ObservedData data = shape;
    if (config.model == ModelKind::semiparametric) {
      ChainState state = sample_state_from_prior(shape, config.prior, init_rng);
      state.rng.seed(derive_seed(config.seed, 3));
      regenerate_data(data, state.pi_block.field, state.gamma_block.field,
                      state.delta_block.field, state.rng);
      for (std::size_t i = 0; i < n; ++i) {
        full_scan(state, data, scan_config);
        regenerate_data(data, state.pi_block.field, state.gamma_block.field,
                        state.delta_block.field, state.rng);
        eval_functions(state, data, scratch);
        if (successive.empty()) successive.resize(scratch.size());
        for (std::size_t f = 0; f < scratch.size(); ++f) {
          successive[f].push_back(scratch[f]);
        }
      }
    } else {
      LinearModelState state =
          sample_linear_state_from_prior(shape, config.prior, init_rng);
      state.rng.seed(derive_seed(config.seed, 3));
      regenerate_data(data, state.field_pi, state.field_gamma,
                      state.field_delta, state.rng);
      for (std::size_t i = 0; i < n; ++i) {
        full_scan_parametric(state, data, scan_config);
        regenerate_data(data, state.field_pi, state.field_gamma,
                        state.field_delta, state.rng);
        eval_functions_linear(state, data, scratch);
        if (successive.empty()) successive.resize(scratch.size());
        for (std::size_t f = 0; f < scratch.size(); ++f) {
          successive[f].push_back(scratch[f]);
        }
      }
    }
  }

  GewekeReport report;
  const std::vector<std::string> names =
      function_names(config.model, config.p_dims);
  // batches must stay long relative to the chain's autocorrelation time or
  // the standard errors come out too small
  const int n_batches =
      std::clamp(static_cast<int>(config.n_draws / 500), 20, 100);
  for (std::size_t f = 0; f < marginal.size(); ++f) {
    GewekeFunction gf;
    gf.name = f < names.size() ? names[f] : "f" + std::to_string(f);
    gf.mean_marginal = mean(marginal[f]);
    gf.mean_successive = mean(successive[f]);
    gf.se_marginal =
        std::sqrt(variance(marginal[f]) / static_cast<double>(n));
    gf.se_successive = batch_se(successive[f], n_batches);
    const double denom = std::sqrt(gf.se_marginal * gf.se_marginal +
                                   gf.se_successive * gf.se_successive);
    gf.z = denom > 0.0
               ? (gf.mean_marginal - gf.mean_successive) / denom
               : (gf.mean_marginal == gf.mean_successive
                      ? 0.0
                      : std::numeric_limits<double>::infinity());
    report.max_abs_z = std::max(report.max_abs_z, std::abs(gf.z));
    report.functions.push_back(std::move(gf));
  }
  report.passed = report.max_abs_z < config.z_threshold;
  return report;
}

}  // namespace raingp
