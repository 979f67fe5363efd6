// Apache License, Version 2.0, refer to LICENSE.txt

#include "raingp/sampler.hpp"

#include <cmath>
#include <limits>

namespace raingp {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}  // namespace

void SamplerConfig::validate() const {
  if (n_iterations <= 0 || burn_in < 0 || burn_in >= n_iterations) {
    throw std::invalid_argument("SamplerConfig: need 0 <= burn_in < iterations");
  }
  if (thin < 1) throw std::invalid_argument("SamplerConfig: thin >= 1");
  if (max_shrinks < 1) throw std::invalid_argument("SamplerConfig: max_shrinks >= 1");
}

GammaParams zeta_psi_conditional(double psi, const PriorConfig& prior) {
  // zeta ~ IGa(a, b), psi | zeta ~ N(0, zeta)  =>  IGa(a + 1/2, b + psi^2/2)
  return {prior.zeta_psi_shape + 0.5, prior.zeta_psi_rate + 0.5 * psi * psi};
}

GammaParams zeta_variance_conditional(double var, const PriorConfig& prior) {
  // zeta ~ Ga(v, r), var | zeta ~ IGa(k, zeta)  =>  Ga(v + k, r + 1/var)
  const CoGaParams& cg = prior.variance_prior;
  return {cg.v + cg.k, cg.rate() + 1.0 / var};
}

GammaParams tau2_conditional(const GpBlockState& block,
                             const PriorConfig& prior) {
  const Eigen::Index m = block.mu.size();
  const Eigen::Index t = block.field.cols();
  double sq = 0.0;
  for (Eigen::Index j = 0; j < t; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const double d = block.field(i, j) - block.mu[i];
      sq += d * d;
    }
  }
  return {prior.variance_prior.k + 0.5 * static_cast<double>(m * t),
          block.zeta_tau2 + 0.5 * sq};
}

GammaParams sigma2_conditional(GpBlockState& block, const PointSet& points,
                               const PriorConfig& prior) {
  const Eigen::Index m = block.mu.size();
  const CholFactor& corr = corr_factor(block, points);
  const Eigen::VectorXd z = corr.solve_lower(
      block.mu - Eigen::VectorXd::Constant(m, block.psi));
  return {prior.variance_prior.k + 0.5 * static_cast<double>(m),
          block.zeta_sigma2 + 0.5 * z.squaredNorm()};
}

GammaParams tau2_conditional_printed(const GpBlockState& block,
                                     const PriorConfig& prior) {
  const Eigen::Index m = block.mu.size();
  double sq = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double d = block.psi - block.mu[i];
    sq += d * d;
  }
  return {prior.variance_prior.k + 0.5 * static_cast<double>(m),
          block.zeta_tau2 + 0.5 * sq};
}

GammaParams sigma2_conditional_printed(const GpBlockState& block,
                                       const PriorConfig& prior) {
  const Eigen::Index m = block.mu.size();
  const Eigen::Index t = block.field.cols();
  double sq = 0.0;
  for (Eigen::Index j = 0; j < t; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const double d = block.mu[i] - block.field(i, j);
      sq += d * d;
    }
  }
  return {prior.variance_prior.k + 0.5 * static_cast<double>(m * t),
          block.zeta_sigma2 + 0.5 * sq};
}

double gibbs_zeta_psi(double psi, const PriorConfig& prior, Rng& rng) {
  const GammaParams p = zeta_psi_conditional(psi, prior);
  return sample_inverse_gamma(p.shape, p.rate, rng);
}

double gibbs_zeta_variance(double var, const PriorConfig& prior, Rng& rng) {
  const GammaParams p = zeta_variance_conditional(var, prior);
  return sample_gamma(p.shape, p.rate, rng);
}

double gibbs_tau2(GpBlockState& block, const PriorConfig& prior, Rng& rng,
                  Step2Conditionals step2) {
  const GammaParams p = step2 == Step2Conditionals::exact
                            ? tau2_conditional(block, prior)
                            : tau2_conditional_printed(block, prior);
  return sample_inverse_gamma(p.shape, p.rate, rng);
}

double gibbs_sigma2(GpBlockState& block, const PointSet& points,
                    const PriorConfig& prior, Rng& rng,
                    Step2Conditionals step2) {
  const GammaParams p = step2 == Step2Conditionals::exact
                            ? sigma2_conditional(block, points, prior)
                            : sigma2_conditional_printed(block, prior);
  return sample_inverse_gamma(p.shape, p.rate, rng);
}

EssOutcome ess_lengthscales(GpBlockState& block, const PointSet& points,
                            const PriorConfig& prior, Rng& rng,
                            int max_shrinks) {
  const Eigen::Index m = block.mu.size();
  const Eigen::VectorXd current =
      block.lambdas.array().log() - prior.lambda_log_mean;
  const Eigen::VectorXd psi_vec = Eigen::VectorXd::Constant(m, block.psi);

  CholFactor last_factor;
  const auto loglik = [&](const Eigen::VectorXd& x) -> double {
    const Eigen::VectorXd lam = (x.array() + prior.lambda_log_mean).exp();
    KernelParams unit{1.0, lam};
    try {
      last_factor = cholesky_jittered(covariance_matrix(points, unit));
    } catch (const NumericalError&) {
      return kNegInf;
    }
    const Eigen::VectorXd z = last_factor.solve_lower(block.mu - psi_vec);
    return -0.5 * static_cast<double>(m) * (kLog2Pi + std::log(block.sigma2)) -
           last_factor.log_det_half() - 0.5 * z.squaredNorm() / block.sigma2;
  };
  const auto prior_draw = [&](Rng& r) {
    Eigen::VectorXd fresh(current.size());
    for (Eigen::Index h = 0; h < fresh.size(); ++h) {
      fresh[h] = sample_normal(0.0, prior.lambda_log_var, r);
    }
    return fresh;
  };

  EssOutcome out = ess_generic(current, prior_draw, loglik, rng, max_shrinks);
  block.lambdas =
      (out.accepted_state.array() + prior.lambda_log_mean).exp();
  // the last loglik evaluation was the accepted proposal
  block.corr.factor = last_factor;
  block.corr.key = block.lambdas;
  block.corr.valid = true;
  return out;
}

namespace {

// Draws (psi, mu, field) through the hierarchy in the scan's fixed order
// and packs them as [psi, mu, vec(field)] with the field column-major.
Eigen::VectorXd draw_gp_hierarchy(GpBlockState& block, const PointSet& points,
                                  Rng& rng) {
  const Eigen::Index m = block.mu.size();
  const Eigen::Index t = block.field.cols();
  const CholFactor& corr = corr_factor(block, points);
  const double psi_t = sample_normal(0.0, block.zeta_psi, rng);
  Eigen::VectorXd z(m);
  std::normal_distribution<double> std_normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < m; ++i) z[i] = std_normal(rng);
  const Eigen::VectorXd gp_dev = corr.lower.triangularView<Eigen::Lower>() * z;
  const Eigen::VectorXd mu_t =
      Eigen::VectorXd::Constant(m, psi_t) + std::sqrt(block.sigma2) * gp_dev;
  Eigen::MatrixXd field_t(m, t);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < t; ++j) {
      field_t(i, j) = sample_normal(mu_t[i], block.tau2, rng);
    }
  }
  Eigen::VectorXd packed(1 + m + m * t);
  packed[0] = psi_t;
  packed.segment(1, m) = mu_t;
  packed.segment(1 + m, m * t) = field_t.reshaped();
  return packed;
}

Eigen::VectorXd pack_gp_block(const GpBlockState& block) {
  const Eigen::Index m = block.mu.size();
  const Eigen::Index t = block.field.cols();
  Eigen::VectorXd packed(1 + m + m * t);
  packed[0] = block.psi;
  packed.segment(1, m) = block.mu;
  packed.segment(1 + m, m * t) = block.field.reshaped();
  return packed;
}

void unpack_gp_block(const Eigen::VectorXd& packed, GpBlockState& block) {
  const Eigen::Index m = block.mu.size();
  const Eigen::Index t = block.field.cols();
  block.psi = packed[0];
  block.mu = packed.segment(1, m);
  block.field = packed.segment(1 + m, m * t).reshaped(m, t);
}

}  // namespace

EssOutcome ess_block_counts(ChainState& state, const ObservedData& data,
                            int max_shrinks) {
  GpBlockState& block = state.pi_block;
  const Eigen::Index m = block.mu.size();
  const Eigen::Index t = block.field.cols();
  const Eigen::VectorXd current = pack_gp_block(block);

  const auto loglik = [&](const Eigen::VectorXd& x) {
    const Eigen::Map<const Eigen::MatrixXd> field(x.data() + 1 + m, m, t);
    return loglik_counts(data, field);
  };
  const auto prior_draw = [&](Rng& r) {
    return draw_gp_hierarchy(block, data.points, r);
  };

  EssOutcome out =
      ess_generic(current, prior_draw, loglik, state.rng, max_shrinks);
  unpack_gp_block(out.accepted_state, block);
  return out;
}

EssOutcome ess_block_magnitudes(ChainState& state, const ObservedData& data,
                                int max_shrinks) {
  GpBlockState& gamma = state.gamma_block;
  GpBlockState& delta = state.delta_block;
  const Eigen::Index m = gamma.mu.size();
  const Eigen::Index t = gamma.field.cols();
  const Eigen::Index block_len = 1 + m + m * t;

  Eigen::VectorXd current(2 * block_len);
  current.head(block_len) = pack_gp_block(gamma);
  current.tail(block_len) = pack_gp_block(delta);

  const auto loglik = [&](const Eigen::VectorXd& x) {
    const Eigen::Map<const Eigen::MatrixXd> gamma_field(x.data() + 1 + m, m, t);
    const Eigen::Map<const Eigen::MatrixXd> delta_field(
        x.data() + block_len + 1 + m, m, t);
    return loglik_magnitudes(data, gamma_field, delta_field);
  };
  const auto prior_draw = [&](Rng& r) {
    Eigen::VectorXd fresh(2 * block_len);
    fresh.head(block_len) = draw_gp_hierarchy(gamma, data.points, r);
    fresh.tail(block_len) = draw_gp_hierarchy(delta, data.points, r);
    return fresh;
  };

  EssOutcome out =
      ess_generic(current, prior_draw, loglik, state.rng, max_shrinks);
  unpack_gp_block(out.accepted_state.head(block_len), gamma);
  unpack_gp_block(out.accepted_state.tail(block_len), delta);
  return out;
}

namespace {

void record(ScanStats& stats, const EssOutcome& out,
            const Eigen::VectorXd& previous) {
  ++stats.ess_calls;
  stats.total_shrinks += out.n_shrinks;
  if (out.n_shrinks > stats.max_shrinks_single) {
    stats.max_shrinks_single = out.n_shrinks;
  }
  if (out.accepted_state == previous) ++stats.equal_outcomes;
}

}  // namespace

ScanStats full_scan(ChainState& state, const ObservedData& data,
                    const SamplerConfig& config) {
  const PriorConfig& prior = config.prior;
  ScanStats stats;
  std::vector<GpBlockState*> blocks;
  if (config.update_counts_block) blocks.push_back(&state.pi_block);
  blocks.push_back(&state.gamma_block);
  blocks.push_back(&state.delta_block);

  // 1. scale latents of the Student-t / compounded-gamma representations
  for (GpBlockState* b : blocks) {
    b->zeta_psi = gibbs_zeta_psi(b->psi, prior, state.rng);
    b->zeta_tau2 = gibbs_zeta_variance(b->tau2, prior, state.rng);
    b->zeta_sigma2 = gibbs_zeta_variance(b->sigma2, prior, state.rng);
  }
  // 2. white-noise and GP variances
  for (GpBlockState* b : blocks) {
    b->tau2 = gibbs_tau2(*b, prior, state.rng, config.step2);
    b->sigma2 =
        gibbs_sigma2(*b, data.points, prior, state.rng, config.step2);
  }
  // 3. length scales
  for (GpBlockState* b : blocks) {
    const Eigen::VectorXd before =
        b->lambdas.array().log() - prior.lambda_log_mean;
    record(stats,
           ess_lengthscales(*b, data.points, prior, state.rng,
                            config.max_shrinks),
           before);
  }
  // 4. mean levels, GP values and parameter fields
  if (config.update_counts_block) {
    const Eigen::VectorXd before = pack_gp_block(state.pi_block);
    const EssOutcome out =
        ess_block_counts(state, data, config.max_shrinks);
    record(stats, out, before);
    stats.ll_counts = out.loglik;
  }
  {
    const Eigen::Index block_len =
        1 + state.gamma_block.mu.size() +
        state.gamma_block.mu.size() * state.gamma_block.field.cols();
    Eigen::VectorXd before(2 * block_len);
    before.head(block_len) = pack_gp_block(state.gamma_block);
    before.tail(block_len) = pack_gp_block(state.delta_block);
    const EssOutcome out =
        ess_block_magnitudes(state, data, config.max_shrinks);
    record(stats, out, before);
    stats.ll_magnitudes = out.loglik;
  }

  for (GpBlockState* b : blocks) b->check_positive();
  ++state.iteration;
  return stats;
}

ScanStats full_scan_parametric(LinearModelState& state,
                               const ObservedData& data,
                               const SamplerConfig& config) {
  const PriorConfig& prior = config.prior;
  const Eigen::Index m = data.n_stations();
  const Eigen::Index t = data.n_years();
  const Eigen::Index q = data.n_dims() + 1;
  ScanStats stats;

  struct BlockRef {
    Eigen::VectorXd* beta;
    Eigen::VectorXd* zeta_beta;
    double* tau2;
    double* zeta_tau2;
    Eigen::MatrixXd* field;
  };
  std::vector<BlockRef> blocks;
  if (config.update_counts_block) {
    blocks.push_back({&state.beta_pi, &state.zeta_beta_pi, &state.tau2_pi,
                      &state.zeta_tau2_pi, &state.field_pi});
  }
  blocks.push_back({&state.beta_gamma, &state.zeta_beta_gamma,
                    &state.tau2_gamma, &state.zeta_tau2_gamma,
                    &state.field_gamma});
  blocks.push_back({&state.beta_delta, &state.zeta_beta_delta,
                    &state.tau2_delta, &state.zeta_tau2_delta,
                    &state.field_delta});

  // 1. per-coefficient scale latents and the tau2 mixing latents
  for (BlockRef& b : blocks) {
    for (Eigen::Index h = 0; h < q; ++h) {
      (*b.zeta_beta)[h] = gibbs_zeta_psi((*b.beta)[h], prior, state.rng);
    }
    *b.zeta_tau2 = gibbs_zeta_variance(*b.tau2, prior, state.rng);
  }
  // 2. white-noise variances against the linear predictor
  for (BlockRef& b : blocks) {
    const Eigen::VectorXd pred = linear_predictor(data.points, *b.beta);
    double sq = 0.0;
    for (Eigen::Index j = 0; j < t; ++j) {
      for (Eigen::Index i = 0; i < m; ++i) {
        const double d = (*b.field)(i, j) - pred[i];
        sq += d * d;
      }
    }
    const double shape =
        prior.variance_prior.k + 0.5 * static_cast<double>(m * t);
    *b.tau2 = sample_inverse_gamma(shape, *b.zeta_tau2 + 0.5 * sq, state.rng);
  }

  const auto pack = [&](const BlockRef& b) {
    Eigen::VectorXd v(q + m * t);
    v.head(q) = *b.beta;
    v.tail(m * t) = b.field->reshaped();
    return v;
  };
  const auto unpack = [&](const Eigen::VectorXd& v, BlockRef& b) {
    *b.beta = v.head(q);
    *b.field = v.tail(m * t).reshaped(m, t);
  };
  const auto draw_block = [&](const BlockRef& b, Rng& r) {
    Eigen::VectorXd beta_t(q);
    for (Eigen::Index h = 0; h < q; ++h) {
      beta_t[h] = sample_normal(0.0, (*b.zeta_beta)[h], r);
    }
    const Eigen::VectorXd pred = linear_predictor(data.points, beta_t);
    Eigen::MatrixXd field_t(m, t);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < t; ++j) {
        field_t(i, j) = sample_normal(pred[i], *b.tau2, r);
      }
    }
    Eigen::VectorXd v(q + m * t);
    v.head(q) = beta_t;
    v.tail(m * t) = field_t.reshaped();
    return v;
  };

  // 3. ESS for (beta_pi, pi) against the count likelihood
  if (config.update_counts_block) {
    BlockRef& b = blocks.front();
    const Eigen::VectorXd current = pack(b);
    const auto loglik = [&](const Eigen::VectorXd& x) {
      const Eigen::Map<const Eigen::MatrixXd> field(x.data() + q, m, t);
      return loglik_counts(data, field);
    };
    EssOutcome out = ess_generic(
        current, [&](Rng& r) { return draw_block(b, r); }, loglik, state.rng,
        config.max_shrinks);
    unpack(out.accepted_state, b);
    record(stats, out, current);
    stats.ll_counts = out.loglik;
  }
  // 4. joint ESS for (beta_gamma, gamma, beta_delta, delta)
  {
    BlockRef& bg = blocks[blocks.size() - 2];
    BlockRef& bd = blocks[blocks.size() - 1];
    const Eigen::Index len = q + m * t;
    Eigen::VectorXd current(2 * len);
    current.head(len) = pack(bg);
    current.tail(len) = pack(bd);
    const auto loglik = [&](const Eigen::VectorXd& x) {
      const Eigen::Map<const Eigen::MatrixXd> gf(x.data() + q, m, t);
      const Eigen::Map<const Eigen::MatrixXd> df(x.data() + len + q, m, t);
      return loglik_magnitudes(data, gf, df);
    };
    const auto prior_draw = [&](Rng& r) {
      Eigen::VectorXd v(2 * len);
      v.head(len) = draw_block(bg, r);
      v.tail(len) = draw_block(bd, r);
      return v;
    };
    EssOutcome out =
        ess_generic(current, prior_draw, loglik, state.rng, config.max_shrinks);
    unpack(out.accepted_state.head(len), bg);
    unpack(out.accepted_state.tail(len), bd);
    record(stats, out, current);
    stats.ll_magnitudes = out.loglik;
  }

  state.check_positive();
  ++state.iteration;
  return stats;
}

}  // namespace raingp
