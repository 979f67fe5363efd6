// Apache License, Version 2.0, refer to LICENSE.txt

#include "raingp/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "raingp/distributions.hpp"
#include "raingp/errors.hpp"
#include "raingp/parallel.hpp"

namespace raingp {

std::string model_kind_name(ModelKind kind) {
  return kind == ModelKind::semiparametric ? "semiparametric" : "parametric";
}

ModelKind model_kind_from_name(const std::string& name) {
  if (name == "semiparametric") return ModelKind::semiparametric;
  if (name == "parametric") return ModelKind::parametric;
  throw DataError("unknown model kind: " + name);
}

Standardization Standardization::fit(const PointSet& original) {
  Standardization s;
  s.lo = original.colwise().minCoeff();
  s.hi = original.colwise().maxCoeff();
  return s;
}

Standardization Standardization::identity(Eigen::Index p) {
  Standardization s;
  s.lo = Eigen::VectorXd::Constant(p, -1.0);
  s.hi = Eigen::VectorXd::Constant(p, 1.0);
  return s;
}

SpatialPoint Standardization::apply(const SpatialPoint& original) const {
  SpatialPoint out(original.size());
  for (Eigen::Index h = 0; h < original.size(); ++h) {
    const double span = hi[h] - lo[h];
    out[h] = span > 0.0 ? 2.0 * (original[h] - lo[h]) / span - 1.0 : 0.0;
  }
  return out;
}

SpatialPoint Standardization::invert(const SpatialPoint& standardized) const {
  SpatialPoint out(standardized.size());
  for (Eigen::Index h = 0; h < standardized.size(); ++h) {
    out[h] = lo[h] + 0.5 * (standardized[h] + 1.0) * (hi[h] - lo[h]);
  }
  return out;
}

PointSet Standardization::apply_all(const PointSet& original) const {
  PointSet out(original.rows(), original.cols());
  for (Eigen::Index i = 0; i < original.rows(); ++i) {
    out.row(i) = apply(original.row(i).transpose()).transpose();
  }
  return out;
}

std::size_t ObservedData::total_events() const {
  std::size_t n = 0;
  for (const auto& cell : magnitudes_) n += cell.size();
  return n;
}

void ObservedData::init(PointSet pts, std::vector<int> year_labels,
                        int trials) {
  points = std::move(pts);
  transform = Standardization::identity(points.cols());
  years = std::move(year_labels);
  n_trials = trials;
  const Eigen::Index m = n_stations();
  const Eigen::Index t = n_years();
  counts = Eigen::MatrixXi::Zero(m, t);
  observed.setConstant(m, t, true);
  magnitudes_.assign(static_cast<std::size_t>(m * t), {});
  log_magnitudes_.assign(static_cast<std::size_t>(m * t), {});
  log_binom_.assign(static_cast<std::size_t>(m * t), 0.0);
}

void ObservedData::finalize() {
  const Eigen::Index m = n_stations();
  const Eigen::Index t = n_years();
  if (counts.rows() != m || counts.cols() != t || observed.rows() != m ||
      observed.cols() != t) {
    throw DataError("ObservedData: inconsistent panel dimensions");
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < t; ++j) {
      const Eigen::Index c = cell(i, j);
      const int n = counts(i, j);
      if (n < 0 || n > n_trials) {
        throw DataError("ObservedData: count outside [0, n_trials]");
      }
      if (!observed(i, j) && (n != 0 || !magnitudes_[c].empty())) {
        throw DataError("ObservedData: masked cell must be empty");
      }
      if (static_cast<int>(magnitudes_[c].size()) != n) {
        throw DataError("ObservedData: magnitude count != wet-day count");
      }
      log_magnitudes_[c].resize(magnitudes_[c].size());
      for (std::size_t i2 = 0; i2 < magnitudes_[c].size(); ++i2) {
        const double w = magnitudes_[c][i2];
        if (!(w > 0.0) || !std::isfinite(w)) {
          throw DataError("ObservedData: magnitudes must be positive finite");
        }
        log_magnitudes_[c][i2] = std::log(w);
      }
      log_binom_[c] = std::lgamma(n_trials + 1.0) - std::lgamma(n + 1.0) -
                      std::lgamma(n_trials - n + 1.0);
    }
  }
}

GpBlockState GpBlockState::zeros(Eigen::Index m, Eigen::Index t,
                                 Eigen::Index p) {
  GpBlockState b;
  b.mu = Eigen::VectorXd::Zero(m);
  b.field = Eigen::MatrixXd::Zero(m, t);
  b.lambdas = Eigen::VectorXd::Ones(p);
  return b;
}

void GpBlockState::check_positive() const {
  const bool ok = tau2 > 0.0 && sigma2 > 0.0 && zeta_psi > 0.0 &&
                  zeta_tau2 > 0.0 && zeta_sigma2 > 0.0 &&
                  (lambdas.array() > 0.0).all();
  if (!ok) throw NumericalError("GpBlockState: positivity violated");
}

const CholFactor& corr_factor(GpBlockState& block, const PointSet& points) {
  if (!block.corr.valid || block.corr.key.size() != block.lambdas.size() ||
      block.corr.key != block.lambdas) {
    KernelParams unit{1.0, block.lambdas};
    block.corr.factor = cholesky_jittered(covariance_matrix(points, unit));
    block.corr.key = block.lambdas;
    block.corr.valid = true;
  }
  return block.corr.factor;
}

namespace {

// Crude per-cell parameter estimates used as the chain's starting point.
// Starting the fields at zero stalls the sampler: the first tau2 draw then
// conditions on zero residuals and collapses, and with a sharp likelihood
// the slice updates take thousands of scans to recover.
struct FieldInit {
  Eigen::MatrixXd field;
  Eigen::VectorXd mu;
  double psi = 0.0;
  double tau2 = 1.0;
  double sigma2 = 1.0;
};

FieldInit summarize_field(const Eigen::MatrixXd& field,
                          const ObservedData& data) {
  FieldInit init;
  init.field = field;
  const Eigen::Index m = field.rows();
  const Eigen::Index t = field.cols();
  init.mu.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double s = 0.0;
    int n = 0;
    for (Eigen::Index j = 0; j < t; ++j) {
      if (data.observed(i, j)) {
        s += field(i, j);
        ++n;
      }
    }
    init.mu[i] = n > 0 ? s / n : 0.0;
  }
  init.psi = init.mu.mean();
  double sq_tau = 0.0, sq_sigma = 0.0;
  int n_cells = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    sq_sigma += (init.mu[i] - init.psi) * (init.mu[i] - init.psi);
    for (Eigen::Index j = 0; j < t; ++j) {
      if (data.observed(i, j)) {
        const double d = field(i, j) - init.mu[i];
        sq_tau += d * d;
        ++n_cells;
      }
    }
  }
  init.tau2 = std::max(1e-2, n_cells > 1 ? sq_tau / (n_cells - 1) : 1.0);
  init.sigma2 = std::max(1e-2, m > 1 ? sq_sigma / (m - 1) : 1.0);
  return init;
}

void apply_field_init(GpBlockState& block, const FieldInit& init) {
  block.field = init.field;
  block.mu = init.mu;
  block.psi = init.psi;
  block.tau2 = init.tau2;
  block.sigma2 = init.sigma2;
}

// Weibull log-parameters from the log-moments of a cell's events:
// sd(log W) = (pi/sqrt(6)) e^{-gamma}, E[log W] = delta - g_E e^{-gamma}.
void weibull_cell_estimate(const std::vector<double>& log_w, double* gamma,
                           double* delta, bool* ok) {
  *ok = false;
  if (log_w.size() < 2) return;
  double mean = 0.0;
  for (double lw : log_w) mean += lw;
  mean /= static_cast<double>(log_w.size());
  double var = 0.0;
  for (double lw : log_w) var += (lw - mean) * (lw - mean);
  var /= static_cast<double>(log_w.size() - 1);
  if (!(var > 1e-12)) return;
  constexpr double kEuler = 0.5772156649015329;
  constexpr double kPi = 3.141592653589793;
  const double inv_shape = std::sqrt(var) * std::sqrt(6.0) / kPi;
  *gamma = std::min(4.0, std::max(-4.0, -std::log(inv_shape)));
  *delta = mean + kEuler * std::exp(-*gamma);
  *ok = true;
}

}  // namespace

ChainState ChainState::init(const ObservedData& data, std::uint64_t seed) {
  ChainState s;
  const Eigen::Index m = data.n_stations();
  const Eigen::Index t = data.n_years();
  const Eigen::Index p = data.n_dims();
  s.pi_block = GpBlockState::zeros(m, t, p);
  s.gamma_block = GpBlockState::zeros(m, t, p);
  s.delta_block = GpBlockState::zeros(m, t, p);
  s.rng.seed(seed);
  for (GpBlockState* b : {&s.pi_block, &s.gamma_block, &s.delta_block}) {
    b->zeta_psi = sample_inverse_gamma(1.0, 1.0, s.rng);
    b->zeta_tau2 = sample_gamma(0.5, 0.5, s.rng);
    b->zeta_sigma2 = sample_gamma(0.5, 0.5, s.rng);
  }

  // logit of the smoothed wet-day rate
  Eigen::MatrixXd pi_field = Eigen::MatrixXd::Zero(m, t);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < t; ++j) {
      if (data.observed(i, j) && data.n_trials > 0) {
        const double rate = (data.counts(i, j) + 0.5) / (data.n_trials + 1.0);
        pi_field(i, j) = std::log(rate / (1.0 - rate));
      }
    }
  }
  apply_field_init(s.pi_block, summarize_field(pi_field, data));

  // per-cell Weibull estimates with station / global fallbacks
  Eigen::MatrixXd gamma_field = Eigen::MatrixXd::Zero(m, t);
  Eigen::MatrixXd delta_field = Eigen::MatrixXd::Zero(m, t);
  std::vector<double> pooled;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < t; ++j) {
      const auto& lw = data.log_magnitudes(i, j);
      pooled.insert(pooled.end(), lw.begin(), lw.end());
    }
  }
  double global_gamma = 0.0, global_delta = 0.0;
  bool global_ok = false;
  weibull_cell_estimate(pooled, &global_gamma, &global_delta, &global_ok);
  for (Eigen::Index i = 0; i < m; ++i) {
    std::vector<double> station;
    for (Eigen::Index j = 0; j < t; ++j) {
      const auto& lw = data.log_magnitudes(i, j);
      station.insert(station.end(), lw.begin(), lw.end());
    }
    double st_gamma = global_gamma, st_delta = global_delta;
    bool st_ok = false;
    weibull_cell_estimate(station, &st_gamma, &st_delta, &st_ok);
    if (!st_ok && global_ok) {
      st_gamma = global_gamma;
      st_delta = global_delta;
    }
    for (Eigen::Index j = 0; j < t; ++j) {
      double g = st_gamma, d = st_delta;
      bool ok = false;
      weibull_cell_estimate(data.log_magnitudes(i, j), &g, &d, &ok);
      gamma_field(i, j) = ok ? g : st_gamma;
      delta_field(i, j) = ok ? d : st_delta;
    }
  }
  apply_field_init(s.gamma_block, summarize_field(gamma_field, data));
  apply_field_init(s.delta_block, summarize_field(delta_field, data));
  return s;
}

LinearModelState LinearModelState::init(const ObservedData& data,
                                        std::uint64_t seed) {
  LinearModelState s;
  const Eigen::Index m = data.n_stations();
  const Eigen::Index t = data.n_years();
  const Eigen::Index q = data.n_dims() + 1;
  s.rng.seed(seed);
  for (Eigen::VectorXd* z :
       {&s.zeta_beta_pi, &s.zeta_beta_gamma, &s.zeta_beta_delta}) {
    z->resize(q);
    for (Eigen::Index h = 0; h < q; ++h) {
      (*z)[h] = sample_inverse_gamma(1.0, 1.0, s.rng);
    }
  }
  s.zeta_tau2_pi = sample_gamma(0.5, 0.5, s.rng);
  s.zeta_tau2_gamma = sample_gamma(0.5, 0.5, s.rng);
  s.zeta_tau2_delta = sample_gamma(0.5, 0.5, s.rng);

  // fields start at the same per-cell estimates the GP model uses, with
  // coefficients from least squares of the station means on (1, s)
  const ChainState warm = ChainState::init(data, seed);
  Eigen::MatrixXd design(m, q);
  design.col(0).setOnes();
  design.rightCols(q - 1) = data.points;
  struct Pair {
    const GpBlockState* from;
    Eigen::VectorXd* beta;
    Eigen::MatrixXd* field;
    double* tau2;
  };
  Pair pairs[] = {{&warm.pi_block, &s.beta_pi, &s.field_pi, &s.tau2_pi},
                  {&warm.gamma_block, &s.beta_gamma, &s.field_gamma,
                   &s.tau2_gamma},
                  {&warm.delta_block, &s.beta_delta, &s.field_delta,
                   &s.tau2_delta}};
  for (Pair& pair : pairs) {
    *pair.field = pair.from->field;
    *pair.beta = design.colPivHouseholderQr().solve(pair.from->mu);
    const Eigen::VectorXd pred = design * (*pair.beta);
    double sq = 0.0;
    int n_cells = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < t; ++j) {
        const double d = (*pair.field)(i, j) - pred[i];
        sq += d * d;
        ++n_cells;
      }
    }
    *pair.tau2 = std::max(1e-2, n_cells > 1 ? sq / (n_cells - 1) : 1.0);
  }
  return s;
}

void LinearModelState::check_positive() const {
  const bool ok = tau2_pi > 0.0 && tau2_gamma > 0.0 && tau2_delta > 0.0 &&
                  zeta_tau2_pi > 0.0 && zeta_tau2_gamma > 0.0 &&
                  zeta_tau2_delta > 0.0 &&
                  (zeta_beta_pi.array() > 0.0).all() &&
                  (zeta_beta_gamma.array() > 0.0).all() &&
                  (zeta_beta_delta.array() > 0.0).all();
  if (!ok) throw NumericalError("LinearModelState: positivity violated");
}

Eigen::VectorXd linear_predictor(const PointSet& points,
                                 const Eigen::VectorXd& beta) {
  if (beta.size() != points.cols() + 1) {
    throw std::invalid_argument("linear_predictor: beta size != p + 1");
  }
  return Eigen::VectorXd::Constant(points.rows(), beta[0]) +
         points * beta.tail(points.cols());
}

namespace {

double counts_cell_term(const ObservedData& data,
                        const Eigen::Ref<const Eigen::MatrixXd>& pi_field, Eigen::Index m,
                        Eigen::Index j) {
  if (!data.observed(m, j)) return 0.0;
  const int n = data.counts(m, j);
  double term = data.log_binom(m, j);
  if (n > 0) term += n * log_sigmoid(pi_field(m, j));
  if (n < data.n_trials) term += (data.n_trials - n) * log_sigmoid(-pi_field(m, j));
  return term;
}

double magnitudes_cell_term(const ObservedData& data,
                            const Eigen::Ref<const Eigen::MatrixXd>& gamma_field,
                            const Eigen::Ref<const Eigen::MatrixXd>& delta_field, Eigen::Index m,
                            Eigen::Index j) {
  const auto& logs = data.log_magnitudes(m, j);
  if (logs.empty()) return 0.0;
  const double gamma = gamma_field(m, j);
  const double delta = delta_field(m, j);
  const double shape = std::exp(gamma);
  double s = 0.0;
  for (double lw : logs) {
    const double t = shape * (lw - delta);
    if (!(t < 709.0)) return -std::numeric_limits<double>::infinity();
    s += gamma - delta + (shape - 1.0) * (lw - delta) - std::exp(t);
  }
  return std::isfinite(s) ? s
                          : -std::numeric_limits<double>::infinity();
}

}  // namespace

double loglik_counts(const ObservedData& data,
                     const Eigen::Ref<const Eigen::MatrixXd>& pi_field) {
  const Eigen::Index t = data.n_years();
  const std::size_t cells =
      static_cast<std::size_t>(data.n_stations() * t);
  return chunked_sum(cells, [&](std::size_t c) {
    const Eigen::Index m = static_cast<Eigen::Index>(c) / t;
    const Eigen::Index j = static_cast<Eigen::Index>(c) % t;
    return counts_cell_term(data, pi_field, m, j);
  });
}

double loglik_counts_serial(const ObservedData& data,
                            const Eigen::Ref<const Eigen::MatrixXd>& pi_field) {
  double s = 0.0;
  for (Eigen::Index m = 0; m < data.n_stations(); ++m) {
    for (Eigen::Index j = 0; j < data.n_years(); ++j) {
      s += counts_cell_term(data, pi_field, m, j);
    }
  }
  return s;
}

double loglik_magnitudes(const ObservedData& data,
                         const Eigen::Ref<const Eigen::MatrixXd>& gamma_field,
                         const Eigen::Ref<const Eigen::MatrixXd>& delta_field) {
  const Eigen::Index t = data.n_years();
  const std::size_t cells =
      static_cast<std::size_t>(data.n_stations() * t);
  return chunked_sum(cells, [&](std::size_t c) {
    const Eigen::Index m = static_cast<Eigen::Index>(c) / t;
    const Eigen::Index j = static_cast<Eigen::Index>(c) % t;
    return magnitudes_cell_term(data, gamma_field, delta_field, m, j);
  });
}

double loglik_magnitudes_serial(const ObservedData& data,
                                const Eigen::Ref<const Eigen::MatrixXd>& gamma_field,
                                const Eigen::Ref<const Eigen::MatrixXd>& delta_field) {
  double s = 0.0;
  for (Eigen::Index m = 0; m < data.n_stations(); ++m) {
    for (Eigen::Index j = 0; j < data.n_years(); ++j) {
      s += magnitudes_cell_term(data, gamma_field, delta_field, m, j);
    }
  }
  return s;
}

double log_joint_gaussian_prior(GpBlockState& block, const PointSet& points) {
  constexpr double kLog2Pi = 1.8378770664093453;
  const Eigen::Index m = block.mu.size();
  const Eigen::Index t = block.field.cols();
  double value = -0.5 * (kLog2Pi + std::log(block.zeta_psi)) -
                 0.5 * block.psi * block.psi / block.zeta_psi;
  const CholFactor& corr = corr_factor(block, points);
  const Eigen::VectorXd z =
      corr.solve_lower(block.mu - Eigen::VectorXd::Constant(m, block.psi));
  value += -0.5 * m * (kLog2Pi + std::log(block.sigma2)) -
           corr.log_det_half() - 0.5 * z.squaredNorm() / block.sigma2;
  double sq = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < t; ++j) {
      const double d = block.field(i, j) - block.mu[i];
      sq += d * d;
    }
  }
  value += -0.5 * m * t * (kLog2Pi + std::log(block.tau2)) -
           0.5 * sq / block.tau2;
  return value;
}

}  // namespace raingp
