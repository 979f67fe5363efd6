// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef RAINGP_MODEL_HPP
#define RAINGP_MODEL_HPP

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "raingp/kernel.hpp"
#include "raingp/rng.hpp"

namespace raingp {

enum class ModelKind { semiparametric, parametric };

std::string model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

// Invertible per-dimension min-max map from original covariate units onto
// [-1, 1]. Stored with the data (and in chain archives) so forecast targets
// are expressed in the same coordinates the model was fit in.
struct Standardization {
  Eigen::VectorXd lo;  // original-unit minima
  Eigen::VectorXd hi;  // original-unit maxima

  static Standardization fit(const PointSet& original);
  static Standardization identity(Eigen::Index p);

  SpatialPoint apply(const SpatialPoint& original) const;
  SpatialPoint invert(const SpatialPoint& standardized) const;
  PointSet apply_all(const PointSet& original) const;
};

// Station-year panel: wet-day counts and per-event magnitudes at M spatial
// points over T years. Cells with no usable record are masked out of the
// likelihood (observed = false implies count 0 and no magnitudes).
class ObservedData {
 public:
  PointSet points;                        // M x p, standardized
  Standardization transform;              // original -> standardized
  std::vector<std::string> station_ids;   // may be empty for synthetic data
  std::vector<int> years;                 // year labels, length T
  Eigen::MatrixXi counts;                 // M x T
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> observed;  // M x T
  int n_trials = 365;

  Eigen::Index n_stations() const { return points.rows(); }
  Eigen::Index n_years() const { return static_cast<Eigen::Index>(years.size()); }
  Eigen::Index n_dims() const { return points.cols(); }

  std::vector<double>& magnitudes(Eigen::Index m, Eigen::Index j) {
    return magnitudes_[cell(m, j)];
  }
  const std::vector<double>& magnitudes(Eigen::Index m, Eigen::Index j) const {
    return magnitudes_[cell(m, j)];
  }
  const std::vector<double>& log_magnitudes(Eigen::Index m,
                                            Eigen::Index j) const {
    return log_magnitudes_[cell(m, j)];
  }
  double log_binom(Eigen::Index m, Eigen::Index j) const {
    return log_binom_[cell(m, j)];
  }
  std::size_t total_events() const;

  // Allocates the panel with zero counts and everything observed.
  void init(PointSet pts, std::vector<int> year_labels, int trials);

  // Recomputes cached log magnitudes / binomial coefficients and checks the
  // invariants (counts within [0, n_trials], |magnitudes| == count,
  // magnitudes positive, masked cells empty). Call after filling cells.
  void finalize();

 private:
  Eigen::Index cell(Eigen::Index m, Eigen::Index j) const {
    return m * n_years() + j;
  }
  std::vector<std::vector<double>> magnitudes_;
  std::vector<std::vector<double>> log_magnitudes_;
  std::vector<double> log_binom_;
};

// Cached Cholesky factor of the unit-amplitude correlation matrix R(lambda)
// of the station set. Covariances scale out of R, so one factor serves the
// GP density, GP draws, the sigma^2 quadratic form and forecasting; it is
// rebuilt only when lambda changes.
struct CorrCache {
  Eigen::VectorXd key;
  CholFactor factor;
  bool valid = false;
};

// Full latent state of one GP block (pi, gamma or delta): the GP mean level
// psi, the GP values mu at the stations, the per-station-per-year field, the
// white-noise and GP variances, length scales, and the auxiliary scale
// latents of the Student-t / compounded-gamma representations.
struct GpBlockState {
  double psi = 0.0;
  Eigen::VectorXd mu;
  Eigen::MatrixXd field;  // M x T
  double tau2 = 1.0;
  double sigma2 = 1.0;
  Eigen::VectorXd lambdas;
  double zeta_psi = 1.0;
  double zeta_tau2 = 1.0;
  double zeta_sigma2 = 1.0;
  CorrCache corr;

  static GpBlockState zeros(Eigen::Index m, Eigen::Index t, Eigen::Index p);
  void check_positive() const;  // throws NumericalError on violation
};

// Returns the cached correlation factor for the block, rebuilding it if the
// length scales changed since the last factorization.
const CholFactor& corr_factor(GpBlockState& block, const PointSet& points);

struct ChainState {
  GpBlockState pi_block;
  GpBlockState gamma_block;
  GpBlockState delta_block;
  long iteration = 0;
  Rng rng;

  static ChainState init(const ObservedData& data, std::uint64_t seed);
};

// Parametric linear competitor: each field is an intercept-plus-covariates
// regression with iid Gaussian noise; coefficients carry independent
// Student-t(2) priors via per-coefficient scale latents.
struct LinearModelState {
  Eigen::VectorXd beta_pi, beta_gamma, beta_delta;           // length p+1
  Eigen::VectorXd zeta_beta_pi, zeta_beta_gamma, zeta_beta_delta;
  double tau2_pi = 1.0, tau2_gamma = 1.0, tau2_delta = 1.0;
  double zeta_tau2_pi = 1.0, zeta_tau2_gamma = 1.0, zeta_tau2_delta = 1.0;
  Eigen::MatrixXd field_pi, field_gamma, field_delta;        // M x T
  long iteration = 0;
  Rng rng;

  static LinearModelState init(const ObservedData& data, std::uint64_t seed);
  void check_positive() const;
};

// x_m^T beta with an implicit leading intercept column.
Eigen::VectorXd linear_predictor(const PointSet& points,
                                 const Eigen::VectorXd& beta);

// Sum over observed cells of the binomial log likelihood at the given
// logit field. Production kernel uses a fixed-order chunked reduction;
// the serial variant is the reference.
double loglik_counts(const ObservedData& data, const Eigen::Ref<const Eigen::MatrixXd>& pi_field);
double loglik_counts_serial(const ObservedData& data,
                            const Eigen::Ref<const Eigen::MatrixXd>& pi_field);

// Sum over events of the Weibull log likelihood at the given log-shape and
// log-scale fields. Empty cells contribute zero.
double loglik_magnitudes(const ObservedData& data,
                         const Eigen::Ref<const Eigen::MatrixXd>& gamma_field,
                         const Eigen::Ref<const Eigen::MatrixXd>& delta_field);
double loglik_magnitudes_serial(const ObservedData& data,
                                const Eigen::Ref<const Eigen::MatrixXd>& gamma_field,
                                const Eigen::Ref<const Eigen::MatrixXd>& delta_field);

// Log density of the block's Gaussian hierarchy at its current state:
// log N(psi; 0, zeta_psi) + log N(mu; psi 1, sigma^2 R(lambda))
// + sum_{m,j} log N(field_mj; mu_m, tau2). Diagnostic use.
double log_joint_gaussian_prior(GpBlockState& block, const PointSet& points);

}  // namespace raingp

#endif
