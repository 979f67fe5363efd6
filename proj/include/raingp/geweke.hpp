// Apache License, Version 2.0, refer to LICENSE.txt
//
// Joint-distribution sampler validation: compares a marginal-conditional
// simulator (prior then data, independent draws) against a
// successive-conditional simulator (alternating full scans and data
// regeneration). With exact full conditionals both simulators target the
// same joint law, so every test-function moment must agree.

#ifndef RAINGP_GEWEKE_HPP
#define RAINGP_GEWEKE_HPP

#include <string>
#include <vector>

#include "raingp/chain.hpp"
#include "raingp/model.hpp"
#include "raingp/sampler.hpp"

namespace raingp {

struct GewekeConfig {
  long n_draws = 100000;
  int m_stations = 3;
  int t_years = 2;
  int p_dims = 2;
  int n_trials = 10;
  std::uint64_t seed = 0x9e3779b9;
  ModelKind model = ModelKind::semiparametric;
  Step2Conditionals step2 = Step2Conditionals::exact;
  PriorConfig prior;
  int max_shrinks = 1000;
  double z_threshold = 4.0;
};

struct GewekeFunction {
  std::string name;
  double mean_marginal = 0.0;
  double mean_successive = 0.0;
  double se_marginal = 0.0;
  double se_successive = 0.0;
  double z = 0.0;
};

struct GewekeReport {
  std::vector<GewekeFunction> functions;
  double max_abs_z = 0.0;
  bool passed = false;
};

// Draws a full latent state from the prior hierarchy.
ChainState sample_state_from_prior(const ObservedData& shape,
                                   const PriorConfig& prior, Rng& rng);
LinearModelState sample_linear_state_from_prior(const ObservedData& shape,
                                                const PriorConfig& prior,
                                                Rng& rng);

// Regenerates the data panel from the current parameter fields: counts from
// the binomial layer, magnitudes from the Weibull layer.
void regenerate_data(ObservedData& data, const Eigen::MatrixXd& pi_field,
                     const Eigen::MatrixXd& gamma_field,
                     const Eigen::MatrixXd& delta_field, Rng& rng);

GewekeReport run_geweke(const GewekeConfig& config);

}  // namespace raingp

#endif
