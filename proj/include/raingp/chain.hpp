// Apache License, Version 2.0, refer to LICENSE.txt
//
// In-memory chain archive: one row per stored draw holding every scalar and
// vector of the sampler state, plus the metadata needed to reproduce and to
// forecast from the chain (prior constants, station coordinates, the
// covariate standardization, the final state and generator state).

#ifndef RAINGP_CHAIN_HPP
#define RAINGP_CHAIN_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "raingp/model.hpp"
#include "raingp/sampler.hpp"

namespace raingp {

inline constexpr int kChainSchemaVersion = 1;

// Column layout of one stored draw. Semiparametric blocks serialize as
// [psi, tau2, sigma2, zeta_psi, zeta_tau2, zeta_sigma2, lambda_h...,
//  mu_m..., field_{m,j} (station-major)]; parametric blocks as
// [tau2, zeta_tau2, beta_h..., zeta_beta_h..., field_{m,j}]. Column 0 of a
// row is the iteration number.
struct ChainLayout {
  ModelKind model = ModelKind::semiparametric;
  Eigen::Index m = 0, t = 0, p = 0;

  Eigen::Index block_stride() const;
  Eigen::Index row_width() const { return 1 + 3 * block_stride(); }
  Eigen::Index block_offset(int block) const {
    return 1 + block * block_stride();
  }
  std::vector<std::string> column_names() const;
};

struct ChainArchive {
  int schema_version = kChainSchemaVersion;
  ModelKind model = ModelKind::semiparametric;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  long n_iterations = 0;
  long burn_in = 0;
  long thin = 1;
  int n_trials = 365;
  PriorConfig prior;
  bool update_counts_block = true;
  Standardization transform;
  PointSet points;  // standardized station coordinates, M x p
  std::vector<int> years;
  std::vector<double> rows;  // row-major, row_width() per stored draw
  std::vector<double> final_state;  // full state row for resuming
  std::string rng_state;            // serialized mersenne twister
  long completed_iterations = 0;

  ChainLayout layout() const {
    return {model, points.rows(), static_cast<Eigen::Index>(years.size()),
            points.cols()};
  }
  std::size_t n_stored() const {
    const auto w = static_cast<std::size_t>(layout().row_width());
    return w == 0 ? 0 : rows.size() / w;
  }
  const double* row(std::size_t i) const {
    return rows.data() + i * static_cast<std::size_t>(layout().row_width());
  }
};

// Per-draw views used by forecasting.
struct GpDraw {
  double psi = 0.0, tau2 = 1.0, sigma2 = 1.0;
  Eigen::VectorXd lambdas, mu;
};
struct LinearDraw {
  double tau2 = 1.0;
  Eigen::VectorXd beta;
};

// block: 0 = pi, 1 = gamma, 2 = delta.
GpDraw gp_draw(const ChainArchive& archive, std::size_t row, int block);
LinearDraw linear_draw(const ChainArchive& archive, std::size_t row,
                       int block);

// 64-bit FNV-1a hash of everything that pins a run except the iteration
// count: model kind, sampler and prior constants, seed, and the dataset.
std::uint64_t config_hash(const ObservedData& data, const SamplerConfig& config,
                          ModelKind kind);

struct ProgressInfo {
  long iteration = 0;
  long total = 0;
  ScanStats scan;
};
using ProgressCallback = std::function<void(const ProgressInfo&)>;

struct FitSummary {
  long ess_calls = 0;
  long total_shrinks = 0;
  int max_shrinks_single = 0;
  long equal_outcomes = 0;
};

// Runs the requested sampler for config.n_iterations scans, keeping one row
// per thin-th post-burn-in iteration.
ChainArchive run_chain(const ObservedData& data, const SamplerConfig& config,
                       ModelKind kind, const ProgressCallback& progress = {},
                       FitSummary* summary = nullptr);

// Continues an archived run up to new_total_iterations scans. The archive
// must carry a matching config hash for the dataset and config implied by
// its own header; throws DataError otherwise.
void extend_chain(ChainArchive& archive, const ObservedData& data,
                  long new_total_iterations,
                  const ProgressCallback& progress = {},
                  FitSummary* summary = nullptr);

// Reconstructs the sampler config implied by an archive header.
SamplerConfig archive_config(const ChainArchive& archive);

}  // namespace raingp

#endif
