// Apache License, Version 2.0, refer to LICENSE.txt

#include "raingp/simstudy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "raingp/chain.hpp"
#include "raingp/distributions.hpp"
#include "raingp/errors.hpp"
#include "raingp/forecast.hpp"
#include "raingp/parallel.hpp"
#include "raingp/stats.hpp"

namespace raingp {

namespace {
constexpr double kPi = 3.141592653589793;
}

ScenarioKind scenario_from_name(const std::string& name) {
  if (name == "nonlinear") return ScenarioKind::nonlinear;
  if (name == "linear") return ScenarioKind::linear;
  throw std::invalid_argument("unknown scenario: " + name);
}

std::string scenario_name(ScenarioKind kind) {
  return kind == ScenarioKind::nonlinear ? "nonlinear" : "linear";
}

void Scenario::validate() const {
  if (m_stations < 1 || t_years < 1 || events_per_cell < 1 ||
      replicates < 1 || grid_resolution < 1) {
    throw std::invalid_argument("Scenario: all sizes must be positive");
  }
}

double true_gamma(const SpatialPoint& s, ScenarioKind kind) {
  const double s1 = s[0];
  const double s2 = s[1];
  if (kind == ScenarioKind::linear) {
    return 17.0 / 25.0 + 29.0 / 100.0 * s1 + 7.0 / 10.0 * s2;
  }
  const double bump = 2.0 * std::exp(2.0 * s1 - 1.0 - std::abs(2.0 * s2 - 1.0)) /
                      std::pow(1.0 + std::exp(2.0 * s1 - 1.0), 2);
  const double dip = std::sqrt(8.0 / kPi) * std::exp(-std::pow(2.0 * s2 + 1.0, 2)) /
                     (1.0 + std::pow(2.0 * s1 + 1.0, 2));
  return 69.0 / 100.0 + 52.0 / 25.0 * (bump - dip);
}

double true_delta(const SpatialPoint& s, ScenarioKind kind) {
  const double s1 = s[0];
  const double s2 = s[1];
  if (kind == ScenarioKind::linear) {
    return 7.0 / 5.0 * s1 + 58.0 / 100.0 * s2;
  }
  return std::sin(kPi * s1) + std::sin(kPi * s2);
}

PointSet station_layout(int m_stations) {
  if (m_stations < 1) throw std::invalid_argument("station_layout: m >= 1");
  const int g = static_cast<int>(
      std::ceil(std::sqrt(static_cast<double>(m_stations))));
  std::vector<int> cells(static_cast<std::size_t>(g) * g);
  std::iota(cells.begin(), cells.end(), 0);
  Rng rng(0x5a17edULL);  // layout is a fixture, not part of user seeding
  std::shuffle(cells.begin(), cells.end(), rng);

  const double width = 2.0 / g;
  PointSet points(m_stations, 2);
  for (int i = 0; i < m_stations; ++i) {
    const int cx = cells[static_cast<std::size_t>(i)] % g;
    const int cy = cells[static_cast<std::size_t>(i)] / g;
    // jitter inside the central 70% of the cell keeps points separated
    const double u = sample_uniform(0.0, 1.0, rng);
    const double v = sample_uniform(0.0, 1.0, rng);
    points(i, 0) = -1.0 + (cx + 0.15 + 0.7 * u) * width;
    points(i, 1) = -1.0 + (cy + 0.15 + 0.7 * v) * width;
  }
  return points;
}

PointSet square_grid(int resolution) {
  PointSet grid(static_cast<Eigen::Index>(resolution) * resolution, 2);
  const double step = 2.0 / resolution;
  Eigen::Index k = 0;
  for (int iy = 0; iy < resolution; ++iy) {
    for (int ix = 0; ix < resolution; ++ix) {
      grid(k, 0) = -1.0 + (ix + 0.5) * step;
      grid(k, 1) = -1.0 + (iy + 0.5) * step;
      ++k;
    }
  }
  return grid;
}

ObservedData generate_replicate(const Scenario& scenario,
                                const PointSet& stations, std::uint64_t seed) {
  scenario.validate();
  ObservedData data;
  std::vector<int> years(static_cast<std::size_t>(scenario.t_years));
  for (int j = 0; j < scenario.t_years; ++j) {
    years[static_cast<std::size_t>(j)] = 2001 + j;
  }
  const int trials = std::max(365, scenario.events_per_cell);
  data.init(stations, years, trials);

  Rng rng(seed);
  for (Eigen::Index m = 0; m < data.n_stations(); ++m) {
    const WeibullLogParams wp{true_gamma(stations.row(m).transpose(),
                                         scenario.kind),
                              true_delta(stations.row(m).transpose(),
                                         scenario.kind)};
    for (Eigen::Index j = 0; j < data.n_years(); ++j) {
      data.counts(m, j) = scenario.events_per_cell;
      auto& mags = data.magnitudes(m, j);
      mags.resize(static_cast<std::size_t>(scenario.events_per_cell));
      for (auto& w : mags) w = sample_weibull(wp, rng);
    }
  }
  data.finalize();
  return data;
}

namespace {

// Per-pixel posterior medians of KL(truth || fitted) for one fitted chain.
Eigen::VectorXd kl_medians(const ChainArchive& chain, const PointSet& grid,
                           const TruthGrid& truth, std::uint64_t seed) {
  const FunctionalGrid fg = forecast_functional_grid_serial(
      chain, grid, Functional::kl_vs_truth, seed, &truth);
  return fg.median;
}

}  // namespace

StudyResult run_study(const Scenario& scenario, const SamplerConfig& sampler,
                      std::uint64_t master_seed) {
  scenario.validate();
  sampler.validate();
  const PointSet stations = station_layout(scenario.m_stations);
  const PointSet grid = square_grid(scenario.grid_resolution);
  const Eigen::Index n_pixels = grid.rows();

  TruthGrid truth;
  truth.gamma_true.resize(n_pixels);
  truth.delta_true.resize(n_pixels);
  for (Eigen::Index g = 0; g < n_pixels; ++g) {
    truth.gamma_true[g] = true_gamma(grid.row(g).transpose(), scenario.kind);
    truth.delta_true[g] = true_delta(grid.row(g).transpose(), scenario.kind);
  }

  const int n_reps = scenario.replicates;
  const ModelKind kinds[] = {ModelKind::semiparametric, ModelKind::parametric};
  // medians[model][replicate] is a per-pixel vector
  std::vector<std::vector<Eigen::VectorXd>> medians(
      2, std::vector<Eigen::VectorXd>(static_cast<std::size_t>(n_reps)));

  // One task per (replicate, model); both models share the replicate data.
  parallel_for_dynamic(static_cast<std::size_t>(n_reps) * 2, [&](std::size_t task) {
    const int rep = static_cast<int>(task / 2);
    const int model_idx = static_cast<int>(task % 2);
    const ObservedData data = generate_replicate(
        scenario, stations,
        derive_seed(master_seed, 0x0da7aULL, static_cast<std::uint64_t>(rep)));
    SamplerConfig config = sampler;
    config.update_counts_block = false;  // counts are fixed by design
    config.seed = derive_seed(master_seed, 0xc4a1ULL,
                              static_cast<std::uint64_t>(task));
    const ChainArchive chain = run_chain(data, config, kinds[model_idx]);
    medians[static_cast<std::size_t>(model_idx)][static_cast<std::size_t>(rep)] =
        kl_medians(chain, grid, truth,
                   derive_seed(master_seed, 0xf0caULL,
                               static_cast<std::uint64_t>(task)));
  });

  StudyResult result;
  result.rows.reserve(static_cast<std::size_t>(2 * n_pixels));
  double grid_means[2] = {0.0, 0.0};
  for (int model_idx = 0; model_idx < 2; ++model_idx) {
    for (Eigen::Index g = 0; g < n_pixels; ++g) {
      double s = 0.0;
      for (int rep = 0; rep < n_reps; ++rep) {
        s += medians[static_cast<std::size_t>(model_idx)]
                    [static_cast<std::size_t>(rep)][g];
      }
      const double mean_of_medians = s / n_reps;
      KlSummaryRow row;
      row.scenario = scenario_name(scenario.kind);
      row.model = model_kind_name(kinds[model_idx]);
      row.m_stations = scenario.m_stations;
      row.pixel_x = grid(g, 0);
      row.pixel_y = grid(g, 1);
      row.mean_of_medians = mean_of_medians;
      row.log10_mean_of_medians =
          mean_of_medians > 0.0 ? std::log10(mean_of_medians)
                                : -std::numeric_limits<double>::infinity();
      result.rows.push_back(std::move(row));
      grid_means[model_idx] += mean_of_medians;
    }
    grid_means[model_idx] /= static_cast<double>(n_pixels);
  }
  result.grid_mean_semiparametric = grid_means[0];
  result.grid_mean_parametric = grid_means[1];
  return result;
}

}  // namespace raingp
