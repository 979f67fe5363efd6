// Apache License, Version 2.0, refer to LICENSE.txt
//
// Serial reference vs OpenMP production kernels. Run with
//   raingp_bench [--benchmark_filter=...]

#include <benchmark/benchmark.h>

#include "raingp/chain.hpp"
#include "raingp/forecast.hpp"
#include "raingp/kernel.hpp"
#include "raingp/model.hpp"
#include "raingp/parallel.hpp"
#include "raingp/simstudy.hpp"

using namespace raingp;

namespace {

PointSet bench_points(Eigen::Index m) {
  Rng rng(1);
  PointSet pts(m, 3);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index h = 0; h < 3; ++h) {
      pts(i, h) = sample_uniform(-1.0, 1.0, rng);
    }
  }
  return pts;
}

const KernelParams& bench_params() {
  static KernelParams params{1.3, Eigen::VectorXd::Constant(3, 0.8)};
  return params;
}

ObservedData bench_data(Eigen::Index m, Eigen::Index t, int events) {
  Scenario scenario;
  scenario.kind = ScenarioKind::nonlinear;
  scenario.m_stations = static_cast<int>(m);
  scenario.t_years = static_cast<int>(t);
  scenario.events_per_cell = events;
  PointSet pts = bench_points(m);
  pts.conservativeResize(m, 2);
  return generate_replicate(scenario, pts, 2);
}

void covariance_serial(benchmark::State& state) {
  const PointSet pts = bench_points(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(covariance_matrix_serial(pts, bench_params()));
  }
}
BENCHMARK(covariance_serial)->Arg(128)->Arg(512);

void covariance_openmp(benchmark::State& state) {
  const PointSet pts = bench_points(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(covariance_matrix(pts, bench_params()));
  }
}
BENCHMARK(covariance_openmp)->Arg(128)->Arg(512);

void magnitudes_loglik_serial(benchmark::State& state) {
  const ObservedData data = bench_data(64, 8, static_cast<int>(state.range(0)));
  const Eigen::MatrixXd gamma_field = Eigen::MatrixXd::Constant(64, 8, 0.2);
  const Eigen::MatrixXd delta_field = Eigen::MatrixXd::Constant(64, 8, 0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        loglik_magnitudes_serial(data, gamma_field, delta_field));
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<long>(data.total_events()));
}
BENCHMARK(magnitudes_loglik_serial)->Arg(100)->Arg(365);

void magnitudes_loglik_openmp(benchmark::State& state) {
  const ObservedData data = bench_data(64, 8, static_cast<int>(state.range(0)));
  const Eigen::MatrixXd gamma_field = Eigen::MatrixXd::Constant(64, 8, 0.2);
  const Eigen::MatrixXd delta_field = Eigen::MatrixXd::Constant(64, 8, 0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(loglik_magnitudes(data, gamma_field, delta_field));
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<long>(data.total_events()));
}
BENCHMARK(magnitudes_loglik_openmp)->Arg(100)->Arg(365);

void counts_loglik_serial(benchmark::State& state) {
  const ObservedData data = bench_data(256, 16, 30);
  const Eigen::MatrixXd pi_field = Eigen::MatrixXd::Constant(256, 16, 0.3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(loglik_counts_serial(data, pi_field));
  }
}
BENCHMARK(counts_loglik_serial);

void counts_loglik_openmp(benchmark::State& state) {
  const ObservedData data = bench_data(256, 16, 30);
  const Eigen::MatrixXd pi_field = Eigen::MatrixXd::Constant(256, 16, 0.3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(loglik_counts(data, pi_field));
  }
}
BENCHMARK(counts_loglik_openmp);

const ChainArchive& forecast_archive() {
  static const ChainArchive archive = [] {
    const ObservedData data = bench_data(31, 4, 134);
    SamplerConfig config;
    config.n_iterations = 260;
    config.burn_in = 10;
    config.seed = 3;
    config.update_counts_block = false;
    return run_chain(data, config, ModelKind::semiparametric);
  }();
  return archive;
}

void forecast_grid_serial(benchmark::State& state) {
  const PointSet grid = square_grid(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(forecast_functional_grid_serial(
        forecast_archive(), grid, Functional::event_mean, 4));
  }
}
BENCHMARK(forecast_grid_serial)->Arg(8)->Arg(16);

void forecast_grid_openmp(benchmark::State& state) {
  const PointSet grid = square_grid(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(forecast_functional_grid(
        forecast_archive(), grid, Functional::event_mean, 4));
  }
}
BENCHMARK(forecast_grid_openmp)->Arg(8)->Arg(16);

void chunked_reduce_serial(benchmark::State& state) {
  std::vector<double> values(static_cast<std::size_t>(state.range(0)));
  Rng rng(5);
  for (double& v : values) v = sample_uniform(0.0, 1.0, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        serial_sum(values.size(), [&](std::size_t i) { return values[i]; }));
  }
}
BENCHMARK(chunked_reduce_serial)->Arg(1 << 22);

void chunked_reduce_openmp(benchmark::State& state) {
  std::vector<double> values(static_cast<std::size_t>(state.range(0)));
  Rng rng(5);
  for (double& v : values) v = sample_uniform(0.0, 1.0, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        chunked_sum(values.size(), [&](std::size_t i) { return values[i]; }));
  }
}
BENCHMARK(chunked_reduce_openmp)->Arg(1 << 22);

}  // namespace

BENCHMARK_MAIN();
