// Apache License, Version 2.0, refer to LICENSE.txt

#include "raingp/forecast.hpp"

#include <doctest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <numeric>

#include "raingp/chain.hpp"
#include "raingp/distributions.hpp"
#include "raingp/simstudy.hpp"
#include "test_support.hpp"

using namespace raingp;

namespace {

// Independent oracle: KL(f1 || f2) = E_{f1}[log f1 - log f2] integrated in
// the probability transform u = F1(w), i.e. log w = delta1 + e^{-gamma1} L
// with L = log(-log(1-u)). Evaluated in log space throughout so the
// quadrature nodes hugging the endpoints stay finite.
double weibull_kl_quadrature(const WeibullLogParams& a,
                             const WeibullLogParams& b) {
  const auto integrand = [&](double u) {
    const double t = -std::log1p(-u);  // (w/scale1)^shape1
    const double big_l = std::log(t);
    const double log_w = a.delta + std::exp(-a.gamma) * big_l;
    const double lf1 =
        a.gamma - a.delta + (1.0 - std::exp(-a.gamma)) * big_l - t;
    const double e2 = std::exp(b.gamma) * (log_w - b.delta);
    const double lf2 = b.gamma - b.delta +
                       (std::exp(b.gamma) - 1.0) * (log_w - b.delta) -
                       std::exp(std::min(e2, 700.0));
    return lf1 - lf2;
  };
  boost::math::quadrature::tanh_sinh<double> integrator;
  return integrator.integrate(integrand, 0.0, 1.0, 1e-9);
}

ObservedData small_data(Eigen::Index m, std::uint64_t seed) {
  Rng rng(seed);
  PointSet points(m, 2);
  for (Eigen::Index i = 0; i < m; ++i) {
    points(i, 0) = sample_uniform(-1.0, 1.0, rng);
    points(i, 1) = sample_uniform(-1.0, 1.0, rng);
  }
  ObservedData data;
  data.init(points, {2001, 2002}, 20);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < 2; ++j) {
      const int n = sample_binomial(20, 0.5, rng);
      data.counts(i, j) = n;
      auto& mags = data.magnitudes(i, j);
      mags.resize(static_cast<std::size_t>(n));
      for (double& w : mags) w = sample_weibull({0.2, 0.6}, rng);
    }
  }
  data.finalize();
  return data;
}

}  // namespace

TEST_CASE("conditional_mu interpolates at a training point") {
  const ObservedData data = small_data(5, 50);
  GpBlockState block = GpBlockState::zeros(5, 2, 2);
  Rng rng(51);
  block.psi = 0.3;
  block.sigma2 = 1.7;
  block.lambdas << 0.8, 1.2;
  for (Eigen::Index i = 0; i < 5; ++i) block.mu[i] = sample_normal(0.0, 1.0, rng);
  const GpConditional c =
      conditional_mu(data.points.row(2).transpose(), block, data.points);
  CHECK(c.mean == doctest::Approx(block.mu[2]).epsilon(1e-6));
  CHECK(c.var >= 0.0);
  CHECK(c.var < 1e-8 * block.sigma2);
}

TEST_CASE("conditional_mu reverts to the prior far away") {
  const ObservedData data = small_data(4, 52);
  GpBlockState block = GpBlockState::zeros(4, 2, 2);
  block.psi = -0.9;
  block.sigma2 = 2.2;
  block.lambdas << 0.3, 0.3;
  block.mu << 1.0, -1.0, 0.5, 0.2;
  SpatialPoint far(2);
  far << 100.0, -100.0;
  const GpConditional c = conditional_mu(far, block, data.points);
  CHECK(c.mean == doctest::Approx(block.psi).epsilon(1e-12));
  CHECK(c.var == doctest::Approx(block.sigma2).epsilon(1e-12));
}

TEST_CASE("conditional_mu matches the dense-inverse oracle") {
  const ObservedData data = small_data(3, 53);
  GpBlockState block = GpBlockState::zeros(3, 2, 2);
  Rng rng(54);
  block.psi = 0.4;
  block.sigma2 = 1.3;
  block.lambdas << 1.1, 0.7;
  for (Eigen::Index i = 0; i < 3; ++i) block.mu[i] = sample_normal(0.0, 1.0, rng);
  KernelParams params{block.sigma2, block.lambdas};
  const Eigen::MatrixXd k_mat = covariance_matrix(data.points, params);

  for (int trial = 0; trial < 20; ++trial) {
    SpatialPoint target(2);
    target << sample_uniform(-1.0, 1.0, rng), sample_uniform(-1.0, 1.0, rng);
    const Eigen::RowVectorXd k_star =
        cross_covariance(target, data.points, params);
    const Eigen::VectorXd w = k_mat.inverse() * k_star.transpose();
    const double mean_oracle =
        block.psi +
        k_star.dot((block.mu - Eigen::VectorXd::Constant(3, block.psi)));
    // oracle via explicit inverse
    const double mean_dense =
        block.psi + (k_star * k_mat.inverse() *
                     (block.mu - Eigen::VectorXd::Constant(3, block.psi)))(0);
    (void)mean_oracle;
    (void)w;
    const double var_dense =
        block.sigma2 - (k_star * k_mat.inverse() * k_star.transpose())(0);
    const GpConditional c = conditional_mu(target, block, data.points);
    CHECK(c.mean == doctest::Approx(mean_dense).epsilon(1e-9));
    CHECK(c.var == doctest::Approx(var_dense).epsilon(1e-7));
    CHECK(c.var >= 0.0);
    CHECK(c.var <= block.sigma2);
  }
}

TEST_CASE("draw_parameters_at: deterministic, concentrates as tau2 -> 0") {
  const ObservedData data = small_data(4, 55);
  ChainState state = ChainState::init(data, 56);
  Rng rng(57);
  SamplerConfig config;
  for (int i = 0; i < 20; ++i) full_scan(state, data, config);

  SpatialPoint target(2);
  target << 0.0, 0.0;
  Rng ra(58), rb(58);
  const ForecastDraw a = draw_parameters_at(target, state, data.points, ra);
  const ForecastDraw b = draw_parameters_at(target, state, data.points, rb);
  CHECK(a.pi_star == b.pi_star);
  CHECK(a.gamma_star == b.gamma_star);
  CHECK(a.delta_star == b.delta_star);

  // tau2 -> 0 at an observed point: the draw concentrates at mu_m
  state.gamma_block.tau2 = 1e-14;
  const SpatialPoint obs = data.points.row(1).transpose();
  for (int i = 0; i < 10; ++i) {
    const ForecastDraw d = draw_parameters_at(obs, state, data.points, rng);
    CHECK(d.gamma_star ==
          doctest::Approx(state.gamma_block.mu[1]).epsilon(1e-4));
  }
}

TEST_CASE("forecast variance composition at a far target") {
  // far from every station: pi* | state ~ N(psi, sigma2 + tau2)
  const ObservedData data = small_data(4, 59);
  ChainState state = ChainState::init(data, 60);
  state.pi_block.psi = 0.7;
  state.pi_block.sigma2 = 1.9;
  state.pi_block.tau2 = 0.6;
  state.pi_block.lambdas << 0.2, 0.2;
  state.pi_block.mu << 0.5, 1.0, 0.9, 0.4;
  SpatialPoint far(2);
  far << 200.0, 200.0;
  Rng rng(61);
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const ForecastDraw d = draw_parameters_at(far, state, data.points, rng);
    sum += d.pi_star;
    sum2 += d.pi_star * d.pi_star;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(mean == doctest::Approx(0.7).epsilon(0.03));
  CHECK(var == doctest::Approx(1.9 + 0.6).epsilon(0.03));
}

TEST_CASE("expected_event_magnitude closed form") {
  CHECK(expected_event_magnitude(0.0, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  for (double delta : {-1.0, 0.3, 2.0}) {
    CHECK(expected_event_magnitude(0.0, delta) ==
          doctest::Approx(std::exp(delta)).epsilon(1e-13));
  }
  // frozen value for (0.5, 1.0): e * Gamma(1 + e^{-1/2})
  CHECK(expected_event_magnitude(0.5, 1.0) ==
        doctest::Approx(2.43087112459895).epsilon(1e-13));
}

TEST_CASE("expected_event_magnitude vs Monte Carlo") {
  Rng rng(62);
  const int n = 10000000;
  const WeibullLogParams params{0.5, 1.0};
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += sample_weibull(params, rng);
  CHECK(sum / n ==
        doctest::Approx(expected_event_magnitude(0.5, 1.0)).epsilon(0.002));
}

TEST_CASE("event_variance closed form and Monte Carlo") {
  CHECK(event_variance(0.0, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  // frozen value for (0.3, 0.7)
  CHECK(event_variance(0.3, 0.7) ==
        doctest::Approx(1.9120032179363805).epsilon(1e-12));
  Rng rng(63);
  const int n = 2000000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = sample_weibull({0.3, 0.7}, rng);
    sum += w;
    sum2 += w * w;
  }
  const double mean = sum / n;
  CHECK(sum2 / n - mean * mean ==
        doctest::Approx(event_variance(0.3, 0.7)).epsilon(0.01));
  for (int trial = 0; trial < 100; ++trial) {
    Rng r(100 + static_cast<std::uint64_t>(trial));
    CHECK(event_variance(sample_normal(0.0, 1.0, r),
                         sample_normal(0.0, 1.0, r)) >= 0.0);
  }
}

TEST_CASE("expected_annual and expected_wet_days") {
  CHECK(expected_wet_days(0.0, 365) == doctest::Approx(182.5).epsilon(1e-13));
  CHECK(expected_wet_days(700.0, 365) == doctest::Approx(365.0).epsilon(1e-12));
  CHECK(expected_annual(0.0, 0.0, 0.0, 365) ==
        doctest::Approx(182.5).epsilon(1e-12));
  CHECK(expected_annual(700.0, 0.0, 0.0, 365) ==
        doctest::Approx(365.0).epsilon(1e-12));
}

TEST_CASE("expected_annual vs compound Monte Carlo") {
  Rng rng(64);
  const int n = 1000000;
  const double pi = 0.4;
  const WeibullLogParams params{0.2, 0.8};
  const double p = 1.0 / (1.0 + std::exp(-pi));
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const int events = sample_binomial(365, p, rng);
    double year = 0.0;
    for (int e = 0; e < events; ++e) year += sample_weibull(params, rng);
    total += year;
  }
  CHECK(total / n ==
        doctest::Approx(expected_annual(pi, 0.2, 0.8, 365)).epsilon(0.005));
}

TEST_CASE("functional monotonicity") {
  double prev_annual = 0.0, prev_days = 0.0;
  for (double pi = -3.0; pi <= 3.0; pi += 0.25) {
    const double annual = expected_annual(pi, 0.3, 0.5, 365);
    const double days = expected_wet_days(pi, 365);
    if (pi > -3.0) {
      CHECK(annual > prev_annual);
      CHECK(days > prev_days);
    }
    prev_annual = annual;
    prev_days = days;
  }
  double prev = 0.0;
  for (double delta = -2.0; delta <= 2.0; delta += 0.25) {
    const double annual = expected_annual(0.2, 0.3, delta, 365);
    if (delta > -2.0) CHECK(annual > prev);
    prev = annual;
  }
}

TEST_CASE("weibull_kl: zero iff equal, non-negative, matches quadrature") {
  CHECK(weibull_kl({0.3, -0.8}, {0.3, -0.8}) == 0.0);
  CHECK(weibull_kl({-1.0, 2.0}, {-1.0, 2.0}) == 0.0);

  // frozen spot value for truth (0.3, 0.7), estimate (-0.2, 1.1)
  CHECK(weibull_kl({0.3, 0.7}, {-0.2, 1.1}) ==
        doctest::Approx(0.24490002010423115).epsilon(1e-12));

  Rng rng(65);
  for (int trial = 0; trial < 40; ++trial) {
    const WeibullLogParams a{sample_normal(0.0, 0.6, rng),
                             sample_normal(0.0, 0.8, rng)};
    const WeibullLogParams b{sample_normal(0.0, 0.6, rng),
                             sample_normal(0.0, 0.8, rng)};
    const double closed = weibull_kl(a, b);
    CHECK(closed >= 0.0);
    CHECK(closed == doctest::Approx(weibull_kl_quadrature(a, b)).epsilon(1e-6));
  }
}

TEST_CASE("weibull_kl is zero only on the diagonal of a grid") {
  for (double g1 : {-0.5, 0.0, 0.5}) {
    for (double d1 : {-0.5, 0.0, 0.5}) {
      for (double g2 : {-0.5, 0.0, 0.5}) {
        for (double d2 : {-0.5, 0.0, 0.5}) {
          const double kl = weibull_kl({g1, d1}, {g2, d2});
          if (g1 == g2 && d1 == d2) {
            CHECK(kl == 0.0);
          } else {
            CHECK(kl > 0.0);
          }
        }
      }
    }
  }
}

TEST_CASE("forecast_functional_grid: single-draw chain gives zero-width bands") {
  const ObservedData data = small_data(4, 66);
  SamplerConfig config;
  config.n_iterations = 1;
  config.burn_in = 0;
  config.thin = 1;
  config.seed = 67;
  const ChainArchive archive = run_chain(data, config, ModelKind::semiparametric);
  REQUIRE(archive.n_stored() == 1);
  PointSet targets(2, 2);
  targets << 0.0, 0.0, 0.5, -0.5;
  const FunctionalGrid grid = forecast_functional_grid(
      archive, targets, Functional::event_mean, 68);
  for (Eigen::Index g = 0; g < 2; ++g) {
    CHECK(grid.q05[g] == grid.median[g]);
    CHECK(grid.q95[g] == grid.median[g]);
  }
}

TEST_CASE("forecast_functional_grid: quantile ordering and determinism") {
  const ObservedData data = small_data(5, 69);
  SamplerConfig config;
  config.n_iterations = 40;
  config.burn_in = 10;
  config.seed = 70;
  const ChainArchive archive = run_chain(data, config, ModelKind::semiparametric);
  PointSet targets(6, 2);
  targets << 0.0, 0.0, 0.5, -0.5, -0.7, 0.3, 0.9, 0.9, -0.9, -0.9, 0.2, 0.8;
  const FunctionalGrid a =
      forecast_functional_grid(archive, targets, Functional::annual_mean, 71);
  const FunctionalGrid b =
      forecast_functional_grid(archive, targets, Functional::annual_mean, 71);
  for (Eigen::Index g = 0; g < targets.rows(); ++g) {
    CHECK(a.q05[g] <= a.median[g]);
    CHECK(a.median[g] <= a.q95[g]);
    CHECK(a.median[g] == b.median[g]);
    CHECK(a.q05[g] == b.q05[g]);
    CHECK(a.q95[g] == b.q95[g]);
  }
}

TEST_CASE("parametric and semiparametric share the functional layer") {
  // same (pi, gamma, delta) inputs give identical functional values
  for (double pi : {-0.5, 0.8}) {
    for (double g : {-0.3, 0.4}) {
      for (double d : {0.1, 1.2}) {
        const double em = expected_event_magnitude(g, d);
        CHECK(expected_annual(pi, g, d, 365) ==
              doctest::Approx(expected_wet_days(pi, 365) * em).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("grid medians track station-level truth on simulated data") {
  // fit a short chain on data from known surfaces; medians of the event
  // mean at the stations must rank like the empirical station means. The
  // linear scenario keeps every station's Weibull shape moderate, so the
  // empirical means are stable reference values.
  Scenario scenario;
  scenario.kind = ScenarioKind::linear;
  scenario.m_stations = 16;
  scenario.t_years = 4;
  scenario.events_per_cell = 134;
  const PointSet stations = station_layout(scenario.m_stations);
  const ObservedData data = generate_replicate(scenario, stations, 72);

  SamplerConfig config;
  config.n_iterations = 800;
  config.burn_in = 266;
  config.thin = 2;
  config.seed = 73;
  config.update_counts_block = false;
  const ChainArchive archive = run_chain(data, config, ModelKind::semiparametric);

  const FunctionalGrid grid =
      forecast_functional_grid(archive, stations, Functional::event_mean, 74);
  std::vector<double> empirical, fitted;
  for (Eigen::Index m = 0; m < stations.rows(); ++m) {
    double sum = 0.0;
    std::size_t n = 0;
    for (Eigen::Index j = 0; j < data.n_years(); ++j) {
      for (double w : data.magnitudes(m, j)) {
        sum += w;
        ++n;
      }
    }
    empirical.push_back(sum / static_cast<double>(n));
    fitted.push_back(grid.median[m]);
  }
  CHECK(raingp::test::spearman_rho(empirical, fitted) > 0.8);
}

TEST_CASE("parallel and serial forecast grids agree bitwise") {
  const ObservedData data = small_data(4, 75);
  SamplerConfig config;
  config.n_iterations = 30;
  config.burn_in = 10;
  config.seed = 76;
  const ChainArchive archive = run_chain(data, config, ModelKind::semiparametric);
  PointSet targets(5, 2);
  targets << 0.0, 0.0, 0.5, -0.5, -0.7, 0.3, 0.9, 0.9, -0.9, -0.9;
  const FunctionalGrid a =
      forecast_functional_grid(archive, targets, Functional::event_mean, 77);
  const FunctionalGrid b = forecast_functional_grid_serial(
      archive, targets, Functional::event_mean, 77);
  CHECK((a.median - b.median).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.q05 - b.q05).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.q95 - b.q95).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("functional names round-trip") {
  for (Functional f :
       {Functional::event_mean, Functional::event_variance,
        Functional::annual_mean, Functional::wet_days,
        Functional::kl_vs_truth}) {
    CHECK(functional_from_name(functional_name(f)) == f);
  }
  CHECK_THROWS_AS(functional_from_name("nope"), std::invalid_argument);
}
