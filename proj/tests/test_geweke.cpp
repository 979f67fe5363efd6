// Apache License, Version 2.0, refer to LICENSE.txt
//
// Fixed-seed smoke runs of the joint-distribution validator; the full
// 1e5-draw version (including the mutant that must fail) lives in the
// acceptance suite.

#include "raingp/geweke.hpp"

#include <doctest.h>

using namespace raingp;

TEST_CASE("geweke smoke: exact conditionals stay in bounds") {
  GewekeConfig config;
  config.n_draws = 8000;
  config.seed = 1234;
  config.z_threshold = 5.0;  // loose bound for the short smoke run
  const GewekeReport report = run_geweke(config);
  CHECK(report.functions.size() >= 12);
  CHECK(report.max_abs_z < 5.0);
}

TEST_CASE("geweke smoke: printed step-2 mutant is detected") {
  GewekeConfig config;
  config.n_draws = 8000;
  config.seed = 1234;
  config.step2 = Step2Conditionals::printed;
  const GewekeReport report = run_geweke(config);
  CHECK(report.max_abs_z > 4.0);
  CHECK(!report.passed);
}

TEST_CASE("geweke smoke: parametric model") {
  GewekeConfig config;
  config.n_draws = 8000;
  config.seed = 77;
  config.model = ModelKind::parametric;
  config.z_threshold = 5.0;
  const GewekeReport report = run_geweke(config);
  CHECK(report.functions.size() >= 12);
  CHECK(report.max_abs_z < 5.0);
}

TEST_CASE("geweke smoke: intercept-only parametric design") {
  GewekeConfig config;
  config.n_draws = 8000;
  config.seed = 78;
  config.model = ModelKind::parametric;
  config.p_dims = 0;  // exchangeable-normal field prior
  config.z_threshold = 5.0;
  const GewekeReport report = run_geweke(config);
  CHECK(report.max_abs_z < 5.0);
}

TEST_CASE("regenerate_data respects the current fields") {
  ObservedData data;
  PointSet pts(2, 2);
  pts << 0.0, 0.0, 0.5, 0.5;
  data.init(pts, {2001}, 50);
  data.finalize();
  Rng rng(79);
  Eigen::MatrixXd hi = Eigen::MatrixXd::Constant(2, 1, 700.0);
  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2, 1);
  regenerate_data(data, hi, zero, zero, rng);
  CHECK(data.counts(0, 0) == 50);
  CHECK(data.counts(1, 0) == 50);
  CHECK(data.magnitudes(0, 0).size() == 50u);
  Eigen::MatrixXd lo = Eigen::MatrixXd::Constant(2, 1, -700.0);
  regenerate_data(data, lo, zero, zero, rng);
  CHECK(data.counts(0, 0) == 0);
  CHECK(data.magnitudes(0, 0).empty());
}
