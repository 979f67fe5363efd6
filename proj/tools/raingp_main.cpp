// Apache License, Version 2.0, refer to LICENSE.txt
//
// raingp command-line driver.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure,
// 4 diagnostic failure.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <omp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "raingp/chain.hpp"
#include "raingp/errors.hpp"
#include "raingp/forecast.hpp"
#include "raingp/geweke.hpp"
#include "raingp/io.hpp"
#include "raingp/simstudy.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kConfigSchemaVersion = 1;

struct CliOptions {
  raingp::SamplerConfig sampler;
  raingp::Scenario scenario;
  double wet_threshold_mm = 0.1;
  int n_trials = 365;
  int year_from = 0;
  int year_to = 0;
  int threads = 0;
};

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void reject_unknown_keys(const json& j, const std::vector<std::string>& known,
                         const std::string& where) {
  for (const auto& item : j.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      throw raingp::DataError("config: unknown key '" + where + item.key() +
                              "'");
    }
  }
}

// Configuration file schema v1; CLI flags override file values.
void apply_config_file(const std::string& path, CliOptions& opt) {
  std::ifstream f(path);
  if (!f) throw raingp::DataError("cannot open config " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw raingp::DataError("config parse error: " + std::string(e.what()));
  }
  reject_unknown_keys(
      j, {"schema_version", "sampler", "prior", "ingestion", "study",
          "threads"},
      "");
  if (j.contains("schema_version") &&
      j["schema_version"].get<int>() != kConfigSchemaVersion) {
    throw raingp::DataError("config: unsupported schema_version");
  }
  if (j.contains("sampler")) {
    const json& s = j["sampler"];
    reject_unknown_keys(
        s, {"iterations", "burn_in", "thin", "seed", "max_shrinks"},
        "sampler.");
    if (s.contains("iterations")) opt.sampler.n_iterations = s["iterations"].get<long>();
    if (s.contains("burn_in")) opt.sampler.burn_in = s["burn_in"].get<long>();
    if (s.contains("thin")) opt.sampler.thin = s["thin"].get<long>();
    if (s.contains("seed")) opt.sampler.seed = s["seed"].get<std::uint64_t>();
    if (s.contains("max_shrinks")) opt.sampler.max_shrinks = s["max_shrinks"].get<int>();
  }
  if (j.contains("prior")) {
    const json& p = j["prior"];
    reject_unknown_keys(p,
                        {"variance_v", "variance_k", "variance_scale",
                         "zeta_psi_shape", "zeta_psi_rate", "lambda_log_mean",
                         "lambda_log_var"},
                        "prior.");
    raingp::PriorConfig& prior = opt.sampler.prior;
    if (p.contains("variance_v")) prior.variance_prior.v = p["variance_v"].get<double>();
    if (p.contains("variance_k")) prior.variance_prior.k = p["variance_k"].get<double>();
    if (p.contains("variance_scale")) prior.variance_prior.scale = p["variance_scale"].get<double>();
    if (p.contains("zeta_psi_shape")) prior.zeta_psi_shape = p["zeta_psi_shape"].get<double>();
    if (p.contains("zeta_psi_rate")) prior.zeta_psi_rate = p["zeta_psi_rate"].get<double>();
    if (p.contains("lambda_log_mean")) prior.lambda_log_mean = p["lambda_log_mean"].get<double>();
    if (p.contains("lambda_log_var")) prior.lambda_log_var = p["lambda_log_var"].get<double>();
  }
  if (j.contains("ingestion")) {
    const json& g = j["ingestion"];
    reject_unknown_keys(
        g, {"wet_threshold_mm", "n_trials", "year_from", "year_to"},
        "ingestion.");
    if (g.contains("wet_threshold_mm")) opt.wet_threshold_mm = g["wet_threshold_mm"].get<double>();
    if (g.contains("n_trials")) opt.n_trials = g["n_trials"].get<int>();
    if (g.contains("year_from")) opt.year_from = g["year_from"].get<int>();
    if (g.contains("year_to")) opt.year_to = g["year_to"].get<int>();
  }
  if (j.contains("study")) {
    const json& s = j["study"];
    reject_unknown_keys(s,
                        {"scenario", "stations", "years", "events_per_cell",
                         "replicates", "grid_resolution"},
                        "study.");
    if (s.contains("scenario")) opt.scenario.kind = raingp::scenario_from_name(s["scenario"].get<std::string>());
    if (s.contains("stations")) opt.scenario.m_stations = s["stations"].get<int>();
    if (s.contains("years")) opt.scenario.t_years = s["years"].get<int>();
    if (s.contains("events_per_cell")) opt.scenario.events_per_cell = s["events_per_cell"].get<int>();
    if (s.contains("replicates")) opt.scenario.replicates = s["replicates"].get<int>();
    if (s.contains("grid_resolution")) opt.scenario.grid_resolution = s["grid_resolution"].get<int>();
  }
  if (j.contains("threads")) opt.threads = j["threads"].get<int>();
}

raingp::ObservedData load_data_dir(const std::string& dir,
                                   const CliOptions& opt,
                                   raingp::LoadReport* report) {
  const fs::path base(dir);
  return raingp::load_dataset((base / "stations.csv").string(),
                              (base / "daily.csv").string(),
                              opt.wet_threshold_mm, opt.year_from, opt.year_to,
                              opt.n_trials, report);
}

int cmd_simulate(const CliOptions& opt, std::uint64_t seed,
                 const std::string& out_dir) {
  raingp::Scenario scenario = opt.scenario;
  scenario.validate();
  fs::create_directories(out_dir);
  const raingp::PointSet stations =
      raingp::station_layout(scenario.m_stations);
  const raingp::ObservedData data =
      raingp::generate_replicate(scenario, stations, seed);
  const fs::path base(out_dir);
  raingp::export_observed(data, (base / "stations.csv").string(),
                          (base / "daily.csv").string());
  const raingp::PointSet grid =
      raingp::square_grid(scenario.grid_resolution);
  Eigen::VectorXd gamma_true(grid.rows()), delta_true(grid.rows());
  for (Eigen::Index g = 0; g < grid.rows(); ++g) {
    gamma_true[g] = raingp::true_gamma(grid.row(g).transpose(), scenario.kind);
    delta_true[g] = raingp::true_delta(grid.row(g).transpose(), scenario.kind);
  }
  raingp::export_truth_grid(grid, gamma_true, delta_true,
                            (base / "truth_grid.csv").string());
  std::cerr << "wrote " << out_dir << "/{stations.csv,daily.csv,truth_grid.csv}"
            << " (" << scenario.m_stations << " stations, "
            << scenario.t_years << " years)\n";
  return 0;
}

int cmd_fit(const CliOptions& opt, const std::string& data_dir,
            const std::string& model_name, const std::string& out_path,
            const std::string& resume_path, bool magnitudes_only) {
  raingp::LoadReport report;
  const raingp::ObservedData data = load_data_dir(data_dir, opt, &report);
  for (const std::string& w : report.warnings) std::cerr << "warning: " << w << "\n";

  raingp::SamplerConfig config = opt.sampler;
  config.update_counts_block = !magnitudes_only;
  config.validate();
  const raingp::ModelKind kind = raingp::model_kind_from_name(model_name);

  raingp::FitSummary summary;
  const long report_every = std::max<long>(1, config.n_iterations / 10);
  const raingp::ProgressCallback progress =
      [&](const raingp::ProgressInfo& info) {
        if (info.iteration % report_every == 0 ||
            info.iteration == info.total) {
          std::cerr << "iteration " << info.iteration << "/" << info.total
                    << "  ll_counts=" << info.scan.ll_counts
                    << "  ll_magnitudes=" << info.scan.ll_magnitudes
                    << "  shrinks=" << info.scan.total_shrinks << "\n";
        }
      };

  raingp::ChainArchive archive;
  if (!resume_path.empty()) {
    archive = raingp::read_chain(resume_path);
    if (kind != archive.model ||
        raingp::config_hash(data, config, kind) != archive.config_hash) {
      throw raingp::DataError(
          "resume rejected: requested configuration does not match " +
          resume_path);
    }
    raingp::extend_chain(archive, data, config.n_iterations, progress,
                         &summary);
  } else {
    archive = raingp::run_chain(data, config, kind, progress, &summary);
  }
  raingp::write_chain(archive, out_path);

  std::cerr << "stored " << archive.n_stored() << " draws to " << out_path
            << "\n";
  std::cerr << "slice updates: " << summary.ess_calls << " calls, "
            << summary.total_shrinks << " shrinks total, max "
            << summary.max_shrinks_single << " in one update\n";
  std::cerr << "rejection-free check: "
            << (summary.equal_outcomes == 0
                    ? "passed (every update moved)"
                    : std::to_string(summary.equal_outcomes) +
                          " stuck updates")
            << "\n";
  return 0;
}

int cmd_forecast(const std::string& chain_path, int grid_res,
                 const std::string& targets_csv,
                 const std::string& functional_name, std::uint64_t seed,
                 const std::string& truth_csv, const std::string& out_path) {
  const raingp::ChainArchive chain = raingp::read_chain(chain_path);
  const raingp::Functional functional =
      raingp::functional_from_name(functional_name);

  raingp::PointSet targets;
  raingp::TruthGrid truth;
  bool have_truth = false;
  if (!truth_csv.empty()) {
    const raingp::TruthTable table = raingp::read_truth_grid(truth_csv);
    truth = table.truth;
    have_truth = true;
    if (targets_csv.empty() && grid_res == 0) targets = table.points;
  }
  if (!targets_csv.empty()) {
    targets = raingp::read_targets_csv(targets_csv);
  } else if (grid_res > 0) {
    if (chain.points.cols() != 2) {
      throw raingp::DataError(
          "--grid-res needs a 2-covariate model; use --targets-csv");
    }
    // grid over the original covariate box
    const raingp::PointSet std_grid = raingp::square_grid(grid_res);
    targets.resize(std_grid.rows(), 2);
    for (Eigen::Index g = 0; g < std_grid.rows(); ++g) {
      targets.row(g) =
          chain.transform.invert(std_grid.row(g).transpose()).transpose();
    }
  } else if (targets.rows() == 0) {
    throw raingp::DataError("need --grid-res, --targets-csv or --truth");
  }
  if (functional == raingp::Functional::kl_vs_truth && !have_truth) {
    throw raingp::DataError("kl-vs-truth requires --truth");
  }
  if (have_truth && truth.gamma_true.size() != targets.rows()) {
    throw raingp::DataError("truth rows do not match targets");
  }

  const raingp::FunctionalGrid grid = raingp::forecast_functional_grid(
      chain, targets, functional, seed, have_truth ? &truth : nullptr);
  raingp::export_grid(grid, out_path);
  if (grid.clamp_total > 0 &&
      grid.clamp_count * 1000 > grid.clamp_total) {  // > 0.1%
    std::cerr << "warning: " << grid.clamp_count << "/" << grid.clamp_total
              << " conditional variances clamped to zero\n";
  }
  std::cerr << "wrote " << out_path << " (" << targets.rows() << " targets, "
            << chain.n_stored() << " draws)\n";
  return 0;
}

int cmd_study(const CliOptions& opt, std::uint64_t seed,
              const std::string& out_dir) {
  raingp::Scenario scenario = opt.scenario;
  scenario.validate();
  fs::create_directories(out_dir);
  const raingp::StudyResult result =
      raingp::run_study(scenario, opt.sampler, seed);

  const fs::path base(out_dir);
  {
    std::ofstream f(base / "kl_summary.csv");
    f << "scenario,model,M,pixel_x,pixel_y,mean_of_medians,log10_mean_of_medians\n";
    for (const raingp::KlSummaryRow& row : result.rows) {
      f << row.scenario << ',' << row.model << ',' << row.m_stations << ','
        << fmt17(row.pixel_x) << ',' << fmt17(row.pixel_y) << ','
        << fmt17(row.mean_of_medians) << ','
        << fmt17(row.log10_mean_of_medians) << "\n";
    }
  }
  {
    std::ofstream f(base / "aggregate.csv");
    f << "scenario,model,M,grid_mean_of_medians\n";
    f << raingp::scenario_name(scenario.kind) << ",semiparametric,"
      << scenario.m_stations << ','
      << fmt17(result.grid_mean_semiparametric) << "\n";
    f << raingp::scenario_name(scenario.kind) << ",parametric,"
      << scenario.m_stations << ',' << fmt17(result.grid_mean_parametric)
      << "\n";
  }
  std::cout << "grid-averaged mean-of-median KL\n";
  std::cout << "  semiparametric: " << fmt17(result.grid_mean_semiparametric)
            << "\n";
  std::cout << "  parametric:     " << fmt17(result.grid_mean_parametric)
            << "\n";
  const bool semi_better =
      result.grid_mean_semiparametric < result.grid_mean_parametric;
  std::cout << "  ordering: " << (semi_better ? "semiparametric < parametric"
                                              : "parametric <= semiparametric")
            << "\n";
  std::cerr << "wrote " << out_dir << "/{kl_summary.csv,aggregate.csv}\n";
  return 0;
}

int cmd_diagnose(const CliOptions& opt, const std::string& test,
                 const std::string& model_name, long draws,
                 std::uint64_t seed, const std::string& mutation) {
  if (test != "geweke") throw raingp::DataError("unknown test: " + test);
  raingp::GewekeConfig config;
  config.n_draws = draws;
  config.seed = seed;
  config.prior = opt.sampler.prior;
  config.model = raingp::model_kind_from_name(model_name);
  if (mutation == "printed-step2") {
    config.step2 = raingp::Step2Conditionals::printed;
  } else if (!mutation.empty()) {
    throw raingp::DataError("unknown mutation: " + mutation);
  }

  const raingp::GewekeReport report = raingp::run_geweke(config);
  std::printf("%-24s %12s %12s %8s\n", "function", "marginal", "successive",
              "z");
  for (const raingp::GewekeFunction& f : report.functions) {
    std::printf("%-24s %12.5f %12.5f %8.2f\n", f.name.c_str(),
                f.mean_marginal, f.mean_successive, f.z);
  }
  std::printf("functions: %zu, max |z| = %.2f, threshold %.1f: %s\n",
              report.functions.size(), report.max_abs_z, config.z_threshold,
              report.passed ? "PASS" : "FAIL");
  return report.passed ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "raingp: Bayesian spatial Binomial-Weibull rainfall modeling with "
      "latent Gaussian processes"};
  app.require_subcommand(1);

  CliOptions opt;
  std::string config_path;
  app.add_option("--config", config_path,
                 "JSON configuration file (flags override file values)");
  app.add_option("--threads", opt.threads,
                 "worker threads (0 = all cores); results do not depend on it");

  // shared sampler flags
  const auto add_sampler_flags = [&](CLI::App* cmd) {
    cmd->add_option("--iters", opt.sampler.n_iterations, "MCMC iterations");
    cmd->add_option("--burnin", opt.sampler.burn_in, "burn-in iterations");
    cmd->add_option("--thin", opt.sampler.thin, "keep every thin-th draw");
    cmd->add_option("--max-shrinks", opt.sampler.max_shrinks,
                    "slice shrink budget per update");
  };
  const auto add_ingestion_flags = [&](CLI::App* cmd) {
    cmd->add_option("--wet-threshold", opt.wet_threshold_mm,
                    "wet-day threshold in mm (exclusive)");
    cmd->add_option("--n-trials", opt.n_trials, "days per year in the binomial layer");
    cmd->add_option("--year-from", opt.year_from, "first year (0 = from data)");
    cmd->add_option("--year-to", opt.year_to, "last year (0 = from data)");
  };
  const auto add_scenario_flags = [&](CLI::App* cmd) {
    cmd->add_option_function<std::string>(
        "--scenario",
        [&](const std::string& s) {
          opt.scenario.kind = raingp::scenario_from_name(s);
        },
        "scenario: nonlinear | linear");
    cmd->add_option("--stations", opt.scenario.m_stations, "station count");
    cmd->add_option("--years", opt.scenario.t_years, "years per station");
    cmd->add_option("--events", opt.scenario.events_per_cell,
                    "events per station-year");
    cmd->add_option("--grid-res", opt.scenario.grid_resolution,
                    "grid resolution per axis");
  };

  // simulate
  std::uint64_t sim_seed = 1;
  std::string sim_out = "simdata";
  CLI::App* simulate =
      app.add_subcommand("simulate", "write a synthetic dataset and true-parameter grid");
  add_scenario_flags(simulate);
  simulate->add_option("--seed", sim_seed, "generator seed");
  simulate->add_option("--out", sim_out, "output directory");

  // fit
  std::string fit_data, fit_model = "semiparametric", fit_out = "chain.csv";
  std::string fit_resume;
  bool fit_magnitudes_only = false;
  CLI::App* fit = app.add_subcommand("fit", "run the MCMC sampler on a dataset");
  fit->add_option("--data", fit_data,
                  "dataset directory containing stations.csv and daily.csv")
      ->required();
  fit->add_option("--model", fit_model, "semiparametric | parametric");
  fit->add_option("--seed", opt.sampler.seed, "chain seed");
  fit->add_option("--out", fit_out, "chain archive path");
  fit->add_option("--resume", fit_resume,
                  "existing archive to continue (config hash must match)");
  fit->add_flag("--magnitudes-only", fit_magnitudes_only,
                "hold the binomial block fixed (counts as constants)");
  add_sampler_flags(fit);
  add_ingestion_flags(fit);

  // forecast
  std::string fc_chain, fc_targets, fc_truth, fc_functional = "event-mean";
  std::string fc_out = "grid.csv";
  int fc_grid_res = 0;
  std::uint64_t fc_seed = 1;
  CLI::App* forecast =
      app.add_subcommand("forecast", "posterior functional summaries at targets");
  forecast->add_option("--chain", fc_chain, "chain archive")->required();
  forecast->add_option("--grid-res", fc_grid_res,
                       "square grid resolution over the covariate box");
  forecast->add_option("--targets-csv", fc_targets,
                       "CSV of target points in original units");
  forecast->add_option("--functional", fc_functional,
                       "event-mean | event-variance | annual-mean | wet-days | kl-vs-truth");
  forecast->add_option("--truth", fc_truth,
                       "truth grid CSV (required for kl-vs-truth)");
  forecast->add_option("--seed", fc_seed, "forecast sampling seed");
  forecast->add_option("--out", fc_out, "output CSV");

  // study
  std::uint64_t study_seed = 1;
  std::string study_out = "study";
  CLI::App* study = app.add_subcommand(
      "study", "simulation study: semiparametric vs parametric KL maps");
  add_scenario_flags(study);
  study->add_option("--replicates", opt.scenario.replicates, "replicates");
  study->add_option("--seed", study_seed, "master seed");
  study->add_option("--out", study_out, "output directory");
  add_sampler_flags(study);

  // diagnose
  std::string diag_test = "geweke", diag_model = "semiparametric", diag_mutation;
  long diag_draws = 100000;
  std::uint64_t diag_seed = 0x9e3779b9;
  CLI::App* diagnose =
      app.add_subcommand("diagnose", "sampler validation diagnostics");
  diagnose->add_option("--test", diag_test, "diagnostic name (geweke)");
  diagnose->add_option("--model", diag_model, "semiparametric | parametric");
  diagnose->add_option("--draws", diag_draws, "draws per simulator");
  diagnose->add_option("--seed", diag_seed, "diagnostic seed");
  diagnose->add_option("--mutation", diag_mutation,
                       "deliberately corrupt an update (printed-step2)");

  try {
    app.parse(argc, argv);
    if (!config_path.empty()) {
      apply_config_file(config_path, opt);
      // flags win over the file: re-parse on top of the file values
      app.clear();
      app.parse(argc, argv);
    }
    if (opt.threads > 0) omp_set_num_threads(opt.threads);

    if (simulate->parsed()) return cmd_simulate(opt, sim_seed, sim_out);
    if (fit->parsed()) {
      return cmd_fit(opt, fit_data, fit_model, fit_out, fit_resume,
                     fit_magnitudes_only);
    }
    if (forecast->parsed()) {
      return cmd_forecast(fc_chain, fc_grid_res, fc_targets, fc_functional,
                          fc_seed, fc_truth, fc_out);
    }
    if (study->parsed()) return cmd_study(opt, study_seed, study_out);
    if (diagnose->parsed()) {
      return cmd_diagnose(opt, diag_test, diag_model, diag_draws, diag_seed,
                          diag_mutation);
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const raingp::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const raingp::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
