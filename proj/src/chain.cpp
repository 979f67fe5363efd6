// Apache License, Version 2.0, refer to LICENSE.txt

#include "raingp/chain.hpp"

#include <cstring>
#include <sstream>

#include "raingp/errors.hpp"

namespace raingp {

Eigen::Index ChainLayout::block_stride() const {
  if (model == ModelKind::semiparametric) return 6 + p + m + m * t;
  return 2 + 2 * (p + 1) + m * t;
}

std::vector<std::string> ChainLayout::column_names() const {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(row_width()));
  names.emplace_back("iteration");
  const char* blocks[] = {"pi", "gamma", "delta"};
  for (const char* b : blocks) {
    const std::string prefix(b);
    if (model == ModelKind::semiparametric) {
      for (const char* s :
           {".psi", ".tau2", ".sigma2", ".zeta_psi", ".zeta_tau2",
            ".zeta_sigma2"}) {
        names.push_back(prefix + s);
      }
      for (Eigen::Index h = 0; h < p; ++h) {
        names.push_back(prefix + ".lambda." + std::to_string(h));
      }
      for (Eigen::Index i = 0; i < m; ++i) {
        names.push_back(prefix + ".mu." + std::to_string(i));
      }
      for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < t; ++j) {
          names.push_back(prefix + ".field." + std::to_string(i) + "." +
                          std::to_string(j));
        }
      }
    } else {
      names.push_back(prefix + ".tau2");
      names.push_back(prefix + ".zeta_tau2");
      for (Eigen::Index h = 0; h <= p; ++h) {
        names.push_back(prefix + ".beta." + std::to_string(h));
      }
      for (Eigen::Index h = 0; h <= p; ++h) {
        names.push_back(prefix + ".zeta_beta." + std::to_string(h));
      }
      for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < t; ++j) {
          names.push_back(prefix + ".field." + std::to_string(i) + "." +
                          std::to_string(j));
        }
      }
    }
  }
  return names;
}

namespace {

void serialize_gp_block(const GpBlockState& b, double* out) {
  const Eigen::Index m = b.mu.size();
  const Eigen::Index t = b.field.cols();
  const Eigen::Index p = b.lambdas.size();
  Eigen::Index k = 0;
  out[k++] = b.psi;
  out[k++] = b.tau2;
  out[k++] = b.sigma2;
  out[k++] = b.zeta_psi;
  out[k++] = b.zeta_tau2;
  out[k++] = b.zeta_sigma2;
  for (Eigen::Index h = 0; h < p; ++h) out[k++] = b.lambdas[h];
  for (Eigen::Index i = 0; i < m; ++i) out[k++] = b.mu[i];
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < t; ++j) out[k++] = b.field(i, j);
  }
}

void deserialize_gp_block(const double* in, GpBlockState& b) {
  const Eigen::Index m = b.mu.size();
  const Eigen::Index t = b.field.cols();
  const Eigen::Index p = b.lambdas.size();
  Eigen::Index k = 0;
  b.psi = in[k++];
  b.tau2 = in[k++];
  b.sigma2 = in[k++];
  b.zeta_psi = in[k++];
  b.zeta_tau2 = in[k++];
  b.zeta_sigma2 = in[k++];
  for (Eigen::Index h = 0; h < p; ++h) b.lambdas[h] = in[k++];
  for (Eigen::Index i = 0; i < m; ++i) b.mu[i] = in[k++];
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < t; ++j) b.field(i, j) = in[k++];
  }
  b.corr.valid = false;
}

struct LinearBlockRefs {
  const Eigen::VectorXd* beta;
  const Eigen::VectorXd* zeta_beta;
  const double* tau2;
  const double* zeta_tau2;
  const Eigen::MatrixXd* field;
};

void serialize_linear_block(const LinearBlockRefs& b, double* out) {
  const Eigen::Index q = b.beta->size();
  const Eigen::Index m = b.field->rows();
  const Eigen::Index t = b.field->cols();
  Eigen::Index k = 0;
  out[k++] = *b.tau2;
  out[k++] = *b.zeta_tau2;
  for (Eigen::Index h = 0; h < q; ++h) out[k++] = (*b.beta)[h];
  for (Eigen::Index h = 0; h < q; ++h) out[k++] = (*b.zeta_beta)[h];
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < t; ++j) out[k++] = (*b.field)(i, j);
  }
}

struct LinearBlockMut {
  Eigen::VectorXd* beta;
  Eigen::VectorXd* zeta_beta;
  double* tau2;
  double* zeta_tau2;
  Eigen::MatrixXd* field;
};

void deserialize_linear_block(const double* in, LinearBlockMut& b) {
  const Eigen::Index q = b.beta->size();
  const Eigen::Index m = b.field->rows();
  const Eigen::Index t = b.field->cols();
  Eigen::Index k = 0;
  *b.tau2 = in[k++];
  *b.zeta_tau2 = in[k++];
  for (Eigen::Index h = 0; h < q; ++h) (*b.beta)[h] = in[k++];
  for (Eigen::Index h = 0; h < q; ++h) (*b.zeta_beta)[h] = in[k++];
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < t; ++j) (*b.field)(i, j) = in[k++];
  }
}

std::vector<double> serialize_state_row(const ChainState& s,
                                        const ChainLayout& layout) {
  std::vector<double> row(static_cast<std::size_t>(layout.row_width()));
  row[0] = static_cast<double>(s.iteration);
  serialize_gp_block(s.pi_block, row.data() + layout.block_offset(0));
  serialize_gp_block(s.gamma_block, row.data() + layout.block_offset(1));
  serialize_gp_block(s.delta_block, row.data() + layout.block_offset(2));
  return row;
}

std::vector<double> serialize_state_row(const LinearModelState& s,
                                        const ChainLayout& layout) {
  std::vector<double> row(static_cast<std::size_t>(layout.row_width()));
  row[0] = static_cast<double>(s.iteration);
  LinearBlockRefs pi{&s.beta_pi, &s.zeta_beta_pi, &s.tau2_pi, &s.zeta_tau2_pi,
                     &s.field_pi};
  LinearBlockRefs ga{&s.beta_gamma, &s.zeta_beta_gamma, &s.tau2_gamma,
                     &s.zeta_tau2_gamma, &s.field_gamma};
  LinearBlockRefs de{&s.beta_delta, &s.zeta_beta_delta, &s.tau2_delta,
                     &s.zeta_tau2_delta, &s.field_delta};
  serialize_linear_block(pi, row.data() + layout.block_offset(0));
  serialize_linear_block(ga, row.data() + layout.block_offset(1));
  serialize_linear_block(de, row.data() + layout.block_offset(2));
  return row;
}

void hash_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
}

void hash_double(std::uint64_t& h, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  hash_bytes(h, &bits, sizeof(bits));
}

void hash_int(std::uint64_t& h, long long v) { hash_bytes(h, &v, sizeof(v)); }

}  // namespace

std::uint64_t config_hash(const ObservedData& data,
                          const SamplerConfig& config, ModelKind kind) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  hash_int(h, static_cast<long long>(kind));
  hash_int(h, config.burn_in);
  hash_int(h, config.thin);
  hash_int(h, static_cast<long long>(config.seed));
  hash_int(h, config.max_shrinks);
  hash_int(h, config.update_counts_block ? 1 : 0);
  hash_int(h, static_cast<long long>(config.step2));
  hash_double(h, config.prior.variance_prior.v);
  hash_double(h, config.prior.variance_prior.k);
  hash_double(h, config.prior.variance_prior.scale);
  hash_double(h, config.prior.zeta_psi_shape);
  hash_double(h, config.prior.zeta_psi_rate);
  hash_double(h, config.prior.lambda_log_mean);
  hash_double(h, config.prior.lambda_log_var);
  hash_int(h, data.n_trials);
  hash_int(h, data.n_stations());
  hash_int(h, data.n_years());
  hash_int(h, data.n_dims());
  for (Eigen::Index i = 0; i < data.points.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.points.cols(); ++j) {
      hash_double(h, data.points(i, j));
    }
  }
  for (Eigen::Index i = 0; i < data.n_stations(); ++i) {
    for (Eigen::Index j = 0; j < data.n_years(); ++j) {
      hash_int(h, data.counts(i, j));
      hash_int(h, data.observed(i, j) ? 1 : 0);
      for (double w : data.magnitudes(i, j)) hash_double(h, w);
    }
  }
  return h;
}

GpDraw gp_draw(const ChainArchive& archive, std::size_t row, int block) {
  const ChainLayout layout = archive.layout();
  if (layout.model != ModelKind::semiparametric) {
    throw std::invalid_argument("gp_draw: archive is not semiparametric");
  }
  const double* r = archive.row(row) + layout.block_offset(block);
  GpDraw d;
  d.psi = r[0];
  d.tau2 = r[1];
  d.sigma2 = r[2];
  d.lambdas = Eigen::Map<const Eigen::VectorXd>(r + 6, layout.p);
  d.mu = Eigen::Map<const Eigen::VectorXd>(r + 6 + layout.p, layout.m);
  return d;
}

LinearDraw linear_draw(const ChainArchive& archive, std::size_t row,
                       int block) {
  const ChainLayout layout = archive.layout();
  if (layout.model != ModelKind::parametric) {
    throw std::invalid_argument("linear_draw: archive is not parametric");
  }
  const double* r = archive.row(row) + layout.block_offset(block);
  LinearDraw d;
  d.tau2 = r[0];
  d.beta = Eigen::Map<const Eigen::VectorXd>(r + 2, layout.p + 1);
  return d;
}

namespace {

template <class State, class Scan, class Serialize>
void run_scans(State& state, const SamplerConfig& config,
               ChainArchive& archive, long from_iteration, long to_iteration,
               Scan&& scan, Serialize&& serialize,
               const ProgressCallback& progress, FitSummary* summary) {
  const ChainLayout layout = archive.layout();
  for (long k = from_iteration + 1; k <= to_iteration; ++k) {
    const ScanStats stats = scan(state);
    if (summary != nullptr) {
      summary->ess_calls += stats.ess_calls;
      summary->total_shrinks += stats.total_shrinks;
      summary->max_shrinks_single =
          std::max(summary->max_shrinks_single, stats.max_shrinks_single);
      summary->equal_outcomes += stats.equal_outcomes;
    }
    if (k > config.burn_in && (k - config.burn_in) % config.thin == 0) {
      const std::vector<double> row = serialize(state, layout);
      archive.rows.insert(archive.rows.end(), row.begin(), row.end());
    }
    if (progress) progress({k, to_iteration, stats});
  }
  archive.final_state = serialize(state, layout);
  std::ostringstream os;
  os << state.rng;
  archive.rng_state = os.str();
  archive.completed_iterations = to_iteration;
}

}  // namespace

ChainArchive run_chain(const ObservedData& data, const SamplerConfig& config,
                       ModelKind kind, const ProgressCallback& progress,
                       FitSummary* summary) {
  config.validate();
  ChainArchive archive;
  archive.model = kind;
  archive.seed = config.seed;
  archive.n_iterations = config.n_iterations;
  archive.burn_in = config.burn_in;
  archive.thin = config.thin;
  archive.n_trials = data.n_trials;
  archive.prior = config.prior;
  archive.update_counts_block = config.update_counts_block;
  archive.transform = data.transform;
  archive.points = data.points;
  archive.years = data.years;
  archive.config_hash = config_hash(data, config, kind);
  archive.rows.reserve(
      static_cast<std::size_t>(archive.layout().row_width()) *
      static_cast<std::size_t>(
          std::max<long>(0, (config.n_iterations - config.burn_in) /
                                config.thin)));

  if (kind == ModelKind::semiparametric) {
    ChainState state = ChainState::init(data, config.seed);
    run_scans(
        state, config, archive, 0, config.n_iterations,
        [&](ChainState& s) { return full_scan(s, data, config); },
        [](const ChainState& s, const ChainLayout& l) {
          return serialize_state_row(s, l);
        },
        progress, summary);
  } else {
    LinearModelState state = LinearModelState::init(data, config.seed);
    run_scans(
        state, config, archive, 0, config.n_iterations,
        [&](LinearModelState& s) {
          return full_scan_parametric(s, data, config);
        },
        [](const LinearModelState& s, const ChainLayout& l) {
          return serialize_state_row(s, l);
        },
        progress, summary);
  }
  return archive;
}

SamplerConfig archive_config(const ChainArchive& archive) {
  SamplerConfig config;
  config.n_iterations = archive.n_iterations;
  config.burn_in = archive.burn_in;
  config.thin = archive.thin;
  config.seed = archive.seed;
  config.prior = archive.prior;
  config.update_counts_block = archive.update_counts_block;
  return config;
}

void extend_chain(ChainArchive& archive, const ObservedData& data,
                  long new_total_iterations, const ProgressCallback& progress,
                  FitSummary* summary) {
  const SamplerConfig config = archive_config(archive);
  if (config_hash(data, config, archive.model) != archive.config_hash) {
    throw DataError("resume rejected: config hash mismatch");
  }
  if (new_total_iterations <= archive.completed_iterations) {
    throw DataError("resume rejected: run already has that many iterations");
  }
  if (archive.final_state.empty() || archive.rng_state.empty()) {
    throw DataError("resume rejected: archive has no final state");
  }
  const ChainLayout layout = archive.layout();

  if (archive.model == ModelKind::semiparametric) {
    ChainState state = ChainState::init(data, config.seed);
    state.iteration = archive.completed_iterations;
    const double* r = archive.final_state.data();
    deserialize_gp_block(r + layout.block_offset(0), state.pi_block);
    deserialize_gp_block(r + layout.block_offset(1), state.gamma_block);
    deserialize_gp_block(r + layout.block_offset(2), state.delta_block);
    std::istringstream is(archive.rng_state);
    is >> state.rng;
    run_scans(
        state, config, archive, archive.completed_iterations,
        new_total_iterations,
        [&](ChainState& s) { return full_scan(s, data, config); },
        [](const ChainState& s, const ChainLayout& l) {
          return serialize_state_row(s, l);
        },
        progress, summary);
  } else {
    LinearModelState state = LinearModelState::init(data, config.seed);
    state.iteration = archive.completed_iterations;
    const double* r = archive.final_state.data();
    LinearBlockMut pi{&state.beta_pi, &state.zeta_beta_pi, &state.tau2_pi,
                      &state.zeta_tau2_pi, &state.field_pi};
    LinearBlockMut ga{&state.beta_gamma, &state.zeta_beta_gamma,
                      &state.tau2_gamma, &state.zeta_tau2_gamma,
                      &state.field_gamma};
    LinearBlockMut de{&state.beta_delta, &state.zeta_beta_delta,
                      &state.tau2_delta, &state.zeta_tau2_delta,
                      &state.field_delta};
    deserialize_linear_block(r + layout.block_offset(0), pi);
    deserialize_linear_block(r + layout.block_offset(1), ga);
    deserialize_linear_block(r + layout.block_offset(2), de);
    std::istringstream is(archive.rng_state);
    is >> state.rng;
    run_scans(
        state, config, archive, archive.completed_iterations,
        new_total_iterations,
        [&](LinearModelState& s) {
          return full_scan_parametric(s, data, config);
        },
        [](const LinearModelState& s, const ChainLayout& l) {
          return serialize_state_row(s, l);
        },
        progress, summary);
  }
  archive.n_iterations = new_total_iterations;
}

}  // namespace raingp
