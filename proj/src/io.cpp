// Apache License, Version 2.0, refer to LICENSE.txt

#include "raingp/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "raingp/errors.hpp"

namespace raingp {

namespace {

using nlohmann::json;

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string strip(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_double(const std::string& s, const std::string& file,
                    std::size_t line_no, const char* what) {
  const std::string t = strip(s);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size()) {
    throw DataError(file + ":" + std::to_string(line_no) + ": bad " + what +
                    " '" + s + "'");
  }
  return v;
}

// Parses YYYY-MM-DD, validating the calendar (leap years included).
int parse_date_year(const std::string& s, const std::string& file,
                    std::size_t line_no) {
  const std::string t = strip(s);
  const auto fail = [&]() -> int {
    throw DataError(file + ":" + std::to_string(line_no) +
                    ": malformed date '" + s + "'");
  };
  if (t.size() != 10 || t[4] != '-' || t[7] != '-') fail();
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
    if (!std::isdigit(static_cast<unsigned char>(t[i]))) fail();
  }
  const int y = std::stoi(t.substr(0, 4));
  const int mo = std::stoi(t.substr(5, 2));
  const int d = std::stoi(t.substr(8, 2));
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  const int days_in_month[] = {31, leap ? 29 : 28, 31, 30, 31, 30,
                               31, 31,            30, 31, 30, 31};
  if (y < 1 || mo < 1 || mo > 12 || d < 1 || d > days_in_month[mo - 1]) fail();
  return y;
}

struct DayRecord {
  int year;
  int month_day_key;  // for in-year ordering and duplicate detection
  double rain;
};

}  // namespace

ObservedData load_dataset(const std::string& stations_csv,
                          const std::string& daily_csv,
                          double wet_threshold_mm, int year_from, int year_to,
                          int n_trials, LoadReport* report) {
  if (wet_threshold_mm < 0.0) {
    throw DataError("wet threshold must be non-negative");
  }
  std::ifstream stations_file(stations_csv);
  if (!stations_file) throw DataError("cannot open " + stations_csv);

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(stations_file, line)) {
    throw DataError(stations_csv + ": empty file");
  }
  ++line_no;
  const std::vector<std::string> header = split_csv_line(line);
  if (header.empty() || strip(header[0]) != "id" || header.size() < 2) {
    throw DataError(stations_csv + ":1: header must be id,<covariate>,...");
  }
  const Eigen::Index p = static_cast<Eigen::Index>(header.size()) - 1;

  std::vector<std::string> ids;
  std::vector<std::vector<double>> covs;
  std::map<std::string, Eigen::Index> id_index;
  while (std::getline(stations_file, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (static_cast<Eigen::Index>(fields.size()) != p + 1) {
      throw DataError(stations_csv + ":" + std::to_string(line_no) +
                      ": expected " + std::to_string(p + 1) + " fields");
    }
    const std::string id = strip(fields[0]);
    if (id_index.count(id) != 0) {
      throw DataError(stations_csv + ":" + std::to_string(line_no) +
                      ": duplicate station id '" + id + "'");
    }
    id_index[id] = static_cast<Eigen::Index>(ids.size());
    ids.push_back(id);
    std::vector<double> row;
    for (Eigen::Index h = 0; h < p; ++h) {
      row.push_back(parse_double(fields[static_cast<std::size_t>(h + 1)],
                                 stations_csv, line_no, "covariate"));
    }
    covs.push_back(std::move(row));
  }
  if (ids.empty()) throw DataError(stations_csv + ": no stations");
  const Eigen::Index m = static_cast<Eigen::Index>(ids.size());
  PointSet original(m, p);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index h = 0; h < p; ++h) {
      original(i, h) = covs[static_cast<std::size_t>(i)]
                           [static_cast<std::size_t>(h)];
    }
  }

  // daily records, grouped per station
  std::ifstream daily_file(daily_csv);
  if (!daily_file) throw DataError("cannot open " + daily_csv);
  line_no = 0;
  if (!std::getline(daily_file, line)) {
    throw DataError(daily_csv + ": empty file (need a header)");
  }
  ++line_no;
  {
    const std::vector<std::string> dh = split_csv_line(line);
    if (dh.size() != 3 || strip(dh[0]) != "id" || strip(dh[1]) != "date" ||
        strip(dh[2]) != "rain_mm") {
      throw DataError(daily_csv + ":1: header must be id,date,rain_mm");
    }
  }
  std::vector<std::vector<DayRecord>> records(static_cast<std::size_t>(m));
  int min_year = 0, max_year = 0;
  bool any = false;
  while (std::getline(daily_file, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != 3) {
      throw DataError(daily_csv + ":" + std::to_string(line_no) +
                      ": expected 3 fields");
    }
    const std::string id = strip(fields[0]);
    const auto it = id_index.find(id);
    if (it == id_index.end()) {
      throw DataError(daily_csv + ":" + std::to_string(line_no) +
                      ": unknown station id '" + id + "'");
    }
    const int year = parse_date_year(fields[1], daily_csv, line_no);
    const double rain = parse_double(fields[2], daily_csv, line_no, "rain_mm");
    if (rain < 0.0) {
      throw DataError(daily_csv + ":" + std::to_string(line_no) +
                      ": negative rainfall");
    }
    const std::string date = strip(fields[1]);
    const int key = (date[5] - '0') * 10000 + (date[6] - '0') * 1000 +
                    (date[8] - '0') * 10 + (date[9] - '0');
    records[static_cast<std::size_t>(it->second)].push_back(
        {year, key, rain});
    if (!any || year < min_year) min_year = year;
    if (!any || year > max_year) max_year = year;
    any = true;
  }

  if (year_from == 0 && year_to == 0) {
    if (any) {
      year_from = min_year;
      year_to = max_year;
    } else {
      year_from = year_to = 2000;  // empty file: a single all-missing year
    }
  }
  if (year_to < year_from) throw DataError("year range is empty");
  std::vector<int> years;
  for (int y = year_from; y <= year_to; ++y) years.push_back(y);

  ObservedData data;
  data.init(original, years, n_trials);
  data.station_ids = ids;
  data.transform = Standardization::fit(original);
  data.points = data.transform.apply_all(original);

  const Eigen::Index t = data.n_years();
  for (Eigen::Index i = 0; i < m; ++i) {
    auto& recs = records[static_cast<std::size_t>(i)];
    // deterministic regardless of input row order
    std::stable_sort(recs.begin(), recs.end(),
                     [](const DayRecord& a, const DayRecord& b) {
                       return a.year != b.year ? a.year < b.year
                                               : a.month_day_key < b.month_day_key;
                     });
    for (std::size_t k = 1; k < recs.size(); ++k) {
      if (recs[k].year == recs[k - 1].year &&
          recs[k].month_day_key == recs[k - 1].month_day_key) {
        throw DataError(daily_csv + ": duplicate record for station '" +
                        ids[static_cast<std::size_t>(i)] + "' on " +
                        std::to_string(recs[k].year));
      }
    }
    std::vector<int> recorded(static_cast<std::size_t>(t), 0);
    for (const DayRecord& r : recs) {
      if (r.year < year_from || r.year > year_to) continue;
      const Eigen::Index j = r.year - year_from;
      ++recorded[static_cast<std::size_t>(j)];
      if (r.rain > wet_threshold_mm) {
        data.counts(i, j) += 1;
        data.magnitudes(i, j).push_back(r.rain);
      }
    }
    for (Eigen::Index j = 0; j < t; ++j) {
      if (recorded[static_cast<std::size_t>(j)] == 0) {
        data.observed(i, j) = false;
        data.counts(i, j) = 0;
        data.magnitudes(i, j).clear();
        if (report != nullptr) {
          report->warnings.push_back(
              "station '" + ids[static_cast<std::size_t>(i)] + "' year " +
              std::to_string(years[static_cast<std::size_t>(j)]) +
              " has no records; dropped from the likelihood");
        }
      } else if (data.counts(i, j) > n_trials) {
        throw DataError("station '" + ids[static_cast<std::size_t>(i)] +
                        "' year " +
                        std::to_string(years[static_cast<std::size_t>(j)]) +
                        ": more wet days than n_trials");
      }
    }
  }
  data.finalize();
  return data;
}

void export_observed(const ObservedData& data, const std::string& stations_csv,
                     const std::string& daily_csv) {
  std::ofstream sf(stations_csv);
  if (!sf) throw DataError("cannot write " + stations_csv);
  sf << "id";
  for (Eigen::Index h = 0; h < data.n_dims(); ++h) sf << ",c" << h;
  sf << "\n";
  const PointSet original = [&] {
    PointSet orig(data.points.rows(), data.points.cols());
    for (Eigen::Index i = 0; i < data.points.rows(); ++i) {
      orig.row(i) =
          data.transform.invert(data.points.row(i).transpose()).transpose();
    }
    return orig;
  }();
  for (Eigen::Index i = 0; i < data.n_stations(); ++i) {
    sf << (data.station_ids.empty() ? "s" + std::to_string(i)
                                    : data.station_ids[static_cast<std::size_t>(i)]);
    for (Eigen::Index h = 0; h < data.n_dims(); ++h) {
      sf << ',' << fmt17(original(i, h));
    }
    sf << "\n";
  }

  std::ofstream df(daily_csv);
  if (!df) throw DataError("cannot write " + daily_csv);
  df << "id,date,rain_mm\n";
  const int days_in_month[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  for (Eigen::Index i = 0; i < data.n_stations(); ++i) {
    const std::string id =
        data.station_ids.empty() ? "s" + std::to_string(i)
                                 : data.station_ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < data.n_years(); ++j) {
      const auto& mags = data.magnitudes(i, j);
      if (static_cast<int>(mags.size()) > 365) {
        throw DataError("export_observed: more than 365 events in a year");
      }
      int month = 1, day = 1;
      for (double w : mags) {
        char date[32];
        std::snprintf(date, sizeof(date), "%04d-%02d-%02d",
                      data.years[static_cast<std::size_t>(j)] % 10000,
                      month % 100, day % 100);
        df << id << ',' << date << ',' << fmt17(w) << "\n";
        if (++day > days_in_month[month - 1]) {
          day = 1;
          ++month;
        }
      }
    }
  }
}

namespace {

json prior_to_json(const PriorConfig& prior) {
  return json{{"variance_v", prior.variance_prior.v},
              {"variance_k", prior.variance_prior.k},
              {"variance_scale", prior.variance_prior.scale},
              {"zeta_psi_shape", prior.zeta_psi_shape},
              {"zeta_psi_rate", prior.zeta_psi_rate},
              {"lambda_log_mean", prior.lambda_log_mean},
              {"lambda_log_var", prior.lambda_log_var}};
}

PriorConfig prior_from_json(const json& j) {
  PriorConfig prior;
  prior.variance_prior.v = j.at("variance_v").get<double>();
  prior.variance_prior.k = j.at("variance_k").get<double>();
  prior.variance_prior.scale = j.at("variance_scale").get<double>();
  prior.zeta_psi_shape = j.at("zeta_psi_shape").get<double>();
  prior.zeta_psi_rate = j.at("zeta_psi_rate").get<double>();
  prior.lambda_log_mean = j.at("lambda_log_mean").get<double>();
  prior.lambda_log_var = j.at("lambda_log_var").get<double>();
  return prior;
}

}  // namespace

void write_chain(const ChainArchive& archive, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path);
  json meta;
  meta["schema_version"] = archive.schema_version;
  meta["model"] = model_kind_name(archive.model);
  meta["seed"] = archive.seed;
  meta["config_hash"] = archive.config_hash;
  meta["n_iterations"] = archive.n_iterations;
  meta["burn_in"] = archive.burn_in;
  meta["thin"] = archive.thin;
  meta["n_trials"] = archive.n_trials;
  meta["update_counts_block"] = archive.update_counts_block;
  meta["completed_iterations"] = archive.completed_iterations;
  meta["prior"] = prior_to_json(archive.prior);
  meta["years"] = archive.years;
  meta["transform"] = {{"lo", std::vector<double>(archive.transform.lo.begin(),
                                                  archive.transform.lo.end())},
                       {"hi", std::vector<double>(archive.transform.hi.begin(),
                                                  archive.transform.hi.end())}};
  std::vector<std::vector<double>> pts;
  for (Eigen::Index i = 0; i < archive.points.rows(); ++i) {
    pts.emplace_back(archive.points.row(i).begin(), archive.points.row(i).end());
  }
  meta["points"] = pts;

  f << "# raingp chain v" << archive.schema_version << "\n";
  f << "# meta " << meta.dump() << "\n";
  const ChainLayout layout = archive.layout();
  const std::vector<std::string> names = layout.column_names();
  for (std::size_t c = 0; c < names.size(); ++c) {
    f << (c == 0 ? "" : ",") << names[c];
  }
  f << "\n";
  const std::size_t width = static_cast<std::size_t>(layout.row_width());
  for (std::size_t r = 0; r < archive.n_stored(); ++r) {
    const double* row = archive.row(r);
    for (std::size_t c = 0; c < width; ++c) {
      f << (c == 0 ? "" : ",") << fmt17(row[c]);
    }
    f << "\n";
  }
  f << "# final_state";
  for (double v : archive.final_state) f << ' ' << fmt17(v);
  f << "\n";
  f << "# rng " << archive.rng_state << "\n";
  f << "# end raingp chain\n";
  if (!f) throw DataError("write failed for " + path);
}

ChainArchive read_chain(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(f, line) || line.rfind("# raingp chain v", 0) != 0) {
    throw DataError(path + ": not a chain archive");
  }
  if (!std::getline(f, line) || line.rfind("# meta ", 0) != 0) {
    throw DataError(path + ": missing metadata line");
  }
  ChainArchive archive;
  json meta;
  try {
    meta = json::parse(line.substr(7));
  } catch (const json::exception& e) {
    throw DataError(path + ": bad metadata: " + e.what());
  }
  try {
    archive.schema_version = meta.at("schema_version").get<int>();
    if (archive.schema_version != kChainSchemaVersion) {
      throw DataError(path + ": unsupported schema version");
    }
    archive.model = model_kind_from_name(meta.at("model").get<std::string>());
    archive.seed = meta.at("seed").get<std::uint64_t>();
    archive.config_hash = meta.at("config_hash").get<std::uint64_t>();
    archive.n_iterations = meta.at("n_iterations").get<long>();
    archive.burn_in = meta.at("burn_in").get<long>();
    archive.thin = meta.at("thin").get<long>();
    archive.n_trials = meta.at("n_trials").get<int>();
    archive.update_counts_block = meta.at("update_counts_block").get<bool>();
    archive.completed_iterations =
        meta.at("completed_iterations").get<long>();
    archive.prior = prior_from_json(meta.at("prior"));
    archive.years = meta.at("years").get<std::vector<int>>();
    const auto lo = meta.at("transform").at("lo").get<std::vector<double>>();
    const auto hi = meta.at("transform").at("hi").get<std::vector<double>>();
    archive.transform.lo =
        Eigen::Map<const Eigen::VectorXd>(lo.data(), static_cast<Eigen::Index>(lo.size()));
    archive.transform.hi =
        Eigen::Map<const Eigen::VectorXd>(hi.data(), static_cast<Eigen::Index>(hi.size()));
    const auto pts = meta.at("points").get<std::vector<std::vector<double>>>();
    archive.points.resize(static_cast<Eigen::Index>(pts.size()),
                          static_cast<Eigen::Index>(lo.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (pts[i].size() != lo.size()) {
        throw DataError(path + ": inconsistent point dimensions");
      }
      for (std::size_t h = 0; h < pts[i].size(); ++h) {
        archive.points(static_cast<Eigen::Index>(i),
                       static_cast<Eigen::Index>(h)) = pts[i][h];
      }
    }
  } catch (const json::exception& e) {
    throw DataError(path + ": bad metadata: " + e.what());
  }

  if (!std::getline(f, line)) throw DataError(path + ": missing column header");
  const ChainLayout layout = archive.layout();
  {
    const std::vector<std::string> expect = layout.column_names();
    const std::vector<std::string> got = split_csv_line(line);
    if (got != expect) throw DataError(path + ": column header mismatch");
  }

  const std::size_t width = static_cast<std::size_t>(layout.row_width());
  bool saw_end = false;
  std::size_t line_no = 3;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.rfind("# final_state", 0) == 0) {
      std::istringstream ss(line.substr(13));
      double v = 0.0;
      while (ss >> v) archive.final_state.push_back(v);
      if (archive.final_state.size() != width) {
        throw DataError(path + ": final state width mismatch");
      }
      continue;
    }
    if (line.rfind("# rng ", 0) == 0) {
      archive.rng_state = line.substr(6);
      continue;
    }
    if (line == "# end raingp chain") {
      saw_end = true;
      break;
    }
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != width) {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": row width mismatch");
    }
    for (const std::string& s : fields) {
      archive.rows.push_back(parse_double(s, path, line_no, "value"));
    }
  }
  if (!saw_end) throw DataError(path + ": truncated archive (no end marker)");

  const long expected_rows =
      std::max<long>(0, (archive.completed_iterations - archive.burn_in) /
                            archive.thin);
  if (static_cast<long>(archive.n_stored()) != expected_rows) {
    throw DataError(path + ": stored row count does not match header");
  }
  return archive;
}

void export_grid(const FunctionalGrid& grid, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path);
  f << "x,y,median,q05,q95\n";
  for (Eigen::Index g = 0; g < grid.targets_orig.rows(); ++g) {
    f << fmt17(grid.targets_orig(g, 0)) << ',' << fmt17(grid.targets_orig(g, 1))
      << ',' << fmt17(grid.median[g]) << ',' << fmt17(grid.q05[g]) << ','
      << fmt17(grid.q95[g]) << "\n";
  }
  if (!f) throw DataError("write failed for " + path);
}

void export_truth_grid(const PointSet& grid, const Eigen::VectorXd& gamma_true,
                       const Eigen::VectorXd& delta_true,
                       const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path);
  f << "x,y,gamma_true,delta_true\n";
  for (Eigen::Index g = 0; g < grid.rows(); ++g) {
    f << fmt17(grid(g, 0)) << ',' << fmt17(grid(g, 1)) << ','
      << fmt17(gamma_true[g]) << ',' << fmt17(delta_true[g]) << "\n";
  }
}

TruthTable read_truth_grid(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw DataError(path + ": empty file");
  const std::vector<std::string> header = split_csv_line(line);
  int gamma_col = -1, delta_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (strip(header[c]) == "gamma_true") gamma_col = static_cast<int>(c);
    if (strip(header[c]) == "delta_true") delta_col = static_cast<int>(c);
  }
  if (gamma_col < 0 || delta_col < 0) {
    throw DataError(path + ": need gamma_true and delta_true columns");
  }
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": field count");
    }
    std::vector<double> row;
    for (const std::string& s : fields) {
      row.push_back(parse_double(s, path, line_no, "value"));
    }
    rows.push_back(std::move(row));
  }
  TruthTable table;
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index p = static_cast<Eigen::Index>(header.size()) - 2;
  table.points.resize(n, p);
  table.truth.gamma_true.resize(n);
  table.truth.delta_true.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index h = 0;
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (static_cast<int>(c) == gamma_col) {
        table.truth.gamma_true[i] = rows[static_cast<std::size_t>(i)][c];
      } else if (static_cast<int>(c) == delta_col) {
        table.truth.delta_true[i] = rows[static_cast<std::size_t>(i)][c];
      } else {
        table.points(i, h++) = rows[static_cast<std::size_t>(i)][c];
      }
    }
  }
  return table;
}

PointSet read_targets_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw DataError(path + ": empty file");
  const std::vector<std::string> header = split_csv_line(line);
  const bool has_id = !header.empty() && strip(header[0]) == "id";
  const std::size_t first_col = has_id ? 1 : 0;
  const Eigen::Index p = static_cast<Eigen::Index>(header.size() - first_col);
  if (p < 1) throw DataError(path + ": no covariate columns");
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": field count");
    }
    std::vector<double> row;
    for (std::size_t c = first_col; c < fields.size(); ++c) {
      row.push_back(parse_double(fields[c], path, line_no, "covariate"));
    }
    rows.push_back(std::move(row));
  }
  PointSet points(static_cast<Eigen::Index>(rows.size()), p);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Eigen::Index h = 0; h < p; ++h) {
      points(static_cast<Eigen::Index>(i), h) =
          rows[i][static_cast<std::size_t>(h)];
    }
  }
  return points;
}

}  // namespace raingp
