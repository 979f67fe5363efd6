// Apache License, Version 2.0, refer to LICENSE.txt
//
// File formats:
//   stations CSV  header `id,<covariate>,...` (e.g. id,x,y,elevation);
//                 every column after id is a numeric covariate.
//   daily CSV     header `id,date,rain_mm` with ISO dates (YYYY-MM-DD).
//   chain archive text format with a JSON metadata line, one CSV row per
//                 stored draw (17 significant digits), the final sampler
//                 state and generator state, and an end marker.
//   grid CSV      `x,y,median,q05,q95` per target.

#ifndef RAINGP_IO_HPP
#define RAINGP_IO_HPP

#include <string>
#include <vector>

#include "raingp/chain.hpp"
#include "raingp/forecast.hpp"
#include "raingp/model.hpp"

namespace raingp {

struct LoadReport {
  std::vector<std::string> warnings;  // dropped station-years etc.
};

// Ingests station metadata and daily records into a rectangular panel.
// A wet day is a day with rain_mm strictly above the threshold; its amount
// becomes one event magnitude. Station-years with no recorded days at all
// are masked out of the likelihood with a warning. year_from/year_to of 0
// mean "use the span present in the file". Throws DataError with the
// offending line number on malformed input.
ObservedData load_dataset(const std::string& stations_csv,
                          const std::string& daily_csv,
                          double wet_threshold_mm, int year_from = 0,
                          int year_to = 0, int n_trials = 365,
                          LoadReport* report = nullptr);

// Writes a panel back to the two-file format (dates synthesized as the
// first count days of each year; requires counts <= 365).
void export_observed(const ObservedData& data, const std::string& stations_csv,
                     const std::string& daily_csv);

void write_chain(const ChainArchive& archive, const std::string& path);
ChainArchive read_chain(const std::string& path);

void export_grid(const FunctionalGrid& grid, const std::string& path);

// `x,y,gamma_true,delta_true` per grid point.
void export_truth_grid(const PointSet& grid,
                       const Eigen::VectorXd& gamma_true,
                       const Eigen::VectorXd& delta_true,
                       const std::string& path);

// Truth grid reader: returns points (all numeric columns before the truth
// pair) plus the truth values.
struct TruthTable {
  PointSet points;
  TruthGrid truth;
};
TruthTable read_truth_grid(const std::string& path);

// Reads a targets CSV whose numeric columns are covariates in original
// units (header required; an `id` first column is allowed and skipped).
PointSet read_targets_csv(const std::string& path);

}  // namespace raingp

#endif
