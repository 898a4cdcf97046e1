#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "diffgreeks/config.hpp"

namespace diffgreeks {

/// |exact - estimate| / |exact|; throws ZeroReferenceError when exact == 0.
double rerror(double exact, double estimate);

struct ReportRow {
  std::string suite;
  std::string quantity;
  double estimate = 0.0;
  std::optional<double> reference;
  std::optional<double> rerror;  // present iff reference present and nonzero
  std::optional<double> std_err;
  double runtime_ms = 0.0;
  std::string provenance;
  bool failed = false;
};

/// Runs one experiment. Rows are named price, delta_i, gamma_i, theta plus
/// engine extras (gamma_i_bump, cfl, best_loss). References in cfg.reference
/// are attached by quantity name. Engine errors are rethrown as ConfigError
/// naming cfg.origin.
std::vector<ReportRow> run_experiment(const ExperimentConfig& cfg);

struct BenchOptions {
  std::optional<std::size_t> max_paths;
  std::optional<std::size_t> max_epochs;
  bool full = false;     // also run the full-scale rows (FDM2, 10^7 paths)
  bool timing = true;    // false writes runtime_ms = 0 so reports diff cleanly
  std::size_t jobs = 1;  // experiments run concurrently
  std::string data_dir = DIFFGREEKS_DATA_DIR;
};

const std::vector<std::string>& suite_names();

/// The predeclared experiments of a suite with caps applied. Throws
/// UsageError listing the valid names for an unknown suite.
std::vector<ExperimentConfig> suite_configs(const std::string& name, const BenchOptions& opts);

/// Runs every experiment of the suite; a failing experiment yields a single
/// row marked failed and the suite carries on. Row quantities are prefixed
/// with the experiment label.
std::vector<ReportRow> bench_suite(const std::string& name, const BenchOptions& opts);

/// suite,quantity,estimate,reference,rerror,std_err,runtime_ms,provenance
void write_csv(std::ostream& out, const std::vector<ReportRow>& rows);
nlohmann::json report_json(const std::vector<ReportRow>& rows);

/// Fixed-format number used in every CSV this project writes.
std::string format_number(double v);

nlohmann::json load_reference_values(const std::string& data_dir);

}  // namespace diffgreeks
