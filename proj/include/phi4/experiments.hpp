#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phi4/io.hpp"

namespace phi4 {

struct RunOptions {
  std::string out_dir;                ///< empty: nothing is written
  std::optional<std::uint64_t> seed;  ///< overrides the config seed
};

/// Runs one experiment and returns its JSON summary: echoed inputs, flat
/// "metrics" map and the list of written artifacts.
Json run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// --- golden values -----------------------------------------------------------

/// One expectation on a metric of a bundled config. Exactly one comparison
/// kind is set: value +- tol, max, min, increasing (metric list), same_set.
struct Golden {
  std::string id;
  int criterion = 0;
  std::string config;  ///< file name relative to the golden table
  std::string metric;
  std::string provenance;  ///< PUBLISHED, DERIVED or TRIVIAL
  std::string note;
  std::optional<double> value;
  double tol = 0.0;
  std::optional<double> max;
  std::optional<double> min;
  std::vector<std::string> increasing;
  std::optional<Json> same_set;
};

struct KnownDeviation {
  std::string golden;
  std::string reason;
};

struct GoldenTable {
  std::string path;
  std::string directory;
  std::vector<std::string> criteria_titles;  ///< index = criterion number
  std::vector<Golden> goldens;
  std::vector<KnownDeviation> deviations;
  Json document;

  std::vector<std::string> configs() const;
  const KnownDeviation* deviation(const std::string& golden_id) const;
};

/// Missing or malformed tables raise kSchema.
GoldenTable load_goldens(const std::string& path);

struct GoldenResult {
  std::string id;
  int criterion = 0;
  bool pass = false;
  std::string observed;
  std::string expected;
  std::optional<std::string> deviation;  ///< recorded reason, when listed
};

/// Evaluates every golden attached to `config_name` against a run summary.
std::vector<GoldenResult> evaluate_goldens(const GoldenTable& table, const std::string& config_name,
                                           const Json& summary);

/// Golden table sitting next to a config file ("goldens.json").
std::string sibling_goldens(const std::string& config_path);

// --- acceptance suite ---------------------------------------------------------

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  bool documented = false;  ///< every failing golden is a recorded deviation
  double seconds = 0.0;
  std::vector<GoldenResult> goldens;
};

struct AcceptanceReport {
  std::vector<CriterionResult> criteria;
  bool all_pass() const;
  /// True when the only failures are recorded deviations.
  bool only_documented_failures() const;
};

/// Runs every config referenced by the table (each once) and evaluates the
/// goldens grouped by criterion.
AcceptanceReport run_acceptance(const GoldenTable& table, const RunOptions& options = {});
Json to_json(const AcceptanceReport& report);

/// Re-runs the configs and rewrites the value of every DERIVED golden.
/// Returns the number of updated entries.
std::size_t regenerate_derived(const std::string& goldens_path, const RunOptions& options = {});

}  // namespace phi4
