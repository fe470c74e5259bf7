#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "phi4/ansatz.hpp"
#include "phi4/fock.hpp"
#include "phi4/lattice.hpp"
#include "phi4/varsolver.hpp"

namespace phi4 {

using Json = nlohmann::ordered_json;

/// Strict reader over one JSON object: every key must be consumed before
/// finish(), wrong types and unknown keys raise kSchema with the key path.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path);

  bool has(const std::string& key) const;
  int integer(const std::string& key);
  int integer(const std::string& key, int fallback);
  std::uint64_t unsigned64(const std::string& key);
  double number(const std::string& key);
  double number(const std::string& key, double fallback);
  bool boolean(const std::string& key, bool fallback);
  std::string string(const std::string& key);
  std::string string(const std::string& key, const std::string& fallback);
  std::vector<double> numbers(const std::string& key);
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback);
  std::vector<int> integers(const std::string& key);
  std::vector<int> integers(const std::string& key, const std::vector<int>& fallback);
  std::vector<std::vector<int>> integer_rows(const std::string& key);
  std::vector<std::vector<int>> integer_rows(const std::string& key, const std::vector<std::vector<int>>& fallback);
  /// Nested object; the caller finishes the returned reader.
  ObjectReader object(const std::string& key);
  const Json& raw(const std::string& key);

  /// Rejects keys that were never read.
  void finish() const;
  const std::string& path() const { return path_; }

 private:
  const Json& get(const std::string& key);
  std::string where(const std::string& key) const;

  const Json* j_;
  std::string path_;
  std::set<std::string> seen_;
};

enum class Task { kSpectrum, kGround, kExcited, kAdiabatic, kEvolve, kCompile, kFidelity, kScan };

std::string to_string(Task t);
Task parse_task(const std::string& name);

struct ExperimentConfig {
  Task task = Task::kSpectrum;
  LatticeSpec lattice;
  EvolverConfig evolver;
  AnsatzOptions ansatz;
  std::optional<std::uint64_t> seed;
  std::string output;  ///< default output directory, may be empty
  std::string description;  ///< free text, echoed into summaries
  Json params = Json::object();
  std::string origin;  ///< file the config came from
};

LatticeSpec read_lattice(ObjectReader r);
EvolverConfig read_evolver(ObjectReader r);
AnsatzOptions read_ansatz(ObjectReader r);

/// Parses and schema-checks a config document. Task parameters stay raw in
/// `params`; the runner for that task validates them strictly.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<memory>");
ExperimentConfig load_config(const std::string& path);

Json to_json(const LatticeSpec& s);
Json to_json(const EvolverConfig& c);
Json to_json(const AnsatzOptions& o);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);
void ensure_directory(const std::string& path);

/// Shortest round-trip decimal form.
std::string format_double(double x);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  CsvWriter& row(const std::vector<std::string>& cells);
  CsvWriter& row(const std::vector<double>& cells);
  std::string str() const { return text_; }
  void save(const std::string& path) const { write_text(path, text_); }
  std::size_t rows() const { return rows_; }

 private:
  std::size_t columns_;
  std::size_t rows_ = 0;
  std::string text_;
};

/// [[re, im], ...]
Json state_to_json(const StateVector& v);
StateVector state_from_json(const Json& j);
/// {"dimension": n, "states": [...]} bundle.
Json state_bundle(const std::vector<StateVector>& states);
std::vector<StateVector> states_from_bundle(const Json& j);

/// "row col re im" lines after a "# dim D nnz K" header.
std::string coordinate_list(const SparseOperator& op);
SparseOperator parse_coordinate_list(const std::string& text);

/// Reference, generator labels, parameter sharing and per-generator Pauli counts.
Json circuit_manifest(const Circuit& circuit, const LatticeSpec& spec);

Json occupation_json(const OccupationVector& occ);

}  // namespace phi4
