#include "phi4/io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "phi4/encoder.hpp"
#include "phi4/error.hpp"

namespace phi4 {

namespace {
const char* type_name(const Json& j) {
  if (j.is_null()) return "null";
  if (j.is_boolean()) return "boolean";
  if (j.is_number_integer()) return "integer";
  if (j.is_number()) return "number";
  if (j.is_string()) return "string";
  if (j.is_array()) return "array";
  return "object";
}
}  // namespace

ObjectReader::ObjectReader(const Json& j, std::string path) : j_(&j), path_(std::move(path)) {
  require(j.is_object(), ErrorCode::kSchema, path_ + ": expected an object, got " + type_name(j));
}

std::string ObjectReader::where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

bool ObjectReader::has(const std::string& key) const { return j_->contains(key); }

const Json& ObjectReader::get(const std::string& key) {
  require(j_->contains(key), ErrorCode::kSchema, where(key) + ": required key missing");
  seen_.insert(key);
  return j_->at(key);
}

const Json& ObjectReader::raw(const std::string& key) { return get(key); }

int ObjectReader::integer(const std::string& key) {
  const Json& v = get(key);
  require(v.is_number_integer(), ErrorCode::kSchema, where(key) + ": expected integer, got " + type_name(v));
  const auto x = v.get<long long>();
  require(x >= std::numeric_limits<int>::min() && x <= std::numeric_limits<int>::max(), ErrorCode::kSchema,
          where(key) + ": integer out of range");
  return static_cast<int>(x);
}

int ObjectReader::integer(const std::string& key, int fallback) { return has(key) ? integer(key) : fallback; }

std::uint64_t ObjectReader::unsigned64(const std::string& key) {
  const Json& v = get(key);
  require(v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0), ErrorCode::kSchema,
          where(key) + ": expected non-negative integer");
  return v.get<std::uint64_t>();
}

double ObjectReader::number(const std::string& key) {
  const Json& v = get(key);
  require(v.is_number(), ErrorCode::kSchema, where(key) + ": expected number, got " + type_name(v));
  return v.get<double>();
}

double ObjectReader::number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

bool ObjectReader::boolean(const std::string& key, bool fallback) {
  if (!has(key)) return fallback;
  const Json& v = get(key);
  require(v.is_boolean(), ErrorCode::kSchema, where(key) + ": expected boolean, got " + type_name(v));
  return v.get<bool>();
}

std::string ObjectReader::string(const std::string& key) {
  const Json& v = get(key);
  require(v.is_string(), ErrorCode::kSchema, where(key) + ": expected string, got " + type_name(v));
  return v.get<std::string>();
}

std::string ObjectReader::string(const std::string& key, const std::string& fallback) {
  return has(key) ? string(key) : fallback;
}

std::vector<double> ObjectReader::numbers(const std::string& key) {
  const Json& v = get(key);
  require(v.is_array(), ErrorCode::kSchema, where(key) + ": expected array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    require(x.is_number(), ErrorCode::kSchema, where(key) + ": expected array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<double> ObjectReader::numbers(const std::string& key, const std::vector<double>& fallback) {
  return has(key) ? numbers(key) : fallback;
}

std::vector<int> ObjectReader::integers(const std::string& key) {
  const Json& v = get(key);
  require(v.is_array(), ErrorCode::kSchema, where(key) + ": expected array of integers");
  std::vector<int> out;
  for (const auto& x : v) {
    require(x.is_number_integer(), ErrorCode::kSchema, where(key) + ": expected array of integers");
    out.push_back(x.get<int>());
  }
  return out;
}

std::vector<int> ObjectReader::integers(const std::string& key, const std::vector<int>& fallback) {
  return has(key) ? integers(key) : fallback;
}

std::vector<std::vector<int>> ObjectReader::integer_rows(const std::string& key) {
  const Json& v = get(key);
  require(v.is_array(), ErrorCode::kSchema, where(key) + ": expected array of integer arrays");
  std::vector<std::vector<int>> out;
  for (const auto& row : v) {
    require(row.is_array(), ErrorCode::kSchema, where(key) + ": expected array of integer arrays");
    std::vector<int> r;
    for (const auto& x : row) {
      require(x.is_number_integer(), ErrorCode::kSchema, where(key) + ": expected array of integer arrays");
      r.push_back(x.get<int>());
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::vector<int>> ObjectReader::integer_rows(const std::string& key,
                                                         const std::vector<std::vector<int>>& fallback) {
  return has(key) ? integer_rows(key) : fallback;
}

ObjectReader ObjectReader::object(const std::string& key) { return ObjectReader(get(key), where(key)); }

void ObjectReader::finish() const {
  for (const auto& [k, _] : j_->items())
    require(seen_.count(k) > 0, ErrorCode::kSchema, where(k) + ": unknown key");
}

// ---------------------------------------------------------------------------

namespace {
const std::map<std::string, Task>& task_names() {
  static const std::map<std::string, Task> m = {
      {"spectrum", Task::kSpectrum}, {"ground", Task::kGround},   {"excited", Task::kExcited},
      {"adiabatic", Task::kAdiabatic}, {"evolve", Task::kEvolve}, {"compile", Task::kCompile},
      {"fidelity", Task::kFidelity}, {"scan", Task::kScan}};
  return m;
}

std::string forms_name(GeneratorForms f) {
  switch (f) {
    case GeneratorForms::kSymmetric: return "symmetric";
    case GeneratorForms::kAntisymmetric: return "antisymmetric";
    case GeneratorForms::kBoth: return "both";
  }
  return "symmetric";
}
}  // namespace

std::string to_string(Task t) {
  for (const auto& [name, v] : task_names())
    if (v == t) return name;
  return "unknown";
}

Task parse_task(const std::string& name) {
  const auto it = task_names().find(name);
  require(it != task_names().end(), ErrorCode::kSchema, "task: unknown task '" + name + "'");
  return it->second;
}

LatticeSpec read_lattice(ObjectReader r) {
  LatticeSpec s;
  s.n_sites = r.integer("n_sites");
  s.spacing = r.number("spacing", 1.0);
  s.bare_mass = r.number("bare_mass");
  s.coupling = r.number("coupling", 0.0);
  s.local_dim = r.integer("local_dim");
  r.finish();
  try {
    s.validate();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kGuardExceeded) throw;
    fail(ErrorCode::kSchema, r.path() + ": " + e.what());
  }
  return s;
}

EvolverConfig read_evolver(ObjectReader r) {
  EvolverConfig c;
  c.step = r.number("step", c.step);
  c.max_steps = r.integer("max_steps", c.max_steps);
  c.regularization = r.number("regularization", c.regularization);
  c.pinv_cutoff = r.number("pinv_cutoff", c.pinv_cutoff);
  c.c_tolerance = r.number("c_tolerance", c.c_tolerance);
  c.energy_tolerance = r.number("energy_tolerance", c.energy_tolerance);
  c.alpha = r.number("alpha", c.alpha);
  c.learning_rate = r.number("learning_rate", c.learning_rate);
  c.delta_cut = r.number("delta_cut", c.delta_cut);
  const std::string integ = r.string("integrator", "euler");
  require(integ == "euler" || integ == "rk4", ErrorCode::kSchema, r.path() + ".integrator: expected euler or rk4");
  c.integrator = integ == "rk4" ? Integrator::kRk4 : Integrator::kEuler;
  c.record_theta = r.boolean("record_theta", c.record_theta);
  r.finish();
  require(c.step > 0.0, ErrorCode::kSchema, r.path() + ".step: must be positive");
  require(c.max_steps >= 0, ErrorCode::kSchema, r.path() + ".max_steps: must be non-negative");
  require(c.regularization >= 0.0, ErrorCode::kSchema, r.path() + ".regularization: must be non-negative");
  require(c.alpha >= 0.0, ErrorCode::kSchema, r.path() + ".alpha: must be non-negative");
  return c;
}

AnsatzOptions read_ansatz(ObjectReader r) {
  AnsatzOptions o;
  o.max_transition = r.integer("max_transition", o.max_transition);
  o.max_level = r.integer("max_level", o.max_level);
  o.include_mirror = r.boolean("include_mirror", o.include_mirror);
  o.include_t1 = r.boolean("include_t1", o.include_t1);
  o.include_t2 = r.boolean("include_t2", o.include_t2);
  const std::string f = r.string("forms", forms_name(o.forms));
  if (f == "symmetric")
    o.forms = GeneratorForms::kSymmetric;
  else if (f == "antisymmetric")
    o.forms = GeneratorForms::kAntisymmetric;
  else if (f == "both")
    o.forms = GeneratorForms::kBoth;
  else
    fail(ErrorCode::kSchema, r.path() + ".forms: expected symmetric, antisymmetric or both");
  r.finish();
  return o;
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kSchema, origin + ": invalid JSON: " + e.what());
  }
  ObjectReader r(j, "");
  ExperimentConfig c;
  c.origin = origin;
  c.task = parse_task(r.string("task"));
  c.lattice = read_lattice(r.object("lattice"));
  if (r.has("evolver")) c.evolver = read_evolver(r.object("evolver"));
  if (r.has("ansatz")) c.ansatz = read_ansatz(r.object("ansatz"));
  if (r.has("seed")) c.seed = r.unsigned64("seed");
  c.output = r.string("output", "");
  c.description = r.string("description", "");
  if (r.has("params")) {
    const Json& p = r.raw("params");
    require(p.is_object(), ErrorCode::kSchema, "params: expected an object");
    c.params = p;
  }
  r.finish();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const Error& e) {
    fail(ErrorCode::kSchema, e.what());
  }
  return parse_config(text, path);
}

Json to_json(const LatticeSpec& s) {
  return Json{{"n_sites", s.n_sites},
              {"spacing", s.spacing},
              {"bare_mass", s.bare_mass},
              {"coupling", s.coupling},
              {"local_dim", s.local_dim}};
}

Json to_json(const EvolverConfig& c) {
  return Json{{"step", c.step},
              {"max_steps", c.max_steps},
              {"regularization", c.regularization},
              {"pinv_cutoff", c.pinv_cutoff},
              {"c_tolerance", c.c_tolerance},
              {"energy_tolerance", c.energy_tolerance},
              {"alpha", c.alpha},
              {"learning_rate", c.learning_rate},
              {"delta_cut", c.delta_cut},
              {"integrator", c.integrator == Integrator::kRk4 ? "rk4" : "euler"},
              {"record_theta", c.record_theta}};
}

Json to_json(const AnsatzOptions& o) {
  return Json{{"max_transition", o.max_transition},
              {"max_level", o.max_level},
              {"include_mirror", o.include_mirror},
              {"include_t1", o.include_t1},
              {"include_t2", o.include_t2},
              {"forms", forms_name(o.forms)}};
}

// ---------------------------------------------------------------------------

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path);
  out << text;
  require(static_cast<bool>(out), ErrorCode::kIo, "write failed for " + path);
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  require(!ec && std::filesystem::is_directory(path), ErrorCode::kIo, "cannot create directory " + path);
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
  require(!header.empty(), ErrorCode::kInvalidArgument, "CSV needs a header");
  for (std::size_t i = 0; i < header.size(); ++i) text_ += (i ? "," : "") + header[i];
  text_ += "\n";
}

CsvWriter& CsvWriter::row(const std::vector<std::string>& cells) {
  require(cells.size() == columns_, ErrorCode::kInvalidArgument, "CSV row width does not match header");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
    std::string c = cells[i];
    if (quote) {
      std::string q = "\"";
      for (char ch : c) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      c = q + "\"";
    }
    text_ += (i ? "," : "") + c;
  }
  text_ += "\n";
  ++rows_;
  return *this;
}

CsvWriter& CsvWriter::row(const std::vector<double>& cells) {
  std::vector<std::string> s;
  s.reserve(cells.size());
  for (double x : cells) s.push_back(format_double(x));
  return row(s);
}

// ---------------------------------------------------------------------------

Json state_to_json(const StateVector& v) {
  Json a = Json::array();
  for (const cplx& x : v) a.push_back(Json::array({x.real(), x.imag()}));
  return a;
}

StateVector state_from_json(const Json& j) {
  require(j.is_array(), ErrorCode::kSchema, "statevector: expected array of [re, im] pairs");
  StateVector v(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const auto& p : j) {
    require(p.is_array() && p.size() == 2 && p[0].is_number() && p[1].is_number(), ErrorCode::kSchema,
            "statevector: expected array of [re, im] pairs");
    v[i++] = cplx(p[0].get<double>(), p[1].get<double>());
  }
  return v;
}

Json state_bundle(const std::vector<StateVector>& states) {
  Json j;
  j["dimension"] = states.empty() ? 0 : states.front().size();
  j["states"] = Json::array();
  for (const auto& s : states) j["states"].push_back(state_to_json(s));
  return j;
}

std::vector<StateVector> states_from_bundle(const Json& j) {
  ObjectReader r(j, "bundle");
  const int dim = r.integer("dimension");
  const Json& arr = r.raw("states");
  r.finish();
  require(arr.is_array(), ErrorCode::kSchema, "bundle.states: expected array");
  std::vector<StateVector> out;
  for (const auto& s : arr) {
    out.push_back(state_from_json(s));
    require(out.back().size() == dim, ErrorCode::kSchema, "bundle.states: dimension mismatch");
  }
  return out;
}

std::string coordinate_list(const SparseOperator& op) {
  std::string out = "# dim " + std::to_string(op.dim()) + " nnz " + std::to_string(op.nonzeros()) + "\n";
  const auto& m = op.matrix();
  for (Eigen::Index r = 0; r < m.outerSize(); ++r)
    for (SparseOperator::Matrix::InnerIterator it(m, r); it; ++it)
      out += std::to_string(it.row()) + " " + std::to_string(it.col()) + " " + format_double(it.value().real()) +
             " " + format_double(it.value().imag()) + "\n";
  return out;
}

SparseOperator parse_coordinate_list(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  long long dim = -1;
  std::vector<Eigen::Triplet<cplx>> trips;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line[0] == '#') {
      std::string hash, key;
      ls >> hash >> key;
      if (key == "dim") ls >> dim;
      continue;
    }
    long long r, c;
    double re, im;
    require(static_cast<bool>(ls >> r >> c >> re >> im), ErrorCode::kSchema, "coordinate list: bad line '" + line + "'");
    trips.emplace_back(r, c, cplx(re, im));
  }
  require(dim > 0, ErrorCode::kSchema, "coordinate list: missing '# dim' header");
  for (const auto& t : trips)
    require(t.row() >= 0 && t.row() < dim && t.col() >= 0 && t.col() < dim, ErrorCode::kSchema,
            "coordinate list: index out of range");
  SparseOperator::Matrix m(dim, dim);
  m.setFromTriplets(trips.begin(), trips.end());
  return SparseOperator(std::move(m));
}

Json occupation_json(const OccupationVector& occ) {
  Json a = Json::array();
  for (int n : occ) a.push_back(n);
  return a;
}

Json circuit_manifest(const Circuit& circuit, const LatticeSpec& spec) {
  const QubitLayout layout = QubitLayout::for_spec(spec);
  Json j;
  j["lattice"] = to_json(spec);
  if (circuit.reference().empty())
    j["reference"] = nullptr;
  else
    j["reference"] = occupation_json(circuit.reference());
  j["qubits"] = layout.total_qubits();
  Json gens = Json::array();
  for (std::size_t i = 0; i < circuit.size(); ++i) {
    const Generator& g = circuit.generators()[i];
    const ExcitationLabel& l = g.label();
    Json terms = Json::array();
    terms.push_back(Json{{"modes", l.modes}, {"source", l.source}, {"target", l.target}});
    if (l.mirrored) {
      std::vector<int> mm;
      for (int m : l.modes) mm.push_back(reflect_mode(spec, m));
      terms.push_back(Json{{"modes", mm}, {"source", l.source}, {"target", l.target}});
    }
    const PauliSum ps = g.pauli_form(layout);
    gens.push_back(Json{{"index", i},
                        {"family", g.family()},
                        {"label", l.to_string()},
                        {"form", l.form == HermitianForm::kSymmetric ? "symmetric" : "antisymmetric"},
                        {"parameter", i},
                        {"shared_terms", terms},
                        {"pauli_terms", ps.size()}});
  }
  j["generators"] = gens;
  j["parameters"] = circuit.size();
  j["rotation_count"] = circuit.rotation_count(layout);
  j["distinct_pauli_count"] = circuit.distinct_pauli_count(layout);
  return j;
}

}  // namespace phi4
