#include "phi4/phi4.h"

#include <cstring>
#include <filesystem>
#include <new>
#include <string>

#include "phi4/encoder.hpp"
#include "phi4/error.hpp"
#include "phi4/experiments.hpp"
#include "phi4/reference.hpp"

struct phi4_lattice {
  phi4::LatticeSpec spec;
};

struct phi4_config {
  phi4::ExperimentConfig config;
  std::string task;
};

struct phi4_report {
  phi4::Json json;
  std::string text;
};

namespace {

thread_local std::string last_error;

int set_error(int code, const std::string& what) {
  last_error = what;
  return code;
}

template <class F>
int guarded(F&& f) {
  try {
    last_error.clear();
    return f();
  } catch (const phi4::Error& e) {
    return set_error(static_cast<int>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(PHI4_E_GUARD, "out of memory");
  } catch (const std::exception& e) {
    return set_error(PHI4_E_INTERNAL, e.what());
  } catch (...) {
    return set_error(PHI4_E_INTERNAL, "unknown failure");
  }
}

int null_arg(const char* what) { return set_error(PHI4_E_INVALID_ARGUMENT, std::string(what) + " is null"); }

phi4_report* make_report(phi4::Json j) {
  auto* r = new phi4_report{std::move(j), {}};
  r->text = r->json.dump(2);
  return r;
}

char* dup(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* phi4_last_error(void) { return last_error.c_str(); }
const char* phi4_version(void) { return "0.1.0"; }
void phi4_string_free(char* s) { delete[] s; }

int phi4_lattice_create(int n_sites, double spacing, double bare_mass, double coupling, int local_dim,
                        phi4_lattice** out) {
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    phi4::LatticeSpec s;
    s.n_sites = n_sites;
    s.spacing = spacing;
    s.bare_mass = bare_mass;
    s.coupling = coupling;
    s.local_dim = local_dim;
    s.validate();
    *out = new phi4_lattice{s};
    return PHI4_OK;
  });
}

void phi4_lattice_free(phi4_lattice* lattice) { delete lattice; }

int phi4_lattice_dimension(const phi4_lattice* lattice, uint64_t* dim) {
  if (!lattice) return null_arg("lattice");
  if (!dim) return null_arg("dim");
  return guarded([&] {
    *dim = phi4::FockBasis(lattice->spec).dim();
    return PHI4_OK;
  });
}

int phi4_lattice_spectrum(const phi4_lattice* lattice, size_t count, double* eigenvalues) {
  if (!lattice) return null_arg("lattice");
  if (count > 0 && !eigenvalues) return null_arg("eigenvalues");
  return guarded([&] {
    const auto rep = phi4::eigensolve(phi4::build_hamiltonian(lattice->spec));
    phi4::require(count <= static_cast<size_t>(rep.eigenvalues.size()), phi4::ErrorCode::kInvalidArgument,
                  "count exceeds the Hilbert space dimension");
    for (size_t i = 0; i < count; ++i) eigenvalues[i] = rep.eigenvalues[static_cast<Eigen::Index>(i)];
    return PHI4_OK;
  });
}

int phi4_lattice_pauli_text(const phi4_lattice* lattice, char** text) {
  if (!lattice) return null_arg("lattice");
  if (!text) return null_arg("text");
  *text = nullptr;
  return guarded([&] {
    *text = dup(phi4::compile_hamiltonian(lattice->spec).sum.serialize());
    return PHI4_OK;
  });
}

int phi4_config_load(const char* path, phi4_config** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    auto cfg = phi4::load_config(path);
    const std::string task = phi4::to_string(cfg.task);
    *out = new phi4_config{std::move(cfg), task};
    return PHI4_OK;
  });
}

int phi4_config_parse(const char* json_text, phi4_config** out) {
  if (!json_text) return null_arg("json_text");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    auto cfg = phi4::parse_config(json_text);
    const std::string task = phi4::to_string(cfg.task);
    *out = new phi4_config{std::move(cfg), task};
    return PHI4_OK;
  });
}

void phi4_config_free(phi4_config* config) { delete config; }

const char* phi4_config_task(const phi4_config* config) { return config ? config->task.c_str() : ""; }

int phi4_run(const phi4_config* config, const char* out_dir, const uint64_t* seed, phi4_report** out) {
  if (!config) return null_arg("config");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    phi4::RunOptions o;
    if (out_dir) o.out_dir = out_dir;
    if (seed) o.seed = *seed;
    *out = make_report(phi4::run_experiment(config->config, o));
    return PHI4_OK;
  });
}

int phi4_check(const phi4_config* config, const phi4_report* run, phi4_report** verdict) {
  if (!config) return null_arg("config");
  if (!run) return null_arg("run");
  if (!verdict) return null_arg("verdict");
  *verdict = nullptr;
  return guarded([&] {
    const auto& origin = config->config.origin;
    const auto table = phi4::load_goldens(phi4::sibling_goldens(origin));
    const std::string name = std::filesystem::path(origin).filename().string();
    const auto results = phi4::evaluate_goldens(table, name, run->json);
    phi4::Json j = phi4::Json::array();
    bool ok = true;
    for (const auto& r : results) {
      j.push_back(phi4::Json{{"id", r.id}, {"criterion", r.criterion}, {"pass", r.pass}, {"observed", r.observed},
                             {"expected", r.expected}});
      ok = ok && r.pass;
    }
    phi4::require(!results.empty(), phi4::ErrorCode::kSchema, "no golden values reference " + name);
    *verdict = make_report(phi4::Json{{"config", name}, {"pass", ok}, {"goldens", j}});
    if (!ok) return set_error(PHI4_E_GOLDEN, "golden mismatch for " + name);
    return static_cast<int>(PHI4_OK);
  });
}

int phi4_acceptance(const char* goldens_path, const char* out_dir, phi4_report** out, int* all_pass,
                    int* documented_only) {
  if (!goldens_path) return null_arg("goldens_path");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    phi4::RunOptions o;
    if (out_dir) o.out_dir = out_dir;
    const auto rep = phi4::run_acceptance(phi4::load_goldens(goldens_path), o);
    if (all_pass) *all_pass = rep.all_pass() ? 1 : 0;
    if (documented_only) *documented_only = rep.only_documented_failures() ? 1 : 0;
    *out = make_report(phi4::to_json(rep));
    return PHI4_OK;
  });
}

int phi4_regenerate_derived(const char* goldens_path, size_t* updated) {
  if (!goldens_path) return null_arg("goldens_path");
  return guarded([&] {
    const auto n = phi4::regenerate_derived(goldens_path);
    if (updated) *updated = n;
    return PHI4_OK;
  });
}

const char* phi4_report_json(const phi4_report* report) { return report ? report->text.c_str() : ""; }

void phi4_report_free(phi4_report* report) { delete report; }

}  // extern "C"
