#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <string>

#include "doctest.h"
#include "phi4/phi4.h"

TEST_CASE("lattice handle") {
  phi4_lattice* l = nullptr;
  REQUIRE(phi4_lattice_create(4, 1.0, 0.369, 0.0, 4, &l) == PHI4_OK);
  uint64_t dim = 0;
  CHECK(phi4_lattice_dimension(l, &dim) == PHI4_OK);
  CHECK(dim == 256);
  double e[2];
  CHECK(phi4_lattice_spectrum(l, 2, e) == PHI4_OK);
  CHECK(std::abs(e[0] - 2.662) < 3e-3);
  CHECK(phi4_lattice_spectrum(l, 1000, e) == PHI4_E_INVALID_ARGUMENT);
  CHECK(std::strlen(phi4_last_error()) > 0);
  char* text = nullptr;
  CHECK(phi4_lattice_pauli_text(l, &text) == PHI4_OK);
  REQUIRE(text != nullptr);
  CHECK(std::string(text).find("IIIIIIII") != std::string::npos);
  phi4_string_free(text);
  phi4_lattice_free(l);
}

TEST_CASE("invalid arguments") {
  phi4_lattice* l = nullptr;
  CHECK(phi4_lattice_create(0, 1.0, 1.0, 0.0, 4, &l) != PHI4_OK);
  CHECK(l == nullptr);
  CHECK(phi4_lattice_create(2, 1.0, 1.0, 0.0, 4, nullptr) == PHI4_E_INVALID_ARGUMENT);
  CHECK(phi4_lattice_dimension(nullptr, nullptr) == PHI4_E_INVALID_ARGUMENT);
  phi4_config* c = nullptr;
  CHECK(phi4_config_parse("{", &c) == PHI4_E_SCHEMA);
  CHECK(c == nullptr);
  CHECK(phi4_config_load("/nonexistent.json", &c) == PHI4_E_SCHEMA);
  phi4_lattice_free(nullptr);
  phi4_config_free(nullptr);
  phi4_report_free(nullptr);
}

TEST_CASE("run through the C API") {
  phi4_config* c = nullptr;
  REQUIRE(phi4_config_parse(R"({"task": "scan", "lattice": {"n_sites": 2, "bare_mass": 1, "local_dim": 2},
      "params": {"commutator_qubits": [2, 5], "truncation_qubits": [1, 4]}})", &c) == PHI4_OK);
  CHECK(std::string(phi4_config_task(c)) == "scan");
  phi4_report* r = nullptr;
  REQUIRE(phi4_run(c, nullptr, nullptr, &r) == PHI4_OK);
  CHECK(std::string(phi4_report_json(r)).find("commutator_r2") != std::string::npos);
  phi4_report* v = nullptr;
  // parsed from memory, so there is no golden table next to it
  CHECK(phi4_check(c, r, &v) == PHI4_E_SCHEMA);
  phi4_report_free(r);
  phi4_config_free(c);
}

TEST_CASE("acceptance with a missing table") {
  phi4_report* r = nullptr;
  int all = 1, doc = 1;
  CHECK(phi4_acceptance("/nonexistent/goldens.json", nullptr, &r, &all, &doc) == PHI4_E_SCHEMA);
  CHECK(r == nullptr);
}
