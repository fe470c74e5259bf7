#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "exit_codes.hpp"
#include "json.hpp"
#include "phi4/phi4.h"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool check = false;
  bool regen = false;
  bool full = false;
};

int report_failure(int status, const char* context) {
  std::cerr << "phi4: " << context << ": " << phi4_last_error() << "\n";
  return exit_code_for(status);
}

void print_metrics(const phi4_report* r, bool full) {
  const auto j = nlohmann::ordered_json::parse(phi4_report_json(r));
  std::cout << (full ? j : j.at("metrics")).dump(2) << "\n";
}

int run_task(const std::string& task, const Options& o) {
  phi4_config* cfg = nullptr;
  int st = phi4_config_load(o.config.c_str(), &cfg);
  if (st != PHI4_OK) return report_failure(st, "config");
  if (task != phi4_config_task(cfg)) {
    std::cerr << "phi4: config: task is \"" << phi4_config_task(cfg) << "\" but the subcommand is \"" << task
              << "\"\n";
    phi4_config_free(cfg);
    return 2;
  }
  if (o.regen) {
    phi4_config_free(cfg);
    const std::string goldens = (std::filesystem::path(o.config).parent_path() / "goldens.json").string();
    std::size_t n = 0;
    st = phi4_regenerate_derived(goldens.c_str(), &n);
    if (st != PHI4_OK) return report_failure(st, "regen-derived");
    std::cout << "updated " << n << " derived values in " << goldens << "\n";
    return 0;
  }
  phi4_report* run = nullptr;
  const std::uint64_t seed = o.seed.value_or(0);
  st = phi4_run(cfg, o.out.empty() ? nullptr : o.out.c_str(), o.seed ? &seed : nullptr, &run);
  if (st != PHI4_OK) {
    phi4_config_free(cfg);
    return report_failure(st, task.c_str());
  }
  print_metrics(run, o.full);
  int code = 0;
  if (o.check) {
    phi4_report* verdict = nullptr;
    st = phi4_check(cfg, run, &verdict);
    if (verdict) {
      const auto v = nlohmann::ordered_json::parse(phi4_report_json(verdict));
      for (const auto& g : v.at("goldens"))
        std::cerr << (g.at("pass").get<bool>() ? "PASS " : "FAIL ") << g.at("id").get<std::string>() << "  "
                  << g.at("observed").get<std::string>() << "  expected " << g.at("expected").get<std::string>()
                  << "\n";
      phi4_report_free(verdict);
    }
    if (st != PHI4_OK) code = report_failure(st, "check");
  }
  phi4_report_free(run);
  phi4_config_free(cfg);
  return code;
}

int run_check(const Options& o) {
  phi4_report* rep = nullptr;
  int all = 0, documented = 0;
  const int st = phi4_acceptance(o.config.c_str(), o.out.empty() ? nullptr : o.out.c_str(), &rep, &all, &documented);
  if (st != PHI4_OK) return report_failure(st, "check");
  const auto j = nlohmann::ordered_json::parse(phi4_report_json(rep));
  phi4_report_free(rep);
  for (const auto& c : j.at("criteria")) {
    std::cout << "criterion " << c.at("criterion").get<int>() << ": " << (c.at("pass").get<bool>() ? "PASS" : "FAIL")
              << "  " << c.at("title").get<std::string>() << "\n";
    for (const auto& g : c.at("goldens"))
      if (!g.at("pass").get<bool>())
        std::cout << "    " << g.at("id").get<std::string>() << ": " << g.at("observed").get<std::string>()
                  << "  expected " << g.at("expected").get<std::string>() << "\n";
  }
  return all ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lattice phi^4 spectra, variational solvers and qubit compilation"};
  app.require_subcommand(1);
  Options o;
  std::string chosen;
  const char* tasks[][2] = {{"spectrum", "exact spectrum, level labels and crowding report"},
                            {"ground", "variational imaginary-time ground state"},
                            {"excited", "deflated variational excited states"},
                            {"adiabatic", "exact adiabatic ramp from free eigenstates"},
                            {"evolve", "variational and layered real-time evolution"},
                            {"compile", "Pauli compilation and gate counts"},
                            {"fidelity", "n-particle subspaces and fidelity bounds"},
                            {"scan", "encoding error scans"},
                            {"check", "run every config listed in a golden table"}};
  for (const auto& t : tasks) {
    auto* sub = app.add_subcommand(t[0], t[1]);
    const bool is_check = std::string(t[0]) == "check";
    sub->add_option("--config", o.config, is_check ? "golden table (goldens.json)" : "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory for artifacts");
    if (!is_check) {
      sub->add_option("--seed", o.seed, "override the config seed");
      sub->add_flag("--check", o.check, "compare metrics with the sibling goldens.json");
      sub->add_flag("--regen-derived", o.regen, "recompute DERIVED golden values and exit");
      sub->add_flag("--full", o.full, "print the whole summary, not only metrics");
    }
    sub->callback([&chosen, name = std::string(t[0])] { chosen = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    // CLI11 reports usage errors with its own codes; unreadable configs are schema errors
    return rc == 0 ? 0 : 2;
  }
  if (o.check && o.regen) {
    std::cerr << "phi4: --check and --regen-derived are exclusive\n";
    return 2;
  }
  return chosen == "check" ? run_check(o) : run_task(chosen, o);
}
