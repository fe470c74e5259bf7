#include <cstdio>
#include <iostream>
#include <string>

#include "exit_codes.hpp"
#include "json.hpp"
#include "phi4/phi4.h"

#ifndef PHI4_DEFAULT_GOLDENS
#define PHI4_DEFAULT_GOLDENS "configs/goldens.json"
#endif

// One line per criterion. Exit 0 when every failure is a recorded deviation.
int main(int argc, char** argv) {
  const std::string goldens = argc > 1 ? argv[1] : PHI4_DEFAULT_GOLDENS;
  const char* out = argc > 2 ? argv[2] : nullptr;
  phi4_report* rep = nullptr;
  int all = 0, documented = 0;
  const int st = phi4_acceptance(goldens.c_str(), out, &rep, &all, &documented);
  if (st != PHI4_OK) {
    std::cerr << "acceptance: " << phi4_last_error() << "\n";
    return exit_code_for(st);
  }
  const auto j = nlohmann::ordered_json::parse(phi4_report_json(rep));
  phi4_report_free(rep);
  for (const auto& c : j.at("criteria")) {
    const bool pass = c.at("pass").get<bool>();
    char secs[32];
    std::snprintf(secs, sizeof secs, "%.1fs", c.at("seconds").get<double>());
    std::cout << "criterion " << c.at("criterion").get<int>() << ": " << (pass ? "PASS" : "FAIL") << "  "
              << c.at("title").get<std::string>() << "  [" << secs << "]";
    if (!pass && c.at("documented_deviation").get<bool>()) std::cout << "  (documented deviation)";
    std::cout << "\n";
    if (!pass)
      for (const auto& g : c.at("goldens"))
        if (!g.at("pass").get<bool>()) {
          std::cout << "    " << g.at("id").get<std::string>() << ": " << g.at("observed").get<std::string>()
                    << "  expected " << g.at("expected").get<std::string>() << "\n";
          if (g.contains("documented_deviation"))
            std::cout << "      reason: " << g.at("documented_deviation").get<std::string>() << "\n";
        }
  }
  std::cout << (all ? "all criteria pass" : documented ? "failures are recorded deviations only" : "undocumented failures")
            << "\n";
  return all || documented ? 0 : 1;
}
