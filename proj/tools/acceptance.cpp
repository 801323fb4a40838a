#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "ymmb/verify.hpp"

using namespace ymmb;

int main(int argc, char** argv) {
  SuiteOptions o;
  o.homology.survey.n_starts = 30;
  struct Criterion {
    int id;
    const char* name;
    SuiteResult (*run)(const SuiteOptions&);
    double budget;  // seconds
  };
  const std::vector<Criterion> criteria{
      {1, "derivatives", suite_derivatives, 60},
      {2, "gauge_invariance", suite_gauge_invariance, 60},
      {3, "energy_monotonicity", suite_energy_monotonicity, 300},
      {4, "exponential_decay", suite_exponential_decay, 300},
      {5, "morse_bott", suite_morse_bott, 600},
      {6, "sphere_oracle", suite_sphere_oracle, 600},
      {7, "torus_oracle", suite_torus_oracle, 600},
      {8, "u1_pipeline", suite_u1_pipeline, 1800},
      {9, "invariance", suite_invariance, 3600},
      {10, "critical_preservation", suite_critical_preservation, 300},
      {11, "moduli_family", suite_moduli_family, 600},
  };
  Json report;
  report["schema"] = kSchema;
  report["seed"] = o.seed;
  Json results = Json::array();
  bool all = true;
  for (const Criterion& c : criteria) {
    const SuiteResult r = run_suite(c.name, c.run, o);
    const bool in_time = r.seconds < c.budget;
    const bool pass = r.pass && in_time;
    all = all && pass;
    std::printf("%s %2d %-22s %s [%.1fs of %.0fs]\n", pass ? "PASS" : "FAIL", c.id, c.name, r.summary.c_str(),
                r.seconds, c.budget);
    std::fflush(stdout);
    Json j = suite_to_json(r);
    j["criterion"] = c.id;
    j["runtime_within_budget"] = in_time;
    results.push_back(j);
  }
  report["criteria"] = results;
  report["pass"] = all;
  if (argc > 1) std::ofstream(argv[1]) << dump(report);
  return all ? 0 : 1;
}
