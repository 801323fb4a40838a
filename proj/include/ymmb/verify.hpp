#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "ymmb/benchlib.hpp"
#include "ymmb/io.hpp"
#include "ymmb/pipeline.hpp"
#include "ymmb/ym_objective.hpp"

namespace ymmb {

// ---------------------------------------------------------------- admissible perturbations

/// Critical points covering a surveyed component: walks the kernel directions from every
/// representative in steps of `spacing`, projecting back onto the critical set.
std::vector<Vector> dense_representatives(const Objective& f, const CriticalManifold& c, double spacing,
                                          int max_points = 20000);

/// Dense critical points of every surveyed component, as connections.
std::vector<Connection> critical_connections(const YMObjective& f, const SurveyResult& s, double spacing);

struct AdmissibilityReport {
  bool admissible = false;
  double epsilon = 0.0;
  double spacing = 0.0;  // covering step of the critical set
  int representatives = 0;
  /// Per term: smallest slice distance to the critical set minus the support radius.
  std::vector<double> clearance;
  std::string detail;
};

/// is_admissible against a dense cover; the cover step is added to epsilon.
AdmissibilityReport check_admissible(const YMObjective& f, const SurveyResult& s, const PerturbationBank& bank,
                                     double epsilon, double spacing = 0.1);

/// Bank of `terms` model perturbations with random references clear of the critical set and
/// empirical constants; lambdas are scaled so the bank norm equals `norm`.
PerturbationBank admissible_ym_bank(const YMObjective& f, const SurveyResult& s, int terms, int k, double norm,
                                    double epsilon, std::mt19937_64& rng);

/// Benchmark copy with `terms` admissible ambient bumps of coefficient `lambda`.
std::shared_ptr<EmbeddedObjective> perturbed_benchmark(const std::function<std::shared_ptr<EmbeddedObjective>()>& make,
                                                       const SurveyResult& s, int terms, int k, double lambda,
                                                       double epsilon, std::mt19937_64& rng);

// ---------------------------------------------------------------- suites

struct SuiteResult {
  std::string name;
  bool pass = false;
  double seconds = 0.0;
  std::string summary;
  Json details;
};

struct SuiteOptions {
  std::uint64_t seed = 1;
  HomologyOptions homology;
};

SuiteResult suite_derivatives(const SuiteOptions& o);
SuiteResult suite_gauge_invariance(const SuiteOptions& o);
SuiteResult suite_energy_monotonicity(const SuiteOptions& o);
SuiteResult suite_exponential_decay(const SuiteOptions& o);
SuiteResult suite_morse_bott(const SuiteOptions& o);
SuiteResult suite_sphere_oracle(const SuiteOptions& o);
SuiteResult suite_torus_oracle(const SuiteOptions& o);
SuiteResult suite_u1_pipeline(const SuiteOptions& o);
SuiteResult suite_invariance(const SuiteOptions& o);
SuiteResult suite_critical_preservation(const SuiteOptions& o);
SuiteResult suite_moduli_family(const SuiteOptions& o);

/// Runs a suite, timing it and turning exceptions into a failed result.
SuiteResult run_suite(const std::string& name, const std::function<SuiteResult(const SuiteOptions&)>& suite,
                      const SuiteOptions& o);

Json suite_to_json(const SuiteResult& r);

}  // namespace ymmb
