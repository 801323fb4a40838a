#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ymmb/config.hpp"
#include "ymmb/morse_bott.hpp"

namespace ymmb {

struct HomologyOptions {
  std::uint64_t seed = 1;
  SurveyOptions survey;
  HOptions h;
  CascadeParams cascade;
  /// Drop components failing the Morse-Bott check and mark the result partial; otherwise throw.
  bool allow_partial = true;
  /// Keep only these energy levels (empty: all), matched to 1e-6.
  std::vector<double> levels;
};

/// Applies the recognised keys of a parsed config.
HomologyOptions options_from_config(const Config& c, HomologyOptions base = {});

struct PairCount {
  int from = 0;  // generator index, degree k
  int to = 0;    // generator index, degree k - 1
  CascadeCount count;
};

struct HomologyReport {
  SurveyResult survey;
  CascadeContext context;
  std::vector<HCriticalPoint> points;  // aligned with complex.generators
  std::vector<PairCount> pairs;
  CascadeChainComplex complex;
  std::vector<int> betti;
  bool partial = false;
  std::vector<std::string> notes;
};

class MorseBottFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Survey, auxiliary Morse functions, cascade counts, chain complex and homology over Z/2.
/// Throws UnresolvedCount, ChainNotVerified or MorseFailure rather than returning a guess.
HomologyReport compute_homology(const Objective& f, const HomologyOptions& options);

/// Same, starting from an existing survey.
HomologyReport homology_from_survey(const Objective& f, const SurveyResult& survey, const HomologyOptions& options);

}  // namespace ymmb
