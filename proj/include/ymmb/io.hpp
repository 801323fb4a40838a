#pragma once

#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "ymmb/flow.hpp"
#include "ymmb/perturbation.hpp"
#include "ymmb/pipeline.hpp"
#include "ymmb/surface_complex.hpp"
#include "ymmb/ym_core.hpp"

namespace ymmb {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchema = "ymmb/1";

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 16 lowercase hex digits.
std::string hash_string(std::uint64_t h);

/// Two-space indented dump with a trailing newline; byte-identical for equal input.
std::string dump(const Json& j);
Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// A number with its tolerance and pass flag.
Json checked(double value, double tolerance, bool pass);

// Faces store signed 1-based edge numbers: +(e+1) or -(e+1).
Json complex_to_json(const OrientedCellComplex& c);
OrientedCellComplex complex_from_json(const Json& j);

/// Per-edge quaternion components (w, x, y, z), group and complex hash.
Json connection_to_json(const Connection& a);
/// Throws IoError when the stored hash does not match `complex`.
Connection connection_from_json(const Json& j, std::shared_ptr<const OrientedCellComplex> complex);

Json bank_to_json(const PerturbationBank& bank);
/// The bank is rebuilt over the default spanning tree of `complex`.
PerturbationBank bank_from_json(const Json& j, std::shared_ptr<const OrientedCellComplex> complex);

/// Columns s, E, gradnorm.
void write_trajectory_csv(std::ostream& out, const Trajectory& t);
/// Sidecar: status, step counts, endpoint coordinates and final values.
Json trajectory_to_json(const Trajectory& t, double tol_g);

Json survey_to_json(const SurveyResult& s);
/// Generators, boundaries, betti, provenance and notes; numerics carry tolerance and pass flags.
Json homology_to_json(const HomologyReport& r, const HomologyOptions& o);

}  // namespace ymmb
