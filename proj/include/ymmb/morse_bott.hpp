#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "ymmb/flow.hpp"
#include "ymmb/objective.hpp"

namespace ymmb {

// ---------------------------------------------------------------- survey

struct MorseBottReport {
  bool passed = false;
  int kernel_dimension = 0;
  int pca_dimension = 0;
  int orbit_dimension = 0;
  bool orbit_type = false;       // the component is locally a single symmetry orbit
  bool kernel_constant = true;   // across representatives
  bool orbit_constant = true;    // across representatives
  std::vector<int> representative_kernels;
  std::vector<int> representative_orbits;
  std::string detail;
};

struct CriticalManifold {
  int id = 0;
  double energy = 0.0;
  std::vector<Vector> representatives;  // refined critical points; [0] is the main one
  Vector fingerprint;
  int dimension = 0;        // Hessian kernel dimension at the main representative
  int pca_dimension = 0;
  int orbit_dimension = 0;
  int index = 0;            // ind_YM: eigenvalues below -1e-6
  Vector spectrum;          // Hessian eigenvalues at the main representative
  MorseBottReport morse_bott;
};

struct SurveyOptions {
  int n_starts = 50;
  bool ascent = true;         // also flow up, to reach maxima
  bool saddle_search = true;  // Levenberg-Marquardt on |grad|^2 from random starts
  double cluster_tol = 1e-4;
  double kernel_rel = 1e-6;
  int pca_samples = 0;        // 0: 4 * manifold_dim + 8
  double pca_radius = 1e-3;
  double pca_rel = 0.05;
  int max_representatives = 24;
  FlowController flow;
};

struct SurveyResult {
  std::vector<CriticalManifold> manifolds;  // sorted by energy
  std::vector<Vector> outliers;             // converged but unrefinable points
  int flows = 0;
  int saddle_searches = 0;
};

SurveyResult survey_critical(const Objective& f, const SurveyOptions& options, std::mt19937_64& rng);

/// Kernel, PCA and orbit-dimension consistency for a surveyed component.
MorseBottReport morse_bott_check(const Objective& f, const CriticalManifold& c, const SurveyOptions& options,
                                 std::mt19937_64& rng);

/// Gauss-Newton back onto the critical set, skipping the `kernel_dim` smallest Hessian directions.
Vector project_to_critical(const Objective& f, const Vector& q, int kernel_dim, double target = 1e-11);

/// f.distance, or infinity when the pair is too far apart for log_map.
double safe_distance(const Objective& f, const Vector& p, const Vector& q);

/// coord_dim x k: eigenvectors of the k smallest |eigenvalues|.
Matrix tangent_basis(const Objective& f, const Vector& p, int k);

/// Levenberg-Marquardt on |grad f|^2; returns a point with small gradient or nullopt.
std::optional<Vector> saddle_search(const Objective& f, const Vector& start, int max_iterations = 200);

// ---------------------------------------------------------------- auxiliary Morse functions

/// h(p) = <c, ambient(p)> restricted to a critical manifold.
struct MorseFunction {
  Vector coefficients;

  double value(const Objective& f, const Vector& p) const { return coefficients.dot(f.ambient(p)); }
  /// Gradient in trivialized coordinates (unprojected).
  Vector gradient(const Objective& f, const Vector& p) const {
    return f.ambient_jacobian(p).transpose() * coefficients;
  }
};

MorseFunction choose_h(const Objective& f, std::mt19937_64& rng);

struct HCriticalPoint {
  int manifold = 0;
  Vector point;
  int ind_f = 0;
  int ind_h = 0;
  int Ind = 0;
  double h_value = 0.0;
  double grad_norm = 0.0;
  Vector h_eigenvalues;
  Matrix unstable;  // coord_dim x ind_h, orthonormal
  Matrix stable;    // coord_dim x (dim - ind_h)
};

class MorseFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HOptions {
  int starts = 0;           // 0: 12 * (dim + 1)
  double grad_tol = 1e-10;
  double nondegenerate = 1e-6;
  double dedupe = 1e-5;
  int attempts = 10;        // resampling budget for h
  double flow_step = 0.05;  // max coordinate step of the h-flow on C
  double flow_dt = 0.1;
  double snap = 1e-8;       // h-flow hands over to Newton below this C-gradient norm
};

/// h-critical points on C. Throws MorseFailure if h is degenerate on C.
std::vector<HCriticalPoint> h_critical_points(const Objective& f, const CriticalManifold& c, const MorseFunction& h,
                                              const HOptions& options, std::mt19937_64& rng);

/// Resamples h (at most options.attempts times) until h_critical_points succeeds.
std::pair<MorseFunction, std::vector<HCriticalPoint>> choose_morse_function(const Objective& f,
                                                                            const CriticalManifold& c,
                                                                            const HOptions& options,
                                                                            std::mt19937_64& rng);

struct HFlowResult {
  std::vector<Vector> points;
  std::vector<double> times;
  bool converged = false;
  Vector end;
};

using HFlowObserver = std::function<bool(const Vector& p)>;

/// Gradient flow of h on C (descending unless `ascend`); Heun steps with projection onto C.
HFlowResult h_flow(const Objective& f, const MorseFunction& h, const Vector& start, int dim, bool ascend,
                   const HOptions& options, double t_max = 200.0, const HFlowObserver& observer = nullptr);

// ---------------------------------------------------------------- cascades

struct CascadeParams {
  double eps_shoot = 1e-4;
  double delta_match = 1e-4;
  double eps_h = 1e-4;           // offset along h-unstable directions
  double rho = 0.2;              // flips staying this far from W^s_h(y) are discontinuities
  double param_tol = 1e-6;
  int sweep_samples = 64;
  int newton_starts = 24;
  FlowController flow;
  HOptions h;
};

struct CertifiedLine {
  std::string kind;  // "h-arc", "h-arc-backward", "sweep", "discrete", "newton"
  std::vector<double> parameters;
  double distance = 0.0;  // endpoint or matching distance certifying the line
  int cascades = 0;
};

struct CascadeCount {
  int parity = 0;
  int lines = 0;
  std::vector<CertifiedLine> certificates;
};

class UnresolvedCount : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CascadeContext {
  const Objective* f = nullptr;
  std::vector<CriticalManifold> manifolds;              // by id order
  std::map<int, MorseFunction> h;                       // per manifold id
  std::map<int, std::vector<HCriticalPoint>> points;    // per manifold id
  std::vector<int> excluded;                            // non-Morse-Bott manifold ids
};

/// Mod-2 count of cascade lines from x to y, Ind(x) = Ind(y) + 1.
CascadeCount enumerate_cascades(const CascadeContext& ctx, const HCriticalPoint& x, const HCriticalPoint& y,
                                const CascadeParams& params);

struct FamilyLine {
  double parameter = 0.0;
  double distance = 0.0;
};

/// Lines from a point manifold x down to y lying on an arc of shooting directions; used to exhibit
/// the one-parameter moduli family for Ind difference 2.
std::vector<FamilyLine> certified_family(const CascadeContext& ctx, const HCriticalPoint& x, const HCriticalPoint& y,
                                         const CascadeParams& params, int samples);

// ---------------------------------------------------------------- chain complex

struct Generator {
  int manifold = 0;
  int ind_f = 0;
  int ind_h = 0;
  int Ind = 0;
  std::uint64_t point_hash = 0;
};

using BitMatrix = std::vector<std::vector<std::uint8_t>>;  // rows x cols, entries 0/1

struct CascadeChainComplex {
  std::vector<Generator> generators;
  /// boundaries[k]: rows = generators of Ind k-1, cols = generators of Ind k (k >= 1).
  std::map<int, BitMatrix> boundaries;
  std::map<int, std::vector<int>> by_degree;  // generator indices per Ind
  /// Provenance per nonzero-or-computed entry: (k, row, col) -> certificates.
  std::map<std::tuple<int, int, int>, std::vector<CertifiedLine>> provenance;
  bool partial = false;
  int max_degree() const { return by_degree.empty() ? -1 : by_degree.rbegin()->first; }
};

class ChainNotVerified : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// counts[(i, j)] = parity for generators i (Ind k) -> j (Ind k-1).
CascadeChainComplex boundary_matrices(const std::vector<Generator>& generators,
                                      const std::map<std::pair<int, int>, int>& counts);

bool verify_chain(const CascadeChainComplex& cc);

int rank_mod2(BitMatrix m);
BitMatrix multiply_mod2(const BitMatrix& a, const BitMatrix& b, int a_cols);

std::vector<int> homology(const CascadeChainComplex& cc);

std::uint64_t point_hash(const Vector& p);

}  // namespace ymmb
