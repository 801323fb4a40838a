#pragma once

#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ymmb {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Smooth function on a compact manifold, in the form the flow and cascade
/// engines consume.
///
/// Points are opaque coordinate vectors. Tangent vectors live in a global
/// trivialized coordinate space of size coord_dim(), orthonormal for the
/// metric; frame(p) spans the effective directions at p (coord_dim may
/// exceed manifold_dim when the trivialization has isotropy, e.g. rotation
/// generators on S^2).
class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::string name() const = 0;
  virtual int coord_dim() const = 0;
  virtual int manifold_dim() const = 0;

  /// coord_dim x manifold_dim, orthonormal columns.
  virtual Matrix frame(const Vector& p) const;

  virtual double value(const Vector& p) const = 0;
  /// Metric gradient in trivialized coordinates; lies in the span of frame(p).
  virtual Vector gradient(const Vector& p) const = 0;
  /// Second derivative of value(retract(p, frame(p) y)) at y = 0.
  virtual Matrix hessian(const Vector& p) const = 0;

  virtual Vector retract(const Vector& p, const Vector& v) const = 0;
  /// v with retract(p, v) = q for q near p.
  virtual Vector log_map(const Vector& p, const Vector& q) const = 0;
  virtual double distance(const Vector& p, const Vector& q) const { return log_map(p, q).norm(); }

  virtual Vector random_point(std::mt19937_64& rng) const = 0;

  /// Quantities constant along each critical component and separating components.
  virtual Vector fingerprint(const Vector& p) const = 0;

  /// Embedding used to define auxiliary Morse functions h = <c, ambient(p)>.
  virtual Vector ambient(const Vector& p) const = 0;
  /// ambient_dim x coord_dim derivative of ambient(retract(p, v)) at v = 0.
  virtual Matrix ambient_jacobian(const Vector& p) const = 0;

  /// Dimension of the symmetry orbit through p contained in the critical set.
  virtual int orbit_dimension(const Vector& /*p*/) const { return 0; }
  /// Points always tried as survey starts (e.g. the trivial connection).
  virtual std::vector<Vector> canonical_points() const { return {}; }

  /// Projects an arbitrary coordinate vector onto the effective directions.
  Vector project(const Vector& p, const Vector& v) const;
};

using ObjectivePtr = std::shared_ptr<const Objective>;

class InconsistentDerivatives : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DerivativeAudit {
  double gradient_error = 0.0;  // max over points of |grad - FD| / max(1, |grad|_inf)
  double hessian_error = 0.0;   // same for the Hessian against FD of the gradient
  double retraction_drift = 0.0;
  bool passed = false;
};

/// Central-difference audit at random points.
DerivativeAudit audit_derivatives(const Objective& f, int points, std::mt19937_64& rng, double gradient_tol = 1e-6,
                                  double hessian_tol = 1e-5);

/// Audits the callbacks and returns a shared handle; throws InconsistentDerivatives on failure.
ObjectivePtr register_objective(std::shared_ptr<Objective> f, std::uint64_t seed = 7);

}  // namespace ymmb
