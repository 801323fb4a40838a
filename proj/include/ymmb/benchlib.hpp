#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "ymmb/objective.hpp"

namespace ymmb {

enum class Constraint { UnitSphere, TorusProduct, None };

/// f = lambda rho_k(|a - c|^2) <a - c, eta> in ambient coordinates a.
struct AmbientBump {
  Vector center;
  Vector eta;
  int k = 1;
  double lambda = 0.0;

  double support_radius() const { return 2.0 / k; }
  double value(const Vector& a) const;
  Vector gradient(const Vector& a) const;
};

/// Function of ambient coordinates, restricted to a constraint manifold.
///
/// UnitSphere: points and ambient coordinates are unit 3-vectors, tangent
/// coordinates are rotation generators (coord_dim 3, manifold_dim 2).
/// TorusProduct: points are angles (theta_1..theta_n), ambient coordinates
/// (cos theta_1, sin theta_1, ...). None: points are ambient coordinates.
class EmbeddedObjective : public Objective {
 public:
  struct Ambient {
    std::function<double(const Vector&)> value;
    std::function<Vector(const Vector&)> gradient;
    std::function<Matrix(const Vector&)> hessian;
  };

  EmbeddedObjective(std::string name, Constraint constraint, int dimension, Ambient f,
                    std::function<Vector(const Vector& ambient, double value)> fingerprint);

  std::string name() const override { return name_; }
  int coord_dim() const override;
  int manifold_dim() const override;
  Matrix frame(const Vector& p) const override;

  double value(const Vector& p) const override;
  Vector gradient(const Vector& p) const override;
  Matrix hessian(const Vector& p) const override;
  Vector retract(const Vector& p, const Vector& v) const override;
  Vector log_map(const Vector& p, const Vector& q) const override;
  Vector random_point(std::mt19937_64& rng) const override;
  Vector fingerprint(const Vector& p) const override;
  Vector ambient(const Vector& p) const override;
  Matrix ambient_jacobian(const Vector& p) const override;

  Constraint constraint() const { return constraint_; }

  void add_perturbation(AmbientBump bump) { bumps_.push_back(std::move(bump)); }
  const std::vector<AmbientBump>& perturbations() const { return bumps_; }

  /// Known Betti numbers over Z/2, when the benchmark has them.
  std::optional<std::vector<int>> reference_betti;

 private:
  double ambient_value(const Vector& a) const;
  Vector ambient_gradient(const Vector& a) const;
  Matrix ambient_hessian(const Vector& a) const;

  std::string name_;
  Constraint constraint_;
  int dimension_;  // sphere: 3 (ambient), torus: number of angles, none: ambient dim
  Ambient f_;
  std::function<Vector(const Vector&, double)> fingerprint_;
  std::vector<AmbientBump> bumps_;
};

/// f = z^2 on S^2: equator (min, dim 1) and the poles (max, ind 2). Betti (1, 0, 1).
std::shared_ptr<EmbeddedObjective> sphere_z2();

/// f = 1 - cos(theta) on T^2: circles theta = 0 (min) and theta = pi (ind 1). Betti (1, 2, 1).
std::shared_ptr<EmbeddedObjective> torus_product_example();

/// True iff every bump with lambda != 0 stays farther than 2/k + epsilon (ambient distance)
/// from every critical representative.
bool bumps_admissible(const EmbeddedObjective& f, const std::vector<Vector>& critical_points, double epsilon);

/// Random bump with center at a random point whose ambient distance to every
/// listed critical point exceeds 2/k + epsilon.
AmbientBump random_admissible_bump(const EmbeddedObjective& f, const std::vector<Vector>& critical_points, int k,
                                   double lambda, double epsilon, std::mt19937_64& rng);

}  // namespace ymmb
