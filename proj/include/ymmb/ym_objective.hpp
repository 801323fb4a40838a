#pragma once

#include <memory>

#include "ymmb/objective.hpp"
#include "ymmb/perturbation.hpp"
#include "ymmb/ym_core.hpp"

namespace ymmb {

/// YM^V on the tree-gauged configuration space G^{free edges}.
///
/// Points store all edge quaternions (w, x, y, z) in edge order, tree edges
/// at the identity. Coordinates are sqrt(w_e)-scaled algebra components of
/// right-translated variations on free edges, so the coordinate metric is the
/// weighted edge metric.
class YMObjective : public Objective {
 public:
  YMObjective(std::shared_ptr<const OrientedCellComplex> complex, LieGroup group, EnergyBackend backend,
              std::shared_ptr<const PerturbationBank> bank = nullptr);

  std::string name() const override;
  int coord_dim() const override { return static_cast<int>(tree_.free_edges.size()) * group_.dim(); }
  int manifold_dim() const override { return coord_dim(); }

  double value(const Vector& p) const override;
  Vector gradient(const Vector& p) const override;
  Matrix hessian(const Vector& p) const override;
  Vector retract(const Vector& p, const Vector& v) const override;
  Vector log_map(const Vector& p, const Vector& q) const override;
  Vector random_point(std::mt19937_64& rng) const override;
  Vector fingerprint(const Vector& p) const override;
  Vector ambient(const Vector& p) const override;
  Matrix ambient_jacobian(const Vector& p) const override;
  int orbit_dimension(const Vector& p) const override;
  std::vector<Vector> canonical_points() const override;

  Connection connection(const Vector& p) const;
  /// Tree-gauges the connection first.
  Vector point(const Connection& c) const;
  TangentField tangent(const Vector& v) const;
  Vector coords(const TangentField& xi) const;

  const std::shared_ptr<const OrientedCellComplex>& complex() const { return complex_; }
  const LieGroup& group() const { return group_; }
  EnergyBackend backend() const { return backend_; }
  const SpanningTree& tree() const { return tree_; }
  const PerturbationBank* bank() const { return bank_.get(); }
  std::shared_ptr<const PerturbationBank> bank_ptr() const { return bank_; }

 private:
  std::shared_ptr<const OrientedCellComplex> complex_;
  LieGroup group_;
  EnergyBackend backend_;
  std::shared_ptr<const PerturbationBank> bank_;
  SpanningTree tree_;
  std::vector<double> sqrt_w_;  // per free-edge slot
};

}  // namespace ymmb
