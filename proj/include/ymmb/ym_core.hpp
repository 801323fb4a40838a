#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ymmb/lie_group.hpp"
#include "ymmb/surface_complex.hpp"

namespace ymmb {

class PerturbationBank;

/// Group-valued edge field U_e.
struct Connection {
  std::shared_ptr<const OrientedCellComplex> complex;
  LieGroup group{GroupKind::SU2};
  std::vector<GroupElement> edges;

  static Connection trivial(std::shared_ptr<const OrientedCellComplex> complex, const LieGroup& group);

  template <class Rng>
  static Connection random(std::shared_ptr<const OrientedCellComplex> complex, const LieGroup& group, Rng& rng) {
    Connection c = trivial(std::move(complex), group);
    for (auto& u : c.edges) u = group.haar_sample(rng);
    return c;
  }
};

/// Lie-algebra valued edge field. Inactive (tree) edges hold zero.
struct TangentField {
  std::vector<AlgebraElement> values;
  std::vector<bool> active;

  static TangentField zeros(std::size_t edge_count) {
    return {std::vector<AlgebraElement>(edge_count, AlgebraElement::Zero()), std::vector<bool>(edge_count, true)};
  }
  /// Weighted norm sqrt(sum_e w_e <xi_e, xi_e>).
  double norm(const std::vector<double>& edge_weights) const;
  double max_abs() const;
};

struct GaugeTransform {
  std::vector<GroupElement> vertices;

  static GaugeTransform identity(int vertex_count) {
    return {std::vector<GroupElement>(vertex_count, GroupElement::Identity())};
  }
  bool based(int base_vertex, double tol = 1e-12) const;
};

enum class EnergyBackend { Wilson, LogNorm };

std::string to_string(EnergyBackend backend);
EnergyBackend energy_backend_from_string(const std::string& name);

GroupElement holonomy(const Connection& conn, int face);
AlgebraElement curvature(const Connection& conn, int face);

struct EnergyEvaluation {
  double value = 0.0;
  /// LogNorm only: some face holonomy sits within the cut margin. The value
  /// then uses the rotation angle, which is pi at the cut locus.
  bool cut_locus = false;
};

/// Unperturbed energy, never throws.
EnergyEvaluation evaluate_energy(const Connection& conn, EnergyBackend backend);

/// YM^V = E + V. Throws CutLocusError for LogNorm at a cut locus.
double energy(const Connection& conn, EnergyBackend backend, const PerturbationBank* bank = nullptr);

Connection apply_gauge(const Connection& conn, const GaugeTransform& gauge);

struct GaugeFixResult {
  Connection connection;
  GaugeTransform gauge;
};

/// Based gauge making every tree edge the identity.
GaugeFixResult tree_gauge_fix(const Connection& conn, const SpanningTree& tree);

/// Metric gradient on every edge: <grad_e, X> w_e = d/dt E(U_e -> U_e exp(tX)).
TangentField full_gradient(const Connection& conn, EnergyBackend backend);

/// Gradient of YM^V on the gauge-fixed manifold; zero on tree edges.
TangentField gradient(const Connection& conn, EnergyBackend backend, const PerturbationBank* bank,
                      const SpanningTree& tree);

/// Second derivatives of YM^V in the basis (free edge slot, algebra basis
/// vector), index slot * dim G + i, under right-translated variations.
Eigen::MatrixXd hessian_matrix(const Connection& conn, EnergyBackend backend, const PerturbationBank* bank,
                               const SpanningTree& tree);

/// Dimension of {X : ad(U_e) X = X for every edge}.
int stabilizer_dimension(const Connection& conn, double threshold = 1e-8);

/// Right-translates the free edges: U_e <- U_e exp(xi_e).
Connection retract(const Connection& conn, const TangentField& xi);

}  // namespace ymmb
