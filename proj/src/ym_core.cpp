#include "ymmb/ym_core.hpp"

#include <cmath>
#include <stdexcept>

#include "ymmb/perturbation.hpp"

namespace ymmb {

Connection Connection::trivial(std::shared_ptr<const OrientedCellComplex> complex, const LieGroup& group) {
  Connection c;
  c.group = group;
  c.edges.assign(complex->edges.size(), GroupElement::Identity());
  c.complex = std::move(complex);
  return c;
}

double TangentField::norm(const std::vector<double>& edge_weights) const {
  double s = 0.0;
  for (std::size_t e = 0; e < values.size(); ++e) s += edge_weights[e] * values[e].squaredNorm();
  return std::sqrt(s);
}

double TangentField::max_abs() const {
  double m = 0.0;
  for (const auto& v : values) m = std::max(m, v.cwiseAbs().maxCoeff());
  return m;
}

bool GaugeTransform::based(int base_vertex, double tol) const {
  return LieGroup::angle(vertices.at(base_vertex)) <= tol;
}

std::string to_string(EnergyBackend backend) { return backend == EnergyBackend::Wilson ? "wilson" : "lognorm"; }

EnergyBackend energy_backend_from_string(const std::string& name) {
  if (name == "wilson") return EnergyBackend::Wilson;
  if (name == "lognorm") return EnergyBackend::LogNorm;
  throw std::invalid_argument("unknown backend '" + name + "' (expected wilson or lognorm)");
}

namespace {

GroupElement factor(const Connection& conn, const SignedEdge& s) {
  const GroupElement& u = conn.edges[s.edge];
  return s.sign > 0 ? u : u.conjugate();
}

// Per-face energy density phi(P0), with P0 = Re tr(P) / 2 = cos(angle).
struct FaceDensity {
  double value;
  double d1;  // d phi / d P0
  double d2;  // d^2 phi / d P0^2
};

FaceDensity face_density(EnergyBackend backend, const GroupElement& hol) {
  if (backend == EnergyBackend::Wilson) return {2.0 * (1.0 - hol.w()), -2.0, 0.0};
  // phi = theta^2 / 2 with cos(theta) = P0.
  const double theta = LieGroup::angle(hol);
  const double s = std::sin(theta);
  double d1, d2;
  if (theta < 1e-3) {
    const double t2 = theta * theta;
    d1 = -(1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0);
    d2 = 1.0 / 3.0 + 2.0 * t2 / 15.0;
  } else {
    d1 = -theta / s;
    d2 = (s - theta * std::cos(theta)) / (s * s * s);
  }
  return {0.5 * theta * theta, d1, d2};
}

// Prefix/suffix data for a face word: P = lambda_k rho_k, where the
// right-translated variation of occurrence k is inserted between them.
struct Occurrence {
  int edge;
  int sign;
  GroupElement lambda;
  GroupElement rho;
};

std::vector<Occurrence> occurrences(const Connection& conn, const Face& face) {
  const std::size_t n = face.word.size();
  std::vector<GroupElement> prefix(n + 1, GroupElement::Identity());
  for (std::size_t k = 0; k < n; ++k) prefix[k + 1] = prefix[k] * factor(conn, face.word[k]);
  std::vector<GroupElement> suffix(n + 1, GroupElement::Identity());
  for (std::size_t k = n; k-- > 0;) suffix[k] = factor(conn, face.word[k]) * suffix[k + 1];
  std::vector<Occurrence> occ;
  occ.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& s = face.word[k];
    if (s.sign > 0) {
      occ.push_back({s.edge, 1, prefix[k + 1], suffix[k + 1]});
    } else {
      occ.push_back({s.edge, -1, prefix[k], suffix[k]});
    }
  }
  return occ;
}

double re(const GroupElement& q) { return q.w(); }

}  // namespace

GroupElement holonomy(const Connection& conn, int face) {
  GroupElement p = GroupElement::Identity();
  for (const auto& s : conn.complex->faces.at(face).word) p = p * factor(conn, s);
  p.normalize();
  return p;
}

AlgebraElement curvature(const Connection& conn, int face) { return conn.group.log(holonomy(conn, face)); }

EnergyEvaluation evaluate_energy(const Connection& conn, EnergyBackend backend) {
  EnergyEvaluation out;
  const auto& cx = *conn.complex;
  for (std::size_t f = 0; f < cx.faces.size(); ++f) {
    const GroupElement hol = holonomy(conn, static_cast<int>(f));
    if (backend == EnergyBackend::LogNorm && conn.group.near_cut_locus(hol)) out.cut_locus = true;
    out.value += face_density(backend, hol).value / cx.face_weights[f];
  }
  return out;
}

double energy(const Connection& conn, EnergyBackend backend, const PerturbationBank* bank) {
  const EnergyEvaluation ev = evaluate_energy(conn, backend);
  if (ev.cut_locus) {
    for (std::size_t f = 0; f < conn.complex->faces.size(); ++f) {
      const GroupElement hol = holonomy(conn, static_cast<int>(f));
      if (conn.group.near_cut_locus(hol)) {
        throw CutLocusError(hol, "LogNorm energy: face " + std::to_string(f) + " holonomy at the cut locus");
      }
    }
  }
  double v = ev.value;
  if (bank != nullptr) v += bank->value(conn);
  return v;
}

Connection apply_gauge(const Connection& conn, const GaugeTransform& gauge) {
  Connection out = conn;
  const auto& cx = *conn.complex;
  for (std::size_t e = 0; e < cx.edges.size(); ++e) {
    out.edges[e] = conn.group.multiply(gauge.vertices[cx.edges[e].source].conjugate() * conn.edges[e],
                                       gauge.vertices[cx.edges[e].target]);
  }
  return out;
}

GaugeFixResult tree_gauge_fix(const Connection& conn, const SpanningTree& tree) {
  const auto& cx = *conn.complex;
  GaugeTransform g = GaugeTransform::identity(cx.vertex_count);
  for (int v : tree.bfs_order) {
    const int e = tree.parent_edge[v];
    if (e < 0) continue;
    const Edge& edge = cx.edges[e];
    if (edge.target == v) {
      // g_s^{-1} U g_t = 1  =>  g_t = U^{-1} g_s
      g.vertices[v] = conn.group.multiply(conn.edges[e].conjugate(), g.vertices[edge.source]);
    } else {
      // g_v^{-1} U g_t = 1  =>  g_v = U g_t
      g.vertices[v] = conn.group.multiply(conn.edges[e], g.vertices[edge.target]);
    }
  }
  GaugeFixResult out{apply_gauge(conn, g), g};
  for (int e : tree.tree_edges) out.connection.edges[e] = GroupElement::Identity();
  return out;
}

TangentField full_gradient(const Connection& conn, EnergyBackend backend) {
  const auto& cx = *conn.complex;
  const int d = conn.group.dim();
  TangentField grad = TangentField::zeros(cx.edges.size());
  for (std::size_t f = 0; f < cx.faces.size(); ++f) {
    const GroupElement hol = holonomy(conn, static_cast<int>(f));
    const double scale = face_density(backend, hol).d1 / cx.face_weights[f];
    for (const auto& o : occurrences(conn, cx.faces[f])) {
      // d P0 along e_i at this occurrence = sign * Re(e_i Q), Q = rho lambda.
      const GroupElement q = o.rho * o.lambda;
      for (int i = 0; i < d; ++i) grad.values[o.edge][i] += scale * o.sign * (-q.vec()[i]);
    }
  }
  for (std::size_t e = 0; e < cx.edges.size(); ++e) grad.values[e] /= cx.edge_weights[e];
  return grad;
}

TangentField gradient(const Connection& conn, EnergyBackend backend, const PerturbationBank* bank,
                      const SpanningTree& tree) {
  if (backend == EnergyBackend::LogNorm) (void)energy(conn, backend, nullptr);  // cut-locus gate
  TangentField g = full_gradient(conn, backend);
  if (bank != nullptr && !bank->empty()) {
    const TangentField gv = bank->gradient(conn, tree);
    for (std::size_t e = 0; e < g.values.size(); ++e) g.values[e] += gv.values[e];
  }
  for (int e : tree.tree_edges) {
    g.values[e].setZero();
    g.active[e] = false;
  }
  return g;
}

Eigen::MatrixXd hessian_matrix(const Connection& conn, EnergyBackend backend, const PerturbationBank* bank,
                               const SpanningTree& tree) {
  if (backend == EnergyBackend::LogNorm) (void)energy(conn, backend, nullptr);
  const auto& cx = *conn.complex;
  const int d = conn.group.dim();
  std::vector<int> slot(cx.edges.size(), -1);
  for (std::size_t k = 0; k < tree.free_edges.size(); ++k) slot[tree.free_edges[k]] = static_cast<int>(k);
  const int n = static_cast<int>(tree.free_edges.size()) * d;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);

  for (std::size_t f = 0; f < cx.faces.size(); ++f) {
    const GroupElement hol = holonomy(conn, static_cast<int>(f));
    const FaceDensity dens = face_density(backend, hol);
    const double inv_w = 1.0 / cx.face_weights[f];
    const auto occ = occurrences(conn, cx.faces[f]);

    // First derivatives of P0 over the free coordinates of this face.
    Eigen::VectorXd dp = Eigen::VectorXd::Zero(n);
    for (const auto& o : occ) {
      if (slot[o.edge] < 0) continue;
      const GroupElement q = o.rho * o.lambda;
      for (int i = 0; i < d; ++i) dp[slot[o.edge] * d + i] += o.sign * (-q.vec()[i]);
    }
    // Second derivatives of P0.
    Eigen::MatrixXd ddp = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t k = 0; k < occ.size(); ++k) {
      const int sk = slot[occ[k].edge];
      if (sk < 0) continue;
      for (int i = 0; i < d; ++i) ddp(sk * d + i, sk * d + i) -= hol.w();
      for (std::size_t l = k + 1; l < occ.size(); ++l) {
        const int sl = slot[occ[l].edge];
        if (sl < 0) continue;
        const GroupElement mu = occ[k].lambda.conjugate() * occ[l].lambda;
        const GroupElement nu = occ[l].rho * occ[k].lambda;
        for (int i = 0; i < d; ++i) {
          for (int j = 0; j < d; ++j) {
            const double v = occ[k].sign * occ[l].sign *
                             re(pure(LieGroup::basis(i)) * mu * pure(LieGroup::basis(j)) * nu);
            ddp(sk * d + i, sl * d + j) += v;
            ddp(sl * d + j, sk * d + i) += v;
          }
        }
      }
    }
    h += inv_w * (dens.d2 * dp * dp.transpose() + dens.d1 * ddp);
  }

  if (bank != nullptr && !bank->empty()) h += bank->hessian(conn, tree);
  return 0.5 * (h + h.transpose());
}

int stabilizer_dimension(const Connection& conn, double threshold) {
  const int d = conn.group.dim();
  const int ne = static_cast<int>(conn.edges.size());
  if (ne == 0) return d;
  Eigen::MatrixXd stacked(ne * d, d);
  for (int e = 0; e < ne; ++e) {
    stacked.block(e * d, 0, d, d) = Eigen::MatrixXd::Identity(d, d) - conn.group.ad_matrix(conn.edges[e]);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked);
  int kernel = 0;
  for (int i = 0; i < d; ++i)
    if (svd.singularValues()[i] < threshold) ++kernel;
  return kernel;
}

Connection retract(const Connection& conn, const TangentField& xi) {
  Connection out = conn;
  for (std::size_t e = 0; e < conn.edges.size(); ++e) {
    if (!xi.active.empty() && !xi.active[e]) continue;
    if (xi.values[e].isZero(0.0)) continue;
    out.edges[e] = conn.group.multiply(conn.edges[e], conn.group.exp(xi.values[e]));
  }
  return out;
}

}  // namespace ymmb
