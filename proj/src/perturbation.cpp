#include "ymmb/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ymmb {

namespace {

double psi(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }

double psi_prime(double t) { return t > 0.0 ? std::exp(-1.0 / t) / (t * t) : 0.0; }

// Exponential smoothstep on [0, 1].
double smoothstep(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = psi(t);
  const double b = psi(1.0 - t);
  return a / (a + b);
}

double smoothstep_prime(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const double a = psi(t);
  const double b = psi(1.0 - t);
  const double da = psi_prime(t);
  const double db = -psi_prime(1.0 - t);
  return (da * (a + b) - a * (da + db)) / ((a + b) * (a + b));
}

Eigen::Matrix3d cross_matrix(const Eigen::Vector3d& x) {
  Eigen::Matrix3d m;
  m << 0, -x[2], x[1], x[2], 0, -x[0], -x[1], x[0], 0;
  return m;
}

// d(kappa)/d(theta) / theta for kappa = (1 - theta cot theta) / theta^2.
double dlog_coefficient_rate(double theta) {
  if (theta < 1e-2) {
    const double t2 = theta * theta;
    return 2.0 / 45.0 + 8.0 * t2 / 945.0 + 2.0 * t2 * t2 / 1575.0;
  }
  const double s = std::sin(theta);
  const double num = 1.0 - theta * std::cos(theta) / s;
  const double dnum = -std::cos(theta) / s + theta / (s * s);
  const double dk = dnum / (theta * theta) - 2.0 * num / (theta * theta * theta);
  return dk / theta;
}

// Directional derivative of the SU(2) log Jacobians at alpha along delta.
// sign = +1 for the right Jacobian, -1 for the left one.
Eigen::Matrix3d dlog_jacobian_derivative(const Eigen::Vector3d& alpha, const Eigen::Vector3d& delta, double sign) {
  const Eigen::Matrix3d k = cross_matrix(alpha);
  const Eigen::Matrix3d dk = cross_matrix(delta);
  const double theta = alpha.norm();
  return sign * dk + dlog_coefficient_rate(theta) * alpha.dot(delta) * k * k +
         dlog_coefficient(theta) * (dk * k + k * dk);
}

// Per-free-edge slice data at a fixed conjugation c.
struct EdgeSlice {
  Eigen::VectorXd alpha;  // dim d
  Eigen::MatrixXd jr;     // dlog_right(alpha)
  Eigen::MatrixXd jl;     // dlog_left(alpha)
  Eigen::MatrixXd ad;     // X -> U^{-1} X U
  Eigen::MatrixXd g;      // d alpha / d Z
  double w;
};

struct SliceState {
  std::vector<EdgeSlice> edges;
  double d_value = 0.0;          // sum w |alpha|^2
  Eigen::VectorXd optimality;    // F = sum w G^T alpha
  bool in_domain = true;
};

SliceState slice_state(const Connection& a, const Connection& ref, const SpanningTree& tree,
                       const GroupElement& c) {
  const LieGroup& grp = a.group;
  const int d = grp.dim();
  SliceState st;
  st.optimality = Eigen::VectorXd::Zero(d);
  for (int e : tree.free_edges) {
    const GroupElement w_e = c.conjugate() * ref.edges[e] * c;
    GroupElement m = w_e.conjugate() * a.edges[e];
    m.normalize();
    if (grp.near_cut_locus(m)) {
      st.in_domain = false;
      return st;
    }
    EdgeSlice es;
    const AlgebraElement al = grp.log(m);
    es.alpha = al.head(d);
    es.jr = grp.dlog_right(al);
    es.jl = grp.dlog_left(al);
    es.ad = grp.ad_matrix(a.edges[e]);
    es.g = es.jr * es.ad - es.jl;
    es.w = a.complex->edge_weights[e];
    st.d_value += es.w * es.alpha.squaredNorm();
    st.optimality += es.w * es.g.transpose() * es.alpha;
    st.edges.push_back(std::move(es));
  }
  return st;
}

Eigen::Vector3d embed(const Eigen::VectorXd& v) {
  Eigen::Vector3d out = Eigen::Vector3d::Zero();
  out.head(v.size()) = v;
  return out;
}

// dF for a combined variation (dZ, xi), xi indexed by free-edge slot.
Eigen::VectorXd optimality_derivative(const SliceState& st, const LieGroup& grp, const Eigen::VectorXd& dz,
                                      const std::vector<Eigen::VectorXd>& xi) {
  const int d = grp.dim();
  Eigen::VectorXd df = Eigen::VectorXd::Zero(d);
  for (std::size_t s = 0; s < st.edges.size(); ++s) {
    const EdgeSlice& es = st.edges[s];
    const Eigen::VectorXd dalpha = es.g * dz + es.jr * xi[s];
    Eigen::MatrixXd dg;
    if (grp.abelian()) {
      dg = Eigen::MatrixXd::Zero(1, 1);
    } else {
      const Eigen::Vector3d a3 = embed(es.alpha);
      const Eigen::Vector3d da3 = embed(dalpha);
      const Eigen::Matrix3d djr = dlog_jacobian_derivative(a3, da3, 1.0);
      const Eigen::Matrix3d djl = dlog_jacobian_derivative(a3, da3, -1.0);
      const Eigen::Matrix3d dad = -2.0 * cross_matrix(embed(xi[s])) * es.ad;
      dg = djr * es.ad + es.jr * dad - djl;
    }
    df += es.w * (dg.transpose() * es.alpha + es.g.transpose() * dalpha);
  }
  return df;
}

Eigen::MatrixXd optimality_jacobian_z(const SliceState& st, const LieGroup& grp) {
  const int d = grp.dim();
  Eigen::MatrixXd a(d, d);
  const std::vector<Eigen::VectorXd> zero_xi(st.edges.size(), Eigen::VectorXd::Zero(d));
  for (int j = 0; j < d; ++j) a.col(j) = optimality_derivative(st, grp, Eigen::VectorXd::Unit(d, j), zero_xi);
  return a;
}

struct SliceSolve {
  GroupElement c;
  SliceState state;
  double residual;
  bool converged;
};

SliceSolve minimize_orbit_distance(const Connection& a, const Connection& ref, const SpanningTree& tree,
                                   GroupElement c) {
  const LieGroup& grp = a.group;
  SliceState st = slice_state(a, ref, tree, c);
  if (!st.in_domain) return {c, st, std::numeric_limits<double>::infinity(), false};
  if (grp.abelian()) return {c, st, 0.0, true};
  // Polish well past the acceptance tolerance; the pairing inherits the residual.
  constexpr double kTol = 1e-8;
  constexpr double kPolish = 1e-13;
  for (int it = 0; it < 200; ++it) {
    const double residual = 2.0 * st.optimality.norm();
    if (residual <= kPolish) return {c, st, residual, true};
    const Eigen::MatrixXd jac = optimality_jacobian_z(st, grp);
    Eigen::Vector3d step = embed(-jac.fullPivLu().solve(st.optimality));
    if (!step.allFinite() || step.dot(embed(st.optimality)) >= 0.0) step = -embed(st.optimality);
    if (step.norm() > 0.5) step *= 0.5 / step.norm();
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      const GroupElement trial = grp.multiply(c, grp.exp(t * step));
      SliceState trial_state = slice_state(a, ref, tree, trial);
      if (trial_state.in_domain && trial_state.d_value <= st.d_value + 1e-14 * (1.0 + st.d_value)) {
        c = trial;
        st = std::move(trial_state);
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
  }
  const double residual = 2.0 * st.optimality.norm();
  return {c, st, residual, residual <= kTol};
}

// Hurwitz units modulo sign: twelve rotations spread over SO(3).
std::vector<GroupElement> conjugation_starts() {
  std::vector<GroupElement> s{GroupElement(1, 0, 0, 0), GroupElement(0, 1, 0, 0), GroupElement(0, 0, 1, 0),
                              GroupElement(0, 0, 0, 1)};
  for (int sx : {1, -1})
    for (int sy : {1, -1})
      for (int sz : {1, -1}) s.emplace_back(0.5, 0.5 * sx, 0.5 * sy, 0.5 * sz);
  return s;
}

SliceSolve best_slice(const Connection& a, const Connection& ref, const SpanningTree& tree) {
  if (a.group.abelian()) return minimize_orbit_distance(a, ref, tree, GroupElement::Identity());
  SliceSolve best{GroupElement::Identity(), {}, std::numeric_limits<double>::infinity(), false};
  best.state.d_value = std::numeric_limits<double>::infinity();
  for (const auto& start : conjugation_starts()) {
    SliceSolve s = minimize_orbit_distance(a, ref, tree, start);
    if (!s.converged) continue;
    if (!best.converged || s.state.d_value < best.state.d_value - 1e-12) best = std::move(s);
  }
  return best;
}

double weighted_inner(const SliceState& st, const std::vector<Eigen::VectorXd>& eta) {
  double s = 0.0;
  for (std::size_t k = 0; k < st.edges.size(); ++k) s += st.edges[k].w * st.edges[k].alpha.dot(eta[k]);
  return s;
}

// eta carried into the frame of alpha: ad(c, eta_e), so the pairing is conjugation invariant.
std::vector<Eigen::VectorXd> transported(const TangentField& eta, const SpanningTree& tree, const GroupElement& c,
                                         int d) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(tree.free_edges.size());
  for (int e : tree.free_edges) out.push_back(LieGroup::ad(c, eta.values[e]).head(d));
  return out;
}

}  // namespace

double bump(double x) {
  const double ax = std::abs(x);
  if (ax <= 1.0) return 1.0;
  if (ax >= 4.0) return 0.0;
  return 1.0 - smoothstep((ax - 1.0) / 3.0);
}

double bump_prime(double x) {
  const double ax = std::abs(x);
  if (ax <= 1.0 || ax >= 4.0) return 0.0;
  const double d = -smoothstep_prime((ax - 1.0) / 3.0) / 3.0;
  return x < 0.0 ? -d : d;
}

double cutoff(double r, int k) { return bump(static_cast<double>(k) * k * r); }

double cutoff_prime(double r, int k) {
  const double k2 = static_cast<double>(k) * k;
  return k2 * bump_prime(k2 * r);
}

double SliceCoordinates::distance() const { return std::sqrt(norm_sq); }

SliceCoordinates slice_coordinates(const Connection& a, const Connection& reference, const SpanningTree& tree) {
  const SliceSolve s = best_slice(a, reference, tree);
  if (!s.converged) throw NotInDomainError("slice coordinates: orbit-distance minimizer failed or hit a cut locus");
  SliceCoordinates out;
  out.alpha = TangentField::zeros(a.edges.size());
  for (int e : tree.tree_edges) out.alpha.active[e] = false;
  for (std::size_t k = 0; k < tree.free_edges.size(); ++k) out.alpha.values[tree.free_edges[k]] = embed(s.state.edges[k].alpha);
  out.c = s.c;
  out.residual = s.residual;
  out.norm_sq = s.state.d_value;
  return out;
}

TangentField orbit_orthogonal(const Connection& reference, const TangentField& eta, const SpanningTree& tree) {
  const LieGroup& grp = reference.group;
  const int d = grp.dim();
  const auto& w = reference.complex->edge_weights;
  TangentField out = TangentField::zeros(reference.edges.size());
  for (int e : tree.tree_edges) out.active[e] = false;
  for (int e : tree.free_edges) out.values[e] = grp.project(eta.values[e]);
  if (grp.abelian()) return out;
  // Orbit direction of Z: Z - ad(U0_e, Z) on each free edge. Gram-Schmidt in the weighted metric.
  std::vector<TangentField> basis;
  auto inner = [&](const TangentField& x, const TangentField& y) {
    double s = 0.0;
    for (int e : tree.free_edges) s += w[e] * x.values[e].dot(y.values[e]);
    return s;
  };
  for (int j = 0; j < d; ++j) {
    TangentField o = TangentField::zeros(reference.edges.size());
    for (int e : tree.free_edges) o.values[e] = LieGroup::basis(j) - LieGroup::ad(reference.edges[e], LieGroup::basis(j));
    for (const auto& b : basis) {
      const double p = inner(o, b);
      for (int e : tree.free_edges) o.values[e] -= p * b.values[e];
    }
    const double n = std::sqrt(inner(o, o));
    if (n < 1e-10) continue;
    for (int e : tree.free_edges) o.values[e] /= n;
    basis.push_back(o);
  }
  for (const auto& b : basis) {
    const double p = inner(out, b);
    for (int e : tree.free_edges) out.values[e] -= p * b.values[e];
  }
  return out;
}

ModelPerturbation make_model_perturbation(const Connection& reference, const TangentField& eta_raw, int k,
                                          const SpanningTree& tree) {
  if (k < 1) throw std::invalid_argument("model perturbation: cutoff index k must be positive");
  ModelPerturbation m;
  m.reference = reference;
  m.eta = orbit_orthogonal(reference, eta_raw, tree);
  m.k = k;
  return m;
}

double term_value(const ModelPerturbation& term, const Connection& a, const SpanningTree& tree) {
  const SliceSolve s = best_slice(a, term.reference, tree);
  if (!s.converged) throw NotInDomainError("model perturbation outside slice chart");
  const double r = s.state.d_value;
  const double rho = cutoff(r, term.k);
  if (rho == 0.0) return 0.0;
  return rho * weighted_inner(s.state, transported(term.eta, tree, s.c, a.group.dim()));
}

TangentField term_gradient(const ModelPerturbation& term, const Connection& a, const SpanningTree& tree) {
  const LieGroup& grp = a.group;
  const int d = grp.dim();
  TangentField out = TangentField::zeros(a.edges.size());
  for (int e : tree.tree_edges) out.active[e] = false;
  const SliceSolve s = best_slice(a, term.reference, tree);
  if (!s.converged) throw NotInDomainError("model perturbation outside slice chart");
  const SliceState& st = s.state;
  const double r = st.d_value;
  const double rho = cutoff(r, term.k);
  const double drho = cutoff_prime(r, term.k);
  if (rho == 0.0 && drho == 0.0) return out;

  const std::vector<Eigen::VectorXd> eta = transported(term.eta, tree, s.c, d);
  const double pairing = weighted_inner(st, eta);
  const std::size_t nf = st.edges.size();
  // dV = sum_e w_e <beta_e, d alpha_e>.
  std::vector<Eigen::VectorXd> beta(nf);
  for (std::size_t k = 0; k < nf; ++k) beta[k] = 2.0 * drho * pairing * st.edges[k].alpha + rho * eta[k];

  std::vector<Eigen::VectorXd> dv(nf);
  for (std::size_t k = 0; k < nf; ++k) dv[k] = st.edges[k].w * st.edges[k].jr.transpose() * beta[k];

  if (!grp.abelian()) {
    // Implicit differentiation of the minimizer: A dZ + B xi = 0.
    Eigen::VectorXd gamma = Eigen::VectorXd::Zero(d);
    for (std::size_t k = 0; k < nf; ++k) {
      gamma += st.edges[k].w * st.edges[k].g.transpose() * beta[k];
      // d ad(c exp(Z), eta) = 2 ad(c, eta) x dZ
      gamma += 2.0 * rho * st.edges[k].w * Eigen::Vector3d(embed(st.edges[k].alpha).cross(embed(eta[k])));
    }
    const Eigen::MatrixXd amat = optimality_jacobian_z(st, grp);
    const Eigen::VectorXd lambda = amat.transpose().fullPivLu().solve(gamma);
    for (std::size_t k = 0; k < nf; ++k) {
      for (int j = 0; j < d; ++j) {
        std::vector<Eigen::VectorXd> xi(nf, Eigen::VectorXd::Zero(d));
        xi[k][j] = 1.0;
        const Eigen::VectorXd bcol = optimality_derivative(st, grp, Eigen::VectorXd::Zero(d), xi);
        dv[k][j] -= lambda.dot(bcol);
      }
    }
  }
  for (std::size_t k = 0; k < nf; ++k) {
    const int e = tree.free_edges[k];
    out.values[e] = embed(dv[k] / st.edges[k].w);
  }
  return out;
}

double PerturbationBank::value(const Connection& a) const {
  double v = 0.0;
  for (const auto& entry : entries_) {
    if (entry.lambda == 0.0) continue;
    try {
      v += entry.lambda * term_value(entry.term, a, tree_);
    } catch (const NotInDomainError&) {
      not_in_domain_->fetch_add(1);
    }
  }
  return v;
}

TangentField PerturbationBank::gradient(const Connection& a, const SpanningTree& tree) const {
  TangentField g = TangentField::zeros(a.edges.size());
  for (const auto& entry : entries_) {
    if (entry.lambda == 0.0) continue;
    try {
      const TangentField t = term_gradient(entry.term, a, tree);
      for (std::size_t e = 0; e < g.values.size(); ++e) g.values[e] += entry.lambda * t.values[e];
    } catch (const NotInDomainError&) {
      not_in_domain_->fetch_add(1);
    }
  }
  for (int e : tree.tree_edges) g.active[e] = false;
  return g;
}

Eigen::MatrixXd PerturbationBank::hessian(const Connection& a, const SpanningTree& tree) const {
  const int d = a.group.dim();
  const int n = static_cast<int>(tree.free_edges.size()) * d;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  bool active = false;
  for (const auto& entry : entries_) {
    if (entry.lambda == 0.0) continue;
    try {
      const SliceCoordinates sc = slice_coordinates(a, entry.term.reference, tree);
      // Margin covers the finite-difference stencil.
      if (sc.distance() < entry.term.support_radius() + 1e-3) active = true;
    } catch (const NotInDomainError&) {
    }
  }
  if (!active) return h;
  constexpr double kStep = 1e-5;
  const auto& w = a.complex->edge_weights;
  for (int col = 0; col < n; ++col) {
    const int e = tree.free_edges[col / d];
    TangentField xi = TangentField::zeros(a.edges.size());
    xi.values[e][col % d] = kStep;
    const TangentField gp = gradient(retract(a, xi), tree);
    xi.values[e][col % d] = -kStep;
    const TangentField gm = gradient(retract(a, xi), tree);
    for (int row = 0; row < n; ++row) {
      const int er = tree.free_edges[row / d];
      h(row, col) = w[er] * (gp.values[er][row % d] - gm.values[er][row % d]) / (2.0 * kStep);
    }
  }
  return 0.5 * (h + h.transpose());
}

double PerturbationBank::norm() const {
  double s = 0.0;
  for (const auto& entry : entries_) s += entry.term.constant * std::abs(entry.lambda);
  return s;
}

PerturbationBank PerturbationBank::concatenated(const PerturbationBank& other) const {
  PerturbationBank out(tree_);
  for (const auto& e : entries_) out.add(e.term, e.lambda);
  for (const auto& e : other.entries_) out.add(e.term, e.lambda);
  return out;
}

double estimate_constant(const ModelPerturbation& term, const SpanningTree& tree, int sample_count,
                         std::mt19937_64& rng) {
  const Connection& ref = term.reference;
  const LieGroup& grp = ref.group;
  const auto& w = ref.complex->edge_weights;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double sup = 0.0;
  for (int i = 0; i < sample_count; ++i) {
    Connection a = ref;
    if (i % 2 == 0) {
      for (int e : tree.free_edges) a.edges[e] = grp.haar_sample(rng);
    } else {
      // Uniform radius inside the support ball around the reference.
      TangentField xi = TangentField::zeros(ref.edges.size());
      double n2 = 0.0;
      for (int e : tree.free_edges) {
        for (int j = 0; j < grp.dim(); ++j) xi.values[e][j] = normal(rng);
        n2 += w[e] * xi.values[e].squaredNorm();
      }
      const double scale = term.support_radius() * uni(rng) / std::sqrt(std::max(n2, 1e-300));
      for (auto& v : xi.values) v *= scale;
      a = retract(ref, xi);
    }
    try {
      const double v = term_value(term, a, tree);
      const TangentField g = term_gradient(term, a, tree);
      const double gn = g.norm(w);
      double f2 = 0.0;
      for (std::size_t f = 0; f < a.complex->faces.size(); ++f) {
        const double th = LieGroup::angle(holonomy(a, static_cast<int>(f)));
        f2 += th * th / a.complex->face_weights[f];
      }
      sup = std::max({sup, std::abs(v), gn, gn / (1.0 + std::sqrt(f2))});
    } catch (const NotInDomainError&) {
    }
  }
  return std::max(2.0 * sup, 1e-12);
}

bool is_admissible(const PerturbationBank& bank, const std::vector<Connection>& critical_representatives,
                   double epsilon) {
  for (const auto& entry : bank.entries()) {
    if (entry.lambda == 0.0) continue;
    for (const auto& x : critical_representatives) {
      double dist = std::numeric_limits<double>::infinity();
      try {
        dist = slice_coordinates(x, entry.term.reference, bank.tree()).distance();
      } catch (const NotInDomainError&) {
      }
      if (!(dist > entry.term.support_radius() + epsilon)) return false;
    }
  }
  return true;
}

}  // namespace ymmb
