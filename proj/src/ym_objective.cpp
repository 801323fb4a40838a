#include "ymmb/ym_objective.hpp"

#include <cmath>

namespace ymmb {

YMObjective::YMObjective(std::shared_ptr<const OrientedCellComplex> complex, LieGroup group, EnergyBackend backend,
                         std::shared_ptr<const PerturbationBank> bank)
    : complex_(std::move(complex)), group_(group), backend_(backend), bank_(std::move(bank)) {
  tree_ = spanning_tree(*complex_, complex_->base_vertex);
  for (int e : tree_.free_edges) sqrt_w_.push_back(std::sqrt(complex_->edge_weights[e]));
}

std::string YMObjective::name() const { return "ym-" + to_string(group_.kind()) + "-" + to_string(backend_); }

Connection YMObjective::connection(const Vector& p) const {
  Connection c = Connection::trivial(complex_, group_);
  for (std::size_t e = 0; e < c.edges.size(); ++e) c.edges[e] = GroupElement(p[4 * e], p[4 * e + 1], p[4 * e + 2], p[4 * e + 3]);
  return c;
}

Vector YMObjective::point(const Connection& c) const {
  const Connection g = tree_gauge_fix(c, tree_).connection;
  Vector p(4 * g.edges.size());
  for (std::size_t e = 0; e < g.edges.size(); ++e) p.segment<4>(4 * e) << g.edges[e].w(), g.edges[e].x(), g.edges[e].y(), g.edges[e].z();
  return p;
}

TangentField YMObjective::tangent(const Vector& v) const {
  const int d = group_.dim();
  TangentField xi = TangentField::zeros(complex_->edges.size());
  for (int e : tree_.tree_edges) xi.active[e] = false;
  for (std::size_t k = 0; k < tree_.free_edges.size(); ++k)
    for (int i = 0; i < d; ++i) xi.values[tree_.free_edges[k]][i] = v[k * d + i] / sqrt_w_[k];
  return xi;
}

Vector YMObjective::coords(const TangentField& xi) const {
  const int d = group_.dim();
  Vector v(coord_dim());
  for (std::size_t k = 0; k < tree_.free_edges.size(); ++k)
    for (int i = 0; i < d; ++i) v[k * d + i] = sqrt_w_[k] * xi.values[tree_.free_edges[k]][i];
  return v;
}

double YMObjective::value(const Vector& p) const { return energy(connection(p), backend_, bank_.get()); }

Vector YMObjective::gradient(const Vector& p) const {
  // Metric gradient g has <g, xi>_w = dE(xi); in scaled coordinates that is sqrt(w) g.
  return coords(ymmb::gradient(connection(p), backend_, bank_.get(), tree_));
}

Matrix YMObjective::hessian(const Vector& p) const {
  Matrix h = hessian_matrix(connection(p), backend_, bank_.get(), tree_);
  const int d = group_.dim();
  for (int r = 0; r < h.rows(); ++r)
    for (int c = 0; c < h.cols(); ++c) h(r, c) /= sqrt_w_[r / d] * sqrt_w_[c / d];
  return h;
}

Vector YMObjective::retract(const Vector& p, const Vector& v) const {
  Vector q = p;
  const TangentField xi = tangent(v);
  for (int e : tree_.free_edges) {
    const GroupElement u(p[4 * e], p[4 * e + 1], p[4 * e + 2], p[4 * e + 3]);
    const GroupElement r = group_.multiply(u, group_.exp(xi.values[e]));
    q.segment<4>(4 * e) << r.w(), r.x(), r.y(), r.z();
  }
  return q;
}

Vector YMObjective::log_map(const Vector& p, const Vector& q) const {
  TangentField xi = TangentField::zeros(complex_->edges.size());
  for (int e : tree_.free_edges) {
    const GroupElement u(p[4 * e], p[4 * e + 1], p[4 * e + 2], p[4 * e + 3]);
    const GroupElement w(q[4 * e], q[4 * e + 1], q[4 * e + 2], q[4 * e + 3]);
    xi.values[e] = group_.log(u.conjugate() * w);
  }
  return coords(xi);
}

Vector YMObjective::random_point(std::mt19937_64& rng) const {
  Connection c = Connection::trivial(complex_, group_);
  for (int e : tree_.free_edges) c.edges[e] = group_.haar_sample(rng);
  return point(c);
}

Vector YMObjective::fingerprint(const Vector& p) const {
  const Connection c = connection(p);
  Vector f(1 + complex_->faces.size());
  f[0] = value(p);
  for (std::size_t k = 0; k < complex_->faces.size(); ++k) f[1 + k] = 2.0 * holonomy(c, static_cast<int>(k)).w();
  return f;
}

Vector YMObjective::ambient(const Vector& p) const {
  Vector a(4 * tree_.free_edges.size());
  for (std::size_t k = 0; k < tree_.free_edges.size(); ++k) a.segment<4>(4 * k) = p.segment<4>(4 * tree_.free_edges[k]);
  return a;
}

Matrix YMObjective::ambient_jacobian(const Vector& p) const {
  // d/dt u exp(t X) = u X (quaternion product).
  const int d = group_.dim();
  Matrix j = Matrix::Zero(4 * tree_.free_edges.size(), coord_dim());
  for (std::size_t k = 0; k < tree_.free_edges.size(); ++k) {
    const int e = tree_.free_edges[k];
    const GroupElement u(p[4 * e], p[4 * e + 1], p[4 * e + 2], p[4 * e + 3]);
    for (int i = 0; i < d; ++i) {
      const GroupElement t = u * pure(LieGroup::basis(i));
      j.block<4, 1>(4 * k, k * d + i) << t.w(), t.x(), t.y(), t.z();
      j.block<4, 1>(4 * k, k * d + i) /= sqrt_w_[k];
    }
  }
  return j;
}

int YMObjective::orbit_dimension(const Vector& p) const {
  if (group_.abelian()) return 0;
  return group_.dim() - stabilizer_dimension(connection(p));
}

std::vector<Vector> YMObjective::canonical_points() const { return {point(Connection::trivial(complex_, group_))}; }

}  // namespace ymmb
