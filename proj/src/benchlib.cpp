#include "ymmb/benchlib.hpp"

#include <cmath>

#include "ymmb/perturbation.hpp"

namespace ymmb {

namespace {

Eigen::Matrix3d cross_matrix(const Eigen::Vector3d& x) {
  Eigen::Matrix3d m;
  m << 0, -x[2], x[1], x[2], 0, -x[0], -x[1], x[0], 0;
  return m;
}

double wrap(double t) {
  const double r = std::remainder(t, 2 * M_PI);
  return r <= -M_PI ? r + 2 * M_PI : r;
}

}  // namespace

double AmbientBump::value(const Vector& a) const {
  if (lambda == 0.0) return 0.0;
  const Vector d = a - center;
  const double rho = cutoff(d.squaredNorm(), k);
  return rho == 0.0 ? 0.0 : lambda * rho * d.dot(eta);
}

Vector AmbientBump::gradient(const Vector& a) const {
  const Vector d = a - center;
  const double r = d.squaredNorm();
  const double rho = cutoff(r, k);
  const double drho = cutoff_prime(r, k);
  if (lambda == 0.0 || (rho == 0.0 && drho == 0.0)) return Vector::Zero(a.size());
  return lambda * (2.0 * drho * d.dot(eta) * d + rho * eta);
}

EmbeddedObjective::EmbeddedObjective(std::string name, Constraint constraint, int dimension, Ambient f,
                                     std::function<Vector(const Vector&, double)> fingerprint)
    : name_(std::move(name)), constraint_(constraint), dimension_(dimension), f_(std::move(f)),
      fingerprint_(std::move(fingerprint)) {}

int EmbeddedObjective::coord_dim() const { return dimension_; }

int EmbeddedObjective::manifold_dim() const { return constraint_ == Constraint::UnitSphere ? 2 : dimension_; }

Matrix EmbeddedObjective::frame(const Vector& p) const {
  if (constraint_ != Constraint::UnitSphere) return Matrix::Identity(dimension_, dimension_);
  const Eigen::Vector3d n = p.head<3>().normalized();
  int axis = 0;
  n.cwiseAbs().minCoeff(&axis);
  Eigen::Vector3d b1 = Eigen::Vector3d::Unit(axis) - n[axis] * n;
  b1.normalize();
  const Eigen::Vector3d b2 = n.cross(b1);
  Matrix b(3, 2);
  b.col(0) = b1;
  b.col(1) = b2;
  return b;
}

double EmbeddedObjective::ambient_value(const Vector& a) const {
  double v = f_.value(a);
  for (const auto& b : bumps_) v += b.value(a);
  return v;
}

Vector EmbeddedObjective::ambient_gradient(const Vector& a) const {
  Vector g = f_.gradient(a);
  for (const auto& b : bumps_) g += b.gradient(a);
  return g;
}

Matrix EmbeddedObjective::ambient_hessian(const Vector& a) const {
  Matrix h = f_.hessian(a);
  const double step = 1e-5;
  for (const auto& b : bumps_) {
    if (b.lambda == 0.0 || (a - b.center).norm() > b.support_radius() + 2 * step) continue;
    Matrix hb(a.size(), a.size());
    for (int j = 0; j < a.size(); ++j) {
      Vector ap = a, am = a;
      ap[j] += step;
      am[j] -= step;
      hb.col(j) = (b.gradient(ap) - b.gradient(am)) / (2 * step);
    }
    h += 0.5 * (hb + hb.transpose());
  }
  return h;
}

Vector EmbeddedObjective::ambient(const Vector& p) const {
  if (constraint_ != Constraint::TorusProduct) return p;
  Vector a(2 * dimension_);
  for (int i = 0; i < dimension_; ++i) {
    a[2 * i] = std::cos(p[i]);
    a[2 * i + 1] = std::sin(p[i]);
  }
  return a;
}

Matrix EmbeddedObjective::ambient_jacobian(const Vector& p) const {
  switch (constraint_) {
    case Constraint::UnitSphere:
      // d/dt exp(t w x) p = w x p = -[p]x w
      return -cross_matrix(p.head<3>());
    case Constraint::TorusProduct: {
      Matrix j = Matrix::Zero(2 * dimension_, dimension_);
      for (int i = 0; i < dimension_; ++i) {
        j(2 * i, i) = -std::sin(p[i]);
        j(2 * i + 1, i) = std::cos(p[i]);
      }
      return j;
    }
    case Constraint::None:
      break;
  }
  return Matrix::Identity(dimension_, dimension_);
}

double EmbeddedObjective::value(const Vector& p) const { return ambient_value(ambient(p)); }

Vector EmbeddedObjective::gradient(const Vector& p) const {
  return ambient_jacobian(p).transpose() * ambient_gradient(ambient(p));
}

Matrix EmbeddedObjective::hessian(const Vector& p) const {
  const Vector a = ambient(p);
  const Vector g = ambient_gradient(a);
  const Matrix h = ambient_hessian(a);
  if (constraint_ == Constraint::UnitSphere) {
    // Rotations b_i restricted to the tangent plane trace great circles:
    // H_ij = (b_i x p)^T A (b_j x p) - (grad . p) delta_ij.
    const Matrix b = frame(p);
    const Eigen::Vector3d n = p.head<3>();
    Matrix t(3, 2);
    for (int i = 0; i < 2; ++i) t.col(i) = Eigen::Vector3d(b.col(i)).cross(n);
    Matrix out = t.transpose() * h * t - g.dot(a) * Matrix::Identity(2, 2);
    return 0.5 * (out + out.transpose());
  }
  if (constraint_ == Constraint::TorusProduct) {
    const Matrix j = ambient_jacobian(p);
    Matrix out = j.transpose() * h * j;
    for (int i = 0; i < dimension_; ++i) out(i, i) -= g[2 * i] * a[2 * i] + g[2 * i + 1] * a[2 * i + 1];
    return 0.5 * (out + out.transpose());
  }
  return 0.5 * (h + h.transpose());
}

Vector EmbeddedObjective::retract(const Vector& p, const Vector& v) const {
  switch (constraint_) {
    case Constraint::UnitSphere: {
      const Eigen::Vector3d w = v.head<3>();
      const double t = w.norm();
      if (t == 0.0) return p;
      const Eigen::Vector3d x = p.head<3>();
      const Eigen::Vector3d u = w / t;
      Eigen::Vector3d r = x * std::cos(t) + u.cross(x) * std::sin(t) + u * u.dot(x) * (1 - std::cos(t));
      r.normalize();
      return r;
    }
    case Constraint::TorusProduct: {
      Vector q = p + v;
      for (int i = 0; i < q.size(); ++i) q[i] = wrap(q[i]);
      return q;
    }
    case Constraint::None:
      break;
  }
  return p + v;
}

Vector EmbeddedObjective::log_map(const Vector& p, const Vector& q) const {
  switch (constraint_) {
    case Constraint::UnitSphere: {
      const Eigen::Vector3d x = p.head<3>(), y = q.head<3>();
      const Eigen::Vector3d c = x.cross(y);
      const double s = c.norm();
      if (s == 0.0) return Vector::Zero(3);
      return (std::atan2(s, x.dot(y)) / s) * c;
    }
    case Constraint::TorusProduct: {
      Vector d = q - p;
      for (int i = 0; i < d.size(); ++i) d[i] = wrap(d[i]);
      return d;
    }
    case Constraint::None:
      break;
  }
  return q - p;
}

Vector EmbeddedObjective::random_point(std::mt19937_64& rng) const {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(-M_PI, M_PI);
  Vector p(dimension_);
  for (int i = 0; i < dimension_; ++i) p[i] = constraint_ == Constraint::TorusProduct ? u(rng) : n(rng);
  if (constraint_ == Constraint::UnitSphere) p.normalize();
  return p;
}

Vector EmbeddedObjective::fingerprint(const Vector& p) const { return fingerprint_(ambient(p), value(p)); }

std::shared_ptr<EmbeddedObjective> sphere_z2() {
  EmbeddedObjective::Ambient f;
  f.value = [](const Vector& a) { return a[2] * a[2]; };
  f.gradient = [](const Vector& a) { return Vector(Eigen::Vector3d(0, 0, 2 * a[2])); };
  f.hessian = [](const Vector&) {
    Matrix h = Matrix::Zero(3, 3);
    h(2, 2) = 2.0;
    return h;
  };
  auto obj = std::make_shared<EmbeddedObjective>("sphere-z2", Constraint::UnitSphere, 3, f,
                                                 [](const Vector& a, double v) { return Vector(Eigen::Vector2d(v, a[2])); });
  obj->reference_betti = std::vector<int>{1, 0, 1};
  return obj;
}

std::shared_ptr<EmbeddedObjective> torus_product_example() {
  EmbeddedObjective::Ambient f;
  f.value = [](const Vector& a) { return 1.0 - a[0]; };
  f.gradient = [](const Vector&) {
    Vector g = Vector::Zero(4);
    g[0] = -1.0;
    return g;
  };
  f.hessian = [](const Vector&) { return Matrix(Matrix::Zero(4, 4)); };
  auto obj = std::make_shared<EmbeddedObjective>(
      "torus-product", Constraint::TorusProduct, 2, f,
      [](const Vector& a, double v) { return Vector(Eigen::Vector3d(v, a[0], a[1])); });
  obj->reference_betti = std::vector<int>{1, 2, 1};
  return obj;
}

bool bumps_admissible(const EmbeddedObjective& f, const std::vector<Vector>& critical_points, double epsilon) {
  for (const auto& b : f.perturbations()) {
    if (b.lambda == 0.0) continue;
    for (const auto& x : critical_points)
      if ((f.ambient(x) - b.center).norm() <= b.support_radius() + epsilon) return false;
  }
  return true;
}

AmbientBump random_admissible_bump(const EmbeddedObjective& f, const std::vector<Vector>& critical_points, int k,
                                   double lambda, double epsilon, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    AmbientBump b;
    b.center = f.ambient(f.random_point(rng));
    b.k = k;
    b.lambda = lambda;
    b.eta = Vector(b.center.size());
    for (int i = 0; i < b.eta.size(); ++i) b.eta[i] = n(rng);
    b.eta.normalize();
    bool ok = true;
    for (const auto& x : critical_points) ok = ok && (f.ambient(x) - b.center).norm() > b.support_radius() + epsilon;
    if (ok) return b;
  }
  throw std::runtime_error("no admissible bump center found; increase k");
}

}  // namespace ymmb
