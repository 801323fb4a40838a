#include "ymmb/lie_group.hpp"

#include <algorithm>
#include <cmath>

namespace ymmb {

std::string to_string(GroupKind kind) { return kind == GroupKind::U1 ? "u1" : "su2"; }

GroupKind group_kind_from_string(const std::string& name) {
  if (name == "u1" || name == "U1") return GroupKind::U1;
  if (name == "su2" || name == "SU2") return GroupKind::SU2;
  throw std::invalid_argument("unknown group '" + name + "' (expected u1 or su2)");
}

GroupElement LieGroup::exp(const AlgebraElement& x) const {
  const AlgebraElement v = project(x);
  const double theta = v.norm();
  if (theta == 0.0) return identity();
  const double s = std::sin(theta) / theta;
  GroupElement q(std::cos(theta), s * v[0], s * v[1], s * v[2]);
  q.normalize();
  return q;
}

double LieGroup::angle(const GroupElement& u) {
  // atan2 form keeps full precision near the identity.
  return std::atan2(u.vec().norm(), u.w());
}

AlgebraElement LieGroup::log(const GroupElement& u) const {
  if (near_cut_locus(u)) {
    throw CutLocusError(u, "log: element within cut margin of -1 (q0 = " + std::to_string(u.w()) + ")");
  }
  if (kind_ == GroupKind::U1) {
    return AlgebraElement(std::atan2(u.x(), u.w()), 0.0, 0.0);
  }
  const double vn = u.vec().norm();
  if (vn == 0.0) return AlgebraElement::Zero();
  const double theta = std::atan2(vn, u.w());
  return (theta / vn) * u.vec();
}

bool LieGroup::near_cut_locus(const GroupElement& u) const {
  if (kind_ == GroupKind::U1) return std::abs(std::atan2(u.x(), u.w())) >= M_PI - cut_margin_;
  return u.w() <= -1.0 + cut_margin_;
}

GroupElement LieGroup::multiply(const GroupElement& a, const GroupElement& b) const {
  GroupElement q = a * b;
  q.normalize();
  return q;
}

AlgebraElement LieGroup::ad(const GroupElement& g, const AlgebraElement& x) {
  const GroupElement r = g.conjugate() * pure(x) * g;
  return r.vec();
}

Eigen::MatrixXd LieGroup::ad_matrix(const GroupElement& g) const {
  const int d = dim();
  Eigen::MatrixXd m(d, d);
  for (int j = 0; j < d; ++j) {
    const AlgebraElement col = ad(g, basis(j));
    for (int i = 0; i < d; ++i) m(i, j) = col[i];
  }
  return m;
}

AlgebraElement LieGroup::project(const AlgebraElement& x) const {
  if (kind_ == GroupKind::U1) return AlgebraElement(x[0], 0.0, 0.0);
  return x;
}

double dlog_coefficient(double theta) {
  if (theta < 1e-4) {
    const double t2 = theta * theta;
    return 1.0 / 3.0 + t2 / 45.0 + 2.0 * t2 * t2 / 945.0;
  }
  return (1.0 - theta * std::cos(theta) / std::sin(theta)) / (theta * theta);
}

namespace {

Eigen::Matrix3d cross_matrix(const AlgebraElement& x) {
  Eigen::Matrix3d m;
  m << 0, -x[2], x[1], x[2], 0, -x[0], -x[1], x[0], 0;
  return m;
}

}  // namespace

Eigen::MatrixXd LieGroup::dlog_right(const AlgebraElement& x) const {
  if (kind_ == GroupKind::U1) return Eigen::MatrixXd::Identity(1, 1);
  const Eigen::Matrix3d k = cross_matrix(x);
  return Eigen::Matrix3d::Identity() + k + dlog_coefficient(x.norm()) * k * k;
}

Eigen::MatrixXd LieGroup::dlog_left(const AlgebraElement& x) const {
  if (kind_ == GroupKind::U1) return Eigen::MatrixXd::Identity(1, 1);
  const Eigen::Matrix3d k = cross_matrix(x);
  return Eigen::Matrix3d::Identity() - k + dlog_coefficient(x.norm()) * k * k;
}

}  // namespace ymmb
