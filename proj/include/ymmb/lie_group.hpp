#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <random>
#include <stdexcept>
#include <string>

namespace ymmb {

/// Unit quaternion. U(1) elements live on the subgroup cos(t) + sin(t) e1.
using GroupElement = Eigen::Quaterniond;
/// Pure quaternion (v1, v2, v3). For U(1) only the e1 slot is used.
using AlgebraElement = Eigen::Vector3d;

enum class GroupKind { U1, SU2 };

std::string to_string(GroupKind kind);
GroupKind group_kind_from_string(const std::string& name);

class CutLocusError : public std::runtime_error {
 public:
  CutLocusError(const GroupElement& element, const std::string& what)
      : std::runtime_error(what), element_(element) {}
  const GroupElement& element() const { return element_; }

 private:
  GroupElement element_;
};

/// Structure group backend: U(1) or SU(2) with the Euclidean ad-invariant
/// inner product on pure quaternions.
///
/// Conventions: exp(X) = cos|X| + sin|X| X/|X|, bracket(X, Y) = XY - YX
/// = 2 X x Y, ad(g, X) = g^{-1} X g. The principal log is defined on
/// q0 > -1 + cut_margin.
class LieGroup {
 public:
  explicit LieGroup(GroupKind kind, double cut_margin = 1e-6)
      : kind_(kind), cut_margin_(cut_margin) {}

  GroupKind kind() const { return kind_; }
  int dim() const { return kind_ == GroupKind::U1 ? 1 : 3; }
  bool abelian() const { return kind_ == GroupKind::U1; }
  double cut_margin() const { return cut_margin_; }

  static GroupElement identity() { return GroupElement::Identity(); }

  /// i-th orthonormal basis vector of the algebra.
  static AlgebraElement basis(int i) { return AlgebraElement::Unit(i); }

  GroupElement exp(const AlgebraElement& x) const;
  AlgebraElement log(const GroupElement& u) const;
  /// Rotation angle |log u| in [0, pi]; defined everywhere.
  static double angle(const GroupElement& u);
  /// SU(2): q0 <= -1 + margin. U(1): |angle - pi| <= margin.
  bool near_cut_locus(const GroupElement& u) const;

  /// Group product followed by renormalization.
  GroupElement multiply(const GroupElement& a, const GroupElement& b) const;
  static GroupElement inverse(const GroupElement& a) { return a.conjugate(); }

  static AlgebraElement ad(const GroupElement& g, const AlgebraElement& x);
  /// 3x3 matrix of X -> ad(g, X) restricted to the first dim() coordinates.
  Eigen::MatrixXd ad_matrix(const GroupElement& g) const;
  static AlgebraElement bracket(const AlgebraElement& x, const AlgebraElement& y) { return 2.0 * x.cross(y); }
  static double inner(const AlgebraElement& x, const AlgebraElement& y) { return x.dot(y); }

  /// Projects onto the algebra of this group (zeroes e2, e3 for U(1)).
  AlgebraElement project(const AlgebraElement& x) const;

  template <class Rng>
  GroupElement haar_sample(Rng& rng) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    if (kind_ == GroupKind::U1) {
      std::uniform_real_distribution<double> uni(-M_PI, M_PI);
      const double t = uni(rng);
      return GroupElement(std::cos(t), std::sin(t), 0.0, 0.0);
    }
    Eigen::Vector4d v;
    do {
      for (int i = 0; i < 4; ++i) v[i] = normal(rng);
    } while (v.norm() < 1e-12);
    v.normalize();
    return GroupElement(v[0], v[1], v[2], v[3]);
  }

  /// Matrix J with log(exp(X) exp(tY)) = X + t J Y + O(t^2).
  Eigen::MatrixXd dlog_right(const AlgebraElement& x) const;
  /// Matrix J with log(exp(tY) exp(X)) = X + t J Y + O(t^2).
  Eigen::MatrixXd dlog_left(const AlgebraElement& x) const;

 private:
  GroupKind kind_;
  double cut_margin_;
};

/// Pure quaternion embedding of an algebra element.
inline GroupElement pure(const AlgebraElement& x) { return GroupElement(0.0, x[0], x[1], x[2]); }

/// Coefficient (1 - t cot t) / t^2 used by the log derivatives; stable near 0.
double dlog_coefficient(double theta);

}  // namespace ymmb
