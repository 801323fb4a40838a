#include "ymmb/objective.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ymmb {

Matrix Objective::frame(const Vector& /*p*/) const { return Matrix::Identity(coord_dim(), coord_dim()); }

Vector Objective::project(const Vector& p, const Vector& v) const {
  const Matrix b = frame(p);
  return b * (b.transpose() * v);
}

DerivativeAudit audit_derivatives(const Objective& f, int points, std::mt19937_64& rng, double gradient_tol,
                                  double hessian_tol) {
  DerivativeAudit a;
  const double h = 1e-5;
  for (int k = 0; k < points; ++k) {
    const Vector p = f.random_point(rng);
    const Matrix b = f.frame(p);
    const Vector g = b.transpose() * f.gradient(p);
    Vector fd(b.cols());
    for (int i = 0; i < b.cols(); ++i)
      fd[i] = (f.value(f.retract(p, h * b.col(i))) - f.value(f.retract(p, -h * b.col(i)))) / (2 * h);
    a.gradient_error = std::max(a.gradient_error, (fd - g).cwiseAbs().maxCoeff() / std::max(1.0, g.cwiseAbs().maxCoeff()));

    // Second differences of y -> value(retract(p, frame(p) y)).
    const Matrix hm = f.hessian(p);
    const double h2 = 2e-5;
    auto at = [&](int i, double si, int j, double sj) {
      return f.value(f.retract(p, h2 * (si * b.col(i) + sj * b.col(j))));
    };
    double herr = 0.0;
    for (int i = 0; i < b.cols(); ++i) {
      for (int j = i; j < b.cols(); ++j) {
        const double dd = (at(i, 1, j, 1) - at(i, 1, j, -1) - at(i, -1, j, 1) + at(i, -1, j, -1)) / (4 * h2 * h2);
        herr = std::max(herr, std::abs(dd - hm(i, j)));
      }
    }
    a.hessian_error = std::max(a.hessian_error, herr / std::max(1.0, hm.cwiseAbs().maxCoeff()));
    a.hessian_error = std::max(a.hessian_error, (hm - hm.transpose()).cwiseAbs().maxCoeff());

    const Vector back = f.log_map(p, f.retract(p, 1e-3 * b * Vector::Ones(b.cols())));
    a.retraction_drift = std::max(a.retraction_drift, (back - 1e-3 * b * Vector::Ones(b.cols())).norm());
  }
  a.passed = a.gradient_error <= gradient_tol && a.hessian_error <= hessian_tol && a.retraction_drift <= 1e-9;
  return a;
}

ObjectivePtr register_objective(std::shared_ptr<Objective> f, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const DerivativeAudit a = audit_derivatives(*f, 8, rng);
  if (!a.passed) {
    std::ostringstream os;
    os << "objective '" << f->name() << "' failed the derivative audit: gradient error " << a.gradient_error
       << ", hessian error " << a.hessian_error << ", retraction drift " << a.retraction_drift;
    throw InconsistentDerivatives(os.str());
  }
  return f;
}

}  // namespace ymmb
