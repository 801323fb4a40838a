#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "ymmb/morse_bott.hpp"

namespace ymmb {

namespace {

// f with the sign flipped, so the descending integrator climbs to maxima.
class Negated : public Objective {
 public:
  explicit Negated(const Objective& f) : f_(f) {}
  std::string name() const override { return "-" + f_.name(); }
  int coord_dim() const override { return f_.coord_dim(); }
  int manifold_dim() const override { return f_.manifold_dim(); }
  Matrix frame(const Vector& p) const override { return f_.frame(p); }
  double value(const Vector& p) const override { return -f_.value(p); }
  Vector gradient(const Vector& p) const override { return -f_.gradient(p); }
  Matrix hessian(const Vector& p) const override { return -f_.hessian(p); }
  Vector retract(const Vector& p, const Vector& v) const override { return f_.retract(p, v); }
  Vector log_map(const Vector& p, const Vector& q) const override { return f_.log_map(p, q); }
  double distance(const Vector& p, const Vector& q) const override { return f_.distance(p, q); }
  Vector random_point(std::mt19937_64& rng) const override { return f_.random_point(rng); }
  Vector fingerprint(const Vector& p) const override { return f_.fingerprint(p); }
  Vector ambient(const Vector& p) const override { return f_.ambient(p); }
  Matrix ambient_jacobian(const Vector& p) const override { return f_.ambient_jacobian(p); }

 private:
  const Objective& f_;
};

struct Eig {
  Vector values;
  Matrix vectors;  // frame coordinates
};

Eig frame_eig(const Objective& f, const Vector& p) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(f.hessian(p));
  return {es.eigenvalues(), es.eigenvectors()};
}

// Indices of eigenvalues sorted by |lambda|.
std::vector<int> by_magnitude(const Vector& values) {
  std::vector<int> idx(values.size());
  for (int i = 0; i < values.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return std::abs(values[a]) < std::abs(values[b]); });
  return idx;
}

Vector unit_gaussian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  const double nv = v.norm();
  return nv > 0 ? Vector(v / nv) : v;
}

bool same_component(const Objective& f, const Vector& p, const Vector& fingerprint, double tol) {
  return (f.fingerprint(p) - fingerprint).norm() < tol;
}

}  // namespace

double safe_distance(const Objective& f, const Vector& p, const Vector& q) {
  try {
    return f.distance(p, q);
  } catch (const std::exception&) {
    return std::numeric_limits<double>::infinity();
  }
}

Matrix tangent_basis(const Objective& f, const Vector& p, int k) {
  const Matrix b = f.frame(p);
  if (k <= 0) return Matrix(b.rows(), 0);
  const Eig e = frame_eig(f, p);
  const std::vector<int> idx = by_magnitude(e.values);
  Matrix out(b.rows(), k);
  for (int j = 0; j < k; ++j) out.col(j) = b * e.vectors.col(idx[j]);
  return out;
}

Vector project_to_critical(const Objective& f, const Vector& q, int kernel_dim, double target) {
  Vector p = q;
  Vector g = f.gradient(p);
  for (int it = 0; it < 60 && g.norm() > target; ++it) {
    const Matrix b = f.frame(p);
    const Eig e = frame_eig(f, p);
    const std::vector<int> idx = by_magnitude(e.values);
    const Vector gb = b.transpose() * g;
    Vector y = Vector::Zero(b.cols());
    for (std::size_t j = kernel_dim; j < idx.size(); ++j) {
      const int i = idx[j];
      y -= (e.vectors.col(i).dot(gb) / e.values[i]) * e.vectors.col(i);
    }
    if (y.norm() > 0.5) y *= 0.5 / y.norm();
    bool moved = false;
    for (int half = 0; half < 30; ++half) {
      const Vector cand = f.retract(p, b * y);
      const Vector gc = f.gradient(cand);
      if (gc.norm() < g.norm()) {
        p = cand;
        g = gc;
        moved = true;
        break;
      }
      y *= 0.5;
    }
    if (!moved) break;
  }
  if (g.norm() > std::max(1e-9, 10 * target))
    throw NoConvergence("project_to_critical: gradient norm " + std::to_string(g.norm()));
  return p;
}

std::optional<Vector> saddle_search(const Objective& f, const Vector& start, int max_iterations) {
  Vector p = start;
  Vector g = f.gradient(p);
  double mu = -1.0;
  for (int it = 0; it < max_iterations && g.norm() > 1e-7; ++it) {
    const Matrix b = f.frame(p);
    const Matrix h = f.hessian(p);
    const Vector r = b.transpose() * g;
    const Matrix h2 = h.transpose() * h;
    if (mu < 0) mu = 1e-3 * std::max(1.0, h2.diagonal().maxCoeff());
    bool accepted = false;
    for (int tries = 0; tries < 12; ++tries) {
      Vector y = (h2 + mu * Matrix::Identity(h.rows(), h.cols())).ldlt().solve(-h.transpose() * r);
      if (y.norm() > 0.5) y *= 0.5 / y.norm();
      const Vector cand = f.retract(p, b * y);
      const Vector gc = f.gradient(cand);
      if (gc.norm() < g.norm()) {
        p = cand;
        g = gc;
        mu = std::max(mu / 3.0, 1e-12);
        accepted = true;
        break;
      }
      mu *= 4.0;
    }
    if (!accepted) break;
  }
  if (g.norm() > 1e-3) return std::nullopt;
  try {
    return refine_critical(f, p);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

MorseBottReport morse_bott_check(const Objective& f, const CriticalManifold& c, const SurveyOptions& o,
                                 std::mt19937_64& rng) {
  MorseBottReport r;
  const Vector& main = c.representatives.front();
  const Spectrum sp = hessian_spectrum(f, main, o.kernel_rel);
  r.kernel_dimension = sp.kernel;
  r.orbit_dimension = f.orbit_dimension(main);

  const int reps = std::min<int>(c.representatives.size(), 10);
  for (int i = 0; i < reps; ++i) {
    const Vector& p = c.representatives[i];
    r.representative_kernels.push_back(hessian_spectrum(f, p, o.kernel_rel).kernel);
    r.representative_orbits.push_back(f.orbit_dimension(p));
  }
  for (int i = 1; i < reps; ++i) {
    if (r.representative_kernels[i] != r.representative_kernels[0]) r.kernel_constant = false;
    if (r.representative_orbits[i] != r.representative_orbits[0]) r.orbit_constant = false;
  }

  // Spread of nearby critical points: perturb, return to the critical set, count principal directions.
  const int n = o.pca_samples > 0 ? o.pca_samples : 4 * f.manifold_dim() + 8;
  const Matrix b = f.frame(main);
  std::vector<Vector> offsets;
  for (int i = 0; i < n; ++i) {
    const Vector q = f.retract(main, o.pca_radius * (b * unit_gaussian(b.cols(), rng)));
    const std::optional<Vector> back = saddle_search(f, q, 100);
    if (!back || !same_component(f, *back, c.fingerprint, o.cluster_tol)) continue;
    offsets.push_back(b.transpose() * f.log_map(main, *back));
  }
  if (offsets.size() >= 3) {
    Matrix m(offsets.size(), b.cols());
    for (std::size_t i = 0; i < offsets.size(); ++i) m.row(i) = offsets[i].transpose();
    const Vector sv = Eigen::JacobiSVD<Matrix>(m).singularValues();
    // A tangent direction carries about radius * sqrt(n / dim); round-off stays far below the floor.
    const double smax = sv.size() ? sv[0] : 0.0;
    const double floor = o.pca_rel * o.pca_radius * std::sqrt(static_cast<double>(offsets.size()));
    for (int i = 0; i < sv.size(); ++i)
      if (sv[i] > std::max(o.pca_rel * smax, floor)) ++r.pca_dimension;
  } else {
    r.pca_dimension = -1;
  }

  r.orbit_type = r.orbit_dimension > 0 && r.orbit_dimension == r.kernel_dimension;
  std::ostringstream d;
  if (!r.kernel_constant) d << "kernel dimension varies across representatives; ";
  if (!r.orbit_constant) d << "stabilizer dimension jumps between representatives; ";
  if (r.pca_dimension != r.kernel_dimension)
    d << "kernel " << r.kernel_dimension << " vs local dimension estimate " << r.pca_dimension << "; ";
  if (r.orbit_dimension > r.kernel_dimension)
    d << "orbit dimension " << r.orbit_dimension << " exceeds kernel " << r.kernel_dimension << "; ";
  r.detail = d.str();
  r.passed = r.detail.empty();
  if (r.passed) r.detail = "ok";
  return r;
}

SurveyResult survey_critical(const Objective& f, const SurveyOptions& o, std::mt19937_64& rng) {
  SurveyResult out;
  std::vector<Vector> found;
  std::vector<bool> canonical;
  const Negated up(f);

  auto take = [&](const Objective& g, const Vector& start, bool is_canonical) {
    ++out.flows;
    const Trajectory t = integrate(g, start, o.flow);
    if (t.status != FlowStatus::Converged) return;
    try {
      found.push_back(refine_critical(f, t.end()));
      canonical.push_back(is_canonical);
    } catch (const std::exception&) {
      out.outliers.push_back(t.end());
    }
  };

  for (const Vector& p : f.canonical_points()) {
    if (f.gradient(p).norm() <= 1e-3) {
      try {
        found.push_back(refine_critical(f, p));
        canonical.push_back(true);
        continue;
      } catch (const std::exception&) {
      }
    }
    take(f, p, false);
  }
  for (int i = 0; i < o.n_starts; ++i) {
    const Vector start = f.random_point(rng);
    take(f, start, false);
    if (o.ascent) take(up, start, false);
    if (o.saddle_search) {
      ++out.saddle_searches;
      if (auto s = saddle_search(f, start)) {
        found.push_back(*s);
        canonical.push_back(false);
      }
    }
  }

  // Cluster by fingerprint.
  std::vector<CriticalManifold> clusters;
  for (std::size_t i = 0; i < found.size(); ++i) {
    const Vector fp = f.fingerprint(found[i]);
    auto it = std::find_if(clusters.begin(), clusters.end(),
                           [&](const CriticalManifold& c) { return (c.fingerprint - fp).norm() < o.cluster_tol; });
    if (it == clusters.end()) {
      CriticalManifold c;
      c.fingerprint = fp;
      c.representatives.push_back(found[i]);
      clusters.push_back(std::move(c));
      continue;
    }
    if (canonical[i]) {
      it->representatives.insert(it->representatives.begin(), found[i]);
    } else if (static_cast<int>(it->representatives.size()) < o.max_representatives) {
      it->representatives.push_back(found[i]);
    }
  }
  for (CriticalManifold& c : clusters) c.energy = f.value(c.representatives.front());
  std::sort(clusters.begin(), clusters.end(),
            [](const CriticalManifold& a, const CriticalManifold& b) { return a.energy < b.energy; });

  for (std::size_t i = 0; i < clusters.size(); ++i) {
    CriticalManifold& c = clusters[i];
    c.id = static_cast<int>(i);
    const Vector& p = c.representatives.front();
    const Spectrum sp = hessian_spectrum(f, p, o.kernel_rel);
    c.dimension = sp.kernel;
    c.index = sp.negative;
    c.spectrum = sp.eigenvalues;
    c.orbit_dimension = f.orbit_dimension(p);
    c.morse_bott = morse_bott_check(f, c, o, rng);
    c.pca_dimension = c.morse_bott.pca_dimension;
  }
  out.manifolds = std::move(clusters);
  return out;
}

// ---------------------------------------------------------------- auxiliary Morse functions

MorseFunction choose_h(const Objective& f, std::mt19937_64& rng) {
  std::mt19937_64 probe(0);
  const int n = static_cast<int>(f.ambient(f.random_point(probe)).size());
  std::normal_distribution<double> g(0.0, 1.0);
  MorseFunction h;
  h.coefficients.resize(n);
  for (int i = 0; i < n; ++i) h.coefficients[i] = g(rng);
  return h;
}

namespace {

// Chart of C at p: s -> projection of retract(p, K s) onto the critical set.
struct Chart {
  const Objective& f;
  const MorseFunction& h;
  Vector base;
  Matrix basis;
  int k;

  Vector at(const Vector& s) const { return project_to_critical(f, f.retract(base, basis * s), k); }

  // Components of the C-gradient of h at q, read in the fixed basis at the base point.
  Vector field(const Vector& q) const {
    const Matrix kq = tangent_basis(f, q, k);
    return basis.transpose() * (kq * (kq.transpose() * h.gradient(f, q)));
  }

  Matrix jacobian(double step = 1e-5) const {
    Matrix j(k, k);
    for (int c = 0; c < k; ++c) {
      Vector e = Vector::Zero(k);
      e[c] = step;
      j.col(c) = (field(at(e)) - field(at(-e))) / (2 * step);
    }
    return j;
  }
};

double c_gradient_norm(const Objective& f, const MorseFunction& h, const Vector& p, int k) {
  const Matrix kp = tangent_basis(f, p, k);
  return (kp.transpose() * h.gradient(f, p)).norm();
}

std::optional<Vector> h_newton(const Objective& f, const MorseFunction& h, const Vector& start, int k, double tol) {
  Vector p = start;
  double gn = c_gradient_norm(f, h, p, k);
  double mu = 1e-6;
  for (int it = 0; it < 80 && gn > tol; ++it) {
    const Chart chart{f, h, p, tangent_basis(f, p, k), k};
    const Vector r = chart.basis.transpose() * h.gradient(f, p);
    const Matrix j = chart.jacobian();
    const Matrix jtj = j.transpose() * j;
    const double scale = std::max(1e-12, jtj.diagonal().maxCoeff());
    bool accepted = false;
    for (int tries = 0; tries < 10; ++tries) {
      Vector s = (jtj + mu * scale * Matrix::Identity(k, k)).ldlt().solve(-j.transpose() * r);
      if (!s.allFinite()) break;
      if (s.norm() > 0.5) s *= 0.5 / s.norm();
      Vector cand;
      try {
        cand = chart.at(s);
      } catch (const NoConvergence&) {
        mu *= 10;
        continue;
      }
      const double gc = c_gradient_norm(f, h, cand, k);
      if (gc < gn) {
        p = cand;
        gn = gc;
        mu = std::max(mu / 10, 1e-12);
        accepted = true;
        break;
      }
      mu *= 10;
    }
    if (!accepted) break;
  }
  if (gn > tol) return std::nullopt;
  return p;
}

}  // namespace

std::vector<HCriticalPoint> h_critical_points(const Objective& f, const CriticalManifold& c, const MorseFunction& h,
                                              const HOptions& o, std::mt19937_64& rng) {
  const int k = c.dimension;
  std::vector<HCriticalPoint> out;
  if (k == 0) {
    HCriticalPoint x;
    x.manifold = c.id;
    x.point = c.representatives.front();
    x.ind_f = c.index;
    x.Ind = c.index;
    x.h_value = h.value(f, x.point);
    x.unstable = Matrix(f.coord_dim(), 0);
    x.stable = Matrix(f.coord_dim(), 0);
    return {x};
  }

  // Starting points spread over C: representatives plus random walks in chart coordinates.
  std::vector<Vector> starts(c.representatives.begin(), c.representatives.end());
  const int walks = o.starts > 0 ? o.starts : 12 * (k + 1);
  std::uniform_int_distribution<std::size_t> pick(0, c.representatives.size() - 1);
  std::normal_distribution<double> g(0.0, 0.7);
  for (int w = 0; w < walks; ++w) {
    Vector p = c.representatives[pick(rng)];
    for (int step = 0; step < 3; ++step) {
      Vector s(k);
      for (int i = 0; i < k; ++i) s[i] = g(rng);
      try {
        const Vector q = project_to_critical(f, f.retract(p, tangent_basis(f, p, k) * s), k);
        if (same_component(f, q, c.fingerprint, 1e-4)) p = q;
      } catch (const NoConvergence&) {
      }
    }
    starts.push_back(p);
  }

  for (const Vector& s : starts) {
    const std::optional<Vector> x = h_newton(f, h, s, k, o.grad_tol);
    if (!x || !same_component(f, *x, c.fingerprint, 1e-4)) continue;
    const bool dup = std::any_of(out.begin(), out.end(),
                                 [&](const HCriticalPoint& y) { return safe_distance(f, y.point, *x) < o.dedupe; });
    if (dup) continue;
    HCriticalPoint y;
    y.manifold = c.id;
    y.point = *x;
    y.ind_f = c.index;
    y.h_value = h.value(f, *x);
    y.grad_norm = c_gradient_norm(f, h, *x, k);
    out.push_back(std::move(y));
  }

  for (HCriticalPoint& y : out) {
    const Chart chart{f, h, y.point, tangent_basis(f, y.point, k), k};
    Matrix hh = chart.jacobian();
    hh = 0.5 * (hh + hh.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(hh);
    y.h_eigenvalues = es.eigenvalues();
    const double scale = std::max(1.0, y.h_eigenvalues.cwiseAbs().maxCoeff());
    if (y.h_eigenvalues.cwiseAbs().minCoeff() < o.nondegenerate * scale) {
      std::ostringstream os;
      os << "h is degenerate on manifold " << c.id << ": eigenvalue " << y.h_eigenvalues.cwiseAbs().minCoeff();
      throw MorseFailure(os.str());
    }
    int neg = 0;
    for (int i = 0; i < k; ++i) neg += y.h_eigenvalues[i] < 0;
    y.ind_h = neg;
    y.Ind = y.ind_f + neg;
    y.unstable = chart.basis * es.eigenvectors().leftCols(neg);
    y.stable = chart.basis * es.eigenvectors().rightCols(k - neg);
  }

  const bool has_min = std::any_of(out.begin(), out.end(), [](const HCriticalPoint& y) { return y.ind_h == 0; });
  const bool has_max = std::any_of(out.begin(), out.end(), [&](const HCriticalPoint& y) { return y.ind_h == k; });
  if (!has_min || !has_max)
    throw MorseFailure("h critical points on manifold " + std::to_string(c.id) + " lack a minimum or maximum");
  std::sort(out.begin(), out.end(), [](const HCriticalPoint& a, const HCriticalPoint& b) {
    return a.Ind != b.Ind ? a.Ind < b.Ind : a.h_value < b.h_value;
  });
  return out;
}

std::pair<MorseFunction, std::vector<HCriticalPoint>> choose_morse_function(const Objective& f,
                                                                            const CriticalManifold& c,
                                                                            const HOptions& o, std::mt19937_64& rng) {
  std::string last;
  for (int a = 0; a < std::max(1, o.attempts); ++a) {
    MorseFunction h = choose_h(f, rng);
    try {
      auto pts = h_critical_points(f, c, h, o, rng);
      return {std::move(h), std::move(pts)};
    } catch (const MorseFailure& e) {
      last = e.what();
    }
  }
  throw MorseFailure("no Morse function found after " + std::to_string(o.attempts) + " attempts: " + last);
}

HFlowResult h_flow(const Objective& f, const MorseFunction& h, const Vector& start, int k, bool ascend,
                   const HOptions& o, double t_max, const HFlowObserver& observer) {
  HFlowResult r;
  const double sign = ascend ? 1.0 : -1.0;
  auto field = [&](const Vector& p) {
    const Matrix kp = tangent_basis(f, p, k);
    return Vector(sign * (kp * (kp.transpose() * h.gradient(f, p))));
  };
  Vector p = start;
  double t = 0.0;
  r.points.push_back(p);
  r.times.push_back(t);
  while (t < t_max) {
    const Vector v = field(p);
    const double gn = v.norm();
    if (gn < o.snap) {
      if (auto snapped = h_newton(f, h, p, k, o.grad_tol)) {
        p = *snapped;
        r.points.push_back(p);
        r.times.push_back(t);
      }
      r.converged = true;
      break;
    }
    const double dt = std::min(o.flow_dt, o.flow_step / gn);
    const Vector p1 = project_to_critical(f, f.retract(p, dt * v), k);
    const Vector v1 = field(p1);
    p = project_to_critical(f, f.retract(p, 0.5 * dt * (v + v1)), k);
    t += dt;
    r.points.push_back(p);
    r.times.push_back(t);
    if (observer && observer(p)) break;
  }
  r.end = p;
  return r;
}

}  // namespace ymmb
