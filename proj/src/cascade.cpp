#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <memory>

#include <Eigen/Eigenvalues>

#include "ymmb/morse_bott.hpp"

namespace ymmb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const CriticalManifold& manifold_of(const CascadeContext& ctx, int id) {
  for (const auto& c : ctx.manifolds)
    if (c.id == id) return c;
  throw std::invalid_argument("unknown critical manifold " + std::to_string(id));
}

const MorseFunction& h_of(const CascadeContext& ctx, int id) {
  auto it = ctx.h.find(id);
  if (it == ctx.h.end()) throw std::invalid_argument("no Morse function for manifold " + std::to_string(id));
  return it->second;
}

bool excluded(const CascadeContext& ctx, int id) {
  return std::find(ctx.excluded.begin(), ctx.excluded.end(), id) != ctx.excluded.end();
}

// Closest approach of the h-flow on C from q to the h-critical point y, and the side it leaves on.
struct Approach {
  bool valid = false;
  bool hit = false;  // the flow converges to y
  double d_min = kInf;
  int sign = 0;
};

Approach approach(const Objective& f, const CriticalManifold& c, const MorseFunction& h, const HCriticalPoint& y,
                  const Vector& q, const CascadeParams& prm) {
  Approach a;
  Vector pmin = q;
  a.d_min = safe_distance(f, y.point, q);
  bool entered = a.d_min < prm.rho;
  auto watch = [&](const Vector& p) {
    const double d = safe_distance(f, y.point, p);
    if (d < a.d_min) {
      a.d_min = d;
      pmin = p;
    }
    if (d < prm.rho) entered = true;
    return entered && d > prm.rho;
  };
  HFlowResult fl;
  try {
    fl = h_flow(f, h, q, c.dimension, false, prm.h, 400.0, watch);
  } catch (const NoConvergence&) {
    return a;
  }
  a.valid = true;
  if (fl.converged) {
    const double d = safe_distance(f, y.point, fl.end);
    if (d < a.d_min) a.d_min = d;
    if (d < prm.delta_match) {
      a.hit = true;
      return a;
    }
  }
  if (y.unstable.cols() > 0) {
    Vector v;
    try {
      v = f.log_map(y.point, pmin);
    } catch (const std::exception&) {
      return a;  // closest point across the cut locus: no side
    }
    a.sign = y.unstable.col(0).dot(v) >= 0 ? 1 : -1;
  }
  return a;
}

// Negative-eigenspace basis of the Hessian of f at p, in coordinates.
Matrix negative_directions(const Objective& f, const Vector& p, int count) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(f.hessian(p));
  return f.frame(p) * es.eigenvectors().leftCols(count);
}

// Columns of u scaled to eps^(mu_i / mu_min): in the linearized flow every start on the ellipse
// leaves the eps-ball at the same time, so the family is well conditioned in its angle.
Matrix compensated(const Matrix& u, const Vector& rates, double eps, double floor = 1e-9, double cap = 0.05) {
  Matrix out = u;
  if (rates.size() == 0) return out;
  const double slow = rates.cwiseAbs().minCoeff();
  const double ratio = rates.cwiseAbs().maxCoeff() / slow;
  // Keep the fastest radius above `floor`.
  const double e = std::min(cap, std::max(eps, std::pow(floor, 1.0 / ratio)));
  for (int i = 0; i < u.cols(); ++i) out.col(i) *= std::pow(e, std::abs(rates[i]) / slow);
  return out;
}

Matrix negative_ellipse(const Objective& f, const Vector& p, int count, double eps) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(f.hessian(p));
  return compensated(f.frame(p) * es.eigenvectors().leftCols(count), es.eigenvalues().head(count), eps);
}

Vector aligned(Vector v, const Vector& ref) {
  if (v.dot(ref) < 0) v = -v;
  return v;
}

// Follows the unstable line of p down to the next level; nullopt unless it lands on `target`.
std::optional<Vector> land_from(const Objective& f, const Vector& p, const Vector& offset,
                                const CriticalManifold& target, const CascadeParams& prm) {
  const Trajectory t = integrate(f, f.retract(p, offset), prm.flow);
  if (t.status != FlowStatus::Converged) return std::nullopt;
  if ((f.fingerprint(t.end()) - target.fingerprint).norm() > 1e-4) return std::nullopt;
  try {
    return project_to_critical(f, t.end(), target.dimension);
  } catch (const NoConvergence&) {
    return std::nullopt;
  }
}

std::optional<Vector> land(const Objective& f, const Vector& p, const Vector& dir, const CriticalManifold& target,
                           const CascadeParams& prm) {
  return land_from(f, p, prm.eps_shoot * dir, target, prm);
}

// Point where the h-trajectory through q meets {h = level}, flowing down or up as needed.
std::optional<Vector> to_level(const Objective& f, const MorseFunction& h, const Vector& q, int k, double level,
                               const CascadeParams& prm) {
  const double h0 = h.value(f, q);
  if (std::abs(h0 - level) < 1e-13) return q;
  const bool up = h0 < level;
  auto past = [&](const Vector& p) { return up ? h.value(f, p) >= level : h.value(f, p) <= level; };
  HFlowResult fl;
  try {
    fl = h_flow(f, h, q, k, up, prm.h, 400.0, past);
  } catch (const NoConvergence&) {
    return std::nullopt;
  }
  if (fl.points.size() < 2 || !past(fl.end)) return std::nullopt;
  try {
    const Vector& a = fl.points[fl.points.size() - 2];
    const double ha = h.value(f, a), hb = h.value(f, fl.end);
    Vector p = project_to_critical(f, f.retract(a, (ha - level) / (ha - hb) * f.log_map(a, fl.end)), k);
    for (int it = 0; it < 6; ++it) {
      const double r = h.value(f, p) - level;
      if (std::abs(r) < 1e-14) break;
      const Matrix kp = tangent_basis(f, p, k);
      const Vector g = kp * (kp.transpose() * h.gradient(f, p));
      if (g.squaredNorm() < 1e-20) return std::nullopt;
      p = project_to_critical(f, f.retract(p, -r / g.squaredNorm() * g), k);
    }
    return p;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// W^s_h(y) cut by a regular level {h = level} just above y, for ind_h(y) = 1 on C of dimension 2 or 3:
// two points, or a closed curve traced from the stable ellipse of y. A crossing of W^s_h(y) by a family
// is detected on this level by which side of the cut its trajectory passes, which stays well conditioned
// where the closest approach to y itself does not.
class Section {
 public:
  Section(const Objective& f, const MorseFunction& h, const HCriticalPoint& y, int k, double level,
          const CascadeParams& prm)
      : f_(f), h_(h), y_(y), k_(k), level_(level), prm_(prm) {
    const Matrix st = y.stable;
    if (k == 2) {
      for (int sgn : {1, -1}) {
        const Vector start = project_to_critical(f, f.retract(y.point, sgn * prm.eps_h * st.col(0)), k);
        const auto b = to_level(f, h, start, k, level, prm);
        if (!b) throw UnresolvedCount("stable arc of an h-saddle does not reach the section level");
        const Matrix kp = tangent_basis(f, *b, k);
        const Vector g = kp.transpose() * h.gradient(f, *b);
        Vector t(2);
        t << -g[1], g[0];
        nodes_.push_back({0.0, *b, (kp * t).normalized()});
      }
      return;
    }
    // Ascent contracts errors off the sheet, so the start radii need not be small; the fast one must
    // stay clear of the snap threshold of the flow.
    ellipse_ = compensated(st, y.h_eigenvalues.tail(st.cols()), prm.eps_h, 1e-6, 0.3);
    const int n = 64;
    for (int i = 0; i < n; ++i) {
      const double s = 2 * M_PI * i / n;
      nodes_.push_back({s, curve(s), Vector()});
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) set_normal(i);
    for (std::size_t i = 1; i < nodes_.size(); ++i)
      if (nodes_[i].normal.dot(nodes_[i - 1].normal) < 0) nodes_[i].normal = -nodes_[i].normal;
  }

  double level() const { return level_; }

  // Side of the cut the level point a lies on, and its distance to the cut. Near the curve the nodes
  // are refined until their spacing is small against that distance.
  std::pair<int, double> side(const Vector& a) {
    std::size_t j = nearest(a);
    double d = safe_distance(f_, nodes_[j].p, a);
    if (k_ == 3) {
      for (int it = 0; it < 40 && d < prm_.rho; ++it) {
        const double gap = std::max(spacing(j, -1), spacing(j, 1));
        if (gap <= std::max(1e-7, 0.1 * d)) break;
        refine(j);
        j = nearest(a);
        d = safe_distance(f_, nodes_[j].p, a);
      }
    }
    Vector v;
    try {
      v = f_.log_map(nodes_[j].p, a);
    } catch (const std::exception&) {
      return {0, d};
    }
    return {nodes_[j].normal.dot(v) >= 0 ? 1 : -1, d};
  }

 private:
  struct Node {
    double s;
    Vector p;
    Vector normal;
  };

  Vector curve(double s) const {
    const Vector start =
        project_to_critical(f_, f_.retract(y_.point, std::cos(s) * ellipse_.col(0) + std::sin(s) * ellipse_.col(1)), k_);
    if (h_.value(f_, start) >= level_) throw UnresolvedCount("section level too close to an h-saddle");
    const auto b = to_level(f_, h_, start, k_, level_, prm_);
    if (!b) throw UnresolvedCount("stable sheet of an h-saddle does not reach the section level");
    return *b;
  }

  std::size_t wrap(long i) const {
    const long n = static_cast<long>(nodes_.size());
    return static_cast<std::size_t>(((i % n) + n) % n);
  }

  double spacing(std::size_t j, int dir) const {
    return safe_distance(f_, nodes_[j].p, nodes_[wrap(static_cast<long>(j) + dir)].p);
  }

  // Curve normal inside the level set: orthogonal to grad h and to the curve tangent.
  void set_normal(std::size_t i) {
    Node& nd = nodes_[i];
    const Vector& prev = nodes_[wrap(static_cast<long>(i) - 1)].p;
    const Vector& next = nodes_[wrap(static_cast<long>(i) + 1)].p;
    const Matrix kp = tangent_basis(f_, nd.p, 3);
    const Eigen::Vector3d g = kp.transpose() * h_.gradient(f_, nd.p);
    const Eigen::Vector3d tau = kp.transpose() * (f_.log_map(nd.p, next) - f_.log_map(nd.p, prev));
    nd.normal = (kp * g.cross(tau)).normalized();
  }

  void refine(std::size_t j) {
    const double sj = nodes_[j].s;
    const std::size_t jn = wrap(static_cast<long>(j) + 1), jp = wrap(static_cast<long>(j) - 1);
    double sn = nodes_[jn].s, sp = nodes_[jp].s;
    if (sn <= sj) sn += 2 * M_PI;
    if (sp >= sj) sp -= 2 * M_PI;
    const Vector ref = nodes_[j].normal;
    insert(0.5 * (sj + sn), ref);
    insert(0.5 * (sp + sj), ref);
  }

  void insert(double s, const Vector& ref) {
    s = std::fmod(s, 2 * M_PI);
    if (s < 0) s += 2 * M_PI;
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), s, [](const Node& n, double v) { return n.s < v; });
    const std::size_t i = static_cast<std::size_t>(it - nodes_.begin());
    nodes_.insert(it, Node{s, curve(s), Vector()});
    set_normal(i);
    if (nodes_[i].normal.dot(ref) < 0) nodes_[i].normal = -nodes_[i].normal;
  }

  std::size_t nearest(const Vector& a) const {
    std::size_t best = 0;
    double bd = kInf;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const double d = safe_distance(f_, nodes_[i].p, a);
      if (d < bd) {
        bd = d;
        best = i;
      }
    }
    return best;
  }

  const Objective& f_;
  const MorseFunction& h_;
  const HCriticalPoint& y_;
  int k_;
  double level_;
  CascadeParams prm_;
  Matrix ellipse_;
  std::vector<Node> nodes_;
};

// Section level for y: halfway to the next critical value of h above it.
std::optional<double> section_level(const CascadeContext& ctx, const HCriticalPoint& y) {
  auto it = ctx.points.find(y.manifold);
  if (it == ctx.points.end()) return std::nullopt;
  double next = kInf;
  for (const auto& z : it->second)
    if (z.h_value > y.h_value + 1e-9) next = std::min(next, z.h_value);
  if (!std::isfinite(next)) return std::nullopt;
  return y.h_value + 0.5 * (next - y.h_value);
}

// Side probe against W^s_h(y): through the level-set cut when y is a saddle of h on a 2- or 3-dimensional
// manifold, otherwise by the closest approach to y.
std::function<Approach(const Vector&)> probe(const CascadeContext& ctx, const CriticalManifold& c,
                                             const MorseFunction& h, const HCriticalPoint& y,
                                             const CascadeParams& prm) {
  const Objective& f = *ctx.f;
  const int k = c.dimension;
  if (y.ind_h == 1 && (k == 2 || k == 3)) {
    const auto level = section_level(ctx, y);
    if (!level) throw UnresolvedCount("no h-critical value above an h-saddle");
    auto sec = std::make_shared<Section>(f, h, y, k, *level, prm);
    const double hy = y.h_value;
    return [&f, &h, k, sec, prm, hy](const Vector& q) {
      Approach a;
      // Below h(y) nothing lies in W^s_h(y): no side.
      if (h.value(f, q) <= hy) {
        a.valid = true;
        return a;
      }
      const auto p = to_level(f, h, q, k, sec->level(), prm);
      if (!p) return a;
      a.valid = true;
      const auto [s, d] = sec->side(*p);
      a.sign = s;
      a.d_min = d;
      return a;
    };
  }
  return [&f, &c, &h, &y, prm](const Vector& q) { return approach(f, c, h, y, q, prm); };
}

struct Family {
  std::function<Approach(double)> eval;
  double t0 = 0.0;
  double t1 = 1.0;
  bool periodic = false;
  std::string kind;
  int cascades = 0;
};

// Counts parameter values where the family's h-flow crosses the stable manifold of y (exit side flips).
// Every flip is bisected; flips whose closest approach stays beyond rho are discontinuities of the
// closest-approach point on the far side of C, not crossings.
void sweep(const Family& fam, const CascadeParams& prm, CascadeCount& out) {
  const int n = std::max(4, prm.sweep_samples);
  const double len = fam.t1 - fam.t0;
  std::vector<double> ts(n);
  std::vector<Approach> as(n);
  for (int i = 0; i < n; ++i) {
    ts[i] = fam.periodic ? fam.t0 + i * len / n : fam.t0 + i * len / (n - 1);
    as[i] = fam.eval(ts[i]);
  }
  auto certify = [&](double t, double d) {
    CertifiedLine l;
    l.kind = fam.kind;
    l.parameters = {t};
    l.distance = d;
    l.cascades = fam.cascades;
    out.certificates.push_back(l);
    ++out.lines;
  };

  for (int i = 0; i < n; ++i)
    if (as[i].hit) certify(ts[i], as[i].d_min);

  // A few ulps of the parameter: the family may be steep in t.
  const double floor = 8 * std::numeric_limits<double>::epsilon() * (std::abs(fam.t0) + std::abs(len));
  const int pairs = fam.periodic ? n : n - 1;
  for (int i = 0; i < pairs; ++i) {
    const int j = (i + 1) % n;
    Approach al = as[i], ar = as[j];
    if (!al.valid || !ar.valid || al.hit || ar.hit || al.sign == 0 || ar.sign == 0 || al.sign == ar.sign) continue;
    double tl = ts[i], tr = ts[j];
    if (tr < tl) tr += len;
    bool done = false;
    while (tr - tl > floor) {
      const double tm = 0.5 * (tl + tr);
      const Approach am = fam.eval(tm);
      if (am.valid && am.sign == 0 && !am.hit && std::min(al.d_min, ar.d_min) >= prm.rho) {
        done = true;  // far from the cut on both sides: a discontinuity, not a crossing
        break;
      }
      if (!am.valid || (am.sign == 0 && !am.hit)) {
        std::ostringstream os;
        os << fam.kind << ": family " << (am.valid ? "has no side" : "undefined") << " at parameter " << tm
           << " inside a flip";
        throw UnresolvedCount(os.str());
      }
      if (am.hit) {
        certify(tm, am.d_min);
        done = true;
        break;
      }
      if (am.sign == al.sign) {
        tl = tm;
        al = am;
      } else {
        tr = tm;
        ar = am;
      }
      const double d = std::min(al.d_min, ar.d_min);
      if (d < 1e-3 * prm.delta_match && tr - tl <= prm.param_tol) {
        certify(0.5 * (tl + tr), d);
        done = true;
        break;
      }
    }
    if (done) continue;
    const double d = std::min(al.d_min, ar.d_min);
    if (d < prm.delta_match && tr - tl <= prm.param_tol) {
      certify(0.5 * (tl + tr), d);
    } else if (d < prm.rho) {
      std::ostringstream os;
      os << fam.kind << ": flip near parameter " << tl << " not certified, closest approach " << d;
      throw UnresolvedCount(os.str());
    }
  }
}

// Polyline through W^u_h(x) for ind_h(x) = 1: both descending arcs joined through x.
struct UnstablePath {
  std::vector<Vector> nodes;
  std::vector<double> s;  // cumulative length
  std::size_t center = 0;  // index of x
};

UnstablePath unstable_path(const Objective& f, const MorseFunction& h, const HCriticalPoint& x, int dim,
                           const CascadeParams& prm) {
  std::vector<Vector> arcs[2];
  for (int k = 0; k < 2; ++k) {
    const double sgn = k == 0 ? -1.0 : 1.0;
    const Vector start = project_to_critical(f, f.retract(x.point, sgn * prm.eps_h * x.unstable.col(0)), dim);
    HOptions ho = prm.h;
    ho.flow_step = std::min(ho.flow_step, 0.02);
    const HFlowResult fl = h_flow(f, h, start, dim, false, ho, 400.0);
    if (!fl.converged) throw UnresolvedCount("unstable arc of an h-critical point did not converge");
    arcs[k] = fl.points;
  }
  UnstablePath p;
  for (auto it = arcs[0].rbegin(); it != arcs[0].rend(); ++it) p.nodes.push_back(*it);
  p.center = p.nodes.size();
  p.nodes.push_back(x.point);
  for (const auto& q : arcs[1]) p.nodes.push_back(q);
  p.s.push_back(0.0);
  for (std::size_t i = 1; i < p.nodes.size(); ++i) p.s.push_back(p.s.back() + safe_distance(f, p.nodes[i - 1], p.nodes[i]));
  return p;
}

Vector path_point(const Objective& f, const UnstablePath& path, double s, int dim, std::size_t* segment) {
  auto it = std::upper_bound(path.s.begin(), path.s.end(), s);
  std::size_t i = it == path.s.begin() ? 0 : static_cast<std::size_t>(it - path.s.begin()) - 1;
  i = std::min(i, path.nodes.size() - 2);
  *segment = i;
  const double span = path.s[i + 1] - path.s[i];
  const double frac = span > 0 ? std::clamp((s - path.s[i]) / span, 0.0, 1.0) : 0.0;
  const Vector q = f.retract(path.nodes[i], frac * f.log_map(path.nodes[i], path.nodes[i + 1]));
  return project_to_critical(f, q, dim);
}

CascadeCount count_within(const CascadeContext& ctx, const HCriticalPoint& x, const HCriticalPoint& y,
                          const CascadeParams& prm) {
  const Objective& f = *ctx.f;
  const CriticalManifold& c = manifold_of(ctx, x.manifold);
  const MorseFunction& h = h_of(ctx, c.id);
  const int k = c.dimension;
  CascadeCount out;

  if (x.ind_h == 1) {
    for (int sgn : {1, -1}) {
      const Vector start = project_to_critical(f, f.retract(x.point, sgn * prm.eps_h * x.unstable.col(0)), k);
      const HFlowResult fl = h_flow(f, h, start, k, false, prm.h, 400.0);
      if (!fl.converged) throw UnresolvedCount("h-arc did not converge");
      const double d = safe_distance(f, fl.end, y.point);
      if (d < prm.delta_match) {
        out.certificates.push_back({"h-arc", {double(sgn)}, d, 0});
        ++out.lines;
      }
    }
  } else if (y.ind_h == k - 1) {
    for (int sgn : {1, -1}) {
      const Vector start = project_to_critical(f, f.retract(y.point, sgn * prm.eps_h * y.stable.col(0)), k);
      const HFlowResult fl = h_flow(f, h, start, k, true, prm.h, 400.0);
      if (!fl.converged) throw UnresolvedCount("backward h-arc did not converge");
      const double d = safe_distance(f, fl.end, x.point);
      if (d < prm.delta_match) {
        out.certificates.push_back({"h-arc-backward", {double(sgn)}, d, 0});
        ++out.lines;
      }
    }
  } else if (x.ind_h == 2) {
    Family fam;
    fam.kind = "sweep";
    fam.t0 = 0.0;
    fam.t1 = 2 * M_PI;
    fam.periodic = true;
    const Matrix ell = compensated(x.unstable, x.h_eigenvalues.head(2), prm.eps_h);
    const auto side = probe(ctx, c, h, y, prm);
    fam.eval = [&](double t) {
      const Vector offset = std::cos(t) * ell.col(0) + std::sin(t) * ell.col(1);
      Vector q;
      try {
        q = project_to_critical(f, f.retract(x.point, offset), k);
      } catch (const NoConvergence&) {
        return Approach{};
      }
      return side(q);
    };
    sweep(fam, prm, out);
  } else {
    throw UnresolvedCount("h-index " + std::to_string(x.ind_h) + " -> " + std::to_string(y.ind_h) +
                          " on a manifold of dimension " + std::to_string(k) + " is not supported");
  }
  out.parity = out.lines % 2;
  return out;
}

CascadeCount count_newton(const CascadeContext& ctx, const HCriticalPoint& x, const HCriticalPoint& y,
                          const CascadeParams& prm) {
  const Objective& f = *ctx.f;
  const CriticalManifold& ca = manifold_of(ctx, x.manifold);
  const CriticalManifold& cb = manifold_of(ctx, y.manifold);
  const MorseFunction& ha = h_of(ctx, ca.id);
  const int ka = ca.dimension, kb = cb.dimension;
  const Matrix ky = tangent_basis(f, y.point, kb);
  const Vector ref = negative_directions(f, x.point, 1).col(0);
  CascadeCount out;

  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> g(0.0, 0.8);
  std::vector<Vector> starts(ca.representatives.begin(), ca.representatives.end());
  for (int w = 0; w < prm.newton_starts; ++w) {
    Vector p = starts[w % starts.size()];
    Vector s(ka);
    for (int i = 0; i < ka; ++i) s[i] = g(rng);
    try {
      p = project_to_critical(f, f.retract(p, tangent_basis(f, p, ka) * s), ka);
    } catch (const NoConvergence&) {
      continue;
    }
    starts.push_back(p);
  }

  struct Solution {
    Vector p;
    Vector dir;
  };
  std::vector<Solution> found;
  for (int sgn : {1, -1}) {
    for (const Vector& s0 : starts) {
      Vector p = s0;
      Vector dref = sgn * ref;
      auto residual = [&](const Vector& q, Vector* dir_out) -> std::optional<Vector> {
        const Vector dir = aligned(negative_directions(f, q, 1).col(0), dref);
        if (dir_out) *dir_out = dir;
        const auto l = land(f, q, dir, cb, prm);
        if (!l) return std::nullopt;
        const double d = safe_distance(f, y.point, *l);
        if (!std::isfinite(d)) return std::nullopt;
        return Vector(ky.transpose() * f.log_map(y.point, *l));
      };
      Vector dir;
      auto r = residual(p, &dir);
      bool ok = false;
      for (int it = 0; it < 30 && r; ++it) {
        if (r->norm() < 1e-9) {
          ok = true;
          break;
        }
        dref = dir;
        const Matrix kp = tangent_basis(f, p, ka);
        Matrix jac(kb, ka);
        const double step = 1e-5;
        bool fd_ok = true;
        for (int j = 0; j < ka && fd_ok; ++j) {
          Vector e = Vector::Zero(ka);
          e[j] = step;
          const Vector pp = project_to_critical(f, f.retract(p, kp * e), ka);
          const Vector pm = project_to_critical(f, f.retract(p, -kp * e), ka);
          const auto rp = residual(pp, nullptr), rm = residual(pm, nullptr);
          if (!rp || !rm) fd_ok = false;
          else jac.col(j) = (*rp - *rm) / (2 * step);
        }
        if (!fd_ok) break;
        Vector delta = jac.completeOrthogonalDecomposition().solve(-*r);
        if (delta.norm() > 0.3) delta *= 0.3 / delta.norm();
        bool moved = false;
        for (int half = 0; half < 8; ++half) {
          const Vector cand = project_to_critical(f, f.retract(p, kp * delta), ka);
          Vector cdir;
          const auto rc = residual(cand, &cdir);
          if (rc && rc->norm() < r->norm()) {
            p = cand;
            r = rc;
            dir = cdir;
            moved = true;
            break;
          }
          delta *= 0.5;
        }
        if (!moved) break;
      }
      if (!ok) continue;
      const bool dup = std::any_of(found.begin(), found.end(), [&](const Solution& s) {
        return safe_distance(f, s.p, p) < 1e-6 && s.dir.dot(dir) > 0;
      });
      if (dup) continue;
      found.push_back({p, dir});
    }
  }

  for (const Solution& s : found) {
    // The starting point must lie in W^u_h(x): climbing h from it returns to x.
    const HFlowResult up = h_flow(f, ha, s.p, ka, true, prm.h, 400.0);
    if (!up.converged || safe_distance(f, up.end, x.point) >= prm.delta_match) continue;
    CertifiedLine l;
    l.kind = "newton";
    l.parameters = std::vector<double>(s.p.data(), s.p.data() + s.p.size());
    const auto landed = land(f, s.p, s.dir, cb, prm);
    l.distance = landed ? safe_distance(f, y.point, *landed) : kInf;
    l.cascades = 1;
    if (l.distance >= prm.delta_match) continue;
    out.certificates.push_back(l);
    ++out.lines;
  }
  out.parity = out.lines % 2;
  return out;
}

CascadeCount count_across(const CascadeContext& ctx, const HCriticalPoint& x, const HCriticalPoint& y,
                          const CascadeParams& prm) {
  const Objective& f = *ctx.f;
  const CriticalManifold& ca = manifold_of(ctx, x.manifold);
  const CriticalManifold& cb = manifold_of(ctx, y.manifold);
  CascadeCount out;
  if (cb.energy >= ca.energy - 1e-9 || ca.index == 0) return out;

  for (const auto& c : ctx.manifolds) {
    if (c.id == ca.id || c.id == cb.id) continue;
    if (c.energy > cb.energy + 1e-9 && c.energy < ca.energy - 1e-9)
      throw UnresolvedCount("intermediate level " + std::to_string(c.energy) +
                            " between the endpoints: cascades with m >= 2 are not counted");
  }
  if (cb.index > 0) throw UnresolvedCount("landing on a manifold of positive index is not supported");

  const int a = x.ind_h, b = ca.index, c = y.ind_h;
  const int params = a + b - 1;
  const MorseFunction& hb = h_of(ctx, cb.id);

  if (params != c) return out;  // no rigid lines in this configuration

  if (params == 0) {
    const Vector e = negative_directions(f, x.point, 1).col(0);
    for (int sgn : {1, -1}) {
      const auto q = land(f, x.point, sgn * e, cb, prm);
      if (!q) continue;
      const Approach ap = approach(f, cb, hb, y, *q, prm);
      if (ap.hit) {
        out.certificates.push_back({"discrete", {double(sgn)}, ap.d_min, 1});
        ++out.lines;
      }
    }
  } else if (params == 1 && a == 0 && b == 2) {
    const Matrix e = negative_ellipse(f, x.point, 2, prm.eps_shoot);
    const auto side = probe(ctx, cb, hb, y, prm);
    Family fam;
    fam.kind = "sweep";
    fam.cascades = 1;
    fam.t0 = 0.0;
    fam.t1 = 2 * M_PI;
    fam.periodic = true;
    fam.eval = [&](double t) {
      const auto q = land_from(f, x.point, std::cos(t) * e.col(0) + std::sin(t) * e.col(1), cb, prm);
      if (!q) return Approach{};
      return side(*q);
    };
    sweep(fam, prm, out);
  } else if (params == 1 && a == 1 && b == 1) {
    const MorseFunction& ha = h_of(ctx, ca.id);
    const UnstablePath path = unstable_path(f, ha, x, ca.dimension, prm);
    // Unstable f-direction at each node, kept continuous along the path.
    std::vector<Vector> dirs(path.nodes.size());
    const std::size_t mid = path.center;
    dirs[mid] = negative_directions(f, x.point, 1).col(0);
    for (std::size_t i = mid + 1; i < path.nodes.size(); ++i)
      dirs[i] = aligned(negative_directions(f, path.nodes[i], 1).col(0), dirs[i - 1]);
    for (std::size_t i = mid; i-- > 0;) dirs[i] = aligned(negative_directions(f, path.nodes[i], 1).col(0), dirs[i + 1]);

    const auto side = probe(ctx, cb, hb, y, prm);
    for (int sgn : {1, -1}) {
      Family fam;
      fam.kind = "sweep";
      fam.cascades = 1;
      fam.t0 = 0.0;
      fam.t1 = path.s.back();
      fam.eval = [&, sgn](double s) {
        std::size_t seg = 0;
        Vector p;
        try {
          p = path_point(f, path, s, ca.dimension, &seg);
        } catch (const NoConvergence&) {
          return Approach{};
        }
        const Vector dir = aligned(negative_directions(f, p, 1).col(0), dirs[seg]);
        const auto q = land(f, p, sgn * dir, cb, prm);
        if (!q) return Approach{};
        return side(*q);
      };
      sweep(fam, prm, out);
    }
  } else if (b == 1 && a == ca.dimension && c == cb.dimension) {
    return count_newton(ctx, x, y, prm);
  } else {
    std::ostringstream os;
    os << "cascade configuration (ind_h " << a << ", ind_f " << b << ", target ind_h " << c << ") is not supported";
    throw UnresolvedCount(os.str());
  }
  out.parity = out.lines % 2;
  return out;
}

}  // namespace

CascadeCount enumerate_cascades(const CascadeContext& ctx, const HCriticalPoint& x, const HCriticalPoint& y,
                                const CascadeParams& prm) {
  if (!ctx.f) throw std::invalid_argument("enumerate_cascades: no objective");
  if (x.Ind != y.Ind + 1) throw std::invalid_argument("enumerate_cascades: Ind(x) must equal Ind(y) + 1");
  if (excluded(ctx, x.manifold) || excluded(ctx, y.manifold))
    throw UnresolvedCount("endpoint lies on a manifold that failed the Morse-Bott check");
  try {
    if (x.manifold == y.manifold) return count_within(ctx, x, y, prm);
    return count_across(ctx, x, y, prm);
  } catch (const UnresolvedCount& e) {
    std::ostringstream os;
    os << "manifold " << x.manifold << " ind_h " << x.ind_h << " -> manifold " << y.manifold << " ind_h " << y.ind_h
       << ": " << e.what();
    throw UnresolvedCount(os.str());
  }
}

std::vector<FamilyLine> certified_family(const CascadeContext& ctx, const HCriticalPoint& x, const HCriticalPoint& y,
                                         const CascadeParams& prm, int samples) {
  const Objective& f = *ctx.f;
  const CriticalManifold& ca = manifold_of(ctx, x.manifold);
  const CriticalManifold& cb = manifold_of(ctx, y.manifold);
  if (ca.dimension != 0 || ca.index != 2)
    throw UnresolvedCount("certified_family: only isolated sources of index 2 are supported");
  const MorseFunction& hb = h_of(ctx, cb.id);
  const Matrix e = negative_ellipse(f, x.point, 2, prm.eps_shoot);
  std::vector<FamilyLine> out;
  for (int i = 0; i < samples; ++i) {
    const double t = 2 * M_PI * i / samples;
    const auto q = land_from(f, x.point, std::cos(t) * e.col(0) + std::sin(t) * e.col(1), cb, prm);
    if (!q) continue;
    const Approach ap = approach(f, cb, hb, y, *q, prm);
    if (ap.hit) out.push_back({t, ap.d_min});
  }
  return out;
}

}  // namespace ymmb
