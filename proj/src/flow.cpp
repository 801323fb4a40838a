#include "ymmb/flow.hpp"

#include <algorithm>
#include <cmath>

#include "ymmb/lie_group.hpp"

namespace ymmb {

std::string to_string(FlowStatus s) {
  switch (s) {
    case FlowStatus::Converged:
      return "converged";
    case FlowStatus::MaxTime:
      return "max_time";
    case FlowStatus::CutLocus:
      return "cut_locus";
    case FlowStatus::EnergyIncrease:
      return "energy_increase";
    case FlowStatus::Stopped:
      return "stopped";
  }
  return "unknown";
}

namespace {

void record(Trajectory& t, double s, const Vector& p, double e, double g, bool keep_point) {
  t.s.push_back(s);
  t.energy.push_back(e);
  t.grad_norm.push_back(g);
  if (keep_point) t.points.push_back(p);
}

}  // namespace

Trajectory integrate(const Objective& f, const Vector& start, const FlowController& c, const FlowObserver& observer) {
  Trajectory t;
  Vector p = start;
  double e, gn;
  Vector g;
  try {
    e = f.value(p);
    g = f.gradient(p);
  } catch (const CutLocusError&) {
    t.status = FlowStatus::CutLocus;
    return t;
  }
  gn = g.norm();
  double s = 0.0;
  record(t, s, p, e, gn, true);
  if (gn < c.tol_g) {
    t.status = FlowStatus::Converged;
    return t;
  }
  double h = c.h_initial;
  long accepted = 0;
  for (long step = 0; step < c.max_steps; ++step) {
    if (s >= c.s_max) {
      t.status = FlowStatus::MaxTime;
      break;
    }
    h = std::min({h, c.h_max, c.s_max - s + 1e-15});
    Vector q, gq;
    double eq = 0.0;
    bool ok = true;
    try {
      const Vector k1 = -g;
      const Vector k2 = -f.gradient(f.retract(p, 0.5 * h * k1));
      const Vector k3 = -f.gradient(f.retract(p, 0.5 * h * k2));
      const Vector k4 = -f.gradient(f.retract(p, h * k3));
      const Vector incr = (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
      if (incr.cwiseAbs().maxCoeff() > c.max_jump) {
        ok = false;
      } else {
        q = f.retract(p, incr);
        eq = f.value(q);
        ok = eq <= e + c.energy_slack * (1.0 + std::abs(e));
        if (ok) gq = f.gradient(q);
      }
    } catch (const CutLocusError&) {
      // Shrink first; a persistent hit is reported below.
      if (h <= c.h_min) {
        t.status = FlowStatus::CutLocus;
        break;
      }
      ok = false;
    }
    if (!ok) {
      ++t.rejected_steps;
      h *= 0.5;
      if (h < c.h_min) {
        t.status = FlowStatus::EnergyIncrease;
        break;
      }
      continue;
    }
    p = q;
    e = eq;
    g = gq;
    gn = g.norm();
    s += h;
    ++accepted;
    const bool converged = gn < c.tol_g;
    const bool keep = c.record_stride <= 1 || accepted % c.record_stride == 0 || converged;
    record(t, s, p, e, gn, keep);
    if (converged) {
      t.status = FlowStatus::Converged;
      break;
    }
    if (observer && observer(s, p, e, gn)) {
      t.status = FlowStatus::Stopped;
      break;
    }
    h *= c.growth;
  }
  if (t.points.empty() || (t.points.back() - p).norm() != 0.0) t.points.push_back(p);
  return t;
}

Spectrum hessian_spectrum(const Objective& f, const Vector& p, double rel_kernel, double index_threshold) {
  Spectrum sp;
  const Matrix h = f.hessian(p);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.transpose()));
  sp.eigenvalues = es.eigenvalues();
  sp.eigenvectors = f.frame(p) * es.eigenvectors();
  const double radius = sp.eigenvalues.size() ? sp.eigenvalues.cwiseAbs().maxCoeff() : 0.0;
  sp.threshold = rel_kernel * std::max(1.0, radius);
  for (int i = 0; i < sp.eigenvalues.size(); ++i) {
    const double l = sp.eigenvalues[i];
    if (std::abs(l) <= sp.threshold) ++sp.kernel;
    if (l < -index_threshold) ++sp.negative;
    if (l > sp.threshold && sp.spectral_gap == 0.0) sp.spectral_gap = l;
  }
  return sp;
}

Vector refine_critical(const Objective& f, const Vector& guess, const RefineOptions& o) {
  Vector p = guess;
  Vector g = f.gradient(p);
  if (!(g.norm() < o.precondition)) {
    throw PreconditionError("refine_critical: gradient norm " + std::to_string(g.norm()) + " exceeds " +
                            std::to_string(o.precondition));
  }
  for (int it = 0; it <= o.max_iterations; ++it) {
    if (g.norm() < o.target) return p;
    if (it == o.max_iterations) break;
    const Matrix b = f.frame(p);
    const Matrix h = f.hessian(p);
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.transpose()));
    const double cut = o.kernel_threshold * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    const Vector gb = es.eigenvectors().transpose() * (b.transpose() * g);
    Vector y = Vector::Zero(gb.size());
    for (int i = 0; i < gb.size(); ++i)
      if (std::abs(es.eigenvalues()[i]) > cut) y[i] = -gb[i] / es.eigenvalues()[i];
    const Vector step = b * (es.eigenvectors() * y);
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 12; ++ls) {
      const Vector q = f.retract(p, t * step);
      const Vector gq = f.gradient(q);
      if (gq.norm() < g.norm()) {
        p = q;
        g = gq;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
  }
  if (g.norm() < o.target) return p;
  throw NoConvergence("refine_critical: gradient norm " + std::to_string(g.norm()) + " after refinement");
}

DecayFit decay_fit(const Trajectory& traj, const Spectrum& limit, const DecayOptions& o) {
  if (traj.status != FlowStatus::Converged) throw InsufficientTail("decay_fit: trajectory did not converge");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < traj.s.size(); ++i) {
    if (traj.grad_norm[i] < o.upper && traj.grad_norm[i] > o.lower) {
      xs.push_back(traj.s[i]);
      ys.push_back(std::log(traj.grad_norm[i]));
    }
  }
  if (static_cast<int>(xs.size()) < o.min_samples) throw InsufficientTail("decay_fit: too few tail samples");
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  DecayFit fit;
  fit.rate = -sxy / sxx;
  fit.correlation = std::abs(sxy) / std::sqrt(sxx * syy);
  fit.s_begin = xs.front();
  fit.s_end = xs.back();
  fit.samples = static_cast<int>(xs.size());
  fit.spectral_gap = limit.spectral_gap;
  fit.limit_id = traj.limit_id;
  fit.agrees = fit.spectral_gap > 0.0 && fit.correlation >= o.min_correlation &&
               std::abs(fit.rate - fit.spectral_gap) <= 0.1 * fit.spectral_gap;
  for (int i = 0; i < limit.eigenvalues.size(); ++i) {
    const double l = std::abs(limit.eigenvalues[i]);
    if (l > limit.threshold && l < 0.1 * fit.spectral_gap) fit.near_kernel = true;
  }
  return fit;
}

Trajectory shoot_unstable(const Objective& f, const Vector& x, const Vector& direction, double epsilon,
                          const FlowController& controller, const FlowObserver& observer, double contamination_tol) {
  if (std::abs(direction.norm() - 1.0) > 1e-8) throw PreconditionError("shoot_unstable: direction must be a unit vector");
  const Spectrum sp = hessian_spectrum(f, x);
  const Matrix neg = sp.eigenvectors.leftCols(sp.negative);
  const Vector rest = direction - neg * (neg.transpose() * direction);
  if (rest.norm() > contamination_tol) {
    throw PreconditionError("shoot_unstable: direction has component " + std::to_string(rest.norm()) +
                            " outside the unstable eigenspace");
  }
  if (epsilon == 0.0) {
    Trajectory t;
    record(t, 0.0, x, f.value(x), f.gradient(x).norm(), true);
    t.status = FlowStatus::Converged;
    return t;
  }
  return integrate(f, f.retract(x, epsilon * direction), controller, observer);
}

}  // namespace ymmb
