#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "ymmb/verify.hpp"

namespace ymmb {

std::vector<Vector> dense_representatives(const Objective& f, const CriticalManifold& c, double spacing,
                                          int max_points) {
  std::vector<Vector> pts;
  std::deque<Vector> frontier;
  auto covered = [&](const Vector& q) {
    for (const Vector& p : pts)
      if (safe_distance(f, p, q) < 0.7 * spacing) return true;
    return false;
  };
  for (const Vector& r : c.representatives) {
    if (covered(r)) continue;
    pts.push_back(r);
    frontier.push_back(r);
  }
  const int k = c.dimension;
  while (k > 0 && !frontier.empty() && static_cast<int>(pts.size()) < max_points) {
    const Vector p = frontier.front();
    frontier.pop_front();
    const Matrix b = tangent_basis(f, p, k);
    for (int i = 0; i < k; ++i) {
      for (double sign : {1.0, -1.0}) {
        Vector q;
        try {
          q = project_to_critical(f, f.retract(p, sign * spacing * b.col(i)), k);
        } catch (const std::exception&) {
          continue;
        }
        if ((f.fingerprint(q) - c.fingerprint).norm() > 1e-4 || covered(q)) continue;
        pts.push_back(q);
        frontier.push_back(q);
      }
    }
  }
  return pts;
}

std::vector<Connection> critical_connections(const YMObjective& f, const SurveyResult& s, double spacing) {
  std::vector<Connection> out;
  for (const CriticalManifold& c : s.manifolds)
    for (const Vector& p : dense_representatives(f, c, spacing)) out.push_back(f.connection(p));
  return out;
}

namespace {

double slice_distance(const Connection& x, const ModelPerturbation& t, const SpanningTree& tree) {
  try {
    return slice_coordinates(x, t.reference, tree).distance();
  } catch (const NotInDomainError&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

AdmissibilityReport check_admissible(const YMObjective& f, const SurveyResult& s, const PerturbationBank& bank,
                                     double epsilon, double spacing) {
  AdmissibilityReport r;
  r.epsilon = epsilon;
  r.spacing = spacing;
  const std::vector<Connection> reps = critical_connections(f, s, spacing);
  r.representatives = static_cast<int>(reps.size());
  r.admissible = is_admissible(bank, reps, epsilon + spacing);
  std::ostringstream os;
  for (std::size_t l = 0; l < bank.entries().size(); ++l) {
    const auto& e = bank.entries()[l];
    double d = std::numeric_limits<double>::infinity();
    for (const Connection& x : reps) d = std::min(d, slice_distance(x, e.term, bank.tree()));
    const double clearance = d - e.term.support_radius();
    r.clearance.push_back(clearance);
    if (e.lambda != 0.0 && !(clearance > epsilon + spacing))
      os << "term " << l << " (k = " << e.term.k << ") reaches within " << d << " of the critical set; support radius "
         << e.term.support_radius() << " plus margin " << epsilon + spacing << " required. ";
  }
  r.detail = r.admissible ? "admissible" : os.str();
  return r;
}

PerturbationBank admissible_ym_bank(const YMObjective& f, const SurveyResult& s, int terms, int k, double norm,
                                    double epsilon, std::mt19937_64& rng) {
  const double spacing = 0.1;
  const std::vector<Connection> reps = critical_connections(f, s, spacing);
  const SpanningTree& tree = f.tree();
  PerturbationBank bank(tree);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int attempt = 0; attempt < 2000 && static_cast<int>(bank.entries().size()) < terms; ++attempt) {
    const Connection ref = f.connection(f.random_point(rng));
    TangentField eta = TangentField::zeros(ref.edges.size());
    for (int e : tree.tree_edges) eta.active[e] = false;
    for (int e : tree.free_edges)
      for (int i = 0; i < ref.group.dim(); ++i) eta.values[e][i] = normal(rng);
    ModelPerturbation t = make_model_perturbation(ref, eta, k, tree);
    bool clear = true;
    for (const Connection& x : reps)
      if (!(slice_distance(x, t, tree) > t.support_radius() + epsilon + spacing)) {
        clear = false;
        break;
      }
    if (!clear) continue;
    t.constant = estimate_constant(t, tree, 64, rng);
    bank.add(std::move(t), 1.0);
  }
  if (static_cast<int>(bank.entries().size()) < terms)
    throw std::runtime_error("no admissible model perturbation found; increase k");
  const double scale = norm / bank.norm();
  for (auto& e : bank.entries()) e.lambda *= scale;
  return bank;
}

std::shared_ptr<EmbeddedObjective> perturbed_benchmark(const std::function<std::shared_ptr<EmbeddedObjective>()>& make,
                                                       const SurveyResult& s, int terms, int k, double lambda,
                                                       double epsilon, std::mt19937_64& rng) {
  auto f = make();
  const double spacing = 0.05;
  std::vector<Vector> reps;
  for (const CriticalManifold& c : s.manifolds)
    for (const Vector& p : dense_representatives(*f, c, spacing)) reps.push_back(p);
  for (int l = 0; l < terms; ++l) f->add_perturbation(random_admissible_bump(*f, reps, k, lambda, epsilon + spacing, rng));
  if (!bumps_admissible(*f, reps, epsilon + spacing)) throw std::logic_error("bump placement not admissible");
  return f;
}

}  // namespace ymmb
