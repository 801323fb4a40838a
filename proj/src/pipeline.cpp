#include "ymmb/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ymmb {

HomologyOptions options_from_config(const Config& c, HomologyOptions o) {
  o.seed = static_cast<std::uint64_t>(c.integer("seed", static_cast<long long>(o.seed)));
  o.survey.n_starts = static_cast<int>(c.integer("survey.starts", o.survey.n_starts));
  o.survey.ascent = c.boolean("survey.ascent", o.survey.ascent);
  o.survey.saddle_search = c.boolean("survey.saddle_search", o.survey.saddle_search);
  o.survey.cluster_tol = c.number("survey.cluster_tol", o.survey.cluster_tol);
  FlowController& fl = o.survey.flow;
  fl.tol_g = c.number("flow.tol_g", fl.tol_g);
  fl.s_max = c.number("flow.s_max", fl.s_max);
  fl.h_initial = c.number("flow.h_initial", fl.h_initial);
  fl.h_max = c.number("flow.h_max", fl.h_max);
  fl.max_steps = c.integer("flow.max_steps", fl.max_steps);
  o.cascade.flow = fl;
  o.cascade.eps_shoot = c.number("cascade.eps_shoot", o.cascade.eps_shoot);
  o.cascade.delta_match = c.number("cascade.delta_match", o.cascade.delta_match);
  o.cascade.eps_h = c.number("cascade.eps_h", o.cascade.eps_h);
  o.cascade.rho = c.number("cascade.rho", o.cascade.rho);
  o.cascade.sweep_samples = static_cast<int>(c.integer("cascade.sweep_samples", o.cascade.sweep_samples));
  o.h.attempts = static_cast<int>(c.integer("h.attempts", o.h.attempts));
  o.h.starts = static_cast<int>(c.integer("h.starts", o.h.starts));
  o.cascade.h = o.h;
  return o;
}

HomologyReport homology_from_survey(const Objective& f, const SurveyResult& survey, const HomologyOptions& o) {
  HomologyReport r;
  r.survey = survey;
  r.context.f = &f;
  r.context.manifolds = survey.manifolds;

  auto wanted = [&](const CriticalManifold& c) {
    if (o.levels.empty()) return true;
    return std::any_of(o.levels.begin(), o.levels.end(), [&](double e) { return std::abs(e - c.energy) < 1e-6; });
  };

  for (const auto& c : survey.manifolds) {
    if (!wanted(c)) {
      r.context.excluded.push_back(c.id);
      r.partial = true;
      r.notes.push_back("level " + std::to_string(c.energy) + " not requested");
      continue;
    }
    if (!c.morse_bott.passed) {
      if (!o.allow_partial)
        throw MorseBottFailure("manifold at energy " + std::to_string(c.energy) + ": " + c.morse_bott.detail);
      r.context.excluded.push_back(c.id);
      r.partial = true;
      r.notes.push_back("manifold " + std::to_string(c.id) + " at energy " + std::to_string(c.energy) +
                        " excluded: " + c.morse_bott.detail);
    }
  }

  std::mt19937_64 hrng = substream(o.seed, "h-choice");
  std::vector<Generator> gens;
  for (const auto& c : survey.manifolds) {
    if (std::find(r.context.excluded.begin(), r.context.excluded.end(), c.id) != r.context.excluded.end()) continue;
    auto [h, pts] = choose_morse_function(f, c, o.h, hrng);
    r.context.h[c.id] = h;
    r.context.points[c.id] = pts;
    for (const auto& p : pts) {
      gens.push_back({p.manifold, p.ind_f, p.ind_h, p.Ind, point_hash(p.point)});
      r.points.push_back(p);
    }
  }

  CascadeParams prm = o.cascade;
  prm.h = o.h;
  std::map<std::pair<int, int>, int> counts;
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    for (std::size_t j = 0; j < r.points.size(); ++j) {
      if (r.points[i].Ind != r.points[j].Ind + 1) continue;
      PairCount pc;
      pc.from = static_cast<int>(i);
      pc.to = static_cast<int>(j);
      pc.count = enumerate_cascades(r.context, r.points[i], r.points[j], prm);
      counts[{pc.from, pc.to}] = pc.count.parity;
      r.pairs.push_back(std::move(pc));
    }
  }

  r.complex = boundary_matrices(gens, counts);
  r.complex.partial = r.partial;
  for (const auto& pc : r.pairs) {
    const int k = r.points[pc.from].Ind;
    const auto& cols = r.complex.by_degree[k];
    const auto& rows = r.complex.by_degree[k - 1];
    const int col = static_cast<int>(std::find(cols.begin(), cols.end(), pc.from) - cols.begin());
    const int row = static_cast<int>(std::find(rows.begin(), rows.end(), pc.to) - rows.begin());
    r.complex.provenance[{k, row, col}] = pc.count.certificates;
  }
  r.betti = homology(r.complex);
  return r;
}

HomologyReport compute_homology(const Objective& f, const HomologyOptions& o) {
  std::mt19937_64 srng = substream(o.seed, "survey");
  const SurveyResult s = survey_critical(f, o.survey, srng);
  return homology_from_survey(f, s, o);
}

}  // namespace ymmb
