#include "ymmb/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace ymmb {

namespace {

std::shared_ptr<const OrientedCellComplex> share(OrientedCellComplex c) {
  return std::make_shared<const OrientedCellComplex>(std::move(c));
}

std::shared_ptr<const OrientedCellComplex> weighted(OrientedCellComplex c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (double& w : c.face_weights) w = u(rng);
  for (double& w : c.edge_weights) w = u(rng);
  return share(std::move(c));
}

TangentField random_tangent(const Connection& c, const SpanningTree& tree, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, 1.0);
  TangentField t = TangentField::zeros(c.edges.size());
  for (int e : tree.tree_edges) t.active[e] = false;
  for (int e : tree.free_edges)
    for (int i = 0; i < c.group.dim(); ++i) t.values[e][i] = scale * n(rng);
  return t;
}

// Random tree-gauged connection with face holonomies clear of the cut locus.
Connection moderate(const std::shared_ptr<const OrientedCellComplex>& cx, const LieGroup& g, const SpanningTree& tree,
                    std::mt19937_64& rng, double scale) {
  for (;;) {
    const Connection id = Connection::trivial(cx, g);
    Connection c = retract(id, random_tangent(id, tree, rng, scale));
    bool ok = true;
    for (std::size_t f = 0; f < cx->faces.size(); ++f)
      ok = ok && LieGroup::angle(holonomy(c, static_cast<int>(f))) < M_PI - 0.2;
    if (ok) return c;
  }
}

TangentField unit(const Connection& c, int edge, int i, double t) {
  TangentField x = TangentField::zeros(c.edges.size());
  x.values[edge][i] = t;
  return x;
}

std::shared_ptr<YMObjective> u1_grid(std::shared_ptr<const PerturbationBank> bank = nullptr,
                                     EnergyBackend backend = EnergyBackend::Wilson) {
  return std::make_shared<YMObjective>(share(build_torus_grid(2, 1)), LieGroup(GroupKind::U1), backend,
                                       std::move(bank));
}

std::shared_ptr<YMObjective> su2_genus_one() {
  return std::make_shared<YMObjective>(share(build_minimal_genus_complex(1)), LieGroup(GroupKind::SU2),
                                       EnergyBackend::Wilson);
}

SurveyResult quick_survey(const Objective& f, std::uint64_t seed, int starts = 30) {
  SurveyOptions so;
  so.n_starts = starts;
  auto rng = substream(seed, "survey");
  return survey_critical(f, so, rng);
}

Json ints(const std::vector<int>& v) { return Json(v); }

std::string betti_string(const std::vector<int>& b) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < b.size(); ++i) os << (i ? "," : "") << b[i];
  os << ')';
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------- 1

SuiteResult suite_derivatives(const SuiteOptions& o) {
  SuiteResult r;
  r.name = "derivatives";
  auto rng = substream(o.seed, "derivatives");
  const double h = 1e-5, gtol = 1e-6, htol = 1e-5;
  Json cases = Json::array();
  bool pass = true;
  double worst_g = 0.0, worst_h = 0.0;
  for (GroupKind kind : {GroupKind::U1, GroupKind::SU2}) {
    for (EnergyBackend backend : {EnergyBackend::Wilson, EnergyBackend::LogNorm}) {
      const LieGroup grp(kind);
      const int d = grp.dim();
      double gerr = 0.0, herr = 0.0;
      for (int k = 0; k < 20; ++k) {
        const auto cx = weighted(k % 2 ? build_torus_grid(2, 2) : build_minimal_genus_complex(2), rng);
        const SpanningTree tree = spanning_tree(*cx);
        const Connection c = moderate(cx, grp, tree, rng, 0.5);
        const TangentField g = gradient(c, backend, nullptr, tree);
        const double gscale = std::max(1.0, g.max_abs() * *std::max_element(cx->edge_weights.begin(), cx->edge_weights.end()));
        for (int e : tree.free_edges)
          for (int i = 0; i < d; ++i) {
            const double fd =
                (energy(retract(c, unit(c, e, i, h)), backend) - energy(retract(c, unit(c, e, i, -h)), backend)) /
                (2 * h);
            gerr = std::max(gerr, std::abs(fd - cx->edge_weights[e] * g.values[e][i]) / gscale);
          }
        // Mixed partials from differences of the right-trivialized gradient; on the same edge the
        // moving frame contributes half a bracket, which the symmetric Hessian does not contain.
        const Eigen::MatrixXd hm = hessian_matrix(c, backend, nullptr, tree);
        const double hscale = std::max(1.0, hm.cwiseAbs().maxCoeff());
        const int n = static_cast<int>(tree.free_edges.size());
        for (int col = 0; col < n * d; ++col) {
          const int ec = tree.free_edges[col / d];
          const TangentField gp = gradient(retract(c, unit(c, ec, col % d, h)), backend, nullptr, tree);
          const TangentField gm = gradient(retract(c, unit(c, ec, col % d, -h)), backend, nullptr, tree);
          for (int row = 0; row < n * d; ++row) {
            const int er = tree.free_edges[row / d];
            double fd = cx->edge_weights[er] * (gp.values[er][row % d] - gm.values[er][row % d]) / (2 * h);
            if (er == ec) fd += 0.5 * cx->edge_weights[er] * LieGroup::bracket(LieGroup::basis(col % d), g.values[er])[row % d];
            herr = std::max(herr, std::abs(fd - hm(row, col)) / hscale);
          }
        }
      }
      const bool ok = gerr <= gtol && herr <= htol;
      pass = pass && ok;
      worst_g = std::max(worst_g, gerr);
      worst_h = std::max(worst_h, herr);
      cases.push_back({{"group", to_string(kind)},
                       {"backend", to_string(backend)},
                       {"connections", 20},
                       {"gradient_rel_error", checked(gerr, gtol, gerr <= gtol)},
                       {"hessian_rel_error", checked(herr, htol, herr <= htol)}});
    }
  }
  r.pass = pass;
  r.details = {{"cases", cases}};
  std::ostringstream os;
  os << "gradient rel err " << worst_g << " (tol " << gtol << "), hessian rel err " << worst_h << " (tol " << htol
     << ") over 4 x 20 connections";
  r.summary = os.str();
  return r;
}

// ---------------------------------------------------------------- 2

SuiteResult suite_gauge_invariance(const SuiteOptions& o) {
  SuiteResult r;
  r.name = "gauge_invariance";
  auto rng = substream(o.seed, "gauge");
  const std::vector<std::shared_ptr<const OrientedCellComplex>> cxs{
      share(build_minimal_genus_complex(1)), share(build_minimal_genus_complex(2)), share(build_torus_grid(2, 1)),
      share(build_torus_grid(2, 2)), share(build_sphere_complex())};
  const LieGroup su2(GroupKind::SU2), u1(GroupKind::U1);
  const double etol = 1e-12, gtol = 1e-9;

  double drift = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto& cx = cxs[k % cxs.size()];
    const LieGroup& grp = k % 2 ? su2 : u1;
    const Connection c = moderate(cx, grp, spanning_tree(*cx), rng, 0.6);
    GaugeTransform g = GaugeTransform::identity(cx->vertex_count);
    for (auto& v : g.vertices) v = grp.haar_sample(rng);
    const Connection d = apply_gauge(c, g);
    for (EnergyBackend b : {EnergyBackend::Wilson, EnergyBackend::LogNorm}) {
      const double e = energy(c, b);
      drift = std::max(drift, std::abs(energy(d, b) - e) / (1 + std::abs(e)));
    }
  }

  // YM^V on the tree slice: gauge, re-fix the tree gauge, compare.
  const auto cx = share(build_torus_grid(2, 2));
  const SpanningTree tree = spanning_tree(*cx);
  auto bank = std::make_shared<PerturbationBank>(tree);
  const Connection ref = moderate(cx, su2, tree, rng, 0.6);
  bank->add(make_model_perturbation(ref, random_tangent(ref, tree, rng, 1.0), 1, tree), 0.3);
  double drift_v = 0.0, equiv = 0.0;
  int inside = 0;
  for (int k = 0; k < 100; ++k) {
    const Connection c = retract(ref, random_tangent(ref, tree, rng, 0.25));
    GaugeTransform g = GaugeTransform::identity(cx->vertex_count);
    for (auto& v : g.vertices) v = su2.haar_sample(rng);
    const Connection d = tree_gauge_fix(apply_gauge(c, g), tree).connection;
    for (EnergyBackend b : {EnergyBackend::Wilson, EnergyBackend::LogNorm}) {
      const double e = energy(c, b, bank.get());
      drift_v = std::max(drift_v, std::abs(energy(d, b, bank.get()) - e) / (1 + std::abs(e)));
    }
    inside += bank->value(c) != 0.0;
    // Constant conjugation: the gradient transforms by ad.
    const GroupElement q = su2.haar_sample(rng);
    const Connection cq = apply_gauge(c, GaugeTransform{std::vector<GroupElement>(cx->vertex_count, q)});
    for (const PerturbationBank* pb : {static_cast<const PerturbationBank*>(nullptr), static_cast<const PerturbationBank*>(bank.get())}) {
      for (EnergyBackend b : {EnergyBackend::Wilson, EnergyBackend::LogNorm}) {
        const TangentField g0 = gradient(c, b, pb, tree), g1 = gradient(cq, b, pb, tree);
        for (int e : tree.free_edges) equiv = std::max(equiv, (g1.values[e] - LieGroup::ad(q, g0.values[e])).norm());
      }
    }
  }
  r.pass = drift <= etol && drift_v <= etol && equiv <= gtol && inside > 0;
  r.details = {{"transforms", 100},
               {"energy_drift", checked(drift, etol, drift <= etol)},
               {"perturbed_energy_drift", checked(drift_v, etol, drift_v <= etol)},
               {"perturbed_samples_in_support", inside},
               {"gradient_equivariance", checked(equiv, gtol, equiv <= gtol)}};
  std::ostringstream os;
  os << "energy drift " << drift << ", YM^V drift " << drift_v << " (tol " << etol << " (1+|E|)), equivariance "
     << equiv << " (tol " << gtol << ")";
  r.summary = os.str();
  return r;
}

// ---------------------------------------------------------------- 3

SuiteResult suite_energy_monotonicity(const SuiteOptions& o) {
  SuiteResult r;
  r.name = "energy_monotonicity";
  const double slack = 1e-10;
  std::vector<std::pair<std::string, std::shared_ptr<const Objective>>> cases{
      {"s2", sphere_z2()},
      {"t2", torus_product_example()},
      {"u1-grid-wilson", u1_grid()},
      {"u1-grid-lognorm", u1_grid(nullptr, EnergyBackend::LogNorm)},
      {"su2-genus1", su2_genus_one()}};
  {
    auto f = u1_grid();
    auto rng = substream(o.seed, "bank");
    auto bank = std::make_shared<const PerturbationBank>(
        admissible_ym_bank(*f, quick_survey(*f, o.seed), 2, 3, 0.05, 0.1, rng));
    cases.push_back({"u1-grid-perturbed", u1_grid(bank)});
  }
  FlowController fc;
  fc.s_max = 50.0;
  Json out = Json::array();
  long total = 0;
  long violations = 0;
  for (const auto& [name, f] : cases) {
    auto rng = substream(o.seed, "monotonicity-" + name);
    long v = 0, steps = 0;
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
      const Trajectory t = integrate(*f, f->random_point(rng), fc);
      for (std::size_t i = 1; i < t.energy.size(); ++i) {
        const double rise = t.energy[i] - t.energy[i - 1];
        worst = std::max(worst, rise);
        v += rise > slack;
      }
      steps += static_cast<long>(t.energy.size());
    }
    violations += v;
    total += steps;
    out.push_back({{"case", name},
                   {"flows", 50},
                   {"steps", steps},
                   {"violations", v},
                   {"largest_rise", checked(worst, slack, worst <= slack)}});
  }
  r.pass = violations == 0;
  r.details = {{"cases", out}};
  std::ostringstream os;
  os << violations << " violations beyond " << slack << " over " << total << " steps in " << cases.size()
     << " x 50 flows";
  r.summary = os.str();
  return r;
}

// ---------------------------------------------------------------- 4

SuiteResult suite_exponential_decay(const SuiteOptions& o) {
  SuiteResult r;
  r.name = "exponential_decay";
  Json out = Json::array();
  bool pass = true;
  std::ostringstream os;
  const std::vector<std::pair<std::string, std::shared_ptr<const Objective>>> cases{{"s2", sphere_z2()},
                                                                                    {"u1-grid", u1_grid()}};
  for (const auto& [name, f] : cases) {
    auto rng = substream(o.seed, "decay-" + name);
    for (int k = 0; k < 4; ++k) {
      const Trajectory t = integrate(*f, f->random_point(rng));
      Json j{{"case", name}, {"status", to_string(t.status)}};
      bool ok = t.status == FlowStatus::Converged;
      if (ok) {
        try {
          const DecayFit fit = decay_fit(t, hessian_spectrum(*f, t.end()));
          const double rel = std::abs(fit.rate - fit.spectral_gap) / fit.spectral_gap;
          ok = rel <= 0.1 && fit.correlation >= 0.99;
          j["rate"] = fit.rate;
          j["spectral_gap"] = fit.spectral_gap;
          j["relative_deviation"] = checked(rel, 0.1, rel <= 0.1);
          j["correlation"] = checked(fit.correlation, 0.99, fit.correlation >= 0.99);
          j["tail_samples"] = fit.samples;
          os << name << " rate " << fit.rate << " gap " << fit.spectral_gap << "; ";
        } catch (const InsufficientTail& e) {
          ok = false;
          j["error"] = e.what();
        }
      }
      j["pass"] = ok;
      pass = pass && ok;
      out.push_back(j);
    }
  }
  r.pass = pass;
  r.details = {{"flows", out}};
  r.summary = os.str() + "tol 10%, correlation >= 0.99";
  return r;
}

// ---------------------------------------------------------------- 5

SuiteResult suite_morse_bott(const SuiteOptions& o) {
  SuiteResult r;
  r.name = "morse_bott";
  const auto u1 = u1_grid();
  const SurveyResult su = quick_survey(*u1, o.seed);
  bool u1ok = su.manifolds.size() == 2;
  Json u1j = Json::array();
  for (const CriticalManifold& c : su.manifolds) {
    u1ok = u1ok && c.dimension == 2 && c.morse_bott.passed;
    u1j.push_back({{"energy", c.energy}, {"kernel", checked(c.dimension, 2, c.dimension == 2)},
                   {"morse_bott", c.morse_bott.passed}});
  }

  const auto su2 = su2_genus_one();
  const SurveyResult ss = quick_survey(*su2, o.seed);
  bool su2ok = ss.manifolds.size() >= 2;
  Json su2j;
  if (su2ok) {
    const CriticalManifold& top = ss.manifolds.back();
    const CriticalManifold& bottom = ss.manifolds.front();
    const bool top_ok = top.dimension == 3 && top.orbit_dimension == 3 && top.index == 3 && top.morse_bott.passed;
    const bool flagged = !bottom.morse_bott.passed;
    su2ok = top_ok && flagged;
    su2j = {{"top_energy", top.energy},
            {"top_kernel", checked(top.dimension, 3, top.dimension == 3)},
            {"top_orbit_dimension", checked(top.orbit_dimension, 3, top.orbit_dimension == 3)},
            {"top_index", checked(top.index, 3, top.index == 3)},
            {"top_morse_bott", top.morse_bott.passed},
            {"minimum_flagged", flagged},
            {"minimum_detail", bottom.morse_bott.detail}};
  }
  r.pass = u1ok && su2ok;
  r.details = {{"u1_grid", u1j}, {"su2_genus1", su2j}};
  std::ostringstream os;
  os << "U(1) (2,1): " << su.manifolds.size() << " manifolds, kernels";
  for (const auto& c : su.manifolds) os << ' ' << c.dimension;
  if (ss.manifolds.size() >= 2)
    os << "; SU(2) g=1 top kernel " << ss.manifolds.back().dimension << " orbit " << ss.manifolds.back().orbit_dimension
       << " ind " << ss.manifolds.back().index << ", minimum " << (ss.manifolds.front().morse_bott.passed ? "passed" : "flagged");
  r.summary = os.str();
  return r;
}

// ---------------------------------------------------------------- 6-8

SuiteResult suite_sphere_oracle(const SuiteOptions& o) {
  SuiteResult r;
  r.name = "sphere_oracle";
  auto f = sphere_z2();
  const HomologyReport h = compute_homology(*f, o.homology);
  std::vector<int> inds;
  for (const Generator& g : h.complex.generators) inds.push_back(g.Ind);
  std::sort(inds.begin(), inds.end());

  // Equator: the one-dimensional component; poles: points.
  auto dim_of = [&](int id) {
    for (const auto& m : h.survey.manifolds)
      if (m.id == id) return m.dimension;
    return -1;
  };
  int pole_to_max = 0, pole_pairs = 0, within = -1;
  for (const PairCount& p : h.pairs) {
    const Generator& a = h.complex.generators[p.from];
    const Generator& b = h.complex.generators[p.to];
    if (dim_of(a.manifold) == 0 && dim_of(b.manifold) == 1 && b.ind_h == 1) {
      ++pole_pairs;
      pole_to_max += p.count.parity == 1;
    }
    if (a.manifold == b.manifold && dim_of(a.manifold) == 1) within = p.count.parity;
  }
  const bool d2 = verify_chain(h.complex);
  const bool ok_inds = inds == std::vector<int>{0, 1, 2, 2};
  const bool ok_counts = pole_pairs == 2 && pole_to_max == 2 && within == 0;
  const bool ok_betti = h.betti == std::vector<int>{1, 0, 1};
  r.pass = ok_inds && ok_counts && d2 && ok_betti && !h.partial;
  r.details = homology_to_json(h, o.homology);
  r.details["checks"] = {{"Ind", {{"value", ints(inds)}, {"expected", ints({0, 1, 2, 2})}, {"pass", ok_inds}}},
                         {"n_pole_hmax", {{"value", pole_to_max}, {"expected", 2}, {"pass", pole_pairs == 2 && pole_to_max == 2}}},
                         {"n_hmax_hmin", {{"value", within}, {"expected", 0}, {"pass", within == 0}}},
                         {"d_squared_zero", d2},
                         {"betti", {{"value", ints(h.betti)}, {"expected", ints({1, 0, 1})}, {"pass", ok_betti}}}};
  r.summary = "Ind " + betti_string(inds) + ", n(N,max)+n(S,max) = " + std::to_string(pole_to_max) +
              ", n(max,min) = " + std::to_string(within) + ", Betti " + betti_string(h.betti);
  return r;
}

SuiteResult suite_torus_oracle(const SuiteOptions& o) {
  SuiteResult r;
  r.name = "torus_oracle";
  const HomologyReport h = compute_homology(*torus_product_example(), o.homology);
  const bool ok = h.betti == std::vector<int>{1, 2, 1};
  r.pass = ok && verify_chain(h.complex) && !h.partial;
  r.details = homology_to_json(h, o.homology);
  r.details["checks"] = {{"betti", {{"value", ints(h.betti)}, {"expected", ints({1, 2, 1})}, {"pass", ok}}}};
  r.summary = "Betti " + betti_string(h.betti);
  return r;
}

SuiteResult suite_u1_pipeline(const SuiteOptions& o) {
  SuiteResult r;
  r.name = "u1_pipeline";
  const auto f = u1_grid();
  const HomologyReport h = compute_homology(*f, o.homology);
  const auto& ms = h.survey.manifolds;
  const bool two = ms.size() == 2;
  const double e0 = two ? std::abs(ms[0].energy) : 1.0, e1 = two ? std::abs(ms[1].energy - 8.0) : 1.0;
  const bool levels = two && e0 <= 1e-6 && e1 <= 1e-6;
  const bool d2 = verify_chain(h.complex);
  const bool betti = h.betti == std::vector<int>{1, 3, 3, 1};
  r.pass = levels && d2 && betti && !h.partial;
  r.details = homology_to_json(h, o.homology);
  r.details["checks"] = {{"manifolds", {{"value", ms.size()}, {"expected", 2}, {"pass", two}}},
                         {"energy_0", checked(e0, 1e-6, e0 <= 1e-6)},
                         {"energy_8", checked(e1, 1e-6, e1 <= 1e-6)},
                         {"d_squared_zero", d2},
                         {"betti", {{"value", ints(h.betti)}, {"expected", ints({1, 3, 3, 1})}, {"pass", betti}}}};
  std::ostringstream os;
  os << ms.size() << " manifolds at";
  for (const auto& m : ms) os << ' ' << m.energy;
  os << ", d^2 = 0 " << (d2 ? "yes" : "no") << ", Betti " << betti_string(h.betti);
  r.summary = os.str();
  return r;
}

// ---------------------------------------------------------------- 9

SuiteResult suite_invariance(const SuiteOptions& o) {
  SuiteResult r;
  r.name = "invariance";
  Json runs = Json::array();
  bool pass = true;
  int count = 0;
  auto record = [&](const std::string& name, const std::string& variant, const std::vector<int>& expected,
                    const std::function<std::vector<int>()>& run) {
    Json j{{"case", name}, {"variant", variant}, {"expected", ints(expected)}};
    bool ok = false;
    try {
      const std::vector<int> b = run();
      j["betti"] = ints(b);
      ok = b == expected;
    } catch (const std::exception& e) {
      j["error"] = e.what();
    }
    j["pass"] = ok;
    pass = pass && ok;
    ++count;
    runs.push_back(j);
  };
  const std::uint64_t seeds[2] = {o.seed + 101, o.seed + 202};

  using Make = std::function<std::shared_ptr<EmbeddedObjective>()>;
  const std::vector<std::tuple<std::string, Make, std::vector<int>>> benches{
      {"s2", [] { return sphere_z2(); }, {1, 0, 1}}, {"t2", [] { return torus_product_example(); }, {1, 2, 1}}};
  for (const auto& [name, make, expected] : benches) {
    const auto base = make();
    const SurveyResult s = quick_survey(*base, o.seed);
    for (int b = 0; b < 2; ++b) {
      auto rng = substream(o.seed + b, "bank");
      const auto pf = perturbed_benchmark(make, s, 2, 4, 0.05, 0.05, rng);
      for (std::uint64_t sd : seeds) {
        HomologyOptions ho = o.homology;
        ho.seed = sd;
        record(name, "bank " + std::to_string(b) + " seed " + std::to_string(sd), expected,
               [&, pf, ho] { return compute_homology(*pf, ho).betti; });
      }
    }
    HomologyOptions half = o.homology;
    half.cascade.eps_shoot *= 0.5;
    record(name, "eps_shoot/2", expected, [&, half] { return compute_homology(*make(), half).betti; });
    half = o.homology;
    half.cascade.delta_match *= 0.5;
    record(name, "delta_match/2", expected, [&, half] { return compute_homology(*make(), half).betti; });
  }

  const std::vector<int> t3{1, 3, 3, 1};
  const auto base = u1_grid();
  const SurveyResult s = quick_survey(*base, o.seed);
  for (int b = 0; b < 2; ++b) {
    auto rng = substream(o.seed + b, "bank");
    const auto bank = std::make_shared<const PerturbationBank>(admissible_ym_bank(*base, s, 2, 3, 0.05, 0.1, rng));
    const auto pf = u1_grid(bank);
    for (std::uint64_t sd : seeds) {
      HomologyOptions ho = o.homology;
      ho.seed = sd;
      record("u1-grid", "bank " + std::to_string(b) + " seed " + std::to_string(sd), t3,
             [&, pf, ho] { return compute_homology(*pf, ho).betti; });
    }
  }
  HomologyOptions half = o.homology;
  half.cascade.eps_shoot *= 0.5;
  record("u1-grid", "eps_shoot/2", t3, [&, half] { return compute_homology(*base, half).betti; });
  half = o.homology;
  half.cascade.delta_match *= 0.5;
  record("u1-grid", "delta_match/2", t3, [&, half] { return compute_homology(*base, half).betti; });

  r.pass = pass;
  r.details = {{"runs", runs}};
  int good = 0;
  for (const Json& j : runs) good += j.at("pass").get<bool>();
  r.summary = std::to_string(good) + "/" + std::to_string(count) +
              " runs reproduce the reference Betti numbers (2 banks x 2 seeds, eps_shoot/2, delta_match/2)";
  return r;
}

// ---------------------------------------------------------------- 10

SuiteResult suite_critical_preservation(const SuiteOptions& o) {
  SuiteResult r;
  r.name = "critical_preservation";
  const auto f = u1_grid();
  const SurveyResult s = quick_survey(*f, o.seed);
  auto rng = substream(o.seed, "shells");

  // Shells at distance eps from each component along the normal directions.
  const double eps = 0.1;
  auto shell = [&](int n) {
    std::vector<Vector> pts;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (const CriticalManifold& c : s.manifolds) {
      const std::vector<Vector> reps = dense_representatives(*f, c, 0.3);
      for (int i = 0; i < n; ++i) {
        const Vector& p = reps[std::uniform_int_distribution<std::size_t>(0, reps.size() - 1)(rng)];
        const Matrix b = hessian_spectrum(*f, p).eigenvectors;
        const Matrix t = tangent_basis(*f, p, c.dimension);
        Vector v = Vector::Zero(f->coord_dim());
        for (int j = 0; j < b.cols(); ++j) v += normal(rng) * b.col(j);
        v -= t * (t.transpose() * v);
        if (v.norm() < 1e-8) continue;
        pts.push_back(f->retract(p, eps * v.normalized()));
      }
    }
    return pts;
  };
  double constant = std::numeric_limits<double>::infinity();
  for (const Vector& q : shell(200)) constant = std::min(constant, f->gradient(q).norm());
  const double delta = 0.5 * constant;

  auto brng = substream(o.seed, "bank");
  const auto bank =
      std::make_shared<const PerturbationBank>(admissible_ym_bank(*f, s, 2, 3, 0.5 * delta, 0.1, brng));
  const AdmissibilityReport adm = check_admissible(*f, s, *bank, 0.1);
  const auto fv = u1_grid(bank);

  double worst_crit = 0.0;
  int reps = 0;
  for (const CriticalManifold& c : s.manifolds)
    for (const Vector& p : dense_representatives(*f, c, 0.3)) {
      worst_crit = std::max(worst_crit, fv->gradient(p).norm());
      ++reps;
    }
  double worst_shell = std::numeric_limits<double>::infinity();
  const std::vector<Vector> fresh = shell(200);
  for (const Vector& q : fresh) worst_shell = std::min(worst_shell, fv->gradient(q).norm());
  const double bound = constant - bank->norm();

  const bool ok_norm = bank->norm() < delta;
  const bool ok_crit = worst_crit < 1e-9;
  const bool ok_shell = worst_shell >= bound;
  r.pass = ok_norm && adm.admissible && ok_crit && ok_shell && constant > 0.0;
  r.details = {{"epsilon", eps},
               {"empirical_shell_constant", constant},
               {"delta", delta},
               {"bank_norm", checked(bank->norm(), delta, ok_norm)},
               {"admissible", adm.admissible},
               {"critical_representatives", reps},
               {"critical_gradient_max", checked(worst_crit, 1e-9, ok_crit)},
               {"shell_samples", fresh.size()},
               {"shell_gradient_min", checked(worst_shell, bound, ok_shell)},
               {"bank", bank_to_json(*bank)}};
  std::ostringstream os;
  os << "|grad YM^V| <= " << worst_crit << " on " << reps << " critical points; shell min " << worst_shell
     << " >= " << bound << " (constant " << constant << ", ||V|| " << bank->norm() << " < delta " << delta << ")";
  r.summary = os.str();
  return r;
}

// ---------------------------------------------------------------- 11

SuiteResult suite_moduli_family(const SuiteOptions& o) {
  SuiteResult r;
  r.name = "moduli_family";
  const HomologyReport h = compute_homology(*sphere_z2(), o.homology);
  const HCriticalPoint* pole = nullptr;
  const HCriticalPoint* bottom = nullptr;
  for (const auto& p : h.points) {
    int dim = -1;
    for (const auto& m : h.survey.manifolds)
      if (m.id == p.manifold) dim = m.dimension;
    if (dim == 0 && !pole) pole = &p;
    if (dim == 1 && p.ind_h == 0) bottom = &p;
  }
  if (!pole || !bottom) {
    r.summary = "generators not found";
    return r;
  }
  const double delta = o.homology.cascade.delta_match;
  const std::vector<FamilyLine> fam = certified_family(h.context, *pole, *bottom, o.homology.cascade, 32);
  std::vector<double> params;
  bool close = true;
  Json lines = Json::array();
  for (const FamilyLine& l : fam) {
    params.push_back(l.parameter);
    close = close && l.distance < delta;
    lines.push_back({{"parameter", l.parameter}, {"distance", checked(l.distance, delta, l.distance < delta)}});
  }
  std::sort(params.begin(), params.end());
  const int distinct =
      static_cast<int>(std::unique(params.begin(), params.end(),
                                   [&](double a, double b) { return b - a <= o.homology.cascade.param_tol; }) -
                       params.begin());
  r.pass = distinct >= 8 && close;
  r.details = {{"lines", lines}, {"distinct", checked(distinct, 8, distinct >= 8)}};
  r.summary = std::to_string(distinct) + " distinct certified lines on the shooting arc (need >= 8)";
  return r;
}

// ---------------------------------------------------------------- runner

SuiteResult run_suite(const std::string& name, const std::function<SuiteResult(const SuiteOptions&)>& suite,
                      const SuiteOptions& o) {
  const auto t0 = std::chrono::steady_clock::now();
  SuiteResult r;
  try {
    r = suite(o);
  } catch (const std::exception& e) {
    r = SuiteResult{};
    r.pass = false;
    r.summary = std::string("error: ") + e.what();
  }
  r.name = name;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

Json suite_to_json(const SuiteResult& r) {
  Json j;
  j["name"] = r.name;
  j["pass"] = r.pass;
  j["summary"] = r.summary;
  j["details"] = r.details;
  return j;
}

}  // namespace ymmb
