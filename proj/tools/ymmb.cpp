#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>

#include "ymmb/io.hpp"
#include "ymmb/run.hpp"
#include "ymmb/verify.hpp"

using namespace ymmb;
namespace fs = std::filesystem;

namespace {

enum Exit { Ok = 0, CheckFailed = 1, UsageError = 2, Refused = 3 };

struct Flags {
  std::string config;
  std::optional<long> steps;
  std::optional<double> tol_g;
  std::optional<double> eps_shoot;
  std::optional<std::string> backend;
  std::optional<std::string> bank;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> connection;
};

void add_flags(CLI::App* c, Flags& f) {
  c->add_option("--config", f.config, "key = value configuration file");
  c->add_option("--steps", f.steps, "flow.max_steps");
  c->add_option("--tol-g", f.tol_g, "flow.tol_g");
  c->add_option("--eps-shoot", f.eps_shoot, "cascade.eps_shoot");
  c->add_option("--backend", f.backend, "backend: wilson | lognorm");
  c->add_option("--perturbation-bank", f.bank, "bank.file: perturbation bank JSON");
  c->add_option("--seed", f.seed, "seed: root of all random substreams");
  c->add_option("--out", f.out, "out: output directory");
  c->add_option("--connection", f.connection, "connection: connection JSON");
}

RunConfig resolve(const Flags& f) {
  RunConfig rc;
  if (!f.config.empty()) rc = run_config_from(Config::load(f.config, run_config_keys()));
  HomologyOptions& h = rc.homology;
  if (f.steps) h.survey.flow.max_steps = h.cascade.flow.max_steps = *f.steps;
  if (f.tol_g) h.survey.flow.tol_g = h.cascade.flow.tol_g = *f.tol_g;
  if (f.eps_shoot) h.cascade.eps_shoot = *f.eps_shoot;
  try {
    if (f.backend) rc.backend = energy_backend_from_string(*f.backend);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("--backend: ") + e.what(), 0);
  }
  if (f.bank) rc.bank_file = *f.bank;
  if (f.seed) h.seed = *f.seed;
  if (f.out) rc.out = *f.out;
  if (f.connection) rc.connection_file = *f.connection;
  check_run_config(rc);
  return rc;
}

Json config_json(const RunConfig& rc) {
  const HomologyOptions& h = rc.homology;
  return {{"complex", {{"builder", rc.builder}, {"genus", rc.genus}, {"n", rc.grid_n}, {"m", rc.grid_m},
                       {"file", rc.complex_file}}},
          {"group", to_string(rc.group)},
          {"backend", to_string(rc.backend)},
          {"bank", {{"file", rc.bank_file}, {"epsilon", rc.bank_epsilon}}},
          {"connection", rc.connection_file},
          {"seed", h.seed},
          {"survey", {{"starts", h.survey.n_starts}, {"ascent", h.survey.ascent}, {"cluster_tol", h.survey.cluster_tol}}},
          {"flow", {{"tol_g", h.survey.flow.tol_g}, {"s_max", h.survey.flow.s_max}, {"max_steps", h.survey.flow.max_steps}}},
          {"cascade", {{"eps_shoot", h.cascade.eps_shoot}, {"delta_match", h.cascade.delta_match},
                       {"eps_h", h.cascade.eps_h}, {"rho", h.cascade.rho}, {"sweep_samples", h.cascade.sweep_samples}}},
          {"flows", rc.flows}};
}

class Output {
 public:
  Output(const RunConfig& rc, const std::string& command) : dir_(rc.out) {
    fs::create_directories(dir_);
    report_["schema"] = kSchema;
    report_["command"] = command;
    report_["config"] = config_json(rc);
  }
  Json& report() { return report_; }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  void complex(const OrientedCellComplex& c) { write_text_file(path("complex.json"), dump(complex_to_json(c))); }
  int finish(bool pass, int failure = CheckFailed) {
    report_["pass"] = pass;
    write_text_file(path("report.json"), dump(report_));
    std::cout << (pass ? "PASS" : "FAIL") << ": " << path("report.json") << "\n";
    return pass ? Ok : failure;
  }

 private:
  fs::path dir_;
  Json report_;
};

struct Setup {
  std::shared_ptr<const OrientedCellComplex> complex;
  std::shared_ptr<YMObjective> base;  // unperturbed
  std::shared_ptr<YMObjective> f;     // with the bank, when one is given
};

/// Builds the objective; a bank is loaded and gated on admissibility against the unperturbed critical set.
std::optional<Setup> setup(const RunConfig& rc, Output& out) {
  Setup s;
  s.complex = build_complex(rc);
  out.complex(*s.complex);
  s.base = std::make_shared<YMObjective>(s.complex, LieGroup(rc.group), rc.backend);
  s.f = s.base;
  if (rc.bank_file.empty()) return s;
  auto bank = std::make_shared<const PerturbationBank>(bank_from_json(read_json_file(rc.bank_file), s.complex));
  auto rng = substream(rc.homology.seed, "survey");
  const SurveyResult survey = survey_critical(*s.base, rc.homology.survey, rng);
  const AdmissibilityReport a = check_admissible(*s.base, survey, *bank, rc.bank_epsilon);
  Json clear = Json::array();
  for (double c : a.clearance) clear.push_back(checked(c, a.epsilon + a.spacing, c > a.epsilon + a.spacing));
  out.report()["admissibility"] = {{"admissible", a.admissible}, {"epsilon", a.epsilon},
                                   {"cover_spacing", a.spacing}, {"critical_points", a.representatives},
                                   {"clearance", clear}, {"bank_norm", bank->norm()}, {"detail", a.detail}};
  if (!a.admissible) {
    std::cerr << "refusing inadmissible perturbation bank " << rc.bank_file << ": " << a.detail << "\n";
    return std::nullopt;
  }
  s.f = std::make_shared<YMObjective>(s.complex, LieGroup(rc.group), rc.backend, bank);
  return s;
}

Vector chosen_point(const RunConfig& rc, const YMObjective& f) {
  if (!rc.connection_file.empty()) return f.point(connection_from_json(read_json_file(rc.connection_file), f.complex()));
  const auto c = f.canonical_points();
  if (c.empty()) throw std::runtime_error("no point given (--connection) and no canonical point");
  return c.front();
}

// ---------------------------------------------------------------- commands

int cmd_survey(const RunConfig& rc) {
  Output out(rc, "survey");
  const auto s = setup(rc, out);
  if (!s) return out.finish(false, Refused);
  auto rng = substream(rc.homology.seed, "survey");
  const SurveyResult r = survey_critical(*s->f, rc.homology.survey, rng);
  out.report()["survey"] = survey_to_json(r);
  bool pass = !r.manifolds.empty();
  for (const auto& m : r.manifolds) pass = pass && m.morse_bott.passed;
  return out.finish(pass);
}

int cmd_flow(const RunConfig& rc) {
  Output out(rc, "flow");
  const auto s = setup(rc, out);
  if (!s) return out.finish(false, Refused);
  std::vector<Vector> starts;
  if (!rc.connection_file.empty()) {
    starts.push_back(chosen_point(rc, *s->f));
  } else {
    auto rng = substream(rc.homology.seed, "flow");
    for (int i = 0; i < rc.flows; ++i) starts.push_back(s->f->random_point(rng));
  }
  const FlowController fc = rc.homology.survey.flow;
  std::vector<std::future<Trajectory>> jobs;
  for (const Vector& p : starts)
    jobs.push_back(std::async(std::launch::async, [&, p] { return integrate(*s->f, p, fc); }));
  fs::create_directories(out.path("trajectories"));
  Json list = Json::array();
  bool pass = true;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const Trajectory t = jobs[i].get();
    char name[32];
    std::snprintf(name, sizeof name, "flow-%03zu", i);
    std::ostringstream csv;
    write_trajectory_csv(csv, t);
    write_text_file(out.path(std::string("trajectories/") + name + ".csv"), csv.str());
    Json side = trajectory_to_json(t, fc.tol_g);
    long rises = 0;
    for (std::size_t k = 1; k < t.energy.size(); ++k) rises += t.energy[k] > t.energy[k - 1] + 1e-10;
    side["energy_increases"] = checked(static_cast<double>(rises), 0.0, rises == 0);
    side["end_connection"] = connection_to_json(s->f->connection(t.end()));
    write_text_file(out.path(std::string("trajectories/") + name + ".json"), dump(side));
    const bool ok = t.status == FlowStatus::Converged && rises == 0;
    pass = pass && ok;
    list.push_back({{"name", name}, {"status", to_string(t.status)}, {"pass", ok},
                    {"energy_end", t.energy.back()}, {"grad_norm_end", side.at("grad_norm_end")}});
  }
  out.report()["trajectories"] = list;
  return out.finish(pass);
}

bool homology_checks_pass(const Json& h) {
  bool pass = h.at("d_squared_zero").at("pass").get<bool>();
  for (const Json& g : h.at("generators")) pass = pass && g.at("h_grad_norm").at("pass").get<bool>();
  for (const Json& p : h.at("provenance")) pass = pass && p.at("pass").get<bool>();
  return pass;
}

/// Runs the pipeline, recording the report or the reason it could not finish.
bool run_homology(const Objective& f, const HomologyOptions& o, Json& dest, std::vector<int>* betti = nullptr) {
  try {
    const HomologyReport r = compute_homology(f, o);
    dest = homology_to_json(r, o);
    if (betti) *betti = r.betti;
    return homology_checks_pass(dest);
  } catch (const std::exception& e) {
    dest = {{"schema", kSchema}, {"error", e.what()}};
    return false;
  }
}

int cmd_homology(const RunConfig& rc) {
  Output out(rc, "homology");
  const auto s = setup(rc, out);
  if (!s) return out.finish(false, Refused);
  Json h;
  const bool pass = run_homology(*s->f, rc.homology, h);
  out.report()["homology"] = h;
  return out.finish(pass);
}

int cmd_verify(const RunConfig& rc) {
  Output out(rc, "verify");
  const auto s = setup(rc, out);
  if (!s) return out.finish(false, Refused);
  SuiteOptions so;
  so.seed = rc.homology.seed;
  so.homology = rc.homology;
  const std::vector<std::pair<std::string, SuiteResult (*)(const SuiteOptions&)>> fixed{
      {"derivatives", suite_derivatives},       {"gauge_invariance", suite_gauge_invariance},
      {"energy_monotonicity", suite_energy_monotonicity}, {"exponential_decay", suite_exponential_decay},
      {"sphere_homology", suite_sphere_oracle}, {"torus_homology", suite_torus_oracle}};
  std::vector<std::future<SuiteResult>> jobs;
  for (const auto& [name, fn] : fixed)
    jobs.push_back(std::async(std::launch::async, [name, fn, &so] { return run_suite(name, fn, so); }));
  auto configured = std::async(std::launch::async, [&] {
    return run_suite(
        "configured",
        [&](const SuiteOptions&) {
          SuiteResult r;
          auto rng = substream(rc.homology.seed, "audit");
          const DerivativeAudit a = audit_derivatives(*s->f, 20, rng);
          Json h;
          const bool hp = run_homology(*s->f, rc.homology, h);
          r.pass = a.passed && hp;
          r.details = {{"objective", s->f->name()},
                       {"gradient_error", checked(a.gradient_error, 1e-6, a.gradient_error <= 1e-6)},
                       {"hessian_error", checked(a.hessian_error, 1e-5, a.hessian_error <= 1e-5)},
                       {"retraction_drift", checked(a.retraction_drift, 1e-9, a.retraction_drift <= 1e-9)},
                       {"homology", h}};
          r.summary = s->f->name() + (hp ? ": chain complex verified" : ": homology checks failed");
          return r;
        },
        so);
  });
  Json suites = Json::array();
  bool pass = true;
  auto add = [&](const SuiteResult& r) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.summary << "\n";
    pass = pass && r.pass;
    suites.push_back(suite_to_json(r));
  };
  for (auto& j : jobs) add(j.get());
  add(configured.get());
  out.report()["suites"] = suites;
  return out.finish(pass);
}

int cmd_example(const RunConfig& rc, const std::string& name) {
  Output out(rc, "example " + name);
  std::shared_ptr<const Objective> f;
  std::optional<std::vector<int>> expected;
  if (name == "s2") {
    f = sphere_z2();
    expected = std::vector<int>{1, 0, 1};
  } else if (name == "t2") {
    f = torus_product_example();
    expected = std::vector<int>{1, 2, 1};
  } else if (name == "u1-torus" || name == "su2-genus1") {
    const bool u1 = name == "u1-torus";
    auto cx = std::make_shared<const OrientedCellComplex>(u1 ? build_torus_grid(2, 1) : build_minimal_genus_complex(1));
    out.complex(*cx);
    f = std::make_shared<YMObjective>(cx, LieGroup(u1 ? GroupKind::U1 : GroupKind::SU2), rc.backend);
    if (u1) expected = std::vector<int>{1, 3, 3, 1};
  } else {
    std::cerr << "unknown example '" << name << "' (s2, t2, u1-torus, su2-genus1)\n";
    return UsageError;
  }
  Json h;
  std::vector<int> betti;
  bool pass = run_homology(*f, rc.homology, h, &betti);
  if (expected) {
    const bool match = betti == *expected;
    h["checks"] = {{"betti", {{"value", betti}, {"expected", *expected}, {"pass", match}}}};
    pass = pass && match;
  }
  out.report()["homology"] = h;
  return out.finish(pass);
}

int cmd_energy(const RunConfig& rc) {
  Output out(rc, "energy");
  const auto s = setup(rc, out);
  if (!s) return out.finish(false, Refused);
  if (rc.connection_file.empty()) throw std::runtime_error("energy needs --connection");
  const Connection a = connection_from_json(read_json_file(rc.connection_file), s->complex);
  const EnergyEvaluation e = evaluate_energy(a, rc.backend);
  const PerturbationBank* bank = s->f->bank();
  out.report()["energy"] = {{"ym", e.value}, {"cut_locus", e.cut_locus}, {"perturbation", bank ? bank->value(a) : 0.0},
                            {"total", e.value + (bank ? bank->value(a) : 0.0)}};
  return out.finish(!e.cut_locus);
}

int cmd_grad_check(const RunConfig& rc) {
  Output out(rc, "grad-check");
  const auto s = setup(rc, out);
  if (!s) return out.finish(false, Refused);
  auto rng = substream(rc.homology.seed, "audit");
  const DerivativeAudit a = audit_derivatives(*s->f, 20, rng);
  out.report()["audit"] = {{"points", 20},
                           {"gradient_error", checked(a.gradient_error, 1e-6, a.gradient_error <= 1e-6)},
                           {"hessian_error", checked(a.hessian_error, 1e-5, a.hessian_error <= 1e-5)},
                           {"retraction_drift", checked(a.retraction_drift, 1e-9, a.retraction_drift <= 1e-9)}};
  return out.finish(a.passed);
}

int cmd_hessian_spectrum(const RunConfig& rc) {
  Output out(rc, "hessian-spectrum");
  const auto s = setup(rc, out);
  if (!s) return out.finish(false, Refused);
  const Vector p = chosen_point(rc, *s->f);
  const Spectrum sp = hessian_spectrum(*s->f, p);
  const double g = s->f->gradient(p).norm();
  out.report()["spectrum"] = {{"eigenvalues", std::vector<double>(sp.eigenvalues.data(), sp.eigenvalues.data() + sp.eigenvalues.size())},
                              {"kernel", sp.kernel},
                              {"index", sp.negative},
                              {"kernel_threshold", sp.threshold},
                              {"spectral_gap", sp.spectral_gap},
                              {"energy", s->f->value(p)},
                              {"gradient_norm", g}};
  return out.finish(true);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Morse-Bott cascade homology for discretized Yang-Mills on surfaces"};
  app.require_subcommand(1);
  Flags flags;
  std::string example;
  std::vector<std::pair<CLI::App*, std::function<int(const RunConfig&)>>> commands;
  auto sub = [&](const char* name, const char* help, std::function<int(const RunConfig&)> fn) {
    CLI::App* c = app.add_subcommand(name, help);
    add_flags(c, flags);
    commands.emplace_back(c, std::move(fn));
    return c;
  };
  sub("survey", "critical-manifold survey", cmd_survey);
  sub("flow", "gradient-flow trajectories", cmd_flow);
  sub("homology", "cascade chain complex and Betti numbers", cmd_homology);
  sub("verify", "property suites", cmd_verify);
  sub("example", "end-to-end benchmark run", [&](const RunConfig& rc) { return cmd_example(rc, example); })
      ->add_option("name", example, "s2 | t2 | u1-torus | su2-genus1")
      ->required();
  sub("energy", "YM^V of a connection", cmd_energy);
  sub("grad-check", "finite-difference audit of the objective", cmd_grad_check);
  sub("hessian-spectrum", "Hessian eigenvalues at a connection", cmd_hessian_spectrum);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? Ok : UsageError;
  }
  RunConfig rc;
  try {
    rc = resolve(flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return UsageError;
  }
  for (auto& [c, fn] : commands) {
    if (!c->parsed()) continue;
    try {
      return fn(rc);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      try {
        Output out(rc, c->get_name());
        out.report()["error"] = e.what();
        out.finish(false);
      } catch (const std::exception&) {
      }
      return CheckFailed;
    }
  }
  return UsageError;
}
