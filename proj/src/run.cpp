#include "ymmb/run.hpp"

#include "ymmb/io.hpp"

namespace ymmb {

const std::vector<std::string>& run_config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k = pipeline_config_keys();
    for (const char* extra : {"group", "complex.builder", "complex.genus", "complex.n", "complex.m", "complex.file",
                              "bank.file", "bank.epsilon", "connection", "flows", "out"})
      k.push_back(extra);
    return k;
  }();
  return keys;
}

RunConfig run_config_from(const Config& c, RunConfig r) {
  r.homology = options_from_config(c, r.homology);
  r.builder = c.string("complex.builder", r.builder);
  r.genus = static_cast<int>(c.integer("complex.genus", r.genus));
  r.grid_n = static_cast<int>(c.integer("complex.n", r.grid_n));
  r.grid_m = static_cast<int>(c.integer("complex.m", r.grid_m));
  r.complex_file = c.string("complex.file", r.complex_file);
  try {
    if (c.has("group")) r.group = group_kind_from_string(c.string("group", ""));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what(), c.line("group"));
  }
  try {
    if (c.has("backend")) r.backend = energy_backend_from_string(c.string("backend", ""));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what(), c.line("backend"));
  }
  r.bank_file = c.string("bank.file", r.bank_file);
  r.bank_epsilon = c.number("bank.epsilon", r.bank_epsilon);
  r.connection_file = c.string("connection", r.connection_file);
  r.flows = static_cast<int>(c.integer("flows", r.flows));
  r.out = c.string("out", r.out);
  return r;
}

void check_run_config(const RunConfig& r) {
  const auto& h = r.homology;
  const std::vector<std::pair<const char*, double>> positive{{"flow.tol_g", h.survey.flow.tol_g},
                                                             {"flow.s_max", h.survey.flow.s_max},
                                                             {"flow.h_initial", h.survey.flow.h_initial},
                                                             {"flow.h_max", h.survey.flow.h_max},
                                                             {"cascade.eps_shoot", h.cascade.eps_shoot},
                                                             {"cascade.delta_match", h.cascade.delta_match},
                                                             {"cascade.eps_h", h.cascade.eps_h},
                                                             {"cascade.rho", h.cascade.rho},
                                                             {"bank.epsilon", r.bank_epsilon}};
  for (const auto& [name, v] : positive)
    if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be positive", 0);
  if (h.survey.flow.max_steps <= 0) throw ConfigError("flow.max_steps must be positive", 0);
  if (h.survey.n_starts < 0) throw ConfigError("survey.starts must be non-negative", 0);
  if (h.cascade.sweep_samples < 2) throw ConfigError("cascade.sweep_samples must be at least 2", 0);
  if (r.flows < 1) throw ConfigError("flows must be positive", 0);
  if (r.out.empty()) throw ConfigError("out must be a directory name", 0);
  if (r.builder != "torus_grid" && r.builder != "minimal_genus" && r.builder != "sphere" && r.builder != "file")
    throw ConfigError("unknown complex.builder '" + r.builder + "' (torus_grid, minimal_genus, sphere or file)", 0);
  if (r.builder == "file" && r.complex_file.empty()) throw ConfigError("complex.builder = file needs complex.file", 0);
}

std::shared_ptr<const OrientedCellComplex> build_complex(const RunConfig& r) {
  OrientedCellComplex c;
  if (r.builder == "torus_grid")
    c = build_torus_grid(r.grid_n, r.grid_m);
  else if (r.builder == "minimal_genus")
    c = build_minimal_genus_complex(r.genus);
  else if (r.builder == "sphere")
    c = build_sphere_complex();
  else if (r.builder == "file")
    c = complex_from_json(read_json_file(r.complex_file));
  else
    throw ConfigError("unknown complex.builder '" + r.builder + "'", 0);
  return std::make_shared<const OrientedCellComplex>(std::move(c));
}

}  // namespace ymmb
