#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ymmb/config.hpp"
#include "ymmb/pipeline.hpp"
#include "ymmb/ym_objective.hpp"

namespace ymmb {

/// Everything a CLI run needs; defaults describe the U(1) (2,1) torus grid.
struct RunConfig {
  std::string builder = "torus_grid";  // torus_grid | minimal_genus | sphere | file
  int genus = 1;
  int grid_n = 2;
  int grid_m = 1;
  std::string complex_file;
  GroupKind group = GroupKind::U1;
  EnergyBackend backend = EnergyBackend::Wilson;
  std::string bank_file;
  double bank_epsilon = 0.1;
  std::string connection_file;  // flow start / energy / hessian point; empty: random or canonical
  int flows = 4;
  std::string out = "ymmb-out";
  HomologyOptions homology;
};

/// Pipeline keys plus complex.*, group, bank.*, connection, flows and out.
const std::vector<std::string>& run_config_keys();

RunConfig run_config_from(const Config& c, RunConfig base = {});

/// Throws ConfigError when a tolerance is not positive or a name is unknown.
void check_run_config(const RunConfig& r);

std::shared_ptr<const OrientedCellComplex> build_complex(const RunConfig& r);

}  // namespace ymmb
