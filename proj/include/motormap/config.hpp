#pragma once

#include <optional>
#include <string>

#include "motormap/drive_cycle.hpp"
#include "motormap/flux_map.hpp"
#include "motormap/machine.hpp"
#include "motormap/map_gen.hpp"
#include "motormap/solver.hpp"

namespace motormap {

struct GridSpec {
  double min_value = 0.0;
  double max_value = 0.0;
  int count = 2;

  Eigen::VectorXd linspace() const {
    return Eigen::VectorXd::LinSpaced(count, min_value, max_value);
  }
};

// One JSON document describing a full run; a single hash of the raw file
// stamps every output for provenance.
struct RunConfig {
  MachineParams<double> machine;
  std::optional<SyntheticModelParams<double>> synthetic;
  std::optional<std::string> fluxmap_path;

  OperatingConditions<double> conditions;
  LossModelConfig<double> losses;
  std::optional<std::string> waveforms_path;

  int sweep_amplitude_steps = 20;
  int sweep_angle_steps = 12;
  CostModel cost;

  GridSpec speed_grid_per_min{0.0, 18000.0, 50};
  GridSpec torque_grid_Nm{-450.0, 450.0, 51};

  SkewSpec<double> skew;
  SolverSettings<double> solver;

  std::optional<VehicleParams<double>> vehicle;
  std::optional<std::string> cycle_path;

  std::string output_dir = "out";
  std::string config_hash;  // FNV-1a 64 of the raw config bytes, hex
};

// Loads and validates a run configuration. Relative paths referenced by
// the config are resolved against the config file's directory and must
// exist. Errors carry ErrorCode::BadConfig; JSON syntax errors include the
// line number.
RunConfig load_config(const std::string& path);

}  // namespace motormap
