#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "motormap/config.hpp"
#include "motormap/drive_cycle.hpp"
#include "motormap/io_csv.hpp"
#include "motormap/map_gen.hpp"

namespace fs = std::filesystem;
using namespace motormap;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct CliOptions {
  std::string config_path;
  unsigned workers = 0;  // 0 -> hardware concurrency
  std::string out_override;
  long long seed = 0;  // reserved for future stochastic features
};

std::string output_dir(const RunConfig& cfg, const CliOptions& opt) {
  return opt.out_override.empty() ? cfg.output_dir : opt.out_override;
}

std::vector<std::string> provenance(const RunConfig& cfg) {
  return {"config_hash=" + cfg.config_hash};
}

FluxMap<double> load_characterized_map(const std::string& dir) {
  const fs::path path = fs::path(dir) / "flux_map.csv";
  if (!fs::exists(path)) {
    throw Error(ErrorCode::BadDomain,
                "missing " + path.string() + "; run 'characterize' first");
  }
  return io::read_flux_map_csv(path.string());
}

Eigen::VectorXd speed_grid_per_s(const RunConfig& cfg) {
  return cfg.speed_grid_per_min.linspace() / 60.0;
}

int cmd_plan(const RunConfig& cfg) {
  const auto plan =
      plan_sweep<double>(cfg.sweep_amplitude_steps, cfg.sweep_angle_steps, cfg.machine.i_max);
  const RuntimeEstimate est = estimate_runtime(plan, cfg.cost);
  std::cout << "jobs=" << plan.job_count() << "\n";
  std::cout << "designs=" << cfg.cost.n_designs << " seconds_per_job="
            << io::format_double(cfg.cost.seconds_per_job) << " cores=" << cfg.cost.cores << "\n";
  std::cout << "serial_s=" << io::format_double(est.serial_s) << " serial=\""
            << format_duration(est.serial_s) << "\"\n";
  std::cout << "parallel_s=" << io::format_double(est.parallel_s) << " parallel=\""
            << format_duration(est.parallel_s) << "\"\n";
  return kExitOk;
}

int cmd_characterize(const RunConfig& cfg, const CliOptions& opt) {
  const std::string dir = output_dir(cfg, opt);
  fs::create_directories(dir);

  FluxMap<double> completed = [&]() {
    if (cfg.fluxmap_path) {
      // External map: pass through with symmetry completion only.
      return complete_by_symmetry(io::read_flux_map_csv(*cfg.fluxmap_path));
    }
    FluxSourceFn<double> source = make_synthetic_source(*cfg.synthetic);
    source = with_skew(std::move(source), cfg.skew);
    const auto plan =
        plan_sweep<double>(cfg.sweep_amplitude_steps, cfg.sweep_angle_steps, cfg.machine.i_max);
    CharacterizationOptions copts;
    copts.workers = opt.workers;
    const FluxMap<double> raw = run_characterization(source, plan, copts);
    std::vector<std::string> warnings;
    FluxMap<double> done = complete_by_symmetry(raw, &warnings);
    for (const auto& w : warnings) {
      std::cerr << "warning: " << w << "\n";
    }
    return done;
  }();

  const fs::path map_path = fs::path(dir) / "flux_map.csv";
  io::write_flux_map_csv(map_path.string(), completed, provenance(cfg));

  nlohmann::json manifest;
  manifest["command"] = "characterize";
  manifest["config_hash"] = cfg.config_hash;
  manifest["flux_map"] = "flux_map.csv";
  manifest["id_points"] = completed.id_grid().size();
  manifest["iq_points"] = completed.iq_grid().size();
  manifest["rows"] = completed.id_grid().size() * completed.iq_grid().size();
  manifest["source"] = cfg.fluxmap_path ? "external" : "synthetic";
  std::ofstream mf(fs::path(dir) / "characterize_manifest.json");
  mf << manifest.dump(2) << "\n";

  std::cout << "flux_map_rows=" << completed.id_grid().size() * completed.iq_grid().size()
            << " id_points=" << completed.id_grid().size()
            << " iq_points=" << completed.iq_grid().size() << "\n";
  return kExitOk;
}

int cmd_map(const RunConfig& cfg, const CliOptions& opt) {
  const std::string dir = output_dir(cfg, opt);
  const FluxMap<double> map = load_characterized_map(dir);
  const Eigen::VectorXd speeds = speed_grid_per_s(cfg);
  const Eigen::VectorXd torques = cfg.torque_grid_Nm.linspace();

  const EfficiencyMap<double> em = build_efficiency_map(
      map, cfg.machine, cfg.conditions, cfg.losses, speeds, torques, cfg.solver, opt.workers);
  io::write_efficiency_map_csv((fs::path(dir) / "efficiency_map.csv").string(), em,
                               provenance(cfg));

  Eigen::Index total = em.feasible.size();
  Eigen::Index feasible = 0;
  double peak_eta = 0.0;
  Eigen::Index peak_ti = 0, peak_si = 0;
  for (Eigen::Index ti = 0; ti < em.torque_grid.size(); ++ti) {
    for (Eigen::Index si = 0; si < em.speed_grid.size(); ++si) {
      if (!em.feasible(ti, si)) {
        continue;
      }
      ++feasible;
      // idle/stall cells carry conventional efficiencies; skip them for the peak
      if (em.torque_grid[ti] == 0.0 || em.speed_grid[si] == 0.0) {
        continue;
      }
      if (em.eta(ti, si) > peak_eta) {
        peak_eta = em.eta(ti, si);
        peak_ti = ti;
        peak_si = si;
      }
    }
  }
  std::cout << "feasible_fraction="
            << io::format_double(static_cast<double>(feasible) / static_cast<double>(total))
            << " peak_eta=" << io::format_double(peak_eta)
            << " at n_per_min=" << io::format_double(em.speed_grid[peak_si] * 60.0)
            << " torque_Nm=" << io::format_double(em.torque_grid[peak_ti]) << "\n";
  return kExitOk;
}

int cmd_envelope(const RunConfig& cfg, const CliOptions& opt) {
  const std::string dir = output_dir(cfg, opt);
  const FluxMap<double> map = load_characterized_map(dir);
  const Eigen::VectorXd speeds = speed_grid_per_s(cfg);
  std::vector<double> speed_list(speeds.data(), speeds.data() + speeds.size());

  const auto envelope =
      capability_envelope(map, cfg.machine, cfg.conditions, speed_list, cfg.solver);
  io::write_envelope_csv((fs::path(dir) / "envelope.csv").string(), envelope, provenance(cfg));

  std::cout << "envelope_points=" << envelope.size()
            << " base_torque_Nm=" << io::format_double(envelope.front().max_torque) << "\n";
  return kExitOk;
}

int cmd_cycle(const RunConfig& cfg, const CliOptions& opt) {
  if (!cfg.vehicle || !cfg.cycle_path) {
    throw Error(ErrorCode::BadConfig, "cycle command requires 'vehicle' and 'cycle_path'");
  }
  const std::string dir = output_dir(cfg, opt);
  const FluxMap<double> map = load_characterized_map(dir);
  const DriveCycle<double> cycle = io::read_cycle_csv(*cfg.cycle_path);

  const DriveCycleResult<double> result =
      evaluate_cycle(cycle, *cfg.vehicle, map, cfg.machine, cfg.conditions, cfg.losses, cfg.solver,
                     opt.workers);
  io::write_cycle_result_csv((fs::path(dir) / "cycle_result.csv").string(), result,
                             provenance(cfg));

  std::cout << "cycle_efficiency=" << io::format_double(result.cycle_efficiency)
            << " energy_in_Wh=" << io::format_double(result.energy_in_Wh)
            << " energy_out_Wh=" << io::format_double(result.energy_out_Wh)
            << " energy_recuperated_Wh=" << io::format_double(result.energy_recuperated_Wh)
            << " infeasible_steps=" << result.infeasible_step_count << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IPMSM characterization: flux maps, set-points, efficiency maps, drive cycles"};
  app.require_subcommand(1);
  app.fallthrough();

  CliOptions opt;
  app.add_option("--config", opt.config_path, "run configuration JSON")->required();
  app.add_option("--workers", opt.workers, "worker threads (default: available cores)");
  app.add_option("--out", opt.out_override, "output directory (overrides config)");
  app.add_option("--seed", opt.seed, "reserved for future stochastic features");

  auto* plan = app.add_subcommand("plan", "print sweep size and runtime estimates");
  auto* characterize =
      app.add_subcommand("characterize", "build the flux-linkage LUT and write flux_map.csv");
  auto* map = app.add_subcommand("map", "build the efficiency map over the torque-speed plane");
  auto* envelope = app.add_subcommand("envelope", "compute the torque capability envelope");
  auto* cycle = app.add_subcommand("cycle", "evaluate a drive cycle against the machine");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);  // --help
    }
    app.exit(e);
    return kExitConfig;
  }

  try {
    const RunConfig cfg = load_config(opt.config_path);
    if (plan->parsed()) {
      return cmd_plan(cfg);
    }
    if (characterize->parsed()) {
      return cmd_characterize(cfg, opt);
    }
    if (map->parsed()) {
      return cmd_map(cfg, opt);
    }
    if (envelope->parsed()) {
      return cmd_envelope(cfg, opt);
    }
    if (cycle->parsed()) {
      return cmd_cycle(cfg, opt);
    }
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::BadConfig ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
