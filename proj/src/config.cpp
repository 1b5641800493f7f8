#include "motormap/config.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "motormap/io_csv.hpp"

namespace motormap {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void config_error(const std::string& context, const std::string& message) {
  throw Error(ErrorCode::BadConfig, context + ": " + message);
}

std::size_t line_of_offset(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
    }
  }
  return line;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << hash;
  return out.str();
}

const json& member(const json& j, const char* key, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end()) {
    config_error(ctx, "missing required field '" + std::string(key) + "'");
  }
  return *it;
}

double number(const json& j, const char* key, const std::string& ctx) {
  const json& v = member(j, key, ctx);
  if (!v.is_number()) {
    config_error(ctx + "." + key, "expected a number");
  }
  return v.get<double>();
}

double number_or(const json& j, const char* key, double fallback, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end()) {
    return fallback;
  }
  if (!it->is_number()) {
    config_error(ctx + "." + key, "expected a number");
  }
  return it->get<double>();
}

int integer(const json& j, const char* key, const std::string& ctx) {
  const json& v = member(j, key, ctx);
  if (!v.is_number_integer()) {
    config_error(ctx + "." + key, "expected an integer");
  }
  return v.get<int>();
}

int integer_or(const json& j, const char* key, int fallback, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end()) {
    return fallback;
  }
  if (!it->is_number_integer()) {
    config_error(ctx + "." + key, "expected an integer");
  }
  return it->get<int>();
}

std::string text(const json& j, const char* key, const std::string& ctx) {
  const json& v = member(j, key, ctx);
  if (!v.is_string()) {
    config_error(ctx + "." + key, "expected a string");
  }
  return v.get<std::string>();
}

MachineParams<double> parse_machine(const json& j, const std::string& ctx) {
  MachineParams<double> mp;
  mp.pole_pairs = integer(j, "pole_pairs", ctx);
  mp.psi_pm = number(j, "psi_pm_Vs", ctx);
  mp.l_d = number(j, "l_d_H", ctx);
  mp.l_q = number(j, "l_q_H", ctx);
  mp.l_sigma_ew = number_or(j, "l_sigma_ew_H", 0.0, ctx);
  const json& rdc = member(j, "r_dc", ctx);
  mp.r_dc.sigma_0 = number(rdc, "sigma_0_S_per_m", ctx + ".r_dc");
  mp.r_dc.alpha = number(rdc, "alpha_per_K", ctx + ".r_dc");
  mp.r_dc.t_ref = number(rdc, "t_ref_K", ctx + ".r_dc");
  mp.r_dc.conductor_length = number(rdc, "conductor_length_m", ctx + ".r_dc");
  mp.r_dc.conductor_area = number(rdc, "conductor_area_m2", ctx + ".r_dc");
  const json& rac = member(j, "r_ac", ctx);
  mp.r_ac.l_eff = number(rac, "l_eff_m", ctx + ".r_ac");
  mp.r_ac.coeff_a = number(rac, "coeff_a", ctx + ".r_ac");
  mp.r_ac.exp_b = number(rac, "exp_b", ctx + ".r_ac");
  mp.i_max = number(j, "i_max_A", ctx);
  mp.u_dc = number(j, "u_dc_V", ctx);
  try {
    mp.validate();
  } catch (const Error& e) {
    config_error(ctx, e.what());
  }
  return mp;
}

GridSpec parse_grid(const json& j, const std::string& ctx) {
  GridSpec g;
  g.min_value = number(j, "min", ctx);
  g.max_value = number(j, "max", ctx);
  g.count = integer(j, "count", ctx);
  if (g.count < 2 || !(g.max_value > g.min_value)) {
    config_error(ctx, "grid needs count >= 2 and max > min");
  }
  return g;
}

std::string resolve_existing_path(const std::string& raw, const fs::path& base,
                                  const std::string& ctx) {
  fs::path p(raw);
  if (p.is_relative()) {
    p = base / p;
  }
  if (!fs::exists(p)) {
    config_error(ctx, "referenced path does not exist: " + p.string());
  }
  return p.string();
}

}  // namespace

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::BadConfig, "cannot open config file: " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string raw = buffer.str();

  json j;
  try {
    j = json::parse(raw);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::BadConfig, path + ":" + std::to_string(line_of_offset(raw, e.byte)) +
                                          ": " + e.what());
  }
  if (!j.is_object()) {
    throw Error(ErrorCode::BadConfig, path + ": top level must be a JSON object");
  }

  const fs::path base = fs::path(path).parent_path();
  RunConfig cfg;
  cfg.config_hash = fnv1a_hex(raw);
  cfg.machine = parse_machine(member(j, "machine", path), path + ": machine");

  const bool has_synthetic = j.contains("synthetic");
  const bool has_fluxmap = j.contains("fluxmap_path");
  if (has_synthetic == has_fluxmap) {
    config_error(path, "exactly one of 'synthetic' and 'fluxmap_path' must be present");
  }
  if (has_synthetic) {
    const json& sj = j["synthetic"];
    SyntheticModelParams<double> sp;
    sp.psi_pm = cfg.machine.psi_pm;
    sp.l_d0 = cfg.machine.l_d;
    sp.l_q0 = cfg.machine.l_q;
    sp.i_sat_d = number_or(sj, "i_sat_d_A", sp.i_sat_d, path + ": synthetic");
    sp.i_sat_q = number_or(sj, "i_sat_q_A", sp.i_sat_q, path + ": synthetic");
    sp.sat_exponent = number_or(sj, "sat_exponent", sp.sat_exponent, path + ": synthetic");
    try {
      sp.validate();
    } catch (const Error& e) {
      config_error(path + ": synthetic", e.what());
    }
    cfg.synthetic = sp;
  } else {
    cfg.fluxmap_path =
        resolve_existing_path(text(j, "fluxmap_path", path), base, path + ": fluxmap_path");
  }

  const std::string losses_ctx = path + ": losses";
  const json& lj = member(j, "losses", path);
  cfg.conditions.winding_temperature = number_or(lj, "winding_temperature_K", 293.15, losses_ctx);
  if (lj.contains("voltage_model_resistance")) {
    const std::string mode = text(lj, "voltage_model_resistance", losses_ctx);
    if (mode == "dc") {
      cfg.conditions.resistance_model = ResistanceModel::Dc;
    } else if (mode == "dc_plus_ac") {
      cfg.conditions.resistance_model = ResistanceModel::DcPlusAc;
    } else {
      config_error(losses_ctx + ".voltage_model_resistance", "expected 'dc' or 'dc_plus_ac'");
    }
  }
  if (lj.contains("core")) {
    const json& cj = lj["core"];
    cfg.losses.core.k_h = number(cj, "k_h", losses_ctx + ".core");
    cfg.losses.core.k_c = number(cj, "k_c", losses_ctx + ".core");
    cfg.losses.core.k_e = number(cj, "k_e", losses_ctx + ".core");
    cfg.losses.core.f_0 = number(cj, "f_0_Hz", losses_ctx + ".core");
  }
  if (lj.contains("core_regions")) {
    const json& rj = lj["core_regions"];
    if (!rj.is_array()) {
      config_error(losses_ctx + ".core_regions", "expected an array");
    }
    for (const json& region : rj) {
      CoreRegionSpec<double> spec;
      spec.id = text(region, "id", losses_ctx + ".core_regions[]");
      spec.flux_to_b = number(region, "flux_to_b_T_per_Vs", losses_ctx + ".core_regions[]");
      spec.weight = number_or(region, "weight", 1.0, losses_ctx + ".core_regions[]");
      cfg.losses.core_regions.push_back(std::move(spec));
    }
  }
  if (lj.contains("waveforms_path")) {
    cfg.waveforms_path = resolve_existing_path(text(lj, "waveforms_path", losses_ctx), base,
                                               losses_ctx + ".waveforms_path");
    cfg.losses.core_waveforms.clear();
    for (auto& w : io::read_waveforms_csv(*cfg.waveforms_path)) {
      cfg.losses.core_waveforms.push_back({std::move(w), 1.0});
    }
  }
  cfg.losses.waveform_samples = integer_or(lj, "waveform_samples", 512, losses_ctx);
  if (lj.contains("friction")) {
    const json& fj = lj["friction"];
    cfg.losses.friction.k_r1 = number(fj, "k_r1", losses_ctx + ".friction");
    cfg.losses.friction.k_r2 = number(fj, "k_r2", losses_ctx + ".friction");
    cfg.losses.friction.k_r3 = number(fj, "k_r3", losses_ctx + ".friction");
  }
  try {
    cfg.losses.validate();
  } catch (const Error& e) {
    config_error(losses_ctx, e.what());
  }

  const std::string sweep_ctx = path + ": sweep";
  const json& swj = member(j, "sweep", path);
  cfg.sweep_amplitude_steps = integer(swj, "amplitude_steps", sweep_ctx);
  cfg.sweep_angle_steps = integer(swj, "angle_steps", sweep_ctx);
  if (swj.contains("cost")) {
    const json& costj = swj["cost"];
    cfg.cost.n_designs = integer(costj, "n_designs", sweep_ctx + ".cost");
    cfg.cost.seconds_per_job = number(costj, "seconds_per_job", sweep_ctx + ".cost");
    cfg.cost.cores = integer(costj, "cores", sweep_ctx + ".cost");
    try {
      cfg.cost.validate();
    } catch (const Error& e) {
      config_error(sweep_ctx + ".cost", e.what());
    }
  }

  if (j.contains("grids")) {
    const json& gj = j["grids"];
    if (gj.contains("speed_per_min")) {
      cfg.speed_grid_per_min = parse_grid(gj["speed_per_min"], path + ": grids.speed_per_min");
    }
    if (gj.contains("torque_Nm")) {
      cfg.torque_grid_Nm = parse_grid(gj["torque_Nm"], path + ": grids.torque_Nm");
    }
  }

  if (j.contains("skew")) {
    const json& kj = j["skew"];
    cfg.skew.n_slices = integer_or(kj, "n_slices", 1, path + ": skew");
    cfg.skew.total_skew_el =
        deg_to_rad(number_or(kj, "total_skew_el_deg", 0.0, path + ": skew"));
    try {
      cfg.skew.validate();
    } catch (const Error& e) {
      config_error(path + ": skew", e.what());
    }
  }

  if (j.contains("solver")) {
    const json& sj = j["solver"];
    const std::string ctx = path + ": solver";
    cfg.solver.beta_grid_points = integer_or(sj, "beta_grid_points", 64, ctx);
    cfg.solver.refine_tolerance = number_or(sj, "refine_tolerance", 1e-4, ctx);
    cfg.solver.voltage_tolerance = number_or(sj, "voltage_tolerance_V", 1e-6, ctx);
    cfg.solver.max_iterations = integer_or(sj, "max_iterations", 100, ctx);
    cfg.conditions.voltage_limit_factor =
        number_or(sj, "voltage_limit_factor", cfg.conditions.voltage_limit_factor, ctx);
    try {
      cfg.solver.validate();
    } catch (const Error& e) {
      config_error(ctx, e.what());
    }
  }

  if (j.contains("vehicle")) {
    const json& vj = j["vehicle"];
    const std::string ctx = path + ": vehicle";
    VehicleParams<double> vp;
    vp.mass = number(vj, "mass_kg", ctx);
    vp.rolling_coeff = number(vj, "rolling_coeff", ctx);
    vp.drag_area = number(vj, "drag_area_m2", ctx);
    vp.air_density = number(vj, "air_density_kg_m3", ctx);
    vp.wheel_radius = number(vj, "wheel_radius_m", ctx);
    vp.gear_ratio = number(vj, "gear_ratio", ctx);
    vp.driveline_efficiency = number(vj, "driveline_efficiency", ctx);
    try {
      vp.validate();
    } catch (const Error& e) {
      config_error(ctx, e.what());
    }
    cfg.vehicle = vp;
  }
  if (j.contains("cycle_path")) {
    cfg.cycle_path =
        resolve_existing_path(text(j, "cycle_path", path), base, path + ": cycle_path");
  }

  if (j.contains("output_dir")) {
    cfg.output_dir = text(j, "output_dir", path);
  }
  return cfg;
}

}  // namespace motormap
