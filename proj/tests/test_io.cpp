#include <charconv>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "doctest.h"
#include "motormap/config.hpp"
#include "motormap/io_csv.hpp"
#include "support/reference_machine.hpp"

using namespace motormap;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "motormap_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("format_double round-trips through parsing") {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int k = 0; k < 1000; ++k) {
    const double v = u(rng) * std::pow(10.0, (k % 13) - 6);
    const std::string s = io::format_double(v);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    CHECK(back == v);
  }
}

TEST_CASE("flux map CSV round trip is bitwise exact and keeps the completion flag") {
  const auto map = testsupport::reference_map(false, 9, 9);
  const auto path = temp_file("flux_map.csv");
  io::write_flux_map_csv(path.string(), map, {"config_hash=deadbeef"});

  const auto back = io::read_flux_map_csv(path.string());
  CHECK(back.completed_by_symmetry() == map.completed_by_symmetry());
  CHECK(back.id_grid() == map.id_grid());
  CHECK(back.iq_grid() == map.iq_grid());
  CHECK(back.psi_d() == map.psi_d());
  CHECK(back.psi_q() == map.psi_q());
  CHECK(back.source() == FluxMap<double>::Source::External);
}

TEST_CASE("flux map CSV reader rejects malformed files") {
  const auto bad_header = temp_file("bad_header.csv");
  write_text(bad_header, "idA,iq_A,psi_d_Vs,psi_q_Vs\n0,0,0.1,0\n");
  CHECK_THROWS_AS(io::read_flux_map_csv(bad_header.string()), Error);

  const auto bad_number = temp_file("bad_number.csv");
  write_text(bad_number, "id_A,iq_A,psi_d_Vs,psi_q_Vs\n0,0,zzz,0\n");
  try {
    io::read_flux_map_csv(bad_number.string());
    CHECK(false);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);  // line number
  }

  const auto incomplete = temp_file("incomplete.csv");
  write_text(incomplete,
             "id_A,iq_A,psi_d_Vs,psi_q_Vs\n0,0,0.1,0\n0,1,0.1,0\n-1,0,0.1,0\n");
  try {
    io::read_flux_map_csv(incomplete.string());
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IncompleteGrid);
  }
}

TEST_CASE("phase waveform CSV round trip") {
  PhaseWaveforms<double> w;
  w.angles_deg = Eigen::VectorXd::LinSpaced(7, 0.0, 60.0);
  w.psi_a = Eigen::VectorXd::Random(7);
  w.psi_b = Eigen::VectorXd::Random(7);
  w.psi_c = Eigen::VectorXd::Random(7);
  const auto path = temp_file("waveform.csv");
  io::write_phase_waveforms_csv(path.string(), w);
  const auto back = io::read_phase_waveforms_csv(path.string());
  CHECK(back.angles_deg == w.angles_deg);
  CHECK(back.psi_a == w.psi_a);
  CHECK(back.psi_b == w.psi_b);
  CHECK(back.psi_c == w.psi_c);
}

TEST_CASE("region waveform CSV: grouping, period, and validation") {
  const auto path = temp_file("regions.csv");
  std::string text = "region_id,t_s,b_T\n";
  for (int k = 0; k < 16; ++k) {
    text += "yoke," + io::format_double(k * 1e-4) + "," +
            io::format_double(std::sin(kTwoPi * k / 16.0)) + "\n";
  }
  for (int k = 0; k < 8; ++k) {
    text += "teeth," + io::format_double(k * 2e-4) + "," + io::format_double(0.5) + "\n";
  }
  write_text(path, text);

  const auto regions = io::read_waveforms_csv(path.string());
  REQUIRE(regions.size() == 2);
  CHECK(regions[0].region_id == "yoke");
  CHECK(regions[0].b_samples.size() == 16);
  CHECK(regions[0].tau0 == doctest::Approx(16e-4).epsilon(1e-12));
  CHECK(regions[1].region_id == "teeth");
  CHECK(regions[1].tau0 == doctest::Approx(16e-4).epsilon(1e-12));

  const auto split = temp_file("regions_split.csv");
  write_text(split,
             "region_id,t_s,b_T\n"
             "a,0,0\na,1,0\na,2,0\na,3,0\na,4,0\na,5,0\na,6,0\na,7,0\n"
             "b,0,0\nb,1,0\nb,2,0\nb,3,0\nb,4,0\nb,5,0\nb,6,0\nb,7,0\n"
             "a,8,0\n");
  CHECK_THROWS_AS(io::read_waveforms_csv(split.string()), Error);

  const auto nonuniform = temp_file("regions_nonuniform.csv");
  write_text(nonuniform,
             "region_id,t_s,b_T\n"
             "a,0,0\na,1,0\na,2,0\na,3,0\na,4,0\na,5,0\na,6.5,0\na,8,0\n");
  try {
    io::read_waveforms_csv(nonuniform.string());
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonUniformGrid);
  }
}

TEST_CASE("cycle CSV reading applies cycle validation") {
  const auto good = temp_file("cycle.csv");
  write_text(good, "t_s,v_mps\n0,0\n1,2.5\n2,5\n");
  const auto cycle = io::read_cycle_csv(good.string());
  CHECK(cycle.size() == 3);
  CHECK(cycle.speed[1] == 2.5);

  const auto negative = temp_file("cycle_negative.csv");
  write_text(negative, "t_s,v_mps\n0,0\n1,-2\n");
  try {
    io::read_cycle_csv(negative.string());
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NegativeSpeed);
  }
}

TEST_CASE("efficiency map CSV encodes infeasible cells as empty values") {
  EfficiencyMap<double> em;
  em.speed_grid = Eigen::VectorXd::LinSpaced(2, 0.0, 100.0);
  em.torque_grid = Eigen::VectorXd::LinSpaced(2, 0.0, 50.0);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  em.eta.setConstant(2, 2, nan);
  em.p_cu_dc.setConstant(2, 2, nan);
  em.p_cu_ac.setConstant(2, 2, nan);
  em.p_fe.setConstant(2, 2, nan);
  em.p_fr.setConstant(2, 2, nan);
  em.id_A.setConstant(2, 2, nan);
  em.iq_A.setConstant(2, 2, nan);
  em.feasible.setZero(2, 2);
  em.eta(0, 0) = 0.9;
  em.p_cu_dc(0, 0) = 1.0;
  em.p_cu_ac(0, 0) = 2.0;
  em.p_fe(0, 0) = 3.0;
  em.p_fr(0, 0) = 4.0;
  em.id_A(0, 0) = -5.0;
  em.iq_A(0, 0) = 6.0;
  em.feasible(0, 0) = 1;

  const auto path = temp_file("efficiency.csv");
  io::write_efficiency_map_csv(path.string(), em, {"config_hash=cafe"});

  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "# config_hash=cafe");
  std::getline(in, line);
  CHECK(line == "n_per_min,torque_Nm,eta,p_cu_dc_W,p_cu_ac_W,p_fe_W,p_fr_W,id_A,iq_A,feasible");
  std::getline(in, line);
  CHECK(line == "0,0,0.9,1,2,3,4,-5,6,1");
  std::getline(in, line);
  CHECK(line == "6000,0,,,,,,,,0");  // infeasible: empty values, marker 0
}

TEST_CASE("config loader resolves and validates referenced files") {
  const fs::path dir = fs::temp_directory_path() / "motormap_cfg_tests";
  fs::remove_all(dir);
  fs::create_directories(dir);

  // region waveforms referenced relative to the config
  std::string waveforms = "region_id,t_s,b_T\n";
  for (int k = 0; k < 16; ++k) {
    waveforms += "yoke," + io::format_double(k / 16.0 / 433.0) + "," +
                 io::format_double(std::sin(kTwoPi * k / 16.0)) + "\n";
  }
  write_text(dir / "waveforms.csv", waveforms);

  const std::string base = R"({
    "machine": {
      "pole_pairs": 4, "psi_pm_Vs": 0.1, "l_d_H": 2e-4, "l_q_H": 5e-4,
      "r_dc": {"sigma_0_S_per_m": 5.8e7, "alpha_per_K": 3.93e-3, "t_ref_K": 293.15,
               "conductor_length_m": 12.0, "conductor_area_m2": 2.5e-5},
      "r_ac": {"l_eff_m": 7.0, "coeff_a": 2e-4, "exp_b": 1.5},
      "i_max_A": 500.0, "u_dc_V": 800.0
    },
    "losses": {
      "core": {"k_h": 1.8, "k_c": 6.7e-3, "k_e": 3.1e-2, "f_0_Hz": 433.0},
      "waveforms_path": "waveforms.csv"
    },
    "sweep": {"amplitude_steps": 6, "angle_steps": 5}
  )";

  write_text(dir / "ok.json", base + ", \"synthetic\": {} }");
  const RunConfig cfg = load_config((dir / "ok.json").string());
  CHECK(cfg.synthetic.has_value());
  CHECK(cfg.losses.core_waveforms.size() == 1);
  CHECK(cfg.losses.core_waveforms[0].waveform.region_id == "yoke");
  CHECK(cfg.config_hash.size() > 0);

  // exactly one flux source must be configured
  write_text(dir / "both.json", base + ", \"synthetic\": {}, \"fluxmap_path\": \"x.csv\" }");
  try {
    load_config((dir / "both.json").string());
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BadConfig);
  }
  write_text(dir / "neither.json", base + "}");
  CHECK_THROWS_AS(load_config((dir / "neither.json").string()), Error);

  // referenced paths must exist at load time
  write_text(dir / "missing_map.json", base + ", \"fluxmap_path\": \"absent.csv\" }");
  try {
    load_config((dir / "missing_map.json").string());
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BadConfig);
    CHECK(std::string(e.what()).find("absent.csv") != std::string::npos);
  }
}

TEST_CASE("cycle result CSV ends with a summary block") {
  DriveCycleResult<double> result;
  result.steps.push_back({0.0, 1.0, 10.0, 20.0, true, 1256.6, 100.0, 0.92});
  result.energy_in_Wh = 0.377;
  result.energy_out_Wh = 0.349;
  result.energy_recuperated_Wh = 0.0;
  result.cycle_efficiency = 0.92;
  result.infeasible_step_count = 0;

  const auto path = temp_file("cycle_result.csv");
  io::write_cycle_result_csv(path.string(), result);

  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(text.find("t_s,dt_s,n_per_min,torque_Nm,feasible,p_mech_W,p_loss_W,eta") !=
        std::string::npos);
  CHECK(text.find("# energy_in_Wh=0.377") != std::string::npos);
  CHECK(text.find("# cycle_efficiency=0.92") != std::string::npos);
  CHECK(text.find("# infeasible_steps=0") != std::string::npos);
}
