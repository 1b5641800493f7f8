#include "motormap/io_csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

namespace motormap::io {

namespace {

std::string location(const std::string& path, std::size_t line) {
  return path + ":" + std::to_string(line);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') {
    out.emplace_back();
  }
  return out;
}

double parse_double(const std::string& field, const std::string& path, std::size_t line) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = field.data() + field.size();
  while (begin != end && (*begin == ' ' || *begin == '\t')) {
    ++begin;
  }
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::BadDomain,
                location(path, line) + ": cannot parse number '" + field + "'");
  }
  return value;
}

struct CsvReader {
  explicit CsvReader(const std::string& path) : path_(path), in_(path) {
    if (!in_) {
      throw Error(ErrorCode::BadDomain, "cannot open file: " + path);
    }
  }

  // Returns false at end of file; skips blank lines, collects comments.
  bool next_row(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      if (!line.empty() && line.back() == '\r') {
        line.pop_back();
      }
      if (line.empty()) {
        continue;
      }
      if (line[0] == '#') {
        comments_.push_back(line.substr(1));
        continue;
      }
      fields = split_fields(line);
      return true;
    }
    return false;
  }

  void expect_header(const std::string& expected) {
    std::vector<std::string> fields;
    if (!next_row(fields)) {
      throw Error(ErrorCode::BadDomain, path_ + ": missing header '" + expected + "'");
    }
    std::string got;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) {
        got += ",";
      }
      got += fields[i];
    }
    if (got != expected) {
      throw Error(ErrorCode::BadDomain, location(path_, line_) + ": expected header '" +
                                            expected + "', got '" + got + "'");
    }
  }

  double number(const std::vector<std::string>& fields, std::size_t index) const {
    return parse_double(fields.at(index), path_, line_);
  }

  std::size_t line() const { return line_; }
  const std::string& path() const { return path_; }
  const std::vector<std::string>& comments() const { return comments_; }

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t line_ = 0;
  std::vector<std::string> comments_;
};

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& comments) : out_(path) {
    if (!out_) {
      throw Error(ErrorCode::BadDomain, "cannot open file for writing: " + path);
    }
    for (const auto& c : comments) {
      out_ << "# " << c << "\n";
    }
  }

  void line(const std::string& text) { out_ << text << "\n"; }

  std::ofstream& stream() { return out_; }

 private:
  std::ofstream out_;
};

void require_field_count(const CsvReader& reader, const std::vector<std::string>& fields,
                         std::size_t expected) {
  if (fields.size() != expected) {
    throw Error(ErrorCode::BadDomain, location(reader.path(), reader.line()) + ": expected " +
                                          std::to_string(expected) + " fields, got " +
                                          std::to_string(fields.size()));
  }
}

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) {
    throw Error(ErrorCode::NonFiniteValue, "cannot format value");
  }
  return std::string(buffer, ptr);
}

FluxMap<double> read_flux_map_csv(const std::string& path) {
  CsvReader reader(path);
  reader.expect_header("id_A,iq_A,psi_d_Vs,psi_q_Vs");
  std::vector<FluxSample<double>> rows;
  std::vector<std::string> fields;
  while (reader.next_row(fields)) {
    require_field_count(reader, fields, 4);
    rows.push_back({reader.number(fields, 0), reader.number(fields, 1), reader.number(fields, 2),
                    reader.number(fields, 3)});
  }
  FluxMap<double> map = build_from_samples(rows);
  bool completed = false;
  for (const auto& c : reader.comments()) {
    if (c.find("completed_by_symmetry=1") != std::string::npos) {
      completed = true;
    }
  }
  if (completed) {
    return FluxMap<double>(map.id_grid(), map.iq_grid(), map.psi_d(), map.psi_q(),
                           FluxMap<double>::Source::External, true);
  }
  return map;
}

void write_flux_map_csv(const std::string& path, const FluxMap<double>& map,
                        const std::vector<std::string>& comments) {
  std::vector<std::string> all_comments = comments;
  if (map.completed_by_symmetry()) {
    all_comments.push_back("completed_by_symmetry=1");
  }
  CsvWriter writer(path, all_comments);
  writer.line("id_A,iq_A,psi_d_Vs,psi_q_Vs");
  for (Eigen::Index i = 0; i < map.id_grid().size(); ++i) {
    for (Eigen::Index j = 0; j < map.iq_grid().size(); ++j) {
      writer.line(format_double(map.id_grid()[i]) + "," + format_double(map.iq_grid()[j]) + "," +
                  format_double(map.psi_d()(i, j)) + "," + format_double(map.psi_q()(i, j)));
    }
  }
}

PhaseWaveforms<double> read_phase_waveforms_csv(const std::string& path) {
  CsvReader reader(path);
  reader.expect_header("gamma_el_deg,psi_a,psi_b,psi_c");
  std::vector<double> angles, a, b, c;
  std::vector<std::string> fields;
  while (reader.next_row(fields)) {
    require_field_count(reader, fields, 4);
    angles.push_back(reader.number(fields, 0));
    a.push_back(reader.number(fields, 1));
    b.push_back(reader.number(fields, 2));
    c.push_back(reader.number(fields, 3));
  }
  PhaseWaveforms<double> w;
  const auto n = static_cast<Eigen::Index>(angles.size());
  w.angles_deg = Eigen::Map<const Eigen::VectorXd>(angles.data(), n);
  w.psi_a = Eigen::Map<const Eigen::VectorXd>(a.data(), n);
  w.psi_b = Eigen::Map<const Eigen::VectorXd>(b.data(), n);
  w.psi_c = Eigen::Map<const Eigen::VectorXd>(c.data(), n);
  w.validate();
  return w;
}

void write_phase_waveforms_csv(const std::string& path, const PhaseWaveforms<double>& waveforms,
                               const std::vector<std::string>& comments) {
  waveforms.validate();
  CsvWriter writer(path, comments);
  writer.line("gamma_el_deg,psi_a,psi_b,psi_c");
  for (Eigen::Index i = 0; i < waveforms.size(); ++i) {
    writer.line(format_double(waveforms.angles_deg[i]) + "," + format_double(waveforms.psi_a[i]) +
                "," + format_double(waveforms.psi_b[i]) + "," + format_double(waveforms.psi_c[i]));
  }
}

std::vector<WaveformSample<double>> read_waveforms_csv(const std::string& path) {
  CsvReader reader(path);
  reader.expect_header("region_id,t_s,b_T");
  struct RegionData {
    std::string id;
    std::vector<double> t;
    std::vector<double> b;
  };
  std::vector<RegionData> regions;
  std::vector<std::string> fields;
  while (reader.next_row(fields)) {
    require_field_count(reader, fields, 3);
    const std::string& id = fields[0];
    if (regions.empty() || regions.back().id != id) {
      for (const auto& r : regions) {
        if (r.id == id) {
          throw Error(ErrorCode::BadDomain, location(reader.path(), reader.line()) +
                                                ": region '" + id + "' rows are not contiguous");
        }
      }
      regions.push_back({id, {}, {}});
    }
    regions.back().t.push_back(reader.number(fields, 1));
    regions.back().b.push_back(reader.number(fields, 2));
  }

  std::vector<WaveformSample<double>> out;
  for (const auto& r : regions) {
    const std::size_t n = r.t.size();
    if (n < 8) {
      throw Error(ErrorCode::TooFewSamples,
                  path + ": region '" + r.id + "' has fewer than 8 samples");
    }
    const double dt = r.t[1] - r.t[0];
    if (!(dt > 0.0)) {
      throw Error(ErrorCode::NonMonotonicTime, path + ": region '" + r.id + "' time not ascending");
    }
    for (std::size_t k = 0; k + 1 < n; ++k) {
      if (std::abs((r.t[k + 1] - r.t[k]) - dt) > 1e-9 * dt * static_cast<double>(n)) {
        throw Error(ErrorCode::NonUniformGrid,
                    path + ": region '" + r.id + "' time steps are not uniform");
      }
    }
    Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(r.b.data(), static_cast<Eigen::Index>(n));
    out.push_back(WaveformSample<double>::from_samples(r.id, std::move(b),
                                                       dt * static_cast<double>(n)));
  }
  return out;
}

DriveCycle<double> read_cycle_csv(const std::string& path) {
  CsvReader reader(path);
  reader.expect_header("t_s,v_mps");
  std::vector<CycleRow<double>> rows;
  std::vector<std::string> fields;
  while (reader.next_row(fields)) {
    require_field_count(reader, fields, 2);
    rows.push_back({reader.number(fields, 0), reader.number(fields, 1)});
  }
  return load_cycle(rows);
}

void write_efficiency_map_csv(const std::string& path, const EfficiencyMap<double>& map,
                              const std::vector<std::string>& comments) {
  CsvWriter writer(path, comments);
  writer.line("n_per_min,torque_Nm,eta,p_cu_dc_W,p_cu_ac_W,p_fe_W,p_fr_W,id_A,iq_A,feasible");
  for (Eigen::Index ti = 0; ti < map.torque_grid.size(); ++ti) {
    for (Eigen::Index si = 0; si < map.speed_grid.size(); ++si) {
      std::string line = format_double(map.speed_grid[si] * 60.0) + "," +
                         format_double(map.torque_grid[ti]) + ",";
      if (map.feasible(ti, si)) {
        line += format_double(map.eta(ti, si)) + "," + format_double(map.p_cu_dc(ti, si)) + "," +
                format_double(map.p_cu_ac(ti, si)) + "," + format_double(map.p_fe(ti, si)) + "," +
                format_double(map.p_fr(ti, si)) + "," + format_double(map.id_A(ti, si)) + "," +
                format_double(map.iq_A(ti, si)) + ",1";
      } else {
        line += ",,,,,,,0";
      }
      writer.line(line);
    }
  }
}

void write_envelope_csv(const std::string& path, const std::vector<EnvelopePoint<double>>& envelope,
                        const std::vector<std::string>& comments) {
  CsvWriter writer(path, comments);
  writer.line("n_per_min,torque_max_Nm,feasible");
  for (const auto& point : envelope) {
    writer.line(format_double(point.speed_n * 60.0) + "," + format_double(point.max_torque) + "," +
                (point.feasible ? "1" : "0"));
  }
}

void write_cycle_result_csv(const std::string& path, const DriveCycleResult<double>& result,
                            const std::vector<std::string>& comments) {
  CsvWriter writer(path, comments);
  writer.line("t_s,dt_s,n_per_min,torque_Nm,feasible,p_mech_W,p_loss_W,eta");
  for (const auto& step : result.steps) {
    writer.line(format_double(step.t) + "," + format_double(step.dt) + "," +
                format_double(step.speed_n * 60.0) + "," + format_double(step.torque) + "," +
                (step.feasible ? "1" : "0") + "," + format_double(step.p_mech) + "," +
                format_double(step.p_loss) + "," + format_double(step.eta));
  }
  writer.line("# energy_in_Wh=" + format_double(result.energy_in_Wh));
  writer.line("# energy_out_Wh=" + format_double(result.energy_out_Wh));
  writer.line("# energy_recuperated_Wh=" + format_double(result.energy_recuperated_Wh));
  writer.line("# cycle_efficiency=" + format_double(result.cycle_efficiency));
  writer.line("# infeasible_steps=" + std::to_string(result.infeasible_step_count));
}

}  // namespace motormap::io
