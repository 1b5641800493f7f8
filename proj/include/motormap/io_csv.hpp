#pragma once

#include <string>
#include <vector>

#include "motormap/drive_cycle.hpp"
#include "motormap/flux_map.hpp"
#include "motormap/losses.hpp"
#include "motormap/machine.hpp"
#include "motormap/map_gen.hpp"
#include "motormap/solver.hpp"

namespace motormap::io {

// Shortest decimal representation that round-trips through double.
std::string format_double(double value);

// Flux-map CSV: `id_A,iq_A,psi_d_Vs,psi_q_Vs`, complete rectangular grid,
// free row order. `#`-prefixed lines are comments; the writer records the
// symmetry-completion flag there and the reader restores it.
FluxMap<double> read_flux_map_csv(const std::string& path);
void write_flux_map_csv(const std::string& path, const FluxMap<double>& map,
                        const std::vector<std::string>& comments = {});

// Phase waveform CSV: `gamma_el_deg,psi_a,psi_b,psi_c`.
PhaseWaveforms<double> read_phase_waveforms_csv(const std::string& path);
void write_phase_waveforms_csv(const std::string& path, const PhaseWaveforms<double>& waveforms,
                               const std::vector<std::string>& comments = {});

// Region flux-density waveform CSV: `region_id,t_s,b_T`, rows grouped by
// region with uniform time steps per region.
std::vector<WaveformSample<double>> read_waveforms_csv(const std::string& path);

// Drive-cycle CSV: `t_s,v_mps`.
DriveCycle<double> read_cycle_csv(const std::string& path);

// Efficiency-map CSV, row-major over the torque x speed grid. Infeasible
// cells leave the value columns empty and set feasible=0.
void write_efficiency_map_csv(const std::string& path, const EfficiencyMap<double>& map,
                              const std::vector<std::string>& comments = {});

void write_envelope_csv(const std::string& path, const std::vector<EnvelopePoint<double>>& envelope,
                        const std::vector<std::string>& comments = {});

// Per-step cycle records plus a trailing `#` summary block.
void write_cycle_result_csv(const std::string& path, const DriveCycleResult<double>& result,
                            const std::vector<std::string>& comments = {});

}  // namespace motormap::io
