#pragma once

#include <Eigen/Core>
#include <cmath>
#include <vector>

#include "motormap/core.hpp"
#include "motormap/flux_map.hpp"
#include "motormap/machine.hpp"
#include "motormap/map_gen.hpp"
#include "motormap/solver.hpp"

namespace motormap {

// Timestamped vehicle speed profile.
template <typename Scalar>
struct DriveCycle {
  Eigen::VectorX<Scalar> time;   // s, strictly ascending
  Eigen::VectorX<Scalar> speed;  // m/s, >= 0

  Eigen::Index size() const { return time.size(); }
};

template <typename Scalar>
struct CycleRow {
  Scalar t{};
  Scalar v{};
};

template <typename Scalar>
DriveCycle<Scalar> load_cycle(const std::vector<CycleRow<Scalar>>& rows) {
  if (rows.size() < 2) {
    throw Error(ErrorCode::BadDomain, "cycle needs at least 2 samples");
  }
  DriveCycle<Scalar> cycle;
  cycle.time.resize(static_cast<Eigen::Index>(rows.size()));
  cycle.speed.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (k > 0 && !(rows[k].t > rows[k - 1].t)) {
      throw Error(ErrorCode::NonMonotonicTime,
                  "time must be strictly ascending at row " + std::to_string(k));
    }
    if (rows[k].v < Scalar(0)) {
      throw Error(ErrorCode::NegativeSpeed, "negative speed at row " + std::to_string(k));
    }
    cycle.time[static_cast<Eigen::Index>(k)] = rows[k].t;
    cycle.speed[static_cast<Eigen::Index>(k)] = rows[k].v;
  }
  return cycle;
}

// Longitudinal vehicle model (mass + rolling + aerodynamic drag).
template <typename Scalar>
struct VehicleParams {
  Scalar mass{};                  // kg
  Scalar rolling_coeff{};         // dimensionless
  Scalar drag_area{};             // c_d * A, m^2
  Scalar air_density{};           // kg/m^3
  Scalar wheel_radius{};          // m
  Scalar gear_ratio{};            // machine speed / wheel speed
  Scalar driveline_efficiency{};  // (0, 1]

  void validate() const {
    if (!(mass > Scalar(0)) || !(wheel_radius > Scalar(0)) || !(gear_ratio > Scalar(0))) {
      throw Error(ErrorCode::BadDomain, "mass, wheel radius, and gear ratio must be positive");
    }
    if (!(driveline_efficiency > Scalar(0)) || driveline_efficiency > Scalar(1)) {
      throw Error(ErrorCode::BadDomain, "driveline efficiency must be in (0, 1]");
    }
    if (rolling_coeff < Scalar(0) || drag_area < Scalar(0) || air_density < Scalar(0)) {
      throw Error(ErrorCode::BadDomain, "resistance coefficients must be >= 0");
    }
  }
};

template <typename Scalar>
struct ShaftDemand {
  Scalar speed_n{};  // 1/s at the machine shaft
  Scalar torque{};   // Nm at the machine shaft
};

// Demand of interval [k, k+1): forward-difference acceleration with the
// interval-average speed. Driveline efficiency divides the shaft torque
// when driving and multiplies it when braking (recuperation path).
template <typename Scalar>
ShaftDemand<Scalar> wheel_demand(const DriveCycle<Scalar>& cycle, const VehicleParams<Scalar>& vp,
                                 Eigen::Index step_index) {
  vp.validate();
  if (step_index < 0 || step_index + 1 >= cycle.size()) {
    throw Error(ErrorCode::BadRange, "step index out of range");
  }
  const Scalar dt = cycle.time[step_index + 1] - cycle.time[step_index];
  const Scalar dvdt = (cycle.speed[step_index + 1] - cycle.speed[step_index]) / dt;
  const Scalar v = (cycle.speed[step_index] + cycle.speed[step_index + 1]) / Scalar(2);

  Scalar force = vp.mass * dvdt;
  if (v > Scalar(0)) {
    force += vp.mass * Scalar(kGravity) * vp.rolling_coeff;
  }
  force += Scalar(0.5) * vp.air_density * vp.drag_area * v * v;

  const Scalar wheel_torque = force * vp.wheel_radius;
  ShaftDemand<Scalar> demand;
  demand.torque = (force >= Scalar(0))
                      ? wheel_torque / (vp.gear_ratio * vp.driveline_efficiency)
                      : wheel_torque * vp.driveline_efficiency / vp.gear_ratio;
  demand.speed_n = v * vp.gear_ratio / (two_pi<Scalar>() * vp.wheel_radius);
  return demand;
}

template <typename Scalar>
struct CycleStep {
  Scalar t{};        // interval start, s
  Scalar dt{};       // interval length, s
  Scalar speed_n{};  // 1/s
  Scalar torque{};   // Nm (clamped to the envelope when infeasible)
  bool feasible = true;
  Scalar p_mech{};  // W, signed
  Scalar p_loss{};  // W
  Scalar eta{};
};

template <typename Scalar>
struct DriveCycleResult {
  std::vector<CycleStep<Scalar>> steps;
  Scalar energy_in_Wh{};           // electrical input over motoring intervals
  Scalar energy_out_Wh{};          // mechanical output over motoring intervals
  Scalar energy_recuperated_Wh{};  // electrical return over generating intervals
  Scalar cycle_efficiency{};       // input-energy-weighted mean of per-step eta
  long infeasible_step_count = 0;
};

// Resolves every interval against the characterized machine and aggregates
// energies. A demand beyond the capability envelope is clamped to the
// maximum feasible torque at that speed and flagged, not treated as an
// error. Intervals are independent; evaluation may run on the worker pool.
template <typename Scalar>
DriveCycleResult<Scalar> evaluate_cycle(const DriveCycle<Scalar>& cycle,
                                        const VehicleParams<Scalar>& vp,
                                        const FluxMap<Scalar>& map,
                                        const MachineParams<Scalar>& mp,
                                        const OperatingConditions<Scalar>& cond,
                                        const LossModelConfig<Scalar>& cfg,
                                        const SolverSettings<Scalar>& s, unsigned workers = 1) {
  s.validate();
  cfg.validate();
  vp.validate();
  if (cycle.size() < 2) {
    throw Error(ErrorCode::BadDomain, "cycle needs at least 2 samples");
  }
  const std::size_t n_steps = static_cast<std::size_t>(cycle.size() - 1);

  DriveCycleResult<Scalar> result;
  result.steps.resize(n_steps);

  run_jobs(n_steps, workers, [&](std::size_t k) {
    const Eigen::Index idx = static_cast<Eigen::Index>(k);
    const ShaftDemand<Scalar> demand = wheel_demand(cycle, vp, idx);
    CycleStep<Scalar>& step = result.steps[k];
    step.t = cycle.time[idx];
    step.dt = cycle.time[idx + 1] - cycle.time[idx];
    step.speed_n = demand.speed_n;
    step.feasible = true;

    Scalar m = demand.torque;
    std::optional<CurrentPolar<Scalar>> setpoint;
    try {
      setpoint = field_weakening_setpoint(map, mp, cond, m, demand.speed_n, s);
    } catch (const InfeasibleAtSpeedError& e) {
      step.feasible = false;
      m = (m < Scalar(0) ? Scalar(-1) : Scalar(1)) *
          std::min(std::abs(m), static_cast<Scalar>(e.max_feasible_torque()));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TorqueUnreachable) {
        throw;
      }
      step.feasible = false;
      const Scalar m_cap = max_feasible_torque(map, mp, cond, demand.speed_n, s);
      m = (m < Scalar(0) ? Scalar(-1) : Scalar(1)) * std::min(std::abs(m), m_cap);
    }
    if (!setpoint) {
      try {
        setpoint = field_weakening_setpoint(map, mp, cond, m, demand.speed_n, s);
      } catch (const Error&) {
        m = Scalar(0);
        setpoint = CurrentPolar<Scalar>{Scalar(0), pi<Scalar>() / Scalar(2)};
      }
    }
    step.torque = m;
    const DqValue<Scalar> i = dq_from_polar(*setpoint);
    const LossBreakdown<Scalar> lb =
        loss_breakdown_at(map, mp, cond, cfg, i, demand.speed_n, m);
    step.p_mech = two_pi<Scalar>() * demand.speed_n * m;
    step.p_loss = lb.p_total;
    step.eta = lb.eta;
  });

  Scalar e_in = Scalar(0);
  Scalar e_out = Scalar(0);
  Scalar e_recup = Scalar(0);
  Scalar eta_weighted = Scalar(0);
  Scalar weight_total = Scalar(0);
  for (const CycleStep<Scalar>& step : result.steps) {
    if (!step.feasible) {
      ++result.infeasible_step_count;
    }
    if (step.torque > Scalar(0)) {
      const Scalar in = step.dt * (step.p_mech + step.p_loss);
      e_in += in;
      e_out += step.dt * step.p_mech;
      eta_weighted += step.eta * in;
      weight_total += in;
    } else if (step.torque < Scalar(0)) {
      const Scalar mech_in = step.dt * (-step.p_mech);
      e_recup += step.dt * (-(step.p_mech + step.p_loss));
      eta_weighted += step.eta * mech_in;
      weight_total += mech_in;
    }
  }
  const Scalar to_wh = Scalar(1) / Scalar(3600);
  result.energy_in_Wh = e_in * to_wh;
  result.energy_out_Wh = e_out * to_wh;
  result.energy_recuperated_Wh = e_recup * to_wh;
  result.cycle_efficiency = weight_total > Scalar(0) ? eta_weighted / weight_total : Scalar(0);
  return result;
}

}  // namespace motormap
