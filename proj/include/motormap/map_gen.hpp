#pragma once

#include <Eigen/Core>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "motormap/core.hpp"
#include "motormap/flux_map.hpp"
#include "motormap/losses.hpp"
#include "motormap/machine.hpp"
#include "motormap/solver.hpp"

namespace motormap {

// Runs `body(job_index)` for every index with a fixed-size worker pool
// pulling from an ordered queue. Workers may only write to the slot keyed
// by their job index, so results are independent of worker count and
// completion order. workers == 0 uses the hardware concurrency.
template <typename Body>
void run_jobs(std::size_t job_count, unsigned workers, Body&& body) {
  if (workers == 0) {
    workers = std::max(1u, std::thread::hardware_concurrency());
  }
  if (workers <= 1 || job_count <= 1) {
    for (std::size_t i = 0; i < job_count; ++i) {
      body(i);
    }
    return;
  }
  const unsigned n_threads =
      static_cast<unsigned>(std::min<std::size_t>(workers, job_count));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> failures(n_threads);
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (unsigned t = 0; t < n_threads; ++t) {
    pool.emplace_back([&, t]() {
      try {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= job_count) {
            break;
          }
          body(i);
        }
      } catch (...) {
        failures[t] = std::current_exception();
        next.store(job_count);
      }
    });
  }
  for (auto& th : pool) {
    th.join();
  }
  for (auto& f : failures) {
    if (f) {
      std::rethrow_exception(f);
    }
  }
}

// Current sweep with uniform amplitude steps on [0, i_max] and uniform
// angle steps on (beta_min, beta_max]; the zero-amplitude case is a single
// shared job, so the job count is (n_i - 1) * n_beta + 1.
template <typename Scalar>
struct SweepPlan {
  int amplitude_steps = 0;  // n_i
  int angle_steps = 0;      // n_beta
  Scalar i_max{};
  Scalar beta_min{};  // exclusive
  Scalar beta_max{};  // inclusive
  std::vector<CurrentPolar<Scalar>> job_list;

  std::size_t job_count() const { return job_list.size(); }
};

template <typename Scalar>
SweepPlan<Scalar> plan_sweep(int n_i, int n_beta, Scalar i_max,
                             Scalar beta_min = pi<Scalar>() / Scalar(2),
                             Scalar beta_max = pi<Scalar>()) {
  if (n_i < 2 || n_beta < 1) {
    throw Error(ErrorCode::BadRange, "need n_i >= 2 and n_beta >= 1");
  }
  if (!(i_max > Scalar(0)) || !(beta_max > beta_min)) {
    throw Error(ErrorCode::BadRange, "need i_max > 0 and beta_max > beta_min");
  }
  SweepPlan<Scalar> plan;
  plan.amplitude_steps = n_i;
  plan.angle_steps = n_beta;
  plan.i_max = i_max;
  plan.beta_min = beta_min;
  plan.beta_max = beta_max;
  plan.job_list.reserve(static_cast<std::size_t>(n_i - 1) * n_beta + 1);
  plan.job_list.push_back({Scalar(0), beta_max});
  for (int k = 1; k < n_i; ++k) {
    const Scalar amp = i_max * Scalar(k) / Scalar(n_i - 1);
    for (int j = 1; j <= n_beta; ++j) {
      const Scalar beta = beta_min + (beta_max - beta_min) * Scalar(j) / Scalar(n_beta);
      plan.job_list.push_back({amp, beta});
    }
  }
  return plan;
}

struct CostModel {
  long long n_designs = 1;
  double seconds_per_job = 1.0;
  int cores = 1;

  void validate() const {
    if (n_designs < 1 || !(seconds_per_job > 0.0) || cores < 1) {
      throw Error(ErrorCode::BadDomain, "cost model fields must be positive");
    }
  }
};

struct RuntimeEstimate {
  double serial_s = 0.0;
  double parallel_s = 0.0;
};

// Total sweep time over all designs; the parallel figure assumes ideal
// linear speedup over the core count.
template <typename Scalar>
RuntimeEstimate estimate_runtime(const SweepPlan<Scalar>& plan, const CostModel& cost) {
  cost.validate();
  const double serial = static_cast<double>(cost.n_designs) *
                        static_cast<double>(plan.job_count()) * cost.seconds_per_job;
  return {serial, serial / static_cast<double>(cost.cores)};
}

inline std::string format_duration(double seconds) {
  const long long hours = static_cast<long long>(seconds / 3600.0);
  const long long minutes =
      static_cast<long long>((seconds - static_cast<double>(hours) * 3600.0) / 60.0);
  return std::to_string(hours) + " h " + std::to_string(minutes) + " min";
}

// A flux source maps a stator current phasor to dq flux linkages. Sources
// stand in for the upstream field solution (synthetic model or an existing
// map re-sampled).
template <typename Scalar>
using FluxSourceFn = std::function<DqValue<Scalar>(const CurrentPolar<Scalar>&)>;

template <typename Scalar>
FluxSourceFn<Scalar> make_synthetic_source(const SyntheticModelParams<Scalar>& params) {
  params.validate();
  return [params](const CurrentPolar<Scalar>& c) {
    return synthetic_flux(params, dq_from_polar(c));
  };
}

// The map must outlive the returned source.
template <typename Scalar>
FluxSourceFn<Scalar> make_map_source(const FluxMap<Scalar>& map) {
  return [&map](const CurrentPolar<Scalar>& c) { return interpolate(map, dq_from_polar(c)); };
}

template <typename Scalar>
FluxSourceFn<Scalar> with_skew(FluxSourceFn<Scalar> base, SkewSpec<Scalar> skew) {
  skew.validate();
  if (skew.n_slices == 1) {
    return base;
  }
  return [base = std::move(base), skew](const CurrentPolar<Scalar>& c) {
    return skew_average_with(base, skew, c);
  };
}

struct CharacterizationOptions {
  unsigned workers = 1;
  double artificial_job_delay_s = 0.0;  // scheduling-test knob
};

// Evaluates the flux source over the rectangular characterization grid
// spanned by the sweep: the q-axis grid reuses the amplitude steps on
// [0, i_max] and the d-axis grid uses the angle step count on [-i_max, 0].
// Jobs run on the worker pool; any per-job failure aborts assembly with
// the failing grid coordinates.
template <typename Scalar>
FluxMap<Scalar> run_characterization(
    const FluxSourceFn<Scalar>& source, const SweepPlan<Scalar>& plan,
    const CharacterizationOptions& opts = {},
    typename FluxMap<Scalar>::Source tag = FluxMap<Scalar>::Source::Synthetic) {
  if (plan.angle_steps < 2) {
    throw Error(ErrorCode::BadRange, "characterization needs angle_steps >= 2 for the d-axis grid");
  }
  const Eigen::Index nd = plan.angle_steps;
  const Eigen::Index nq = plan.amplitude_steps;
  typename FluxMap<Scalar>::Vector id_grid =
      Eigen::VectorX<Scalar>::LinSpaced(nd, -plan.i_max, Scalar(0));
  typename FluxMap<Scalar>::Vector iq_grid =
      Eigen::VectorX<Scalar>::LinSpaced(nq, Scalar(0), plan.i_max);
  typename FluxMap<Scalar>::Matrix psi_d(nd, nq), psi_q(nd, nq);

  const std::size_t job_count = static_cast<std::size_t>(nd * nq);
  std::vector<std::string> job_errors(job_count);
  std::atomic<bool> any_error{false};

  run_jobs(job_count, opts.workers, [&](std::size_t idx) {
    const Eigen::Index i = static_cast<Eigen::Index>(idx) / nq;
    const Eigen::Index j = static_cast<Eigen::Index>(idx) % nq;
    if (opts.artificial_job_delay_s > 0.0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(opts.artificial_job_delay_s));
    }
    try {
      const CurrentPolar<Scalar> polar = polar_from_dq(DqValue<Scalar>{id_grid[i], iq_grid[j]});
      const DqValue<Scalar> flux = source(polar);
      psi_d(i, j) = flux.d;
      psi_q(i, j) = flux.q;
    } catch (const std::exception& e) {
      job_errors[idx] = e.what();
      any_error.store(true);
    }
  });

  if (any_error.load()) {
    std::string message = "characterization failed:";
    int listed = 0;
    int total = 0;
    for (std::size_t idx = 0; idx < job_count; ++idx) {
      if (job_errors[idx].empty()) {
        continue;
      }
      ++total;
      if (listed < 8) {
        const Eigen::Index i = static_cast<Eigen::Index>(idx) / nq;
        const Eigen::Index j = static_cast<Eigen::Index>(idx) % nq;
        message += " [job " + std::to_string(idx) + " @ Id=" + std::to_string(id_grid[i]) +
                   " A, Iq=" + std::to_string(iq_grid[j]) + " A: " + job_errors[idx] + "]";
        ++listed;
      }
    }
    message += " (" + std::to_string(total) + " failing job(s))";
    throw Error(ErrorCode::JobFailed, message);
  }

  return FluxMap<Scalar>(std::move(id_grid), std::move(iq_grid), std::move(psi_d),
                         std::move(psi_q), tag);
}

// Core-loss region described by a flux-to-flux-density factor; the region
// waveform is the sinusoidal assumption b(t) = factor*|psi| * sin(2*pi*f0*t).
template <typename Scalar>
struct CoreRegionSpec {
  std::string id;
  Scalar flux_to_b{};  // T per Vs
  Scalar weight = Scalar(1);
};

template <typename Scalar>
struct LossModelConfig {
  CoreLossCoefficients<Scalar> core{Scalar(0), Scalar(0), Scalar(0), Scalar(1)};
  std::vector<CoreRegionSpec<Scalar>> core_regions;        // synthetic waveforms
  std::vector<WeightedWaveform<Scalar>> core_waveforms;    // fixed reference waveforms
  Eigen::Index waveform_samples = 512;
  FrictionCoefficients<Scalar> friction{};

  void validate() const {
    core.validate();
    friction.validate();
    if (!core_regions.empty() && !core_waveforms.empty()) {
      throw Error(ErrorCode::BadConfig,
                  "core regions and fixed waveforms are mutually exclusive");
    }
    if (waveform_samples < 8) {
      throw Error(ErrorCode::TooFewSamples, "waveform_samples must be >= 8");
    }
  }
};

// Full loss stack at one resolved operating point. `shaft_torque` is the
// demanded torque used for the efficiency figure.
template <typename Scalar>
LossBreakdown<Scalar> loss_breakdown_at(const FluxMap<Scalar>& map,
                                        const MachineParams<Scalar>& mp,
                                        const OperatingConditions<Scalar>& cond,
                                        const LossModelConfig<Scalar>& cfg,
                                        const DqValue<Scalar>& i, Scalar n,
                                        Scalar shaft_torque) {
  const Scalar f_el = electrical_frequency_hz(n, mp.pole_pairs);
  const Scalar amp = std::hypot(i.d, i.q);
  const ConductionLoss<Scalar> cu =
      conduction_loss(mp.r_dc, mp.r_ac, amp, cond.winding_temperature, f_el);

  Scalar p_fe = Scalar(0);
  if (!cfg.core_regions.empty()) {
    const DqValue<Scalar> psi = interpolate(map, i);
    const Scalar psi_mag = std::hypot(psi.d, psi.q);
    for (const auto& region : cfg.core_regions) {
      const WaveformSample<Scalar> w = make_sinusoid_waveform(
          region.id, region.flux_to_b * psi_mag, cfg.core.f_0, cfg.waveform_samples);
      p_fe += region.weight * core_loss(cfg.core, w, f_el);
    }
  } else if (!cfg.core_waveforms.empty()) {
    p_fe = core_loss(cfg.core, cfg.core_waveforms, f_el);
  }

  LossBreakdown<Scalar> out;
  out.p_cu_dc = cu.p_dc;
  out.p_cu_ac = cu.p_ac;
  out.p_fe = p_fe;
  out.p_fr = friction_loss(cfg.friction, n);
  out.p_total = out.p_cu_dc + out.p_cu_ac + out.p_fe + out.p_fr;
  out.eta = efficiency(n, shaft_torque, out.p_total).eta;
  return out;
}

// Efficiency and loss grids over the torque-speed plane. All matrices are
// indexed (torque row, speed column); infeasible cells hold NaN values and
// a zero marker.
template <typename Scalar>
struct EfficiencyMap {
  Eigen::VectorX<Scalar> speed_grid;   // 1/s
  Eigen::VectorX<Scalar> torque_grid;  // Nm
  Eigen::MatrixX<Scalar> eta;
  Eigen::MatrixX<Scalar> p_cu_dc, p_cu_ac, p_fe, p_fr;
  Eigen::MatrixX<Scalar> id_A, iq_A;
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> feasible;
};

// Per cell: field-weakening set-point, loss breakdown, efficiency.
// Cells whose demand violates a limit are marked infeasible, never zeroed.
template <typename Scalar>
EfficiencyMap<Scalar> build_efficiency_map(const FluxMap<Scalar>& map,
                                           const MachineParams<Scalar>& mp,
                                           const OperatingConditions<Scalar>& cond,
                                           const LossModelConfig<Scalar>& cfg,
                                           const Eigen::VectorX<Scalar>& speed_grid,
                                           const Eigen::VectorX<Scalar>& torque_grid,
                                           const SolverSettings<Scalar>& s,
                                           unsigned workers = 1) {
  s.validate();
  cfg.validate();
  auto check_ascending = [](const Eigen::VectorX<Scalar>& g, const char* name) {
    if (g.size() < 1) {
      throw Error(ErrorCode::BadRange, std::string(name) + " grid is empty");
    }
    for (Eigen::Index i = 0; i + 1 < g.size(); ++i) {
      if (!(g[i + 1] > g[i])) {
        throw Error(ErrorCode::BadRange, std::string(name) + " grid must be strictly ascending");
      }
    }
  };
  check_ascending(speed_grid, "speed");
  check_ascending(torque_grid, "torque");

  const Eigen::Index nt = torque_grid.size();
  const Eigen::Index ns = speed_grid.size();
  const Scalar nan = std::numeric_limits<Scalar>::quiet_NaN();

  EfficiencyMap<Scalar> em;
  em.speed_grid = speed_grid;
  em.torque_grid = torque_grid;
  em.eta.setConstant(nt, ns, nan);
  em.p_cu_dc.setConstant(nt, ns, nan);
  em.p_cu_ac.setConstant(nt, ns, nan);
  em.p_fe.setConstant(nt, ns, nan);
  em.p_fr.setConstant(nt, ns, nan);
  em.id_A.setConstant(nt, ns, nan);
  em.iq_A.setConstant(nt, ns, nan);
  em.feasible.setZero(nt, ns);

  run_jobs(static_cast<std::size_t>(nt * ns), workers, [&](std::size_t idx) {
    const Eigen::Index ti = static_cast<Eigen::Index>(idx) / ns;
    const Eigen::Index si = static_cast<Eigen::Index>(idx) % ns;
    const Scalar m_target = torque_grid[ti];
    const Scalar n = speed_grid[si];
    try {
      const CurrentPolar<Scalar> sp = field_weakening_setpoint(map, mp, cond, m_target, n, s);
      const DqValue<Scalar> i = dq_from_polar(sp);
      const LossBreakdown<Scalar> lb = loss_breakdown_at(map, mp, cond, cfg, i, n, m_target);
      em.eta(ti, si) = lb.eta;
      em.p_cu_dc(ti, si) = lb.p_cu_dc;
      em.p_cu_ac(ti, si) = lb.p_cu_ac;
      em.p_fe(ti, si) = lb.p_fe;
      em.p_fr(ti, si) = lb.p_fr;
      em.id_A(ti, si) = i.d;
      em.iq_A(ti, si) = i.q;
      em.feasible(ti, si) = 1;
    } catch (const Error&) {
      // cell stays marked infeasible
    }
  });
  return em;
}

}  // namespace motormap
