#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "motormap/core.hpp"
#include "motormap/flux_map.hpp"
#include "motormap/losses.hpp"
#include "motormap/machine.hpp"

namespace motormap {

enum class LimitBinding { None, Current, Voltage, Both };

template <typename Scalar>
struct OperatingPoint {
  DqValue<Scalar> current;       // A
  Scalar speed_n{};              // 1/s
  Scalar torque{};               // Nm
  DqValue<Scalar> voltage;       // V
  Scalar voltage_amplitude{};    // V
  bool feasible = false;
  LimitBinding limit_binding = LimitBinding::None;
};

template <typename Scalar>
struct SolverSettings {
  int beta_grid_points = 64;
  Scalar refine_tolerance = Scalar(1e-4);   // relative torque tolerance
  Scalar voltage_tolerance = Scalar(1e-6);  // V
  int max_iterations = 100;

  void validate() const {
    if (beta_grid_points < 8) {
      throw Error(ErrorCode::BadDomain, "beta_grid_points must be >= 8");
    }
    if (!(refine_tolerance > Scalar(0)) || !(voltage_tolerance > Scalar(0))) {
      throw Error(ErrorCode::BadDomain, "tolerances must be positive");
    }
    if (max_iterations < 1) {
      throw Error(ErrorCode::BadDomain, "max_iterations must be >= 1");
    }
  }
};

enum class ResistanceModel { Dc, DcPlusAc };

// Evaluation context for the voltage model: winding temperature, which
// resistance enters the stator voltage equations, and the modulation
// factor of the phase-voltage limit (default 2/pi).
template <typename Scalar>
struct OperatingConditions {
  Scalar winding_temperature = Scalar(293.15);  // K
  ResistanceModel resistance_model = ResistanceModel::DcPlusAc;
  Scalar voltage_limit_factor = Scalar(2) / pi<Scalar>();
};

// Phase-voltage amplitude limit from the DC-bus voltage.
template <typename Scalar>
Scalar voltage_limit(Scalar u_dc) {
  if (!(u_dc > Scalar(0))) {
    throw Error(ErrorCode::BadDomain, "u_dc must be positive");
  }
  return Scalar(2) / pi<Scalar>() * u_dc;
}

template <typename Scalar>
Scalar voltage_limit(Scalar u_dc, const OperatingConditions<Scalar>& cond) {
  if (!(u_dc > Scalar(0))) {
    throw Error(ErrorCode::BadDomain, "u_dc must be positive");
  }
  return cond.voltage_limit_factor * u_dc;
}

// Electromagnetic torque M = (3p/2) * (psi_d*iq - psi_q*id) via the LUT.
template <typename Scalar>
Scalar torque(const FluxMap<Scalar>& map, const DqValue<Scalar>& i, int pole_pairs) {
  const DqValue<Scalar> psi = interpolate(map, i);
  return Scalar(1.5) * Scalar(pole_pairs) * (psi.d * i.q - psi.q * i.d);
}

// Phase resistance entering the voltage equations at electrical frequency f.
template <typename Scalar>
Scalar phase_resistance(const MachineParams<Scalar>& mp, const OperatingConditions<Scalar>& cond,
                        Scalar f_el) {
  const Scalar r_dc = dc_resistance(mp.r_dc, cond.winding_temperature);
  if (cond.resistance_model == ResistanceModel::Dc) {
    return r_dc;
  }
  return r_dc + ac_resistance(mp.r_ac, mp.r_dc, r_dc, f_el);
}

template <typename Scalar>
struct VoltagePhasor {
  DqValue<Scalar> uv;
  Scalar amplitude{};
};

// Steady-state stator voltage:
//   Ud = Rs*Id - w*(psi_q + L_ew*Iq),  Uq = Rs*Iq + w*(psi_d + L_ew*Id).
template <typename Scalar>
VoltagePhasor<Scalar> stator_voltage(const FluxMap<Scalar>& map, const MachineParams<Scalar>& mp,
                                     const OperatingConditions<Scalar>& cond,
                                     const DqValue<Scalar>& i, Scalar n) {
  if (n < Scalar(0)) {
    throw Error(ErrorCode::BadDomain, "speed must be >= 0");
  }
  const DqValue<Scalar> psi = interpolate(map, i);
  const Scalar omega = electrical_frequency(n, mp.pole_pairs);
  const Scalar f_el = electrical_frequency_hz(n, mp.pole_pairs);
  const Scalar rs = phase_resistance(mp, cond, f_el);
  const Scalar ud = rs * i.d - omega * (psi.q + mp.l_sigma_ew * i.q);
  const Scalar uq = rs * i.q + omega * (psi.d + mp.l_sigma_ew * i.d);
  return {{ud, uq}, std::hypot(ud, uq)};
}

template <typename Scalar>
OperatingPoint<Scalar> evaluate_operating_point(const FluxMap<Scalar>& map,
                                                const MachineParams<Scalar>& mp,
                                                const OperatingConditions<Scalar>& cond,
                                                const DqValue<Scalar>& i, Scalar n,
                                                const SolverSettings<Scalar>& s) {
  OperatingPoint<Scalar> op;
  op.current = i;
  op.speed_n = n;
  op.torque = torque(map, i, mp.pole_pairs);
  const VoltagePhasor<Scalar> v = stator_voltage(map, mp, cond, i, n);
  op.voltage = v.uv;
  op.voltage_amplitude = v.amplitude;

  const Scalar amp = std::hypot(i.d, i.q);
  const Scalar u_lim = voltage_limit(mp.u_dc, cond);
  const bool current_ok = amp <= mp.i_max + mp.i_max * Scalar(1e-9);
  const bool volt_ok = v.amplitude <= u_lim + s.voltage_tolerance;
  op.feasible = current_ok && volt_ok;

  const bool current_binding = amp >= mp.i_max * (Scalar(1) - Scalar(1e-6));
  const bool voltage_binding = v.amplitude >= u_lim * (Scalar(1) - Scalar(1e-6));
  if (current_binding && voltage_binding) {
    op.limit_binding = LimitBinding::Both;
  } else if (current_binding) {
    op.limit_binding = LimitBinding::Current;
  } else if (voltage_binding) {
    op.limit_binding = LimitBinding::Voltage;
  }
  return op;
}

namespace detail {

// Current on the search ray at angle beta in [pi/2, pi]. cos(pi/2) rounds
// to a tiny positive value; clamp it so the d-component never leaves the
// Id <= 0 half-plane that characterization maps cover.
template <typename Scalar>
DqValue<Scalar> ray_current(Scalar amplitude, Scalar beta) {
  DqValue<Scalar> i = dq_from_polar(CurrentPolar<Scalar>{amplitude, beta});
  if (i.d > Scalar(0)) {
    i.d = Scalar(0);
  }
  return i;
}

// Golden-section maximization on [a, b]; on flat plateaus the bracket
// collapses toward the left edge so the smallest angle wins.
template <typename Scalar, typename F>
std::pair<Scalar, Scalar> golden_section_max(F&& f, Scalar a, Scalar b, int iterations) {
  const Scalar invphi = (std::sqrt(Scalar(5)) - Scalar(1)) / Scalar(2);
  Scalar x1 = b - invphi * (b - a);
  Scalar x2 = a + invphi * (b - a);
  Scalar f1 = f(x1);
  Scalar f2 = f(x2);
  for (int it = 0; it < iterations && (b - a) > Scalar(1e-13); ++it) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
  }
  const Scalar xm = (a + b) / Scalar(2);
  return {xm, f(xm)};
}

}  // namespace detail

template <typename Scalar>
struct MaxTorqueResult {
  Scalar torque{};
  Scalar beta{};
};

// Maximum torque over beta in [pi/2, pi] at a fixed current amplitude:
// coarse grid scan followed by golden-section refinement.
template <typename Scalar>
MaxTorqueResult<Scalar> max_torque_at_amplitude(const FluxMap<Scalar>& map, int pole_pairs,
                                                Scalar amplitude, const SolverSettings<Scalar>& s) {
  if (amplitude == Scalar(0)) {
    return {Scalar(0), pi<Scalar>() / Scalar(2)};
  }
  auto torque_at = [&](Scalar beta) {
    return torque(map, detail::ray_current(amplitude, beta), pole_pairs);
  };
  const int nb = s.beta_grid_points;
  const Scalar lo = pi<Scalar>() / Scalar(2);
  const Scalar hi = pi<Scalar>();
  Scalar best_beta = lo;
  Scalar best_torque = torque_at(lo);
  int best_index = 0;
  for (int j = 1; j < nb; ++j) {
    const Scalar beta = lo + (hi - lo) * Scalar(j) / Scalar(nb - 1);
    const Scalar m = torque_at(beta);
    if (m > best_torque) {
      best_torque = m;
      best_beta = beta;
      best_index = j;
    }
  }
  const Scalar a = lo + (hi - lo) * Scalar(std::max(0, best_index - 1)) / Scalar(nb - 1);
  const Scalar b = lo + (hi - lo) * Scalar(std::min(nb - 1, best_index + 1)) / Scalar(nb - 1);
  const auto [beta_ref, m_ref] = detail::golden_section_max(torque_at, a, b, 120);
  if (m_ref > best_torque) {
    return {m_ref, beta_ref};
  }
  return {best_torque, best_beta};
}

// Minimum-amplitude set-point for the target torque, with the current
// angle restricted to [pi/2, pi] (pi/2 is the non-salient boundary case).
// Negative targets are solved for |target| and mirrored in Iq.
template <typename Scalar>
CurrentPolar<Scalar> mtpa_setpoint(const FluxMap<Scalar>& map, const MachineParams<Scalar>& mp,
                                   Scalar torque_target, const SolverSettings<Scalar>& s) {
  s.validate();
  if (torque_target == Scalar(0)) {
    return {Scalar(0), pi<Scalar>() / Scalar(2)};
  }
  if (torque_target < Scalar(0)) {
    const CurrentPolar<Scalar> r = mtpa_setpoint(map, mp, -torque_target, s);
    return {r.amplitude, normalize_angle(two_pi<Scalar>() - r.beta)};
  }

  const MaxTorqueResult<Scalar> cap = max_torque_at_amplitude(map, mp.pole_pairs, mp.i_max, s);
  const Scalar tol = s.refine_tolerance * std::max(Scalar(1), torque_target);
  if (torque_target > cap.torque + tol) {
    throw Error(ErrorCode::TorqueUnreachable,
                "target " + std::to_string(torque_target) + " Nm exceeds capability " +
                    std::to_string(cap.torque) + " Nm at i_max");
  }
  if (torque_target >= cap.torque) {
    return {mp.i_max, cap.beta};
  }

  Scalar lo = Scalar(0);
  Scalar hi = mp.i_max;
  Scalar result_amp = mp.i_max;
  Scalar result_beta = cap.beta;
  for (int it = 0; it < s.max_iterations; ++it) {
    const Scalar mid = (lo + hi) / Scalar(2);
    const MaxTorqueResult<Scalar> m = max_torque_at_amplitude(map, mp.pole_pairs, mid, s);
    if (std::abs(m.torque - torque_target) <= Scalar(0.25) * tol) {
      return {mid, m.beta};
    }
    if (m.torque >= torque_target) {
      hi = mid;
      result_amp = mid;
      result_beta = m.beta;
    } else {
      lo = mid;
    }
    if (hi - lo <= Scalar(1e-14) * mp.i_max) {
      break;
    }
  }
  return {result_amp, result_beta};
}

namespace detail {

// Smallest amplitude on the ray at angle beta whose torque reaches the
// (positive) target; assumes the target is reachable at i_max.
template <typename Scalar>
Scalar contour_amplitude(const FluxMap<Scalar>& map, int pole_pairs, Scalar target, Scalar beta,
                         Scalar i_max, const SolverSettings<Scalar>& s) {
  auto torque_at = [&](Scalar amp) {
    return torque(map, ray_current(amp, beta), pole_pairs);
  };
  const Scalar tol = s.refine_tolerance * std::max(Scalar(1), target);
  Scalar lo = Scalar(0);
  Scalar hi = i_max;
  Scalar result = i_max;
  for (int it = 0; it < s.max_iterations; ++it) {
    const Scalar mid = (lo + hi) / Scalar(2);
    const Scalar m = torque_at(mid);
    if (std::abs(m - target) <= Scalar(0.25) * tol) {
      return mid;
    }
    if (m >= target) {
      hi = mid;
      result = mid;
    } else {
      lo = mid;
    }
    if (hi - lo <= Scalar(1e-14) * i_max) {
      break;
    }
  }
  return result;
}

// Field-weakening search; returns nullopt when the demand is infeasible at
// this speed (the caller fills in the max-feasible-torque payload).
template <typename Scalar>
std::optional<CurrentPolar<Scalar>> try_field_weakening(const FluxMap<Scalar>& map,
                                                        const MachineParams<Scalar>& mp,
                                                        const OperatingConditions<Scalar>& cond,
                                                        Scalar torque_target, Scalar n,
                                                        const SolverSettings<Scalar>& s) {
  const Scalar u_lim = voltage_limit(mp.u_dc, cond);
  const CurrentPolar<Scalar> mtpa = mtpa_setpoint(map, mp, torque_target, s);
  if (stator_voltage(map, mp, cond, dq_from_polar(mtpa), n).amplitude <=
      u_lim + s.voltage_tolerance) {
    return mtpa;
  }

  const bool mirror = torque_target < Scalar(0);
  const Scalar target = std::abs(torque_target);
  // The search runs in the upper quadrant (beta in [pi/2, pi]); for
  // negative targets the voltage is evaluated at the Iq-mirrored current.
  auto voltage_upper = [&](Scalar amp, Scalar beta) {
    DqValue<Scalar> i = ray_current(amp, beta);
    if (mirror) {
      i.q = -i.q;
    }
    return stator_voltage(map, mp, cond, i, n).amplitude;
  };
  auto result_of = [&](Scalar amp, Scalar beta_upper) {
    return CurrentPolar<Scalar>{
        amp, mirror ? normalize_angle(two_pi<Scalar>() - beta_upper) : beta_upper};
  };

  if (target == Scalar(0)) {
    // Zero torque: weaken along the negative d-axis.
    if (voltage_upper(mp.i_max, pi<Scalar>()) > u_lim + s.voltage_tolerance) {
      return std::nullopt;
    }
    Scalar lo = Scalar(0);
    Scalar hi = mp.i_max;
    for (int it = 0; it < s.max_iterations; ++it) {
      const Scalar mid = (lo + hi) / Scalar(2);
      if (voltage_upper(mid, pi<Scalar>()) <= u_lim + s.voltage_tolerance) {
        hi = mid;
      } else {
        lo = mid;
      }
      if (hi - lo <= Scalar(1e-12) * mp.i_max) {
        break;
      }
    }
    return result_of(hi, pi<Scalar>());
  }

  const Scalar beta0 =
      mirror ? normalize_angle(two_pi<Scalar>() - mtpa.beta) : mtpa.beta;
  auto torque_at_imax = [&](Scalar beta) {
    return torque(map, ray_current(mp.i_max, beta), mp.pole_pairs);
  };

  // Largest angle at which the torque contour still fits inside i_max.
  Scalar glo = beta0;
  Scalar ghi = pi<Scalar>();
  for (int it = 0; it < s.max_iterations; ++it) {
    const Scalar mid = (glo + ghi) / Scalar(2);
    if (torque_at_imax(mid) >= target) {
      glo = mid;
    } else {
      ghi = mid;
    }
    if (ghi - glo <= Scalar(1e-13)) {
      break;
    }
  }
  const Scalar beta_end = glo;
  const Scalar amp_end = contour_amplitude(map, mp.pole_pairs, target, beta_end, mp.i_max, s);
  if (voltage_upper(amp_end, beta_end) > u_lim + s.voltage_tolerance) {
    return std::nullopt;
  }

  // Voltage crossing along the torque contour between the (infeasible)
  // MTPA angle and the (feasible) contour end.
  Scalar blo = beta0;
  Scalar bhi = beta_end;
  Scalar amp_hi = amp_end;
  for (int it = 0; it < s.max_iterations; ++it) {
    const Scalar mid = (blo + bhi) / Scalar(2);
    const Scalar amp_mid = contour_amplitude(map, mp.pole_pairs, target, mid, mp.i_max, s);
    if (voltage_upper(amp_mid, mid) <= u_lim + s.voltage_tolerance) {
      bhi = mid;
      amp_hi = amp_mid;
    } else {
      blo = mid;
    }
    if (bhi - blo <= Scalar(1e-13)) {
      break;
    }
  }
  return result_of(amp_hi, bhi);
}

}  // namespace detail

// Maximum torque at speed n under both the current and the voltage limit.
// Returns 0 when not even the zero-torque point is voltage-feasible.
template <typename Scalar>
Scalar max_feasible_torque(const FluxMap<Scalar>& map, const MachineParams<Scalar>& mp,
                           const OperatingConditions<Scalar>& cond, Scalar n,
                           const SolverSettings<Scalar>& s) {
  s.validate();
  const MaxTorqueResult<Scalar> cap = max_torque_at_amplitude(map, mp.pole_pairs, mp.i_max, s);
  auto feasible = [&](Scalar tau) {
    return detail::try_field_weakening(map, mp, cond, tau, n, s).has_value();
  };
  if (feasible(cap.torque)) {
    return cap.torque;
  }
  if (!feasible(Scalar(0))) {
    return Scalar(0);
  }
  Scalar lo = Scalar(0);
  Scalar hi = cap.torque;
  for (int it = 0; it < s.max_iterations; ++it) {
    const Scalar mid = (lo + hi) / Scalar(2);
    if (feasible(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= s.refine_tolerance * std::max(Scalar(1), cap.torque)) {
      break;
    }
  }
  return lo;
}

// MTPA set-point if it is voltage-feasible at speed n, otherwise the
// minimum-amplitude point on the torque contour that satisfies the
// voltage limit (searched by increasing beta beyond the MTPA angle).
template <typename Scalar>
CurrentPolar<Scalar> field_weakening_setpoint(const FluxMap<Scalar>& map,
                                              const MachineParams<Scalar>& mp,
                                              const OperatingConditions<Scalar>& cond,
                                              Scalar torque_target, Scalar n,
                                              const SolverSettings<Scalar>& s) {
  s.validate();
  if (n < Scalar(0)) {
    throw Error(ErrorCode::BadDomain, "speed must be >= 0");
  }
  auto r = detail::try_field_weakening(map, mp, cond, torque_target, n, s);
  if (!r) {
    throw InfeasibleAtSpeedError(
        static_cast<double>(n),
        static_cast<double>(max_feasible_torque(map, mp, cond, n, s)));
  }
  return *r;
}

template <typename Scalar>
struct EnvelopePoint {
  Scalar speed_n{};
  Scalar max_torque{};
  bool feasible = true;
};

// Maximum torque versus speed under both limits.
template <typename Scalar>
std::vector<EnvelopePoint<Scalar>> capability_envelope(const FluxMap<Scalar>& map,
                                                       const MachineParams<Scalar>& mp,
                                                       const OperatingConditions<Scalar>& cond,
                                                       const std::vector<Scalar>& speeds,
                                                       const SolverSettings<Scalar>& s) {
  s.validate();
  for (std::size_t i = 0; i + 1 < speeds.size(); ++i) {
    if (!(speeds[i + 1] > speeds[i])) {
      throw Error(ErrorCode::BadRange, "speeds must be strictly ascending");
    }
  }
  std::vector<EnvelopePoint<Scalar>> out;
  out.reserve(speeds.size());
  for (const Scalar n : speeds) {
    if (!detail::try_field_weakening(map, mp, cond, Scalar(0), n, s).has_value()) {
      out.push_back({n, Scalar(0), false});
    } else {
      out.push_back({n, max_feasible_torque(map, mp, cond, n, s), true});
    }
  }
  return out;
}

}  // namespace motormap
