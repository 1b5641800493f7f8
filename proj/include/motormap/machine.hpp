#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>

#include "motormap/core.hpp"

namespace motormap {

// DC winding resistance data: R = l_c / (sigma_0 * A_c) * (1 + alpha * (T - t_ref)).
template <typename Scalar>
struct DcResistanceParams {
  Scalar sigma_0{};           // conductivity at reference temperature, S/m
  Scalar alpha{};             // temperature coefficient, 1/K
  Scalar t_ref{};             // reference temperature, K
  Scalar conductor_length{};  // total conductor length per phase, m
  Scalar conductor_area{};    // conductor cross-section, m^2
};

// AC resistance fit: R_ac = R_dc * (l_eff / l_c) * a * f^b.
template <typename Scalar>
struct AcResistanceParams {
  Scalar l_eff{};    // effective in-slot conductor length, m
  Scalar coeff_a{};  // fit coefficient
  Scalar exp_b{};    // fit exponent
};

template <typename Scalar>
struct MachineParams {
  int pole_pairs = 1;
  Scalar psi_pm{};      // permanent-magnet flux linkage, Vs
  Scalar l_d{};         // d-axis inductance, H (synthetic model / linear oracle only)
  Scalar l_q{};         // q-axis inductance, H
  Scalar l_sigma_ew{};  // end-winding stray inductance, H
  DcResistanceParams<Scalar> r_dc{};
  AcResistanceParams<Scalar> r_ac{};
  Scalar i_max{};  // maximum phase current amplitude, A
  Scalar u_dc{};   // DC-bus voltage, V

  void validate() const {
    if (pole_pairs < 1) {
      throw Error(ErrorCode::BadDomain, "pole_pairs must be >= 1");
    }
    if (!(i_max > Scalar(0)) || !(u_dc > Scalar(0))) {
      throw Error(ErrorCode::BadDomain, "i_max and u_dc must be positive");
    }
    if (!(r_dc.sigma_0 > Scalar(0)) || !(r_dc.conductor_length > Scalar(0)) ||
        !(r_dc.conductor_area > Scalar(0))) {
      throw Error(ErrorCode::BadDomain, "resistance geometry must be positive");
    }
    if (l_d < Scalar(0) || l_q < l_d) {
      throw Error(ErrorCode::BadDomain, "IPMSM configuration requires l_q >= l_d >= 0");
    }
    if (l_sigma_ew < Scalar(0)) {
      throw Error(ErrorCode::BadDomain, "l_sigma_ew must be >= 0");
    }
  }
};

// A value in the rotor-fixed dq frame. Units depend on context
// (A for currents, Vs for flux linkages, V for voltages).
template <typename Scalar>
struct DqValue {
  Scalar d{};
  Scalar q{};

  Eigen::Matrix<Scalar, 2, 1> vec() const { return {d, q}; }
};

// Current phasor as amplitude and angle from the d-axis, beta in [0, 2*pi).
template <typename Scalar>
struct CurrentPolar {
  Scalar amplitude{};
  Scalar beta{};
};

// Per-phase flux-linkage waveforms over electrical angle (degrees).
template <typename Scalar>
struct PhaseWaveforms {
  Eigen::VectorX<Scalar> angles_deg;
  Eigen::VectorX<Scalar> psi_a;
  Eigen::VectorX<Scalar> psi_b;
  Eigen::VectorX<Scalar> psi_c;

  Eigen::Index size() const { return angles_deg.size(); }

  void validate() const {
    const Eigen::Index n = angles_deg.size();
    if (n < 2) {
      throw Error(ErrorCode::BadDomain, "waveforms need at least 2 samples");
    }
    if (psi_a.size() != n || psi_b.size() != n || psi_c.size() != n) {
      throw Error(ErrorCode::BadDomain, "phase sequences must match the angle sequence length");
    }
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      if (!(angles_deg[i + 1] > angles_deg[i])) {
        throw Error(ErrorCode::BadDomain, "angles must be strictly ascending");
      }
    }
  }
};

// Park decomposition of a current phasor: (d, q) = (cos(beta), sin(beta)) * amplitude.
template <typename Scalar>
DqValue<Scalar> dq_from_polar(const CurrentPolar<Scalar>& c) {
  return {c.amplitude * std::cos(c.beta), c.amplitude * std::sin(c.beta)};
}

// Inverse of dq_from_polar; the zero vector maps to amplitude 0 with beta 0.
template <typename Scalar>
CurrentPolar<Scalar> polar_from_dq(const DqValue<Scalar>& v) {
  const Scalar amplitude = std::hypot(v.d, v.q);
  if (amplitude == Scalar(0)) {
    return {Scalar(0), Scalar(0)};
  }
  return {amplitude, normalize_angle(std::atan2(v.q, v.d))};
}

// Amplitude-invariant Park transform of instantaneous phase values (a, b, c)
// at the given rotor electrical angle: a balanced three-phase set of
// amplitude X maps to a dq vector of magnitude X.
template <typename Scalar>
DqValue<Scalar> park_transform(const Eigen::Matrix<Scalar, 3, 1>& phase_values,
                               Scalar electrical_angle) {
  const Scalar shift = two_pi<Scalar>() / Scalar(3);
  DqValue<Scalar> out{};
  for (int k = 0; k < 3; ++k) {
    const Scalar theta = electrical_angle - Scalar(k) * shift;
    out.d += phase_values[k] * std::cos(theta);
    out.q -= phase_values[k] * std::sin(theta);
  }
  const Scalar scale = Scalar(2) / Scalar(3);
  out.d *= scale;
  out.q *= scale;
  return out;
}

// Electrical angular frequency omega_el = 2*pi*n*p for mechanical speed n (1/s).
template <typename Scalar>
Scalar electrical_frequency(Scalar speed_n, int pole_pairs) {
  if (pole_pairs < 1) {
    throw Error(ErrorCode::BadDomain, "pole_pairs must be >= 1");
  }
  return two_pi<Scalar>() * speed_n * Scalar(pole_pairs);
}

// Electrical frequency in Hz: f_el = n*p.
template <typename Scalar>
Scalar electrical_frequency_hz(Scalar speed_n, int pole_pairs) {
  if (pole_pairs < 1) {
    throw Error(ErrorCode::BadDomain, "pole_pairs must be >= 1");
  }
  return speed_n * Scalar(pole_pairs);
}

// Mechanical rotation span gamma_m = gamma_el / p (degrees).
template <typename Scalar>
Scalar mechanical_rotation_span(Scalar gamma_el_deg, int pole_pairs) {
  if (pole_pairs < 1) {
    throw Error(ErrorCode::BadDomain, "pole_pairs must be >= 1");
  }
  if (!(gamma_el_deg > Scalar(0))) {
    throw Error(ErrorCode::BadDomain, "gamma_el must be positive");
  }
  return gamma_el_deg / Scalar(pole_pairs);
}

// Rebuilds one full electrical period [0, 360) deg from phase waveforms
// covering [0, 60] deg on a uniform step.
//
// Segment k in {1..5} takes its values 60*k degrees earlier, with phases
// permuted forward (a<-b, b<-c, c<-a per segment) and the sign flipped on
// odd segments. The output therefore satisfies psi_x(g + 180) = -psi_x(g)
// structurally at every grid point. The input sample at exactly 60 deg is
// redundant (it equals -psi_b(0) for physically consistent data) and is
// rebuilt by the rule rather than copied.
template <typename Scalar>
PhaseWaveforms<Scalar> reconstruct_full_period(const PhaseWaveforms<Scalar>& sixth) {
  sixth.validate();
  const Eigen::Index n = sixth.size();
  const Eigen::Index m = n - 1;  // number of intervals

  const Scalar span_tol = Scalar(1e-9) * Scalar(60);
  if (std::abs(sixth.angles_deg[0]) > span_tol ||
      std::abs(sixth.angles_deg[n - 1] - Scalar(60)) > span_tol) {
    throw Error(ErrorCode::BadSpan, "input must span exactly [0, 60] degrees electrical");
  }
  const Scalar step = Scalar(60) / Scalar(m);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    if (std::abs((sixth.angles_deg[i + 1] - sixth.angles_deg[i]) - step) > span_tol) {
      throw Error(ErrorCode::NonUniformGrid, "angle step must be uniform");
    }
  }

  const Eigen::Index out_n = 6 * m;
  PhaseWaveforms<Scalar> full;
  full.angles_deg.resize(out_n);
  full.psi_a.resize(out_n);
  full.psi_b.resize(out_n);
  full.psi_c.resize(out_n);

  const Eigen::VectorX<Scalar>* phases[3] = {&sixth.psi_a, &sixth.psi_b, &sixth.psi_c};
  Eigen::VectorX<Scalar>* out[3] = {&full.psi_a, &full.psi_b, &full.psi_c};

  for (Eigen::Index j = 0; j < out_n; ++j) {
    full.angles_deg[j] = Scalar(j) * step;
    const Eigen::Index k = j / m;
    const Eigen::Index r = j % m;
    const Scalar sign = (k % 2 == 0) ? Scalar(1) : Scalar(-1);
    for (int x = 0; x < 3; ++x) {
      const int source = static_cast<int>((x + k) % 3);
      (*out[x])[j] = (k == 0) ? (*phases[x])[r] : sign * (*phases[source])[r];
    }
  }
  return full;
}

}  // namespace motormap
