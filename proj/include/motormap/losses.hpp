#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <vector>

#include "motormap/core.hpp"
#include "motormap/machine.hpp"

namespace motormap {

// Bertotti coefficients; units must be chosen so the loss formula yields
// watts for flux densities in T and frequencies in Hz.
template <typename Scalar>
struct CoreLossCoefficients {
  Scalar k_h{};   // hysteresis
  Scalar k_c{};   // classical eddy currents
  Scalar k_e{};   // excess losses
  Scalar f_0{};   // reference frequency, Hz

  void validate() const {
    if (k_h < Scalar(0) || k_c < Scalar(0) || k_e < Scalar(0)) {
      throw Error(ErrorCode::BadDomain, "core loss coefficients must be >= 0");
    }
    if (!(f_0 > Scalar(0))) {
      throw Error(ErrorCode::BadDomain, "reference frequency must be positive");
    }
  }
};

template <typename Scalar>
struct FrictionCoefficients {
  Scalar k_r1{};  // W*s
  Scalar k_r2{};  // W*s^2
  Scalar k_r3{};  // W*s^3

  void validate() const {
    if (k_r1 < Scalar(0) || k_r2 < Scalar(0) || k_r3 < Scalar(0)) {
      throw Error(ErrorCode::BadDomain, "friction coefficients must be >= 0");
    }
  }
};

// Flux-density waveform of one core region, sampled uniformly over one
// reference period tau0 (the sample at t = tau0 is not stored; the
// sequence is treated as periodic).
template <typename Scalar>
struct WaveformSample {
  std::string region_id;
  Eigen::VectorX<Scalar> b_samples;  // T
  Scalar b_max{};                    // T
  Scalar tau0{};                     // period length, s

  static WaveformSample from_samples(std::string region_id, Eigen::VectorX<Scalar> samples,
                                     Scalar tau0) {
    WaveformSample w;
    w.region_id = std::move(region_id);
    w.b_max = samples.size() > 0 ? samples.cwiseAbs().maxCoeff() : Scalar(0);
    w.b_samples = std::move(samples);
    w.tau0 = tau0;
    w.validate();
    return w;
  }

  void validate() const {
    if (b_samples.size() < 8) {
      throw Error(ErrorCode::TooFewSamples, "waveform needs at least 8 samples per period");
    }
    if (!(tau0 > Scalar(0))) {
      throw Error(ErrorCode::BadDomain, "waveform period must be positive");
    }
    const Scalar observed = b_samples.cwiseAbs().maxCoeff();
    if (std::abs(observed - b_max) > Scalar(1e-12) * std::max(Scalar(1), observed)) {
      throw Error(ErrorCode::BadDomain, "b_max must equal max |b_samples|");
    }
  }
};

// Sinusoidal region waveform b(t) = b_peak * sin(2*pi*t/tau0) with
// tau0 = 1/f0, sampled at n points.
template <typename Scalar>
WaveformSample<Scalar> make_sinusoid_waveform(std::string region_id, Scalar b_peak, Scalar f0,
                                              Eigen::Index n_samples) {
  Eigen::VectorX<Scalar> b(n_samples);
  for (Eigen::Index j = 0; j < n_samples; ++j) {
    b[j] = b_peak * std::sin(two_pi<Scalar>() * Scalar(j) / Scalar(n_samples));
  }
  return WaveformSample<Scalar>::from_samples(std::move(region_id), std::move(b), Scalar(1) / f0);
}

enum class EfficiencyMarker { Normal, ZeroOutput, Stall, DefinedAsZero };

template <typename Scalar>
struct EfficiencyValue {
  Scalar eta{};
  EfficiencyMarker marker = EfficiencyMarker::Normal;
};

template <typename Scalar>
struct LossBreakdown {
  Scalar p_cu_dc{};
  Scalar p_cu_ac{};
  Scalar p_fe{};
  Scalar p_fr{};
  Scalar p_total{};
  Scalar eta{};
};

// DC phase resistance at winding temperature T, with the linear
// temperature correction around the reference temperature.
template <typename Scalar>
Scalar dc_resistance(const DcResistanceParams<Scalar>& p, Scalar temperature) {
  if (!(temperature > Scalar(0))) {
    throw Error(ErrorCode::BadDomain, "temperature must be positive (K)");
  }
  if (!(p.conductor_area > Scalar(0)) || !(p.sigma_0 > Scalar(0)) ||
      !(p.conductor_length > Scalar(0))) {
    throw Error(ErrorCode::BadDomain, "resistance geometry must be positive");
  }
  const Scalar r = p.conductor_length / (p.sigma_0 * p.conductor_area) *
                   (Scalar(1) + p.alpha * (temperature - p.t_ref));
  if (!(r > Scalar(0))) {
    throw Error(ErrorCode::NonPhysical,
                "non-positive resistance at T=" + std::to_string(temperature) + " K");
  }
  return r;
}

// Frequency-dependent resistance increase from current displacement and
// proximity effects, as a power-law fit on the in-slot conductor part.
template <typename Scalar>
Scalar ac_resistance(const AcResistanceParams<Scalar>& ac, const DcResistanceParams<Scalar>& dc,
                     Scalar r_dc, Scalar f) {
  if (ac.exp_b < Scalar(0)) {
    throw Error(ErrorCode::BadExponent, "AC resistance exponent must be >= 0");
  }
  if (f < Scalar(0)) {
    throw Error(ErrorCode::BadDomain, "frequency must be >= 0");
  }
  if (ac.coeff_a == Scalar(0)) {
    return Scalar(0);
  }
  return r_dc * (ac.l_eff / dc.conductor_length) * ac.coeff_a * std::pow(f, ac.exp_b);
}

// Centralized amplitude <-> RMS conversion for sinusoidal quantities.
template <typename Scalar>
Scalar rms_from_amplitude(Scalar amplitude) {
  return amplitude / std::sqrt(Scalar(2));
}

template <typename Scalar>
struct ConductionLoss {
  Scalar p_dc{};
  Scalar p_ac{};
};

// Three-phase conduction loss 3*(R_dc + R_ac)*I_rms^2 for a phase current
// of the given amplitude.
template <typename Scalar>
ConductionLoss<Scalar> conduction_loss(const DcResistanceParams<Scalar>& dc,
                                       const AcResistanceParams<Scalar>& ac, Scalar amplitude,
                                       Scalar temperature, Scalar f) {
  if (amplitude < Scalar(0)) {
    throw Error(ErrorCode::BadDomain, "current amplitude must be >= 0");
  }
  const Scalar r_dc = dc_resistance(dc, temperature);
  const Scalar r_ac = ac_resistance(ac, dc, r_dc, f);
  const Scalar i_rms = rms_from_amplitude(amplitude);
  const Scalar i_sq = i_rms * i_rms;
  return {Scalar(3) * r_dc * i_sq, Scalar(3) * r_ac * i_sq};
}

// Time average of |dB/dt|^alpha over one period, from uniform samples.
// The derivative uses fourth-order periodic central differences; the
// magnitude is taken before the fractional power so alpha = 1.5 stays
// defined on falling slopes.
template <typename Scalar>
Scalar bdot_alpha(const WaveformSample<Scalar>& w, Scalar alpha) {
  w.validate();
  if (alpha != Scalar(2) && alpha != Scalar(1.5)) {
    throw Error(ErrorCode::BadExponent, "alpha must be 2 or 1.5");
  }
  const Eigen::Index n = w.b_samples.size();
  const Scalar dt = w.tau0 / Scalar(n);
  const auto& b = w.b_samples;
  auto wrap = [n](Eigen::Index i) { return ((i % n) + n) % n; };

  Scalar acc = Scalar(0);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Scalar deriv = (Scalar(8) * (b[wrap(j + 1)] - b[wrap(j - 1)]) +
                          (b[wrap(j - 2)] - b[wrap(j + 2)])) /
                         (Scalar(12) * dt);
    acc += std::pow(std::abs(deriv), alpha);
  }
  return acc / Scalar(n);
}

// Bertotti core loss for one region at operating frequency f, with the
// waveform-shape integrals taken at the reference frequency f_0.
template <typename Scalar>
Scalar core_loss(const CoreLossCoefficients<Scalar>& c, const WaveformSample<Scalar>& w,
                 Scalar f) {
  c.validate();
  if (f < Scalar(0)) {
    throw Error(ErrorCode::BadDomain, "frequency must be >= 0");
  }
  if (f == Scalar(0)) {
    return Scalar(0);
  }
  constexpr Scalar kExcessNorm = Scalar(8.76);
  const Scalar ratio = f / c.f_0;
  const Scalar hysteresis = c.k_h * w.b_max * w.b_max * f;
  const Scalar eddy =
      c.k_c / (Scalar(2) * pi<Scalar>() * pi<Scalar>()) * bdot_alpha(w, Scalar(2)) * ratio * ratio;
  const Scalar excess =
      c.k_e / kExcessNorm * bdot_alpha(w, Scalar(1.5)) * std::pow(ratio, Scalar(1.5));
  return hysteresis + eddy + excess;
}

template <typename Scalar>
struct WeightedWaveform {
  WaveformSample<Scalar> waveform;
  Scalar weight = Scalar(1);  // region mass/volume factor
};

template <typename Scalar>
Scalar core_loss(const CoreLossCoefficients<Scalar>& c,
                 const std::vector<WeightedWaveform<Scalar>>& regions, Scalar f) {
  Scalar total = Scalar(0);
  for (const auto& r : regions) {
    total += r.weight * core_loss(c, r.waveform, f);
  }
  return total;
}

// Cubic friction model over mechanical frequency (Hz).
template <typename Scalar>
Scalar friction_loss(const FrictionCoefficients<Scalar>& c, Scalar f_mech) {
  c.validate();
  if (f_mech < Scalar(0)) {
    throw Error(ErrorCode::BadDomain, "mechanical frequency must be >= 0");
  }
  return c.k_r1 * f_mech + c.k_r2 * f_mech * f_mech + c.k_r3 * f_mech * f_mech * f_mech;
}

// Efficiency with separate motor/generator definitions under the passive
// sign convention. Conventions for the degenerate cases:
//   M = 0 with losses       -> 0 (ZeroOutput)
//   n = 0 with M != 0       -> 0 (Stall; all input dissipated)
//   generator with P_loss exceeding the recuperated power -> 0 (DefinedAsZero)
template <typename Scalar>
EfficiencyValue<Scalar> efficiency(Scalar n, Scalar torque, Scalar p_loss) {
  if (p_loss < Scalar(0)) {
    throw Error(ErrorCode::BadDomain, "p_loss must be >= 0");
  }
  if (torque == Scalar(0)) {
    if (p_loss > Scalar(0)) {
      return {Scalar(0), EfficiencyMarker::ZeroOutput};
    }
    return {Scalar(1), EfficiencyMarker::Normal};
  }
  if (n == Scalar(0)) {
    return {Scalar(0), EfficiencyMarker::Stall};
  }
  const Scalar p_mech = two_pi<Scalar>() * n * torque;
  if (torque > Scalar(0)) {
    return {p_mech / (p_mech + p_loss), EfficiencyMarker::Normal};
  }
  const Scalar eta = (p_mech + p_loss) / p_mech;
  if (eta < Scalar(0)) {
    return {Scalar(0), EfficiencyMarker::DefinedAsZero};
  }
  return {eta, EfficiencyMarker::Normal};
}

}  // namespace motormap
