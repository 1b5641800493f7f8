#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace motormap {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kGravity = 9.81;  // m/s^2

template <typename Scalar>
constexpr Scalar pi() {
  return static_cast<Scalar>(kPi);
}

template <typename Scalar>
constexpr Scalar two_pi() {
  return static_cast<Scalar>(kTwoPi);
}

template <typename Scalar>
constexpr Scalar deg_to_rad(Scalar deg) {
  return deg * pi<Scalar>() / Scalar(180);
}

template <typename Scalar>
constexpr Scalar rad_to_deg(Scalar rad) {
  return rad * Scalar(180) / pi<Scalar>();
}

// Wraps an angle into [0, 2*pi).
template <typename Scalar>
Scalar normalize_angle(Scalar rad) {
  Scalar x = std::fmod(rad, two_pi<Scalar>());
  if (x < Scalar(0)) {
    x += two_pi<Scalar>();
  }
  if (x >= two_pi<Scalar>()) {
    x = Scalar(0);
  }
  return x;
}

enum class ErrorCode {
  IncompleteGrid,
  DuplicatePoint,
  NonFiniteValue,
  OutOfRange,
  BadDomain,
  NonUniformGrid,
  BadSpan,
  TorqueUnreachable,
  InfeasibleAtSpeed,
  NonPhysical,
  BadExponent,
  TooFewSamples,
  NonMonotonicTime,
  NegativeSpeed,
  BadRange,
  BadConfig,
  JobFailed,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::IncompleteGrid: return "IncompleteGrid";
    case ErrorCode::DuplicatePoint: return "DuplicatePoint";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::BadDomain: return "BadDomain";
    case ErrorCode::NonUniformGrid: return "NonUniformGrid";
    case ErrorCode::BadSpan: return "BadSpan";
    case ErrorCode::TorqueUnreachable: return "TorqueUnreachable";
    case ErrorCode::InfeasibleAtSpeed: return "InfeasibleAtSpeed";
    case ErrorCode::NonPhysical: return "NonPhysical";
    case ErrorCode::BadExponent: return "BadExponent";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::NegativeSpeed: return "NegativeSpeed";
    case ErrorCode::BadRange: return "BadRange";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::JobFailed: return "JobFailed";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Out-of-range LUT query; carries the violated axis and its bounds.
class OutOfRangeError : public Error {
 public:
  OutOfRangeError(std::string axis, double value, double lower, double upper)
      : Error(ErrorCode::OutOfRange,
              "axis '" + axis + "' value " + std::to_string(value) + " outside [" +
                  std::to_string(lower) + ", " + std::to_string(upper) + "]"),
        axis_(std::move(axis)),
        value_(value),
        lower_(lower),
        upper_(upper) {}

  const std::string& axis() const noexcept { return axis_; }
  double value() const noexcept { return value_; }
  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }

 private:
  std::string axis_;
  double value_;
  double lower_;
  double upper_;
};

// Torque demand that cannot be met at a given speed under both limits.
// Carries the maximum torque that is feasible at that speed.
class InfeasibleAtSpeedError : public Error {
 public:
  InfeasibleAtSpeedError(double speed_n, double max_feasible_torque)
      : Error(ErrorCode::InfeasibleAtSpeed,
              "demand infeasible at n=" + std::to_string(speed_n) +
                  " 1/s; max feasible torque " + std::to_string(max_feasible_torque) + " Nm"),
        speed_n_(speed_n),
        max_feasible_torque_(max_feasible_torque) {}

  double speed_n() const noexcept { return speed_n_; }
  double max_feasible_torque() const noexcept { return max_feasible_torque_; }

 private:
  double speed_n_;
  double max_feasible_torque_;
};

}  // namespace motormap
