#pragma once

#include <cmath>
#include <vector>

#include "motormap/drive_cycle.hpp"

// Deterministic speed profiles for drive-cycle tests.
namespace testsupport {

// 1800-point, 1 Hz urban stop-and-go profile: repeated blocks of
// acceleration, cruise, deceleration, and idle with varying cruise speeds.
inline motormap::DriveCycle<double> make_urban_cycle(int samples = 1800) {
  std::vector<motormap::CycleRow<double>> rows;
  rows.reserve(static_cast<std::size_t>(samples));
  const double cruise_speeds[] = {8.0, 12.0, 14.0, 10.0, 16.0, 6.0};  // m/s
  const int block = 300;  // s per stop-go block
  double v = 0.0;
  for (int t = 0; t < samples; ++t) {
    const int b = (t / block) % 6;
    const int phase = t % block;
    const double target = cruise_speeds[b];
    if (phase < 60) {
      v = std::min(target, v + 0.8);  // accelerate at 0.8 m/s^2
    } else if (phase < 200) {
      v = target;
    } else if (phase < 260) {
      v = std::max(0.0, v - 1.0);  // brake at 1 m/s^2
    } else {
      v = 0.0;  // idle
    }
    rows.push_back({static_cast<double>(t), v});
  }
  return motormap::load_cycle(rows);
}

// Symmetric triangle: accelerate to v_peak over `half` 1-s steps, then
// decelerate back to rest.
inline motormap::DriveCycle<double> make_triangle_cycle(double v_peak, int half) {
  std::vector<motormap::CycleRow<double>> rows;
  for (int t = 0; t <= 2 * half; ++t) {
    const double v = (t <= half)
                         ? v_peak * static_cast<double>(t) / static_cast<double>(half)
                         : v_peak * static_cast<double>(2 * half - t) / static_cast<double>(half);
    rows.push_back({static_cast<double>(t), v});
  }
  return motormap::load_cycle(rows);
}

}  // namespace testsupport
