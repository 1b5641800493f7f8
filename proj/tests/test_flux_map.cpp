#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "motormap/flux_map.hpp"
#include "support/oracles.hpp"
#include "support/reference_machine.hpp"

using namespace motormap;

namespace {

std::vector<FluxSample<double>> square_samples() {
  return {{0.0, 0.0, 0.1, 0.0},
          {0.0, 100.0, 0.1, 0.02},
          {-100.0, 0.0, 0.08, 0.0},
          {-100.0, 100.0, 0.08, 0.02}};
}

}  // namespace

TEST_CASE("build_from_samples accepts a minimal grid in any row order") {
  const auto map = build_from_samples(square_samples());
  CHECK(map.id_grid().size() == 2);
  CHECK(map.iq_grid().size() == 2);
  CHECK(map.source() == FluxMap<double>::Source::External);
  CHECK(map.psi_d()(0, 0) == 0.08);  // id = -100, iq = 0
  CHECK(map.psi_q()(1, 1) == 0.02);  // id = 0, iq = 100

  auto shuffled = square_samples();
  std::mt19937 rng(3);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto map2 = build_from_samples(shuffled);
  CHECK(map2.psi_d() == map.psi_d());
  CHECK(map2.psi_q() == map.psi_q());
  CHECK(map2.id_grid() == map.id_grid());
}

TEST_CASE("build_from_samples diagnoses malformed input") {
  auto missing = square_samples();
  missing.pop_back();
  try {
    build_from_samples(missing);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IncompleteGrid);
  }

  auto duplicated = square_samples();
  duplicated.push_back(duplicated.front());
  try {
    build_from_samples(duplicated);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DuplicatePoint);
  }

  auto nonfinite = square_samples();
  nonfinite[1].psi_d = std::nan("");
  try {
    build_from_samples(nonfinite);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteValue);
  }
}

TEST_CASE("interpolation is exact at nodes and bilinear inside cells") {
  const auto map = build_from_samples(square_samples());
  for (Eigen::Index i = 0; i < map.id_grid().size(); ++i) {
    for (Eigen::Index j = 0; j < map.iq_grid().size(); ++j) {
      const auto v = interpolate(map, DqValue<double>{map.id_grid()[i], map.iq_grid()[j]});
      CHECK(v.d == map.psi_d()(i, j));
      CHECK(v.q == map.psi_q()(i, j));
    }
  }
  const auto center = interpolate(map, DqValue<double>{-50.0, 50.0});
  CHECK(center.d == doctest::Approx(0.09).epsilon(1e-14));
  CHECK(center.q == doctest::Approx(0.01).epsilon(1e-14));
}

TEST_CASE("interpolation reports the violated axis, no extrapolation") {
  const auto map = build_from_samples(square_samples());
  try {
    interpolate(map, DqValue<double>{-150.0, 50.0});
    CHECK(false);
  } catch (const OutOfRangeError& e) {
    CHECK(e.axis() == "id");
    CHECK(e.lower() == -100.0);
    CHECK(e.value() == -150.0);
  }
  try {
    interpolate(map, DqValue<double>{-50.0, 100.5});
    CHECK(false);
  } catch (const OutOfRangeError& e) {
    CHECK(e.axis() == "iq");
    CHECK(e.upper() == 100.0);
  }
  CHECK_THROWS_AS(interpolate(map, DqValue<double>{std::nan(""), 50.0}), OutOfRangeError);
  CHECK_THROWS_AS(interpolate(map, DqValue<double>{-50.0, std::nan("")}), OutOfRangeError);
}

TEST_CASE("interpolation reproduces node values exactly on a synthetic map") {
  const auto map = synthetic_flux_map(testsupport::saturated_synthetic(), -400.0, 0.0, 0.0, 400.0,
                                      13, 17);
  for (Eigen::Index i = 0; i < map.id_grid().size(); ++i) {
    for (Eigen::Index j = 0; j < map.iq_grid().size(); ++j) {
      const auto v = interpolate(map, DqValue<double>{map.id_grid()[i], map.iq_grid()[j]});
      CHECK(v.d == map.psi_d()(i, j));
      CHECK(v.q == map.psi_q()(i, j));
    }
  }
}

TEST_CASE("complete_by_symmetry mirrors psi_d even and psi_q odd") {
  const auto half = build_from_samples(square_samples());
  std::vector<std::string> warnings;
  const auto full = complete_by_symmetry(half, &warnings);
  CHECK(full.completed_by_symmetry());
  CHECK(full.iq_grid().size() == 3);
  CHECK(full.iq_grid()[0] == -100.0);
  CHECK(full.iq_grid()[1] == 0.0);

  // mirrored column equals the source column with psi_q negated, exactly
  for (Eigen::Index i = 0; i < full.id_grid().size(); ++i) {
    CHECK(full.psi_d()(i, 0) == full.psi_d()(i, 2));
    CHECK(full.psi_q()(i, 0) == -full.psi_q()(i, 2));
  }
  CHECK(warnings.empty());  // psi_q at iq = 0 is zero here
}

TEST_CASE("complete_by_symmetry warns when psi_q at iq=0 is not odd-consistent") {
  auto rows = square_samples();
  rows[0].psi_q = 5e-3;  // (0, 0)
  const auto half = build_from_samples(rows);
  std::vector<std::string> warnings;
  const auto full = complete_by_symmetry(half, &warnings);
  REQUIRE(warnings.size() == 1);
  // value kept, not zeroed
  CHECK(full.psi_q()(1, 1) == 5e-3);
}

TEST_CASE("complete_by_symmetry is idempotent and validates its domain") {
  const auto half = build_from_samples(square_samples());
  const auto once = complete_by_symmetry(half);
  const auto twice = complete_by_symmetry(once);
  CHECK(twice.iq_grid() == once.iq_grid());
  CHECK(twice.psi_d() == once.psi_d());
  CHECK(twice.psi_q() == once.psi_q());

  auto shifted = square_samples();
  for (auto& r : shifted) {
    r.iq -= 50.0;  // iq grid now starts below zero
  }
  try {
    complete_by_symmetry(build_from_samples(shifted));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BadDomain);
  }
}

TEST_CASE("synthetic map: zero current point reduces to the magnet flux") {
  SyntheticModelParams<double> p = SyntheticModelParams<double>::linear(0.1, 0.2e-3, 0.5e-3);
  const auto flux = synthetic_flux(p, DqValue<double>{0.0, 0.0});
  CHECK(flux.d == 0.1);
  CHECK(flux.q == 0.0);
}

TEST_CASE("synthetic map linear regime matches the closed form") {
  SyntheticModelParams<double> p = SyntheticModelParams<double>::linear(0.1, 0.2e-3, 0.5e-3);
  CHECK(synthetic_flux(p, DqValue<double>{0.0, 100.0}).q == doctest::Approx(0.05).epsilon(1e-14));

  const auto map = synthetic_flux_map(p, -400.0, 0.0, 0.0, 400.0, 21, 21);
  for (Eigen::Index i = 0; i < map.id_grid().size(); ++i) {
    for (Eigen::Index j = 0; j < map.iq_grid().size(); ++j) {
      const double psid = 0.1 + 0.2e-3 * map.id_grid()[i];
      const double psiq = 0.5e-3 * map.iq_grid()[j];
      CHECK(map.psi_d()(i, j) == doctest::Approx(psid).epsilon(1e-14));
      CHECK(map.psi_q()(i, j) == doctest::Approx(psiq).epsilon(1e-14));
    }
  }
}

TEST_CASE("synthetic saturation keeps psi_q / iq non-increasing in |iq|") {
  const auto map = synthetic_flux_map(testsupport::saturated_synthetic(), -400.0, 0.0, 0.0, 400.0,
                                      9, 41);
  for (Eigen::Index i = 0; i < map.id_grid().size(); ++i) {
    double prev = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 1; j < map.iq_grid().size(); ++j) {
      const double ratio = map.psi_q()(i, j) / map.iq_grid()[j];
      CHECK(ratio <= prev + 1e-15);
      prev = ratio;
    }
  }
}

TEST_CASE("bilinear interpolation error halves at second order on grid refinement") {
  const auto params = testsupport::saturated_synthetic();
  std::vector<double> steps, errors;
  for (const Eigen::Index n : {9, 17, 33, 65}) {
    const auto map = synthetic_flux_map(params, -400.0, -10.0, 10.0, 400.0, n, n);
    double err = 0.0;
    const int probes = 50;
    for (int a = 1; a < probes; ++a) {
      for (int b = 1; b < probes; ++b) {
        const DqValue<double> i{-400.0 + 390.0 * a / probes, 10.0 + 390.0 * b / probes};
        const auto approx = interpolate(map, i);
        const auto exact = synthetic_flux(params, i);
        err = std::max(err, std::abs(approx.d - exact.d));
        err = std::max(err, std::abs(approx.q - exact.q));
      }
    }
    steps.push_back(390.0 / static_cast<double>(n - 1));
    errors.push_back(err);
  }
  const double order = testsupport::log_log_slope(steps, errors);
  CHECK(order >= 1.9);
}

TEST_CASE("skew_average with a single slice or zero angle is plain interpolation") {
  const auto map = testsupport::reference_map();
  const CurrentPolar<double> c{200.0, 2.0};
  const auto plain = interpolate(map, dq_from_polar(c));

  const auto one = skew_average(map, SkewSpec<double>{1, deg_to_rad(10.0)}, c);
  CHECK(one.d == plain.d);
  CHECK(one.q == plain.q);

  const auto zero = skew_average(map, SkewSpec<double>{5, 0.0}, c);
  CHECK(zero.d == doctest::Approx(plain.d).epsilon(1e-14));
  CHECK(zero.q == doctest::Approx(plain.q).epsilon(1e-14));
}

TEST_CASE("skew_average matches the closed-form three-slice mean on a linear map") {
  const auto params = testsupport::linear_synthetic();
  const auto map = synthetic_flux_map(params, -450.0, 50.0, -100.0, 450.0, 101, 111);
  const SkewSpec<double> skew{3, deg_to_rad(10.0)};  // slices at -5, 0, +5 deg
  const CurrentPolar<double> base{250.0, deg_to_rad(120.0)};

  DqValue<double> expected{};
  for (const double delta : skew.offsets()) {
    const DqValue<double> i = dq_from_polar(CurrentPolar<double>{base.amplitude, base.beta + delta});
    const DqValue<double> flux = synthetic_flux(params, i);
    expected.d += std::cos(delta) * flux.d + std::sin(delta) * flux.q;
    expected.q += -std::sin(delta) * flux.d + std::cos(delta) * flux.q;
  }
  expected.d /= 3.0;
  expected.q /= 3.0;

  const auto got = skew_average(map, skew, base);
  CHECK(got.d == doctest::Approx(expected.d).epsilon(1e-12));
  CHECK(got.q == doctest::Approx(expected.q).epsilon(1e-12));
}

TEST_CASE("skew_average is invariant under slice order reversal") {
  const auto map = testsupport::reference_map(false);
  const SkewSpec<double> skew{5, deg_to_rad(8.0)};
  const CurrentPolar<double> base{300.0, deg_to_rad(115.0)};
  const auto forward = skew_average(map, skew, base);

  auto offsets = skew.offsets();
  std::reverse(offsets.begin(), offsets.end());
  DqValue<double> sum{};
  for (const double delta : offsets) {
    const auto flux = interpolate(map, dq_from_polar(CurrentPolar<double>{base.amplitude,
                                                                          base.beta + delta}));
    sum.d += std::cos(delta) * flux.d + std::sin(delta) * flux.q;
    sum.q += -std::sin(delta) * flux.d + std::cos(delta) * flux.q;
  }
  CHECK(forward.d == doctest::Approx(sum.d / 5.0).epsilon(1e-13));
  CHECK(forward.q == doctest::Approx(sum.q / 5.0).epsilon(1e-13));
}

TEST_CASE("skew_average reports the failing slice on out-of-range queries") {
  const auto map = synthetic_flux_map(testsupport::linear_synthetic(), -400.0, 0.0, 0.0, 400.0,
                                      11, 11);
  const SkewSpec<double> skew{3, deg_to_rad(20.0)};
  // base at beta = pi/2: the -10 deg slice asks for positive Id
  try {
    skew_average(map, skew, CurrentPolar<double>{200.0, kPi / 2.0});
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OutOfRange);
    CHECK(std::string(e.what()).find("slice 0") != std::string::npos);
  }
}
