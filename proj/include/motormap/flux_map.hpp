#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "motormap/core.hpp"
#include "motormap/machine.hpp"

namespace motormap {

template <typename Scalar>
struct FluxSample {
  Scalar id{};
  Scalar iq{};
  Scalar psi_d{};
  Scalar psi_q{};
};

// Rectangular lookup table of dq flux linkages over an (Id, Iq) grid.
// Immutable after construction; matrices are indexed (id index, iq index).
template <typename Scalar>
class FluxMap {
 public:
  using Vector = Eigen::VectorX<Scalar>;
  using Matrix = Eigen::MatrixX<Scalar>;

  enum class Source { External, Synthetic };

  FluxMap(Vector id_grid, Vector iq_grid, Matrix psi_d, Matrix psi_q, Source source,
          bool completed_by_symmetry = false)
      : id_grid_(std::move(id_grid)),
        iq_grid_(std::move(iq_grid)),
        psi_d_(std::move(psi_d)),
        psi_q_(std::move(psi_q)),
        source_(source),
        completed_by_symmetry_(completed_by_symmetry) {
    validate();
  }

  const Vector& id_grid() const { return id_grid_; }
  const Vector& iq_grid() const { return iq_grid_; }
  const Matrix& psi_d() const { return psi_d_; }
  const Matrix& psi_q() const { return psi_q_; }
  Source source() const { return source_; }
  bool completed_by_symmetry() const { return completed_by_symmetry_; }

  Scalar id_min() const { return id_grid_[0]; }
  Scalar id_max() const { return id_grid_[id_grid_.size() - 1]; }
  Scalar iq_min() const { return iq_grid_[0]; }
  Scalar iq_max() const { return iq_grid_[iq_grid_.size() - 1]; }

  bool contains(Scalar id, Scalar iq) const {
    return id >= id_min() && id <= id_max() && iq >= iq_min() && iq <= iq_max();
  }

 private:
  void validate() const {
    if (id_grid_.size() < 2 || iq_grid_.size() < 2) {
      throw Error(ErrorCode::BadDomain, "grids need at least 2 points per axis");
    }
    auto check_ascending = [](const Vector& g, const char* name) {
      for (Eigen::Index i = 0; i + 1 < g.size(); ++i) {
        if (!(g[i + 1] > g[i])) {
          throw Error(ErrorCode::BadDomain, std::string(name) + " grid must be strictly ascending");
        }
      }
    };
    check_ascending(id_grid_, "id");
    check_ascending(iq_grid_, "iq");
    if (psi_d_.rows() != id_grid_.size() || psi_d_.cols() != iq_grid_.size() ||
        psi_q_.rows() != id_grid_.size() || psi_q_.cols() != iq_grid_.size()) {
      throw Error(ErrorCode::BadDomain, "matrix dimensions must match the grids");
    }
    if (!psi_d_.allFinite() || !psi_q_.allFinite()) {
      throw Error(ErrorCode::NonFiniteValue, "flux map entries must be finite");
    }
    if (completed_by_symmetry_) {
      // psi_d even and psi_q odd in iq, exactly, at all mirrored pairs
      // (the iq = 0 column mirrors onto itself and keeps its stored values)
      const Eigen::Index nq = iq_grid_.size();
      for (Eigen::Index j = 0; 2 * j + 1 < nq; ++j) {
        const Eigen::Index jm = nq - 1 - j;
        if (iq_grid_[j] != -iq_grid_[jm]) {
          throw Error(ErrorCode::BadDomain, "completed map iq grid is not mirror-symmetric");
        }
        for (Eigen::Index i = 0; i < id_grid_.size(); ++i) {
          if (psi_d_(i, j) != psi_d_(i, jm) || psi_q_(i, j) != -psi_q_(i, jm)) {
            throw Error(ErrorCode::BadDomain,
                        "completed map violates the psi_d-even / psi_q-odd symmetry");
          }
        }
      }
    }
  }

  Vector id_grid_;
  Vector iq_grid_;
  Matrix psi_d_;
  Matrix psi_q_;
  Source source_;
  bool completed_by_symmetry_;
};

namespace detail {

// Index of the cell [g[i], g[i+1]] containing x; x must be inside the grid span.
template <typename Scalar>
Eigen::Index cell_index(const Eigen::VectorX<Scalar>& grid, Scalar x) {
  const Scalar* begin = grid.data();
  const Scalar* end = grid.data() + grid.size();
  Eigen::Index i = std::upper_bound(begin, end, x) - begin - 1;
  if (i < 0) i = 0;
  if (i > grid.size() - 2) i = grid.size() - 2;
  return i;
}

}  // namespace detail

// Ingests scattered (Id, Iq, psi_d, psi_q) rows that must cover a complete
// rectangular grid; row order is irrelevant.
template <typename Scalar>
FluxMap<Scalar> build_from_samples(const std::vector<FluxSample<Scalar>>& rows) {
  if (rows.empty()) {
    throw Error(ErrorCode::IncompleteGrid, "no samples given");
  }
  std::vector<Scalar> ids, iqs;
  ids.reserve(rows.size());
  iqs.reserve(rows.size());
  for (const auto& r : rows) {
    if (!std::isfinite(r.id) || !std::isfinite(r.iq) || !std::isfinite(r.psi_d) ||
        !std::isfinite(r.psi_q)) {
      throw Error(ErrorCode::NonFiniteValue, "sample contains a non-finite value");
    }
    ids.push_back(r.id);
    iqs.push_back(r.iq);
  }
  auto sort_unique = [](std::vector<Scalar>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  sort_unique(ids);
  sort_unique(iqs);
  if (ids.size() < 2 || iqs.size() < 2) {
    throw Error(ErrorCode::BadDomain, "samples must span at least 2 distinct values per axis");
  }

  const Eigen::Index nd = static_cast<Eigen::Index>(ids.size());
  const Eigen::Index nq = static_cast<Eigen::Index>(iqs.size());
  typename FluxMap<Scalar>::Matrix psi_d(nd, nq), psi_q(nd, nq);
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> seen =
      Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(nd, nq);

  auto index_of = [](const std::vector<Scalar>& grid, Scalar x) {
    return static_cast<Eigen::Index>(
        std::lower_bound(grid.begin(), grid.end(), x) - grid.begin());
  };
  for (const auto& r : rows) {
    const Eigen::Index i = index_of(ids, r.id);
    const Eigen::Index j = index_of(iqs, r.iq);
    if (seen(i, j)) {
      throw Error(ErrorCode::DuplicatePoint, "duplicate sample at (Id=" + std::to_string(r.id) +
                                                 ", Iq=" + std::to_string(r.iq) + ")");
    }
    seen(i, j) = 1;
    psi_d(i, j) = r.psi_d;
    psi_q(i, j) = r.psi_q;
  }
  for (Eigen::Index i = 0; i < nd; ++i) {
    for (Eigen::Index j = 0; j < nq; ++j) {
      if (!seen(i, j)) {
        throw Error(ErrorCode::IncompleteGrid,
                    "missing sample at (Id=" + std::to_string(ids[i]) +
                        ", Iq=" + std::to_string(iqs[j]) + ")");
      }
    }
  }

  typename FluxMap<Scalar>::Vector id_grid =
      Eigen::Map<const typename FluxMap<Scalar>::Vector>(ids.data(), nd);
  typename FluxMap<Scalar>::Vector iq_grid =
      Eigen::Map<const typename FluxMap<Scalar>::Vector>(iqs.data(), nq);
  return FluxMap<Scalar>(std::move(id_grid), std::move(iq_grid), std::move(psi_d),
                         std::move(psi_q), FluxMap<Scalar>::Source::External);
}

// Bilinear interpolation of both flux components; exact at grid nodes,
// no extrapolation (out-of-range queries are errors).
template <typename Scalar>
DqValue<Scalar> interpolate(const FluxMap<Scalar>& map, const DqValue<Scalar>& current) {
  // negated form so NaN queries also land here
  if (!(current.d >= map.id_min() && current.d <= map.id_max())) {
    throw OutOfRangeError("id", static_cast<double>(current.d),
                          static_cast<double>(map.id_min()),
                          static_cast<double>(map.id_max()));
  }
  if (!(current.q >= map.iq_min() && current.q <= map.iq_max())) {
    throw OutOfRangeError("iq", static_cast<double>(current.q),
                          static_cast<double>(map.iq_min()),
                          static_cast<double>(map.iq_max()));
  }
  const auto& gx = map.id_grid();
  const auto& gy = map.iq_grid();
  const Eigen::Index i = detail::cell_index(gx, current.d);
  const Eigen::Index j = detail::cell_index(gy, current.q);
  const Scalar tx = (current.d - gx[i]) / (gx[i + 1] - gx[i]);
  const Scalar ty = (current.q - gy[j]) / (gy[j + 1] - gy[j]);

  auto lerp2 = [&](const typename FluxMap<Scalar>::Matrix& m) {
    const Scalar lo = (Scalar(1) - tx) * m(i, j) + tx * m(i + 1, j);
    const Scalar hi = (Scalar(1) - tx) * m(i, j + 1) + tx * m(i + 1, j + 1);
    return (Scalar(1) - ty) * lo + ty * hi;
  };
  return {lerp2(map.psi_d()), lerp2(map.psi_q())};
}

// Mirrors a map covering Iq >= 0 onto the full Iq range using the d-axis
// symmetry of the flux linkage: psi_d even and psi_q odd in Iq. Stored
// psi_q values at Iq = 0 are kept as-is; a warning is emitted if they are
// not (numerically) zero. Idempotent on already-completed maps.
template <typename Scalar>
FluxMap<Scalar> complete_by_symmetry(const FluxMap<Scalar>& map,
                                     std::vector<std::string>* warnings = nullptr) {
  if (map.completed_by_symmetry()) {
    return map;
  }
  if (map.iq_min() < Scalar(0)) {
    throw Error(ErrorCode::BadDomain, "iq grid contains negative entries");
  }
  if (map.iq_min() != Scalar(0)) {
    throw Error(ErrorCode::BadDomain, "iq grid must start at 0");
  }

  const Eigen::Index nd = map.id_grid().size();
  const Eigen::Index nq = map.iq_grid().size();
  const Eigen::Index full_nq = 2 * nq - 1;

  typename FluxMap<Scalar>::Vector iq_full(full_nq);
  typename FluxMap<Scalar>::Matrix psi_d(nd, full_nq), psi_q(nd, full_nq);
  for (Eigen::Index j = 0; j < nq; ++j) {
    iq_full[nq - 1 + j] = map.iq_grid()[j];
    for (Eigen::Index i = 0; i < nd; ++i) {
      psi_d(i, nq - 1 + j) = map.psi_d()(i, j);
      psi_q(i, nq - 1 + j) = map.psi_q()(i, j);
    }
    if (j == 0) {
      continue;  // the iq = 0 column keeps its input values
    }
    iq_full[nq - 1 - j] = -map.iq_grid()[j];
    for (Eigen::Index i = 0; i < nd; ++i) {
      psi_d(i, nq - 1 - j) = map.psi_d()(i, j);
      psi_q(i, nq - 1 - j) = -map.psi_q()(i, j);
    }
  }

  if (warnings != nullptr) {
    const Scalar scale = std::max(Scalar(1), map.psi_q().cwiseAbs().maxCoeff());
    const Scalar worst = map.psi_q().col(0).cwiseAbs().maxCoeff();
    if (worst > Scalar(1e-9) * scale) {
      warnings->push_back("psi_q at Iq=0 is not zero (max |psi_q| = " + std::to_string(worst) +
                          " Vs); oddness in Iq is violated at the axis");
    }
  }

  return FluxMap<Scalar>(map.id_grid(), std::move(iq_full), std::move(psi_d), std::move(psi_q),
                         map.source(), true);
}

// Saturable stand-in for FE output. The incremental inductances decay with
// a rational law L(i) = L0 / (1 + (|i|/i_sat)^sat_exponent); infinite knee
// currents give the plain linear model.
template <typename Scalar>
struct SyntheticModelParams {
  Scalar psi_pm{};
  Scalar l_d0{};
  Scalar l_q0{};
  Scalar i_sat_d = std::numeric_limits<Scalar>::infinity();
  Scalar i_sat_q = std::numeric_limits<Scalar>::infinity();
  Scalar sat_exponent = Scalar(2);

  static SyntheticModelParams linear(Scalar psi_pm, Scalar l_d0, Scalar l_q0) {
    SyntheticModelParams p;
    p.psi_pm = psi_pm;
    p.l_d0 = l_d0;
    p.l_q0 = l_q0;
    return p;
  }

  void validate() const {
    if (!(l_d0 > Scalar(0)) || l_q0 < l_d0) {
      throw Error(ErrorCode::BadDomain, "require l_q0 >= l_d0 > 0");
    }
    if (!(i_sat_d > Scalar(0)) || !(i_sat_q > Scalar(0))) {
      throw Error(ErrorCode::BadDomain, "saturation knee currents must be positive");
    }
    if (sat_exponent < Scalar(1)) {
      throw Error(ErrorCode::BadDomain, "sat_exponent must be >= 1");
    }
  }
};

namespace detail {

template <typename Scalar>
Scalar saturated_inductance(Scalar l0, Scalar i, Scalar i_sat, Scalar exponent) {
  if (std::isinf(i_sat)) {
    return l0;
  }
  return l0 / (Scalar(1) + std::pow(std::abs(i) / i_sat, exponent));
}

}  // namespace detail

// Closed-form flux linkage of the synthetic model at an arbitrary current.
template <typename Scalar>
DqValue<Scalar> synthetic_flux(const SyntheticModelParams<Scalar>& p, const DqValue<Scalar>& i) {
  const Scalar ld = detail::saturated_inductance(p.l_d0, i.d, p.i_sat_d, p.sat_exponent);
  const Scalar lq = detail::saturated_inductance(p.l_q0, i.q, p.i_sat_q, p.sat_exponent);
  return {p.psi_pm + ld * i.d, lq * i.q};
}

// Samples the synthetic model on a uniform rectangular grid.
template <typename Scalar>
FluxMap<Scalar> synthetic_flux_map(const SyntheticModelParams<Scalar>& p, Scalar id_min,
                                   Scalar id_max, Scalar iq_min, Scalar iq_max,
                                   Eigen::Index n_id, Eigen::Index n_iq) {
  p.validate();
  if (n_id < 2 || n_iq < 2) {
    throw Error(ErrorCode::BadDomain, "need at least 2 points per axis");
  }
  if (!(id_max > id_min) || !(iq_max > iq_min)) {
    throw Error(ErrorCode::BadRange, "grid ranges must be non-empty");
  }
  typename FluxMap<Scalar>::Vector id_grid =
      Eigen::VectorX<Scalar>::LinSpaced(n_id, id_min, id_max);
  typename FluxMap<Scalar>::Vector iq_grid =
      Eigen::VectorX<Scalar>::LinSpaced(n_iq, iq_min, iq_max);
  typename FluxMap<Scalar>::Matrix psi_d(n_id, n_iq), psi_q(n_id, n_iq);
  for (Eigen::Index i = 0; i < n_id; ++i) {
    for (Eigen::Index j = 0; j < n_iq; ++j) {
      const DqValue<Scalar> flux = synthetic_flux(p, {id_grid[i], iq_grid[j]});
      psi_d(i, j) = flux.d;
      psi_q(i, j) = flux.q;
    }
  }
  return FluxMap<Scalar>(std::move(id_grid), std::move(iq_grid), std::move(psi_d),
                         std::move(psi_q), FluxMap<Scalar>::Source::Synthetic);
}

// Axial skew approximated by averaging shifted 2D evaluations.
template <typename Scalar>
struct SkewSpec {
  int n_slices = 1;
  Scalar total_skew_el = Scalar(0);  // electrical skew angle, rad

  void validate() const {
    if (n_slices < 1) {
      throw Error(ErrorCode::BadDomain, "n_slices must be >= 1");
    }
  }

  // Slice offsets spread uniformly over [-total/2, +total/2].
  std::vector<Scalar> offsets() const {
    validate();
    if (n_slices == 1) {
      return {Scalar(0)};
    }
    std::vector<Scalar> out(static_cast<std::size_t>(n_slices));
    for (int k = 0; k < n_slices; ++k) {
      out[static_cast<std::size_t>(k)] =
          total_skew_el * (Scalar(k) / Scalar(n_slices - 1) - Scalar(0.5));
    }
    return out;
  }
};

// Multi-slice evaluation of any flux source: each slice sees the current
// angle shifted by its offset, the resulting flux is rotated back, and the
// slices are averaged with equal weights.
template <typename Scalar, typename FluxFn>
DqValue<Scalar> skew_average_with(FluxFn&& flux_at, const SkewSpec<Scalar>& skew,
                                  const CurrentPolar<Scalar>& base) {
  const std::vector<Scalar> offsets = skew.offsets();
  DqValue<Scalar> sum{};
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    const Scalar delta = offsets[k];
    DqValue<Scalar> flux;
    try {
      flux = flux_at(CurrentPolar<Scalar>{base.amplitude, base.beta + delta});
    } catch (const OutOfRangeError& e) {
      throw Error(ErrorCode::OutOfRange,
                  "slice " + std::to_string(k) + ": " + std::string(e.what()));
    }
    const Scalar c = std::cos(delta);
    const Scalar s = std::sin(delta);
    sum.d += c * flux.d + s * flux.q;
    sum.q += -s * flux.d + c * flux.q;
  }
  const Scalar inv = Scalar(1) / Scalar(offsets.size());
  return {sum.d * inv, sum.q * inv};
}

template <typename Scalar>
DqValue<Scalar> skew_average(const FluxMap<Scalar>& map, const SkewSpec<Scalar>& skew,
                             const CurrentPolar<Scalar>& base) {
  return skew_average_with(
      [&map](const CurrentPolar<Scalar>& c) { return interpolate(map, dq_from_polar(c)); }, skew,
      base);
}

}  // namespace motormap
