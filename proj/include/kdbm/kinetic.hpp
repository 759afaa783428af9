#pragma once

// Kinetic Brownian motion (H, H') on the Hermitian matrices: the velocity H'
// is a Brownian motion on the unit Hilbert-Schmidt sphere and H integrates it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "kdbm/config.hpp"
#include "kdbm/errors.hpp"
#include "kdbm/hermitian.hpp"
#include "kdbm/noise.hpp"
#include "kdbm/path_record.hpp"

namespace kdbm {

template <int D>
struct KineticState {
  Hermitian<D> h;
  Hermitian<D> hdot;
  double t = 0.0;
};

/// Radial Ito correction (n - 1)/2 of a Brownian motion on the unit sphere of
/// an n-dimensional Euclidean space; n = D^2 for H_D.
template <int D>
constexpr double sphere_ito_drift() {
  return (D * D - 1) / 2.0;
}

namespace detail {

template <int D>
Hermitian<D> tangential(const Hermitian<D>& x, const Hermitian<D>& v) {
  return v - x * hs_inner(x, v);
}

}  // namespace detail

/// One step of size dt driven by the Brownian increment dw.
template <int D>
KineticState<D> kbm_step(const KineticState<D>& s, const Hermitian<D>& dw, double dt, Scheme scheme,
                         std::int64_t step_index = 0) {
  if (std::abs(s.hdot.norm() - 1.0) > 1e-8)
    throw std::invalid_argument("kbm_step: velocity is off the unit sphere");
  KineticState<D> out;
  if (scheme == Scheme::ito_euler_project) {
    Hermitian<D> v = s.hdot + detail::tangential(s.hdot, dw) - s.hdot * (sphere_ito_drift<D>() * dt);
    if (!v.all_finite()) throw NumericError("non-finite velocity", step_index);
    out.hdot = normalized(v);
    out.h = s.h + s.hdot * dt;
  } else {
    const Hermitian<D> k1 = detail::tangential(s.hdot, dw);
    Hermitian<D> pred = s.hdot + k1;
    if (!pred.all_finite()) throw NumericError("non-finite velocity", step_index);
    pred = normalized(pred);
    Hermitian<D> v = s.hdot + (k1 + detail::tangential(pred, dw)) * 0.5;
    if (!v.all_finite()) throw NumericError("non-finite velocity", step_index);
    out.hdot = normalized(v);
    out.h = s.h + (s.hdot + out.hdot) * (0.5 * dt);
  }
  if (!out.h.all_finite()) throw NumericError("non-finite position", step_index);
  out.t = s.t + dt;
  return out;
}

template <int D>
KineticState<D> kbm_step(const KineticState<D>& s, const Hermitian<D>& dw, const SimConfig& cfg) {
  return kbm_step(s, dw, cfg.dt, cfg.scheme);
}

/// H_0 = diag(0, 1, ..., D-1) and H'_0 uniform on the unit sphere.
template <int D>
KineticState<D> default_initial(const NoiseStream& stream) {
  static_assert(D >= 2, "dimension must be at least 2");
  KineticState<D> s;
  DiagonalSpectrum<D> diag;
  for (int i = 0; i < D; ++i) diag[i] = i;
  s.h = Hermitian<D>::diagonal(diag);
  s.hdot = uniform_unit_hermitian<D>(stream.with_substream(substream::kInitial).at_step(0));
  s.t = 0.0;
  return s;
}

template <int D>
void check_config_dim(const SimConfig& cfg) {
  cfg.validate();
  if (cfg.d != D)
    throw std::invalid_argument("config dimension " + std::to_string(cfg.d) +
                                " does not match state dimension " + std::to_string(D));
}

/// Step size of step k (1-based): dt except for a final partial step.
inline double step_size(const SimConfig& cfg, std::int64_t k) {
  const double t_prev = static_cast<double>(k - 1) * cfg.dt;
  return std::min(cfg.dt, cfg.t_max - t_prev);
}

inline double step_time(const SimConfig& cfg, std::int64_t k) {
  return k == cfg.steps() ? cfg.t_max : static_cast<double>(k) * cfg.dt;
}

/// Runs the kinetic path, calling on_record(k, state) at k = 0 and at every
/// recorded step. Step k uses the noise slot stream.at_step(k - 1).
template <int D, class OnRecord>
KineticState<D> run_kbm(KineticState<D> s, const SimConfig& cfg, const NoiseStream& stream,
                        OnRecord&& on_record, PathMonitors* monitors = nullptr) {
  check_config_dim<D>(cfg);
  on_record(std::int64_t{0}, s);
  const std::int64_t n = cfg.steps();
  for (std::int64_t k = 1; k <= n; ++k) {
    const double h = step_size(cfg, k);
    const Hermitian<D> dw = hermitian_bm_increment<D>(stream.at_step(static_cast<std::uint64_t>(k - 1)), h);
    s = kbm_step(s, dw, h, cfg.scheme, k);
    s.t = step_time(cfg, k);
    if (monitors)
      monitors->max_sphere_error = std::max(monitors->max_sphere_error, std::abs(s.hdot.norm() - 1.0));
    if (cfg.records(k)) on_record(k, s);
  }
  return s;
}

template <int D>
PathRecord<KineticState<D>> simulate_kbm(const KineticState<D>& initial, const SimConfig& cfg,
                                         const NoiseStream& stream) {
  PathRecord<KineticState<D>> rec;
  rec.config = cfg;
  rec.path_index = stream.path_index;
  run_kbm<D>(initial, cfg, stream, [&](std::int64_t, const KineticState<D>& s) { rec.record(s.t, s); },
             &rec.monitors);
  return rec;
}

}  // namespace kdbm
