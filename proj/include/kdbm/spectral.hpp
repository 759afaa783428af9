#pragma once

// Diagonalizing frame of the kinetic motion: U solves dU = U u'(Lambda, A) dt
// so that U* H U stays diagonal, with Lambda = diag(U* H U) and A = U* H' U.
// Also the drift field Phi(Lambda, A) that decides whether the eigenvalue
// pair (Lambda, Lambda') is Markovian, and the perturbation used to show it
// is not for D >= 3.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>

#include "kdbm/eigen.hpp"
#include "kdbm/errors.hpp"
#include "kdbm/expm.hpp"
#include "kdbm/hermitian.hpp"
#include "kdbm/kinetic.hpp"
#include "kdbm/noise.hpp"
#include "kdbm/path_record.hpp"

namespace kdbm {

template <int D>
struct SpectralState {
  Unitary<D> u;
  DiagonalSpectrum<D> lambda;
  Hermitian<D> a;
  double t = 0.0;
  /// ||offdiag(U* H U)||_F at this time.
  double residual = 0.0;
};

/// Frame velocity: -a_ij / (lambda_i - lambda_j) off the diagonal, 0 on it.
template <int D>
SkewHermitian<D> u_dot(const DiagonalSpectrum<D>& lambda, const Hermitian<D>& a) {
  SkewHermitian<D> w;
  for (int i = 0; i < D; ++i)
    for (int j = i + 1; j < D; ++j) {
      const double den = lambda[i] - lambda[j];
      if (den == 0.0) throw DegenerateSpectrum("u_dot: repeated diagonal entries");
      w.set(i, j, -a(i, j) / den);
    }
  return w;
}

/// Advances the frame by dt given the kinetic state (h, hdot) at t + dt.
/// Throws GapFloorStop when the new spectrum has a gap below gap_floor.
template <int D>
SpectralState<D> frame_step(const SpectralState<D>& s, const Hermitian<D>& h, const Hermitian<D>& hdot,
                            double dt, double gap_floor = 0.0) {
  const SkewHermitian<D> w = u_dot(s.lambda, s.a);
  SpectralState<D> out;
  out.u = s.u * exp_skew(w * dt);
  const Matrix<D> m = out.u.matrix().adjoint() * h.matrix() * out.u.matrix();
  if (!m.all_finite()) throw NumericError("non-finite frame", 0);
  out.residual = offdiag_norm(m);
  for (int i = 0; i < D; ++i) out.lambda[i] = m(i, i).real();
  out.a = conjugate_by(out.u, hdot);
  out.t = s.t + dt;
  const double gap = min_gap(out.lambda);
  if (gap < gap_floor) throw GapFloorStop(out.t, gap, gap_floor);
  return out;
}

/// Initial frame from the eigensolver, ordered so Lambda_0 is nondecreasing.
template <int D>
SpectralState<D> spectral_initial(const KineticState<D>& k) {
  const EigenDecomposition<D> e = eig_hermitian(k.h);
  SpectralState<D> s;
  s.u = e.vectors;
  const Matrix<D> m = s.u.matrix().adjoint() * k.h.matrix() * s.u.matrix();
  for (int i = 0; i < D; ++i) s.lambda[i] = m(i, i).real();
  s.residual = offdiag_norm(m);
  s.a = conjugate_by(s.u, k.hdot);
  s.t = k.t;
  return s;
}

/// Phi(Lambda, A)_ii = 2 sum_{j != i} |A_ij|^2 / (Lambda_i - Lambda_j), the
/// diagonal of u'* A + A u'.
template <int D>
DiagonalSpectrum<D> phi(const DiagonalSpectrum<D>& lambda, const Hermitian<D>& a) {
  if (min_gap(lambda) == 0.0) throw DegenerateSpectrum("phi: repeated eigenvalues");
  DiagonalSpectrum<D> out;
  for (int i = 0; i < D; ++i) {
    double s = 0.0;
    for (int j = 0; j < D; ++j)
      if (j != i) s += std::norm(a(i, j)) / (lambda[i] - lambda[j]);
    out[i] = 2.0 * s;
  }
  return out;
}

/// Phi for D = 2 written through the diagonal of a unit-norm A only:
/// Phi_11 = -Phi_22 = (1 - A_11^2 - A_22^2) / (Lambda_11 - Lambda_22).
inline DiagonalSpectrum<2> phi_d2(std::span<const double> lambda, std::span<const double> a_diag) {
  if (lambda.size() != 2 || a_diag.size() != 2)
    throw std::invalid_argument("phi_d2 is defined for dimension 2 only");
  const double gap = lambda[0] - lambda[1];
  if (gap == 0.0) throw DegenerateSpectrum("phi_d2: repeated eigenvalues");
  const double v = (1.0 - a_diag[0] * a_diag[0] - a_diag[1] * a_diag[1]) / gap;
  DiagonalSpectrum<2> out;
  out[0] = v;
  out[1] = -v;
  return out;
}

namespace detail {

template <int D>
void check_perturbation_indices(int i, int j, int k) {
  auto in_range = [](int x) { return x >= 0 && x < D; };
  if (!in_range(i) || !in_range(j) || !in_range(k)) throw std::invalid_argument("index out of range");
  if (i == j || j == k || i == k) throw std::invalid_argument("indices i, j, k must be distinct");
}

}  // namespace detail

/// Rotates off-diagonal mass from entry (i, j) into (i, k) while keeping the
/// diagonal and the Hilbert-Schmidt norm:
///   A_ij -> A_ij cos(eps),  A_ik -> A_ik + i |A_ij| sin(eps) u,
/// where u is the phase of A_ik (1 if A_ik = 0). Indices are 0-based.
template <int D>
Hermitian<D> perturbed(const Hermitian<D>& a, int i, int j, int k, double eps) {
  detail::check_perturbation_indices<D>(i, j, k);
  const cplx aij = a(i, j);
  if (aij == cplx{}) throw std::invalid_argument("perturbation needs a nonzero (i, j) entry");
  const cplx aik = a(i, k);
  const cplx u = aik == cplx{} ? cplx(1.0) : aik / std::abs(aik);
  Hermitian<D> out = a;
  out.set(i, j, aij * std::cos(eps));
  out.set(i, k, aik + cplx(0.0, 1.0) * std::abs(aij) * std::sin(eps) * u);
  return out;
}

/// Closed-form second derivative in eps of Phi(Lambda, perturbed(A, i, j, k, eps))_ii:
///   (l_k - l_j) / ((l_i - l_j)(l_i - l_k)) * 4 |A_ij|^2 cos(2 eps).
template <int D>
double phi_perturbation_d2de2(const DiagonalSpectrum<D>& lambda, const Hermitian<D>& a, int i, int j, int k,
                              double eps) {
  detail::check_perturbation_indices<D>(i, j, k);
  if (min_gap(lambda) == 0.0) throw DegenerateSpectrum("repeated eigenvalues");
  const double mass = std::norm(a(i, j));
  if (mass == 0.0) throw std::invalid_argument("perturbation needs a nonzero (i, j) entry");
  const double factor = (lambda[k] - lambda[j]) / ((lambda[i] - lambda[j]) * (lambda[i] - lambda[k]));
  return factor * 4.0 * mass * std::cos(2.0 * eps);
}

template <int D>
struct SpectralFrame {
  KineticState<D> kinetic;
  SpectralState<D> spectral;
};

inline constexpr int kMaxRefinementLevel = 6;  // dt / 64
inline constexpr std::int64_t kReprojectEvery = 100;

/// Co-evolves the kinetic state and its diagonalizing frame. When a step
/// drives the eigenvalue gap below the floor, the step is split in two by
/// Brownian-bridge sampling of the increment, recursively down to dt / 64;
/// only then is the gap-floor stop raised.
template <int D>
class SpectralIntegrator {
 public:
  SpectralIntegrator(const KineticState<D>& initial, const SimConfig& cfg, const NoiseStream& stream)
      : cfg_(cfg), stream_(stream) {
    check_config_dim<D>(cfg);
    frame_.kinetic = initial;
    frame_.spectral = spectral_initial(initial);
    const double g0 = min_gap(frame_.spectral.lambda);
    if (!(g0 > 0.0)) throw DegenerateSpectrum("initial spectrum has repeated eigenvalues");
    floor_ = cfg.effective_gap_floor(g0);
    monitors_.min_gap = g0;
    monitors_.max_offdiag_residual = frame_.spectral.residual;
  }

  const SpectralFrame<D>& frame() const { return frame_; }
  const PathMonitors& monitors() const { return monitors_; }
  double gap_floor() const { return floor_; }

  /// Grid step k (1-based) with Brownian increment dw over a step of size h.
  void step(std::int64_t k, const Hermitian<D>& dw, double h) {
    frame_ = advance(frame_, dw, h, 0, 0, k);
    if (++since_reproject_ == kReprojectEvery) {
      since_reproject_ = 0;
      SpectralState<D>& s = frame_.spectral;
      monitors_.max_unitarity_error = std::max(monitors_.max_unitarity_error, s.u.unitarity_error());
      s.u = s.u.reprojected();
      if (s.u.unitarity_error() > 1e-8) throw NumericError("frame lost unitarity", k);
    }
  }

 private:
  SpectralFrame<D> advance(const SpectralFrame<D>& f, const Hermitian<D>& dw, double h, int level,
                           std::uint32_t index, std::int64_t k) {
    SpectralFrame<D> next;
    try {
      next.kinetic = kbm_step(f.kinetic, dw, h, cfg_.scheme, k);
      next.spectral = frame_step(f.spectral, next.kinetic.h, next.kinetic.hdot, h, floor_);
    } catch (const GapFloorStop&) {
      if (level == kMaxRefinementLevel) throw;
      ++monitors_.refinements;
      const std::uint32_t tag = substream::kBridgeBase + (static_cast<std::uint32_t>(level) << 7) + index;
      const Hermitian<D> wiggle =
          hermitian_bm_increment<D>(stream_.with_substream(tag).at_step(static_cast<std::uint64_t>(k - 1)), h / 4.0);
      const Hermitian<D> first = dw * 0.5 + wiggle;
      const Hermitian<D> second = dw - first;
      const SpectralFrame<D> mid = advance(f, first, h / 2.0, level + 1, 2 * index, k);
      return advance(mid, second, h / 2.0, level + 1, 2 * index + 1, k);
    }
    monitors_.min_gap = std::min(monitors_.min_gap, min_gap(next.spectral.lambda));
    monitors_.max_offdiag_residual = std::max(monitors_.max_offdiag_residual, next.spectral.residual);
    monitors_.max_sphere_error = std::max(monitors_.max_sphere_error, std::abs(next.kinetic.hdot.norm() - 1.0));
    return next;
  }

  SimConfig cfg_;
  NoiseStream stream_;
  SpectralFrame<D> frame_;
  PathMonitors monitors_;
  double floor_ = 0.0;
  std::int64_t since_reproject_ = 0;
};

/// Runs the spectral path, calling on_record(k, frame) at k = 0 and at every
/// recorded step. A gap-floor stop ends the path early and is reported
/// through the returned record's events.
template <int D, class OnRecord>
PathRecord<SpectralFrame<D>> run_spectral(const KineticState<D>& initial, const SimConfig& cfg,
                                          const NoiseStream& stream, OnRecord&& on_record) {
  PathRecord<SpectralFrame<D>> rec;
  rec.config = cfg;
  rec.path_index = stream.path_index;
  SpectralIntegrator<D> integ(initial, cfg, stream);
  on_record(std::int64_t{0}, integ.frame());
  const std::int64_t n = cfg.steps();
  for (std::int64_t k = 1; k <= n; ++k) {
    const double h = step_size(cfg, k);
    const Hermitian<D> dw = hermitian_bm_increment<D>(stream.at_step(static_cast<std::uint64_t>(k - 1)), h);
    try {
      integ.step(k, dw, h);
    } catch (const GapFloorStop& stop) {
      rec.events.push_back({stop.time(), EventKind::gap_floor_stop, stop.what()});
      rec.stopped = true;
      break;
    }
    if (cfg.records(k)) on_record(k, integ.frame());
  }
  rec.monitors = integ.monitors();
  if (rec.monitors.refinements > 0)
    rec.events.push_back({integ.frame().kinetic.t, EventKind::step_refined,
                          std::to_string(rec.monitors.refinements) + " refined steps"});
  return rec;
}

template <int D>
PathRecord<SpectralFrame<D>> simulate_spectral(const KineticState<D>& initial, const SimConfig& cfg,
                                               const NoiseStream& stream) {
  std::vector<double> times;
  std::vector<SpectralFrame<D>> frames;
  auto rec = run_spectral<D>(initial, cfg, stream, [&](std::int64_t, const SpectralFrame<D>& f) {
    times.push_back(f.kinetic.t);
    frames.push_back(f);
  });
  rec.times = std::move(times);
  rec.frames = std::move(frames);
  return rec;
}

}  // namespace kdbm
