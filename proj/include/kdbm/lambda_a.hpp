#pragma once

// The autonomous (Lambda, A) diffusion, where Lambda are the eigenvalues and
// A the velocity seen in the diagonalizing frame:
//   dLambda = diag(A) dt
//   dA      = (u'* A + A u') dt + dB - A Tr(A dB) - (n - 1)/2 A dt,  n = D^2,
// and its real-coordinate form for D = 2.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "kdbm/errors.hpp"
#include "kdbm/hermitian.hpp"
#include "kdbm/kinetic.hpp"
#include "kdbm/parallel.hpp"
#include "kdbm/path_record.hpp"
#include "kdbm/spectral.hpp"

namespace kdbm {

template <int D>
struct LambdaAState {
  DiagonalSpectrum<D> lambda;
  Hermitian<D> a;
  double t = 0.0;
};

template <int D>
LambdaAState<D> lambda_a_from(const SpectralState<D>& s) {
  return {s.lambda, s.a, s.t};
}

/// Euler step driven by the H_D Brownian increment db, followed by
/// renormalization of A onto the unit sphere.
template <int D>
LambdaAState<D> lambda_a_step(const LambdaAState<D>& s, const Hermitian<D>& db, double dt, double gap_floor = 0.0) {
  const SkewHermitian<D> w = u_dot(s.lambda, s.a);
  const Matrix<D>& am = s.a.matrix();
  // u'* A + A u' = A u' - u' A for skew-Hermitian u'
  const Hermitian<D> rotation = Hermitian<D>::from_matrix(am * w.matrix() - w.matrix() * am);
  Hermitian<D> a = s.a + rotation * dt + db - s.a * hs_inner(s.a, db) - s.a * (sphere_ito_drift<D>() * dt);
  if (!a.all_finite()) throw NumericError("non-finite A", 0);

  LambdaAState<D> out;
  out.a = normalized(a);
  for (int i = 0; i < D; ++i) out.lambda[i] = s.lambda[i] + s.a(i, i).real() * dt;
  out.t = s.t + dt;
  if (!out.lambda.all_finite()) throw NumericError("non-finite eigenvalues", 0);
  const double gap = min_gap(out.lambda);
  if (gap < gap_floor) throw GapFloorStop(out.t, gap, gap_floor);
  return out;
}

/// Mean over paths of the sup-in-time distance between the spectral-flow
/// (Lambda, A) and the (Lambda, A) diffusion driven by dB = U* dW U, both on
/// the same Brownian path W, which is sampled on the `fine` grid and summed
/// over each step of size dt. dt must be a multiple of fine.
template <int D>
double coupling_error(double dt, double fine, double horizon, int paths, std::uint64_t seed, int threads = 1) {
  const auto m = static_cast<std::int64_t>(std::llround(dt / fine));
  const auto n = static_cast<std::int64_t>(std::llround(horizon / dt));
  if (m < 1 || std::abs(static_cast<double>(m) * fine - dt) > 1e-9 * dt)
    throw std::invalid_argument("coupling_error: dt must be a multiple of the fine step");
  if (paths < 1 || n < 1) throw std::invalid_argument("coupling_error: need paths and steps");
  std::vector<double> sup(static_cast<std::size_t>(paths), 0.0);
  parallel_for(sup.size(), threads, [&](std::size_t p) {
    const NoiseStream stream{seed, static_cast<std::uint32_t>(p), 0, substream::kStep};
    SimConfig cfg;
    cfg.d = D;
    cfg.dt = dt;
    cfg.t_max = horizon;
    SpectralIntegrator<D> integ(default_initial<D>(stream), cfg, stream);
    LambdaAState<D> la = lambda_a_from(integ.frame().spectral);
    for (std::int64_t k = 1; k <= n; ++k) {
      Hermitian<D> dw;
      for (std::int64_t j = 0; j < m; ++j)
        dw += hermitian_bm_increment<D>(stream.at_step(static_cast<std::uint64_t>((k - 1) * m + j)), fine);
      la = lambda_a_step(la, conjugate_by(integ.frame().spectral.u, dw), dt);
      integ.step(k, dw, dt);
      const auto& s = integ.frame().spectral;
      double e = (la.a - s.a).norm();
      for (int i = 0; i < D; ++i) e = std::max(e, std::abs(la.lambda[i] - s.lambda[i]));
      sup[p] = std::max(sup[p], e);
    }
  });
  double mean = 0.0;
  for (double v : sup) mean += v / static_cast<double>(paths);
  return mean;
}

/// Eigenvalue kinetic state for D = 2. lam, mu are the two eigenvalues,
/// lamdot, mudot the diagonal of A, and (re12, im12) the off-diagonal entry
/// A_12 carried as auxiliary state, with 2 (re12^2 + im12^2) = offdiag_sq.
struct D2State {
  double lam = 0.0;
  double mu = 1.0;
  double lamdot = 0.0;
  double mudot = 0.0;
  double offdiag_sq = 1.0;
  double re12 = std::numbers::sqrt2 / 2.0;
  double im12 = 0.0;
  double t = 0.0;

  double sphere_error() const { return std::abs(lamdot * lamdot + mudot * mudot + offdiag_sq - 1.0); }
};

/// Martingale increments (dM^lambda, dM^mu) of the eigenvalue velocities.
struct D2Martingale {
  double dm_lambda = 0.0;
  double dm_mu = 0.0;
};

/// The four real noise components (B_11, B_22, Re B_12, Im B_12) from four
/// independent N(0, dt) draws; the off-diagonal parts carry variance dt/2.
struct D2Noise {
  double b11, b22, bre, bim;

  static D2Noise from_standard(const std::array<double, 4>& xi) {
    const double s = 1.0 / std::numbers::sqrt2;
    return {xi[0], xi[1], xi[2] * s, xi[3] * s};
  }
};

inline D2Martingale d2_martingale(const D2State& s, const D2Noise& n) {
  const double a = s.lamdot, b = s.mudot, x = s.re12, y = s.im12;
  return {(1.0 - a * a) * n.b11 - 2.0 * a * x * n.bre - 2.0 * a * y * n.bim - a * b * n.b22,
          -a * b * n.b11 - 2.0 * b * x * n.bre - 2.0 * b * y * n.bim + (1.0 - b * b) * n.b22};
}

inline void check_d2(const D2State& s) {
  if (s.lamdot * s.lamdot + s.mudot * s.mudot > 1.0 + 1e-10)
    throw InvariantViolation("d2_step: lamdot^2 + mudot^2 exceeds 1");
  if (s.lam == s.mu) throw DegenerateSpectrum("d2_step: lambda equals mu");
}

/// One step of the D = 2 eigenvalue diffusion. xi holds four independent
/// N(0, dt) increments.
inline D2State d2_step(const D2State& s, const std::array<double, 4>& xi, double dt) {
  check_d2(s);
  const D2Noise n = D2Noise::from_standard(xi);
  const D2Martingale m = d2_martingale(s, n);
  const double a = s.lamdot, b = s.mudot, x = s.re12, y = s.im12;
  const double gap = s.lam - s.mu;
  const double q = 2.0 * (x * x + y * y);
  const double c = sphere_ito_drift<2>();  // 3/2

  double a1 = a + (q / gap - c * a) * dt + m.dm_lambda;
  double b1 = b + (-q / gap - c * b) * dt + m.dm_mu;
  // Off-diagonal entry: rotation drift z (b - a)/gap and the tangential noise.
  const double trace_term = a * n.b11 + b * n.b22 + 2.0 * (x * n.bre + y * n.bim);
  double x1 = x + (x * (b - a) / gap - c * x) * dt + n.bre - x * trace_term;
  double y1 = y + (y * (b - a) / gap - c * y) * dt + n.bim - y * trace_term;

  const double norm = std::sqrt(a1 * a1 + b1 * b1 + 2.0 * (x1 * x1 + y1 * y1));
  if (!std::isfinite(norm) || norm == 0.0) throw NumericError("non-finite d2 state", 0);
  a1 /= norm;
  b1 /= norm;
  x1 /= norm;
  y1 /= norm;

  D2State out;
  out.lam = s.lam + a * dt;
  out.mu = s.mu + b * dt;
  out.lamdot = a1;
  out.mudot = b1;
  out.re12 = x1;
  out.im12 = y1;
  out.offdiag_sq = 2.0 * (x1 * x1 + y1 * y1);
  out.t = s.t + dt;
  return out;
}

inline D2State d2_from_lambda_a(const LambdaAState<2>& s) {
  D2State d;
  d.lam = s.lambda[0];
  d.mu = s.lambda[1];
  d.lamdot = s.a(0, 0).real();
  d.mudot = s.a(1, 1).real();
  d.re12 = s.a(0, 1).real();
  d.im12 = s.a(0, 1).imag();
  d.offdiag_sq = 1.0 - d.lamdot * d.lamdot - d.mudot * d.mudot;
  d.t = s.t;
  return d;
}

/// Extracts the eigenvalue kinetic state from every frame of a spectral run.
/// Only dimension 2 is meaningful.
template <int D>
std::vector<D2State> d2_from_full(const PathRecord<SpectralFrame<D>>& path) {
  if constexpr (D != 2) {
    throw std::invalid_argument("d2_from_full needs a dimension-2 path");
  } else {
    std::vector<D2State> out;
    out.reserve(path.frames.size());
    for (const auto& f : path.frames) out.push_back(d2_from_lambda_a(lambda_a_from(f.spectral)));
    return out;
  }
}

}  // namespace kdbm
