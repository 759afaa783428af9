#pragma once

// Brownian motion on the unit sphere of R^n, the squared norm of its first
// k coordinates, and the skew-product system (r^2, theta, phi) for
// X = (r theta, sqrt(1 - r^2) phi).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "kdbm/errors.hpp"
#include "kdbm/noise.hpp"
#include "kdbm/parallel.hpp"
#include "kdbm/stats.hpp"

namespace kdbm {

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline void normalize(std::vector<double>& v) {
  const double n = norm(v);
  if (!std::isfinite(n) || n == 0.0) throw NumericError("cannot normalize vector", 0);
  for (double& x : v) x /= n;
}

/// x <- x + noise - x (x . noise) - drift x dt, scaled noise, then renormalized.
inline std::vector<double> sphere_euler(std::span<const double> x, std::span<const double> noise,
                                        double noise_scale, double drift) {
  const double proj = dot(x, noise);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = x[i] * (1.0 - drift) + noise_scale * (noise[i] - x[i] * proj);
  normalize(out);
  return out;
}

}  // namespace detail

struct SphereState {
  std::vector<double> x;
  double t = 0.0;

  int dim() const { return static_cast<int>(x.size()); }
};

/// Ito Euler step x + db - x (x . db) - (n - 1)/2 x dt, renormalized.
inline SphereState sphere_bm_step(const SphereState& s, std::span<const double> db, double dt) {
  if (db.size() != s.x.size()) throw std::invalid_argument("sphere_bm_step: noise dimension mismatch");
  if (std::abs(detail::norm(s.x) - 1.0) > 1e-8)
    throw std::invalid_argument("sphere_bm_step: state is off the unit sphere");
  const double n = static_cast<double>(s.x.size());
  SphereState out{detail::sphere_euler(s.x, db, 1.0, 0.5 * (n - 1.0) * dt), s.t + dt};
  return out;
}

struct Projection {
  double r_sq = 0.0;
  std::vector<double> theta;
  bool degenerate = false;  // theta undefined when r_sq < 1e-16
};

/// (|X^[k]|^2, X^[k] / |X^[k]|) for the first k coordinates.
inline Projection project(const SphereState& s, int k) {
  if (k < 1 || k >= s.dim()) throw std::invalid_argument("project: need 1 <= k < n");
  Projection p;
  p.theta.assign(s.x.begin(), s.x.begin() + k);
  p.r_sq = detail::dot(p.theta, p.theta);
  if (p.r_sq < 1e-16) {
    p.degenerate = true;
    std::fill(p.theta.begin(), p.theta.end(), 0.0);
  } else {
    const double r = std::sqrt(p.r_sq);
    for (double& v : p.theta) v /= r;
  }
  return p;
}

struct SkewProductState {
  double r_sq = 0.5;
  std::vector<double> theta;  // unit vector in R^k
  std::vector<double> phi;    // unit vector in R^{n-k}
  double t = 0.0;
  std::int64_t boundary_touches = 0;

  int k() const { return static_cast<int>(theta.size()); }
  int n() const { return static_cast<int>(theta.size() + phi.size()); }

  /// The sphere point (r theta, sqrt(1 - r^2) phi).
  SphereState embed() const {
    SphereState s;
    const double r = std::sqrt(r_sq), rc = std::sqrt(1.0 - r_sq);
    for (double v : theta) s.x.push_back(r * v);
    for (double v : phi) s.x.push_back(rc * v);
    s.t = t;
    return s;
  }
};

inline constexpr double kSkewProductClamp = 1e-8;

/// One Euler step of
///   d(r^2) = 2 sqrt((1 - r^2) r^2) dB^r + (k - n r^2) dt
///   dtheta = (dB^theta - theta theta* dB^theta) / r - (k - 1)/(2 r^2) theta dt
///   dphi   = (dB^phi - phi phi* dB^phi) / sqrt(1 - r^2) - (n - k - 1)/(2 (1 - r^2)) phi dt
/// with noise = (dB^r, dB^theta, dB^phi), n + 1 independent N(0, dt) values.
/// r^2 is clamped to [1e-8, 1 - 1e-8]; each clamp counts as a boundary touch.
inline SkewProductState skew_product_step(const SkewProductState& s, std::span<const double> noise, double dt) {
  const int k = s.k(), n = s.n();
  if (!(s.r_sq > 0.0 && s.r_sq < 1.0)) throw std::invalid_argument("skew_product_step: r_sq must lie in (0, 1)");
  if (static_cast<int>(noise.size()) != n + 1)
    throw std::invalid_argument("skew_product_step: need n + 1 noise components");

  const double r2 = s.r_sq, c2 = 1.0 - r2;
  SkewProductState out;
  out.boundary_touches = s.boundary_touches;
  out.r_sq = r2 + 2.0 * std::sqrt(c2 * r2) * noise[0] + (k - n * r2) * dt;
  if (!std::isfinite(out.r_sq)) throw NumericError("non-finite r^2", 0);
  if (out.r_sq < kSkewProductClamp || out.r_sq > 1.0 - kSkewProductClamp) {
    out.r_sq = std::clamp(out.r_sq, kSkewProductClamp, 1.0 - kSkewProductClamp);
    ++out.boundary_touches;
  }
  out.theta = detail::sphere_euler(s.theta, noise.subspan(1, k), 1.0 / std::sqrt(r2), 0.5 * (k - 1) * dt / r2);
  out.phi = detail::sphere_euler(s.phi, noise.subspan(1 + k), 1.0 / std::sqrt(c2), 0.5 * (n - k - 1) * dt / c2);
  out.t = s.t + dt;
  return out;
}

/// State with the given r^2 and (theta, phi) uniform on their spheres.
inline SkewProductState random_skew_state(int n, int k, double r_sq, const NoiseStream& stream) {
  if (k < 1 || k >= n) throw std::invalid_argument("need 1 <= k < n");
  const NoiseStream init = stream.with_substream(substream::kInitial);
  SkewProductState s;
  s.r_sq = r_sq;
  s.theta = vector_bm_increment(init.at_step(0), k, 1.0);
  s.phi = vector_bm_increment(init.at_step(1), n - k, 1.0);
  detail::normalize(s.theta);
  detail::normalize(s.phi);
  return s;
}

/// One-step estimates of the drift and squared diffusion of |X^[k]|^2 for the
/// direct sphere walk started at points with |X^[k]|^2 = r_sq. The drift uses
/// antithetic pairs (db, -db); the diffusion is the variance of the increment
/// over dt.
struct ProjectionLaw {
  MeanEstimate drift;
  MeanEstimate diffusion_sq;
};

inline ProjectionLaw pinned_projection_law(int n, int k, double r_sq, double dt, std::size_t samples,
                                           std::uint64_t seed, int threads = 1) {
  if (!(r_sq > 0.0 && r_sq < 1.0)) throw std::invalid_argument("r_sq must lie in (0, 1)");
  std::vector<double> drift(samples), inc(samples);
  parallel_for(samples, threads, [&](std::size_t p) {
    const NoiseStream stream{seed, static_cast<std::uint32_t>(p), 0, substream::kStep};
    const SphereState x = random_skew_state(n, k, r_sq, stream).embed();
    std::vector<double> db = vector_bm_increment(stream, n, dt);
    const double up = project(sphere_bm_step(x, db, dt), k).r_sq - r_sq;
    for (double& v : db) v = -v;
    const double down = project(sphere_bm_step(x, db, dt), k).r_sq - r_sq;
    drift[p] = 0.5 * (up + down) / dt;
    inc[p] = up;
  });
  const MeanEstimate m = mean_and_stderr(inc);
  std::vector<double> sq(samples);
  for (std::size_t p = 0; p < samples; ++p) sq[p] = (inc[p] - m.mean) * (inc[p] - m.mean) / dt;
  return {mean_and_stderr(drift), mean_and_stderr(sq)};
}

/// Per-time samples of r^2 and theta_1 (the first coordinate of theta).
struct ProjectionMarginals {
  std::vector<std::vector<double>> r_sq;    // [time][path]
  std::vector<std::vector<double>> theta1;  // [time][path]
  double min_r_sq = 1.0;                    // over all paths and steps
  std::int64_t boundary_touches = 0;
};

namespace detail {

inline ProjectionMarginals marginals_layout(std::size_t times, std::size_t paths) {
  ProjectionMarginals m;
  m.r_sq.assign(times, std::vector<double>(paths));
  m.theta1.assign(times, std::vector<double>(paths));
  return m;
}

inline std::vector<std::int64_t> grid_steps(std::span<const double> times, double dt, std::size_t paths) {
  if (paths == 0) throw std::invalid_argument("need at least one path");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  std::vector<std::int64_t> steps;
  for (double t : times) {
    const auto k = static_cast<std::int64_t>(std::llround(t / dt));
    if (k < 1 || (!steps.empty() && k < steps.back()))
      throw std::invalid_argument("marginal times must be positive and nondecreasing");
    steps.push_back(k);
  }
  return steps;
}

}  // namespace detail

/// Projections of direct sphere walks started at r^2 = r_sq0 with uniform angles.
inline ProjectionMarginals direct_projection_marginals(int n, int k, double r_sq0, double dt,
                                                       std::span<const double> times, std::size_t paths,
                                                       std::uint64_t seed, int threads = 1) {
  const auto steps = detail::grid_steps(times, dt, paths);
  ProjectionMarginals out = detail::marginals_layout(times.size(), paths);
  std::vector<double> min_r(paths, 1.0);
  parallel_for(paths, threads, [&](std::size_t p) {
    const NoiseStream stream{seed, static_cast<std::uint32_t>(p), 0, substream::kStep};
    SphereState x = random_skew_state(n, k, r_sq0, stream).embed();
    std::size_t j = 0;
    for (std::int64_t s = 1; j < steps.size(); ++s) {
      x = sphere_bm_step(x, vector_bm_increment(stream.at_step(static_cast<std::uint64_t>(s - 1)), n, dt), dt);
      const Projection pr = project(x, k);
      min_r[p] = std::min(min_r[p], pr.r_sq);
      while (j < steps.size() && steps[j] == s) {
        out.r_sq[j][p] = pr.r_sq;
        out.theta1[j][p] = pr.theta[0];
        ++j;
      }
    }
  });
  out.min_r_sq = *std::min_element(min_r.begin(), min_r.end());
  return out;
}

/// The same marginals from the (r^2, theta, phi) system.
inline ProjectionMarginals skew_product_marginals(int n, int k, double r_sq0, double dt, std::span<const double> times,
                                                  std::size_t paths, std::uint64_t seed, int threads = 1) {
  const auto steps = detail::grid_steps(times, dt, paths);
  ProjectionMarginals out = detail::marginals_layout(times.size(), paths);
  std::vector<double> min_r(paths, 1.0);
  std::vector<std::int64_t> touches(paths, 0);
  parallel_for(paths, threads, [&](std::size_t p) {
    const NoiseStream stream{seed, static_cast<std::uint32_t>(p), 0, substream::kStep};
    SkewProductState x = random_skew_state(n, k, r_sq0, stream);
    std::size_t j = 0;
    for (std::int64_t s = 1; j < steps.size(); ++s) {
      x = skew_product_step(x, vector_bm_increment(stream.at_step(static_cast<std::uint64_t>(s - 1)), n + 1, dt), dt);
      min_r[p] = std::min(min_r[p], x.r_sq);
      while (j < steps.size() && steps[j] == s) {
        out.r_sq[j][p] = x.r_sq;
        out.theta1[j][p] = x.theta[0];
        ++j;
      }
    }
    touches[p] = x.boundary_touches;
  });
  out.min_r_sq = *std::min_element(min_r.begin(), min_r.end());
  for (auto t : touches) out.boundary_touches += t;
  return out;
}

}  // namespace kdbm
