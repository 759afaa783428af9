#pragma once

// Large-scale behaviour of the kinetic motion: the rescaled eigenvalue path
// t -> (1/L) Lambda(H_{L^2 t}) against the eigenvalues of a standard Brownian
// motion on H_d run with the effective diffusivity 4 / (d^2 (d^2 - 1)).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kdbm/eigen.hpp"
#include "kdbm/hermitian.hpp"
#include "kdbm/kinetic.hpp"
#include "kdbm/noise.hpp"
#include "kdbm/parallel.hpp"
#include "kdbm/path_record.hpp"
#include "kdbm/stats.hpp"

namespace kdbm {

/// 4 / (d^2 (d^2 - 1)): variance rate of each Hilbert-Schmidt component of
/// H_t at large times.
inline double predicted_diffusivity(int d) {
  if (d < 2) throw std::invalid_argument("dimension must be at least 2");
  const double n = static_cast<double>(d) * d;
  return 4.0 / (n * (n - 1.0));
}

template <int D>
struct RescaledPath {
  double scale_L = 1.0;
  std::vector<double> times;                        // on [0, 1]
  std::vector<DiagonalSpectrum<D>> lambda_paths;    // nondecreasing at each time
};

template <int D>
struct DysonReference {
  std::vector<double> times;
  std::vector<DiagonalSpectrum<D>> eig_paths;  // nondecreasing at each time
};

namespace detail {

inline constexpr double kGridTolerance = 1e-9;

template <int D>
DiagonalSpectrum<D> scaled_spectrum(const Hermitian<D>& h, double inv_l) {
  DiagonalSpectrum<D> s = eig_hermitian(h).values;
  for (auto& v : s.values) v *= inv_l;
  return s;
}

inline void check_scale(double l) {
  if (!(l > 0.0) || !std::isfinite(l)) throw std::invalid_argument("scale L must be positive");
}

}  // namespace detail

/// Rescales every recorded frame with t <= L^2. The path must reach L^2.
template <int D>
RescaledPath<D> rescale(const PathRecord<KineticState<D>>& path, double l) {
  detail::check_scale(l);
  const double horizon = l * l;
  if (path.times.empty() || path.times.back() < horizon * (1.0 - detail::kGridTolerance))
    throw std::invalid_argument("rescale: path horizon is shorter than L^2");
  RescaledPath<D> out;
  out.scale_L = l;
  for (std::size_t r = 0; r < path.times.size(); ++r) {
    if (path.times[r] > horizon * (1.0 + detail::kGridTolerance)) break;
    out.times.push_back(path.times[r] / horizon);
    out.lambda_paths.push_back(detail::scaled_spectrum(path.frames[r].h, 1.0 / l));
  }
  return out;
}

/// Rescales only the frames at the grid times (on [0, 1]).
template <int D>
RescaledPath<D> rescale(const PathRecord<KineticState<D>>& path, double l, std::span<const double> grid) {
  detail::check_scale(l);
  const double horizon = l * l;
  if (path.times.empty() || path.times.back() < horizon * (1.0 - detail::kGridTolerance))
    throw std::invalid_argument("rescale: path horizon is shorter than L^2");
  RescaledPath<D> out;
  out.scale_L = l;
  for (double t : grid) {
    const double target = t * horizon;
    auto it = std::lower_bound(path.times.begin(), path.times.end(), target * (1.0 - detail::kGridTolerance) - 1e-12);
    if (it == path.times.end() || std::abs(*it - target) > detail::kGridTolerance * std::max(1.0, target))
      throw std::invalid_argument("rescale: no recorded frame at t = " + std::to_string(target));
    const auto r = static_cast<std::size_t>(it - path.times.begin());
    out.times.push_back(t);
    out.lambda_paths.push_back(detail::scaled_spectrum(path.frames[r].h, 1.0 / l));
  }
  return out;
}

/// Eigenvalues of a standard Brownian motion on H_d started at 0, sampled at
/// the grid times by summing exact Gaussian increments and diagonalizing.
template <int D>
DysonReference<D> dyson_reference(std::span<const double> grid, const NoiseStream& stream) {
  DysonReference<D> out;
  Hermitian<D> w;
  double t = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double dt = grid[j] - t;
    if (dt < 0.0) throw std::invalid_argument("dyson_reference: grid must be nondecreasing");
    if (dt > 0.0) w += hermitian_bm_increment<D>(stream.at_step(j), dt);
    t = grid[j];
    out.times.push_back(t);
    out.eig_paths.push_back(eig_hermitian(w).values);
  }
  return out;
}

template <int D>
std::vector<DysonReference<D>> dyson_ensemble(std::span<const double> grid, std::size_t n_paths, std::uint64_t seed,
                                              int threads) {
  std::vector<DysonReference<D>> out(n_paths);
  parallel_for(n_paths, threads, [&](std::size_t p) {
    const NoiseStream stream{seed, static_cast<std::uint32_t>(p), 0, substream::kReference};
    out[p] = dyson_reference<D>(grid, stream);
  });
  return out;
}

/// Kinetic start for the comparison: H_0 = 0, like the reference, and H'_0
/// uniform on the unit sphere. A nonzero H_0 would add a deterministic H_0 / L
/// offset to every rescaled path.
template <int D>
KineticState<D> origin_initial(const NoiseStream& stream) {
  KineticState<D> s = default_initial<D>(stream);
  s.h = Hermitian<D>{};
  return s;
}

/// Runs n_paths kinetic paths from origin_initial to time L^2 grid.back() and
/// rescales them at the grid times, which must be strictly increasing with
/// every L^2 t a multiple of cfg.dt.
template <int D>
std::vector<RescaledPath<D>> simulate_rescaled(SimConfig cfg, double l, std::span<const double> grid,
                                               std::size_t n_paths, std::uint64_t seed, int threads) {
  detail::check_scale(l);
  if (grid.empty()) throw std::invalid_argument("simulate_rescaled: empty grid");
  cfg.t_max = l * l * grid.back();
  cfg.record_stride = 1;
  check_config_dim<D>(cfg);
  std::vector<std::int64_t> targets;
  for (double t : grid) {
    const double steps = l * l * t / cfg.dt;
    const auto k = static_cast<std::int64_t>(std::llround(steps));
    if (std::abs(steps - static_cast<double>(k)) > 1e-6)
      throw std::invalid_argument("simulate_rescaled: L^2 t must be a multiple of dt");
    if (!targets.empty() && k <= targets.back())
      throw std::invalid_argument("simulate_rescaled: grid must be strictly increasing");
    targets.push_back(k);
  }
  std::vector<RescaledPath<D>> out(n_paths);
  parallel_for(n_paths, threads, [&](std::size_t p) {
    const NoiseStream stream{seed, static_cast<std::uint32_t>(p), 0, substream::kStep};
    PathRecord<KineticState<D>> rec;
    run_kbm<D>(origin_initial<D>(stream), cfg, stream, [&](std::int64_t k, const KineticState<D>& s) {
      if (std::find(targets.begin(), targets.end(), k) != targets.end()) {
        KineticState<D> snap = s;
        snap.t = static_cast<double>(k) * cfg.dt;
        rec.record(snap.t, snap);
      }
    });
    RescaledPath<D> r;
    r.scale_L = l;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      r.times.push_back(grid[j]);
      r.lambda_paths.push_back(detail::scaled_spectrum(rec.frames.at(j).h, 1.0 / l));
    }
    out[p] = std::move(r);
  });
  return out;
}

struct DiffusivityEstimate {
  double sigma_sq = 0.0;
  double stderr_ = 0.0;
};

inline constexpr std::size_t kMinDiffusivityPaths = 1000;

/// sigma^2 = E ||H_T - H_0||^2 / (n T), n = D^2: the mean squared projection
/// of the displacement on an orthonormal basis of H_d, per unit time.
template <int D>
DiffusivityEstimate effective_diffusivity(std::span<const Hermitian<D>> displacements, double horizon) {
  if (displacements.size() < kMinDiffusivityPaths)
    throw std::invalid_argument("effective_diffusivity: need at least 1000 paths");
  if (!(horizon > 0.0)) throw std::invalid_argument("effective_diffusivity: horizon must be positive");
  std::vector<double> per_path;
  per_path.reserve(displacements.size());
  for (const auto& x : displacements) per_path.push_back(x.norm() * x.norm() / (D * D * horizon));
  const MeanEstimate e = mean_and_stderr(per_path);
  return {e.mean, e.stderr_};
}

/// H_T - H_0 for n_paths kinetic paths.
template <int D>
std::vector<Hermitian<D>> simulate_displacements(SimConfig cfg, std::size_t n_paths, std::uint64_t seed,
                                                 int threads) {
  cfg.record_stride = std::numeric_limits<int>::max();
  check_config_dim<D>(cfg);
  std::vector<Hermitian<D>> out(n_paths);
  parallel_for(n_paths, threads, [&](std::size_t p) {
    const NoiseStream stream{seed, static_cast<std::uint32_t>(p), 0, substream::kStep};
    const KineticState<D> s0 = default_initial<D>(stream);
    const KineticState<D> s1 = run_kbm<D>(s0, cfg, stream, [](std::int64_t, const KineticState<D>&) {});
    out[p] = s1.h - s0.h;
  });
  return out;
}

struct DysonComparison {
  double time = 0.0;
  std::string observable;  // "lambda_<i>" (1-based) or "gap"
  KsResult ks;
};

struct DysonReport {
  std::vector<DysonComparison> tests;

  bool all_pass() const {
    return std::all_of(tests.begin(), tests.end(), [](const DysonComparison& c) { return c.ks.pass; });
  }
  bool gap_pass() const {
    return std::all_of(tests.begin(), tests.end(),
                       [](const DysonComparison& c) { return c.observable != "gap" || c.ks.pass; });
  }
};

inline constexpr std::size_t kMinComparisonPaths = 1000;

/// KS tests of each eigenvalue marginal and of the spread lambda_max -
/// lambda_min, at every time of the rescaled grid, against sqrt(sigma_sq)
/// times the reference at the same time (Brownian scaling of the time change
/// t -> sigma_sq t). Grid times equal to 0 are skipped.
template <int D>
DysonReport compare_to_dyson(std::span<const RescaledPath<D>> rescaled, std::span<const DysonReference<D>> reference,
                             double sigma_sq) {
  if (rescaled.size() < kMinComparisonPaths || reference.size() < kMinComparisonPaths)
    throw std::invalid_argument("compare_to_dyson: both ensembles need at least 1000 paths");
  if (!(sigma_sq > 0.0)) throw std::invalid_argument("compare_to_dyson: sigma_sq must be positive");
  const std::vector<double>& grid = rescaled.front().times;
  const double scale = std::sqrt(sigma_sq);
  DysonReport report;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double t = grid[j];
    if (t == 0.0) continue;
    std::size_t rj = reference.front().times.size();
    for (std::size_t q = 0; q < reference.front().times.size(); ++q)
      if (std::abs(reference.front().times[q] - t) <= detail::kGridTolerance) rj = q;
    if (rj == reference.front().times.size())
      throw std::invalid_argument("compare_to_dyson: reference lacks time " + std::to_string(t));

    auto column = [&](auto&& ensemble, std::size_t idx, auto&& get, double factor) {
      std::vector<double> v;
      v.reserve(ensemble.size());
      for (const auto& p : ensemble) v.push_back(factor * get(p, idx));
      return v;
    };
    for (int i = 0; i < D; ++i) {
      const auto a = column(rescaled, j, [i](const RescaledPath<D>& p, std::size_t k) { return p.lambda_paths[k][i]; }, 1.0);
      const auto b = column(reference, rj, [i](const DysonReference<D>& p, std::size_t k) { return p.eig_paths[k][i]; }, scale);
      report.tests.push_back({t, "lambda_" + std::to_string(i + 1), ks_two_sample(a, b)});
    }
    const auto a = column(rescaled, j, [](const RescaledPath<D>& p, std::size_t k) {
      return p.lambda_paths[k][D - 1] - p.lambda_paths[k][0];
    }, 1.0);
    const auto b = column(reference, rj, [](const DysonReference<D>& p, std::size_t k) {
      return p.eig_paths[k][D - 1] - p.eig_paths[k][0];
    }, scale);
    report.tests.push_back({t, "gap", ks_two_sample(a, b)});
  }
  return report;
}

}  // namespace kdbm
