#pragma once

// Ensemble estimators: drift regression, realized quadratic (co)variation,
// the two-sample Kolmogorov-Smirnov test, the eigenvalue gap monitor and the
// drift A/B experiment that separates Markovian from non-Markovian
// eigenvalue dynamics.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kdbm/hermitian.hpp"
#include "kdbm/lambda_a.hpp"
#include "kdbm/noise.hpp"
#include "kdbm/parallel.hpp"
#include "kdbm/path_record.hpp"
#include "kdbm/spectral.hpp"

namespace kdbm {

struct MeanEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

inline MeanEstimate mean_and_stderr(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean_and_stderr: empty input");
  const double n = static_cast<double>(xs.size());
  double m = 0.0;
  for (double x : xs) m += x;
  m /= n;
  if (xs.size() < 2) return {m, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / (n - 1.0) / n)};
}

inline double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw std::invalid_argument("sample_variance: need at least two values");
  const MeanEstimate e = mean_and_stderr(xs);
  return e.stderr_ * e.stderr_ * static_cast<double>(xs.size());
}

struct DriftEstimate {
  double slope = 0.0;
  double stderr_ = 0.0;
};

inline constexpr std::size_t kMinDriftSamples = 1000;

/// Sample mean of increment / dt with its standard error.
inline DriftEstimate drift_regression(std::span<const double> increments, double dt) {
  if (increments.empty()) throw std::invalid_argument("drift_regression: empty input");
  if (increments.size() < kMinDriftSamples)
    throw std::invalid_argument("drift_regression: need at least 1000 samples");
  if (!(dt > 0.0)) throw std::invalid_argument("drift_regression: dt must be positive");
  const MeanEstimate e = mean_and_stderr(increments);
  return {e.mean / dt, e.stderr_ / dt};
}

inline constexpr std::size_t kMinQvIncrements = 100;

inline double realized_covariation(std::span<const double> dx, std::span<const double> dy) {
  if (dx.size() != dy.size()) throw std::invalid_argument("realized_covariation: length mismatch");
  if (dx.size() < kMinQvIncrements) throw std::invalid_argument("realized_covariation: need at least 100 increments");
  double s = 0.0;
  for (std::size_t i = 0; i < dx.size(); ++i) s += dx[i] * dy[i];
  return s;
}

inline double realized_qv(std::span<const double> dx) { return realized_covariation(dx, dx); }

struct KsResult {
  double statistic = 0.0;
  double critical = 0.0;  // asymptotic critical value at the requested level
  double p_value = 1.0;
  bool pass = true;       // statistic <= critical
};

inline constexpr std::size_t kMinKsSamples = 200;

/// Asymptotic Kolmogorov tail Q(x) = 2 sum_k (-1)^{k-1} exp(-2 k^2 x^2).
inline double kolmogorov_tail(double x) {
  if (x < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// Two-sample KS statistic sup |F_a - F_b| and its asymptotic test.
inline KsResult ks_two_sample(std::span<const double> a, std::span<const double> b, double alpha = 0.01) {
  if (a.size() < kMinKsSamples || b.size() < kMinKsSamples)
    throw std::invalid_argument("ks_two_sample: need at least 200 samples per set");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  KsResult r;
  r.statistic = d;
  const double ne = n * m / (n + m);
  r.critical = std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(ne);
  const double sq = std::sqrt(ne);
  r.p_value = kolmogorov_tail((sq + 0.12 + 0.11 / sq) * d);
  r.pass = d <= r.critical;
  return r;
}

/// Per-time marginal samples of named observables over an ensemble.
struct EnsembleSummary {
  std::size_t n_paths = 0;
  std::vector<double> times;
  std::map<std::string, std::vector<std::vector<double>>> marginals;  // name -> [time][path]
  std::map<std::string, std::size_t> event_counts;

  EnsembleSummary(std::size_t paths, std::vector<double> grid) : n_paths(paths), times(std::move(grid)) {}

  std::vector<std::vector<double>>& observable(const std::string& name) {
    auto& slot = marginals[name];
    if (slot.empty()) slot.assign(times.size(), std::vector<double>(n_paths, 0.0));
    return slot;
  }
};

// --- gap monitor -----------------------------------------------------------

struct GapSample {
  double min_gap = 0.0;
  bool stopped = false;
};

template <class Frame>
GapSample gap_sample(const PathRecord<Frame>& rec) {
  return {rec.monitors.min_gap, rec.stopped};
}

struct GapReport {
  std::size_t n_paths = 0;
  std::size_t stops = 0;
  std::vector<double> minima;
  std::vector<std::uint32_t> stopped_paths;
  /// Counts of per-path minima in decades [1e-7, 1e-6), ..., [1e1, 1e2);
  /// the first and last bins also absorb everything beyond them.
  std::array<std::size_t, 9> histogram{};
  static constexpr int kFirstDecade = -7;
};

inline GapReport gap_monitor(std::span<const GapSample> paths) {
  GapReport r;
  r.n_paths = paths.size();
  for (std::size_t p = 0; p < paths.size(); ++p) {
    const GapSample& s = paths[p];
    r.minima.push_back(s.min_gap);
    if (s.stopped) {
      ++r.stops;
      r.stopped_paths.push_back(static_cast<std::uint32_t>(p));
    }
    int bin = s.min_gap > 0.0 ? static_cast<int>(std::floor(std::log10(s.min_gap))) - GapReport::kFirstDecade : 0;
    bin = std::clamp(bin, 0, static_cast<int>(r.histogram.size()) - 1);
    ++r.histogram[static_cast<std::size_t>(bin)];
  }
  return r;
}

// --- A/B drift experiment --------------------------------------------------

/// The pair of unit-norm matrices with identical (zero) diagonal: entry
/// (0,1) set in the first, entry (1,2) in the second, embedded in the top-left
/// 3x3 block.
template <int D>
std::pair<Hermitian<D>, Hermitian<D>> counterexample_pair() {
  static_assert(D >= 3, "the counterexample needs dimension at least 3");
  Hermitian<D> a, b;
  const double s = 1.0 / std::sqrt(2.0);
  a.set(0, 1, s);
  b.set(1, 2, s);
  return {a, b};
}

struct AbEntry {
  int index = 0;
  MeanEstimate first;   // E[lambda'_i(h) - lambda'_i(0)] / h, first ensemble
  MeanEstimate second;  // same for the second ensemble
  double difference = 0.0;
  double difference_se = 0.0;
  double predicted = 0.0;  // Phi(Lambda_0, A)_i - Phi(Lambda_0, A~)_i
};

struct AbReport {
  double horizon = 0.0;
  double dt = 0.0;
  std::size_t n_paths = 0;
  std::vector<AbEntry> entries;
  std::size_t gap_floor_stops = 0;

  /// |difference - predicted| <= 3 SE, and for a nonzero prediction the
  /// difference is also more than 5 SE away from zero.
  bool entry_passes(int i) const {
    const AbEntry& e = entries.at(static_cast<std::size_t>(i));
    const bool matches = std::abs(e.difference - e.predicted) <= 3.0 * e.difference_se;
    if (e.predicted == 0.0) return matches;
    return matches && std::abs(e.difference) > 5.0 * e.difference_se;
  }
};

struct AbConfig {
  double horizon = 0.01;
  double dt = 1e-4;
  std::size_t n_paths = 100000;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// Launches two (Lambda, A) ensembles from (lambda0, first) and
/// (lambda0, second), which must share their diagonal, and compares the
/// short-time drift of the eigenvalue velocities diag(A).
template <int D>
AbReport nonmarkov_ab_test(const DiagonalSpectrum<D>& lambda0, const Hermitian<D>& first, const Hermitian<D>& second,
                           const AbConfig& cfg) {
  if (!(cfg.horizon > 0.0) || !(cfg.dt > 0.0)) throw std::invalid_argument("horizon and dt must be positive");
  if (!(min_gap(lambda0) > 0.0)) throw DegenerateSpectrum("lambda0 must have distinct entries");
  const std::int64_t steps = static_cast<std::int64_t>(std::llround(cfg.horizon / cfg.dt));
  const double h = static_cast<double>(steps) * cfg.dt;
  const double floor = 1e-3 * min_gap(lambda0);

  auto run = [&](const Hermitian<D>& a0, std::uint32_t tag, std::vector<std::array<double, D>>& out,
                 std::vector<char>& stopped) {
    out.assign(cfg.n_paths, {});
    stopped.assign(cfg.n_paths, 0);
    parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t p) {
      const NoiseStream stream{cfg.seed, static_cast<std::uint32_t>(p), 0, substream::kEnsembleBase + tag};
      const Hermitian<D> start = normalized(a0);
      LambdaAState<D> s{lambda0, start, 0.0};
      try {
        for (std::int64_t k = 0; k < steps; ++k)
          s = lambda_a_step(s, hermitian_bm_increment<D>(stream.at_step(static_cast<std::uint64_t>(k)), cfg.dt),
                            cfg.dt, floor);
      } catch (const GapFloorStop&) {
        stopped[p] = 1;
      }
      for (int i = 0; i < D; ++i) out[p][i] = (s.a(i, i).real() - start(i, i).real()) / h;
    });
  };

  std::vector<std::array<double, D>> x, y;
  std::vector<char> sx, sy;
  run(first, 0, x, sx);
  run(second, 1, y, sy);

  const DiagonalSpectrum<D> phi_first = phi(lambda0, normalized(first));
  const DiagonalSpectrum<D> phi_second = phi(lambda0, normalized(second));

  AbReport r;
  r.horizon = h;
  r.dt = cfg.dt;
  r.n_paths = cfg.n_paths;
  r.gap_floor_stops = static_cast<std::size_t>(std::count(sx.begin(), sx.end(), 1) + std::count(sy.begin(), sy.end(), 1));
  std::vector<double> col(cfg.n_paths);
  for (int i = 0; i < D; ++i) {
    AbEntry e;
    e.index = i;
    for (std::size_t p = 0; p < cfg.n_paths; ++p) col[p] = x[p][i];
    e.first = mean_and_stderr(col);
    for (std::size_t p = 0; p < cfg.n_paths; ++p) col[p] = y[p][i];
    e.second = mean_and_stderr(col);
    e.difference = e.first.mean - e.second.mean;
    e.difference_se = std::hypot(e.first.stderr_, e.second.stderr_);
    e.predicted = phi_first[i] - phi_second[i];
    r.entries.push_back(e);
  }
  return r;
}

}  // namespace kdbm
