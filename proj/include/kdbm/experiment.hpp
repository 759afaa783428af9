#pragma once

// Experiment orchestration: one ExperimentSpec in, the text of paths.csv and
// summary.csv plus named pass/fail checks out. Rows are produced per path in
// parallel and merged in path order, so the bytes do not depend on the
// thread count.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kdbm/dispatch.hpp"
#include "kdbm/homogenize.hpp"
#include "kdbm/io.hpp"
#include "kdbm/kinetic.hpp"
#include "kdbm/lambda_a.hpp"
#include "kdbm/parallel.hpp"
#include "kdbm/spectral.hpp"
#include "kdbm/sphere.hpp"
#include "kdbm/stats.hpp"

namespace kdbm {

enum class Command { simulate, spectral, lambda_a, d2, spherical, homogenize, markov_test, validate };

inline constexpr std::array<std::string_view, 8> kCommandNames{
    "simulate", "spectral", "lambda-a", "d2", "spherical", "homogenize", "markov-test", "validate"};

inline std::string_view to_string(Command c) { return kCommandNames[static_cast<std::size_t>(c)]; }

inline Command parse_command(std::string_view name) {
  for (std::size_t i = 0; i < kCommandNames.size(); ++i)
    if (kCommandNames[i] == name) return static_cast<Command>(i);
  std::string valid;
  for (auto n : kCommandNames) valid += (valid.empty() ? "" : ", ") + std::string(n);
  throw std::invalid_argument("unknown command '" + std::string(name) + "' (valid: " + valid + ")");
}

/// Commands that stop a path when the eigenvalue gap falls below a floor.
inline bool uses_gap_floor(Command c) {
  return c == Command::spectral || c == Command::lambda_a || c == Command::d2;
}

struct ExperimentSpec {
  Command command = Command::simulate;
  SimConfig sim;
  std::size_t paths = 1;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = ".";
  double scale_L = 10.0;
  int threads = default_threads();

  void validate() const {
    sim.validate();
    if (sim.d < kMinDimension || sim.d > kMaxDimension)
      throw std::invalid_argument("d must be in 2..8");
    if (paths < 1) throw std::invalid_argument("paths must be at least 1");
    if (threads < 1) throw std::invalid_argument("threads must be at least 1");
    if (command == Command::d2 && sim.d != 2) throw std::invalid_argument("d2 needs d = 2");
    if (command == Command::homogenize) {
      if (!(scale_L > 0.0) || !std::isfinite(scale_L)) throw std::invalid_argument("scale-L must be positive");
      if (paths < kMinComparisonPaths) throw std::invalid_argument("homogenize needs paths >= 1000");
    }
    if (command == Command::markov_test) {
      if (paths < 2) throw std::invalid_argument("markov-test needs paths >= 2");
      if (sim.t_max < sim.dt) throw std::invalid_argument("markov-test needs t-max >= dt (t-max is the horizon h)");
    }
  }
};

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// summary.csv rows: an estimate, its standard error and the value it is
/// compared against; NaN where a column does not apply.
class SummaryTable {
 public:
  void add(std::string name, double value, double stderr_ = kNone, double reference = kNone) {
    rows_.push_back({std::move(name), value, stderr_, reference});
  }

  std::string csv(std::string_view description) const {
    CsvWriter w;
    w.comment(std::string(kSummarySchema) + "; " + std::string(description));
    const std::vector<std::string> cols{"name", "value", "stderr", "reference"};
    w.header(cols);
    for (const auto& r : rows_) {
      w.field(r.name).field(r.value).field(r.stderr_).field(r.reference);
      w.end_row();
    }
    return w.str();
  }

  static constexpr double kNone = std::numeric_limits<double>::quiet_NaN();

 private:
  struct Row {
    std::string name;
    double value, stderr_, reference;
  };
  std::vector<Row> rows_;
};

struct ExperimentOutput {
  std::string paths_csv;
  std::string summary_csv;
  std::vector<CheckResult> checks;

  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
  }

  std::string report() const {
    std::string out;
    for (const auto& c : checks) out += std::string(c.pass ? "PASS " : "FAIL ") + c.name + ": " + c.detail + "\n";
    if (checks.empty()) out += "no checks for this command\n";
    return out;
  }
};

/// Everything that determines the output bytes; thread count excluded.
inline std::string describe(const ExperimentSpec& spec) {
  std::string s = "command=" + std::string(to_string(spec.command));
  s += "; d=" + std::to_string(spec.sim.d);
  s += "; dt=" + format_number(spec.sim.dt);
  s += "; t_max=" + format_number(spec.sim.t_max);
  s += "; scheme=" + std::string(to_string(spec.sim.scheme));
  s += "; gap_floor=" + format_number(spec.sim.gap_floor);
  s += "; record_stride=" + std::to_string(spec.sim.record_stride);
  s += "; paths=" + std::to_string(spec.paths);
  s += "; seed=" + std::to_string(spec.seed);
  if (spec.command == Command::homogenize) s += "; scale_L=" + format_number(spec.scale_L);
  return s;
}

namespace detail {

/// Header plus per-path row blocks produced by row_fn(p, writer) in parallel.
template <class RowFn>
std::string paths_csv(const ExperimentSpec& spec, const std::vector<std::string>& cols, RowFn&& row_fn) {
  CsvWriter head;
  head.comment(std::string(kPathsSchema) + "; " + describe(spec));
  head.header(cols);
  std::vector<std::string> blocks(spec.paths);
  parallel_for(spec.paths, spec.threads, [&](std::size_t p) {
    CsvWriter w(cols.size());
    row_fn(p, w);
    blocks[p] = w.str();
  });
  std::string out = head.str();
  for (const auto& b : blocks) out += b;
  return out;
}

inline NoiseStream path_stream(const ExperimentSpec& spec, std::size_t p) {
  return NoiseStream{spec.seed, static_cast<std::uint32_t>(p), 0, substream::kStep};
}

inline std::vector<std::string> leading_columns() { return {"path_id", "t"}; }

inline double max_of(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); }
inline double min_of(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::min_element(v.begin(), v.end()); }

template <int D>
ExperimentOutput run_simulate(const ExperimentSpec& spec) {
  auto cols = leading_columns();
  append_indexed_columns(cols, "lambda", D);
  append_matrix_columns(cols, "h", D);
  append_matrix_columns(cols, "hdot", D);
  std::vector<double> speed_error(spec.paths), final_gap(spec.paths);
  ExperimentOutput out;
  out.paths_csv = paths_csv(spec, cols, [&](std::size_t p, CsvWriter& w) {
    const NoiseStream stream = path_stream(spec, p);
    PathMonitors mon;
    const auto last = run_kbm<D>(default_initial<D>(stream), spec.sim, stream, [&](std::int64_t, const KineticState<D>& s) {
      w.field(std::uint64_t{p}).field(s.t);
      for (double v : eig_hermitian(s.h).values.values) w.field(v);
      w.fields(s.h).fields(s.hdot).end_row();
    }, &mon);
    speed_error[p] = mon.max_sphere_error;
    final_gap[p] = min_gap(eig_hermitian(last.h).values);
  });
  SummaryTable t;
  t.add("max_speed_error", max_of(speed_error));
  const MeanEstimate g = mean_and_stderr(final_gap);
  t.add("final_min_gap", g.mean, g.stderr_);
  out.summary_csv = t.csv(describe(spec));
  return out;
}

template <int D>
ExperimentOutput run_spectral_cmd(const ExperimentSpec& spec) {
  auto cols = leading_columns();
  append_indexed_columns(cols, "lambda", D);
  append_matrix_columns(cols, "a", D);
  cols.push_back("offdiag_residual");
  std::vector<PathMonitors> mon(spec.paths);
  std::vector<char> stopped(spec.paths, 0);
  ExperimentOutput out;
  out.paths_csv = paths_csv(spec, cols, [&](std::size_t p, CsvWriter& w) {
    const NoiseStream stream = path_stream(spec, p);
    const auto rec = run_spectral<D>(default_initial<D>(stream), spec.sim, stream,
                                     [&](std::int64_t, const SpectralFrame<D>& f) {
                                       w.field(std::uint64_t{p}).field(f.kinetic.t);
                                       for (double v : f.spectral.lambda.values) w.field(v);
                                       w.fields(f.spectral.a).field(f.spectral.residual).end_row();
                                     });
    mon[p] = rec.monitors;
    stopped[p] = rec.stopped;
  });
  std::vector<double> residual, unitarity, gaps;
  double refinements = 0;
  for (const auto& m : mon) {
    residual.push_back(m.max_offdiag_residual);
    unitarity.push_back(m.max_unitarity_error);
    gaps.push_back(m.min_gap);
    refinements += static_cast<double>(m.refinements);
  }
  SummaryTable t;
  t.add("max_offdiag_residual", max_of(residual));
  t.add("max_unitarity_error", max_of(unitarity));
  t.add("min_gap", min_of(gaps));
  t.add("gap_floor_stops", static_cast<double>(std::count(stopped.begin(), stopped.end(), 1)));
  t.add("refined_steps", refinements);
  out.summary_csv = t.csv(describe(spec));
  return out;
}

template <int D>
ExperimentOutput run_lambda_a_cmd(const ExperimentSpec& spec) {
  auto cols = leading_columns();
  append_indexed_columns(cols, "lambda", D);
  append_matrix_columns(cols, "a", D);
  std::vector<double> gaps(spec.paths);
  std::vector<char> stopped(spec.paths, 0);
  const SimConfig& cfg = spec.sim;
  ExperimentOutput out;
  out.paths_csv = paths_csv(spec, cols, [&](std::size_t p, CsvWriter& w) {
    const NoiseStream stream = path_stream(spec, p);
    LambdaAState<D> s = lambda_a_from(spectral_initial(default_initial<D>(stream)));
    const double floor = cfg.effective_gap_floor(min_gap(s.lambda));
    auto row = [&] {
      w.field(std::uint64_t{p}).field(s.t);
      for (double v : s.lambda.values) w.field(v);
      w.fields(s.a).end_row();
    };
    row();
    gaps[p] = min_gap(s.lambda);
    for (std::int64_t k = 1; k <= cfg.steps(); ++k) {
      const double h = step_size(cfg, k);
      try {
        s = lambda_a_step(s, hermitian_bm_increment<D>(stream.at_step(static_cast<std::uint64_t>(k - 1)), h), h, floor);
      } catch (const GapFloorStop&) {
        stopped[p] = 1;
        break;
      }
      s.t = step_time(cfg, k);
      gaps[p] = std::min(gaps[p], min_gap(s.lambda));
      if (cfg.records(k)) row();
    }
  });
  SummaryTable t;
  t.add("min_gap", min_of(gaps));
  t.add("gap_floor_stops", static_cast<double>(std::count(stopped.begin(), stopped.end(), 1)));
  out.summary_csv = t.csv(describe(spec));
  return out;
}

inline ExperimentOutput run_d2_cmd(const ExperimentSpec& spec) {
  const std::vector<std::string> cols{"path_id", "t", "lambda", "mu", "lambda_dot", "mu_dot", "offdiag_sq"};
  std::vector<double> sphere_error(spec.paths, 0.0);
  std::vector<char> stopped(spec.paths, 0);
  const SimConfig& cfg = spec.sim;
  ExperimentOutput out;
  out.paths_csv = paths_csv(spec, cols, [&](std::size_t p, CsvWriter& w) {
    const NoiseStream stream = path_stream(spec, p);
    D2State s = d2_from_lambda_a(lambda_a_from(spectral_initial(default_initial<2>(stream))));
    const double floor = cfg.effective_gap_floor(std::abs(s.lam - s.mu));
    auto row = [&] {
      w.field(std::uint64_t{p}).field(s.t).field(s.lam).field(s.mu).field(s.lamdot).field(s.mudot).field(s.offdiag_sq);
      w.end_row();
    };
    row();
    for (std::int64_t k = 1; k <= cfg.steps(); ++k) {
      const double h = step_size(cfg, k);
      const auto v = vector_bm_increment(stream.at_step(static_cast<std::uint64_t>(k - 1)), 4, h);
      s = d2_step(s, {v[0], v[1], v[2], v[3]}, h);
      s.t = step_time(cfg, k);
      sphere_error[p] = std::max(sphere_error[p], s.sphere_error());
      if (std::abs(s.lam - s.mu) < floor) {
        stopped[p] = 1;
        row();
        break;
      }
      if (cfg.records(k)) row();
    }
  });
  SummaryTable t;
  t.add("max_sphere_error", max_of(sphere_error));
  t.add("gap_floor_stops", static_cast<double>(std::count(stopped.begin(), stopped.end(), 1)));
  out.summary_csv = t.csv(describe(spec));
  return out;
}

/// Hilbert-Schmidt coordinates of a Hermitian matrix: the diagonal first,
/// then sqrt(2) (Re, Im) of each upper entry.
template <int D>
std::vector<double> hs_coordinates(const Hermitian<D>& h) {
  std::vector<double> x;
  x.reserve(D * D);
  for (int i = 0; i < D; ++i) x.push_back(h(i, i).real());
  for (int i = 0; i < D; ++i)
    for (int j = i + 1; j < D; ++j) {
      x.push_back(std::numbers::sqrt2 * h(i, j).real());
      x.push_back(std::numbers::sqrt2 * h(i, j).imag());
    }
  return x;
}

/// The velocity H' as Brownian motion on the unit sphere of R^{D^2},
/// projected onto its D diagonal coordinates.
template <int D>
ExperimentOutput run_spherical(const ExperimentSpec& spec) {
  constexpr int n = D * D, k = D;
  auto cols = leading_columns();
  cols.push_back("r_sq");
  append_indexed_columns(cols, "theta", k);
  std::vector<double> final_r(spec.paths);
  const SimConfig& cfg = spec.sim;
  ExperimentOutput out;
  out.paths_csv = paths_csv(spec, cols, [&](std::size_t p, CsvWriter& w) {
    const NoiseStream stream = path_stream(spec, p);
    SphereState x{hs_coordinates(default_initial<D>(stream).hdot), 0.0};
    auto row = [&] {
      const Projection pr = project(x, k);
      w.field(std::uint64_t{p}).field(x.t).field(pr.r_sq);
      for (double v : pr.theta) w.field(v);
      w.end_row();
    };
    row();
    for (std::int64_t s = 1; s <= cfg.steps(); ++s) {
      const double h = step_size(cfg, s);
      x = sphere_bm_step(x, vector_bm_increment(stream.at_step(static_cast<std::uint64_t>(s - 1)), n, h), h);
      x.t = step_time(cfg, s);
      if (cfg.records(s)) row();
    }
    final_r[p] = project(x, k).r_sq;
  });
  SummaryTable t;
  const MeanEstimate m = mean_and_stderr(final_r);
  t.add("final_r_sq", m.mean, m.stderr_, static_cast<double>(k) / n);
  out.summary_csv = t.csv(describe(spec));
  return out;
}

inline const std::vector<double>& homogenization_grid() {
  static const std::vector<double> grid{0.25, 0.5, 1.0};
  return grid;
}

template <int D>
ExperimentOutput run_homogenize(const ExperimentSpec& spec) {
  const auto& grid = homogenization_grid();
  const auto rescaled = simulate_rescaled<D>(spec.sim, spec.scale_L, grid, spec.paths, spec.seed, spec.threads);
  const auto reference = dyson_ensemble<D>(grid, spec.paths, spec.seed, spec.threads);
  const double sigma_sq = predicted_diffusivity(D);
  const DysonReport report = compare_to_dyson<D>(rescaled, reference, sigma_sq);

  auto cols = leading_columns();
  append_indexed_columns(cols, "lambda", D);
  ExperimentOutput out;
  out.paths_csv = paths_csv(spec, cols, [&](std::size_t p, CsvWriter& w) {
    for (std::size_t j = 0; j < grid.size(); ++j) {
      w.field(std::uint64_t{p}).field(rescaled[p].times[j]);
      for (double v : rescaled[p].lambda_paths[j].values) w.field(v);
      w.end_row();
    }
  });
  SummaryTable t;
  t.add("sigma_sq", sigma_sq);
  for (const auto& c : report.tests) {
    const std::string name = "ks_" + c.observable + "_t" + format_number(c.time);
    t.add(name, c.ks.statistic, SummaryTable::kNone, c.ks.critical);
    out.checks.push_back({name, c.ks.pass,
                          "D = " + format_number(c.ks.statistic) + ", critical " + format_number(c.ks.critical) +
                              ", p = " + format_number(c.ks.p_value)});
  }
  out.summary_csv = t.csv(describe(spec));
  return out;
}

/// The d = 2 control pair: unit norm, equal diagonals, off-diagonal entries
/// differing only by phase.
inline std::pair<Hermitian<2>, Hermitian<2>> control_pair() {
  Hermitian<2> a, b;
  a.set(0, 0, 0.5);
  b.set(0, 0, 0.5);
  a.set(0, 1, cplx(std::sqrt(0.375), 0.0));
  b.set(0, 1, cplx(0.0, std::sqrt(0.375)));
  return {a, b};
}

/// diag(D, D - 1, ..., 1).
template <int D>
DiagonalSpectrum<D> descending_spectrum() {
  DiagonalSpectrum<D> l;
  for (int i = 0; i < D; ++i) l[i] = D - i;
  return l;
}

template <int D>
ExperimentOutput run_markov_test(const ExperimentSpec& spec) {
  const auto [first, second] = [] {
    if constexpr (D == 2) return control_pair();
    else return counterexample_pair<D>();
  }();
  AbConfig cfg;
  cfg.horizon = spec.sim.t_max;
  cfg.dt = spec.sim.dt;
  cfg.n_paths = spec.paths;
  cfg.seed = spec.seed;
  cfg.threads = spec.threads;
  const AbReport r = nonmarkov_ab_test<D>(descending_spectrum<D>(), first, second, cfg);

  ExperimentOutput out;
  out.paths_csv = paths_csv(spec, leading_columns(), [](std::size_t, CsvWriter&) {});
  SummaryTable t;
  t.add("horizon", r.horizon);
  t.add("gap_floor_stops", static_cast<double>(r.gap_floor_stops));
  for (const auto& e : r.entries) {
    const std::string idx = std::to_string(e.index + 1);
    t.add("drift_first_" + idx, e.first.mean, e.first.stderr_);
    t.add("drift_second_" + idx, e.second.mean, e.second.stderr_);
    t.add("drift_difference_" + idx, e.difference, e.difference_se, e.predicted);
    out.checks.push_back({"drift difference " + idx, r.entry_passes(e.index),
                          format_number(e.difference) + " +- " + format_number(e.difference_se) + ", predicted " +
                              format_number(e.predicted)});
  }
  out.summary_csv = t.csv(describe(spec));
  return out;
}

}  // namespace detail

/// Runs every command except validate, which needs the acceptance suite.
inline ExperimentOutput run_command(const ExperimentSpec& spec) {
  spec.validate();
  if (spec.command == Command::d2) return detail::run_d2_cmd(spec);
  return with_dimension(spec.sim.d, [&](auto dim) -> ExperimentOutput {
    constexpr int D = decltype(dim)::value;
    switch (spec.command) {
      case Command::simulate: return detail::run_simulate<D>(spec);
      case Command::spectral: return detail::run_spectral_cmd<D>(spec);
      case Command::lambda_a: return detail::run_lambda_a_cmd<D>(spec);
      case Command::spherical: return detail::run_spherical<D>(spec);
      case Command::homogenize: return detail::run_homogenize<D>(spec);
      case Command::markov_test: return detail::run_markov_test<D>(spec);
      default: throw std::invalid_argument("run_command cannot run " + std::string(to_string(spec.command)));
    }
  });
}

}  // namespace kdbm
