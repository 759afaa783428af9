#pragma once

// The acceptance suite: eleven checks, each at its stated sample size and
// tolerance, each reporting one pass/fail verdict with supporting numbers.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "kdbm/experiment.hpp"
#include "kdbm/homogenize.hpp"
#include "kdbm/lambda_a.hpp"
#include "kdbm/spectral.hpp"
#include "kdbm/sphere.hpp"
#include "kdbm/stats.hpp"

namespace kdbm {

struct CriterionResult {
  CriterionResult() = default;
  CriterionResult(int number, std::string name) : id(number), title(std::move(name)) {}

  int id = 0;
  std::string title;
  bool pass = false;
  std::vector<std::string> details;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  int threads = 1;
  std::uint64_t seed = 0;
};

namespace acceptance {

inline std::string num(double x, int digits = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

/// A distinct seed per criterion.
inline std::uint64_t seed_for(const AcceptanceOptions& o, int id) {
  return o.seed ^ (static_cast<std::uint64_t>(id) << 40);
}

/// Least-squares slope of log(err) against log(dt).
inline double log_slope(const std::vector<double>& dt, const std::vector<double>& err) {
  const std::size_t n = dt.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(dt[i]) / n;
    my += std::log(err[i]) / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (std::log(dt[i]) - mx) * (std::log(err[i]) - my);
    sxx += (std::log(dt[i]) - mx) * (std::log(dt[i]) - mx);
  }
  return sxy / sxx;
}

inline CriterionResult diagonalization_fidelity(const AcceptanceOptions& o) {
  CriterionResult r{1, "Diagonalization fidelity (d=3, dt=1e-4, horizon 1, 100 paths)"};
  constexpr std::size_t kPaths = 100;
  SimConfig cfg;
  cfg.d = 3;
  cfg.dt = 1e-4;
  cfg.t_max = 1.0;
  cfg.record_stride = 100;
  std::vector<double> residual(kPaths), eig_err(kPaths);
  std::vector<char> stopped(kPaths);
  std::vector<std::size_t> frames(kPaths);
  parallel_for(kPaths, o.threads, [&](std::size_t p) {
    const NoiseStream stream{seed_for(o, 1), static_cast<std::uint32_t>(p), 0, substream::kStep};
    const auto rec = simulate_spectral<3>(default_initial<3>(stream), cfg, stream);
    residual[p] = rec.monitors.max_offdiag_residual;
    stopped[p] = rec.stopped;
    frames[p] = rec.frames.size();
    for (const auto& f : rec.frames) {
      const auto ev = eig_hermitian(f.kinetic.h).values;
      const auto lam = f.spectral.lambda.sorted();
      for (int i = 0; i < 3; ++i) eig_err[p] = std::max(eig_err[p], std::abs(lam[i] - ev[i]));
    }
  });
  const double sup_res = *std::max_element(residual.begin(), residual.end());
  const double sup_eig = *std::max_element(eig_err.begin(), eig_err.end());
  const auto stops = std::count(stopped.begin(), stopped.end(), 1);
  r.pass = sup_res <= 1e-4 && sup_eig <= 1e-6 && stops == 0;
  r.details.push_back("sup_t ||offdiag(U*HU)||_F over all steps and paths = " + num(sup_res) + " (limit 1e-4)");
  r.details.push_back("max |sorted Lambda - eigensolver| over " + std::to_string(frames[0]) +
                      " frames/path = " + num(sup_eig) + " (limit 1e-6)");
  r.details.push_back("gap-floor stops: " + std::to_string(stops));
  return r;
}

inline CriterionResult pathwise_coupling(const AcceptanceOptions& o) {
  CriterionResult r{2, "Pathwise coupling of (Lambda, A) with the spectral flow (d=3)"};
  const std::vector<double> dts{2e-4, 1e-4, 5e-5};
  std::vector<double> errs;
  for (double dt : dts) errs.push_back(coupling_error<3>(dt, 5e-5, 1.0, 16, seed_for(o, 2), o.threads));
  const double slope = log_slope(dts, errs);
  r.pass = std::abs(slope - 1.0) <= 0.2;
  for (std::size_t i = 0; i < dts.size(); ++i)
    r.details.push_back("dt = " + num(dts[i]) + ": mean sup error " + num(errs[i]));
  r.details.push_back("log-log slope " + num(slope) + " (required 1 +- 0.2)");
  return r;
}

inline CriterionResult d2_brackets(const AcceptanceOptions& o) {
  CriterionResult r{3, "d=2 martingale brackets (1e4 paths, horizon 0.1, lambda' = -mu' = 0.6 at t = 0)"};
  constexpr std::size_t kPaths = 10000;
  const double dt = 1e-4, horizon = 0.1;
  const auto n = static_cast<std::int64_t>(std::llround(horizon / dt));
  struct Sums {
    double qv_l = 0, qv_m = 0, cov = 0, int_l = 0, int_m = 0, int_c = 0;
  };
  std::vector<Sums> per(kPaths);
  parallel_for(kPaths, o.threads, [&](std::size_t p) {
    const NoiseStream stream{seed_for(o, 3), static_cast<std::uint32_t>(p), 0, substream::kStep};
    // Fixed start with -lambda' mu' = 0.36: from a uniform velocity the
    // covariation integral averages to zero and a relative error is meaningless.
    D2State s;
    s.lam = 0.0, s.mu = 1.0, s.lamdot = 0.6, s.mudot = -0.6;
    s.offdiag_sq = 0.28, s.re12 = std::sqrt(0.14), s.im12 = 0.0;
    std::vector<double> ml, mm;
    ml.reserve(n);
    mm.reserve(n);
    Sums& z = per[p];
    const double c = sphere_ito_drift<2>();
    for (std::int64_t k = 0; k < n; ++k) {
      const auto v = vector_bm_increment(stream.at_step(static_cast<std::uint64_t>(k)), 4, dt);
      const D2State next = d2_step(s, {v[0], v[1], v[2], v[3]}, dt);
      const double g = s.lam - s.mu;
      ml.push_back(next.lamdot - s.lamdot - (s.offdiag_sq / g - c * s.lamdot) * dt);
      mm.push_back(next.mudot - s.mudot - (-s.offdiag_sq / g - c * s.mudot) * dt);
      z.int_l += (1.0 - s.lamdot * s.lamdot) * dt;
      z.int_m += (1.0 - s.mudot * s.mudot) * dt;
      z.int_c += -s.lamdot * s.mudot * dt;
      s = next;
    }
    z.qv_l = realized_qv(ml);
    z.qv_m = realized_qv(mm);
    z.cov = realized_covariation(ml, mm);
  });
  Sums t;
  for (const auto& z : per) {
    t.qv_l += z.qv_l, t.qv_m += z.qv_m, t.cov += z.cov;
    t.int_l += z.int_l, t.int_m += z.int_m, t.int_c += z.int_c;
  }
  const double rl = t.qv_l / t.int_l, rm = t.qv_m / t.int_m, rc = t.cov / t.int_c;
  r.pass = std::abs(rl - 1) <= 0.05 && std::abs(rm - 1) <= 0.05 && std::abs(rc - 1) <= 0.05;
  r.details.push_back("<M^lambda> / int (1 - lambda'^2) dt = " + num(rl));
  r.details.push_back("<M^mu> / int (1 - mu'^2) dt = " + num(rm));
  r.details.push_back("<M^lambda, M^mu> / int (-lambda' mu') dt = " + num(rc) + " (each within 5% of 1)");
  return r;
}

inline CriterionResult d2_markov_control(const AcceptanceOptions& o) {
  CriterionResult r{4, "d=2 Markovianity control"};
  std::mt19937_64 g(seed_for(o, 4));
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst = 0.0;
  for (std::uint32_t rep = 0; rep < 1000; ++rep) {
    DiagonalSpectrum<2> l;
    do {
      l[0] = u(g);
      l[1] = u(g);
    } while (std::abs(l[0] - l[1]) < 0.05);
    const auto a = uniform_unit_hermitian<2>(NoiseStream{seed_for(o, 4), rep, 0, substream::kInitial});
    const std::array<double, 2> diag{a(0, 0).real(), a(1, 1).real()};
    const auto full = phi(l, a);
    const auto reduced = phi_d2(l.values, diag);
    worst = std::max({worst, std::abs(full[0] - reduced[0]), std::abs(full[1] - reduced[1])});
  }
  const auto [a, b] = detail::control_pair();
  AbConfig cfg;
  cfg.seed = seed_for(o, 4);
  cfg.threads = o.threads;
  const AbReport ab = nonmarkov_ab_test<2>(detail::descending_spectrum<2>(), a, b, cfg);
  r.pass = worst <= 1e-12 && ab.entry_passes(0) && ab.entry_passes(1);
  r.details.push_back("max |phi - phi_d2(diag)| over 1000 states = " + num(worst) + " (limit 1e-12)");
  for (const auto& e : ab.entries)
    r.details.push_back("A/B entry " + std::to_string(e.index + 1) + ": difference " + num(e.difference) + " +- " +
                        num(e.difference_se) + " (1e5 paths per ensemble, expected 0 within 3 SE)");
  return r;
}

inline CriterionResult d3_non_markov(const AcceptanceOptions& o) {
  CriterionResult r{5, "d=3 non-Markovianity A/B test at Lambda = diag(3,2,1)"};
  const auto [a, b] = counterexample_pair<3>();
  AbConfig cfg;
  cfg.seed = seed_for(o, 5);
  cfg.threads = o.threads;
  const auto l = detail::descending_spectrum<3>();
  const AbReport ab = nonmarkov_ab_test<3>(l, a, b, cfg);
  r.pass = ab.entry_passes(0) && ab.entry_passes(1);
  for (const auto& e : ab.entries)
    r.details.push_back("entry " + std::to_string(e.index + 1) + ": difference " + num(e.difference) + " +- " +
                        num(e.difference_se) + ", predicted " + num(e.predicted) +
                        (ab.entry_passes(e.index) ? " (match)" : " (mismatch)"));
  r.details.push_back("unit-norm pair (entries 1/sqrt 2); for entries of size 1 the differences double to " +
                      num(2 * ab.entries[0].predicted) + " and " + num(2 * ab.entries[1].predicted));
  r.details.push_back("gap-floor stops: " + std::to_string(ab.gap_floor_stops));

  cfg.horizon = ab.horizon / 2.0;
  const AbReport half = nonmarkov_ab_test<3>(l, a, b, cfg);
  for (int i = 0; i < 2; ++i) {
    const auto& e = half.entries[static_cast<std::size_t>(i)];
    const double z = (e.difference - ab.entries[static_cast<std::size_t>(i)].difference) /
                     std::hypot(e.difference_se, ab.entries[static_cast<std::size_t>(i)].difference_se);
    r.details.push_back("h/2 stability, entry " + std::to_string(i + 1) + ": " + num(e.difference) + " +- " +
                        num(e.difference_se) + " (z = " + num(z, 3) + ")");
  }
  return r;
}

/// Second central difference with one Richardson extrapolation step, which
/// removes the O(h^2) truncation term.
template <class F>
double second_derivative(F&& f, double x, double h) {
  auto central = [&](double s) { return (f(x + s) - 2.0 * f(x) + f(x - s)) / (s * s); };
  return (4.0 * central(h / 2.0) - central(h)) / 3.0;
}

inline CriterionResult perturbation_identity(const AcceptanceOptions& o) {
  CriterionResult r{6, "Perturbation second derivative vs finite differences (100 random cases, d=4)"};
  std::mt19937_64 g(seed_for(o, 6));
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  double worst = 0.0;
  int failures = 0;
  for (std::uint32_t rep = 0; rep < 100; ++rep) {
    DiagonalSpectrum<4> l;
    do {
      for (auto& v : l.values) v = u(g);
    } while (min_gap(l) < 0.3);
    const auto a = uniform_unit_hermitian<4>(NoiseStream{seed_for(o, 6), rep, 0, substream::kInitial});
    std::array<int, 4> idx{0, 1, 2, 3};
    std::shuffle(idx.begin(), idx.end(), g);
    const int i = idx[0], j = idx[1], k = idx[2];
    for (double eps : {0.0, 0.3}) {
      auto f = [&](double e) { return phi(l, perturbed(a, i, j, k, e))[i]; };
      const double fd = second_derivative(f, eps, 2e-3);
      const double closed = phi_perturbation_d2de2(l, a, i, j, k, eps);
      const double rel = std::abs(fd - closed) / std::max(1.0, std::abs(closed));
      worst = std::max(worst, rel);
      failures += rel > 1e-6;
    }
  }
  r.pass = failures == 0;
  r.details.push_back("max |fd - closed| / max(1, |closed|) = " + num(worst) + " (limit 1e-6), failures " +
                      std::to_string(failures) + "/200");
  return r;
}

inline CriterionResult spherical_projection(const AcceptanceOptions& o) {
  CriterionResult r{7, "Spherical projection laws (n=9, k=3)"};
  bool ok = true;
  for (double r2 : {0.25, 0.5, 0.75}) {
    const auto law = pinned_projection_law(9, 3, r2, 1e-3, 200000, seed_for(o, 7), o.threads);
    const double drift = 3.0 - 9.0 * r2, diff = 4.0 * r2 * (1.0 - r2);
    const double ed = std::abs(law.drift.mean - drift) / std::abs(drift);
    const double es = std::abs(law.diffusion_sq.mean - diff) / diff;
    ok = ok && ed <= 0.05 && es <= 0.05;
    r.details.push_back("r^2 = " + num(r2) + ": drift " + num(law.drift.mean) + " vs " + num(drift) +
                        ", squared diffusion " + num(law.diffusion_sq.mean) + " vs " + num(diff) +
                        " (relative errors " + num(ed, 2) + ", " + num(es, 2) + ")");
  }
  const std::vector<double> times{0.5, 1.0};
  const auto direct = direct_projection_marginals(9, 3, 0.5, 1e-3, times, 10000, seed_for(o, 7) + 1, o.threads);
  const auto skew = skew_product_marginals(9, 3, 0.5, 1e-3, times, 10000, seed_for(o, 7) + 2, o.threads);
  for (std::size_t j = 0; j < times.size(); ++j) {
    const auto kr = ks_two_sample(direct.r_sq[j], skew.r_sq[j]);
    const auto kt = ks_two_sample(direct.theta1[j], skew.theta1[j]);
    ok = ok && kr.pass && kt.pass;
    r.details.push_back("t = " + num(times[j]) + ": KS r^2 " + num(kr.statistic) + ", KS theta_1 " +
                        num(kt.statistic) + " (critical " + num(kr.critical) + ")");
  }
  r.details.push_back("skew-product boundary clamps: " + std::to_string(skew.boundary_touches));
  r.pass = ok;
  return r;
}

/// 2 int_0^inf (1/n) exp(-(n - 1) s / 2) ds by the trapezoidal rule.
inline double green_kubo_integral(int d) {
  const double n = static_cast<double>(d) * d, rate = (n - 1.0) / 2.0;
  const int m = 200000;
  const double ds = 60.0 / rate / m;
  double sum = 0.0;
  for (int i = 0; i <= m; ++i) sum += ((i == 0 || i == m) ? 0.5 : 1.0) * std::exp(-rate * i * ds) / n;
  return 2.0 * sum * ds;
}

inline CriterionResult effective_diffusivity_check(const AcceptanceOptions& o) {
  CriterionResult r{8, "Effective diffusivity (1e3 paths, T = 50)"};
  bool ok = true;
  auto run = [&](auto dim) {
    constexpr int D = decltype(dim)::value;
    SimConfig cfg;
    cfg.d = D;
    cfg.dt = 1e-2;
    cfg.t_max = 50.0;
    const auto disp = simulate_displacements<D>(cfg, 1000, seed_for(o, 8) + D, o.threads);
    const auto est = effective_diffusivity<D>(disp, cfg.t_max);
    const double target = predicted_diffusivity(D), oracle = green_kubo_integral(D);
    const double rel = std::abs(est.sigma_sq - target) / target;
    ok = ok && rel <= 0.10 && std::abs(oracle - target) <= 1e-8;
    r.details.push_back("d = " + std::to_string(D) + ": sigma^2 = " + num(est.sigma_sq) + " +- " + num(est.stderr_) +
                        ", predicted " + num(target) + " (Green-Kubo integral " + num(oracle, 10) +
                        "), relative error " + num(rel, 2));
  };
  run(Dim<2>{});
  run(Dim<3>{});
  r.pass = ok;
  return r;
}

inline double max_ks(const DysonReport& rep, double t) {
  double m = 0.0;
  for (const auto& c : rep.tests)
    if (std::abs(c.time - t) < 1e-12) m = std::max(m, c.ks.statistic);
  return m;
}

inline CriterionResult homogenization(const AcceptanceOptions& o) {
  CriterionResult r{9, "Homogenization vs scaled Dyson reference (d=2, L=30, 2e3 paths)"};
  constexpr std::size_t kPaths = 2000;
  const auto& grid = detail::homogenization_grid();
  SimConfig cfg;
  cfg.d = 2;
  cfg.dt = 1e-2;
  const std::uint64_t seed = seed_for(o, 9);
  const auto reference = dyson_ensemble<2>(grid, kPaths, seed, o.threads);
  const double sigma_sq = predicted_diffusivity(2);

  const auto at30 = simulate_rescaled<2>(cfg, 30.0, grid, kPaths, seed, o.threads);
  const DysonReport main = compare_to_dyson<2>(at30, reference, sigma_sq);
  for (const auto& c : main.tests)
    r.details.push_back("L = 30, t = " + num(c.time) + ", " + c.observable + ": KS " + num(c.ks.statistic) +
                        " (critical " + num(c.ks.critical) + ")" + (c.ks.pass ? "" : " FAIL"));

  const auto at1 = simulate_rescaled<2>(cfg, 1.0, grid, kPaths, seed + 1, o.threads);
  const DysonReport control = compare_to_dyson<2>(at1, reference, sigma_sq);
  for (const auto& c : control.tests)
    if (c.observable == "gap")
      r.details.push_back("L = 1 control, t = " + num(c.time) + ", gap: KS " + num(c.ks.statistic) +
                          (c.ks.pass ? " (passes)" : " (fails, as required)"));

  // Step-size check: the same scale at 2 dt.
  SimConfig coarse = cfg;
  coarse.dt = 2.0 * cfg.dt;
  const auto at30_coarse = simulate_rescaled<2>(coarse, 30.0, grid, kPaths, seed + 2, o.threads);
  const DysonReport coarse_rep = compare_to_dyson<2>(at30_coarse, reference, sigma_sq);
  r.details.push_back("dt = " + num(coarse.dt) + " rerun: " + (coarse_rep.all_pass() ? "all KS tests pass" : "some KS tests fail") +
                      ", max KS at t = 1: " + num(max_ks(coarse_rep, 1.0)) + " vs " + num(max_ks(main, 1.0)));

  // Monotone improvement in L (informational).
  std::string trend = "max KS at t = 1 for L = 3, 10, 30:";
  for (double l : {3.0, 10.0}) {
    const auto paths = simulate_rescaled<2>(cfg, l, grid, kPaths, seed + 3 + static_cast<std::uint64_t>(l), o.threads);
    trend += " " + num(max_ks(compare_to_dyson<2>(paths, reference, sigma_sq), 1.0));
  }
  trend += " " + num(max_ks(main, 1.0));
  r.details.push_back(trend);

  r.pass = main.all_pass() && !control.gap_pass();
  return r;
}

inline CriterionResult no_collision(const AcceptanceOptions& o) {
  CriterionResult r{10, "No-collision monitor (d=3, 1e3 paths, horizon 1, initial gap 1, floor 1e-3)"};
  constexpr std::size_t kPaths = 1000;
  SimConfig cfg;
  cfg.d = 3;
  cfg.dt = 1e-3;
  cfg.t_max = 1.0;
  cfg.gap_floor = 1e-3;
  cfg.record_stride = std::numeric_limits<int>::max();
  const std::uint64_t seed = seed_for(o, 10);
  auto run = [&](const SimConfig& c, std::size_t p) {
    const NoiseStream stream{seed, static_cast<std::uint32_t>(p), 0, substream::kStep};
    return gap_sample(run_spectral<3>(default_initial<3>(stream), c, stream, [](std::int64_t, const SpectralFrame<3>&) {}));
  };
  std::vector<GapSample> samples(kPaths);
  parallel_for(kPaths, o.threads, [&](std::size_t p) { samples[p] = run(cfg, p); });
  const GapReport rep = gap_monitor(samples);
  SimConfig half = cfg;
  half.dt = cfg.dt / 2.0;
  std::size_t cleared = 0;
  for (auto p : rep.stopped_paths) cleared += !run(half, p).stopped;
  r.pass = rep.stops <= 1 && cleared == rep.stops;
  r.details.push_back("dt = " + num(cfg.dt) + ": gap-floor stops " + std::to_string(rep.stops) + ", cleared at dt/2: " +
                      std::to_string(cleared));
  r.details.push_back("smallest per-path minimum gap " + num(*std::min_element(rep.minima.begin(), rep.minima.end())));
  std::string hist = "histogram of per-path minima by decade from 1e-7:";
  for (auto c : rep.histogram) hist += " " + std::to_string(c);
  r.details.push_back(hist);
  return r;
}

inline std::vector<ExperimentSpec> determinism_specs(std::uint64_t seed) {
  std::vector<ExperimentSpec> specs;
  auto base = [&](Command c, int d, double dt, double t_max, std::size_t paths) {
    ExperimentSpec s;
    s.command = c;
    s.sim.d = d;
    s.sim.dt = dt;
    s.sim.t_max = t_max;
    s.paths = paths;
    s.seed = seed;
    return s;
  };
  specs.push_back(base(Command::simulate, 3, 1e-3, 0.2, 6));
  auto heun = base(Command::simulate, 2, 1e-3, 0.2, 6);
  heun.sim.scheme = Scheme::stratonovich_heun;
  specs.push_back(heun);
  specs.push_back(base(Command::spectral, 4, 1e-3, 0.2, 6));
  specs.push_back(base(Command::lambda_a, 3, 1e-3, 0.2, 6));
  specs.push_back(base(Command::d2, 2, 1e-3, 0.2, 6));
  specs.push_back(base(Command::spherical, 3, 1e-3, 0.2, 6));
  auto hom = base(Command::homogenize, 2, 1e-2, 1.0, 1000);
  hom.scale_L = 2.0;
  specs.push_back(hom);
  specs.push_back(base(Command::markov_test, 3, 1e-4, 1e-2, 200));
  return specs;
}

inline CriterionResult determinism(const AcceptanceOptions& o) {
  CriterionResult r{11, "Determinism across reruns and thread counts"};
  bool ok = true;
  for (ExperimentSpec spec : determinism_specs(seed_for(o, 11))) {
    spec.threads = 1;
    const ExperimentOutput a = run_command(spec);
    const ExperimentOutput b = run_command(spec);
    spec.threads = 4;
    const ExperimentOutput c = run_command(spec);
    const bool same = a.paths_csv == b.paths_csv && a.summary_csv == b.summary_csv && a.paths_csv == c.paths_csv &&
                      a.summary_csv == c.summary_csv;
    ok = ok && same;
    r.details.push_back(std::string(to_string(spec.command)) + " d=" + std::to_string(spec.sim.d) + ": " +
                        std::to_string(a.paths_csv.size() + a.summary_csv.size()) + " bytes, " +
                        (same ? "identical" : "DIFFERENT") + " for threads 1, 1, 4");
  }
  r.pass = ok;
  return r;
}

}  // namespace acceptance

struct Criterion {
  int id;
  std::function<CriterionResult(const AcceptanceOptions&)> run;
};

inline std::vector<Criterion> acceptance_criteria() {
  using namespace acceptance;
  return {{1, diagonalization_fidelity}, {2, pathwise_coupling},  {3, d2_brackets},
          {4, d2_markov_control},        {5, d3_non_markov},      {6, perturbation_identity},
          {7, spherical_projection},     {8, effective_diffusivity_check}, {9, homogenization},
          {10, no_collision},            {11, determinism}};
}

inline std::string format_result(const CriterionResult& r) {
  std::string s = std::string(r.pass ? "[PASS] " : "[FAIL] ") + std::to_string(r.id) + ". " + r.title + " (" +
                  acceptance::num(r.seconds, 3) + " s)\n";
  for (const auto& d : r.details) s += "         " + d + "\n";
  return s;
}

/// Runs the selected criteria (all when `only` is empty), calling on_result
/// after each one.
inline std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& o, const std::vector<int>& only,
                                                   const std::function<void(const CriterionResult&)>& on_result) {
  std::vector<CriterionResult> out;
  for (const auto& c : acceptance_criteria()) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = c.run(o);
    } catch (const std::exception& e) {
      r.id = c.id;
      r.title = "criterion " + std::to_string(c.id);
      r.pass = false;
      r.details.push_back(std::string("error: ") + e.what());
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (on_result) on_result(r);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace kdbm
