#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "kdbm/homogenize.hpp"
#include "test_util.hpp"

using namespace kdbm;

namespace {

SimConfig config(int d, double dt, double t_max, int stride = 10) {
  SimConfig c;
  c.d = d;
  c.dt = dt;
  c.t_max = t_max;
  c.record_stride = stride;
  return c;
}

}  // namespace

// Each Hilbert-Schmidt component of H' has autocorrelation
// (1/n) exp(-(n - 1) s / 2); twice its integral is the diffusivity.
TEST(PredictedDiffusivity, GreenKuboIntegral) {
  for (int d = 2; d <= 8; ++d) {
    const double n = static_cast<double>(d) * d;
    const double rate = (n - 1.0) / 2.0;
    const double upper = 60.0 / rate;
    const int m = 200000;
    const double ds = upper / m;
    double integral = 0.0;
    for (int i = 0; i <= m; ++i) {
      const double w = (i == 0 || i == m) ? 0.5 : 1.0;
      integral += w * std::exp(-rate * i * ds) / n;
    }
    integral *= ds;
    EXPECT_NEAR(predicted_diffusivity(d), 2.0 * integral, 1e-8) << "d " << d;
  }
  EXPECT_DOUBLE_EQ(predicted_diffusivity(2), 1.0 / 3.0);
  EXPECT_THROW(predicted_diffusivity(1), std::invalid_argument);
}

TEST(Rescale, UnitScaleIsEigenvaluesOfThePath) {
  const NoiseStream stream{1, 0, 0, 0};
  const auto rec = simulate_kbm(default_initial<3>(stream), config(3, 1e-3, 1.0), stream);
  const auto r = rescale(rec, 1.0);
  ASSERT_EQ(r.times.size(), rec.times.size());
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    const auto ev = eig_hermitian(rec.frames[k].h).values;
    for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(r.lambda_paths[k][i], ev[i]);
  }
}

TEST(Rescale, ScalesTimeAndSpace) {
  const NoiseStream stream{2, 0, 0, 0};
  const auto rec = simulate_kbm(default_initial<3>(stream), config(3, 1e-3, 4.5), stream);
  const auto r = rescale(rec, 2.0);
  EXPECT_DOUBLE_EQ(r.times.front(), 0.0);
  EXPECT_NEAR(r.times.back(), 1.0, 1e-9);
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    EXPECT_NEAR(r.lambda_paths[k].sum(), rec.frames[k].h.trace() / 2.0, 1e-12);
    EXPECT_TRUE(r.lambda_paths[k].is_nondecreasing());
  }
  EXPECT_THROW(rescale(rec, 3.0), std::invalid_argument);
  EXPECT_THROW(rescale(rec, 0.0), std::invalid_argument);
}

TEST(Rescale, OnGrid) {
  const NoiseStream stream{3, 0, 0, 0};
  const auto rec = simulate_kbm(default_initial<2>(stream), config(2, 1e-3, 4.0), stream);
  const std::vector<double> grid{0.25, 0.5, 1.0};
  const auto r = rescale(rec, 2.0, grid);
  ASSERT_EQ(r.times, grid);
  const auto full = rescale(rec, 2.0);
  // frame at H_{L^2 t} with L^2 = 4: t = 0.25 is time 1, record 100
  EXPECT_EQ(r.lambda_paths[0].values, full.lambda_paths[100].values);
  const std::vector<double> off{0.2501};
  EXPECT_THROW(rescale(rec, 2.0, off), std::invalid_argument);
}

TEST(SimulateRescaled, MatchesDirectRescaling) {
  const std::vector<double> grid{0.5, 1.0};
  const auto cfg = config(2, 1e-2, 0.0);
  const auto paths = simulate_rescaled<2>(cfg, 3.0, grid, 3, 9, 1);
  ASSERT_EQ(paths.size(), 3u);
  const NoiseStream stream{9, 1, 0, 0};
  const auto rec = simulate_kbm(origin_initial<2>(stream), config(2, 1e-2, 9.0, 1), stream);
  const auto direct = rescale(rec, 3.0, grid);
  for (std::size_t j = 0; j < grid.size(); ++j)
    for (int i = 0; i < 2; ++i) EXPECT_NEAR(paths[1].lambda_paths[j][i], direct.lambda_paths[j][i], 1e-12);
}

TEST(SimulateRescaled, GridErrors) {
  const auto cfg = config(2, 1e-2, 0.0);
  const std::vector<double> off{0.5001}, backwards{1.0, 0.5}, empty;
  EXPECT_THROW(simulate_rescaled<2>(cfg, 1.0, off, 1, 0, 1), std::invalid_argument);
  EXPECT_THROW(simulate_rescaled<2>(cfg, 1.0, backwards, 1, 0, 1), std::invalid_argument);
  EXPECT_THROW(simulate_rescaled<2>(cfg, 1.0, empty, 1, 0, 1), std::invalid_argument);
}

TEST(SimulateRescaled, StartsAtOrigin) {
  const auto s = origin_initial<3>(NoiseStream{4, 2, 0, 0});
  EXPECT_EQ(s.h.norm(), 0.0);
  EXPECT_EQ(s.hdot.matrix().e, default_initial<3>(NoiseStream{4, 2, 0, 0}).hdot.matrix().e);
}

TEST(DysonReference, StartsAtZero) {
  const std::vector<double> grid{0.0, 0.5};
  const auto r = dyson_reference<3>(grid, NoiseStream{});
  for (int i = 0; i < 3; ++i) EXPECT_EQ(r.eig_paths[0][i], 0.0);
}

// E Tr W_t^2 = d^2 t and Var Tr W_t = d t.
TEST(DysonReference, SecondMoments) {
  const std::vector<double> grid{0.5, 2.0};
  const auto ens = dyson_ensemble<3>(grid, 5000, 4, 1);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    std::vector<double> sq, tr;
    for (const auto& p : ens) {
      double s = 0.0;
      for (int i = 0; i < 3; ++i) s += p.eig_paths[j][i] * p.eig_paths[j][i];
      sq.push_back(s);
      tr.push_back(p.eig_paths[j].sum());
    }
    const auto m = mean_and_stderr(sq);
    EXPECT_NEAR(m.mean, 9.0 * grid[j], 3 * m.stderr_);
    EXPECT_NEAR(sample_variance(tr), 3.0 * grid[j], 0.05 * 3.0 * grid[j]);
  }
}

// W_t has the law of sqrt(t) W_1.
TEST(DysonReference, SelfSimilar) {
  const std::vector<double> grid{0.25, 1.0};
  const auto ens = dyson_ensemble<3>(grid, 2000, 5, 1);
  const auto other = dyson_ensemble<3>(grid, 2000, 6, 1);
  for (int i = 0; i < 3; ++i) {
    std::vector<double> early, late;
    for (const auto& p : ens) early.push_back(2.0 * p.eig_paths[0][i]);
    for (const auto& p : other) late.push_back(p.eig_paths[1][i]);
    EXPECT_TRUE(ks_two_sample(early, late).pass) << "eigenvalue " << i;
  }
}

TEST(CompareToDyson, ReferenceAgainstItself) {
  const std::vector<double> grid{0.0, 0.5, 1.0};
  const auto a = dyson_ensemble<2>(grid, 1000, 7, 1);
  const auto b = dyson_ensemble<2>(grid, 1000, 8, 1);
  std::vector<RescaledPath<2>> as_rescaled;
  for (const auto& p : a) as_rescaled.push_back({1.0, p.times, p.eig_paths});
  const auto report = compare_to_dyson<2>(as_rescaled, b, 1.0);
  EXPECT_EQ(report.tests.size(), 6u);  // t = 0 skipped; two eigenvalues and the gap
  int failures = 0;
  for (const auto& c : report.tests) failures += !c.ks.pass;
  EXPECT_LE(failures, 1);
  EXPECT_THROW(compare_to_dyson<2>(std::span(as_rescaled).first(999), b, 1.0), std::invalid_argument);
  EXPECT_THROW(compare_to_dyson<2>(as_rescaled, b, 0.0), std::invalid_argument);
}

// E ||H_T - H_0||^2 / (n T) = sigma^2 (1 - (1 - e^{-aT}) / (aT)), a = (n - 1) / 2,
// from integrating the velocity autocorrelation twice.
TEST(EffectiveDiffusivity, FiniteHorizonMatchesAutocorrelation) {
  const double horizon = 20.0;
  const auto disp = simulate_displacements<2>(config(2, 1e-2, horizon), 2000, 10, 1);
  const auto est = effective_diffusivity<2>(disp, horizon);
  const double a = 1.5;
  const double expected = predicted_diffusivity(2) * (1.0 - (1.0 - std::exp(-a * horizon)) / (a * horizon));
  EXPECT_NEAR(est.sigma_sq, expected, 3 * est.stderr_ + 0.01 * expected);
  EXPECT_THROW(effective_diffusivity<2>(std::span(disp).first(10), horizon), std::invalid_argument);
}

TEST(Homogenization, ModerateScaleMatchesDyson) {
  const std::vector<double> grid{0.5, 1.0};
  const auto paths = simulate_rescaled<2>(config(2, 1e-2, 0.0), 10.0, grid, 1000, 11, 1);
  const auto ref = dyson_ensemble<2>(grid, 1000, 12, 1);
  const auto report = compare_to_dyson<2>(paths, ref, predicted_diffusivity(2));
  int failures = 0;
  for (const auto& c : report.tests) failures += !c.ks.pass;
  EXPECT_LE(failures, 1);
}

// At L = 1 the motion is still ballistic and the comparison must fail.
TEST(Homogenization, UnitScaleIsNotBrownian) {
  const std::vector<double> grid{1.0};
  const auto paths = simulate_rescaled<2>(config(2, 1e-2, 0.0), 1.0, grid, 2000, 13, 1);
  const auto ref = dyson_ensemble<2>(grid, 2000, 14, 1);
  EXPECT_FALSE(compare_to_dyson<2>(paths, ref, predicted_diffusivity(2)).gap_pass());
}
