#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "kdbm/stats.hpp"
#include "test_util.hpp"

using namespace kdbm;

namespace {

std::vector<double> normals(std::size_t n, double mean, double sd, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> d(mean, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = d(g);
  return v;
}

}  // namespace

TEST(DriftRegression, ExactDrift) {
  const std::vector<double> inc(1000, 2.5 * 1e-3);
  const auto d = drift_regression(inc, 1e-3);
  EXPECT_NEAR(d.slope, 2.5, 1e-12);
  EXPECT_NEAR(d.stderr_, 0.0, 1e-12);
}

TEST(DriftRegression, NoisyDrift) {
  const double dt = 1e-2;
  auto inc = normals(20000, 0.0, std::sqrt(dt), 3);
  for (auto& x : inc) x += -0.7 * dt;
  const auto d = drift_regression(inc, dt);
  EXPECT_NEAR(d.slope, -0.7, 3 * d.stderr_);
}

TEST(DriftRegression, Errors) {
  EXPECT_THROW(drift_regression({}, 1e-3), std::invalid_argument);
  EXPECT_THROW(drift_regression(std::vector<double>(999, 0.0), 1e-3), std::invalid_argument);
  EXPECT_THROW(drift_regression(std::vector<double>(1000, 0.0), 0.0), std::invalid_argument);
}

TEST(RealizedQv, SmoothPathVanishes) {
  const double dt = 1e-3;
  const std::vector<double> inc(1000, 3.0 * dt);
  EXPECT_NEAR(realized_qv(inc), 0.0, 9.0 * dt + 1e-15);
}

TEST(RealizedQv, BrownianMotionOnUnitInterval) {
  const auto inc = normals(1000, 0.0, std::sqrt(1e-3), 5);
  EXPECT_NEAR(realized_qv(inc), 1.0, 0.1);
}

TEST(RealizedQv, Covariation) {
  const auto a = normals(10000, 0.0, 1e-2, 6);
  auto b = normals(10000, 0.0, 1e-2, 7);
  for (std::size_t i = 0; i < a.size(); ++i) b[i] = 0.6 * a[i] + 0.8 * b[i];
  EXPECT_NEAR(realized_covariation(a, b) / realized_qv(a), 0.6, 0.05);
  EXPECT_THROW(realized_covariation(a, std::vector<double>(3, 0.0)), std::invalid_argument);
  EXPECT_THROW(realized_qv(std::vector<double>(99, 0.0)), std::invalid_argument);
}

TEST(Ks, IdenticalSamples) {
  const auto a = normals(500, 0.0, 1.0, 8);
  const auto r = ks_two_sample(a, a);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.p_value, 1.0);
}

TEST(Ks, ShiftedNormalsFail) {
  const auto r = ks_two_sample(normals(1000, 0.0, 1.0, 9), normals(1000, 3.0, 1.0, 10));
  EXPECT_FALSE(r.pass);
  EXPECT_GT(r.statistic, 0.8);
  EXPECT_LT(r.p_value, 1e-10);
}

TEST(Ks, CriticalValueAtOnePercent) {
  const auto r = ks_two_sample(normals(1000, 0.0, 1.0, 11), normals(500, 0.0, 1.0, 12));
  EXPECT_NEAR(r.critical, 1.6276 * std::sqrt(1500.0 / (1000.0 * 500.0)), 1e-4);
}

// Reference values of the Kolmogorov distribution's upper tail.
TEST(Ks, KolmogorovTail) {
  EXPECT_NEAR(kolmogorov_tail(1.0), 0.26999967, 1e-7);
  EXPECT_NEAR(kolmogorov_tail(1.3580986), 0.05, 1e-6);
  EXPECT_NEAR(kolmogorov_tail(1.6276236), 0.01, 1e-6);
  EXPECT_EQ(kolmogorov_tail(0.0), 1.0);
}

TEST(Ks, StatisticMatchesBruteForce) {
  const auto a = normals(300, 0.0, 1.0, 13), b = normals(400, 0.2, 1.3, 14);
  double best = 0.0;
  for (const auto& pool : {a, b})
    for (double x : pool) {
      double fa = 0, fb = 0;
      for (double v : a) fa += v <= x;
      for (double v : b) fb += v <= x;
      best = std::max(best, std::abs(fa / a.size() - fb / b.size()));
    }
  EXPECT_NEAR(ks_two_sample(a, b).statistic, best, 1e-15);
}

TEST(Ks, SplitHalvesCalibration) {
  int passes = 0;
  constexpr int kReps = 400;
  for (int rep = 0; rep < kReps; ++rep) {
    const auto v = normals(1000, 0.0, 1.0, 1000 + rep);
    passes += ks_two_sample(std::span(v).first(500), std::span(v).last(500)).pass;
  }
  // about 99% expected; 3 sigma below is 98.5%
  EXPECT_GE(passes, 388);
}

TEST(Ks, TooFewSamples) {
  EXPECT_THROW(ks_two_sample(std::vector<double>(199, 0.0), std::vector<double>(500, 0.0)), std::invalid_argument);
}

TEST(GapMonitor, ConstantVelocityPathIsExact) {
  LambdaAState<3> s{DiagonalSpectrum<3>{{0.0, 1.0, 3.0}}, Hermitian<3>::diagonal({{1.0, 0.0, 0.0}}), 0.0};
  const double dt = 0.01;
  double min_gap_seen = min_gap(s.lambda);
  for (int k = 1; k <= 50; ++k) {
    s = lambda_a_step(s, Hermitian<3>{}, dt);
    min_gap_seen = std::min(min_gap_seen, min_gap(s.lambda));
    EXPECT_NEAR(min_gap(s.lambda), 1.0 - k * dt, 1e-12);
  }
  const std::vector<GapSample> samples{{min_gap_seen, false}, {1e-4, true}, {50.0, false}};
  const auto r = gap_monitor(samples);
  EXPECT_EQ(r.n_paths, 3u);
  EXPECT_EQ(r.stops, 1u);
  EXPECT_EQ(r.stopped_paths, std::vector<std::uint32_t>{1});
  EXPECT_NEAR(r.minima[0], 0.5, 1e-12);
  EXPECT_EQ(r.histogram[6], 1u);  // [0.1, 1)
  EXPECT_EQ(r.histogram[3], 1u);  // [1e-4, 1e-3)
  EXPECT_EQ(r.histogram[8], 1u);  // 50 -> [10, 100)
}

TEST(EnsembleSummary, Layout) {
  EnsembleSummary s(4, {0.25, 0.5});
  auto& x = s.observable("gap");
  ASSERT_EQ(x.size(), 2u);
  ASSERT_EQ(x[1].size(), 4u);
  x[1][3] = 7.0;
  EXPECT_EQ(s.observable("gap")[1][3], 7.0);
}

TEST(AbTest, DimensionTwoControlHasNoDifference) {
  Hermitian<2> a, b;
  a.set(0, 0, 0.5);
  b.set(0, 0, 0.5);
  a.set(0, 1, cplx(std::sqrt(0.375), 0.0));
  b.set(0, 1, cplx(0.0, std::sqrt(0.375)));
  AbConfig cfg;
  cfg.n_paths = 5000;
  cfg.seed = 3;
  const auto r = nonmarkov_ab_test<2>(DiagonalSpectrum<2>{{0.0, 1.0}}, a, b, cfg);
  for (int i = 0; i < 2; ++i) {
    EXPECT_EQ(r.entries[i].predicted, 0.0);
    EXPECT_TRUE(r.entry_passes(i)) << r.entries[i].difference << " +- " << r.entries[i].difference_se;
  }
}

TEST(AbTest, DimensionThreeDetectsDifference) {
  const auto [a, b] = counterexample_pair<3>();
  AbConfig cfg;
  cfg.n_paths = 20000;
  cfg.seed = 4;
  const DiagonalSpectrum<3> l{{3.0, 2.0, 1.0}};
  const auto r = nonmarkov_ab_test<3>(l, a, b, cfg);
  EXPECT_DOUBLE_EQ(r.entries[0].predicted, 1.0);
  EXPECT_DOUBLE_EQ(r.entries[1].predicted, -2.0);
  EXPECT_TRUE(r.entry_passes(0)) << r.entries[0].difference << " +- " << r.entries[0].difference_se;
  EXPECT_TRUE(r.entry_passes(1)) << r.entries[1].difference << " +- " << r.entries[1].difference_se;

  const auto swapped = nonmarkov_ab_test<3>(l, b, a, cfg);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(swapped.entries[i].predicted, -r.entries[i].predicted);
    EXPECT_NEAR(swapped.entries[i].difference, -r.entries[i].difference,
                3 * std::hypot(swapped.entries[i].difference_se, r.entries[i].difference_se));
  }
}

TEST(AbTest, DeterministicUnderThreads) {
  const auto [a, b] = counterexample_pair<3>();
  AbConfig cfg;
  cfg.n_paths = 300;
  const DiagonalSpectrum<3> l{{3.0, 2.0, 1.0}};
  const auto r1 = nonmarkov_ab_test<3>(l, a, b, cfg);
  cfg.threads = 3;
  const auto r3 = nonmarkov_ab_test<3>(l, a, b, cfg);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(r1.entries[i].difference, r3.entries[i].difference);
}
