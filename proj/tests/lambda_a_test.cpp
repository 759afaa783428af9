#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "kdbm/lambda_a.hpp"
#include "kdbm/stats.hpp"
#include "test_util.hpp"

using namespace kdbm;

namespace {

std::array<double, 4> d2_noise(const NoiseStream& s, double dt) {
  const auto v = vector_bm_increment(s, 4, dt);
  return {v[0], v[1], v[2], v[3]};
}

D2State d2_start(double lamdot, double mudot, double gap = 1.0) {
  D2State s;
  s.lam = gap;
  s.mu = 0.0;
  s.lamdot = lamdot;
  s.mudot = mudot;
  s.offdiag_sq = 1.0 - lamdot * lamdot - mudot * mudot;
  s.re12 = std::sqrt(s.offdiag_sq / 2.0);
  s.im12 = 0.0;
  return s;
}

}  // namespace

TEST(LambdaAStep, ZeroNoiseDiagonalA) {
  LambdaAState<3> s{DiagonalSpectrum<3>{{0.0, 1.0, 2.0}}, normalized(Hermitian<3>::diagonal({{1.0, -2.0, 2.0}})), 0.0};
  const auto out = lambda_a_step(s, Hermitian<3>{}, 1e-3);
  EXPECT_LE((out.a - s.a).norm(), 1e-15);
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(out.lambda[i], s.lambda[i] + s.a(i, i).real() * 1e-3);
}

TEST(LambdaAStep, UnitNormAfterEveryStep) {
  const NoiseStream stream{2, 0, 0, 0};
  LambdaAState<4> s{kdbm::testing::random_spectrum<4>(0.5), kdbm::testing::random_unit_hermitian<4>(), 0.0};
  for (int k = 0; k < 1000; ++k) {
    s = lambda_a_step(s, hermitian_bm_increment<4>(stream.at_step(k), 1e-4), 1e-4);
    ASSERT_NEAR(s.a.norm(), 1.0, 1e-12);
  }
}

TEST(LambdaAStep, GapFloorStop) {
  LambdaAState<2> s{DiagonalSpectrum<2>{{0.0, 0.01}}, Hermitian<2>::diagonal({{1.0, 0.0}}), 0.0};
  EXPECT_THROW(lambda_a_step(s, Hermitian<2>{}, 0.009, 0.005), GapFloorStop);
}

TEST(CouplingError, RejectsIncommensurateSteps) {
  EXPECT_THROW(coupling_error<2>(1.5e-3, 1e-3, 1.0, 1, 0), std::invalid_argument);
}

TEST(LambdaAStep, PathwiseCouplingIsFirstOrder) {
  const double e1 = coupling_error<3>(4e-3, 1e-3, 1.0, 8, 8);
  const double e2 = coupling_error<3>(2e-3, 1e-3, 1.0, 8, 8);
  const double e3 = coupling_error<3>(1e-3, 1e-3, 1.0, 8, 8);
  EXPECT_NEAR(std::log2(e1 / e2), 1.0, 0.2);
  EXPECT_NEAR(std::log2(e2 / e3), 1.0, 0.2);
}

TEST(D2Step, Errors) {
  EXPECT_THROW(d2_step(d2_start(0.9, 0.9), {0, 0, 0, 0}, 1e-3), InvariantViolation);
  D2State s = d2_start(0.0, 0.0);
  s.mu = s.lam;
  EXPECT_THROW(d2_step(s, {0, 0, 0, 0}, 1e-3), DegenerateSpectrum);
}

TEST(D2Step, BracketCoefficientsAtRest) {
  // lamdot = mudot = 0: both martingales have unit rate and are uncorrelated.
  const D2State s = d2_start(0.0, 0.0);
  const D2Noise n{1.0, 0.0, 0.0, 0.0};
  EXPECT_EQ(d2_martingale(s, n).dm_lambda, 1.0);
  EXPECT_EQ(d2_martingale(s, n).dm_mu, 0.0);
}

// The bracket matrix implied by the martingale coefficients, computed from
// the noise covariance diag(1, 1, 1/2, 1/2).
TEST(D2Step, BracketMatrixFromCoefficients) {
  std::mt19937_64& g = kdbm::testing::rng();
  std::uniform_real_distribution<double> u(-0.7, 0.7), ph(0.0, 6.283185307179586);
  for (int rep = 0; rep < 100; ++rep) {
    D2State s = d2_start(u(g), u(g));
    const double r = std::sqrt(s.offdiag_sq / 2.0), angle = ph(g);
    s.re12 = r * std::cos(angle);
    s.im12 = r * std::sin(angle);
    const std::array<double, 4> var{1.0, 1.0, 0.5, 0.5};
    std::array<double, 4> cl{}, cm{};
    for (int c = 0; c < 4; ++c) {
      D2Noise e{c == 0 ? 1.0 : 0.0, c == 1 ? 1.0 : 0.0, c == 2 ? 1.0 : 0.0, c == 3 ? 1.0 : 0.0};
      const auto m = d2_martingale(s, e);
      cl[c] = m.dm_lambda;
      cm[c] = m.dm_mu;
    }
    double ll = 0, mm = 0, lm = 0;
    for (int c = 0; c < 4; ++c) {
      ll += cl[c] * cl[c] * var[c];
      mm += cm[c] * cm[c] * var[c];
      lm += cl[c] * cm[c] * var[c];
    }
    EXPECT_NEAR(ll, 1.0 - s.lamdot * s.lamdot, 1e-12);
    EXPECT_NEAR(mm, 1.0 - s.mudot * s.mudot, 1e-12);
    EXPECT_NEAR(lm, -s.lamdot * s.mudot, 1e-12);
  }
}

TEST(D2Step, SphereConstraintAlongPath) {
  const NoiseStream stream{4, 0, 0, 0};
  D2State s = d2_start(0.3, -0.2);
  for (int k = 0; k < 5000; ++k) {
    s = d2_step(s, d2_noise(stream.at_step(k), 1e-3), 1e-3);
    ASSERT_NEAR(s.lamdot * s.lamdot + s.mudot * s.mudot + s.offdiag_sq, 1.0, 1e-10);
    ASSERT_NEAR(s.offdiag_sq, 2.0 * (s.re12 * s.re12 + s.im12 * s.im12), 1e-12);
  }
}

TEST(D2Step, RepulsionDriftFromRest) {
  constexpr int kSamples = 100000;
  const double dt = 1e-3;
  std::vector<double> dl, dm;
  const D2State s = d2_start(0.0, 0.0, 1.0);
  for (int p = 0; p < kSamples; ++p) {
    const auto out = d2_step(s, d2_noise(NoiseStream{6, static_cast<std::uint32_t>(p), 0, 0}, dt), dt);
    dl.push_back(out.lamdot - s.lamdot);
    dm.push_back(out.mudot - s.mudot);
  }
  const auto el = drift_regression(dl, dt), em = drift_regression(dm, dt);
  EXPECT_NEAR(el.slope, 1.0, 3 * el.stderr_);
  EXPECT_NEAR(em.slope, -1.0, 3 * em.stderr_);
}

TEST(D2Step, RealizedBrackets) {
  constexpr int kPaths = 2000;
  const double dt = 1e-4, horizon = 0.1;
  const int n = static_cast<int>(std::llround(horizon / dt));
  double qv_l = 0, qv_m = 0, cov = 0, int_l = 0, int_m = 0, int_c = 0;
  for (int p = 0; p < kPaths; ++p) {
    const NoiseStream stream{12, static_cast<std::uint32_t>(p), 0, 0};
    D2State s = d2_start(0.6, 0.5);
    std::vector<double> ml, mm;
    for (int k = 0; k < n; ++k) {
      const D2State next = d2_step(s, d2_noise(stream.at_step(k), dt), dt);
      const double g = s.lam - s.mu;
      ml.push_back(next.lamdot - s.lamdot - (s.offdiag_sq / g - 1.5 * s.lamdot) * dt);
      mm.push_back(next.mudot - s.mudot - (-s.offdiag_sq / g - 1.5 * s.mudot) * dt);
      int_l += (1.0 - s.lamdot * s.lamdot) * dt;
      int_m += (1.0 - s.mudot * s.mudot) * dt;
      int_c += -s.lamdot * s.mudot * dt;
      s = next;
    }
    qv_l += realized_qv(ml);
    qv_m += realized_qv(mm);
    cov += realized_covariation(ml, mm);
  }
  EXPECT_NEAR(qv_l / int_l, 1.0, 0.05);
  EXPECT_NEAR(qv_m / int_m, 1.0, 0.05);
  EXPECT_NEAR(cov / int_c, 1.0, 0.05);
}

TEST(D2FromFull, Consistency) {
  const NoiseStream stream{5, 0, 0, 0};
  SimConfig cfg;
  cfg.d = 2;
  cfg.dt = 1e-4;
  cfg.t_max = 1.0;
  cfg.record_stride = 100;
  const auto rec = simulate_spectral<2>(default_initial<2>(stream), cfg, stream);
  const auto states = d2_from_full(rec);
  ASSERT_EQ(states.size(), rec.frames.size());
  const double sign0 = states.front().lam - states.front().mu;
  for (std::size_t r = 0; r < states.size(); ++r) {
    const auto& s = states[r];
    const auto& a = rec.frames[r].spectral.a;
    EXPECT_NEAR(s.offdiag_sq, 2.0 * std::norm(a(0, 1)), 1e-12);
    EXPECT_NEAR(s.lamdot + s.mudot, rec.frames[r].kinetic.hdot.trace(), 1e-12);
    EXPECT_GT((s.lam - s.mu) * sign0, 0.0);
  }
}

TEST(D2FromFull, WrongDimensionRejected) {
  EXPECT_THROW(d2_from_full(PathRecord<SpectralFrame<3>>{}), std::invalid_argument);
}

// Marginals of (lambda - mu, lamdot, mudot) from the standalone d = 2
// diffusion against those extracted from full matrix simulations.
TEST(D2Step, DistributionMatchesFullSimulation) {
  constexpr int kPaths = 2000;
  const double dt = 1e-3;
  SimConfig cfg;
  cfg.d = 2;
  cfg.dt = dt;
  cfg.t_max = 1.0;
  cfg.record_stride = 250;
  std::array<std::array<std::vector<double>, 3>, 3> full, reduced;  // [time][observable]
  for (int p = 0; p < kPaths; ++p) {
    const NoiseStream stream{31, static_cast<std::uint32_t>(p), 0, 0};
    const auto init = default_initial<2>(stream);
    const auto rec = simulate_spectral<2>(init, cfg, stream);
    ASSERT_FALSE(rec.stopped);
    const auto states = d2_from_full(rec);
    const NoiseStream other{32, static_cast<std::uint32_t>(p), 0, 0};
    D2State s = d2_from_lambda_a(lambda_a_from(spectral_initial(default_initial<2>(other))));
    for (int k = 1; k <= 1000; ++k) {
      s = d2_step(s, d2_noise(other.at_step(k), dt), dt);
      if (k == 250 || k == 500 || k == 1000) {
        const std::size_t j = k == 250 ? 0 : (k == 500 ? 1 : 2);
        const std::size_t r = static_cast<std::size_t>(k / 250);
        const auto& f = states[r];
        full[j][0].push_back(f.lam - f.mu);
        full[j][1].push_back(f.lamdot);
        full[j][2].push_back(f.mudot);
        reduced[j][0].push_back(s.lam - s.mu);
        reduced[j][1].push_back(s.lamdot);
        reduced[j][2].push_back(s.mudot);
      }
    }
  }
  int failures = 0;
  for (int j = 0; j < 3; ++j)
    for (int o = 0; o < 3; ++o) failures += !ks_two_sample(full[j][o], reduced[j][o]).pass;
  // nine tests at level 0.01
  EXPECT_LE(failures, 1);
}
