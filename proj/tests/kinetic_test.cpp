#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "kdbm/kinetic.hpp"
#include "kdbm/stats.hpp"
#include "test_util.hpp"

using namespace kdbm;

namespace {

SimConfig config(int d, double dt, double t_max, Scheme scheme = Scheme::ito_euler_project) {
  SimConfig c;
  c.d = d;
  c.dt = dt;
  c.t_max = t_max;
  c.scheme = scheme;
  return c;
}

/// Sup over [0, 1] of the Ito/Heun distance in H and H', both driven by the
/// same Brownian path, sampled on a 1e-5 grid and summed up to step dt.
template <int D>
std::pair<double, double> scheme_gap(double dt, int paths) {
  constexpr double kFine = 1e-5;
  const int m = static_cast<int>(std::llround(dt / kFine));
  const int n = static_cast<int>(std::llround(1.0 / dt));
  double sup_h = 0.0, sup_v = 0.0;
  for (int p = 0; p < paths; ++p) {
    const NoiseStream stream{5, static_cast<std::uint32_t>(p), 0, 0};
    KineticState<D> a = default_initial<D>(stream), b = a;
    double mh = 0.0, mv = 0.0;
    for (int k = 0; k < n; ++k) {
      Hermitian<D> dw;
      for (int j = 0; j < m; ++j) dw += hermitian_bm_increment<D>(stream.at_step(static_cast<std::uint64_t>(k * m + j)), kFine);
      a = kbm_step(a, dw, dt, Scheme::ito_euler_project);
      b = kbm_step(b, dw, dt, Scheme::stratonovich_heun);
      mh = std::max(mh, (a.h - b.h).norm());
      mv = std::max(mv, (a.hdot - b.hdot).norm());
    }
    sup_h += mh / paths;
    sup_v += mv / paths;
  }
  return {sup_h, sup_v};
}

}  // namespace

TEST(DefaultInitial, Dimension2) {
  const auto s = default_initial<2>(NoiseStream{});
  EXPECT_EQ(s.h(0, 0), cplx(0.0));
  EXPECT_EQ(s.h(1, 1), cplx(1.0));
  EXPECT_EQ(s.h(0, 1), cplx(0.0));
  EXPECT_NEAR(s.hdot.norm(), 1.0, 1e-12);
  EXPECT_EQ(s.t, 0.0);
}

TEST(DefaultInitial, SpectrumHasUnitGap) {
  const auto s = default_initial<5>(NoiseStream{3, 1, 0, 0});
  EXPECT_DOUBLE_EQ(min_gap(s.h.diag()), 1.0);
  EXPECT_TRUE(s.h.diag().is_nondecreasing());
}

TEST(KbmStep, ZeroNoiseItoKeepsVelocity) {
  const auto s = default_initial<3>(NoiseStream{1, 0, 0, 0});
  const auto out = kbm_step(s, Hermitian<3>{}, 1e-3, Scheme::ito_euler_project);
  EXPECT_LE((out.hdot - s.hdot).norm(), 1e-15);
  EXPECT_LE((out.h - (s.h + s.hdot * 1e-3)).norm(), 1e-15);
  EXPECT_DOUBLE_EQ(out.t, 1e-3);
}

TEST(KbmStep, RejectsVelocityOffSphere) {
  auto s = default_initial<2>(NoiseStream{});
  s.hdot = s.hdot * 1.01;
  EXPECT_THROW(kbm_step(s, Hermitian<2>{}, 1e-3, Scheme::ito_euler_project), std::invalid_argument);
}

TEST(KbmStep, NonFiniteNoiseIsNumericErrorWithStep) {
  const auto s = default_initial<2>(NoiseStream{});
  Hermitian<2> dw;
  dw.set(0, 0, std::numeric_limits<double>::infinity());
  try {
    kbm_step(s, dw, 1e-3, Scheme::ito_euler_project, 17);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_EQ(e.where(), 17);
  }
}

TEST(KbmStep, UnitVelocityAndUnitSpeed) {
  for (Scheme scheme : {Scheme::ito_euler_project, Scheme::stratonovich_heun}) {
    const NoiseStream stream{9, 0, 0, 0};
    KineticState<4> s = default_initial<4>(stream);
    const Hermitian<4> h0 = s.h;
    const double dt = 1e-3;
    for (int k = 0; k < 2000; ++k) {
      s = kbm_step(s, hermitian_bm_increment<4>(stream.at_step(k), dt), dt, scheme);
      ASSERT_NEAR(s.hdot.norm(), 1.0, 1e-12);
      ASSERT_LE((s.h - h0).norm(), s.t + 1e-12);
    }
  }
}

TEST(SimulateKbm, ZeroHorizonKeepsOnlyInitialState) {
  const NoiseStream stream{1, 0, 0, 0};
  const auto rec = simulate_kbm(default_initial<2>(stream), config(2, 1e-3, 0.0), stream);
  ASSERT_EQ(rec.frames.size(), 1u);
  EXPECT_EQ(rec.times.front(), 0.0);
}

TEST(SimulateKbm, RecordsEveryStrideAndFinalStep) {
  const NoiseStream stream{1, 0, 0, 0};
  auto cfg = config(2, 1e-3, 0.0105);
  const auto rec = simulate_kbm(default_initial<2>(stream), cfg, stream);
  // steps 0, 10 and the partial final step 11
  ASSERT_EQ(rec.times.size(), 3u);
  EXPECT_DOUBLE_EQ(rec.times[1], 0.01);
  EXPECT_DOUBLE_EQ(rec.times[2], 0.0105);
}

TEST(SimulateKbm, SameSeedIsBitIdentical) {
  const NoiseStream stream{77, 4, 0, 0};
  const auto cfg = config(3, 1e-3, 0.2);
  const auto a = simulate_kbm(default_initial<3>(stream), cfg, stream);
  const auto b = simulate_kbm(default_initial<3>(stream), cfg, stream);
  ASSERT_EQ(a.frames.size(), b.frames.size());
  for (std::size_t r = 0; r < a.frames.size(); ++r) {
    EXPECT_EQ(a.frames[r].h.matrix().e, b.frames[r].h.matrix().e);
    EXPECT_EQ(a.frames[r].hdot.matrix().e, b.frames[r].hdot.matrix().e);
  }
}

TEST(SimulateKbm, DimensionMismatchIsRejected) {
  const NoiseStream stream{};
  EXPECT_THROW(simulate_kbm(default_initial<3>(stream), config(2, 1e-3, 0.1), stream), std::invalid_argument);
}

// E <H'_0, H'_t> = exp(-(d^2 - 1) t / 2) for Brownian motion on the unit
// sphere of R^{d^2}: the radial drift coefficient is the decay rate.
TEST(SimulateKbm, VelocityAutocorrelation) {
  constexpr int kPaths = 10000;
  const double dt = 1e-3;
  const auto cfg = config(2, dt, 0.5);
  std::vector<double> at_quarter, at_half;
  for (int p = 0; p < kPaths; ++p) {
    const NoiseStream stream{11, static_cast<std::uint32_t>(p), 0, 0};
    const auto s0 = default_initial<2>(stream);
    run_kbm<2>(s0, cfg, stream, [&](std::int64_t k, const KineticState<2>& s) {
      if (k == 250) at_quarter.push_back(hs_inner(s0.hdot, s.hdot));
      if (k == 500) at_half.push_back(hs_inner(s0.hdot, s.hdot));
    });
  }
  const auto q = mean_and_stderr(at_quarter), h = mean_and_stderr(at_half);
  EXPECT_NEAR(q.mean, std::exp(-1.5 * 0.25), 3 * q.stderr_ + 2e-3);
  EXPECT_NEAR(h.mean, std::exp(-1.5 * 0.5), 3 * h.stderr_ + 2e-3);
}

TEST(KbmStep, ItoRadialDrift) {
  constexpr int kSamples = 100000;
  const double dt = 1e-4;
  std::vector<double> inc;
  for (int p = 0; p < kSamples; ++p) {
    const NoiseStream stream{13, static_cast<std::uint32_t>(p), 0, 0};
    const auto s = default_initial<2>(stream);
    const auto out = kbm_step(s, hermitian_bm_increment<2>(stream, dt), dt, Scheme::ito_euler_project);
    inc.push_back(hs_inner(out.hdot - s.hdot, s.hdot));
  }
  const auto d = drift_regression(inc, dt);
  EXPECT_NEAR(d.slope, -1.5, 3 * d.stderr_);
}

// ||H_{t+dt} - H_t|| / dt tends to ||H'|| = 1. Exact for the Ito scheme, whose
// position update is explicit; within O(dt) for the trapezoidal Heun update.
TEST(KbmStep, DiscreteSpeedTendsToOne) {
  for (double dt : {1e-2, 1e-3, 1e-4}) {
    const NoiseStream stream{21, 0, 0, 0};
    for (Scheme scheme : {Scheme::ito_euler_project, Scheme::stratonovich_heun}) {
      KineticState<3> s = default_initial<3>(stream);
      double worst = 0.0;
      for (int k = 0; k < 200; ++k) {
        const auto next = kbm_step(s, hermitian_bm_increment<3>(stream.at_step(k), dt), dt, scheme);
        worst = std::max(worst, std::abs((next.h - s.h).norm() / dt - 1.0));
        s = next;
      }
      const double bound = scheme == Scheme::ito_euler_project ? 1e-12 : 9.0 * dt;
      EXPECT_LE(worst, bound) << "dt " << dt << " scheme " << to_string(scheme);
    }
  }
}

// Both schemes converge strongly at order 1/2 under this non-commutative
// noise, so their distance shrinks like sqrt(dt) rather than dt.
TEST(KbmStep, SchemeAgreementOrder) {
  const auto [h1, v1] = scheme_gap<2>(1e-3, 20);
  const auto [h2, v2] = scheme_gap<2>(1e-4, 20);
  const double slope_h = std::log10(h1 / h2), slope_v = std::log10(v1 / v2);
  EXPECT_NEAR(slope_h, 0.5, 0.15);
  EXPECT_NEAR(slope_v, 0.5, 0.15);
  EXPECT_LT(h2, 0.01);
}
