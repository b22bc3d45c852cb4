#include <gtest/gtest.h>

#include <cmath>

#include "hold/kernel.hpp"
#include "hold/oracle.hpp"

using namespace hold;
using hold::oracle::DenseMatrix;

TEST(ExpmDense, ZeroIsIdentity) {
  const DenseMatrix e = oracle::expm_dense(DenseMatrix(4), 3.0);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(e(i, j), i == j ? 1.0 : 0.0);
}

TEST(ExpmDense, Diagonal) {
  const DenseMatrix e = oracle::expm_dense(DenseMatrix::from(Mat3::diagonal(-1, -2, -3)), 1.0);
  EXPECT_NEAR(e(0, 0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(e(1, 1), std::exp(-2.0), 1e-15);
  EXPECT_NEAR(e(2, 2), std::exp(-3.0), 1e-15);
  EXPECT_EQ(e(0, 1), 0.0);
}

TEST(ExpmDense, Rotation) {
  DenseMatrix m(2);
  m(0, 1) = -1.0;
  m(1, 0) = 1.0;
  const DenseMatrix e = oracle::expm_dense(m, 2.0);
  EXPECT_NEAR(e(0, 0), std::cos(2.0), 1e-14);
  EXPECT_NEAR(e(1, 0), std::sin(2.0), 1e-14);
  EXPECT_NEAR(e(0, 1), -std::sin(2.0), 1e-14);
}

TEST(ExpmDense, RejectsLargeMatrices) {
  EXPECT_THROW(oracle::expm_dense(DenseMatrix(13), 1.0), std::invalid_argument);
}

TEST(MomentOdes, ZeroTime) {
  HoldParams p;
  const Vec3 mu{{1, 2, 3}};
  const Mat3 s = Mat3::diagonal(0.1, 0.2, 0.3);
  const auto r = oracle::integrate_moment_odes(p, drift_matrix(p, Direction::forward), mu, s, 0.0);
  EXPECT_EQ(r.mu[0], 1.0);
  EXPECT_EQ(max_abs_diff(r.sigma, s), 0.0);
}

TEST(MomentOdes, MatchesClosedFormAtHalf) {
  HoldParams p;
  const Vec3 s0 = bcsm_sigma0(p);
  const auto r = oracle::integrate_moment_odes(p, drift_matrix(p, Direction::forward), Vec3{{1, 0, 0}},
                                               Mat3::diagonal(s0[0], s0[1], s0[2]), 0.5);
  const auto km = transition_moments(p, PhaseState(1, {1, 0, 0}), s0, 0.5);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(r.mu[i], km.mu[i], 1e-6 * std::fabs(km.mu[i]));
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(r.sigma(i, j), km.sigma(i, j), 1e-6 * std::fabs(km.sigma(i, j)));
  }
}

TEST(MomentOdes, ApproachesPriorAtFive) {
  HoldParams p;
  const auto r = oracle::integrate_moment_odes(p, drift_matrix(p, Direction::forward), Vec3{{1, 0, 0}}, Mat3{}, 5.0);
  EXPECT_LE(max_abs_diff(r.sigma, 0.5 * Mat3::identity()), 0.05);
  EXPECT_LE(std::fabs(r.mu[0]), 0.05);
}

TEST(MomentOdes, RejectsLongHorizon) {
  HoldParams p;
  EXPECT_THROW(oracle::integrate_moment_odes(p, drift_matrix(p, Direction::forward), Vec3{}, Mat3{}, 11.0),
               std::invalid_argument);
}

TEST(McConfig, Validation) {
  HoldParams p;
  oracle::McConfig c;
  EXPECT_NO_THROW(c.validate(p));
  c.dt = 1e-2;
  EXPECT_THROW(c.validate(p), std::invalid_argument);
  c = {};
  c.n_paths = 100;
  EXPECT_THROW(c.validate(p), std::invalid_argument);
  c = {};
  c.checkpoints = {1.0, 0.5};
  EXPECT_THROW(c.validate(p), std::invalid_argument);
  c = {};
  c.checkpoints = {p.T + 1};
  EXPECT_THROW(c.validate(p), std::invalid_argument);
}

TEST(EmForward, NoiselessTrajectoryTracksMean) {
  HoldParams p;
  oracle::McConfig c;
  c.n_paths = 10000;
  c.dt = 1e-4;
  c.checkpoints = {1.0};
  c.noise_scale = 0.0;
  const PhaseState x0(1, {1, 0, 0});
  const auto em = oracle::em_forward_simulate(p, x0, Vec3{}, c);
  const auto km = transition_moments(p, x0, Vec3{}, 1.0);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(em[0].mean[i], km.mu[i], 1e-3);
  EXPECT_LE(max_abs(em[0].cov), 1e-20);
}

TEST(EmForward, MomentsWithinFourStandardErrors) {
  HoldParams p;
  oracle::McConfig c;
  c.n_paths = 20000;
  c.dt = 1e-3;
  c.checkpoints = {0.5, 1.0};
  c.seed = 42;
  const PhaseState x0(1, {1, 0, 0});
  const auto em = oracle::em_forward_simulate(p, x0, bcsm_sigma0(p), c);
  for (const auto& m : em) {
    const auto km = transition_moments(p, x0, bcsm_sigma0(p), m.t);
    for (int i = 0; i < 3; ++i) {
      // EM bias at dt = 1e-3 is O(dt), well under the bands here.
      EXPECT_LE(std::fabs(m.mean[i] - km.mu[i]), 4 * m.se_mean[i] + 2e-3) << m.t << " " << i;
      for (int j = 0; j < 3; ++j)
        EXPECT_LE(std::fabs(m.cov(i, j) - km.sigma(i, j)), 4 * m.se_cov(i, j) + 2e-3) << m.t << " " << i << j;
    }
  }
}

TEST(EmForward, IndependentOfThreadCount) {
  HoldParams p;
  oracle::McConfig c;
  c.n_paths = 10000;
  c.dt = 1e-3;
  c.checkpoints = {0.2};
  c.seed = 9;
  const PhaseState x0(2, {1, -1, 0, 0, 0, 0});
  const auto a = oracle::em_forward_simulate(p, x0, bcsm_sigma0(p), c);
  c.threads = 3;
  const auto b = oracle::em_forward_simulate(p, x0, bcsm_sigma0(p), c);
  EXPECT_EQ(a[0].mean, b[0].mean);
  EXPECT_EQ(max_abs_diff(a[0].cov, b[0].cov), 0.0);
}

TEST(EmForward, StationaryVariance) {
  HoldParams p;
  p.T = 60;
  oracle::McConfig c;
  c.n_paths = 10000;
  c.dt = 1e-3;
  c.checkpoints = {50.0};
  c.seed = 1;
  const auto em = oracle::em_forward_simulate(p, PhaseState(1, {1, 0, 0}), bcsm_sigma0(p), c);
  for (int i = 0; i < 3; ++i)
    EXPECT_LE(std::fabs(em[0].cov(i, i) - 0.5), 4 * em[0].se_cov(i, i) + 5e-3) << i;
}
