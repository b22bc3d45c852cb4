#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hold/kernel.hpp"
#include "hold/oracle.hpp"
#include "hold/rng.hpp"

using namespace hold;

namespace {

HoldParams defaults() { return HoldParams{}; }

HoldParams long_horizon() {
  HoldParams p;
  p.T = 60.0;
  return p;
}

double det3(const Mat3& m) {
  return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
         m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

Mat3 to_mat3(const oracle::DenseMatrix& d) {
  Mat3 m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = d(i, j);
  return m;
}

// Values from a 40-digit mpmath evaluation of expm and quadrature of the
// covariance integral (L = 2, alpha = 0.04, x0 = (1,0,0), t = 0.5).
constexpr double kMu05[3] = {0.89213284701291383029, -0.37950412481845901603, 0.14847199963013160287};
constexpr double kSigma05[3][3] = {
    {0.022337180234687170056, 0.070257893768157741639, -0.0015384100590012289801},
    {0.070257893768157741639, 0.2963457014485345809, 0.10831055034464615187},
    {-0.0015384100590012289801, 0.10831055034464615187, 0.43647341036517173215}};
constexpr double kEll05 = 1.9371632198384496503;
// Noise-only covariance at t = 1e-3.
constexpr double kNoise1e3[3][3] = {{2.990017478770005302e-15, 7.4700611650900160984e-12, 3.1433552927872735601e-9},
                                    {7.4700611650900160984e-12, 1.9910207675384299586e-8, 9.4300784754044020076e-6},
                                    {3.1433552927872735601e-9, 9.4300784754044020076e-6, 0.00596412371846520402}};

}  // namespace

TEST(DriftMatrix, ForwardDefaults) {
  const Mat3 f = drift_matrix(defaults(), Direction::forward).entries;
  const double g = std::sqrt(10.0);
  const Mat3 expected{{0, 1, 0, -1, 0, g, 0, -g, -6}};
  EXPECT_EQ(max_abs_diff(f, expected), 0.0);
}

TEST(DriftMatrix, ReverseIsNegation) {
  const Mat3 f = drift_matrix(defaults(), Direction::forward).entries;
  const Mat3 r = drift_matrix(defaults(), Direction::reverse).entries;
  EXPECT_EQ(max_abs_diff(r, -1.0 * f), 0.0);
}

TEST(DriftMatrix, SplitGeneratorEntries) {
  const Mat3 a = drift_matrix(defaults(), Direction::reverse_split).entries;
  const double g = std::sqrt(10.0);
  const Mat3 expected{{0, -1, 0, 1, 0, -g, 0, g, -6}};
  EXPECT_EQ(max_abs_diff(a, expected), 0.0);
}

TEST(DriftMatrix, EigenvaluesAreMinusOneTwoThree) {
  for (auto dir : {Direction::forward, Direction::reverse_split}) {
    const Mat3 f = drift_matrix(defaults(), dir).entries;
    for (double lambda : {-1.0, -2.0, -3.0}) {
      EXPECT_NEAR(det3(f - lambda * Mat3::identity()), 0.0, 1e-12) << lambda;
    }
  }
}

TEST(HoldParams, RejectsOtherXiGamma) {
  HoldParams p;
  p.xi = 4.0;
  p.gamma = std::sqrt(5.0);
  EXPECT_THROW(p.validate(), std::invalid_argument);
  HoldParams q;
  q.gamma = 3.0;
  EXPECT_THROW(q.validate(), std::invalid_argument);
  HoldParams r;
  r.t_min = r.T;
  EXPECT_THROW(r.validate(), std::invalid_argument);
  HoldParams s;
  s.alpha = 0.7;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(ExpmScalarKernel, IdentityAtZero) {
  for (auto dir : {Direction::forward, Direction::reverse, Direction::reverse_split})
    EXPECT_EQ(max_abs_diff(expm_scalar_kernel(dir, 0.0), Mat3::identity()), 0.0);
}

TEST(ExpmScalarKernel, EntryOneOneAtOne) {
  const double expected = 2.5 * std::exp(-1.0) - 2.0 * std::exp(-2.0) + 0.5 * std::exp(-3.0);
  EXPECT_NEAR(expm_scalar_kernel(Direction::forward, 1.0)(0, 0), expected, 1e-15);
  EXPECT_NEAR(expected, 0.67392157063931239169, 1e-15);
}

TEST(ExpmScalarKernel, DecayAtTen) {
  const Mat3 e = expm_scalar_kernel(Direction::forward, 10.0);
  EXPECT_LE(max_abs(e), 5.0 * std::exp(-10.0));
}

TEST(ExpmScalarKernel, RejectsNegativeTime) {
  EXPECT_THROW(expm_scalar_kernel(Direction::forward, -0.1), std::invalid_argument);
}

TEST(ExpmScalarKernel, MatchesDenseExponential) {
  for (auto dir : {Direction::forward, Direction::reverse_split, Direction::reverse}) {
    const auto m = oracle::DenseMatrix::from(drift_matrix(defaults(), dir).entries);
    for (double t : {1e-6, 1e-3, 0.1, 0.2499, 0.25, 0.5, 1.0, 2.0, 5.0}) {
      if (dir == Direction::reverse && t > 2.0) continue;
      const Mat3 dense = to_mat3(oracle::expm_dense(m, t));
      const double tol = 1e-12 * std::max(1.0, max_abs(dense));
      EXPECT_LE(max_abs_diff(expm_scalar_kernel(dir, t), dense), tol) << "t=" << t;
    }
  }
}

TEST(ExpmScalarKernel, SemigroupProperty) {
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    const double t1 = 5.0 * rng.uniform(), t2 = 5.0 * rng.uniform();
    for (auto dir : {Direction::forward, Direction::reverse_split}) {
      const Mat3 lhs = expm_scalar_kernel(dir, t1 + t2);
      const Mat3 rhs = expm_scalar_kernel(dir, t1) * expm_scalar_kernel(dir, t2);
      EXPECT_LE(max_abs_diff(lhs, rhs), 1e-12);
    }
  }
}

TEST(ExpmScalarKernel, KroneckerLemma) {
  constexpr std::size_t d = 3;
  const Mat3 f = drift_matrix(defaults(), Direction::forward).entries;
  const auto big = oracle::DenseMatrix::kron_identity(f, d);
  for (double t : {0.1, 1.0}) {
    const auto dense = oracle::expm_dense(big, t);
    const Mat3 small = expm_scalar_kernel(Direction::forward, t);
    for (std::size_t i = 0; i < 3 * d; ++i)
      for (std::size_t j = 0; j < 3 * d; ++j) {
        const double expected = (i % d == j % d) ? small(i / d, j / d) : 0.0;
        EXPECT_NEAR(dense(i, j), expected, 1e-12);
      }
  }
}

TEST(TransitionMoments, ZeroTimeIsInitialCondition) {
  PhaseState x0(2, {0.3, -0.2, 1.0, 0.5, -0.7, 0.1});
  const Vec3 s0{{0.1, 0.2, 0.3}};
  const auto km = transition_moments(defaults(), x0, s0, 0.0);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(km.mu[i], x0.data()[i]);
  EXPECT_LE(max_abs_diff(km.sigma, Mat3::diagonal(0.1, 0.2, 0.3)), 1e-15);
}

TEST(TransitionMoments, MatchesHighPrecisionReference) {
  const HoldParams p = defaults();
  PhaseState x0(1, {1.0, 0.0, 0.0});
  const auto km = transition_moments(p, x0, bcsm_sigma0(p), 0.5);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(km.mu[i], kMu05[i], 1e-14);
    // The exponential sums cancel down to O(1e-1) from O(10) terms.
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(km.sigma(i, j), kSigma05[i][j], 5e-14) << i << j;
  }
  EXPECT_NEAR(ell_t(km.sigma), kEll05, 1e-12);
}

TEST(TransitionMoments, StationaryLimit) {
  const HoldParams p = long_horizon();
  PhaseState x0(1, {1.0, 0.5, -0.5});
  const auto km = transition_moments(p, x0, bcsm_sigma0(p), 50.0);
  EXPECT_LE(max_abs_diff(km.sigma, (1.0 / p.L) * Mat3::identity()), 1e-10);
  for (double m : km.mu) EXPECT_LE(std::fabs(m), 1e-10);
}

TEST(TransitionMoments, RejectsTimeOutsideHorizon) {
  const HoldParams p = defaults();
  PhaseState x0(1);
  EXPECT_THROW(transition_moments(p, x0, bcsm_sigma0(p), -1e-3), std::invalid_argument);
  EXPECT_THROW(transition_moments(p, x0, bcsm_sigma0(p), p.T + 1.0), std::invalid_argument);
}

TEST(NoiseCovariance, SmallTimeIsAccurate) {
  const Mat3 n = noise_covariance(defaults(), Direction::forward, 1e-3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(n(i, j) / kNoise1e3[i][j], 1.0, 1e-12) << i << j;
}

TEST(NoiseCovariance, ContinuousAcrossSeriesCutoff) {
  for (auto dir : {Direction::forward, Direction::reverse_split}) {
    const Mat3 below = noise_covariance(defaults(), dir, std::nextafter(0.25, 0.0));
    const Mat3 above = noise_covariance(defaults(), dir, 0.25);
    EXPECT_LE(max_abs_diff(below, above), 1e-13);
  }
}

TEST(NoiseCovariance, SplitGeneratorMatchesMomentOdes) {
  const HoldParams p = defaults();
  const auto drift = drift_matrix(p, Direction::reverse_split);
  const auto ref = oracle::integrate_moment_odes(p, drift, Vec3{}, Mat3{}, 0.05);
  const Mat3 n = noise_covariance(p, Direction::reverse_split, 0.05);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(n(i, j), ref.sigma(i, j), 1e-6 * std::fabs(ref.sigma(i, j)) + 1e-18);
}

TEST(Chol3, Identity) {
  EXPECT_EQ(max_abs_diff(chol3(Mat3::identity()).lower, Mat3::identity()), 0.0);
}

TEST(Chol3, Diagonal) {
  EXPECT_EQ(max_abs_diff(chol3(Mat3::diagonal(4, 9, 16)).lower, Mat3::diagonal(2, 3, 4)), 0.0);
}

TEST(Chol3, ReconstructsTransitionCovariance) {
  const HoldParams p = defaults();
  const Mat3 s = transition_covariance(p, bcsm_sigma0(p), 0.5);
  const Mat3 l = chol3(s).lower;
  EXPECT_LE(max_abs_diff(l * l.transposed(), s), 1e-12 * max_abs(s));
  for (int i = 0; i < 3; ++i) EXPECT_GT(l(i, i), 0.0);
  EXPECT_EQ(l(0, 1), 0.0);
  EXPECT_EQ(l(0, 2), 0.0);
  EXPECT_EQ(l(1, 2), 0.0);
}

TEST(Chol3, RejectsSingularAtTimeZero) {
  const HoldParams p = defaults();
  const Mat3 s = transition_covariance(p, bcsm_sigma0(p), 0.0);
  try {
    chol3(s);
    FAIL() << "expected NotPositiveDefinite";
  } catch (const NotPositiveDefinite& e) {
    EXPECT_EQ(e.pivot(), 0);
  }
  const Mat3 indefinite{{1, 2, 0, 2, 1, 0, 0, 0, 1}};
  EXPECT_THROW(chol3(indefinite), NotPositiveDefinite);
}

TEST(Chol3, SucceedsAcrossUsableTimes) {
  const HoldParams p = defaults();
  for (double lt = std::log(p.t_min); lt <= std::log(p.T); lt += 0.05) {
    const double t = std::exp(lt);
    const Mat3 s = transition_covariance(p, bcsm_sigma0(p), t);
    EXPECT_NO_THROW(chol3(s)) << "t=" << t;
  }
  // Conditioning on the full initial state leaves only the noise integral,
  // whose entries scale as t^5, t^3, t; it still factors at t_min.
  EXPECT_NO_THROW(chol3(transition_covariance(p, Vec3{}, p.t_min)));
}

TEST(EllT, StationaryDiagonal) {
  EXPECT_NEAR(ell_t((1.0 / 2.0) * Mat3::identity()), std::sqrt(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(ell_t(Mat3::identity()), 1.0);
}

TEST(EllT, MatchesSchurComplementFormula) {
  const HoldParams p = defaults();
  for (double t : {0.01, 0.1, 0.5, 2.0}) {
    const Mat3 s = transition_covariance(p, bcsm_sigma0(p), t);
    const double qq = s(0, 0), pq = s(1, 0), sq = s(2, 0), pp = s(1, 1), sp = s(2, 1), ss = s(2, 2);
    const double schur_p = pp - pq * pq / qq;
    const double cross = sp - sq * pq / qq;
    const double formula = 1.0 / std::sqrt(ss - sq * sq / qq - cross * cross / schur_p);
    EXPECT_NEAR(ell_t(s) / formula, 1.0, 1e-9) << "t=" << t;
  }
  const Mat3 s = transition_covariance(p, bcsm_sigma0(p), 0.5);
  EXPECT_NEAR(ell_t(s), 1.0 / chol3(s).lower(2, 2), 1e-12 * ell_t(s));
}

TEST(Perturb, ZeroNoiseGivesMean) {
  const HoldParams p = defaults();
  PhaseState x0(2, {0.4, -0.3, 0.0, 0.0, 0.0, 0.0});
  const std::vector<double> zero(6, 0.0);
  const auto r = perturb(p, x0, bcsm_sigma0(p), 0.7, zero);
  const auto km = transition_moments(p, x0, bcsm_sigma0(p), 0.7);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(r.xt.data()[i], km.mu[i]);
  EXPECT_NEAR(r.ell, ell_t(km.sigma), 1e-14);
}

TEST(Perturb, RejectsTimesOutsideUsableRange) {
  const HoldParams p = defaults();
  PhaseState x0(1);
  const std::vector<double> z(3, 0.0);
  EXPECT_THROW(perturb(p, x0, bcsm_sigma0(p), 0.0, z), std::invalid_argument);
  EXPECT_THROW(perturb(p, x0, bcsm_sigma0(p), p.T * 2, z), std::invalid_argument);
  EXPECT_THROW(perturb(p, x0, bcsm_sigma0(p), 0.5, std::vector<double>(2)), std::invalid_argument);
}

TEST(Perturb, EmpiricalMomentsMatchClosedForm) {
  const HoldParams p = defaults();
  PhaseState x0(1, {1.0, 0.0, 0.0});
  const double t = 0.5;
  const auto km = transition_moments(p, x0, bcsm_sigma0(p), t);
  constexpr std::size_t n = 1000000;
  Rng rng(11);
  std::vector<double> noise(3);
  double sum[3] = {}, sum2[3][3] = {};
  for (std::size_t i = 0; i < n; ++i) {
    for (double& e : noise) e = rng.normal();
    const auto r = perturb(p, x0, bcsm_sigma0(p), t, noise);
    for (int a = 0; a < 3; ++a) {
      const double da = r.xt.data()[a] - km.mu[a];
      sum[a] += da;
      for (int b = 0; b < 3; ++b) sum2[a][b] += da * (r.xt.data()[b] - km.mu[b]);
    }
  }
  for (int a = 0; a < 3; ++a) {
    const double se_mean = std::sqrt(km.sigma(a, a) / n);
    EXPECT_LE(std::fabs(sum[a] / n), 4 * se_mean) << a;
    for (int b = 0; b < 3; ++b) {
      // Var of a product of centered jointly Gaussian variables.
      const double var = km.sigma(a, a) * km.sigma(b, b) + km.sigma(a, b) * km.sigma(a, b);
      EXPECT_LE(std::fabs(sum2[a][b] / n - km.sigma(a, b)), 4 * std::sqrt(var / n)) << a << b;
    }
  }
}

TEST(Perturb, ConditionalScoreIsMinusEllEps) {
  const HoldParams p = defaults();
  Rng rng(3);
  std::vector<double> noise(3);
  double worst = 0.0;
  for (int draw = 0; draw < 1000; ++draw) {
    const double t = 0.1 + (5.0 - 0.1) * rng.uniform();
    PhaseState x0(1, {2.0 * rng.uniform() - 1.0, 0.0, 0.0});
    for (double& e : noise) e = rng.normal();
    const auto r = perturb(p, x0, bcsm_sigma0(p), t, noise);
    const auto km = transition_moments(p, x0, bcsm_sigma0(p), t);
    // Direct solve of Sigma y = x - mu by Cramer's rule; score = -y.
    const Mat3& s = km.sigma;
    double rhs[3];
    for (int i = 0; i < 3; ++i) rhs[i] = r.xt.data()[i] - km.mu[i];
    Mat3 m2 = s;
    for (int i = 0; i < 3; ++i) m2(i, 2) = rhs[i];
    const double score_s = -det3(m2) / det3(s);
    worst = std::max(worst, std::fabs(score_s - (-r.ell * r.eps_s[0])));
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(Prior, LogpdfAtOrigin) {
  HoldParams p;
  p.L = 1.0;
  EXPECT_NEAR(prior_logpdf(p, PhaseState(1)), -1.5 * std::log(2 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(prior_logpdf(p, PhaseState(1)), -2.756815599614018, 1e-12);
}

TEST(Prior, SampleVariance) {
  const HoldParams p = defaults();
  Rng rng(5);
  constexpr std::size_t n = 1000000;
  std::vector<double> noise(3);
  double sum2[3] = {};
  for (std::size_t i = 0; i < n; ++i) {
    for (double& e : noise) e = rng.normal();
    const PhaseState x = prior_sample(p, 1, noise);
    for (int b = 0; b < 3; ++b) sum2[b] += x.data()[b] * x.data()[b];
  }
  for (double s : sum2) EXPECT_NEAR(s / n, 0.5, 4 * 0.5 * std::sqrt(2.0 / n));
}

TEST(Prior, AgreesWithStationaryMoments) {
  const HoldParams p = long_horizon();
  PhaseState x0(1, {0.7, 0.0, 0.0});
  const auto km = transition_moments(p, x0, bcsm_sigma0(p), 50.0);
  EXPECT_LE(max_abs_diff(km.sigma, p.prior_variance() * Mat3::identity()), 1e-10);
}
