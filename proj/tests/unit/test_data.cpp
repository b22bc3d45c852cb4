#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "hold/data.hpp"

using namespace hold;

TEST(Gmm1d, SpecDefaults) {
  Gmm1dSpec s;
  EXPECT_NO_THROW(s.validate());
  EXPECT_NEAR(s.mean(), 0.34 * -0.6575 + 0.33 * 0.2474 + 0.33 * 0.8002, 1e-15);
  EXPECT_NEAR(s.mean(), 0.122158, 1e-12);
  Gmm1dSpec bad;
  bad.weights = {0.5, 0.5, 0.5};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = {};
  bad.stds[1] = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Gmm1d, LogpdfAtFirstMean) {
  Gmm1dSpec s;
  const double x = -0.6575;
  double direct = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double z = (x - s.means[i]) / s.stds[i];
    direct += s.weights[i] / (s.stds[i] * std::sqrt(2 * std::numbers::pi)) * std::exp(-0.5 * z * z);
  }
  EXPECT_NEAR(logpdf_gmm1d(s, x), std::log(direct), 1e-13);
  EXPECT_NEAR(logpdf_gmm1d(s, x), std::log(0.34 / (0.01 * std::sqrt(2 * std::numbers::pi))), 1e-12);
}

TEST(Gmm1d, DegenerateWeights) {
  Gmm1dSpec s;
  s.weights = {1.0, 0.0, 0.0};
  Rng rng(1);
  for (double x : sample_gmm1d(s, 1000, rng)) EXPECT_LT(std::fabs(x - s.means[0]), 0.1);
}

TEST(Gmm1d, EmpiricalMean) {
  Gmm1dSpec s;
  Rng rng(2);
  const std::size_t n = 1000000;
  const auto x = sample_gmm1d(s, n, rng);
  double m = 0.0, m2 = 0.0;
  for (double v : x) m += v, m2 += v * v;
  m /= n;
  const double var = m2 / n - m * m;
  EXPECT_NEAR(m, s.mean(), 4 * std::sqrt(var / n));
}

TEST(Gmm1d, DensityIntegratesToOne) {
  Gmm1dSpec s;
  const double lo = -1.0, hi = 1.2;
  const std::size_t n = 200000;
  const double h = (hi - lo) / n;
  double acc = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * std::exp(logpdf_gmm1d(s, lo + h * i));
  }
  EXPECT_NEAR(acc * h / 3.0, 1.0, 1e-6);
}

TEST(Gmm1d, EntropyOfSingleGaussian) {
  Gmm1dSpec s;
  s.weights = {1.0};
  s.means = {0.3};
  s.stds = {0.05};
  EXPECT_NEAR(entropy_gmm1d(s), 0.5 * std::log(2 * std::numbers::pi * std::exp(1.0) * 0.0025), 1e-9);
  // Well separated components: H = sum w (H_i - log w).
  Gmm1dSpec g;
  double expected = 0.0;
  for (int i = 0; i < 3; ++i)
    expected += g.weights[i] * (0.5 * std::log(2 * std::numbers::pi * std::exp(1.0) * g.stds[i] * g.stds[i]) -
                                std::log(g.weights[i]));
  EXPECT_NEAR(entropy_gmm1d(g), expected, 1e-6);
}

TEST(Dataset, PerElementStreams) {
  Gmm1d g{Gmm1dSpec{}};
  const auto a = g.sample(10, 5);
  const auto b = g.sample(3, 5);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(a[i], b[i]);
  EXPECT_NE(g.sample(10, 6), a);
}

TEST(Swiss, RadiusBoundWithoutNoise) {
  SwissRollSpec s;
  s.noise = 0.0;
  s.centers = {{0.0, 0.0}};
  s.weights = {1.0};
  Rng rng(3);
  const auto x = sample_swiss(s, 10000, rng);
  for (std::size_t i = 0; i < 10000; ++i)
    EXPECT_LE(std::hypot(x[2 * i], x[2 * i + 1]), 0.01 * 4.5 * std::numbers::pi + 1e-15);
}

TEST(Swiss, UniformCentersBalance) {
  SwissRollSpec s;
  s.weights.assign(5, 0.2);
  Rng rng(4);
  const auto m = cluster_masses(sample_swiss(s, 100000, rng), s.centers);
  for (double v : m) EXPECT_NEAR(v, 0.2, 0.01);
}

TEST(Swiss, DefaultWeights) {
  SwissRollSpec s;
  Rng rng(5);
  const auto m = cluster_masses(sample_swiss(s, 100000, rng), s.centers);
  EXPECT_NEAR(m[0], 0.34, 0.01);
  for (int c = 1; c < 5; ++c) EXPECT_NEAR(m[c], 0.165, 0.01);
}

TEST(Swiss, GoldenFixture) {
  SwissRollSpec s;
  Rng rng(2024);
  const auto x = sample_swiss(s, 3, rng);
  // Regression values for seed 2024 with this generator.
  const double golden[6] = {-0.85417294295459634, 0.68913828773320551, 0.045914428688750807, -0.062964176174868769, -0.73008929189995242, 0.74004042418113203};
  for (int i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(x[i], golden[i]) << i;
}

TEST(Swiss, RejectsDuplicateCenters) {
  SwissRollSpec s;
  s.centers[1] = s.centers[0];
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(W1, IdenticalSetsAreZero) {
  const std::vector<double> a{0.3, -1.0, 2.0, 0.5};
  EXPECT_EQ(w1_1d(a, a), 0.0);
}

TEST(W1, FourPointSets) {
  // Sorted coupling: |0-1| + |1-1.5| + |2-2| + |5-3| over 4.
  EXPECT_DOUBLE_EQ(w1_1d(std::vector<double>{2, 0, 5, 1}, std::vector<double>{1.5, 3, 1, 2}), 3.5 / 4);
}

TEST(W1, UnequalSizesMatchCdfIntegral) {
  // {0, 1} vs {0, 0.5, 1, 1.5}: |F_a - F_b| = 1/4 on [0,0.5), 0 on [0.5,1), 1/4 on [1,1.5).
  EXPECT_NEAR(w1_1d(std::vector<double>{0, 1}, std::vector<double>{0, 0.5, 1, 1.5}), 0.25, 1e-15);
  const std::vector<double> a{0.1, 0.7, 0.3};
  std::vector<double> b;
  for (double v : a) b.insert(b.end(), {v, v});
  EXPECT_NEAR(w1_1d(a, b), 0.0, 1e-15);
}

TEST(W1, LocationShift) {
  const std::size_t n = 100000;
  const double delta = 0.3;
  std::vector<double> a(n), b(n);
  Rng ra(6), rb(7);
  for (auto& v : a) v = ra.normal();
  for (auto& v : b) v = delta + rb.normal();
  // MC error of W1 between two N(0,1) samples of size n is O(n^-1/2).
  EXPECT_NEAR(w1_1d(a, b), delta, 3 * std::sqrt(2.0 / n) * 2);
}

TEST(W1ToMixture, PointMassIsMeanAbsoluteDeviation) {
  Gmm1dSpec g{{1.0}, {0.2}, {0.5}};
  // E|X - m| = sigma sqrt(2 / pi)
  EXPECT_NEAR(w1_to_gmm1d(std::vector<double>{0.2}, g), 0.5 * std::sqrt(2.0 / std::numbers::pi), 1e-14);
  // off-centre point: E|X - x0| = sigma [z (2 Phi(z) - 1) + 2 phi(z)], z = (x0 - m) / sigma
  const double z = 1.3;
  const double want = 0.5 * (z * std::erf(z / std::numbers::sqrt2) + 2.0 * std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi));
  EXPECT_NEAR(w1_to_gmm1d(std::vector<double>{0.2 + 0.5 * z}, g), want, 1e-13);
}

TEST(W1ToMixture, QuantileSampleIsClose) {
  const Gmm1dSpec g;
  const auto q = stratified_gmm1d(g, 4000);
  EXPECT_LT(w1_to_gmm1d(q, g), 1e-3);
  std::vector<double> shifted(q);
  for (auto& v : shifted) v += 0.05;
  EXPECT_NEAR(w1_to_gmm1d(shifted, g), 0.05, 1e-3);
}

TEST(W1ToMixture, AgreesWithLargeReferenceSample) {
  const Gmm1dSpec g;
  Rng r(9), s(10);
  const auto a = sample_gmm1d(g, 2000, r);
  const auto ref = sample_gmm1d(g, 400000, s);
  EXPECT_NEAR(w1_to_gmm1d(a, g), w1_1d(a, ref), 2e-3);
}

TEST(SlicedW1, ShiftedCloud) {
  const std::size_t n = 20000;
  std::vector<double> a(2 * n), b(2 * n);
  Rng r(8);
  for (std::size_t i = 0; i < n; ++i) {
    a[2 * i] = r.normal(), a[2 * i + 1] = r.normal();
    b[2 * i] = a[2 * i] + 0.5, b[2 * i + 1] = a[2 * i + 1];
  }
  // Projections shift by 0.5 cos(theta); E|0.5 cos| = 1 / pi.
  Rng dirs(9);
  EXPECT_NEAR(sliced_w1_2d(a, b, 2000, dirs), 1.0 / std::numbers::pi, 0.01);
  Rng dirs2(9);
  EXPECT_EQ(sliced_w1_2d(a, a, 10, dirs2), 0.0);
}

TEST(ClusterMasses, NearestCenter) {
  const std::vector<std::array<double, 2>> c{{0, 0}, {1, 1}};
  const std::vector<double> x{0.1, 0.0, 0.9, 1.2, 0.6, 0.6, -3, -3};
  const auto m = cluster_masses(x, c);
  EXPECT_DOUBLE_EQ(m[0], 0.5);
  EXPECT_DOUBLE_EQ(m[1], 0.5);
}

TEST(Csv, RoundTripsExactly) {
  const auto path = std::filesystem::temp_directory_path() / "hold_csv_test.csv";
  const std::vector<double> v{0.1, -2.5e-300, 1.0 / 3.0, 7.0};
  write_csv(path, v, 2, {"a", "b"});
  std::ifstream is(path);
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "a,b");
  std::vector<double> back;
  while (std::getline(is, line)) {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) back.push_back(std::stod(cell));
  }
  EXPECT_EQ(back, v);
  std::filesystem::remove(path);
}
