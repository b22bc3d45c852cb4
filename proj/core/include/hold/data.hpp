#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hold/analytic_score.hpp"
#include "hold/rng.hpp"

namespace hold {

/// A distribution over q0 that can be sampled one point at a time.
class Dataset {
 public:
  virtual ~Dataset() = default;
  virtual std::size_t dim() const = 0;
  virtual void sample_one(Rng& rng, std::span<double> out) const = 0;
  virtual std::string name() const = 0;

  /// n points; point i uses stream Rng(key, i).
  std::vector<double> sample(std::size_t n, std::uint64_t key) const;
};

struct Gmm1dSpec {
  std::vector<double> weights{0.34, 0.33, 0.33};
  std::vector<double> means{-0.6575, 0.2474, 0.8002};
  std::vector<double> stds{0.01, 0.02, 0.01};

  void validate() const;
  double mean() const;
  std::vector<GaussianComponent> components() const;
};

std::vector<double> sample_gmm1d(const Gmm1dSpec& spec, std::size_t n, Rng& rng);
double logpdf_gmm1d(const Gmm1dSpec& spec, double x);
/// Differential entropy -E[log p] by Simpson's rule on a grid fine enough
/// for the narrowest component.
double entropy_gmm1d(const Gmm1dSpec& spec);
double cdf_gmm1d(const Gmm1dSpec& spec, double x);
/// Inverse CDF by bisection; u in (0, 1).
double quantile_gmm1d(const Gmm1dSpec& spec, double u);
/// Stratified draw: the quantiles at (i + 1/2) / n.
std::vector<double> stratified_gmm1d(const Gmm1dSpec& spec, std::size_t n);

class Gmm1d final : public Dataset {
 public:
  explicit Gmm1d(Gmm1dSpec spec);
  std::size_t dim() const override { return 1; }
  void sample_one(Rng& rng, std::span<double> out) const override;
  std::string name() const override { return "gmm1d"; }
  const Gmm1dSpec& spec() const { return spec_; }

 private:
  Gmm1dSpec spec_;
};

/// Isotropic Gaussian N(mean, variance I); the test problem with a known score.
class GaussianData final : public Dataset {
 public:
  GaussianData(std::vector<double> mean, double variance);
  std::size_t dim() const override { return mean_.size(); }
  void sample_one(Rng& rng, std::span<double> out) const override;
  std::string name() const override { return "gaussian"; }
  std::vector<GaussianComponent> components() const { return {{1.0, mean_, variance_}}; }
  double variance() const { return variance_; }
  const std::vector<double>& mean() const { return mean_; }

 private:
  std::vector<double> mean_;
  double variance_;
};

struct SwissRollSpec {
  std::vector<std::array<double, 2>> centers{{0.0, 0.0}, {0.8, 0.8}, {0.8, -0.8}, {-0.8, -0.8}, {-0.8, 0.8}};
  /// Probability of each center. The origin roll carries 0.34, the rest 0.165.
  std::vector<double> weights{0.34, 0.165, 0.165, 0.165, 0.165};
  double noise = 0.02;
  double multiplier = 0.01;

  void validate() const;
};

/// phi = 1.5 pi (1 + 2u), point = multiplier (phi cos phi, phi sin phi)
/// + noise N(0, I2) + center, with the center drawn from `weights`.
std::vector<double> sample_swiss(const SwissRollSpec& spec, std::size_t n, Rng& rng);

class SwissRolls final : public Dataset {
 public:
  explicit SwissRolls(SwissRollSpec spec);
  std::size_t dim() const override { return 2; }
  void sample_one(Rng& rng, std::span<double> out) const override;
  std::string name() const override { return "swiss"; }
  const SwissRollSpec& spec() const { return spec_; }

 private:
  SwissRollSpec spec_;
};

/// W1 between two empirical distributions on the line, exact for any sizes
/// (integral of |F_a - F_b|).
double w1_1d(std::span<const double> a, std::span<const double> b);

/// W1 between an empirical sample and the mixture itself: the integral of
/// |F_n - F| using the closed-form antiderivative of F. No reference draws.
double w1_to_gmm1d(std::span<const double> samples, const Gmm1dSpec& spec);

/// Mean of w1_1d over n_dirs random unit directions. a, b are n x 2.
double sliced_w1_2d(std::span<const double> a, std::span<const double> b, std::size_t n_dirs, Rng& rng);

/// Fraction of points (n x 2) whose nearest center is each center.
std::vector<double> cluster_masses(std::span<const double> samples, const std::vector<std::array<double, 2>>& centers);

/// Rows of `cols` values, with an optional header line. A non-empty comment
/// goes first as "# comment".
void write_csv(const std::filesystem::path& path, std::span<const double> values, std::size_t cols,
               const std::vector<std::string>& header, const std::string& comment = {});

}  // namespace hold
