#pragma once

#include <vector>

#include "hold/kernel.hpp"
#include "hold/score_model.hpp"

namespace hold {

/// One isotropic Gaussian component of the data distribution over q0.
struct GaussianComponent {
  double weight = 1.0;
  std::vector<double> mean;  // length d
  double variance = 1.0;
};

/// Exact marginal score of the forward process when q0 follows a Gaussian
/// mixture and (p0, s0) ~ N(0, alpha/L) independently. Each component stays
/// Gaussian under the linear SDE, so the marginal at t is a mixture with
/// moments from the closed-form kernel.
class GaussianMixtureScore final : public ScoreModel {
 public:
  GaussianMixtureScore(const HoldParams& params, std::vector<GaussianComponent> components);

  std::size_t dim() const override { return d_; }
  void score(std::span<const double> x, std::size_t n, double t, std::span<double> out) const override;
  void score_vjp_s(std::span<const double> x, std::size_t n, double t, std::span<const double> v,
                   std::span<double> out) const override;

  /// log of the marginal density p_t(x) for one state (length 3d).
  double log_density(std::span<const double> x, double t) const;

  const std::vector<GaussianComponent>& components() const { return comps_; }

 private:
  struct Marginal {
    Mat3 precision;
    Vec3 mean_map;  // exp(tF) e1: component mean of block b is mean_map[b] * m
    double log_norm = 0.0;  // -0.5 d log det(2 pi Sigma)
  };
  std::vector<Marginal> marginals(double t) const;
  // Per-row responsibilities and per-component s-scores g[m * d + k].
  void row_terms(std::span<const double> row, const std::vector<Marginal>& marg, std::vector<double>& resp,
                 std::vector<double>& g) const;

  HoldParams params_;
  std::vector<GaussianComponent> comps_;
  std::size_t d_ = 0;
};

/// Inverse of a symmetric positive definite 3x3 matrix through its Cholesky
/// factor; better behaved than the adjugate on graded covariances.
Mat3 spd_inverse(const Mat3& sigma);

}  // namespace hold
