#pragma once

#include <cstddef>
#include <span>

namespace hold {

/// Anything that can play the role of the s-block score S(x, t).
///
/// States are n rows of width 3d laid out (q, p, s); outputs are n rows of
/// width d. Implementations must be safe to call concurrently on disjoint rows.
class ScoreModel {
 public:
  virtual ~ScoreModel() = default;

  virtual std::size_t dim() const = 0;

  virtual void score(std::span<const double> x, std::size_t n, double t, std::span<double> out) const = 0;

  /// Row-wise v^T (dS/ds): the s-block vector-Jacobian product used by the
  /// Hutchinson divergence estimate. v and out are n x d.
  virtual void score_vjp_s(std::span<const double> x, std::size_t n, double t, std::span<const double> v,
                           std::span<double> out) const = 0;
};

/// S = 0. Reduces every sampler to the linear dynamics.
class ZeroScore final : public ScoreModel {
 public:
  explicit ZeroScore(std::size_t d) : d_(d) {}
  std::size_t dim() const override { return d_; }
  void score(std::span<const double>, std::size_t n, double, std::span<double> out) const override {
    for (std::size_t i = 0; i < n * d_; ++i) out[i] = 0.0;
  }
  void score_vjp_s(std::span<const double>, std::size_t n, double, std::span<const double>,
                   std::span<double> out) const override {
    for (std::size_t i = 0; i < n * d_; ++i) out[i] = 0.0;
  }

 private:
  std::size_t d_;
};

}  // namespace hold
