#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace hold {

/// Hyperparameters of the third-order Langevin forward process.
///
/// The closed-form kernels are only valid for xi = 6 and gamma = sqrt(10)
/// (the constraint gamma^2 = 1 + xi^2/4 with eigenvalues -1, -2, -3), so
/// validate() rejects any other pair instead of silently miscomputing.
struct HoldParams {
  double L = 2.0;
  double gamma = std::sqrt(10.0);
  double xi = 6.0;
  double alpha = 0.04;
  double T = 5.0;
  double t_min = 1e-5;

  /// Stationary per-coordinate variance, 2 xi L^-1 / 12 (= 1/L at xi = 6).
  double prior_variance() const { return xi / (6.0 * L); }

  /// Diffusion coefficient squared on the s-block, 2 xi / L.
  double diffusion() const { return 2.0 * xi / L; }

  void validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("HoldParams: " + what); };
    if (!(L > 0.0) || !std::isfinite(L)) fail("L must be positive");
    if (!(xi > 0.0)) fail("xi must be positive");
    if (!(gamma > 0.0)) fail("gamma must be positive");
    if (std::fabs(gamma * gamma - (1.0 + xi * xi / 4.0)) > 1e-12)
      fail("gamma^2 must equal 1 + xi^2/4");
    if (std::fabs(xi - 6.0) > 1e-12) fail("closed-form kernels require xi = 6 (gamma = sqrt(10))");
    if (!(alpha > 0.0) || alpha > 0.5) fail("alpha must lie in (0, 0.5]");
    if (!(t_min > 0.0)) fail("t_min must be positive");
    if (!(t_min < T) || !std::isfinite(T)) fail("t_min must be smaller than T");
  }
};

}  // namespace hold
