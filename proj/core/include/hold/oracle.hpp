#pragma once

#include <cstdint>
#include <vector>

#include "hold/kernel.hpp"
#include "hold/linalg.hpp"
#include "hold/params.hpp"

// Brute-force references for the closed-form kernel. None of these share code
// paths with kernel.cpp beyond the drift matrix itself.
namespace hold::oracle {

/// Square row-major matrix for the dense exponential.
struct DenseMatrix {
  std::size_t n = 0;
  std::vector<double> a;

  DenseMatrix() = default;
  explicit DenseMatrix(std::size_t n_) : n(n_), a(n_ * n_, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }

  static DenseMatrix from(const Mat3& m);
  /// M (x) I_d.
  static DenseMatrix kron_identity(const Mat3& m, std::size_t d);
};

/// exp(t M) by scaling and squaring with a degree-18 Taylor polynomial. n <= 12.
DenseMatrix expm_dense(const DenseMatrix& m, double t);

/// RK4 solution of d mu/dt = M mu, d Sigma/dt = M Sigma + Sigma M^T + q e3 e3^T
/// over [0, t] with step <= dt, where q = params.diffusion().
struct ScalarMoments {
  Vec3 mu;
  Mat3 sigma;
};
ScalarMoments integrate_moment_odes(const HoldParams& params, const DriftMatrix& drift, const Vec3& mu0,
                                    const Mat3& sigma0, double t, double dt = 1e-5);

struct McConfig {
  std::size_t n_paths = 100000;
  double dt = 1e-4;
  std::vector<double> checkpoints{0.1, 0.5, 1.0, 2.0};
  std::uint64_t seed = 0;
  unsigned threads = 1;
  /// Multiplier on the diffusion coefficient; 0 gives the noiseless flow.
  double noise_scale = 1.0;

  void validate(const HoldParams& params) const;
};

/// Empirical moments at one checkpoint. Covariance entries are pooled over the
/// d independent coordinates; se_* hold standard errors of each estimate.
struct EmpiricalMoments {
  double t = 0.0;
  std::vector<double> mean;     // 3d
  std::vector<double> se_mean;  // 3d
  Mat3 cov;
  Mat3 se_cov;
};

/// Euler-Maruyama simulation of the forward process from x0 ~ N(x0_mean, diag(sigma0)).
std::vector<EmpiricalMoments> em_forward_simulate(const HoldParams& params, const PhaseState& x0_mean,
                                                  const Vec3& sigma0_diag, const McConfig& cfg);

}  // namespace hold::oracle
