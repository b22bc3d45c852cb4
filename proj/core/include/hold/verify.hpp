#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hold/params.hpp"

namespace hold {

struct CheckResult {
  std::string name;
  double deviation = 0.0;  // worst observed, in the check's own units
  double tolerance = 0.0;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// Tolerances and sizes for the kernel-vs-oracle suite. A tolerance of zero
/// (or below) always fails.
struct VerifyConfig {
  double tol_moment_rel = 1e-6;
  double tol_expm = 1e-10;
  double tol_stationary = 1e-10;
  double tol_score = 1e-10;
  double tol_grad_rel = 1e-5;
  double mc_n_se = 4.0;

  std::size_t n_random_t = 20;
  std::size_t n_random_configs = 5;
  std::vector<double> expm_times{0.1, 0.5, 1.0, 2.0, 5.0};
  std::size_t mc_paths = 100000;
  double mc_dt = 1e-4;
  std::vector<double> mc_times{0.1, 0.5, 1.0, 2.0};
  double stationary_t = 50.0;
  std::size_t n_score_draws = 1000;
  std::size_t n_grad_configs = 50;

  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Closed-form moments vs RK4 moment ODEs at random times and random (L, alpha).
CheckResult check_moments_vs_ode(const HoldParams& params, const VerifyConfig& cfg);
/// Closed-form exp(tM) for all three generators vs dense scaling-and-squaring.
CheckResult check_closed_form_vs_expm(const HoldParams& params, const VerifyConfig& cfg);
/// EM forward simulation (d = 1) vs closed-form mean and covariance, in SE units.
CheckResult check_monte_carlo(const HoldParams& params, const VerifyConfig& cfg);
/// Sigma_t -> I/L and mu_t -> 0 at large t.
CheckResult check_stationarity(const HoldParams& params, const VerifyConfig& cfg);
/// grad_s log p(x_t | x_0) = -ell_t eps_s against a direct linear solve.
CheckResult check_score_identity(const HoldParams& params, const VerifyConfig& cfg);
/// MLP backprop vs central differences.
CheckResult check_scorenet_gradients(const VerifyConfig& cfg);

std::vector<CheckResult> run_verification(const HoldParams& params, const VerifyConfig& cfg, bool include_mc = true);

}  // namespace hold
