#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hold/linalg.hpp"
#include "hold/params.hpp"
#include "hold/state.hpp"

namespace hold {

/// Which 3x3 generator a kernel refers to.
///
///  - forward:       F = [[0,1,0],[-1,0,gamma],[0,-gamma,-xi]], the noising drift.
///  - reverse:       -F, the linear part of the generative (time-reversed) drift.
///  - reverse_split: the generator of the exactly solvable part of the split
///                   generative dynamics, [[0,-1,0],[1,0,-gamma],[0,gamma,-xi]].
///                   It equals D F D with D = diag(1,-1,1), so it shares the
///                   eigenvalues {-1,-2,-3} of F.
enum class Direction { forward, reverse, reverse_split };

struct DriftMatrix {
  Mat3 entries;
  Direction direction = Direction::forward;
};

class NotPositiveDefinite : public std::runtime_error {
 public:
  NotPositiveDefinite(int pivot, double value)
      : std::runtime_error("matrix is not numerically positive definite (pivot " + std::to_string(pivot) +
                           " = " + std::to_string(value) + ")"),
        pivot_(pivot) {}
  int pivot() const { return pivot_; }

 private:
  int pivot_;
};

struct CholFactor {
  Mat3 lower;
};

/// Gaussian transition p(x_t | x_0): mean over all 3d coordinates plus the
/// scalar 3x3 covariance (full covariance is sigma (x) I_d).
struct KernelMoments {
  std::vector<double> mu;
  Mat3 sigma;
  double t = 0.0;
};

struct Perturbation {
  PhaseState xt;
  std::vector<double> eps_s;
  double ell = 0.0;
};

DriftMatrix drift_matrix(const HoldParams& params, Direction direction);

/// exp(t M) for one of the three generators, from the closed-form
/// three-exponential entries. Rejects t < 0.
Mat3 expm_scalar_kernel(const DriftMatrix& mat, double t);
Mat3 expm_scalar_kernel(Direction direction, double t);

/// (2 xi / L) * int_0^t exp(u M) e3 e3^T exp(u M)^T du, the covariance a point
/// mass picks up after time t under the generator M with noise on s only.
Mat3 noise_covariance(const HoldParams& params, Direction direction, double t);

/// Initial covariance diagonal for block-coordinate conditioning on q0:
/// (0, alpha/L, alpha/L).
Vec3 bcsm_sigma0(const HoldParams& params);

Vec3 transition_mean(double t, const Vec3& x0);
Mat3 transition_covariance(const HoldParams& params, const Vec3& sigma0_diag, double t);

/// Closed-form forward transition moments. t must lie in [0, T].
KernelMoments transition_moments(const HoldParams& params, const PhaseState& x0_mean, const Vec3& sigma0_diag,
                                 double t);

/// Lower Cholesky factor of a symmetric 3x3 matrix. A pivot is rejected when
/// it is not above 1e-14 times the corresponding diagonal entry, so graded but
/// well-posed covariances (entries spanning many decades at small t) factor.
CholFactor chol3(const Mat3& sigma);

/// 1 / L_t^{ss}: the scale with grad_s log p(x_t | .) = -ell_t * eps_s.
double ell_t(const Mat3& sigma);

/// x_t = mu_t + (L_t (x) I_d) eps. noise holds 3d standard normals laid out
/// as (eps_q, eps_p, eps_s). t must lie in [t_min, T].
Perturbation perturb(const HoldParams& params, const PhaseState& x0, const Vec3& sigma0_diag, double t,
                     std::span<const double> noise);

/// Lower-level form of perturb for hot loops: writes x_t into out (length 3d)
/// given precomputed mean matrix E = exp(tF) and Cholesky factor.
void apply_perturbation(const Mat3& mean_matrix, const CholFactor& chol, std::span<const double> x0,
                        std::span<const double> noise, std::span<double> out);

PhaseState prior_sample(const HoldParams& params, std::size_t d, std::span<const double> noise);
double prior_logpdf(const HoldParams& params, const PhaseState& x);
double prior_logpdf(const HoldParams& params, std::span<const double> x);

}  // namespace hold
