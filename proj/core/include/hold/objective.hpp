#pragma once

#include <cstdint>
#include <string>
#include <span>
#include <vector>

#include "hold/kernel.hpp"
#include "hold/score_model.hpp"
#include "hold/scorenet.hpp"

namespace hold {

enum class LossKind { bcsm, dsm };

LossKind loss_kind_from_string(const std::string& s);
std::string to_string(LossKind k);

/// How training times are drawn. uniform: t ~ U[t_min, T]. log_mixture: half
/// the draws uniform in t, half uniform in log t, which puts far more weight
/// near t_min. Both have the true score as minimizer.
enum class TimeSampling { uniform, log_mixture };

TimeSampling time_sampling_from_string(const std::string& s);
std::string to_string(TimeSampling ts);

/// Maps one U[0, 1) draw to a training time.
double sample_time(const HoldParams& params, TimeSampling ts, double u);

/// Perturbed training inputs for one minibatch. Element i uses its own RNG
/// stream Rng(key, i), so the batch does not depend on evaluation order.
struct LossBatch {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> t;      // n
  std::vector<double> ell;    // n
  std::vector<double> xt;     // n x 3d
  std::vector<double> eps_s;  // n x d

  double weight(std::size_t i) const { return 1.0 / (ell[i] * ell[i]); }
};

/// BCSM: condition on q0 only; (p0, s0) are marginalized exactly through
/// Sigma0 = diag(0, alpha/L, alpha/L). q0 is n x d.
LossBatch draw_bcsm_batch(const HoldParams& params, std::span<const double> q0, std::size_t d, std::uint64_t key,
                          TimeSampling ts = TimeSampling::uniform);

/// DSM: condition on the full x0 (n x 3d), Sigma0 = 0.
LossBatch draw_dsm_batch(const HoldParams& params, std::span<const double> x0, std::size_t d, std::uint64_t key,
                         TimeSampling ts = TimeSampling::uniform);

/// Full initial states (q0, p0, s0) with p0, s0 ~ N(0, alpha/L) from the
/// per-element streams of `key`.
std::vector<double> augment_with_velocity(const HoldParams& params, std::span<const double> q0, std::size_t d,
                                          std::uint64_t key);

struct LossResult {
  double loss = 0.0;                 // mean over elements of ||eps_s + S / ell||^2
  std::vector<double> grad;          // d loss / d theta
  std::vector<double> per_element;   // n
};

/// Weighted loss lambda(t) ||-ell eps_s - S||^2 with lambda = ell^-2 and its
/// exact parameter gradient. Rows are handled in fixed blocks whose partial
/// gradients are summed in block order, so threads do not change the result.
LossResult score_matching_loss(const Mlp& net, std::span<const double> theta, const LossBatch& batch,
                               unsigned threads = 1, bool want_grad = true);

/// Same loss for an arbitrary score model (no gradient).
LossResult score_matching_loss(const ScoreModel& model, const LossBatch& batch);

LossResult bcsm_minibatch(const HoldParams& params, const Mlp& net, std::span<const double> theta,
                          std::span<const double> q0, std::uint64_t key, unsigned threads = 1);
LossResult dsm_minibatch(const HoldParams& params, const Mlp& net, std::span<const double> theta,
                         std::span<const double> x0, std::uint64_t key, unsigned threads = 1);

/// Pointwise-in-t floor of the BCSM loss for single Gaussian data N(m, v):
/// d (1 - (L_t^{ss})^2 (Sigma_t^{-1})^{ss}), where L_t is the conditional
/// factor and Sigma_t the marginal covariance. The second form averages it
/// over t ~ U[t_min, T] by quadrature.
double bcsm_gaussian_floor_at(const HoldParams& params, double variance, std::size_t d, double t);
double bcsm_gaussian_floor(const HoldParams& params, double variance, std::size_t d);

}  // namespace hold
