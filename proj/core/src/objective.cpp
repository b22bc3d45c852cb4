#include "hold/objective.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hold/analytic_score.hpp"
#include "hold/parallel.hpp"
#include "hold/rng.hpp"

namespace hold {
namespace {

constexpr std::size_t kBlockRows = 64;

LossBatch draw_batch(const HoldParams& params, std::span<const double> x0, std::size_t d, std::uint64_t key,
                     const Vec3& sigma0, std::size_t x0_width, TimeSampling ts) {
  params.validate();
  if (d == 0 || x0.size() % x0_width != 0) throw std::invalid_argument("loss batch: x0 size does not match d");
  const std::size_t n = x0.size() / x0_width;
  if (n == 0) throw std::invalid_argument("loss batch: batch must be nonempty");
  LossBatch b;
  b.n = n;
  b.d = d;
  b.t.resize(n);
  b.ell.resize(n);
  b.xt.resize(n * 3 * d);
  b.eps_s.resize(n * d);
  std::vector<double> noise(3 * d), full(3 * d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(key, i);
    const double t = sample_time(params, ts, rng.uniform());
    for (double& e : noise) e = rng.normal();
    std::fill(full.begin(), full.end(), 0.0);
    for (std::size_t j = 0; j < x0_width; ++j) full[j] = x0[i * x0_width + j];
    const Mat3 e = expm_scalar_kernel(Direction::forward, t);
    const CholFactor chol = chol3(transition_covariance(params, sigma0, t));
    apply_perturbation(e, chol, full, noise, std::span(b.xt).subspan(i * 3 * d, 3 * d));
    for (std::size_t k = 0; k < d; ++k) b.eps_s[i * d + k] = noise[2 * d + k];
    b.t[i] = t;
    b.ell[i] = 1.0 / chol.lower(2, 2);
  }
  return b;
}

}  // namespace

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "bcsm") return LossKind::bcsm;
  if (s == "dsm") return LossKind::dsm;
  throw std::invalid_argument("unknown loss kind '" + s + "' (expected bcsm or dsm)");
}

std::string to_string(LossKind k) { return k == LossKind::bcsm ? "bcsm" : "dsm"; }

TimeSampling time_sampling_from_string(const std::string& s) {
  if (s == "uniform") return TimeSampling::uniform;
  if (s == "log_mixture") return TimeSampling::log_mixture;
  throw std::invalid_argument("unknown time sampling '" + s + "' (expected uniform or log_mixture)");
}

std::string to_string(TimeSampling ts) { return ts == TimeSampling::uniform ? "uniform" : "log_mixture"; }

double sample_time(const HoldParams& params, TimeSampling ts, double u) {
  const double a = params.t_min, b = params.T;
  if (ts == TimeSampling::uniform) return a + (b - a) * u;
  // lower half of u -> uniform, upper half -> log-uniform
  const double t = u < 0.5 ? a + (b - a) * (2.0 * u) : a * std::pow(b / a, 2.0 * u - 1.0);
  return std::clamp(t, a, b);
}

LossBatch draw_bcsm_batch(const HoldParams& params, std::span<const double> q0, std::size_t d, std::uint64_t key,
                          TimeSampling ts) {
  return draw_batch(params, q0, d, key, bcsm_sigma0(params), d, ts);
}

LossBatch draw_dsm_batch(const HoldParams& params, std::span<const double> x0, std::size_t d, std::uint64_t key,
                         TimeSampling ts) {
  return draw_batch(params, x0, d, key, Vec3{}, 3 * d, ts);
}

std::vector<double> augment_with_velocity(const HoldParams& params, std::span<const double> q0, std::size_t d,
                                          std::uint64_t key) {
  const std::size_t n = q0.size() / d;
  const double sd = std::sqrt(params.alpha / params.L);
  std::vector<double> x0(n * 3 * d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(key, 0x76656c), i);
    for (std::size_t k = 0; k < d; ++k) x0[i * 3 * d + k] = q0[i * d + k];
    for (std::size_t k = d; k < 3 * d; ++k) x0[i * 3 * d + k] = sd * rng.normal();
  }
  return x0;
}

LossResult score_matching_loss(const Mlp& net, std::span<const double> theta, const LossBatch& batch,
                               unsigned threads, bool want_grad) {
  const std::size_t n = batch.n, d = batch.d, np = net.param_count();
  if (net.spec().d != d) throw std::invalid_argument("score_matching_loss: network dimension mismatch");
  const std::size_t blocks = (n + kBlockRows - 1) / kBlockRows;
  std::vector<AlignedVector> partial(blocks);
  LossResult r;
  r.per_element.resize(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  parallel_for(blocks, threads, [&](std::size_t b0, std::size_t b1) {
    MlpCache cache;
    std::vector<double> out, up;
    for (std::size_t b = b0; b < b1; ++b) {
      const std::size_t r0 = b * kBlockRows, m = std::min(kBlockRows, n - r0);
      out.resize(m * d);
      up.resize(m * d);
      net.forward(theta, std::span(batch.xt).subspan(r0 * 3 * d, m * 3 * d), std::span(batch.t).subspan(r0, m), m,
                  out, want_grad ? &cache : nullptr);
      for (std::size_t i = 0; i < m; ++i) {
        const double ell = batch.ell[r0 + i];
        double sum = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          const double res = batch.eps_s[(r0 + i) * d + k] + out[i * d + k] / ell;
          sum += res * res;
          up[i * d + k] = 2.0 * res / ell * inv_n;
        }
        r.per_element[r0 + i] = sum;
      }
      if (want_grad) {
        partial[b].assign(np, 0.0);
        net.backward(theta, cache, up, partial[b], {});
      }
    }
  });
  for (double v : r.per_element) r.loss += v;
  r.loss *= inv_n;
  if (want_grad) {
    r.grad.assign(np, 0.0);
    for (const auto& p : partial)
      for (std::size_t j = 0; j < np; ++j) r.grad[j] += p[j];
  }
  if (!std::isfinite(r.loss)) throw std::runtime_error("score_matching_loss: non-finite loss");
  return r;
}

LossResult score_matching_loss(const ScoreModel& model, const LossBatch& batch) {
  const std::size_t n = batch.n, d = batch.d;
  LossResult r;
  r.per_element.resize(n);
  std::vector<double> out(d);
  for (std::size_t i = 0; i < n; ++i) {
    model.score(std::span(batch.xt).subspan(i * 3 * d, 3 * d), 1, batch.t[i], out);
    double sum = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double res = batch.eps_s[i * d + k] + out[k] / batch.ell[i];
      sum += res * res;
    }
    r.per_element[i] = sum;
    r.loss += sum;
  }
  r.loss /= static_cast<double>(n);
  return r;
}

LossResult bcsm_minibatch(const HoldParams& params, const Mlp& net, std::span<const double> theta,
                          std::span<const double> q0, std::uint64_t key, unsigned threads) {
  return score_matching_loss(net, theta, draw_bcsm_batch(params, q0, net.spec().d, key), threads);
}

LossResult dsm_minibatch(const HoldParams& params, const Mlp& net, std::span<const double> theta,
                         std::span<const double> x0, std::uint64_t key, unsigned threads) {
  return score_matching_loss(net, theta, draw_dsm_batch(params, x0, net.spec().d, key), threads);
}

double bcsm_gaussian_floor_at(const HoldParams& params, double variance, std::size_t d, double t) {
  const double a = params.alpha / params.L;
  const Mat3 cond = transition_covariance(params, bcsm_sigma0(params), t);
  const Mat3 marg = transition_covariance(params, Vec3{{variance, a, a}}, t);
  const double l33 = chol3(cond).lower(2, 2);
  return static_cast<double>(d) * (1.0 - l33 * l33 * spd_inverse(marg)(2, 2));
}

double bcsm_gaussian_floor(const HoldParams& params, double variance, std::size_t d) {
  // Composite Gauss-Legendre on geometric panels; the integrand varies on
  // the scale of t itself near t_min.
  static constexpr double x[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                  0.9061798459386640};
  static constexpr double w[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                                  0.2369268850561891};
  double total = 0.0;
  double a = params.t_min;
  while (a < params.T) {
    const double b = std::min(params.T, std::max(2.0 * a, a + 1e-3));
    const double h = 0.5 * (b - a), c = 0.5 * (a + b);
    for (int k = 0; k < 5; ++k) total += h * w[k] * bcsm_gaussian_floor_at(params, variance, d, c + h * x[k]);
    a = b;
  }
  return total / (params.T - params.t_min);
}

}  // namespace hold
