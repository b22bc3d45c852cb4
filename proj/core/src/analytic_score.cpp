#include "hold/analytic_score.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace hold {

Mat3 spd_inverse(const Mat3& sigma) {
  const Mat3 l = chol3(sigma).lower;
  // Forward substitution for L^-1 (lower triangular).
  Mat3 li;
  for (int j = 0; j < 3; ++j) {
    li(j, j) = 1.0 / l(j, j);
    for (int i = j + 1; i < 3; ++i) {
      double acc = 0.0;
      for (int k = j; k < i; ++k) acc += l(i, k) * li(k, j);
      li(i, j) = -acc / l(i, i);
    }
  }
  return li.transposed() * li;
}

GaussianMixtureScore::GaussianMixtureScore(const HoldParams& params, std::vector<GaussianComponent> components)
    : params_(params), comps_(std::move(components)) {
  params_.validate();
  if (comps_.empty()) throw std::invalid_argument("GaussianMixtureScore: need at least one component");
  d_ = comps_.front().mean.size();
  double total = 0.0;
  for (const auto& c : comps_) {
    if (c.mean.size() != d_ || d_ == 0) throw std::invalid_argument("GaussianMixtureScore: inconsistent means");
    if (!(c.variance > 0.0)) throw std::invalid_argument("GaussianMixtureScore: variances must be positive");
    if (!(c.weight > 0.0)) throw std::invalid_argument("GaussianMixtureScore: weights must be positive");
    total += c.weight;
  }
  for (auto& c : comps_) c.weight /= total;
}

std::vector<GaussianMixtureScore::Marginal> GaussianMixtureScore::marginals(double t) const {
  const double a = params_.alpha / params_.L;
  const Mat3 e = expm_scalar_kernel(Direction::forward, t);
  std::vector<Marginal> out;
  out.reserve(comps_.size());
  for (const auto& c : comps_) {
    const Mat3 sigma = transition_covariance(params_, Vec3{{c.variance, a, a}}, t);
    Marginal m;
    m.precision = spd_inverse(sigma);
    m.mean_map = Vec3{{e(0, 0), e(1, 0), e(2, 0)}};
    m.log_norm = -0.5 * static_cast<double>(d_) * std::log(std::pow(2.0 * std::numbers::pi, 3) * determinant(sigma));
    out.push_back(m);
  }
  return out;
}

void GaussianMixtureScore::row_terms(std::span<const double> row, const std::vector<Marginal>& marg,
                                     std::vector<double>& resp, std::vector<double>& g) const {
  const std::size_t nc = comps_.size();
  resp.assign(nc, 0.0);
  g.assign(nc * d_, 0.0);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < nc; ++m) {
    const Mat3& P = marg[m].precision;
    double quad = 0.0;
    for (std::size_t k = 0; k < d_; ++k) {
      double r[3];
      for (int b = 0; b < 3; ++b) r[b] = row[b * d_ + k] - marg[m].mean_map[b] * comps_[m].mean[k];
      double pr[3];
      for (int i = 0; i < 3; ++i) pr[i] = P(i, 0) * r[0] + P(i, 1) * r[1] + P(i, 2) * r[2];
      quad += r[0] * pr[0] + r[1] * pr[1] + r[2] * pr[2];
      g[m * d_ + k] = -pr[2];
    }
    resp[m] = std::log(comps_[m].weight) + marg[m].log_norm - 0.5 * quad;
    best = std::max(best, resp[m]);
  }
  double z = 0.0;
  for (double& r : resp) z += (r = std::exp(r - best));
  for (double& r : resp) r /= z;
}

void GaussianMixtureScore::score(std::span<const double> x, std::size_t n, double t, std::span<double> out) const {
  const auto marg = marginals(t);
  std::vector<double> resp, g;
  const std::size_t w = 3 * d_;
  for (std::size_t i = 0; i < n; ++i) {
    row_terms(x.subspan(i * w, w), marg, resp, g);
    for (std::size_t k = 0; k < d_; ++k) {
      double acc = 0.0;
      for (std::size_t m = 0; m < comps_.size(); ++m) acc += resp[m] * g[m * d_ + k];
      out[i * d_ + k] = acc;
    }
  }
}

void GaussianMixtureScore::score_vjp_s(std::span<const double> x, std::size_t n, double t,
                                       std::span<const double> v, std::span<double> out) const {
  // J_kj = -sum_m r_m P_m^ss delta_kj + sum_m r_m g_mk (g_mj - gbar_j); J is symmetric.
  const auto marg = marginals(t);
  std::vector<double> resp, g, gbar(d_);
  const std::size_t w = 3 * d_;
  const std::size_t nc = comps_.size();
  for (std::size_t i = 0; i < n; ++i) {
    row_terms(x.subspan(i * w, w), marg, resp, g);
    const auto vi = v.subspan(i * d_, d_);
    std::fill(gbar.begin(), gbar.end(), 0.0);
    double diag = 0.0;
    for (std::size_t m = 0; m < nc; ++m) {
      diag -= resp[m] * marg[m].precision(2, 2);
      for (std::size_t k = 0; k < d_; ++k) gbar[k] += resp[m] * g[m * d_ + k];
    }
    for (std::size_t j = 0; j < d_; ++j) out[i * d_ + j] = diag * vi[j];
    for (std::size_t m = 0; m < nc; ++m) {
      double vg = 0.0;
      for (std::size_t k = 0; k < d_; ++k) vg += vi[k] * g[m * d_ + k];
      for (std::size_t j = 0; j < d_; ++j) out[i * d_ + j] += resp[m] * vg * (g[m * d_ + j] - gbar[j]);
    }
  }
}

double GaussianMixtureScore::log_density(std::span<const double> x, double t) const {
  const auto marg = marginals(t);
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(comps_.size());
  for (std::size_t m = 0; m < comps_.size(); ++m) {
    double quad = 0.0;
    for (std::size_t k = 0; k < d_; ++k) {
      double r[3];
      for (int b = 0; b < 3; ++b) r[b] = x[b * d_ + k] - marg[m].mean_map[b] * comps_[m].mean[k];
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) quad += r[i] * marg[m].precision(i, j) * r[j];
    }
    terms[m] = std::log(comps_[m].weight) + marg[m].log_norm - 0.5 * quad;
    best = std::max(best, terms[m]);
  }
  double z = 0.0;
  for (double v : terms) z += std::exp(v - best);
  return best + std::log(z);
}

}  // namespace hold
