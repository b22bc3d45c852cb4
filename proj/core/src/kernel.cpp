#include "hold/kernel.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace hold {
namespace {

// scale * sum_k c[k] exp(-k t), k = 0..6.
//
// Every kernel entry and every product of two entries has this form. The
// coefficients are dyadic rationals and the irrational sqrt(10) factors are
// kept in `scale`, so the power moments sum_k c[k] k^n are exact in double for
// small n. Near t = 0 the entries are evaluated from their Taylor series in t,
// where those exact moments make the leading-order cancellations exact (e.g.
// f13 ~ t^2, the qq noise integral ~ t^5). Away from zero the plain
// exponential sums are used.
struct ExpSum {
  double scale = 1.0;
  std::array<double, 7> c{};

  static constexpr double kSeriesCutoff = 0.25;
  static constexpr int kSeriesTerms = 32;

  double eval(double t) const {
    double sum = 0.0;
    if (std::fabs(t) < kSeriesCutoff) {
      std::array<double, 7> kpow{1, 1, 1, 1, 1, 1, 1};
      double coef = 1.0;  // (-t)^n / n!
      for (int n = 0; n < kSeriesTerms; ++n) {
        double moment = 0.0;
        for (int k = 0; k < 7; ++k) {
          moment += c[k] * kpow[k];
          kpow[k] *= k;
        }
        sum += coef * moment;
        coef *= -t / (n + 1);
      }
    } else {
      for (int k = 0; k < 7; ++k)
        if (c[k] != 0.0) sum += c[k] * std::exp(-k * t);
    }
    return scale * sum;
  }

  // int_0^t sum_k c[k] exp(-k u) du, valid for either sign of t.
  double integral(double t) const {
    double sum = 0.0;
    if (std::fabs(t) < kSeriesCutoff) {
      std::array<double, 7> kpow{1, 1, 1, 1, 1, 1, 1};
      double coef = t;  // (-1)^n t^(n+1) / (n+1)!
      for (int n = 0; n < kSeriesTerms; ++n) {
        double moment = 0.0;
        for (int k = 0; k < 7; ++k) {
          moment += c[k] * kpow[k];
          kpow[k] *= k;
        }
        sum += coef * moment;
        coef *= -t / (n + 2);
      }
    } else {
      sum = c[0] * t;
      for (int k = 1; k < 7; ++k)
        if (c[k] != 0.0) sum += c[k] * (-std::expm1(-k * t)) / k;
    }
    return scale * sum;
  }
};

ExpSum product(const ExpSum& a, const ExpSum& b) {
  ExpSum r;
  r.scale = a.scale * b.scale;
  for (int i = 0; i < 7; ++i)
    for (int j = 0; i + j < 7; ++j) r.c[i + j] += a.c[i] * b.c[j];
  return r;
}

ExpSum make(double scale, double c1, double c2, double c3) {
  ExpSum e;
  e.scale = scale;
  e.c[1] = c1;
  e.c[2] = c2;
  e.c[3] = c3;
  return e;
}

struct KernelTable {
  std::array<ExpSum, 9> entry;        // exp(tF)_{ij}
  std::array<ExpSum, 9> noise_prod;   // exp(tF)_{i3} exp(tF)_{j3}
};

const KernelTable& forward_table() {
  static const KernelTable table = [] {
    const double r10 = std::sqrt(10.0);
    KernelTable k;
    // Putzer: exp(tF) = r1 I + r2 (F+3I) + r3 (F+3I)(F+2I) with
    // r1 = e^-3t, r2 = e^-2t - e^-3t, r3 = (e^-t + e^-3t)/2 - e^-2t.
    k.entry[0] = make(1.0, 2.5, -2.0, 0.5);
    k.entry[1] = make(1.0, 2.5, -4.0, 1.5);
    k.entry[2] = make(r10, 0.5, -1.0, 0.5);
    k.entry[3] = make(1.0, -2.5, 4.0, -1.5);
    k.entry[4] = make(1.0, -2.5, 8.0, -4.5);
    k.entry[5] = make(r10, -0.5, 2.0, -1.5);
    k.entry[6] = make(r10, 0.5, -1.0, 0.5);
    k.entry[7] = make(r10, 0.5, -2.0, 1.5);
    k.entry[8] = make(1.0, 1.0, -5.0, 5.0);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) k.noise_prod[3 * i + j] = product(k.entry[3 * i + 2], k.entry[3 * j + 2]);
    return k;
  }();
  return table;
}

// D = diag(1,-1,1) similarity sign between F and the split generator.
constexpr std::array<double, 3> kSplitSign{1.0, -1.0, 1.0};

void require_time(double t, const char* what) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument(std::string(what) + ": t must be >= 0");
}

}  // namespace

DriftMatrix drift_matrix(const HoldParams& params, Direction direction) {
  params.validate();
  Mat3 f;
  f(0, 1) = 1.0;
  f(1, 0) = -1.0;
  f(1, 2) = params.gamma;
  f(2, 1) = -params.gamma;
  f(2, 2) = -params.xi;
  switch (direction) {
    case Direction::forward:
      return {f, direction};
    case Direction::reverse:
      return {-1.0 * f, direction};
    case Direction::reverse_split: {
      Mat3 m = f;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) *= kSplitSign[i] * kSplitSign[j];
      return {m, direction};
    }
  }
  throw std::invalid_argument("drift_matrix: unknown direction");
}

Mat3 expm_scalar_kernel(Direction direction, double t) {
  require_time(t, "expm_scalar_kernel");
  const auto& tab = forward_table();
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const ExpSum& e = tab.entry[3 * i + j];
      switch (direction) {
        case Direction::forward:
          r(i, j) = e.eval(t);
          break;
        case Direction::reverse:
          r(i, j) = e.eval(-t);
          break;
        case Direction::reverse_split:
          r(i, j) = kSplitSign[i] * kSplitSign[j] * e.eval(t);
          break;
      }
    }
  return r;
}

Mat3 expm_scalar_kernel(const DriftMatrix& mat, double t) { return expm_scalar_kernel(mat.direction, t); }

Mat3 noise_covariance(const HoldParams& params, Direction direction, double t) {
  require_time(t, "noise_covariance");
  const auto& tab = forward_table();
  const double q = params.diffusion();
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      const ExpSum& e = tab.noise_prod[3 * i + j];
      double v = 0.0;
      switch (direction) {
        case Direction::forward:
          v = e.integral(t);
          break;
        case Direction::reverse:
          v = -e.integral(-t);
          break;
        case Direction::reverse_split:
          v = kSplitSign[i] * kSplitSign[j] * e.integral(t);
          break;
      }
      r(i, j) = r(j, i) = q * v;
    }
  return r;
}

Vec3 bcsm_sigma0(const HoldParams& params) {
  const double v = params.alpha / params.L;
  return Vec3{{0.0, v, v}};
}

Vec3 transition_mean(double t, const Vec3& x0) { return expm_scalar_kernel(Direction::forward, t) * x0; }

Mat3 transition_covariance(const HoldParams& params, const Vec3& sigma0_diag, double t) {
  const Mat3 e = expm_scalar_kernel(Direction::forward, t);
  Mat3 r = noise_covariance(params, Direction::forward, t);
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      double acc = 0.0;
      for (int m = 0; m < 3; ++m) acc += e(i, m) * e(j, m) * sigma0_diag[m];
      r(i, j) += acc;
      if (i != j) r(j, i) = r(i, j);
    }
  return r;
}

KernelMoments transition_moments(const HoldParams& params, const PhaseState& x0_mean, const Vec3& sigma0_diag,
                                 double t) {
  params.validate();
  if (!(t >= 0.0 && t <= params.T)) throw std::invalid_argument("transition_moments: t must lie in [0, T]");
  for (int m = 0; m < 3; ++m)
    if (!(sigma0_diag[m] >= 0.0)) throw std::invalid_argument("transition_moments: sigma0 must be nonnegative");
  const std::size_t d = x0_mean.dim();
  const Mat3 e = expm_scalar_kernel(Direction::forward, t);
  KernelMoments km;
  km.t = t;
  km.sigma = transition_covariance(params, sigma0_diag, t);
  km.mu.assign(3 * d, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    const Vec3 x{{x0_mean.at(0, k), x0_mean.at(1, k), x0_mean.at(2, k)}};
    const Vec3 m = e * x;
    for (int b = 0; b < 3; ++b) km.mu[b * d + k] = m[b];
  }
  return km;
}

CholFactor chol3(const Mat3& a) {
  constexpr double kRelTol = 1e-14;
  CholFactor c;
  Mat3& l = c.lower;
  const double p0 = a(0, 0);
  if (!(p0 > 0.0) || !std::isfinite(p0)) throw NotPositiveDefinite(0, p0);
  l(0, 0) = std::sqrt(p0);
  l(1, 0) = a(1, 0) / l(0, 0);
  l(2, 0) = a(2, 0) / l(0, 0);
  const double p1 = a(1, 1) - l(1, 0) * l(1, 0);
  if (!(p1 > kRelTol * a(1, 1)) || !(a(1, 1) > 0.0)) throw NotPositiveDefinite(1, p1);
  l(1, 1) = std::sqrt(p1);
  l(2, 1) = (a(2, 1) - l(2, 0) * l(1, 0)) / l(1, 1);
  const double p2 = a(2, 2) - l(2, 0) * l(2, 0) - l(2, 1) * l(2, 1);
  if (!(p2 > kRelTol * a(2, 2)) || !(a(2, 2) > 0.0)) throw NotPositiveDefinite(2, p2);
  l(2, 2) = std::sqrt(p2);
  return c;
}

double ell_t(const Mat3& sigma) { return 1.0 / chol3(sigma).lower(2, 2); }

void apply_perturbation(const Mat3& e, const CholFactor& chol, std::span<const double> x0,
                        std::span<const double> noise, std::span<double> out) {
  const std::size_t d = x0.size() / 3;
  const Mat3& l = chol.lower;
  for (std::size_t k = 0; k < d; ++k) {
    const double q0 = x0[k], p0 = x0[d + k], s0 = x0[2 * d + k];
    const double e1 = noise[k], e2 = noise[d + k], e3 = noise[2 * d + k];
    out[k] = e(0, 0) * q0 + e(0, 1) * p0 + e(0, 2) * s0 + l(0, 0) * e1;
    out[d + k] = e(1, 0) * q0 + e(1, 1) * p0 + e(1, 2) * s0 + l(1, 0) * e1 + l(1, 1) * e2;
    out[2 * d + k] = e(2, 0) * q0 + e(2, 1) * p0 + e(2, 2) * s0 + l(2, 0) * e1 + l(2, 1) * e2 + l(2, 2) * e3;
  }
}

Perturbation perturb(const HoldParams& params, const PhaseState& x0, const Vec3& sigma0_diag, double t,
                     std::span<const double> noise) {
  params.validate();
  if (!(t >= params.t_min && t <= params.T)) throw std::invalid_argument("perturb: t must lie in [t_min, T]");
  const std::size_t d = x0.dim();
  if (noise.size() != 3 * d) throw std::invalid_argument("perturb: noise must have length 3d");
  const Mat3 e = expm_scalar_kernel(Direction::forward, t);
  const CholFactor chol = chol3(transition_covariance(params, sigma0_diag, t));
  Perturbation r{PhaseState(d), std::vector<double>(noise.begin() + 2 * d, noise.end()),
                 1.0 / chol.lower(2, 2)};
  apply_perturbation(e, chol, x0.data(), noise, r.xt.data());
  return r;
}

PhaseState prior_sample(const HoldParams& params, std::size_t d, std::span<const double> noise) {
  if (noise.size() != 3 * d) throw std::invalid_argument("prior_sample: noise must have length 3d");
  const double sd = std::sqrt(params.prior_variance());
  PhaseState x(d);
  for (std::size_t i = 0; i < 3 * d; ++i) x.data()[i] = sd * noise[i];
  return x;
}

double prior_logpdf(const HoldParams& params, std::span<const double> x) {
  const double v = params.prior_variance();
  double sq = 0.0;
  for (double xi : x) sq += xi * xi;
  return -0.5 * sq / v - 0.5 * static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi * v);
}

double prior_logpdf(const HoldParams& params, const PhaseState& x) { return prior_logpdf(params, x.data()); }

}  // namespace hold
