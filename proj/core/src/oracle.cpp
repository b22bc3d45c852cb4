#include "hold/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hold/parallel.hpp"
#include "hold/rng.hpp"

namespace hold::oracle {
namespace {

DenseMatrix multiply(const DenseMatrix& x, const DenseMatrix& y) {
  DenseMatrix r(x.n);
  for (std::size_t i = 0; i < x.n; ++i)
    for (std::size_t k = 0; k < x.n; ++k) {
      const double xik = x(i, k);
      if (xik == 0.0) continue;
      for (std::size_t j = 0; j < x.n; ++j) r(i, j) += xik * y(k, j);
    }
  return r;
}

double norm1(const DenseMatrix& m) {
  double best = 0.0;
  for (std::size_t j = 0; j < m.n; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < m.n; ++i) col += std::fabs(m(i, j));
    best = std::max(best, col);
  }
  return best;
}

struct MomentDerivative {
  Vec3 dmu;
  Mat3 dsigma;
};

MomentDerivative moment_rhs(const Mat3& m, double q, const Vec3& mu, const Mat3& sigma) {
  const Mat3 ms = m * sigma;
  Mat3 ds = ms + ms.transposed();
  ds(2, 2) += q;
  return {m * mu, ds};
}

}  // namespace

DenseMatrix DenseMatrix::from(const Mat3& m) {
  DenseMatrix r(3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) r(i, j) = m(i, j);
  return r;
}

DenseMatrix DenseMatrix::kron_identity(const Mat3& m, std::size_t d) {
  DenseMatrix r(3 * d);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < d; ++k) r(i * d + k, j * d + k) = m(i, j);
  return r;
}

DenseMatrix expm_dense(const DenseMatrix& m, double t) {
  if (m.n == 0 || m.n > 12) throw std::invalid_argument("expm_dense: supports 1 <= n <= 12");
  DenseMatrix a = m;
  for (double& x : a.a) x *= t;
  const double norm = norm1(a);
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const double scale = std::ldexp(1.0, -squarings);
  for (double& x : a.a) x *= scale;

  // Horner form of sum_{k<=18} A^k / k!.
  constexpr int kDegree = 18;
  DenseMatrix result(m.n);
  for (std::size_t i = 0; i < m.n; ++i) result(i, i) = 1.0;
  for (int k = kDegree; k >= 1; --k) {
    DenseMatrix next = multiply(a, result);
    for (double& x : next.a) x /= k;
    for (std::size_t i = 0; i < m.n; ++i) next(i, i) += 1.0;
    result = std::move(next);
  }
  for (int s = 0; s < squarings; ++s) result = multiply(result, result);
  return result;
}

ScalarMoments integrate_moment_odes(const HoldParams& params, const DriftMatrix& drift, const Vec3& mu0,
                                    const Mat3& sigma0, double t, double dt) {
  if (!(t >= 0.0 && t <= 10.0)) throw std::invalid_argument("integrate_moment_odes: t must lie in [0, 10]");
  const double q = params.diffusion();
  const Mat3& m = drift.entries;
  ScalarMoments s{mu0, sigma0};
  if (t == 0.0) return s;
  const auto steps = static_cast<std::size_t>(std::ceil(t / dt - 1e-9));
  const double h = t / static_cast<double>(steps);
  for (std::size_t n = 0; n < steps; ++n) {
    const auto k1 = moment_rhs(m, q, s.mu, s.sigma);
    Vec3 mu2, mu3, mu4;
    for (int i = 0; i < 3; ++i) mu2[i] = s.mu[i] + 0.5 * h * k1.dmu[i];
    const auto k2 = moment_rhs(m, q, mu2, s.sigma + (0.5 * h) * k1.dsigma);
    for (int i = 0; i < 3; ++i) mu3[i] = s.mu[i] + 0.5 * h * k2.dmu[i];
    const auto k3 = moment_rhs(m, q, mu3, s.sigma + (0.5 * h) * k2.dsigma);
    for (int i = 0; i < 3; ++i) mu4[i] = s.mu[i] + h * k3.dmu[i];
    const auto k4 = moment_rhs(m, q, mu4, s.sigma + h * k3.dsigma);
    for (int i = 0; i < 3; ++i) s.mu[i] += h / 6.0 * (k1.dmu[i] + 2 * k2.dmu[i] + 2 * k3.dmu[i] + k4.dmu[i]);
    s.sigma = s.sigma + (h / 6.0) * (k1.dsigma + 2.0 * k2.dsigma + 2.0 * k3.dsigma + k4.dsigma);
  }
  return s;
}

void McConfig::validate(const HoldParams& params) const {
  if (!(dt > 0.0 && dt <= 1e-3)) throw std::invalid_argument("McConfig: dt must lie in (0, 1e-3]");
  if (n_paths < 10000) throw std::invalid_argument("McConfig: n_paths must be >= 1e4");
  if (checkpoints.empty()) throw std::invalid_argument("McConfig: need at least one checkpoint");
  if (!std::is_sorted(checkpoints.begin(), checkpoints.end()))
    throw std::invalid_argument("McConfig: checkpoints must be sorted");
  if (!(checkpoints.front() > 0.0) || checkpoints.back() > params.T)
    throw std::invalid_argument("McConfig: checkpoints must lie in (0, T]");
}

std::vector<EmpiricalMoments> em_forward_simulate(const HoldParams& params, const PhaseState& x0_mean,
                                                  const Vec3& sigma0_diag, const McConfig& cfg) {
  params.validate();
  cfg.validate(params);
  const std::size_t d = x0_mean.dim();
  if (d > 4) throw std::invalid_argument("em_forward_simulate: oracle supports d <= 4");
  const std::size_t width = 3 * d;
  const std::size_t n = cfg.n_paths;
  const std::size_t nc = cfg.checkpoints.size();
  const Mat3 f = drift_matrix(params, Direction::forward).entries;
  const double noise_sd = cfg.noise_scale * std::sqrt(params.diffusion() * cfg.dt);

  // snapshots[c][path * width + i]
  std::vector<std::vector<double>> snapshots(nc, std::vector<double>(n * width));

  parallel_for(n, cfg.threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> x(width), dx(width);
    for (std::size_t path = begin; path < end; ++path) {
      Rng rng(cfg.seed, path);
      for (std::size_t b = 0; b < 3; ++b)
        for (std::size_t k = 0; k < d; ++k)
          x[b * d + k] = x0_mean.at(b, k) + std::sqrt(sigma0_diag[b]) * rng.normal();
      double t = 0.0;
      for (std::size_t c = 0; c < nc; ++c) {
        const double target = cfg.checkpoints[c];
        const auto steps = static_cast<std::size_t>(std::llround((target - t) / cfg.dt));
        const double h = steps > 0 ? (target - t) / static_cast<double>(steps) : 0.0;
        const double sd = steps > 0 ? noise_sd * std::sqrt(h / cfg.dt) : 0.0;
        for (std::size_t s = 0; s < steps; ++s) {
          for (std::size_t k = 0; k < d; ++k) {
            const double q = x[k], p = x[d + k], a = x[2 * d + k];
            x[k] = q + h * (f(0, 1) * p);
            x[d + k] = p + h * (f(1, 0) * q + f(1, 2) * a);
            x[2 * d + k] = a + h * (f(2, 1) * p + f(2, 2) * a) + sd * rng.normal();
          }
        }
        t = target;
        std::copy(x.begin(), x.end(), snapshots[c].begin() + static_cast<std::ptrdiff_t>(path * width));
      }
    }
  });

  std::vector<EmpiricalMoments> out;
  out.reserve(nc);
  const double nn = static_cast<double>(n);
  for (std::size_t c = 0; c < nc; ++c) {
    const auto& snap = snapshots[c];
    EmpiricalMoments em;
    em.t = cfg.checkpoints[c];
    em.mean.assign(width, 0.0);
    em.se_mean.assign(width, 0.0);
    for (std::size_t path = 0; path < n; ++path)
      for (std::size_t i = 0; i < width; ++i) em.mean[i] += snap[path * width + i];
    for (double& m : em.mean) m /= nn;
    for (std::size_t path = 0; path < n; ++path)
      for (std::size_t i = 0; i < width; ++i) {
        const double r = snap[path * width + i] - em.mean[i];
        em.se_mean[i] += r * r;
      }
    for (double& v : em.se_mean) v = std::sqrt(v / (nn - 1.0) / nn);

    const double npool = nn * static_cast<double>(d);
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t b = a; b < 3; ++b) {
        double sum = 0.0, sumsq = 0.0;
        for (std::size_t path = 0; path < n; ++path)
          for (std::size_t k = 0; k < d; ++k) {
            const double z = (snap[path * width + a * d + k] - em.mean[a * d + k]) *
                             (snap[path * width + b * d + k] - em.mean[b * d + k]);
            sum += z;
            sumsq += z * z;
          }
        const double cov = sum / npool;
        const double var_z = std::max(0.0, sumsq / npool - cov * cov);
        em.cov(a, b) = em.cov(b, a) = cov * npool / (npool - 1.0);
        em.se_cov(a, b) = em.se_cov(b, a) = std::sqrt(var_z / npool);
      }
    out.push_back(std::move(em));
  }
  return out;
}

}  // namespace hold::oracle
