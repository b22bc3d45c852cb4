#include "hold/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hold/kernel.hpp"
#include "hold/parallel.hpp"
#include "hold/rng.hpp"
#include "hold/samplers.hpp"

namespace hold {

void NllOptions::validate() const {
  if (n_aux == 0) throw std::invalid_argument("nll: n_aux must be >= 1");
  if (n_hutch == 0) throw std::invalid_argument("nll: n_hutch must be >= 1");
  if (group == 0) throw std::invalid_argument("nll: group must be >= 1");
  if (!(tol.atol >= 1e-8 && tol.rtol >= 1e-8)) throw std::invalid_argument("nll: tol must be >= 1e-8");
}

double nats_to_bits_per_dim(double nats, std::size_t d) { return nats / (static_cast<double>(d) * std::numbers::ln2); }
double bits_per_dim_to_nats(double bits, std::size_t d) { return bits * static_cast<double>(d) * std::numbers::ln2; }

double aux_entropy(const HoldParams& params) {
  return 0.5 + 0.5 * std::log(2.0 * std::numbers::pi * params.alpha / params.L);
}

void hutchinson_trace(const ScoreModel& net, std::span<const double> x, std::size_t n, double t,
                      std::span<const double> probes, std::size_t n_probe, std::span<double> out) {
  const std::size_t d = net.dim();
  std::vector<double> vjp(n * d);
  std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(n), 0.0);
  for (std::size_t j = 0; j < n_probe; ++j) {
    const auto eps = probes.subspan(j * n * d, n * d);
    net.score_vjp_s(x, n, t, eps, vjp);
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) acc += vjp[i * d + k] * eps[i * d + k];
      out[i] += acc;
    }
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= static_cast<double>(n_probe);
}

std::vector<double> divergence_integral(const HoldParams& params, const ScoreModel& net, std::span<double> x,
                                        std::size_t n, std::span<const double> probes, std::size_t n_probe,
                                        const OdeTolerances& tol, std::size_t* nfe) {
  const std::size_t d = net.dim(), w = 3 * d;
  if (x.size() != n * w) throw std::invalid_argument("divergence_integral: x must be n x 3d");
  if (probes.size() != n_probe * n * d) throw std::invalid_argument("divergence_integral: probes must be n_probe x n x d");
  // state: n rows of x, then n accumulators
  std::vector<double> y(n * w + n, 0.0);
  std::copy(x.begin(), x.end(), y.begin());
  std::vector<double> sc(n * d), tr(n);
  const double xi = params.xi, c = params.xi / params.L;
  // trace of the linear drift is -xi per dimension
  const double lin = -xi * static_cast<double>(d);
  const OdeRhs f = [&](double t, std::span<const double> yy, std::span<double> k) {
    const auto xs = yy.first(n * w);
    flow_field(params, net, xs, n, t, k.first(n * w), sc);
    hutchinson_trace(net, xs, n, t, probes, n_probe, tr);
    for (std::size_t i = 0; i < n; ++i) k[n * w + i] = lin - c * tr[i];
  };
  const OdeStats st = dopri5(f, y, params.t_min, params.T, tol);
  if (nfe) *nfe = st.rhs_evals;
  std::copy(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n * w), x.begin());
  return {y.begin() + static_cast<std::ptrdiff_t>(n * w), y.end()};
}

NllEstimate nll_bound(const HoldParams& params, const ScoreModel& net, std::span<const double> q0, std::size_t d,
                      std::uint64_t seed, const NllOptions& opts) {
  params.validate();
  opts.validate();
  if (d != net.dim()) throw std::invalid_argument("nll: data and score dimensions differ");
  if (d == 0 || q0.size() % d != 0 || q0.empty()) throw std::invalid_argument("nll: q0 must be a non-empty n x d batch");
  const std::size_t n = q0.size() / d, rows = n * opts.n_aux, w = 3 * d;
  const double aux_sd = std::sqrt(params.alpha / params.L);
  const std::uint64_t aux_key = derive_seed(seed, 1), probe_key = derive_seed(seed, 2);

  std::vector<double> logp(rows), log_aux(rows);
  const std::size_t n_groups = (rows + opts.group - 1) / opts.group;
  std::vector<std::size_t> nfe(n_groups, 0);
  parallel_for(n_groups, opts.threads, [&](std::size_t gb, std::size_t ge) {
    for (std::size_t g = gb; g < ge; ++g) {
      const std::size_t b = g * opts.group, m = std::min(rows, b + opts.group) - b;
      std::vector<double> x(m * w), probes(opts.n_hutch * m * d);
      for (std::size_t r = 0; r < m; ++r) {
        const std::size_t row = b + r, i = row / opts.n_aux;
        Rng aux(aux_key, row), pr(probe_key, row);
        double la = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          const double zp = aux.normal(), zs = aux.normal();
          x[r * w + k] = q0[i * d + k];
          x[r * w + d + k] = aux_sd * zp;
          x[r * w + 2 * d + k] = aux_sd * zs;
          la += -0.5 * (zp * zp + zs * zs) - 2.0 * std::log(aux_sd) - std::log(2.0 * std::numbers::pi);
        }
        log_aux[row] = la;
        for (std::size_t j = 0; j < opts.n_hutch; ++j)
          for (std::size_t k = 0; k < d; ++k) probes[(j * m + r) * d + k] = pr.rademacher();
      }
      const auto div = divergence_integral(params, net, x, m, probes, opts.n_hutch, opts.tol, &nfe[g]);
      for (std::size_t r = 0; r < m; ++r)
        logp[b + r] = prior_logpdf(params, std::span<const double>(x.data() + r * w, w)) + div[r];
    }
  });

  NllEstimate est;
  est.n_hutchinson = opts.n_hutch;
  est.n_aux_draws = opts.n_aux;
  est.n_points = n;
  est.dim = d;
  est.max_nfe = *std::max_element(nfe.begin(), nfe.end());
  const double ent = 2.0 * static_cast<double>(d) * aux_entropy(params);
  auto summarize = [n](const std::vector<double>& v, double& mean, double& se) {
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    se = n > 1 ? std::sqrt(var / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
  };
  est.per_point.resize(n);
  est.per_point_sampled_entropy.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0, acc_s = 0.0;
    for (std::size_t a = 0; a < opts.n_aux; ++a) {
      const std::size_t row = i * opts.n_aux + a;
      acc += -logp[row] - ent;
      acc_s += -logp[row] + log_aux[row];
    }
    est.per_point[i] = acc / static_cast<double>(opts.n_aux);
    est.per_point_sampled_entropy[i] = acc_s / static_cast<double>(opts.n_aux);
  }
  summarize(est.per_point, est.bound_nats, est.std_error);
  summarize(est.per_point_sampled_entropy, est.bound_nats_sampled_entropy, est.std_error_sampled_entropy);
  est.bound_bits_per_dim = nats_to_bits_per_dim(est.bound_nats, d);
  return est;
}

}  // namespace hold
