#include "hold/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hold/parallel.hpp"

namespace hold {

std::string to_string(Schedule s) { return s == Schedule::uniform ? "uniform" : "quadratic"; }

std::string to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::em: return "em";
    case SamplerKind::lt: return "lt";
    case SamplerKind::ode: return "ode";
  }
  return "?";
}

std::string to_string(BStep b) { return b == BStep::euler ? "euler" : "midpoint"; }

BStep b_step_from_string(const std::string& s) {
  if (s == "euler") return BStep::euler;
  if (s == "midpoint") return BStep::midpoint;
  throw std::invalid_argument("unknown b_step '" + s + "' (expected euler|midpoint)");
}

Schedule schedule_from_string(const std::string& s) {
  if (s == "uniform") return Schedule::uniform;
  if (s == "quadratic") return Schedule::quadratic;
  throw std::invalid_argument("unknown schedule '" + s + "' (expected uniform|quadratic)");
}

SamplerKind sampler_from_string(const std::string& s) {
  if (s == "em") return SamplerKind::em;
  if (s == "lt") return SamplerKind::lt;
  if (s == "ode") return SamplerKind::ode;
  throw std::invalid_argument("unknown sampler '" + s + "' (expected em|lt|ode)");
}

void TimeGrid::validate() const {
  if (!(t_min > 0.0) || !(T > t_min) || !std::isfinite(T))
    throw std::invalid_argument("TimeGrid: need 0 < t_min < T");
}

std::vector<double> TimeGrid::times() const {
  validate();
  std::vector<double> t(n_steps + 1);
  const double span = T - t_min;
  for (std::size_t i = 0; i <= n_steps; ++i) {
    const double u = n_steps == 0 ? 0.0 : static_cast<double>(i) / static_cast<double>(n_steps);
    t[i] = schedule == Schedule::uniform ? T - span * u : t_min + span * (1.0 - u) * (1.0 - u);
  }
  // pin the endpoints exactly
  t.front() = T;
  t.back() = n_steps == 0 ? T : t_min;
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i] < t[i - 1])) throw std::invalid_argument("TimeGrid: times not strictly decreasing (too many steps?)");
  return t;
}

AStep make_a_step(const HoldParams& params, double h) {
  AStep a;
  a.h = h;
  a.mean = expm_scalar_kernel(Direction::reverse_split, h);
  a.cov = noise_covariance(params, Direction::reverse_split, h);
  try {
    a.chol = chol3(a.cov);
  } catch (const NotPositiveDefinite&) {
    if (max_abs(a.cov) >= 1e-16) throw;
  }
  return a;
}

AStepTable::AStepTable(const HoldParams& params, const std::vector<double>& times) {
  steps_.reserve(times.size() > 0 ? times.size() - 1 : 0);
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    const double dt = times[i] - times[i + 1];
    // uniform grids hit the same dt repeatedly
    if (!steps_.empty() && steps_.back().h == 0.5 * dt)
      steps_.push_back(steps_.back());
    else
      steps_.push_back(make_a_step(params, 0.5 * dt));
  }
}

StateBatch prior_batch(const HoldParams& params, std::size_t n, std::size_t d, std::uint64_t seed) {
  StateBatch x(n, d);
  std::vector<double> noise(3 * d);
  for (std::size_t i = 0; i < n; ++i) {
    Rng r(seed, i);
    for (auto& z : noise) z = r.normal();
    const PhaseState p = prior_sample(params, d, noise);
    std::copy(p.data().begin(), p.data().end(), x.row(i).begin());
  }
  return x;
}

namespace {

// Prior draws consume the first 3d normals of each chain stream; the same
// generators then feed the per-step noise.
std::vector<Rng> chain_rngs(const HoldParams& params, StateBatch& x, std::size_t n, std::size_t d,
                            std::uint64_t seed, const StateBatch* initial) {
  if (initial && (initial->size() != n || initial->dim() != d))
    throw std::invalid_argument("sampler: initial state has the wrong shape");
  std::vector<Rng> rng;
  rng.reserve(n);
  x = StateBatch(n, d);
  std::vector<double> noise(3 * d);
  for (std::size_t i = 0; i < n; ++i) {
    rng.emplace_back(seed, i);
    for (auto& z : noise) z = rng.back().normal();
    const PhaseState p = prior_sample(params, d, noise);
    std::copy(p.data().begin(), p.data().end(), x.row(i).begin());
  }
  if (initial) x = *initial;
  return rng;
}

void check_finite(const StateBatch& x, std::size_t step, const char* who) {
  for (double v : x.data())
    if (!std::isfinite(v))
      throw std::runtime_error(std::string(who) + ": non-finite state at step " + std::to_string(step));
}

void a_half(const AStep& a, StateBatch& x, std::vector<Rng>& rng, double noise_scale, unsigned threads) {
  const std::size_t d = x.dim();
  parallel_for(x.size(), threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      auto r = x.row(i);
      for (std::size_t k = 0; k < d; ++k) {
        const Vec3 v{{r[k], r[d + k], r[2 * d + k]}};
        Vec3 y = a.mean * v;
        if (a.chol) {
          // draws are taken even when noise_scale == 0 so streams stay aligned
          const Vec3 z{{rng[i].normal(), rng[i].normal(), rng[i].normal()}};
          const Vec3 c = a.chol->lower * z;
          for (int j = 0; j < 3; ++j) y[j] += noise_scale * c[j];
        }
        r[k] = y[0], r[d + k] = y[1], r[2 * d + k] = y[2];
      }
    }
  });
}

void strang(const HoldParams& params, const ScoreModel& net, StateBatch& x, double t, double dt, const AStep& a,
            std::vector<Rng>& rng, double noise_scale, std::span<double> sc, unsigned threads, BStep b) {
  const std::size_t n = x.size(), d = x.dim();
  const double c = 2.0 * params.xi, tm = t - 0.5 * dt;
  a_half(a, x, rng, noise_scale, threads);
  // B with q, p and the model time (interval midpoint) frozen
  if (b == BStep::euler) {
    net.score(x.data(), n, tm, sc);
    for (std::size_t i = 0; i < n; ++i) {
      auto r = x.row(i);
      for (std::size_t k = 0; k < d; ++k) {
        double& s = r[2 * d + k];
        s += c * (sc[i * d + k] / params.L + s) * dt;
      }
    }
  } else {
    StateBatch half = x;
    net.score(x.data(), n, tm, sc);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < d; ++k) {
        double& s = half.at(i, 2, k);
        s += c * (sc[i * d + k] / params.L + s) * (0.5 * dt);
      }
    net.score(half.data(), n, tm, sc);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < d; ++k) x.at(i, 2, k) += c * (sc[i * d + k] / params.L + half.at(i, 2, k)) * dt;
  }
  a_half(a, x, rng, noise_scale, threads);
}

}  // namespace

SampleResult em_reverse(const HoldParams& params, const ScoreModel& net, const TimeGrid& grid, std::size_t n,
                        std::uint64_t seed, const SamplerOptions& opts) {
  params.validate();
  const std::size_t d = net.dim();
  const auto t = grid.times();
  SampleResult res;
  auto rng = chain_rngs(params, res.state, n, d, seed, opts.initial);
  StateBatch& x = res.state;
  if (opts.observer) opts.observer(0, t[0], x);

  const Mat3 f = drift_matrix(params, Direction::forward).entries;
  const double c = 2.0 * params.xi / params.L;
  std::vector<double> sc(n * d);
  for (std::size_t step = 0; step + 1 < t.size(); ++step) {
    const double dt = t[step] - t[step + 1];
    net.score(x.data(), n, t[step], sc);
    ++res.nfe;
    const double sd = std::sqrt(c * dt) * opts.noise_scale;
    parallel_for(n, opts.threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        auto r = x.row(i);
        for (std::size_t k = 0; k < d; ++k) {
          const Vec3 v{{r[k], r[d + k], r[2 * d + k]}};
          const Vec3 fv = f * v;
          const double z = rng[i].normal();
          r[k] = v[0] - dt * fv[0];
          r[d + k] = v[1] - dt * fv[1];
          r[2 * d + k] = v[2] + dt * (-fv[2] + c * sc[i * d + k]) + sd * z;
        }
      }
    });
    check_finite(x, step + 1, "em_reverse");
    if (opts.observer) opts.observer(step + 1, t[step + 1], x);
  }
  return res;
}

void lt_step(const HoldParams& params, const ScoreModel& net, StateBatch& x, double t, double dt, const AStep& a,
             std::vector<Rng>& rng, double noise_scale, std::span<double> score_buf, BStep b) {
  if (!(dt > 0.0)) throw std::invalid_argument("lt_step: dt must be > 0");
  if (t - dt < params.t_min * (1.0 - 1e-12)) throw std::invalid_argument("lt_step: t - dt below t_min");
  if (std::fabs(a.h - 0.5 * dt) > 1e-15 * dt) throw std::invalid_argument("lt_step: A-step built for another dt");
  if (score_buf.size() < x.size() * x.dim()) throw std::invalid_argument("lt_step: score buffer too small");
  strang(params, net, x, t, dt, a, rng, noise_scale, score_buf, 1, b);
}

SampleResult lt_sample(const HoldParams& params, const ScoreModel& net, const TimeGrid& grid, std::size_t n,
                       std::uint64_t seed, const SamplerOptions& opts) {
  params.validate();
  const std::size_t d = net.dim();
  const auto t = grid.times();
  const AStepTable table(params, t);
  SampleResult res;
  auto rng = chain_rngs(params, res.state, n, d, seed, opts.initial);
  StateBatch& x = res.state;
  if (opts.observer) opts.observer(0, t[0], x);
  std::vector<double> sc(n * d);
  for (std::size_t step = 0; step + 1 < t.size(); ++step) {
    const double dt = t[step] - t[step + 1];
    strang(params, net, x, t[step], dt, table.at(step), rng, opts.noise_scale, sc, opts.threads, opts.b_step);
    res.nfe += opts.b_step == BStep::euler ? 1 : 2;
    check_finite(x, step + 1, "lt_sample");
    if (opts.observer) opts.observer(step + 1, t[step + 1], x);
  }
  return res;
}

void flow_field(const HoldParams& params, const ScoreModel& net, std::span<const double> x, std::size_t n,
                double t, std::span<double> k, std::span<double> score_buf) {
  const std::size_t d = net.dim();
  net.score(x, n, t, score_buf);
  const double g = params.gamma, xi = params.xi, c = xi / params.L;
  for (std::size_t i = 0; i < n; ++i) {
    const double* r = x.data() + i * 3 * d;
    double* o = k.data() + i * 3 * d;
    for (std::size_t j = 0; j < d; ++j) {
      const double q = r[j], p = r[d + j], s = r[2 * d + j];
      o[j] = p;
      o[d + j] = -q + g * s;
      o[2 * d + j] = -g * p - xi * s - c * score_buf[i * d + j];
    }
  }
}

OdeResult prob_flow_ode(const HoldParams& params, const ScoreModel& net, StateBatch x, double t_from, double t_to,
                        const OdeOptions& opts) {
  params.validate();
  if (!(opts.tol.atol >= 1e-8 && opts.tol.rtol >= 1e-8)) throw std::invalid_argument("prob_flow_ode: tol must be >= 1e-8");
  if (opts.group == 0) throw std::invalid_argument("prob_flow_ode: group must be >= 1");
  const double lo = std::min(t_from, t_to), hi = std::max(t_from, t_to);
  if (lo < params.t_min * (1.0 - 1e-12) || hi > params.T * (1.0 + 1e-12))
    throw std::invalid_argument("prob_flow_ode: times must lie in [t_min, T]");
  const std::size_t n = x.size(), d = x.dim(), w = 3 * d;
  if (d != net.dim()) throw std::invalid_argument("prob_flow_ode: state and score dimensions differ");
  const std::size_t n_groups = (n + opts.group - 1) / opts.group;
  std::vector<OdeStats> stats(n_groups);
  parallel_for(n_groups, opts.threads, [&](std::size_t gb, std::size_t ge) {
    for (std::size_t g = gb; g < ge; ++g) {
      const std::size_t b = g * opts.group, m = std::min(n, b + opts.group) - b;
      std::span<double> y(x.data().data() + b * w, m * w);
      std::vector<double> sc(m * d);
      const OdeRhs f = [&](double t, std::span<const double> yy, std::span<double> k) {
        flow_field(params, net, yy, m, t, k, sc);
      };
      stats[g] = dopri5(f, y, t_from, t_to, opts.tol);
    }
  });
  OdeResult res;
  for (const auto& s : stats) {
    res.nfe = std::max(res.nfe, s.rhs_evals);
    res.steps = std::max(res.steps, s.steps);
  }
  res.state = std::move(x);
  return res;
}

OdeResult prob_flow_ode(const HoldParams& params, const ScoreModel& net, StateBatch x, FlowDirection dir,
                        const OdeOptions& opts) {
  return dir == FlowDirection::generate ? prob_flow_ode(params, net, std::move(x), params.T, params.t_min, opts)
                                        : prob_flow_ode(params, net, std::move(x), params.t_min, params.T, opts);
}

SampleResult ode_sample(const HoldParams& params, const ScoreModel& net, std::size_t n, std::size_t d,
                        std::uint64_t seed, const OdeOptions& opts) {
  auto r = prob_flow_ode(params, net, prior_batch(params, n, d, seed), FlowDirection::generate, opts);
  return {std::move(r.state), r.nfe};
}

std::vector<double> q_block(const StateBatch& x) {
  const std::size_t d = x.dim();
  std::vector<double> q(x.size() * d);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t k = 0; k < d; ++k) q[i * d + k] = x.at(i, 0, k);
  return q;
}

}  // namespace hold
