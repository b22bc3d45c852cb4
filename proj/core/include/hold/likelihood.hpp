#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hold/ode.hpp"
#include "hold/params.hpp"
#include "hold/score_model.hpp"

namespace hold {

struct NllOptions {
  std::size_t n_aux = 20;
  std::size_t n_hutch = 10;
  OdeTolerances tol;
  /// (q0, aux) rows integrated jointly per ODE solve.
  std::size_t group = 256;
  unsigned threads = 1;

  void validate() const;
};

struct NllEstimate {
  double bound_nats = 0.0;  // per data point (all d dims)
  double bound_bits_per_dim = 0.0;
  double std_error = 0.0;
  std::size_t n_hutchinson = 0;
  std::size_t n_aux_draws = 0;
  std::size_t n_points = 0;
  std::size_t dim = 0;
  std::size_t max_nfe = 0;
  std::vector<double> per_point;  // bound for each q0, averaged over aux draws
  /// Same bound with the realized aux log-density log r(p0, s0) in place of
  /// its expectation -2dH. Unbiased for the same quantity, much less noisy.
  double bound_nats_sampled_entropy = 0.0;
  double std_error_sampled_entropy = 0.0;
  std::vector<double> per_point_sampled_entropy;
};

double nats_to_bits_per_dim(double nats, std::size_t d);
double bits_per_dim_to_nats(double bits, std::size_t d);

/// Differential entropy of one coordinate of N(0, alpha/L): 1/2 + ln sqrt(2 pi alpha / L).
double aux_entropy(const HoldParams& params);

/// Row-wise mean over probes of eps^T (dS/ds) eps. probes holds n_probe blocks
/// of n x d; out has n entries.
void hutchinson_trace(const ScoreModel& net, std::span<const double> x, std::size_t n, double t,
                      std::span<const double> probes, std::size_t n_probe, std::span<double> out);

/// Upper bound on -log p(q0) via the probability-flow ODE with (p0, s0) drawn
/// from N(0, alpha/L) as auxiliary variables. q0 is n x d.
NllEstimate nll_bound(const HoldParams& params, const ScoreModel& net, std::span<const double> q0, std::size_t d,
                      std::uint64_t seed, const NllOptions& opts = {});

/// Integral of div K along one encode trajectory per row (t_min -> T); x is
/// overwritten with the endpoint. Exposed for tests.
std::vector<double> divergence_integral(const HoldParams& params, const ScoreModel& net, std::span<double> x,
                                        std::size_t n, std::span<const double> probes, std::size_t n_probe,
                                        const OdeTolerances& tol, std::size_t* nfe = nullptr);

}  // namespace hold
