#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hold/kernel.hpp"
#include "hold/ode.hpp"
#include "hold/params.hpp"
#include "hold/rng.hpp"
#include "hold/score_model.hpp"
#include "hold/state.hpp"

namespace hold {

enum class Schedule { uniform, quadratic };
enum class SamplerKind { em, lt, ode };
/// How the B sub-flow s' = 2 xi (S/L + s) is advanced. euler is one score
/// evaluation per step; midpoint is explicit RK2 (two evaluations).
enum class BStep { euler, midpoint };

std::string to_string(Schedule s);
std::string to_string(SamplerKind k);
Schedule schedule_from_string(const std::string& s);
SamplerKind sampler_from_string(const std::string& s);
std::string to_string(BStep b);
BStep b_step_from_string(const std::string& s);

struct TimeGrid {
  std::size_t n_steps = 1000;
  Schedule schedule = Schedule::quadratic;
  double t_min = 1e-5;
  double T = 5.0;

  void validate() const;
  /// n_steps + 1 model times, strictly decreasing from T to t_min.
  std::vector<double> times() const;
};

/// Exact A half-step for one step size: x -> mean * x + chol * N(0, I).
struct AStep {
  double h = 0.0;  // half-step length
  Mat3 mean;
  Mat3 cov;
  std::optional<CholFactor> chol;  // empty: covariance negligible, mean-only step
};

AStep make_a_step(const HoldParams& params, double h);

/// Per-step cache keyed by step length; quadratic grids have a distinct dt per step.
class AStepTable {
 public:
  AStepTable(const HoldParams& params, const std::vector<double>& times);
  const AStep& at(std::size_t step) const { return steps_[step]; }
  std::size_t size() const { return steps_.size(); }

 private:
  std::vector<AStep> steps_;
};

struct SamplerOptions {
  unsigned threads = 1;
  /// 0 freezes the noise (mean propagation); 1 is the sampler proper.
  double noise_scale = 1.0;
  /// Start here instead of the prior (the streams still skip the prior draws).
  const StateBatch* initial = nullptr;
  BStep b_step = BStep::euler;
  /// Called after the initial state (step 0) and after each step with the current model time.
  std::function<void(std::size_t step, double t, const StateBatch&)> observer;
};

struct SampleResult {
  StateBatch state;
  std::size_t nfe = 0;  // score evaluations per chain
};

/// n prior draws; chain i uses stream (seed, i).
StateBatch prior_batch(const HoldParams& params, std::size_t n, std::size_t d, std::uint64_t seed);

SampleResult em_reverse(const HoldParams& params, const ScoreModel& net, const TimeGrid& grid, std::size_t n,
                        std::uint64_t seed, const SamplerOptions& opts = {});

/// One Strang step A(dt/2) B(dt) A(dt/2) from model time t to t - dt.
/// rng holds one generator per chain. score_buf must hold n*d doubles.
void lt_step(const HoldParams& params, const ScoreModel& net, StateBatch& x, double t, double dt, const AStep& a,
             std::vector<Rng>& rng, double noise_scale, std::span<double> score_buf, BStep b = BStep::euler);

SampleResult lt_sample(const HoldParams& params, const ScoreModel& net, const TimeGrid& grid, std::size_t n,
                       std::uint64_t seed, const SamplerOptions& opts = {});

enum class FlowDirection { generate, encode };

struct OdeOptions {
  OdeTolerances tol;
  /// Rows integrated jointly; fixed so results do not depend on thread count.
  std::size_t group = 256;
  unsigned threads = 1;
};

struct OdeResult {
  StateBatch state;
  std::size_t nfe = 0;  // max over groups
  std::size_t steps = 0;
};

/// K(x, t) = F x + (0, 0, -xi/L S(x, t)), written into k (n x 3d).
void flow_field(const HoldParams& params, const ScoreModel& net, std::span<const double> x, std::size_t n,
                double t, std::span<double> k, std::span<double> score_buf);

/// Integrates the probability-flow ODE between model times t_from and t_to.
OdeResult prob_flow_ode(const HoldParams& params, const ScoreModel& net, StateBatch x, double t_from, double t_to,
                        const OdeOptions& opts = {});

/// Convenience: generate (T -> t_min) or encode (t_min -> T).
OdeResult prob_flow_ode(const HoldParams& params, const ScoreModel& net, StateBatch x, FlowDirection dir,
                        const OdeOptions& opts = {});

SampleResult ode_sample(const HoldParams& params, const ScoreModel& net, std::size_t n, std::size_t d,
                        std::uint64_t seed, const OdeOptions& opts = {});

/// The q block, n x d.
std::vector<double> q_block(const StateBatch& x);

}  // namespace hold
