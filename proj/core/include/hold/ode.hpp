#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hold {

struct OdeTolerances {
  double atol = 1e-5;
  double rtol = 1e-5;
  double min_step = 1e-12;
  std::size_t max_steps = 1000000;
};

struct OdeStats {
  std::size_t steps = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evals = 0;
};

class StepUnderflow : public std::runtime_error {
 public:
  StepUnderflow(double t, double h)
      : std::runtime_error("ODE step size underflow at t = " + std::to_string(t) + " (h = " + std::to_string(h) + ")"),
        t_(t) {}
  double where() const { return t_; }

 private:
  double t_;
};

using OdeRhs = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

/// Adaptive Dormand-Prince 5(4) from t0 to t1 (either direction) with the
/// RMS error norm over all components and first-same-as-last reuse. Step
/// control: safety 0.9, growth factor clamped to [0.2, 10]. y is overwritten.
OdeStats dopri5(const OdeRhs& f, std::span<double> y, double t0, double t1, const OdeTolerances& tol);

}  // namespace hold
