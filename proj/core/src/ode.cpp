#include "hold/ode.hpp"

#include <algorithm>
#include <cmath>

namespace hold {
namespace {

// Dormand-Prince tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b - b_hat (error weights).
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;

}  // namespace

OdeStats dopri5(const OdeRhs& f, std::span<double> y, double t0, double t1, const OdeTolerances& tol) {
  OdeStats st;
  if (t0 == t1) return st;
  const std::size_t n = y.size();
  const double dir = t1 > t0 ? 1.0 : -1.0;
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), ynew(n);

  f(t0, y, k1);
  ++st.rhs_evals;

  // Initial step (Hairer, Norsett & Wanner II.4).
  double h;
  {
    std::vector<double> sc(n);
    for (std::size_t i = 0; i < n; ++i) sc[i] = tol.atol + tol.rtol * std::fabs(y[i]);
    double d0 = 0, d1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      d0 += (y[i] / sc[i]) * (y[i] / sc[i]);
      d1 += (k1[i] / sc[i]) * (k1[i] / sc[i]);
    }
    d0 = std::sqrt(d0 / static_cast<double>(n)), d1 = std::sqrt(d1 / static_cast<double>(n));
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, std::fabs(t1 - t0));
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + dir * h0 * k1[i];
    f(t0 + dir * h0, tmp, k2);
    ++st.rhs_evals;
    double d2 = 0;
    for (std::size_t i = 0; i < n; ++i) d2 += ((k2[i] - k1[i]) / sc[i]) * ((k2[i] - k1[i]) / sc[i]);
    d2 = std::sqrt(d2 / static_cast<double>(n)) / h0;
    const double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / std::max(d1, d2), 0.2);
    h = std::min(100 * h0, h1);
  }

  double t = t0;
  while (dir * (t1 - t) > 0.0) {
    if (st.steps + st.rejected >= tol.max_steps) throw std::runtime_error("dopri5: too many steps");
    bool last = false;
    if (h >= std::fabs(t1 - t)) {
      h = std::fabs(t1 - t);
      last = true;
    }
    if (h < tol.min_step && !last) throw StepUnderflow(t, h);
    const double hs = dir * h;
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hs * a21 * k1[i];
    f(t + c2 * hs, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
    f(t + c3 * hs, tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    f(t + c4 * hs, tmp, k4);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    f(t + c5 * hs, tmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    f(t + hs, tmp, k6);
    for (std::size_t i = 0; i < n; ++i)
      ynew[i] = y[i] + hs * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    f(t + hs, ynew, k7);
    st.rhs_evals += 6;

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = tol.atol + tol.rtol * std::max(std::fabs(y[i]), std::fabs(ynew[i]));
      err += (e / sc) * (e / sc);
    }
    err = std::sqrt(err / static_cast<double>(n));
    if (!std::isfinite(err)) throw std::runtime_error("dopri5: non-finite state at t = " + std::to_string(t));

    if (err <= 1.0) {
      t = last ? t1 : t + hs;
      std::copy(ynew.begin(), ynew.end(), y.begin());
      k1.swap(k7);
      ++st.steps;
      const double fac = err == 0.0 ? 10.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 10.0);
      h *= fac;
    } else {
      ++st.rejected;
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      if (h < tol.min_step) throw StepUnderflow(t, h);
    }
  }
  return st;
}

}  // namespace hold
