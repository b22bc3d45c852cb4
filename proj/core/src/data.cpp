#include "hold/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace hold {
namespace {

std::size_t pick(const std::vector<double>& weights, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  return weights.size() - 1;
}

void check_weights(const std::vector<double>& w, const char* what) {
  if (w.empty()) throw std::invalid_argument(std::string(what) + ": no components");
  double s = 0.0;
  for (double x : w) {
    if (!(x >= 0.0)) throw std::invalid_argument(std::string(what) + ": weights must be nonnegative");
    s += x;
  }
  if (std::fabs(s - 1.0) > 1e-12) throw std::invalid_argument(std::string(what) + ": weights must sum to 1");
}

}  // namespace

std::vector<double> Dataset::sample(std::size_t n, std::uint64_t key) const {
  const std::size_t d = dim();
  std::vector<double> out(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(key, i);
    sample_one(rng, std::span(out).subspan(i * d, d));
  }
  return out;
}

void Gmm1dSpec::validate() const {
  check_weights(weights, "Gmm1dSpec");
  if (means.size() != weights.size() || stds.size() != weights.size())
    throw std::invalid_argument("Gmm1dSpec: weights, means and stds must have equal length");
  for (double s : stds)
    if (!(s > 0.0)) throw std::invalid_argument("Gmm1dSpec: stds must be positive");
}

double Gmm1dSpec::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) m += weights[i] * means[i];
  return m;
}

std::vector<GaussianComponent> Gmm1dSpec::components() const {
  std::vector<GaussianComponent> c;
  for (std::size_t i = 0; i < weights.size(); ++i)
    if (weights[i] > 0.0) c.push_back({weights[i], {means[i]}, stds[i] * stds[i]});
  return c;
}

std::vector<double> sample_gmm1d(const Gmm1dSpec& spec, std::size_t n, Rng& rng) {
  spec.validate();
  std::vector<double> out(n);
  for (double& x : out) {
    const std::size_t c = pick(spec.weights, rng.uniform());
    x = spec.means[c] + spec.stds[c] * rng.normal();
  }
  return out;
}

double logpdf_gmm1d(const Gmm1dSpec& spec, double x) {
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  for (std::size_t i = 0; i < spec.weights.size(); ++i) {
    if (spec.weights[i] == 0.0) continue;
    const double z = (x - spec.means[i]) / spec.stds[i];
    terms.push_back(std::log(spec.weights[i]) - std::log(spec.stds[i] * std::sqrt(2.0 * std::numbers::pi)) -
                    0.5 * z * z);
    best = std::max(best, terms.back());
  }
  double s = 0.0;
  for (double t : terms) s += std::exp(t - best);
  return best + std::log(s);
}

double cdf_gmm1d(const Gmm1dSpec& spec, double x) {
  double c = 0.0;
  for (std::size_t i = 0; i < spec.weights.size(); ++i)
    c += spec.weights[i] * 0.5 * std::erfc(-(x - spec.means[i]) / (spec.stds[i] * std::numbers::sqrt2));
  return c;
}

double quantile_gmm1d(const Gmm1dSpec& spec, double u) {
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("quantile_gmm1d: u must lie in (0, 1)");
  double lo = spec.means[0], hi = spec.means[0];
  for (std::size_t i = 0; i < spec.means.size(); ++i) {
    lo = std::min(lo, spec.means[i] - 40.0 * spec.stds[i]);
    hi = std::max(hi, spec.means[i] + 40.0 * spec.stds[i]);
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::fabs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (cdf_gmm1d(spec, mid) < u ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> stratified_gmm1d(const Gmm1dSpec& spec, std::size_t n) {
  spec.validate();
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = quantile_gmm1d(spec, (static_cast<double>(i) + 0.5) / static_cast<double>(n));
  return q;
}

double entropy_gmm1d(const Gmm1dSpec& spec) {
  spec.validate();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, smin = lo;
  for (std::size_t i = 0; i < spec.means.size(); ++i) {
    lo = std::min(lo, spec.means[i] - 12 * spec.stds[i]);
    hi = std::max(hi, spec.means[i] + 12 * spec.stds[i]);
    smin = std::min(smin, spec.stds[i]);
  }
  // Simpson's rule with spacing smin / 200.
  auto n = static_cast<std::size_t>(std::ceil((hi - lo) / (smin / 200.0)));
  if (n % 2) ++n;
  const double h = (hi - lo) / static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double x = lo + h * static_cast<double>(i);
    const double lp = logpdf_gmm1d(spec, x);
    const double f = lp > -700 ? -std::exp(lp) * lp : 0.0;
    acc += f * ((i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0));
  }
  return acc * h / 3.0;
}

Gmm1d::Gmm1d(Gmm1dSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

void Gmm1d::sample_one(Rng& rng, std::span<double> out) const {
  const std::size_t c = pick(spec_.weights, rng.uniform());
  out[0] = spec_.means[c] + spec_.stds[c] * rng.normal();
}

GaussianData::GaussianData(std::vector<double> mean, double variance) : mean_(std::move(mean)), variance_(variance) {
  if (mean_.empty() || !(variance_ > 0.0)) throw std::invalid_argument("GaussianData: need d >= 1 and variance > 0");
}

void GaussianData::sample_one(Rng& rng, std::span<double> out) const {
  const double sd = std::sqrt(variance_);
  for (std::size_t k = 0; k < mean_.size(); ++k) out[k] = mean_[k] + sd * rng.normal();
}

void SwissRollSpec::validate() const {
  check_weights(weights, "SwissRollSpec");
  if (centers.size() != weights.size()) throw std::invalid_argument("SwissRollSpec: one weight per center");
  for (std::size_t i = 0; i < centers.size(); ++i)
    for (std::size_t j = i + 1; j < centers.size(); ++j)
      if (centers[i] == centers[j]) throw std::invalid_argument("SwissRollSpec: centers must be distinct");
  if (!(noise >= 0.0) || !(multiplier > 0.0)) throw std::invalid_argument("SwissRollSpec: bad noise/multiplier");
}

namespace {
void swiss_point(const SwissRollSpec& spec, Rng& rng, std::span<double> out) {
  const double phi = 1.5 * std::numbers::pi * (1.0 + 2.0 * rng.uniform());
  const std::size_t c = pick(spec.weights, rng.uniform());
  const double nx = rng.normal(), ny = rng.normal();
  out[0] = spec.multiplier * phi * std::cos(phi) + spec.noise * nx + spec.centers[c][0];
  out[1] = spec.multiplier * phi * std::sin(phi) + spec.noise * ny + spec.centers[c][1];
}
}  // namespace

std::vector<double> sample_swiss(const SwissRollSpec& spec, std::size_t n, Rng& rng) {
  spec.validate();
  std::vector<double> out(2 * n);
  for (std::size_t i = 0; i < n; ++i) swiss_point(spec, rng, std::span(out).subspan(2 * i, 2));
  return out;
}

SwissRolls::SwissRolls(SwissRollSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

void SwissRolls::sample_one(Rng& rng, std::span<double> out) const { swiss_point(spec_, rng, out); }

double w1_1d(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("w1_1d: empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  if (x.size() == y.size()) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::fabs(x[i] - y[i]);
    return s / static_cast<double>(x.size());
  }
  // Sweep the merged support accumulating |F_x - F_y| dz.
  const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double prev = std::min(x.front(), y.front()), acc = 0.0;
  while (i < x.size() || j < y.size()) {
    const double z = (j == y.size() || (i < x.size() && x[i] <= y[j])) ? x[i] : y[j];
    acc += std::fabs(static_cast<double>(i) / nx - static_cast<double>(j) / ny) * (z - prev);
    prev = z;
    while (i < x.size() && x[i] == z) ++i;
    while (j < y.size() && y[j] == z) ++j;
  }
  return acc;
}

namespace {

// integral of the mixture CDF from -inf to x
double cdf_antiderivative(const Gmm1dSpec& spec, double x) {
  double g = 0.0;
  for (std::size_t i = 0; i < spec.weights.size(); ++i) {
    const double z = (x - spec.means[i]) / spec.stds[i];
    const double Phi = 0.5 * std::erfc(-z / std::numbers::sqrt2);
    const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    g += spec.weights[i] * spec.stds[i] * (z * Phi + phi);
  }
  return g;
}

}  // namespace

double w1_to_gmm1d(std::span<const double> samples, const Gmm1dSpec& spec) {
  if (samples.empty()) throw std::invalid_argument("w1_to_gmm1d: empty sample");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  // left tail: F_n = 0; right tail: F_n = 1
  double acc = cdf_antiderivative(spec, x.front());
  {
    const double b = x.back();
    double tail = 0.0;
    for (std::size_t i = 0; i < spec.weights.size(); ++i) {
      const double z = -(b - spec.means[i]) / spec.stds[i];
      const double Phi = 0.5 * std::erfc(-z / std::numbers::sqrt2);
      const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
      tail += spec.weights[i] * spec.stds[i] * (z * Phi + phi);
    }
    acc += tail;
  }
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    const double a = x[k], b = x[k + 1];
    if (b <= a) continue;
    const double c = static_cast<double>(k + 1) / n;
    const double fa = cdf_gmm1d(spec, a), fb = cdf_gmm1d(spec, b);
    const double ga = cdf_antiderivative(spec, a), gb = cdf_antiderivative(spec, b);
    if (fb <= c) {
      acc += c * (b - a) - (gb - ga);
    } else if (fa >= c) {
      acc += (gb - ga) - c * (b - a);
    } else {
      double lo = a, hi = b;
      for (int it = 0; it < 100 && hi - lo > 1e-15 * (1.0 + std::fabs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        (cdf_gmm1d(spec, mid) < c ? lo : hi) = mid;
      }
      const double xs = 0.5 * (lo + hi), gs = cdf_antiderivative(spec, xs);
      acc += c * (xs - a) - (gs - ga) + (gb - gs) - c * (b - xs);
    }
  }
  return acc;
}

double sliced_w1_2d(std::span<const double> a, std::span<const double> b, std::size_t n_dirs, Rng& rng) {
  if (n_dirs == 0) throw std::invalid_argument("sliced_w1_2d: need n_dirs >= 1");
  const std::size_t na = a.size() / 2, nb = b.size() / 2;
  std::vector<double> pa(na), pb(nb);
  double total = 0.0;
  for (std::size_t k = 0; k < n_dirs; ++k) {
    const double th = 2.0 * std::numbers::pi * rng.uniform();
    const double c = std::cos(th), s = std::sin(th);
    for (std::size_t i = 0; i < na; ++i) pa[i] = c * a[2 * i] + s * a[2 * i + 1];
    for (std::size_t i = 0; i < nb; ++i) pb[i] = c * b[2 * i] + s * b[2 * i + 1];
    total += w1_1d(pa, pb);
  }
  return total / static_cast<double>(n_dirs);
}

std::vector<double> cluster_masses(std::span<const double> samples,
                                   const std::vector<std::array<double, 2>>& centers) {
  const std::size_t n = samples.size() / 2;
  std::vector<double> mass(centers.size(), 0.0);
  if (n == 0) return mass;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const double dx = samples[2 * i] - centers[c][0], dy = samples[2 * i + 1] - centers[c][1];
      const double d2 = dx * dx + dy * dy;
      if (d2 < bd) bd = d2, best = c;
    }
    mass[best] += 1.0;
  }
  for (double& m : mass) m /= static_cast<double>(n);
  return mass;
}

void write_csv(const std::filesystem::path& path, std::span<const double> values, std::size_t cols,
               const std::vector<std::string>& header, const std::string& comment) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  if (!comment.empty()) os << "# " << comment << '\n';
  if (!header.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
    os << '\n';
  }
  // Shortest round-trip representation; identical bits give identical text.
  char buf[32];
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto res = std::to_chars(buf, buf + sizeof buf, values[i]);
    os.write(buf, res.ptr - buf);
    os << ((i + 1) % cols == 0 ? '\n' : ',');
  }
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace hold
