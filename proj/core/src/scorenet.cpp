#include "hold/scorenet.hpp"

#include <Eigen/Core>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hold/parallel.hpp"
#include "hold/rng.hpp"

namespace hold {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;
using CMapVec = Eigen::Map<const Eigen::RowVectorXd>;

constexpr std::size_t kBlockRows = 256;

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

std::size_t NetSpec::param_count() const {
  const auto tab = layer_table(*this);
  return tab.back().b_offset + tab.back().fan_out;
}

void NetSpec::validate() const {
  if (d == 0) throw std::invalid_argument("NetSpec: d must be >= 1");
  if (hidden_width == 0) throw std::invalid_argument("NetSpec: hidden_width must be >= 1");
  if (n_hidden == 0) throw std::invalid_argument("NetSpec: n_hidden must be >= 1");
  if (time_encoding == TimeEncoding::sinusoidal && n_frequencies == 0)
    throw std::invalid_argument("NetSpec: sinusoidal encoding needs n_frequencies >= 1");
  if (!(time_scale > 0.0)) throw std::invalid_argument("NetSpec: time_scale must be positive");
}

std::vector<LayerView> layer_table(const NetSpec& spec) {
  std::vector<LayerView> tab;
  std::size_t offset = 0, fan_in = spec.input_width();
  for (std::size_t l = 0; l < spec.n_layers(); ++l) {
    LayerView v;
    v.fan_in = fan_in;
    v.fan_out = (l + 1 == spec.n_layers()) ? spec.d : spec.hidden_width;
    v.w_offset = offset;
    v.b_offset = offset + v.fan_in * v.fan_out;
    offset = v.b_offset + v.fan_out;
    fan_in = v.fan_out;
    tab.push_back(v);
  }
  return tab;
}

std::string to_string(TimeEncoding e) { return e == TimeEncoding::concat_scalar ? "concat_scalar" : "sinusoidal"; }

TimeEncoding time_encoding_from_string(const std::string& s) {
  if (s == "concat_scalar" || s == "concat") return TimeEncoding::concat_scalar;
  if (s == "sinusoidal") return TimeEncoding::sinusoidal;
  throw std::invalid_argument("unknown time encoding '" + s + "' (expected concat_scalar or sinusoidal)");
}

Mlp::Mlp(NetSpec spec) : spec_(spec) {
  spec_.validate();
  layers_ = layer_table(spec_);
}

std::vector<double> Mlp::init(std::uint64_t seed) const {
  std::vector<double> p(param_count(), 0.0);
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    const auto& v = layers_[l];
    Rng rng(seed, l);
    const double sd = 1.0 / std::sqrt(static_cast<double>(v.fan_in));
    for (std::size_t i = 0; i < v.fan_in * v.fan_out; ++i) p[v.w_offset + i] = sd * rng.normal();
  }
  return p;
}

void Mlp::encode(std::span<const double> x, std::span<const double> t, std::size_t n, AlignedVector& h0) const {
  const std::size_t w = spec_.input_width(), xw = 3 * spec_.d;
  h0.resize(n * w);
  for (std::size_t i = 0; i < n; ++i) {
    double* row = h0.data() + i * w;
    for (std::size_t j = 0; j < xw; ++j) row[j] = x[i * xw + j];
    const double u = t[i] / spec_.time_scale;
    if (spec_.time_encoding == TimeEncoding::concat_scalar) {
      row[xw] = u;
    } else {
      for (std::size_t f = 0; f < spec_.n_frequencies; ++f) {
        const double arg = std::numbers::pi * std::ldexp(1.0, static_cast<int>(f)) * u;
        row[xw + 2 * f] = std::sin(arg);
        row[xw + 2 * f + 1] = std::cos(arg);
      }
    }
  }
}

void Mlp::forward(std::span<const double> params, std::span<const double> x, std::span<const double> t,
                  std::size_t n, std::span<double> out, MlpCache* cache) const {
  if (params.size() != param_count()) throw std::invalid_argument("Mlp::forward: parameter count mismatch");
  MlpCache local;
  MlpCache& c = cache ? *cache : local;
  if (!is_aligned(params.data())) {
    c.params.assign(params.begin(), params.end());
    params = c.params;
  } else {
    c.params.clear();
  }
  const std::size_t nl = layers_.size();
  c.n = n;
  c.h.resize(nl);
  c.z.resize(nl - 1);
  encode(x, t, n, c.h[0]);
  for (std::size_t l = 0; l < nl; ++l) {
    const auto& v = layers_[l];
    CMapMat h(c.h[l].data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(v.fan_in));
    CMapMat w(params.data() + v.w_offset, static_cast<Eigen::Index>(v.fan_in), static_cast<Eigen::Index>(v.fan_out));
    CMapVec b(params.data() + v.b_offset, static_cast<Eigen::Index>(v.fan_out));
    if (l + 1 == nl) {
      MapMat o(out.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(v.fan_out));
      o.noalias() = h * w;
      o.rowwise() += b;
    } else {
      c.z[l].resize(n * v.fan_out);
      MapMat z(c.z[l].data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(v.fan_out));
      z.noalias() = h * w;
      z.rowwise() += b;
      c.h[l + 1].resize(n * v.fan_out);
      for (std::size_t i = 0; i < n * v.fan_out; ++i) {
        const double zi = c.z[l][i];
        c.h[l + 1][i] = zi * sigmoid(zi);
      }
    }
  }
}

void Mlp::backward(std::span<const double> params, const MlpCache& c, std::span<const double> upstream,
                   std::span<double> grad_params, std::span<double> grad_x) const {
  if (!c.params.empty()) params = c.params;
  const std::size_t n = c.n, nl = layers_.size();
  const bool want_params = !grad_params.empty();
  if (want_params && grad_params.size() != param_count())
    throw std::invalid_argument("Mlp::backward: gradient size mismatch");
  const auto N = static_cast<Eigen::Index>(n);
  RowMat g = CMapMat(upstream.data(), N, static_cast<Eigen::Index>(spec_.d));
  RowMat dh;
  for (std::size_t l = nl; l-- > 0;) {
    const auto& v = layers_[l];
    const auto fi = static_cast<Eigen::Index>(v.fan_in), fo = static_cast<Eigen::Index>(v.fan_out);
    CMapMat h(c.h[l].data(), N, fi);
    CMapMat w(params.data() + v.w_offset, fi, fo);
    if (want_params) {
      MapMat gw(grad_params.data() + v.w_offset, fi, fo);
      gw.noalias() += h.transpose() * g;
      // Plain loop: Eigen's column reduction peels by destination alignment.
      double* gb = grad_params.data() + v.b_offset;
      for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = 0; j < fo; ++j) gb[j] += g(i, j);
    }
    if (l == 0 && grad_x.empty()) break;
    dh.noalias() = g * w.transpose();
    if (l == 0) break;
    const double* z = c.z[l - 1].data();
    for (Eigen::Index i = 0; i < dh.size(); ++i) {
      const double s = sigmoid(z[i]);
      dh.data()[i] *= s * (1.0 + z[i] * (1.0 - s));
    }
    g.swap(dh);
  }
  if (!grad_x.empty()) {
    const std::size_t xw = 3 * spec_.d, iw = spec_.input_width();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < xw; ++j) grad_x[i * xw + j] = dh.data()[i * iw + j];
  }
}

MlpScore::MlpScore(NetSpec spec, std::vector<double> params, unsigned threads)
    : net_(spec), params_(std::move(params)), threads_(threads) {
  if (params_.size() != net_.param_count()) throw std::invalid_argument("MlpScore: parameter count mismatch");
}

void MlpScore::score(std::span<const double> x, std::size_t n, double t, std::span<double> out) const {
  const std::size_t d = dim(), w = 3 * d;
  const std::size_t blocks = (n + kBlockRows - 1) / kBlockRows;
  parallel_for(blocks, threads_, [&](std::size_t b0, std::size_t b1) {
    std::vector<double> times;
    MlpCache cache;
    for (std::size_t b = b0; b < b1; ++b) {
      const std::size_t r0 = b * kBlockRows, m = std::min(kBlockRows, n - r0);
      times.assign(m, t);
      net_.forward(params_, x.subspan(r0 * w, m * w), times, m, out.subspan(r0 * d, m * d), &cache);
    }
  });
}

void MlpScore::score_vjp_s(std::span<const double> x, std::size_t n, double t, std::span<const double> v,
                           std::span<double> out) const {
  const std::size_t d = dim(), w = 3 * d;
  const std::size_t blocks = (n + kBlockRows - 1) / kBlockRows;
  parallel_for(blocks, threads_, [&](std::size_t b0, std::size_t b1) {
    std::vector<double> times, y, gx;
    MlpCache cache;
    for (std::size_t b = b0; b < b1; ++b) {
      const std::size_t r0 = b * kBlockRows, m = std::min(kBlockRows, n - r0);
      times.assign(m, t);
      y.resize(m * d);
      gx.resize(m * w);
      net_.forward(params_, x.subspan(r0 * w, m * w), times, m, y, &cache);
      net_.backward(params_, cache, v.subspan(r0 * d, m * d), {}, gx);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < d; ++k) out[(r0 + i) * d + k] = gx[i * w + 2 * d + k];
    }
  });
}

}  // namespace hold
