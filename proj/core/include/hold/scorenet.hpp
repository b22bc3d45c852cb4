#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hold/aligned.hpp"
#include "hold/score_model.hpp"

namespace hold {

enum class TimeEncoding { concat_scalar, sinusoidal };

/// Fully connected score network: input (x, enc(t)), n_hidden SiLU layers of
/// hidden_width, linear output of width d.
struct NetSpec {
  std::size_t d = 1;
  std::size_t hidden_width = 128;
  std::size_t n_hidden = 4;
  TimeEncoding time_encoding = TimeEncoding::concat_scalar;
  std::size_t n_frequencies = 8;  // sinusoidal only
  double time_scale = 5.0;        // t enters as t / time_scale; set to T

  std::size_t time_width() const { return time_encoding == TimeEncoding::concat_scalar ? 1 : 2 * n_frequencies; }
  std::size_t input_width() const { return 3 * d + time_width(); }
  std::size_t n_layers() const { return n_hidden + 1; }
  std::size_t param_count() const;
  void validate() const;
};

struct LayerView {
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
  std::size_t w_offset = 0;  // fan_in x fan_out, row-major
  std::size_t b_offset = 0;
};

std::vector<LayerView> layer_table(const NetSpec& spec);

std::string to_string(TimeEncoding e);
TimeEncoding time_encoding_from_string(const std::string& s);

/// Activations kept between forward and backward.
struct MlpCache {
  std::size_t n = 0;
  std::vector<AlignedVector> h;  // layer inputs, h[0] is the encoded input
  std::vector<AlignedVector> z;  // pre-activations of hidden layers
  AlignedVector params;          // aligned copy when the caller's buffer is not
};

class Mlp {
 public:
  explicit Mlp(NetSpec spec);

  const NetSpec& spec() const { return spec_; }
  std::size_t param_count() const { return spec_.param_count(); }

  /// N(0, 1/fan_in) weights, zero biases, zero output layer.
  std::vector<double> init(std::uint64_t seed) const;

  /// x: n x 3d, t: n times (one per row). out: n x d. cache may be null.
  void forward(std::span<const double> params, std::span<const double> x, std::span<const double> t, std::size_t n,
               std::span<double> out, MlpCache* cache) const;

  /// Reverse pass for <upstream, forward(...)>. grad_params is accumulated
  /// into (+=); grad_x (n x 3d) is overwritten when non-empty.
  void backward(std::span<const double> params, const MlpCache& cache, std::span<const double> upstream,
                std::span<double> grad_params, std::span<double> grad_x) const;

 private:
  void encode(std::span<const double> x, std::span<const double> t, std::size_t n, AlignedVector& h0) const;

  NetSpec spec_;
  std::vector<LayerView> layers_;
};

/// ScoreModel view of an Mlp with fixed parameters. Rows are processed in
/// fixed blocks spread over `threads`, so results do not depend on threads.
class MlpScore final : public ScoreModel {
 public:
  MlpScore(NetSpec spec, std::vector<double> params, unsigned threads = 1);

  std::size_t dim() const override { return net_.spec().d; }
  void score(std::span<const double> x, std::size_t n, double t, std::span<double> out) const override;
  void score_vjp_s(std::span<const double> x, std::size_t n, double t, std::span<const double> v,
                   std::span<double> out) const override;

  const Mlp& net() const { return net_; }
  const std::vector<double>& params() const { return params_; }

 private:
  Mlp net_;
  std::vector<double> params_;
  unsigned threads_;
};

}  // namespace hold
