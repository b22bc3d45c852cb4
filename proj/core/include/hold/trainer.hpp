#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "hold/data.hpp"
#include "hold/objective.hpp"
#include "hold/scorenet.hpp"

namespace hold {

struct TrainConfig {
  std::size_t batch_size = 256;
  std::size_t n_iters = 60000;
  double lr = 1e-3;
  std::size_t warmup_iters = 1000;
  double ema_decay = 0.999;
  std::uint64_t seed = 0;
  std::size_t checkpoint_every = 0;  // 0: final checkpoint only
  std::size_t log_every = 100;
  LossKind loss_kind = LossKind::bcsm;
  TimeSampling time_sampling = TimeSampling::uniform;
  double max_grad_norm = 0.0;  // 0: no clipping
  unsigned threads = 1;

  void validate() const;
};

/// Adam with bias-corrected moments, no weight decay.
class Adam {
 public:
  explicit Adam(std::size_t n, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(std::span<double> params, std::span<const double> grad, double lr);
  std::size_t iterations() const { return t_; }
  const std::vector<double>& m() const { return m_; }
  const std::vector<double>& v() const { return v_; }

 private:
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<double> m_, v_;
};

/// Learning rate for 1-based iteration k: lr * k / warmup while k < warmup.
double warmup_lr(const TrainConfig& cfg, std::size_t k);

/// ema <- decay * ema + (1 - decay) * params.
void ema_update(std::span<double> ema, std::span<const double> params, double decay);

struct TrainResult {
  std::filesystem::path checkpoint;
  std::vector<double> params;
  std::vector<double> ema;
  double final_loss = 0.0;  // mean loss over the last logging window
};

struct TrainInputs {
  HoldParams kernel;
  NetSpec net;
  TrainConfig train;
  const Dataset* data = nullptr;
  std::filesystem::path out_dir;
  std::uint64_t config_hash = 0;
  /// Called after every logging window with (iter, window mean loss).
  std::function<void(std::size_t, double)> on_log;
};

/// Runs the optimization loop. Writes train_log.csv (iter,loss,lr,wall_ms),
/// optional ckpt_<iter>.bin files and checkpoint.bin. Everything except the
/// wall_ms column is a deterministic function of the inputs for a fixed
/// thread count.
TrainResult train(const TrainInputs& in);

}  // namespace hold
