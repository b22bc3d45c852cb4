#include "hold/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hold/checkpoint.hpp"

namespace hold {

void TrainConfig::validate() const {
  if (batch_size == 0) throw std::invalid_argument("train.batch_size must be >= 1");
  if (warmup_iters > n_iters) throw std::invalid_argument("train.warmup_iters must not exceed train.n_iters");
  if (!(lr > 0.0)) throw std::invalid_argument("train.lr must be positive");
  if (!(ema_decay >= 0.0 && ema_decay < 1.0)) throw std::invalid_argument("train.ema_decay must lie in [0, 1)");
  if (log_every == 0) throw std::invalid_argument("train.log_every must be >= 1");
  if (!(max_grad_norm >= 0.0)) throw std::invalid_argument("train.max_grad_norm must be >= 0");
}

Adam::Adam(std::size_t n, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

double warmup_lr(const TrainConfig& cfg, std::size_t k) {
  if (cfg.warmup_iters == 0 || k >= cfg.warmup_iters) return cfg.lr;
  return cfg.lr * static_cast<double>(k) / static_cast<double>(cfg.warmup_iters);
}

void ema_update(std::span<double> ema, std::span<const double> params, double decay) {
  for (std::size_t i = 0; i < ema.size(); ++i) ema[i] = decay * ema[i] + (1.0 - decay) * params[i];
}

namespace {

void dump_batch(const std::filesystem::path& path, const LossBatch& b) {
  std::ofstream os(path);
  os << "t,ell";
  for (std::size_t j = 0; j < 3 * b.d; ++j) os << ",x" << j;
  os << '\n';
  os.precision(17);
  for (std::size_t i = 0; i < b.n; ++i) {
    os << b.t[i] << ',' << b.ell[i];
    for (std::size_t j = 0; j < 3 * b.d; ++j) os << ',' << b.xt[i * 3 * b.d + j];
    os << '\n';
  }
}

Checkpoint make_checkpoint(const TrainInputs& in, std::size_t step, const AlignedVector& theta,
                           const std::vector<double>& ema, const Adam& adam) {
  Checkpoint c;
  c.spec = in.net;
  c.kernel = in.kernel;
  c.step = step;
  c.seed = in.train.seed;
  c.config_hash = in.config_hash;
  c.arrays["params"].assign(theta.begin(), theta.end());
  c.arrays["ema"] = ema;
  c.arrays["adam_m"] = adam.m();
  c.arrays["adam_v"] = adam.v();
  return c;
}

}  // namespace

TrainResult train(const TrainInputs& in) {
  in.kernel.validate();
  in.train.validate();
  if (!in.data) throw std::invalid_argument("train: no dataset");
  if (in.data->dim() != in.net.d) throw std::invalid_argument("train: dataset dimension does not match net.d");
  std::filesystem::create_directories(in.out_dir);

  const TrainConfig& cfg = in.train;
  const Mlp net(in.net);
  const std::vector<double> init = net.init(derive_seed(cfg.seed, 0x696e6974));
  AlignedVector theta(init.begin(), init.end());
  std::vector<double> ema = init;
  Adam adam(theta.size());

  const auto log_path = in.out_dir / "train_log.csv";
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw std::runtime_error("cannot write " + log_path.string());
  log << "iter,loss,lr,wall_ms\n";
  log.precision(10);

  const auto start = std::chrono::steady_clock::now();
  double window = 0.0, last_window = 0.0;
  std::size_t in_window = 0;
  const std::size_t d = in.net.d;

  for (std::size_t k = 1; k <= cfg.n_iters; ++k) {
    const std::uint64_t key = derive_seed(cfg.seed, k);
    const auto q0 = in.data->sample(cfg.batch_size, derive_seed(key, 1));
    const LossBatch batch = cfg.loss_kind == LossKind::bcsm
                                ? draw_bcsm_batch(in.kernel, q0, d, derive_seed(key, 2), cfg.time_sampling)
                                : draw_dsm_batch(in.kernel, augment_with_velocity(in.kernel, q0, d, derive_seed(key, 3)),
                                                 d, derive_seed(key, 2), cfg.time_sampling);
    LossResult r;
    try {
      r = score_matching_loss(net, theta, batch, cfg.threads);
    } catch (const std::runtime_error&) {
      const auto dump = in.out_dir / "nan_batch.csv";
      dump_batch(dump, batch);
      throw std::runtime_error("non-finite loss at iteration " + std::to_string(k) + "; batch written to " +
                               dump.string());
    }
    if (cfg.max_grad_norm > 0.0) {
      double n2 = 0.0;
      for (double g : r.grad) n2 += g * g;
      const double norm = std::sqrt(n2);
      if (norm > cfg.max_grad_norm)
        for (double& g : r.grad) g *= cfg.max_grad_norm / norm;
    }
    const double lr = warmup_lr(cfg, k);
    adam.step(theta, r.grad, lr);
    ema_update(ema, theta, cfg.ema_decay);

    window += r.loss;
    ++in_window;
    if (k % cfg.log_every == 0 || k == cfg.n_iters) {
      last_window = window / static_cast<double>(in_window);
      const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      log << k << ',' << last_window << ',' << lr << ',' << static_cast<long long>(ms) << '\n';
      if (in.on_log) in.on_log(k, last_window);
      window = 0.0;
      in_window = 0;
    }
    if (cfg.checkpoint_every && k % cfg.checkpoint_every == 0 && k != cfg.n_iters)
      save_checkpoint(in.out_dir / ("ckpt_" + std::to_string(k) + ".bin"), make_checkpoint(in, k, theta, ema, adam));
  }

  TrainResult res;
  res.checkpoint = in.out_dir / "checkpoint.bin";
  save_checkpoint(res.checkpoint, make_checkpoint(in, cfg.n_iters, theta, ema, adam));
  res.params.assign(theta.begin(), theta.end());
  res.ema = std::move(ema);
  res.final_loss = last_window;
  return res;
}

}  // namespace hold
