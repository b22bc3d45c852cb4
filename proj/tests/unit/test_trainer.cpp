#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "hold/checkpoint.hpp"
#include "hold/trainer.hpp"

using namespace hold;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("hold_trainer_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

}  // namespace

TEST(Adam, MatchesReferenceUpdates) {
  Adam adam(3);
  std::vector<double> p{1.0, -2.0, 0.5};
  const std::vector<std::vector<double>> grads{{0.1, -0.2, 0.3}, {0.2, 0.1, -0.1}, {-0.05, 0.4, 0.0}};
  for (const auto& g : grads) adam.step(p, g, 0.01);
  // Independent evaluation of the bias-corrected update rule.
  EXPECT_NEAR(p[0], 0.9744621144698112, 1e-12);
  EXPECT_NEAR(p[1], -1.991909947999135, 1e-12);
  EXPECT_NEAR(p[2], 0.48290411380154363, 1e-12);
  EXPECT_EQ(adam.iterations(), 3u);
}

TEST(Warmup, ExactlyLinear) {
  TrainConfig c;
  c.lr = 2e-4;
  c.warmup_iters = 5000;
  c.n_iters = 10000;
  for (std::size_t k : {1u, 7u, 2500u, 4999u}) EXPECT_EQ(warmup_lr(c, k), c.lr * k / 5000.0);
  EXPECT_EQ(warmup_lr(c, 5000), c.lr);
  EXPECT_EQ(warmup_lr(c, 9000), c.lr);
  c.warmup_iters = 0;
  EXPECT_EQ(warmup_lr(c, 1), c.lr);
}

TEST(Ema, ConvergesToConstantParameters) {
  std::vector<double> ema{5.0, -3.0}, p{0.25, 0.75};
  for (int i = 0; i < 40000; ++i) ema_update(ema, p, 0.999);
  EXPECT_NEAR(ema[0], 0.25, 1e-12);
  EXPECT_NEAR(ema[1], 0.75, 1e-12);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  c.warmup_iters = c.n_iters + 1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.ema_decay = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Train, ZeroIterationsKeepsInitialization) {
  GaussianData data({0.0}, 1.0);
  TrainInputs in;
  in.net.hidden_width = 16;
  in.train.n_iters = 0;
  in.train.warmup_iters = 0;
  in.train.seed = 3;
  in.data = &data;
  in.out_dir = scratch("zero");
  const auto r = train(in);
  const auto c = load_checkpoint(r.checkpoint);
  const Mlp net(in.net);
  EXPECT_EQ(c.params(), net.init(derive_seed(3, 0x696e6974)));
  EXPECT_EQ(c.eval_params(), c.params());
  EXPECT_EQ(c.step, 0u);
}

TEST(Train, SameSeedGivesIdenticalCheckpoints) {
  Gmm1d data{Gmm1dSpec{}};
  TrainInputs in;
  in.net.hidden_width = 16;
  in.train.n_iters = 50;
  in.train.warmup_iters = 10;
  in.train.batch_size = 32;
  in.train.seed = 11;
  in.train.checkpoint_every = 25;
  in.data = &data;
  in.out_dir = scratch("det_a");
  const auto a = train(in);
  in.out_dir = scratch("det_b");
  const auto b = train(in);
  EXPECT_EQ(slurp(a.checkpoint), slurp(b.checkpoint));
  EXPECT_TRUE(std::filesystem::exists(in.out_dir / "ckpt_25.bin"));
  in.train.seed = 12;
  in.out_dir = scratch("det_c");
  const auto c = train(in);
  EXPECT_NE(slurp(a.checkpoint), slurp(c.checkpoint));
}

TEST(Train, LogHasHeaderAndRows) {
  GaussianData data({0.0}, 1.0);
  TrainInputs in;
  in.net.hidden_width = 8;
  in.train.n_iters = 30;
  in.train.warmup_iters = 5;
  in.train.batch_size = 16;
  in.train.log_every = 10;
  in.data = &data;
  in.out_dir = scratch("log");
  train(in);
  std::ifstream is(in.out_dir / "train_log.csv");
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "iter,loss,lr,wall_ms");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 3);
}

TEST(Train, RejectsMismatchedDataset) {
  GaussianData data({0.0, 1.0}, 1.0);
  TrainInputs in;
  in.data = &data;
  in.out_dir = scratch("mismatch");
  EXPECT_THROW(train(in), std::invalid_argument);
}

TEST(Train, GaussianLossApproachesFloor) {
  // Small network on N(0.3, 0.04): the EMA loss ends within 5% of the analytic floor.
  HoldParams kp;
  GaussianData data({0.3}, 0.04);
  TrainInputs in;
  in.kernel = kp;
  in.net.hidden_width = 32;
  in.net.n_hidden = 2;
  in.train.n_iters = 12000;
  in.train.warmup_iters = 200;
  in.train.batch_size = 256;
  in.train.lr = 2e-3;
  in.train.log_every = 1000;
  in.train.seed = 5;
  in.data = &data;
  in.out_dir = scratch("floor");
  const auto r = train(in);
  const double floor = bcsm_gaussian_floor(kp, 0.04, 1);
  // Evaluate the EMA weights on a large fresh batch.
  const Mlp net(in.net);
  const auto q0 = data.sample(50000, 99);
  const auto batch = draw_bcsm_batch(kp, q0, 1, 98);
  const double loss = score_matching_loss(net, r.ema, batch, 1, false).loss;
  EXPECT_LT(loss, 1.05 * floor) << "floor " << floor;
  EXPECT_GT(loss, 0.97 * floor);
}
