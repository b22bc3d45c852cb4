#include <benchmark/benchmark.h>

#include <vector>

#include "hold/analytic_score.hpp"
#include "hold/data.hpp"
#include "hold/kernel.hpp"
#include "hold/objective.hpp"
#include "hold/samplers.hpp"
#include "hold/scorenet.hpp"

using namespace hold;

static void BM_TransitionCovariance(benchmark::State& st) {
  const HoldParams p;
  const Vec3 s0 = bcsm_sigma0(p);
  double t = 0.3;
  for (auto _ : st) {
    benchmark::DoNotOptimize(transition_covariance(p, s0, t));
    t = t < 4.0 ? t + 0.01 : 0.3;
  }
}
BENCHMARK(BM_TransitionCovariance);

static void BM_Expm(benchmark::State& st) {
  double t = 0.1;
  for (auto _ : st) {
    benchmark::DoNotOptimize(expm_scalar_kernel(Direction::forward, t));
    t = t < 4.0 ? t + 0.01 : 0.1;
  }
}
BENCHMARK(BM_Expm);

static void BM_MlpForward(benchmark::State& st) {
  NetSpec spec;
  spec.d = static_cast<std::size_t>(st.range(0));
  const Mlp net(spec);
  const auto theta = net.init(1);
  const std::size_t n = 256;
  std::vector<double> x(n * 3 * spec.d, 0.1), t(n, 0.5), out(n * spec.d);
  for (auto _ : st) {
    net.forward(theta, x, t, n, out, nullptr);
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * n));
}
BENCHMARK(BM_MlpForward)->Arg(1)->Arg(2);

static void BM_BcsmMinibatch(benchmark::State& st) {
  NetSpec spec;
  const Mlp net(spec);
  const HoldParams p;
  auto theta = net.init(2);
  Rng r(3);
  const auto q0 = sample_gmm1d(Gmm1dSpec{}, 256, r);
  std::uint64_t key = 0;
  for (auto _ : st) benchmark::DoNotOptimize(bcsm_minibatch(p, net, theta, q0, key++));
}
BENCHMARK(BM_BcsmMinibatch)->Unit(benchmark::kMillisecond);

static void BM_LtSampleExactScore(benchmark::State& st) {
  const HoldParams p;
  const GaussianMixtureScore score(p, Gmm1dSpec{}.components());
  TimeGrid g;
  g.n_steps = static_cast<std::size_t>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(lt_sample(p, score, g, 1000, 5, {}));
}
BENCHMARK(BM_LtSampleExactScore)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_EmSampleExactScore(benchmark::State& st) {
  const HoldParams p;
  const GaussianMixtureScore score(p, Gmm1dSpec{}.components());
  TimeGrid g;
  g.n_steps = static_cast<std::size_t>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(em_reverse(p, score, g, 1000, 5, {}));
}
BENCHMARK(BM_EmSampleExactScore)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_ProbFlowExactScore(benchmark::State& st) {
  const HoldParams p;
  const GaussianMixtureScore score(p, Gmm1dSpec{}.components());
  for (auto _ : st) benchmark::DoNotOptimize(ode_sample(p, score, 256, 1, 5, {}));
}
BENCHMARK(BM_ProbFlowExactScore)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
