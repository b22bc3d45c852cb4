#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

namespace hold::cli {

int run_cli(int argc, char** argv) {
  CLI::App app{"hold: score-based generative modelling with the HOLD process"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out;
  app.add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed");
  app.add_option("--threads", threads, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
  app.add_option("--out", out, "output directory");
  app.add_option("--set", overrides, "override one key, e.g. --set train.n_iters=2000")->take_all();

  ModelOptions mo;
  auto add_model = [&](CLI::App* sub) {
    sub->add_option("--checkpoint", mo.checkpoint, "checkpoint (default <out>/checkpoint.bin)");
    sub->add_flag("--analytic", mo.analytic, "use the closed-form score of the dataset");
  };

  auto* verify = app.add_subcommand("verify", "check the kernel against numerical oracles");
  bool no_mc = false;
  verify->add_flag("--no-mc", no_mc, "skip the Monte Carlo moment check");

  auto* train = app.add_subcommand("train", "fit the score network");

  auto* sample = app.add_subcommand("sample", "draw samples");
  add_model(sample);
  std::optional<std::string> sampler;
  std::optional<std::size_t> steps, n;
  sample->add_option("--sampler", sampler, "em | lt | ode");
  sample->add_option("--steps", steps, "number of steps (0: prior draws)");
  sample->add_option("--n", n, "number of samples");

  auto* nll = app.add_subcommand("nll", "upper bound on the negative log-likelihood");
  add_model(nll);

  auto* compare = app.add_subcommand("compare", "sample quality across samplers and step counts");
  add_model(compare);

  auto* evolve = app.add_subcommand("evolve", "histogram snapshots of the generative process");
  add_model(evolve);
  std::optional<std::string> evolve_sampler;
  evolve->add_option("--sampler", evolve_sampler, "em | lt | ode");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) load_config_file(cfg, config_path);
    for (const auto& kv : overrides) apply_override(cfg, kv);
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    if (out) cfg.out = *out;
    if (sampler) cfg.set("sample.sampler", *sampler);
    if (steps) cfg.grid.n_steps = *steps;
    if (n) cfg.n_samples = *n;
    if (evolve_sampler) cfg.set("evolve.sampler", *evolve_sampler);
    if (no_mc) cfg.verify_mc = false;
    cfg.finalize();

    if (*verify) return cmd_verify(cfg);
    if (*train) return cmd_train(cfg);
    if (*sample) return cmd_sample(cfg, mo);
    if (*nll) return cmd_nll(cfg, mo);
    if (*compare) return cmd_compare(cfg, mo);
    if (*evolve) return cmd_evolve(cfg, mo);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace hold::cli
