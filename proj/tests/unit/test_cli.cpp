#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using namespace hold::cli;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "hold");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("hold_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Config, FileAndOverrides) {
  const auto dir = scratch("cfg");
  std::ofstream(dir / "a.cfg") << "# comment\n\nkernel.L = 3\ntrain.lr=2e-4  # trailing\ncompare.steps = 10, 20\n";
  RunConfig c;
  load_config_file(c, dir / "a.cfg");
  apply_override(c, "sample.steps=77");
  c.finalize();
  EXPECT_EQ(c.kernel.L, 3.0);
  EXPECT_EQ(c.train.lr, 2e-4);
  EXPECT_EQ(c.compare_steps, (std::vector<double>{10, 20}));
  EXPECT_EQ(c.grid.n_steps, 77u);
  EXPECT_EQ(c.get("kernel.L"), "3");
}

TEST(Config, ErrorsNameTheField) {
  RunConfig c;
  try {
    apply_override(c, "train.batch_size=-4");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("train.batch_size"), std::string::npos);
  }
  try {
    apply_override(c, "kernel.nope=1");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("kernel.nope"), std::string::npos);
  }
  c.set("kernel.alpha", "-1");
  try {
    c.finalize();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("kernel"), std::string::npos);
  }

  const auto dir = scratch("cfgerr");
  std::ofstream(dir / "b.cfg") << "kernel.L = 2\nthis line has no equals\n";
  RunConfig d;
  try {
    load_config_file(d, dir / "b.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("b.cfg:2"), std::string::npos);
  }
}

TEST(Config, HashIsStableAndSensitive) {
  RunConfig a, b;
  a.finalize();
  b.finalize();
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash_hex().size(), 16u);
  b.seed = 99;
  b.threads = 4;
  b.out = "elsewhere";
  EXPECT_EQ(a.hash(), b.hash());
  b.set("train.lr", "0.0005");
  EXPECT_NE(a.hash(), b.hash());
  // every key round-trips through get/set without changing the hash
  RunConfig c;
  for (const auto& k : RunConfig::keys()) c.set(k, a.get(k));
  c.finalize();
  EXPECT_EQ(c.hash(), a.hash());
}

TEST(Cli, VerifyFailsAtZeroTolerance) {
  const auto dir = scratch("verify");
  EXPECT_EQ(run({"verify", "--no-mc", "--out", dir.string()}), 0);
  EXPECT_EQ(run({"verify", "--no-mc", "--out", dir.string(), "--set", "verify.tol_expm=0"}), 1);
  EXPECT_NE(slurp(dir / "verify_report.json").find("\"passed\": false"), std::string::npos);
}

TEST(Cli, ZeroStepsGivesPrior) {
  const auto dir = scratch("prior");
  ASSERT_EQ(run({"sample", "--analytic", "--set", "data.name=gaussian", "--steps", "0", "--n", "4000", "--out",
                 dir.string()}),
            0);
  std::ifstream is(dir / "samples.csv");
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line.rfind("# hold config_hash=", 0), 0u);
  std::getline(is, line);
  EXPECT_EQ(line, "q0");
  double s = 0, s2 = 0;
  int n = 0;
  while (std::getline(is, line)) {
    const double v = std::stod(line);
    s += v, s2 += v * v, ++n;
  }
  ASSERT_EQ(n, 4000);
  // prior variance 1/L = 0.5
  EXPECT_NEAR(s / n, 0.0, 4 * std::sqrt(0.5 / n));
  EXPECT_NEAR(s2 / n - (s / n) * (s / n), 0.5, 0.05);
}

TEST(Cli, MissingCheckpointAndBadFlags) {
  const auto dir = scratch("missing");
  EXPECT_EQ(run({"sample", "--out", dir.string()}), 2);
  EXPECT_EQ(run({"nll", "--analytic", "--set", "data.name=swiss", "--out", dir.string()}), 2);
  EXPECT_NE(run({"sample", "--steps", "abc"}), 0);
  EXPECT_NE(run({}), 0);
}

TEST(Cli, RerunsAreByteIdentical) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  for (const auto& dir : {a, b}) {
    const std::vector<std::string> common{"--seed", "7", "--threads", "1", "--set", "train.n_iters=30",
                                          "--set", "train.warmup_iters=5", "--set", "train.log_every=10",
                                          "--set", "net.hidden_width=16", "--set", "net.n_hidden=2"};
    auto with = [&](std::vector<std::string> v, const fs::path& out) {
      v.insert(v.end(), common.begin(), common.end());
      v.insert(v.end(), {"--out", out.string()});
      if (v.front() != "train") v.insert(v.end(), {"--checkpoint", (dir / "checkpoint.bin").string()});
      return v;
    };
    ASSERT_EQ(run(with({"train"}, dir)), 0);
    ASSERT_EQ(run(with({"sample", "--steps", "20", "--n", "300"}, dir)), 0);
    ASSERT_EQ(run(with({"sample", "--sampler", "ode", "--n", "50"}, dir / "ode")), 0);
    ASSERT_EQ(run(with({"nll", "--set", "nll.n_points=8", "--set", "nll.n_aux=2", "--set", "nll.n_hutch=2"}, dir)), 0);
    ASSERT_EQ(run(with({"compare", "--set", "compare.steps=5,10", "--set", "compare.seeds=2", "--set",
                        "sample.n_samples=100"},
                       dir)),
              0);
    ASSERT_EQ(run(with({"evolve", "--sampler", "lt", "--set", "sample.steps=20", "--set", "sample.n_samples=200"},
                       dir / "evolve")),
              0);
  }
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a);
    const std::string name = rel.filename().string();
    if (name.find(".meta.json") != std::string::npos) continue;
    std::string x = slurp(e.path()), y = slurp(b / rel);
    if (name == "train_log.csv") {
      // wall_ms is the last column
      auto strip = [](const std::string& s) {
        std::istringstream is(s);
        std::string line, out;
        while (std::getline(is, line)) out += line.substr(0, line.rfind(',')) + '\n';
        return out;
      };
      x = strip(x), y = strip(y);
    }
    EXPECT_EQ(x, y) << rel;
    ++compared;
  }
  EXPECT_GE(compared, 10u);
  EXPECT_TRUE(fs::exists(a / "evolve" / "evolve_7_s.csv"));
}
