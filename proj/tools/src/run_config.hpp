#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "hold/data.hpp"
#include "hold/params.hpp"
#include "hold/samplers.hpp"
#include "hold/scorenet.hpp"
#include "hold/trainer.hpp"
#include "hold/verify.hpp"

namespace hold::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a command needs. Keys are flat and namespaced (kernel.L,
/// train.lr, sample.steps, ...). seed, threads and out are not part of the
/// hash: seed is recorded next to it, the other two never change results.
struct RunConfig {
  HoldParams kernel;
  NetSpec net;
  TrainConfig train;

  std::string dataset = "gmm1d";  // gmm1d | swiss | gaussian
  std::vector<double> gaussian_mean{0.3};
  double gaussian_var = 0.04;
  std::size_t eval_n = 20000;  // reference data draws for metrics

  std::string sampler = "lt";
  TimeGrid grid;
  BStep b_step = BStep::euler;
  std::size_t n_samples = 10000;
  double ode_atol = 1e-5;
  double ode_rtol = 1e-5;

  std::size_t nll_n_aux = 20;
  std::size_t nll_n_hutch = 10;
  std::size_t nll_n_points = 256;
  bool nll_stratified = true;

  std::vector<double> compare_steps{50, 150, 500, 1000};
  std::vector<std::string> compare_samplers{"em", "lt"};
  std::size_t compare_seeds = 3;

  std::vector<double> evolve_fractions{0.0, 0.5, 0.7, 0.8, 0.9, 0.93, 0.97, 0.99};
  std::size_t evolve_bins = 100;
  double evolve_range = 2.0;
  std::string evolve_sampler = "ode";

  VerifyConfig verify;
  bool verify_mc = true;

  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::filesystem::path out = "out";

  /// Applies one key=value; throws ConfigError naming the key.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static std::vector<std::string> keys();

  /// Sorted key=value lines over every hashed key.
  std::string canonical() const;
  std::uint64_t hash() const;
  std::string hash_hex() const;

  /// Syncs derived fields (grid endpoints, time scale, dims) and validates.
  void finalize();

  std::unique_ptr<Dataset> make_dataset() const;
};

/// Parses a config file: "key = value" lines, '#' comments, blank lines.
void load_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// "key=value" override.
void apply_override(RunConfig& cfg, const std::string& kv);

std::string format_double(double v);

}  // namespace hold::cli
