#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace hold::cli {

/// Where the score comes from for sample/nll/compare/evolve.
struct ModelOptions {
  std::filesystem::path checkpoint;  // empty: <out>/checkpoint.bin
  bool analytic = false;             // exact score of the configured dataset (gmm1d, gaussian)
};

int cmd_verify(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_sample(const RunConfig& cfg, const ModelOptions& model);
int cmd_nll(const RunConfig& cfg, const ModelOptions& model);
int cmd_compare(const RunConfig& cfg, const ModelOptions& model);
int cmd_evolve(const RunConfig& cfg, const ModelOptions& model);

/// Full command line entry point; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace hold::cli
