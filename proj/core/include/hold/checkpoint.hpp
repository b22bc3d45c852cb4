#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hold/params.hpp"
#include "hold/scorenet.hpp"

namespace hold {

/// Binary checkpoint:
///   "HOLDCKPT" | u32 version | u64 metadata length | metadata JSON |
///   u64 n_arrays | per array: u64 count, count little-endian doubles.
/// Array 0 is always the raw parameter vector. Names of the arrays are listed
/// in the metadata.
struct Checkpoint {
  NetSpec spec;
  HoldParams kernel;
  std::uint64_t step = 0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::map<std::string, std::vector<double>> arrays;  // "params", "ema", "adam_m", "adam_v"

  const std::vector<double>& params() const;
  /// EMA weights when present, else raw parameters.
  const std::vector<double>& eval_params() const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// FNV-1a over the parameter bytes; identifies a checkpoint in reports.
std::uint64_t hash_params(const std::vector<double>& params);

}  // namespace hold
