#include "hold/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

namespace hold {
namespace {

constexpr char kMagic[8] = {'H', 'O', 'L', 'D', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw std::runtime_error("truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

const std::vector<std::string> kOrder{"params", "ema", "adam_m", "adam_v"};

}  // namespace

const std::vector<double>& Checkpoint::params() const {
  auto it = arrays.find("params");
  if (it == arrays.end()) throw std::runtime_error("checkpoint has no parameter array");
  return it->second;
}

const std::vector<double>& Checkpoint::eval_params() const {
  auto it = arrays.find("ema");
  return it != arrays.end() ? it->second : params();
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::ordered_json meta;
  meta["spec"] = {{"d", ckpt.spec.d},
                  {"hidden_width", ckpt.spec.hidden_width},
                  {"n_hidden", ckpt.spec.n_hidden},
                  {"time_encoding", to_string(ckpt.spec.time_encoding)},
                  {"n_frequencies", ckpt.spec.n_frequencies},
                  {"time_scale", ckpt.spec.time_scale}};
  meta["kernel"] = {{"L", ckpt.kernel.L},         {"gamma", ckpt.kernel.gamma}, {"xi", ckpt.kernel.xi},
                    {"alpha", ckpt.kernel.alpha}, {"T", ckpt.kernel.T},         {"t_min", ckpt.kernel.t_min}};
  meta["step"] = ckpt.step;
  meta["rng"] = {{"seed", ckpt.seed}, {"next_step", ckpt.step}};
  meta["config_hash"] = ckpt.config_hash;
  std::vector<std::string> names;
  for (const auto& n : kOrder)
    if (ckpt.arrays.count(n)) names.push_back(n);
  for (const auto& [n, _] : ckpt.arrays)
    if (std::find(kOrder.begin(), kOrder.end(), n) == kOrder.end()) names.push_back(n);
  if (names.empty() || names.front() != "params") throw std::invalid_argument("save_checkpoint: missing params");
  meta["arrays"] = names;
  const std::string js = meta.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
  os.write(kMagic, 8);
  unsigned char ver[4];
  for (int i = 0; i < 4; ++i) ver[i] = static_cast<unsigned char>(kVersion >> (8 * i));
  os.write(reinterpret_cast<const char*>(ver), 4);
  put_u64(os, js.size());
  os.write(js.data(), static_cast<std::streamsize>(js.size()));
  put_u64(os, names.size());
  for (const auto& n : names) {
    const auto& a = ckpt.arrays.at(n);
    put_u64(os, a.size());
    for (double v : a) put_u64(os, std::bit_cast<std::uint64_t>(v));
  }
  if (!os) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path.string());
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0) throw std::runtime_error("not a hold checkpoint: " + path.string());
  unsigned char ver[4];
  is.read(reinterpret_cast<char*>(ver), 4);
  const std::uint32_t version = ver[0] | (ver[1] << 8) | (ver[2] << 16) | (static_cast<std::uint32_t>(ver[3]) << 24);
  if (version != kVersion) throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  const std::uint64_t len = get_u64(is);
  std::string js(len, '\0');
  is.read(js.data(), static_cast<std::streamsize>(len));
  if (!is) throw std::runtime_error("truncated checkpoint metadata: " + path.string());
  const auto meta = nlohmann::json::parse(js);

  Checkpoint c;
  const auto& s = meta.at("spec");
  c.spec.d = s.at("d");
  c.spec.hidden_width = s.at("hidden_width");
  c.spec.n_hidden = s.at("n_hidden");
  c.spec.time_encoding = time_encoding_from_string(s.at("time_encoding"));
  c.spec.n_frequencies = s.at("n_frequencies");
  c.spec.time_scale = s.at("time_scale");
  const auto& k = meta.at("kernel");
  c.kernel.L = k.at("L");
  c.kernel.gamma = k.at("gamma");
  c.kernel.xi = k.at("xi");
  c.kernel.alpha = k.at("alpha");
  c.kernel.T = k.at("T");
  c.kernel.t_min = k.at("t_min");
  c.step = meta.at("step");
  c.seed = meta.at("rng").at("seed");
  c.config_hash = meta.at("config_hash");
  const auto names = meta.at("arrays").get<std::vector<std::string>>();
  if (get_u64(is) != names.size()) throw std::runtime_error("checkpoint array count mismatch");
  for (const auto& n : names) {
    const std::uint64_t count = get_u64(is);
    std::vector<double> a(count);
    for (auto& v : a) v = std::bit_cast<double>(get_u64(is));
    c.arrays[n] = std::move(a);
  }
  if (c.params().size() != c.spec.param_count())
    throw std::runtime_error("checkpoint parameter count does not match its network spec");
  return c;
}

std::uint64_t hash_params(const std::vector<double>& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : params) {
    const auto u = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= (u >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace hold
