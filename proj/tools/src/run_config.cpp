#include "run_config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <type_traits>

namespace hold::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto s = trim(v);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  return x;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  const auto s = trim(v);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
  return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
  const auto s = trim(v);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("config key '" + key + "': expected true|false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
  bool hashed = true;
};

template <class M>
Field dbl(M m) {
  return {[m](RunConfig& c, const std::string& k, const std::string& v) { m(c) = parse_double(k, v); },
          [m](const RunConfig& c) { return format_double(m(const_cast<RunConfig&>(c))); }};
}

template <class M>
Field uint(M m) {
  return {[m](RunConfig& c, const std::string& k, const std::string& v) {
            m(c) = static_cast<std::remove_reference_t<decltype(m(c))>>(parse_u64(k, v));
          },
          [m](const RunConfig& c) { return std::to_string(m(const_cast<RunConfig&>(c))); }};
}

template <class M>
Field str(M m) {
  return {[m](RunConfig& c, const std::string&, const std::string& v) { m(c) = trim(v); },
          [m](const RunConfig& c) { return m(const_cast<RunConfig&>(c)); }};
}

template <class M>
Field dlist(M m) {
  return {[m](RunConfig& c, const std::string& k, const std::string& v) {
            std::vector<double> out;
            for (const auto& s : split_list(v)) out.push_back(parse_double(k, s));
            m(c) = out;
          },
          [m](const RunConfig& c) { return join(m(const_cast<RunConfig&>(c))); }};
}

template <class M, class P, class S>
Field enumf(M m, P parse, S show) {
  return {[m, parse](RunConfig& c, const std::string& k, const std::string& v) {
            try {
              m(c) = parse(trim(v));
            } catch (const std::invalid_argument& e) {
              throw ConfigError("config key '" + k + "': " + e.what());
            }
          },
          [m, show](const RunConfig& c) { return show(m(const_cast<RunConfig&>(c))); }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> f = [] {
    std::map<std::string, Field> m;
    m["kernel.L"] = dbl([](RunConfig& c) -> double& { return c.kernel.L; });
    m["kernel.gamma"] = dbl([](RunConfig& c) -> double& { return c.kernel.gamma; });
    m["kernel.xi"] = dbl([](RunConfig& c) -> double& { return c.kernel.xi; });
    m["kernel.alpha"] = dbl([](RunConfig& c) -> double& { return c.kernel.alpha; });
    m["kernel.T"] = dbl([](RunConfig& c) -> double& { return c.kernel.T; });
    m["kernel.t_min"] = dbl([](RunConfig& c) -> double& { return c.kernel.t_min; });

    m["net.hidden_width"] = uint([](RunConfig& c) -> std::size_t& { return c.net.hidden_width; });
    m["net.n_hidden"] = uint([](RunConfig& c) -> std::size_t& { return c.net.n_hidden; });
    m["net.n_frequencies"] = uint([](RunConfig& c) -> std::size_t& { return c.net.n_frequencies; });
    m["net.time_encoding"] = enumf([](RunConfig& c) -> TimeEncoding& { return c.net.time_encoding; },
                                   time_encoding_from_string, [](TimeEncoding e) { return to_string(e); });

    m["train.batch_size"] = uint([](RunConfig& c) -> std::size_t& { return c.train.batch_size; });
    m["train.n_iters"] = uint([](RunConfig& c) -> std::size_t& { return c.train.n_iters; });
    m["train.lr"] = dbl([](RunConfig& c) -> double& { return c.train.lr; });
    m["train.warmup_iters"] = uint([](RunConfig& c) -> std::size_t& { return c.train.warmup_iters; });
    m["train.ema_decay"] = dbl([](RunConfig& c) -> double& { return c.train.ema_decay; });
    m["train.checkpoint_every"] = uint([](RunConfig& c) -> std::size_t& { return c.train.checkpoint_every; });
    m["train.log_every"] = uint([](RunConfig& c) -> std::size_t& { return c.train.log_every; });
    m["train.max_grad_norm"] = dbl([](RunConfig& c) -> double& { return c.train.max_grad_norm; });
    m["train.loss"] = enumf([](RunConfig& c) -> LossKind& { return c.train.loss_kind; }, loss_kind_from_string,
                            [](LossKind k) { return to_string(k); });
    m["train.time_sampling"] = enumf([](RunConfig& c) -> TimeSampling& { return c.train.time_sampling; },
                                     time_sampling_from_string, [](TimeSampling v) { return to_string(v); });

    m["data.name"] = str([](RunConfig& c) -> std::string& { return c.dataset; });
    m["data.gaussian_mean"] = dlist([](RunConfig& c) -> std::vector<double>& { return c.gaussian_mean; });
    m["data.gaussian_var"] = dbl([](RunConfig& c) -> double& { return c.gaussian_var; });
    m["data.eval_n"] = uint([](RunConfig& c) -> std::size_t& { return c.eval_n; });

    m["sample.sampler"] = str([](RunConfig& c) -> std::string& { return c.sampler; });
    m["sample.steps"] = uint([](RunConfig& c) -> std::size_t& { return c.grid.n_steps; });
    m["sample.schedule"] = enumf([](RunConfig& c) -> Schedule& { return c.grid.schedule; }, schedule_from_string,
                                 [](Schedule s) { return to_string(s); });
    m["sample.b_step"] = enumf([](RunConfig& c) -> BStep& { return c.b_step; }, b_step_from_string,
                               [](BStep b) { return to_string(b); });
    m["sample.n_samples"] = uint([](RunConfig& c) -> std::size_t& { return c.n_samples; });
    m["sample.atol"] = dbl([](RunConfig& c) -> double& { return c.ode_atol; });
    m["sample.rtol"] = dbl([](RunConfig& c) -> double& { return c.ode_rtol; });

    m["nll.n_aux"] = uint([](RunConfig& c) -> std::size_t& { return c.nll_n_aux; });
    m["nll.n_hutch"] = uint([](RunConfig& c) -> std::size_t& { return c.nll_n_hutch; });
    m["nll.n_points"] = uint([](RunConfig& c) -> std::size_t& { return c.nll_n_points; });
    m["nll.stratified"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.nll_stratified = parse_bool(k, v); },
                           [](const RunConfig& c) { return std::string(c.nll_stratified ? "true" : "false"); }};

    m["compare.steps"] = dlist([](RunConfig& c) -> std::vector<double>& { return c.compare_steps; });
    m["compare.samplers"] = {[](RunConfig& c, const std::string&, const std::string& v) { c.compare_samplers = split_list(v); },
                             [](const RunConfig& c) { return join(c.compare_samplers); }};
    m["compare.seeds"] = uint([](RunConfig& c) -> std::size_t& { return c.compare_seeds; });

    m["evolve.fractions"] = dlist([](RunConfig& c) -> std::vector<double>& { return c.evolve_fractions; });
    m["evolve.bins"] = uint([](RunConfig& c) -> std::size_t& { return c.evolve_bins; });
    m["evolve.range"] = dbl([](RunConfig& c) -> double& { return c.evolve_range; });
    m["evolve.sampler"] = str([](RunConfig& c) -> std::string& { return c.evolve_sampler; });

    m["verify.tol_moment_rel"] = dbl([](RunConfig& c) -> double& { return c.verify.tol_moment_rel; });
    m["verify.tol_expm"] = dbl([](RunConfig& c) -> double& { return c.verify.tol_expm; });
    m["verify.tol_stationary"] = dbl([](RunConfig& c) -> double& { return c.verify.tol_stationary; });
    m["verify.tol_score"] = dbl([](RunConfig& c) -> double& { return c.verify.tol_score; });
    m["verify.tol_grad_rel"] = dbl([](RunConfig& c) -> double& { return c.verify.tol_grad_rel; });
    m["verify.mc_n_se"] = dbl([](RunConfig& c) -> double& { return c.verify.mc_n_se; });
    m["verify.mc_paths"] = uint([](RunConfig& c) -> std::size_t& { return c.verify.mc_paths; });
    m["verify.mc_dt"] = dbl([](RunConfig& c) -> double& { return c.verify.mc_dt; });
    m["verify.monte_carlo"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.verify_mc = parse_bool(k, v); },
                               [](const RunConfig& c) { return std::string(c.verify_mc ? "true" : "false"); }};

    m["seed"] = uint([](RunConfig& c) -> std::uint64_t& { return c.seed; });
    m["seed"].hashed = false;
    m["threads"] = uint([](RunConfig& c) -> unsigned& { return c.threads; });
    m["threads"].hashed = false;
    m["out"] = {[](RunConfig& c, const std::string&, const std::string& v) { c.out = trim(v); },
                [](const RunConfig& c) { return c.out.string(); }, false};
    return m;
  }();
  return f;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto& f = fields();
  auto it = f.find(key);
  if (it == f.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second.set(*this, key, value);
}

std::string RunConfig::get(const std::string& key) const {
  const auto& f = fields();
  auto it = f.find(key);
  if (it == f.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second.get(*this);
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> k;
  for (const auto& [name, _] : fields()) k.push_back(name);
  return k;
}

std::string RunConfig::canonical() const {
  std::string s;
  for (const auto& [name, f] : fields())
    if (f.hashed) s += name + "=" + f.get(*this) + "\n";
  return s;
}

std::uint64_t RunConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string RunConfig::hash_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
  return buf;
}

void RunConfig::finalize() {
  auto wrap = [](const char* what, auto&& fn) {
    try {
      fn();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string(what) + ": " + e.what());
    }
  };
  grid.T = kernel.T;
  grid.t_min = kernel.t_min;
  net.time_scale = kernel.T;
  train.seed = seed;
  train.threads = threads;
  wrap("kernel.*", [&] { kernel.validate(); });
  const auto ds = make_dataset();
  net.d = ds->dim();
  wrap("net.*", [&] { net.validate(); });
  wrap("train.*", [&] { train.validate(); });
  wrap("sample.*", [&] { grid.validate(); });
  wrap("sample.sampler", [&] { sampler_from_string(sampler); });
  wrap("evolve.sampler", [&] { sampler_from_string(evolve_sampler); });
  for (const auto& s : compare_samplers) wrap("compare.samplers", [&] { sampler_from_string(s); });
  for (double s : compare_steps)
    if (!(s >= 1.0) || s != std::floor(s)) throw ConfigError("config key 'compare.steps': entries must be positive integers");
  for (double f : evolve_fractions)
    if (!(f >= 0.0 && f < 1.0)) throw ConfigError("config key 'evolve.fractions': entries must lie in [0, 1)");
  if (evolve_bins == 0) throw ConfigError("config key 'evolve.bins' must be >= 1");
  if (!(evolve_range > 0.0)) throw ConfigError("config key 'evolve.range' must be > 0");
  if (n_samples == 0) throw ConfigError("config key 'sample.n_samples' must be >= 1");
  if (eval_n == 0) throw ConfigError("config key 'data.eval_n' must be >= 1");
  if (nll_n_points == 0) throw ConfigError("config key 'nll.n_points' must be >= 1");
  if (compare_seeds == 0) throw ConfigError("config key 'compare.seeds' must be >= 1");
  if (!(ode_atol >= 1e-8 && ode_rtol >= 1e-8)) throw ConfigError("config keys 'sample.atol'/'sample.rtol' must be >= 1e-8");
  if (threads == 0) throw ConfigError("threads must be >= 1");
}

std::unique_ptr<Dataset> RunConfig::make_dataset() const {
  if (dataset == "gmm1d") return std::make_unique<Gmm1d>(Gmm1dSpec{});
  if (dataset == "swiss") return std::make_unique<SwissRolls>(SwissRollSpec{});
  if (dataset == "gaussian") {
    if (gaussian_mean.empty()) throw ConfigError("config key 'data.gaussian_mean' must be non-empty");
    if (!(gaussian_var > 0.0)) throw ConfigError("config key 'data.gaussian_var' must be > 0");
    return std::make_unique<GaussianData>(gaussian_mean, gaussian_var);
  }
  throw ConfigError("config key 'data.name': unknown dataset '" + dataset + "' (expected gmm1d|swiss|gaussian)");
}

void load_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path.string());
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(n) + ": expected 'key = value', got '" + line + "'");
    try {
      cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
}

void apply_override(RunConfig& cfg, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + kv + "' is not key=value");
  cfg.set(trim(kv.substr(0, eq)), kv.substr(eq + 1));
}

}  // namespace hold::cli
