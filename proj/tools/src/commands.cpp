#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

#include "hold/analytic_score.hpp"
#include "hold/checkpoint.hpp"
#include "hold/likelihood.hpp"
#include "hold/scorenet.hpp"
#include "json.hpp"

namespace hold::cli {
namespace {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kSampleTag = 0x73616d70;
constexpr std::uint64_t kRefTag = 0x726566;
constexpr std::uint64_t kNllTag = 0x6e6c6c;

struct Model {
  std::unique_ptr<ScoreModel> score;
  HoldParams kernel;
  std::string source;  // path or analytic:<data>; goes to the meta sidecar
  std::string kind;    // checkpoint | analytic:<data>
  std::string hash;
};

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

json header(const RunConfig& cfg, const std::string& command) {
  json j;
  j["command"] = command;
  j["config_hash"] = cfg.hash_hex();
  j["seed"] = cfg.seed;
  return j;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

// timing and anything else that legitimately differs between reruns
void write_meta(const std::filesystem::path& artifact, const RunConfig& cfg, double seconds, json extra = {}) {
  json j;
  j["artifact"] = artifact.filename().string();
  j["config_hash"] = cfg.hash_hex();
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  j["wall_seconds"] = seconds;
  j["timestamp"] = utc_now();
  for (auto& [k, v] : extra.items()) j[k] = v;
  auto p = artifact;
  p.replace_extension(".meta.json");
  write_json(p, j);
}

std::string csv_comment(const RunConfig& cfg) {
  return "hold config_hash=" + cfg.hash_hex() + " seed=" + std::to_string(cfg.seed);
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

bool same_kernel(const HoldParams& a, const HoldParams& b) {
  return a.L == b.L && a.gamma == b.gamma && a.xi == b.xi && a.alpha == b.alpha && a.T == b.T && a.t_min == b.t_min;
}

Model load_model(const RunConfig& cfg, const ModelOptions& opt) {
  Model m;
  if (opt.analytic) {
    const auto ds = cfg.make_dataset();
    std::vector<GaussianComponent> comps;
    if (auto* g = dynamic_cast<const Gmm1d*>(ds.get()))
      comps = g->spec().components();
    else if (auto* gd = dynamic_cast<const GaussianData*>(ds.get()))
      comps = gd->components();
    else
      throw std::runtime_error("--analytic needs data.name = gmm1d or gaussian (no closed-form score for '" +
                               cfg.dataset + "')");
    m.score = std::make_unique<GaussianMixtureScore>(cfg.kernel, comps);
    m.kernel = cfg.kernel;
    m.source = "analytic:" + cfg.dataset;
    m.kind = m.source;
    m.hash = "analytic";
    return m;
  }
  const auto path = opt.checkpoint.empty() ? cfg.out / "checkpoint.bin" : opt.checkpoint;
  if (!std::filesystem::exists(path))
    throw std::runtime_error("checkpoint not found: " + path.string() +
                             " (run `hold train` first, pass --checkpoint PATH, or use --analytic)");
  const Checkpoint ck = load_checkpoint(path);
  if (ck.spec.d != cfg.make_dataset()->dim())
    throw std::runtime_error("checkpoint " + path.string() + " has d=" + std::to_string(ck.spec.d) +
                             " but data.name='" + cfg.dataset + "' has a different dimension");
  if (!same_kernel(ck.kernel, cfg.kernel))
    std::cerr << "warning: kernel.* in the config differs from the checkpoint; using the checkpoint's values\n";
  m.kernel = ck.kernel;
  const auto& p = ck.eval_params();
  m.hash = hex64(hash_params(p));
  m.score = std::make_unique<MlpScore>(ck.spec, p, cfg.threads);
  m.source = path.string();
  m.kind = "checkpoint";
  return m;
}

struct Samples {
  std::vector<double> q;
  std::size_t nfe = 0;
};

Samples draw(const RunConfig& cfg, const Model& m, const std::string& sampler, std::size_t steps, std::size_t n,
             std::uint64_t seed) {
  TimeGrid g = cfg.grid;
  g.n_steps = steps;
  g.T = m.kernel.T;
  g.t_min = m.kernel.t_min;
  const std::size_t d = m.score->dim();
  switch (sampler_from_string(sampler)) {
    case SamplerKind::em: {
      SamplerOptions o;
      o.threads = cfg.threads;
      auto r = em_reverse(m.kernel, *m.score, g, n, seed, o);
      return {q_block(r.state), r.nfe};
    }
    case SamplerKind::lt: {
      SamplerOptions o;
      o.threads = cfg.threads;
      o.b_step = cfg.b_step;
      auto r = lt_sample(m.kernel, *m.score, g, n, seed, o);
      return {q_block(r.state), r.nfe};
    }
    case SamplerKind::ode: {
      if (steps == 0) return {q_block(prior_batch(m.kernel, n, d, seed)), 0};
      OdeOptions o;
      o.tol.atol = cfg.ode_atol;
      o.tol.rtol = cfg.ode_rtol;
      o.threads = cfg.threads;
      auto r = ode_sample(m.kernel, *m.score, n, d, seed, o);
      return {q_block(r.state), r.nfe};
    }
  }
  return {};
}

// Distance to data plus mode/cluster masses.
json metrics(const Dataset& ds, const std::vector<double>& q, const std::vector<double>& ref, std::uint64_t seed) {
  json j;
  const std::size_t d = ds.dim();
  auto* gmm = dynamic_cast<const Gmm1d*>(&ds);
  auto* gauss = dynamic_cast<const GaussianData*>(&ds);
  if (gmm) {
    j["w1"] = w1_to_gmm1d(q, gmm->spec());
  } else if (gauss && d == 1) {
    j["w1"] = w1_to_gmm1d(q, Gmm1dSpec{{1.0}, {gauss->mean()[0]}, {std::sqrt(gauss->variance())}});
  } else if (d == 1) {
    j["w1"] = w1_1d(q, ref);
  } else {
    Rng r(seed, 0x736c);
    j["sliced_w1"] = sliced_w1_2d(q, ref, 64, r);
  }
  if (auto* g = gmm) {
    std::vector<double> mass(g->spec().means.size(), 0.0);
    for (double x : q) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < mass.size(); ++k)
        if (std::fabs(x - g->spec().means[k]) < std::fabs(x - g->spec().means[best])) best = k;
      mass[best] += 1.0 / static_cast<double>(q.size());
    }
    j["mode_masses"] = mass;
  } else if (auto* s = dynamic_cast<const SwissRolls*>(&ds)) {
    j["cluster_masses"] = cluster_masses(q, s->spec().centers);
  }
  if (d == 1) {
    double m = 0.0, v = 0.0;
    for (double x : q) m += x;
    m /= static_cast<double>(q.size());
    for (double x : q) v += (x - m) * (x - m);
    j["mean"] = m;
    j["variance"] = q.size() > 1 ? v / static_cast<double>(q.size() - 1) : 0.0;
  }
  return j;
}

double primary_metric(const json& m) { return m.contains("w1") ? m["w1"].get<double>() : m["sliced_w1"].get<double>(); }

std::vector<std::string> q_header(std::size_t d) {
  std::vector<std::string> h;
  for (std::size_t k = 0; k < d; ++k) h.push_back("q" + std::to_string(k));
  return h;
}

std::vector<double> normal_quantiles(std::size_t n, double mean, double sd) {
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    double lo = -40.0, hi = 40.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (0.5 * std::erfc(-mid / std::numbers::sqrt2) < u ? lo : hi) = mid;
    }
    q[i] = mean + sd * 0.5 * (lo + hi);
  }
  return q;
}

}  // namespace

int cmd_verify(const RunConfig& cfg) {
  VerifyConfig vc = cfg.verify;
  vc.seed = cfg.seed;
  vc.threads = cfg.threads;
  const auto t0 = Clock::now();
  const auto res = run_verification(cfg.kernel, vc, cfg.verify_mc);
  json j = header(cfg, "verify");
  bool ok = true;
  json checks = json::array();
  json timing;
  for (const auto& r : res) {
    ok = ok && r.passed;
    checks.push_back({{"name", r.name}, {"deviation", r.deviation}, {"tolerance", r.tolerance},
                      {"passed", r.passed}, {"detail", r.detail}});
    timing[r.name] = r.seconds;
    std::cout << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(28) << r.name << " deviation "
              << r.deviation << " (tol " << r.tolerance << ")  " << r.detail << '\n';
  }
  j["passed"] = ok;
  j["checks"] = checks;
  std::filesystem::create_directories(cfg.out);
  write_json(cfg.out / "verify_report.json", j);
  write_meta(cfg.out / "verify_report.json", cfg, seconds_since(t0), {{"check_seconds", timing}});
  std::cout << (ok ? "all checks passed" : "verification FAILED") << '\n';
  return ok ? 0 : 1;
}

int cmd_train(const RunConfig& cfg) {
  const auto ds = cfg.make_dataset();
  TrainInputs in;
  in.kernel = cfg.kernel;
  in.net = cfg.net;
  in.train = cfg.train;
  in.data = ds.get();
  in.out_dir = cfg.out;
  in.config_hash = cfg.hash();
  in.on_log = [](std::size_t k, double loss) { std::cerr << "iter " << k << "  loss " << loss << '\n'; };
  const auto t0 = Clock::now();
  const TrainResult r = train(in);
  json j = header(cfg, "train");
  j["dataset"] = cfg.dataset;
  j["iterations"] = cfg.train.n_iters;
  j["final_loss"] = r.final_loss;
  j["param_count"] = r.params.size();
  j["checkpoint"] = "checkpoint.bin";
  j["checkpoint_hash"] = hex64(hash_params(r.ema.empty() ? r.params : r.ema));
  write_json(cfg.out / "train_report.json", j);
  write_meta(cfg.out / "train_report.json", cfg, seconds_since(t0));
  std::cout << "trained " << cfg.train.n_iters << " iterations, final loss " << r.final_loss << " -> "
            << (cfg.out / "checkpoint.bin").string() << '\n';
  return 0;
}

int cmd_sample(const RunConfig& cfg, const ModelOptions& mo) {
  const Model m = load_model(cfg, mo);
  const auto ds = cfg.make_dataset();
  const auto t0 = Clock::now();
  const Samples s = draw(cfg, m, cfg.sampler, cfg.grid.n_steps, cfg.n_samples, derive_seed(cfg.seed, kSampleTag));
  const double secs = seconds_since(t0);
  std::filesystem::create_directories(cfg.out);
  write_csv(cfg.out / "samples.csv", s.q, ds->dim(), q_header(ds->dim()), csv_comment(cfg));
  const auto ref = ds->sample(cfg.eval_n, derive_seed(cfg.seed, kRefTag));
  json j = header(cfg, "sample");
  j["model"] = m.kind;
  j["model_hash"] = m.hash;
  j["sampler"] = cfg.sampler;
  if (cfg.sampler == "ode") {
    j["steps"] = "adaptive";
    j["tol"] = {{"atol", cfg.ode_atol}, {"rtol", cfg.ode_rtol}};
  } else {
    j["steps"] = cfg.grid.n_steps;
    j["schedule"] = to_string(cfg.grid.schedule);
  }
  if (cfg.sampler == "lt") j["b_step"] = to_string(cfg.b_step);
  j["n_samples"] = cfg.n_samples;
  j["nfe"] = s.nfe;
  j["metrics"] = metrics(*ds, s.q, ref, cfg.seed);
  write_json(cfg.out / "sample_report.json", j);
  write_meta(cfg.out / "samples.csv", cfg, secs, {{"nfe", s.nfe}, {"sampler", cfg.sampler}, {"model", m.source}});
  std::cout << "wrote " << cfg.n_samples << " samples (" << cfg.sampler << ", "
            << (cfg.sampler == "ode" ? std::string("adaptive") : std::to_string(cfg.grid.n_steps)) << " steps, nfe " << s.nfe << ") " << j["metrics"].dump() << '\n';
  return 0;
}

int cmd_nll(const RunConfig& cfg, const ModelOptions& mo) {
  const Model m = load_model(cfg, mo);
  const auto ds = cfg.make_dataset();
  const std::size_t d = ds->dim();
  std::vector<double> q0;
  json truth = nullptr;
  auto* gmm = dynamic_cast<const Gmm1d*>(ds.get());
  auto* gauss = dynamic_cast<const GaussianData*>(ds.get());
  bool stratified = false;
  if (cfg.nll_stratified && gmm) {
    q0 = stratified_gmm1d(gmm->spec(), cfg.nll_n_points);
    stratified = true;
  } else if (cfg.nll_stratified && gauss && d == 1) {
    q0 = normal_quantiles(cfg.nll_n_points, gauss->mean()[0], std::sqrt(gauss->variance()));
    stratified = true;
  } else {
    q0 = ds->sample(cfg.nll_n_points, derive_seed(cfg.seed, kRefTag));
  }
  if (gmm) truth = entropy_gmm1d(gmm->spec());
  if (gauss) truth = 0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi * std::numbers::e * gauss->variance());
  NllOptions o;
  o.n_aux = cfg.nll_n_aux;
  o.n_hutch = cfg.nll_n_hutch;
  o.tol.atol = cfg.ode_atol;
  o.tol.rtol = cfg.ode_rtol;
  o.threads = cfg.threads;
  const auto t0 = Clock::now();
  const NllEstimate e = nll_bound(m.kernel, *m.score, q0, d, derive_seed(cfg.seed, kNllTag), o);
  json j = header(cfg, "nll");
  j["model"] = m.kind;
  j["checkpoint_hash"] = m.hash;
  j["bound_nats"] = e.bound_nats;
  j["bits_per_dim"] = e.bound_bits_per_dim;
  j["std_error"] = e.std_error;
  j["bound_nats_sampled_entropy"] = e.bound_nats_sampled_entropy;
  j["std_error_sampled_entropy"] = e.std_error_sampled_entropy;
  j["true_nll_nats"] = truth;
  j["n_points"] = e.n_points;
  j["stratified_points"] = stratified;
  j["n_aux"] = e.n_aux_draws;
  j["n_hutch"] = e.n_hutchinson;
  j["tol"] = {{"atol", cfg.ode_atol}, {"rtol", cfg.ode_rtol}};
  j["max_nfe"] = e.max_nfe;
  std::filesystem::create_directories(cfg.out);
  write_json(cfg.out / "nll_report.json", j);
  write_meta(cfg.out / "nll_report.json", cfg, seconds_since(t0), {{"model", m.source}});
  std::cout << "NLL bound " << e.bound_nats << " nats (" << e.bound_bits_per_dim << " bits/dim) +- "
            << e.std_error << "; sampled-entropy form " << e.bound_nats_sampled_entropy << " +- "
            << e.std_error_sampled_entropy;
  if (!truth.is_null()) std::cout << "; true " << truth.get<double>();
  std::cout << '\n';
  return 0;
}

int cmd_compare(const RunConfig& cfg, const ModelOptions& mo) {
  const Model m = load_model(cfg, mo);
  const auto ds = cfg.make_dataset();
  const auto ref = ds->sample(cfg.eval_n, derive_seed(cfg.seed, kRefTag));
  std::filesystem::create_directories(cfg.out);
  const auto t0 = Clock::now();
  std::ostringstream rows, summary;
  rows << "# " << csv_comment(cfg) << "\nsampler,steps,seed,nfe,metric\n";
  summary << "# " << csv_comment(cfg) << "\nsampler,steps,mean_metric,sd_metric\n";
  json grid = json::array();
  std::map<std::string, std::map<std::size_t, double>> mean_of;
  for (const auto& sampler : cfg.compare_samplers) {
    const bool ode = sampler == "ode";
    std::vector<double> steps = cfg.compare_steps;
    if (ode) steps = {0.0};
    for (double sd : steps) {
      const auto n_steps = static_cast<std::size_t>(sd);
      std::vector<double> vals;
      std::size_t nfe = 0;
      for (std::size_t s = 0; s < cfg.compare_seeds; ++s) {
        const std::uint64_t seed = derive_seed(derive_seed(cfg.seed, kSampleTag), 1000 + s);
        const Samples smp = draw(cfg, m, sampler, ode ? 1 : n_steps, cfg.n_samples, seed);
        const double v = primary_metric(metrics(*ds, smp.q, ref, seed));
        vals.push_back(v);
        nfe = smp.nfe;
        rows << sampler << ',' << n_steps << ',' << s << ',' << smp.nfe << ',' << format_double(v) << '\n';
        std::cerr << sampler << " steps " << n_steps << " seed " << s << " metric " << v << '\n';
      }
      double mean = 0.0, var = 0.0;
      for (double v : vals) mean += v;
      mean /= static_cast<double>(vals.size());
      for (double v : vals) var += (v - mean) * (v - mean);
      const double sdv = vals.size() > 1 ? std::sqrt(var / static_cast<double>(vals.size() - 1)) : 0.0;
      summary << sampler << ',' << n_steps << ',' << format_double(mean) << ',' << format_double(sdv) << '\n';
      grid.push_back({{"sampler", sampler}, {"steps", n_steps}, {"nfe", nfe}, {"mean_metric", mean}, {"sd_metric", sdv}, {"per_seed", vals}});
      mean_of[sampler][n_steps] = mean;
    }
  }
  std::ofstream(cfg.out / "compare.csv", std::ios::trunc) << rows.str();
  std::ofstream(cfg.out / "compare_summary.csv", std::ios::trunc) << summary.str();
  json j = header(cfg, "compare");
  j["model"] = m.kind;
  j["model_hash"] = m.hash;
  j["metric"] = ds->dim() == 1 ? "w1" : "sliced_w1";
  j["n_samples"] = cfg.n_samples;
  j["seeds"] = cfg.compare_seeds;
  j["grid"] = grid;
  if (mean_of.count("lt") && mean_of.count("em")) {
    json lt_le_em;
    for (const auto& [steps, v] : mean_of["lt"])
      if (mean_of["em"].count(steps)) lt_le_em[std::to_string(steps)] = v <= mean_of["em"][steps];
    j["lt_le_em"] = lt_le_em;
  }
  write_json(cfg.out / "compare_report.json", j);
  write_meta(cfg.out / "compare_report.json", cfg, seconds_since(t0), {{"model", m.source}});
  std::cout << summary.str();
  return 0;
}

int cmd_evolve(const RunConfig& cfg, const ModelOptions& mo) {
  const Model m = load_model(cfg, mo);
  const std::size_t d = m.score->dim();
  const HoldParams& kp = m.kernel;
  auto fr = cfg.evolve_fractions;
  std::sort(fr.begin(), fr.end());
  const double span = kp.T - kp.t_min;
  const std::uint64_t seed = derive_seed(cfg.seed, kSampleTag);
  std::vector<StateBatch> snaps;
  std::vector<double> times;
  const auto t0 = Clock::now();
  const auto kind = sampler_from_string(cfg.evolve_sampler);
  if (kind == SamplerKind::ode) {
    StateBatch x = prior_batch(kp, cfg.n_samples, d, seed);
    double now = kp.T;
    OdeOptions o;
    o.tol.atol = cfg.ode_atol;
    o.tol.rtol = cfg.ode_rtol;
    o.threads = cfg.threads;
    for (double f : fr) {
      const double t = kp.T - f * span;
      if (t < now) x = prob_flow_ode(kp, *m.score, std::move(x), now, t, o).state;
      now = t;
      snaps.push_back(x);
      times.push_back(t);
    }
  } else {
    TimeGrid g = cfg.grid;
    g.T = kp.T;
    g.t_min = kp.t_min;
    const auto ts = g.times();
    std::size_t next = 0;
    SamplerOptions o;
    o.threads = cfg.threads;
    o.b_step = cfg.b_step;
    o.observer = [&](std::size_t, double t, const StateBatch& x) {
      while (next < fr.size() && (kp.T - t) >= fr[next] * span - 1e-12 * span) {
        snaps.push_back(x);
        times.push_back(t);
        ++next;
      }
    };
    if (kind == SamplerKind::em)
      em_reverse(kp, *m.score, g, cfg.n_samples, seed, o);
    else
      lt_sample(kp, *m.score, g, cfg.n_samples, seed, o);
  }
  std::filesystem::create_directories(cfg.out);
  const std::size_t nb = cfg.evolve_bins;
  const double lo = -cfg.evolve_range, width = 2.0 * cfg.evolve_range / static_cast<double>(nb);
  const char* block_names[3] = {"q", "p", "s"};
  std::ostringstream index;
  index << "# " << csv_comment(cfg) << "\nsnapshot,fraction,model_time\n";
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    index << k << ',' << format_double(fr[k]) << ',' << format_double(times[k]) << '\n';
    for (std::size_t b = 0; b < 3; ++b) {
      std::vector<double> table(nb * (1 + d), 0.0);
      for (std::size_t i = 0; i < nb; ++i) table[i * (1 + d)] = lo + (static_cast<double>(i) + 0.5) * width;
      const StateBatch& x = snaps[k];
      for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t c = 0; c < d; ++c) {
          const double v = x.at(i, b, c);
          const double pos = (v - lo) / width;
          if (pos < 0.0 || pos >= static_cast<double>(nb)) continue;
          table[static_cast<std::size_t>(pos) * (1 + d) + 1 + c] += 1.0 / (static_cast<double>(x.size()) * width);
        }
      std::vector<std::string> hdr{"bin_center"};
      for (std::size_t c = 0; c < d; ++c) hdr.push_back("density" + std::to_string(c));
      write_csv(cfg.out / ("evolve_" + std::to_string(k) + "_" + block_names[b] + ".csv"), table, 1 + d, hdr,
                csv_comment(cfg) + " fraction=" + format_double(fr[k]));
    }
  }
  std::ofstream(cfg.out / "evolve_index.csv", std::ios::trunc) << index.str();
  write_meta(cfg.out / "evolve_index.csv", cfg, seconds_since(t0), {{"sampler", cfg.evolve_sampler}, {"model", m.source}});
  std::cout << "wrote " << snaps.size() << " snapshots x 3 blocks to " << cfg.out.string() << '\n';
  return 0;
}

}  // namespace hold::cli
