#include "csqbm/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "csqbm/checkpoint.hpp"
#include "csqbm/config.hpp"
#include "csqbm/errors.hpp"
#include "csqbm/metrics.hpp"
#include "csqbm/plot.hpp"

namespace csqbm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool quiet = false;
};

/// Writes to `path` if given, else to `fallback`.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw IoError("cannot write " + path);
      stream_ = &file_;
    }
  }
  std::ostream& get() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed on " + path.string());
}

ExperimentConfig load_with_overrides(const GlobalOptions& g, std::vector<std::string> overrides,
                                     bool seed_into_config, bool out_into_config) {
  if (g.config.empty()) throw ConfigError("--config is required");
  if (seed_into_config && g.seed) overrides.push_back("run.root_seed=" + std::to_string(*g.seed));
  if (out_into_config && !g.out.empty()) overrides.push_back("run.out_dir=\"" + g.out + "\"");
  return load_config(g.config, overrides);
}

std::string step_name(std::size_t step) {
  std::ostringstream ss;
  ss << "step_" << std::setw(8) << std::setfill('0') << step << ".json";
  return ss.str();
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::vector<std::string> overrides;
  bool force = false;
};

int cmd_train(const GlobalOptions& g, const TrainArgs& a, std::ostream& out) {
  const ExperimentConfig cfg = load_with_overrides(g, a.overrides, true, true);
  const fs::path dir = cfg.run.out_dir;
  std::error_code ec;
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!a.force) throw IoError("output directory " + dir.string() + " is not empty (use --force)");
    fs::remove_all(dir, ec);
    if (ec) throw IoError("cannot clear " + dir.string() + ": " + ec.message());
  }
  fs::create_directories(dir / "checkpoints", ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  write_text(dir / "resolved_config.yaml", config_to_yaml(cfg));

  const std::uint64_t seed = cfg.run.root_seed;
  CsqbmModel model = build_model(cfg.model, seed);
  auto env = build_env(cfg.env, seed, 0);
  const AgentConfig agent = make_agent_config(cfg.agent);

  MetricsWriter metrics(dir / "metrics.jsonl", MetricsHeader{cfg.env.name, seed, cfg.run.episodes});
  std::vector<std::pair<std::string, std::string>> saved;

  TrainOptions opt;
  opt.episodes = cfg.run.episodes;
  opt.root_seed = seed;
  opt.checkpoint_interval = cfg.run.checkpoint_interval;
  opt.record_wall_time = cfg.run.record_wall_time;
  opt.on_checkpoint = [&](std::size_t step, const Checkpoint& ckpt) {
    const std::string name = step_name(step);
    save_checkpoint(ckpt, dir / "checkpoints" / name);
    saved.emplace_back(name, checkpoint_hash(ckpt));
  };
  opt.on_episode = [&](const EpisodeRecord& rec, const CsqbmModel& current) {
    metrics.write(rec);
    if (g.quiet || cfg.run.eval_interval == 0 || (rec.episode + 1) % cfg.run.eval_interval != 0) {
      return;
    }
    auto eval_env = build_env(cfg.env, seed, 1);
    Rng eval_rng = split_rng(seed, Stream::kEvaluation);
    const EvalSummary summary =
        evaluate(current, *eval_env, agent, std::max<std::size_t>(cfg.run.eval_episodes, 1), eval_rng);
    out << "episode " << rec.episode + 1 << ": greedy mean return " << summary.mean_return << "\n";
  };

  // A weight update that leaves the prior non-normalizable or produces
  // non-finite values is reported as divergence.
  std::optional<TrainResult> trained;
  try {
    trained.emplace(train(*env, std::move(model), agent, opt));
  } catch (const NonNormalizableError& e) {
    throw DivergenceError(std::string("training diverged: ") + e.what());
  } catch (const NumericalError& e) {
    throw DivergenceError(std::string("training diverged: ") + e.what());
  }
  const TrainResult& result = *trained;

  const Checkpoint final_ckpt{result.model,
                              "seed=" + std::to_string(seed) + "/final",
                              OptimizerState{"sgd", result.log.updates}};
  save_checkpoint(final_ckpt, dir / "checkpoints" / "final.json");
  saved.emplace_back("final.json", checkpoint_hash(final_ckpt));

  nlohmann::ordered_json manifest;
  manifest["artifact"] = "csqbm";
  manifest["version"] = kArtifactVersion;
  manifest["root_seed"] = seed;
  manifest["episodes"] = cfg.run.episodes;
  manifest["total_steps"] = result.log.total_steps;
  manifest["updates"] = result.log.updates;
  nlohmann::ordered_json ckpts = nlohmann::ordered_json::array();
  for (const auto& [name, hash] : saved) ckpts.push_back({{"file", "checkpoints/" + name}, {"hash", hash}});
  manifest["checkpoints"] = ckpts;
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");

  if (!g.quiet) {
    double tail = 0.0;
    const auto& eps = result.log.episodes;
    const std::size_t k = std::min<std::size_t>(100, eps.size());
    for (std::size_t i = eps.size() - k; i < eps.size(); ++i) tail += eps[i].ret;
    out << "trained " << eps.size() << " episodes (" << result.log.total_steps << " steps)";
    if (k > 0) out << ", mean return over last " << k << ": " << tail / static_cast<double>(k);
    out << "\nrun directory: " << dir.string() << "\n";
  }
  return kExitOk;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::optional<std::size_t> episodes;
  std::vector<std::string> overrides;
};

int cmd_eval(const GlobalOptions& g, const EvalArgs& a, std::ostream& out) {
  const ExperimentConfig cfg = load_with_overrides(g, a.overrides, true, false);
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const std::size_t episodes = a.episodes.value_or(cfg.run.eval_episodes);
  if (episodes == 0) throw ConfigError("--episodes must be positive");
  const std::uint64_t seed = cfg.run.root_seed;
  auto env = build_env(cfg.env, seed, 1);
  const EnvSpec& spec = env->spec();
  if (ckpt.model.num_visible() != spec.state_dim + spec.action_dim) {
    throw ConfigError("checkpoint has n = " + std::to_string(ckpt.model.num_visible()) +
                      " but env '" + cfg.env.name + "' needs " +
                      std::to_string(spec.state_dim + spec.action_dim));
  }
  Rng rng = split_rng(seed, Stream::kEvaluation);
  const EvalSummary s = evaluate(ckpt.model, *env, make_agent_config(cfg.agent), episodes, rng);
  nlohmann::ordered_json rec;
  rec["checkpoint"] = a.checkpoint;
  rec["env"] = cfg.env.name;
  rec["episodes"] = episodes;
  rec["mean_return"] = s.mean_return;
  rec["std_return"] = s.std_return;
  rec["min_return"] = *std::min_element(s.returns.begin(), s.returns.end());
  rec["max_return"] = *std::max_element(s.returns.begin(), s.returns.end());
  Sink sink(g.out, out);
  sink.get() << rec.dump() << "\n";
  return kExitOk;
}

// ---- sample ----------------------------------------------------------------

struct SampleArgs {
  std::string checkpoint;
  std::vector<double> state;
  std::size_t count = 10;
  std::size_t sweeps = 20;
  std::size_t bins = 0;
};

int cmd_sample(const GlobalOptions& g, const SampleArgs& a, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const CsqbmModel& model = ckpt.model;
  const std::size_t n = model.num_visible();
  if (a.state.size() >= n) {
    throw ConfigError("state has " + std::to_string(a.state.size()) + " values but the checkpoint has n = " +
                      std::to_string(n) + " visible units; at least one must be left free");
  }
  if (a.sweeps == 0) throw ConfigError("--sweeps must be positive");
  const RealVector s = Eigen::Map<const RealVector>(a.state.data(), static_cast<Eigen::Index>(a.state.size()));
  const std::uint64_t seed = g.seed.value_or(0);
  Rng rng = split_rng(seed, Stream::kSampling);

  Sink sink(g.out, out);
  std::ostream& os = sink.get();
  nlohmann::ordered_json header;
  header["format"] = "csqbm-samples";
  header["version"] = 1;
  header["state"] = a.state;
  header["count"] = a.count;
  header["sweeps"] = a.sweeps;
  header["seed"] = seed;
  os << header.dump() << "\n";

  std::vector<RealVector> actions;
  const VisibleClamp clamp = VisibleClamp::leading(s);
  for (std::size_t k = 0; k < a.count; ++k) {
    const RealVector v = gibbs_sample_action(model, clamp, a.sweeps, rng);
    const RealVector action = v.tail(static_cast<Eigen::Index>(n - a.state.size()));
    nlohmann::ordered_json rec;
    rec["index"] = k;
    rec["action"] = std::vector<double>(action.data(), action.data() + action.size());
    rec["q"] = q_value(model, s, action);
    os << rec.dump() << "\n";
    actions.push_back(action);
  }

  if (a.bins > 0 && !actions.empty()) {
    const auto dims = actions.front().size();
    for (Eigen::Index d = 0; d < dims; ++d) {
      double lo = actions.front()(d), hi = lo;
      double mean = 0.0;
      for (const auto& x : actions) {
        lo = std::min(lo, x(d));
        hi = std::max(hi, x(d));
        mean += x(d);
      }
      mean /= static_cast<double>(actions.size());
      double var = 0.0;
      for (const auto& x : actions) var += (x(d) - mean) * (x(d) - mean);
      var = actions.size() > 1 ? var / static_cast<double>(actions.size() - 1) : 0.0;
      std::vector<std::size_t> counts(a.bins, 0);
      const double width = hi > lo ? (hi - lo) / static_cast<double>(a.bins) : 1.0;
      for (const auto& x : actions) {
        auto b = static_cast<std::size_t>((x(d) - lo) / width);
        counts[std::min(b, a.bins - 1)]++;
      }
      nlohmann::ordered_json h;
      h["histogram"] = {{"dim", d}, {"lo", lo}, {"hi", hi}, {"mean", mean}, {"variance", var},
                        {"counts", counts}};
      os << h.dump() << "\n";
    }
  }
  return kExitOk;
}

// ---- gradcheck -------------------------------------------------------------

struct GradcheckArgs {
  std::size_t trials = 100;
  double tolerance = 1e-5;
  double step = 1e-5;
  std::vector<std::string> overrides;
};

struct Worst {
  double error = 0.0;
  std::string where;
  bool seen = false;
};

int cmd_gradcheck(const GlobalOptions& g, const GradcheckArgs& a, std::ostream& out, std::ostream& err) {
  if (a.trials == 0) throw ConfigError("--trials must be positive");
  if (!(a.tolerance >= 0.0)) throw ConfigError("--tolerance must be non-negative");
  const ExperimentConfig cfg = load_with_overrides(g, a.overrides, false, false);
  const std::uint64_t seed = g.seed.value_or(cfg.run.root_seed);
  Rng rng = split_rng(seed, Stream::kGradcheck);
  auto u = [&](double lo, double hi) { return lo + (hi - lo) * uniform01(rng); };

  // Error is |analytic - numeric| / max(1, |numeric|).
  auto scaled = [](double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
  };
  std::map<std::string, Worst> worst;
  const double h = a.step;

  for (std::size_t trial = 0; trial < a.trials; ++trial) {
    CsqbmModel model = build_model(cfg.model, seed + trial + 1);
    const RealVector mask = model.trainable_mask();
    RealVector w = model.flat_weights();
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const WeightGroup group = model.weight_group(static_cast<std::size_t>(i));
      if (mask(i) == 0.0) continue;
      if (group == WeightGroup::Coupling || group == WeightGroup::Hidden) w(i) = u(-1.0, 1.0);
    }
    model = model.with_flat_weights(w);
    RealVector v(static_cast<Eigen::Index>(model.num_visible()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = standard_normal(rng);

    const GradientReport grad = grad_free_energy(model, v, GradientTarget::Both);
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      if (mask(i) == 0.0) continue;
      RealVector wp = w, wm = w;
      wp(i) += h;
      wm(i) -= h;
      const double fd = (free_energy(model.with_flat_weights(wp), v).f -
                         free_energy(model.with_flat_weights(wm), v).f) / (2.0 * h);
      const double e = scaled(grad.d_weights(i), fd);
      const std::string group = weight_group_name(model.weight_group(static_cast<std::size_t>(i)));
      Worst& slot = worst[group];
      if (!slot.seen || e > slot.error) {
        slot = Worst{e, model.weight_label(static_cast<std::size_t>(i)) + " (trial " + std::to_string(trial) + ")", true};
      }
    }
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      RealVector vp = v, vm = v;
      vp(i) += h;
      vm(i) -= h;
      const double fd = (free_energy(model, vp).f - free_energy(model, vm).f) / (2.0 * h);
      const double e = scaled(grad.d_visible(i), fd);
      Worst& slot = worst["visible"];
      if (!slot.seen || e > slot.error) {
        slot = Worst{e, "v[" + std::to_string(i) + "] (trial " + std::to_string(trial) + ")", true};
      }
    }
  }

  Sink sink(g.out, out);
  std::ostream& os = sink.get();
  bool ok = true;
  std::string offender;
  double offender_err = -1.0;
  for (const auto& [group, slot] : worst) {
    const bool pass = slot.error <= a.tolerance;
    ok = ok && pass;
    if (!pass && slot.error > offender_err) {
      offender_err = slot.error;
      offender = slot.where;
    }
    if (!g.quiet || !pass) {
      os << std::left << std::setw(10) << group << " worst " << std::scientific << std::setprecision(3)
         << slot.error << "  at " << slot.where << (pass ? "" : "  FAIL") << "\n";
    }
  }
  os << std::defaultfloat;
  if (!ok) {
    err << "gradcheck failed: " << offender << " exceeds tolerance " << a.tolerance << "\n";
    return kExitTolerance;
  }
  if (!g.quiet) os << "gradcheck passed: " << a.trials << " trials within " << a.tolerance << "\n";
  return kExitOk;
}

// ---- plot ------------------------------------------------------------------

int cmd_plot(const GlobalOptions& g, const std::string& metrics, std::ostream& out) {
  fs::path svg = g.out.empty() ? fs::path(metrics).replace_extension(".svg") : fs::path(g.out);
  plot_metrics_file(metrics, svg);
  if (!g.quiet) out << "wrote " << svg.string() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Continuous semi-quantum Boltzmann machine Q-learning toolkit", "csqbm"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  std::uint64_t seed_value = 0;
  app.add_option("--config", g.config, "Experiment config (YAML)");
  auto* seed_opt = app.add_option("--seed", seed_value, "Root seed override");
  app.add_option("--out", g.out, "Output location (run directory for train, file otherwise)");
  app.add_flag("--quiet", g.quiet, "Only print errors and requested records");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train an agent and write a run directory");
  train_cmd->add_option("--set", train_args.overrides, "Override a config key: section.key=value");
  train_cmd->add_flag("--force", train_args.force, "Replace a non-empty output directory");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Greedy evaluation of a checkpoint");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--episodes", eval_args.episodes, "Evaluation episodes (default run.eval_episodes)");
  eval_cmd->add_option("--set", eval_args.overrides, "Override a config key: section.key=value");

  SampleArgs sample_args;
  auto* sample_cmd = app.add_subcommand("sample", "Draw actions a ~ p(a|s) from a checkpoint");
  sample_cmd->add_option("--checkpoint", sample_args.checkpoint, "Checkpoint file")->required();
  sample_cmd->add_option("--state", sample_args.state, "Clamped leading visible values")->expected(0, -1);
  sample_cmd->add_option("--count", sample_args.count, "Number of samples");
  sample_cmd->add_option("--sweeps", sample_args.sweeps, "Gibbs sweeps per sample");
  sample_cmd->add_option("--histogram", sample_args.bins, "Append a histogram summary with this many bins");

  GradcheckArgs grad_args;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  grad_cmd->add_option("--trials", grad_args.trials, "Random (model, v) draws");
  grad_cmd->add_option("--tolerance", grad_args.tolerance, "Largest accepted scaled error");
  grad_cmd->add_option("--step", grad_args.step, "Central-difference step");
  grad_cmd->add_option("--set", grad_args.overrides, "Override a config key: section.key=value");

  std::string metrics_path;
  auto* plot_cmd = app.add_subcommand("plot", "Render a learning curve SVG from metrics");
  plot_cmd->add_option("--metrics", metrics_path, "Metrics file (JSONL)")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (seed_opt->count() > 0) g.seed = seed_value;

  try {
    if (train_cmd->parsed()) return cmd_train(g, train_args, out);
    if (eval_cmd->parsed()) return cmd_eval(g, eval_args, out);
    if (sample_cmd->parsed()) return cmd_sample(g, sample_args, out);
    if (grad_cmd->parsed()) return cmd_gradcheck(g, grad_args, out, err);
    if (plot_cmd->parsed()) return cmd_plot(g, metrics_path, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kExitTolerance;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace csqbm
