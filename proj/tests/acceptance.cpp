// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "checks.hpp"
#include "csqbm/agent.hpp"
#include "csqbm/checkpoint.hpp"
#include "csqbm/cli.hpp"
#include "csqbm/config.hpp"
#include "csqbm/discrete_sqbm.hpp"
#include "csqbm/metrics.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace csqbm;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kIdentityTol = 1e-10;
constexpr int kIdentityModels = 200;
constexpr double kIdentitySeconds = 10;

constexpr int kGradientCases = 100;
constexpr double kGradientStep = 1e-5;
constexpr double kGradientRel = 1e-6;
constexpr double kGradientAbs = 1e-8;
constexpr double kGradientSeconds = 30;

constexpr int kDiscreteModels = 50;
constexpr std::size_t kDiscreteMaxQubits = 6;
constexpr double kDiscreteTol = 1e-10;
constexpr double kDiscreteSeconds = 10;

constexpr int kConditionalModels = 24;
constexpr std::size_t kConditionalGrid = 4001;
constexpr double kConditionalTol = 1e-8;
constexpr double kConditionalSeconds = 20;

constexpr std::size_t kGibbsSamples = 50000;
constexpr std::size_t kGibbsSweeps = 20;
constexpr std::size_t kGibbsBins = 64;
constexpr double kGibbsTv = 0.05;
constexpr double kGibbsSeconds = 60;

constexpr std::size_t kSharpenSamples = 20000;
constexpr double kSharpenZ = 2.326;  // one-sided 0.01
constexpr double kSharpenSeconds = 60;

constexpr double kBanditFloor = -0.05;
constexpr double kSteerGapFraction = 0.5;
constexpr std::size_t kSteerEvalEpisodes = 500;
constexpr double kLearningSeconds = 600;

const fs::path kConfigs = fs::path(CSQBM_SOURCE_DIR) / "configs";

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs <= budget_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("%s [%d] %s: %s; %.1fs (budget %.0fs)%s\n", pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(),
              secs, budget_s, in_time ? "" : " OVER BUDGET");
  std::fflush(stdout);
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "csqbm_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

/// Trains through the CLI into `dir`; throws on a nonzero exit.
void cli_train(const std::string& config, std::uint64_t seed, const fs::path& dir) {
  std::ostringstream out, err;
  const int code = run_cli({"--config", (kConfigs / config).string(), "--seed", std::to_string(seed), "--out",
                            dir.string(), "--quiet", "train", "--force"},
                           out, err);
  if (code != 0) throw std::runtime_error(config + " seed " + std::to_string(seed) + ": exit " + std::to_string(code) + " " + err.str());
}

double last_mean(const fs::path& metrics, std::size_t k) {
  const MetricsFile f = read_metrics(metrics);
  const std::size_t n = std::min(k, f.records.size());
  double s = 0.0;
  for (std::size_t i = f.records.size() - n; i < f.records.size(); ++i) s += f.records[i].ret;
  return s / static_cast<double>(n);
}

/// Greedy policy of the trained model against zero action and exact
/// correction, all on the same initial states.
struct SteerScores {
  double model = 0.0, zero = 0.0, exact = 0.0;
  double fraction() const { return (model - zero) / (exact - zero); }
};

SteerScores steer_scores(const fs::path& run, std::uint64_t seed) {
  const ExperimentConfig cfg = load_config(run / "resolved_config.yaml");
  const Checkpoint ckpt = load_checkpoint(run / "checkpoints" / "final.json");
  AgentConfig agent = make_agent_config(cfg.agent);
  auto env = build_env(cfg.env, seed, 1);
  agent.action_bounds = env->spec().action_bounds;
  const auto* steer = dynamic_cast<const SteerLine*>(env.get());
  if (steer == nullptr) throw std::runtime_error("steerline config does not build a SteerLine");

  Rng policy_rng = split_rng(seed, Stream::kEvaluation, 1);
  const Policy greedy = [&](const RealVector& s, Rng&) { return select_action(ckpt.model, s, agent, policy_rng).action; };
  const Policy zero = [](const RealVector& s, Rng&) { return RealVector::Zero(s.size()).eval(); };
  const Policy exact = [steer](const RealVector& s, Rng&) { return steer->exact_correction(s); };
  SteerScores out;
  Rng r1 = split_rng(seed, Stream::kEvaluation), r2 = r1, r3 = r1;
  out.model = evaluate_policy(*env, greedy, kSteerEvalEpisodes, r1).mean_return;
  out.zero = evaluate_policy(*env, zero, kSteerEvalEpisodes, r2).mean_return;
  out.exact = evaluate_policy(*env, exact, kSteerEvalEpisodes, r3).mean_return;
  return out;
}

}  // namespace

int main() {
  report(1, "free energy decomposition vs dense evaluation", kIdentitySeconds, [] {
    Rng rng(101);
    double worst = 0.0;
    for (int k = 0; k < kIdentityModels; ++k) {
      const CsqbmModel model = gen::model(rng);
      worst = std::max(worst, checks::decomposition_error(model, gen::visible(rng, model.num_visible())));
    }
    return Outcome{worst <= kIdentityTol, std::to_string(kIdentityModels) + " models, max |dF| " +
                                              fmt("%.2e", worst) + " <= " + fmt("%.0e", kIdentityTol)};
  });

  report(2, "analytic gradients vs central differences", kGradientSeconds, [] {
    Rng rng(102);
    double worst = -INFINITY;
    std::string where;
    std::size_t components = 0;
    for (int k = 0; k < kGradientCases; ++k) {
      CsqbmModel model = gen::model(rng);
      model.theta_trainable = k % 2 == 0;
      model.offset_trainable = k % 4 == 0;
      const checks::GradientCheck c = checks::gradient_check(model, gen::visible(rng, model.num_visible()),
                                                             kGradientStep, kGradientRel, kGradientAbs);
      components += c.components;
      if (c.worst_excess > worst) worst = c.worst_excess, where = c.worst;
    }
    return Outcome{worst <= 0.0, std::to_string(kGradientCases) + " cases, " + std::to_string(components) +
                                     " components within rel " + fmt("%.0e", kGradientRel) + " or abs " +
                                     fmt("%.0e", kGradientAbs) + (worst > 0.0 ? "; worst " + where : "")};
  });

  report(3, "clamped discrete model vs projection oracle", kDiscreteSeconds, [] {
    Rng rng(103);
    double worst = 0.0;
    for (int k = 0; k < kDiscreteModels; ++k) {
      const std::size_t n = gen::index(rng, 1, 3);
      const std::size_t m = gen::index(rng, 0, kDiscreteMaxQubits - n);
      const DiscreteSqbmModel model = gen::discrete_model(rng, n, m);
      const SpinVector v = gen::spins(rng, n);
      const oracle::DiscreteOracle o = oracle::discrete(model, v);
      worst = std::max(worst, std::abs(discrete_free_energy(model, v) - o.free_energy));
      const RealVector g = discrete_grad_free_energy(model, v);
      for (std::size_t t = 0; t < o.grad.size(); ++t) {
        worst = std::max(worst, std::abs(g(static_cast<Eigen::Index>(t)) - o.grad[t]));
      }
    }
    return Outcome{worst <= kDiscreteTol, std::to_string(kDiscreteModels) + " models, max error " + fmt("%.2e", worst) +
                                              " <= " + fmt("%.0e", kDiscreteTol)};
  });

  report(4, "closed-form visible conditional vs brute force", kConditionalSeconds, [] {
    Rng rng(104);
    gen::ModelOptions o;
    o.max_n = 1;
    o.max_m = 3;
    o.diagonal_hidden = true;
    o.random_basis = false;
    double worst = 0.0;
    for (int k = 0; k < kConditionalModels; ++k) {
      worst = std::max(worst, checks::conditional_density_error(gen::model(rng, o), kConditionalGrid));
    }
    return Outcome{worst <= kConditionalTol, std::to_string(kConditionalModels) + " models, " +
                                                 std::to_string(kConditionalGrid) + " points, max density error " +
                                                 fmt("%.2e", worst) + " <= " + fmt("%.0e", kConditionalTol)};
  });

  report(5, "Gibbs sampler vs exact marginal", kGibbsSeconds, [] {
    Rng rng(105);
    const double tv = checks::gibbs_tv(checks::reference_model(), checks::kReferenceState, kGibbsSweeps,
                                       kGibbsSamples, kGibbsBins, rng);
    return Outcome{tv <= kGibbsTv, std::to_string(kGibbsSamples) + " samples, " + std::to_string(kGibbsSweeps) +
                                       " sweeps, TV " + fmt("%.4f", tv) + " <= " + fmt("%.2f", kGibbsTv)};
  });

  report(6, "mean Q non-decreasing in beta", kSharpenSeconds, [] {
    const CsqbmModel model = checks::reference_model();
    const double betas[] = {0.5, 1.0, 2.0, 5.0};
    bool ok = true;
    std::string detail;
    for (int k = 0; k + 1 < 4; ++k) {
      const checks::PairedResult r = checks::paired_q_difference(
          model, checks::kReferenceState, betas[k], betas[k + 1], kSharpenSamples, kGibbsSweeps,
          1000000ull * static_cast<std::uint64_t>(k + 1));
      ok = ok && r.z >= -kSharpenZ;
      detail += (k ? ", " : "") + fmt("%g", betas[k]) + "->" + fmt("%g", betas[k + 1]) + " dQ " +
                fmt("%+.4f", r.mean_diff) + " (z " + fmt("%.1f", r.z) + ")";
    }
    return Outcome{ok, detail + "; reject if z < -" + fmt("%.3f", kSharpenZ)};
  });

  const fs::path dir = scratch();
  report(7, "end-to-end learning", kLearningSeconds, [&] {
    bool ok = true;
    std::string detail = "bandit last-100";
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const fs::path run = dir / ("bandit_" + std::to_string(seed));
      cli_train("bandit.yaml", seed, run);
      const double tail = last_mean(run / "metrics.jsonl", 100);
      ok = ok && tail >= kBanditFloor;
      detail += " " + fmt("%.3f", tail);
    }
    detail += " (>= " + fmt("%.2f", kBanditFloor) + "); steerline gap fraction";
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const fs::path run = dir / ("steer_" + std::to_string(seed));
      cli_train("steerline.yaml", seed, run);
      const SteerScores s = steer_scores(run, seed);
      ok = ok && s.fraction() >= kSteerGapFraction;
      detail += " " + fmt("%.2f", s.fraction());
    }
    return Outcome{ok, detail + " (>= " + fmt("%.2f", kSteerGapFraction) + ")"};
  });

  report(8, "training determinism", kLearningSeconds, [&] {
    bool ok = true;
    std::string detail;
    for (const std::string name : {"bandit", "steer"}) {
      const fs::path first = dir / (name + "_1");
      const fs::path again = dir / (name + "_1_again");
      cli_train(name == "bandit" ? "bandit.yaml" : "steerline.yaml", 1, again);
      const bool same_metrics = !slurp(first / "metrics.jsonl").empty() &&
                                slurp(first / "metrics.jsonl") == slurp(again / "metrics.jsonl");
      const bool same_manifest = slurp(first / "manifest.json") == slurp(again / "manifest.json");
      ok = ok && same_metrics && same_manifest;
      detail += (detail.empty() ? "" : ", ") + name + ": metrics " + (same_metrics ? "identical" : "DIFFER") +
                ", checkpoint hashes " + (same_manifest ? "identical" : "DIFFER");
    }
    return Outcome{ok, detail};
  });
  fs::remove_all(dir);

  std::printf("%s: %d of 8 criteria failed\n", failures ? "FAILED" : "OK", failures);
  return failures ? 1 : 0;
}
