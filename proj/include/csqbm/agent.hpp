#pragma once

// Free-energy Q-learning with Q(s, a) = -F(s, a).
//
// The inner maximisation over actions is replaced by sampling: K candidate
// actions are drawn from p(a | s) with the alternating Gibbs sampler and the
// one with the largest Q is kept.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "csqbm/checkpoint.hpp"
#include "csqbm/envs.hpp"
#include "csqbm/model.hpp"
#include "csqbm/random.hpp"

namespace csqbm {

struct Transition {
  RealVector s;
  RealVector a;
  double r = 0.0;
  RealVector s_next;
  bool done = false;
};

/// Fixed-capacity ring buffer with uniform sampling (with replacement).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }
  const Transition& operator[](std::size_t i) const { return items_[i]; }

  std::vector<Transition> sample(std::size_t batch, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> items_;
};

enum class ExploreMode { Gibbs, EpsilonGreedy };

const char* explore_mode_name(ExploreMode mode);
ExploreMode parse_explore_mode(const std::string& name);

/// Linear interpolation from `start` to `end` over `episodes`, constant after.
/// With episodes == 0 the schedule stays at `start`.
struct LinearSchedule {
  double start = 1.0;
  double end = 1.0;
  std::size_t episodes = 0;

  double at(std::size_t episode) const;
};

struct AgentConfig {
  double alpha = 0.05;
  double gamma = 0.9;
  std::size_t sweeps = 20;
  std::size_t candidates = 8;
  ExploreMode explore_mode = ExploreMode::Gibbs;
  LinearSchedule epsilon{1.0, 0.05, 500};
  /// Inverse temperature of the exploration sampler in Gibbs mode.
  LinearSchedule explore_beta{1.0, 1.0, 0};
  std::size_t batch_size = 16;
  std::size_t replay_capacity = 10000;
  std::size_t warmup = 32;
  std::size_t target_sync = 200;
  double divergence_ceiling = 1e6;
  std::size_t divergence_patience = 100;
  /// Candidates are clipped to these bounds before scoring; empty = no clipping.
  std::vector<ActionBound> action_bounds;

  void validate() const;
};

/// Exploration setting for one episode.
struct ExplorationParams {
  double epsilon = 0.0;
  double beta = 1.0;
};

ExplorationParams exploration_at(const AgentConfig& config, std::size_t episode);

struct ActionChoice {
  RealVector action;
  double q = 0.0;
  std::vector<RealVector> candidates;
  std::vector<double> candidate_q;
};

/// Best of config.candidates posterior samples with the state clamped.
ActionChoice select_action(const CsqbmModel& model, const RealVector& s, const AgentConfig& config,
                           Rng& rng);

/// Gibbs mode: one posterior sample at the exploration temperature.
/// Epsilon mode: a prior draw with probability epsilon, else select_action.
RealVector explore_action(const CsqbmModel& model, const RealVector& s, const AgentConfig& config,
                          const ExplorationParams& params, Rng& rng);

struct TdTerm {
  double residual = 0.0;  ///< F(s,a) + r - gamma * F_target(s', a*)
  RealVector direction;   ///< residual * dF/dw
};

/// Residual and update direction of one transition. The bootstrap term is
/// skipped (and `rng` untouched) when gamma == 0 or the transition is terminal.
TdTerm td_term(const CsqbmModel& model, const Transition& t, const CsqbmModel& target,
               const AgentConfig& config, Rng& rng);

struct TdUpdate {
  CsqbmModel model;
  double mean_abs_td = 0.0;
  double grad_norm = 0.0;
};

/// w <- w - alpha * mean_batch(residual * dF/dw). Throws NumericalError on a
/// non-finite residual and InvalidArgument on an empty batch or mismatched
/// target.
TdUpdate td_update(const CsqbmModel& model, const std::vector<Transition>& batch,
                   const CsqbmModel& target, const AgentConfig& config, Rng& rng);

struct EpisodeRecord {
  std::size_t episode = 0;
  std::size_t steps = 0;
  double ret = 0.0;
  double mean_abs_td = 0.0;
  double grad_norm = 0.0;
  double epsilon_or_beta = 0.0;
  double wall_ms = 0.0;
};

struct TrainOptions {
  std::size_t episodes = 0;
  std::uint64_t root_seed = 0;
  /// Steps between checkpoint hashes / on_checkpoint calls; 0 disables.
  std::size_t checkpoint_interval = 100;
  /// When false, wall_ms is written as 0 so metrics are reproducible.
  bool record_wall_time = false;
  std::function<void(const EpisodeRecord&, const CsqbmModel&)> on_episode;
  /// Receives exactly the checkpoint whose hash is logged.
  std::function<void(std::size_t step, const Checkpoint&)> on_checkpoint;
};

struct TrainingLog {
  std::vector<EpisodeRecord> episodes;
  std::vector<std::string> checkpoint_hashes;
  std::size_t total_steps = 0;
  std::size_t updates = 0;
};

struct TrainResult {
  CsqbmModel model;
  TrainingLog log;
};

/// Runs the Q-learning loop. Generators are split from options.root_seed
/// (Stream::kEnvironment for resets, kExploration for action sampling and
/// bootstrap, kReplay for minibatches). Throws DivergenceError when mean |td|
/// exceeds the ceiling for divergence_patience consecutive updates.
TrainResult train(Environment& env, CsqbmModel model, AgentConfig config,
                  const TrainOptions& options);

struct EpisodeTrace {
  std::vector<RealVector> states;
  std::vector<RealVector> actions;
  std::vector<double> rewards;
};

struct EvalSummary {
  double mean_return = 0.0;
  double std_return = 0.0;
  std::vector<double> returns;
  std::vector<EpisodeTrace> traces;
};

using Policy = std::function<RealVector(const RealVector& s, Rng& rng)>;

EvalSummary evaluate_policy(Environment& env, const Policy& policy, std::size_t episodes, Rng& rng);

/// Greedy rollouts with select_action; never modifies the model.
EvalSummary evaluate(const CsqbmModel& model, Environment& env, const AgentConfig& config,
                     std::size_t episodes, Rng& rng);

}  // namespace csqbm
