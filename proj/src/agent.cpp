#include "csqbm/agent.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "csqbm/checkpoint.hpp"
#include "csqbm/errors.hpp"

namespace csqbm {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw InvalidArgument("replay capacity must be positive");
  items_.reserve(std::min<std::size_t>(capacity, 4096));
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
  if (items_.empty()) throw InvalidArgument("cannot sample from an empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  std::vector<Transition> out;
  out.reserve(batch);
  for (std::size_t k = 0; k < batch; ++k) out.push_back(items_[pick(rng)]);
  return out;
}

const char* explore_mode_name(ExploreMode mode) {
  return mode == ExploreMode::Gibbs ? "gibbs" : "epsilon_greedy";
}

ExploreMode parse_explore_mode(const std::string& name) {
  if (name == "gibbs") return ExploreMode::Gibbs;
  if (name == "epsilon_greedy") return ExploreMode::EpsilonGreedy;
  throw InvalidArgument("unknown explore mode '" + name + "' (expected gibbs or epsilon_greedy)");
}

double LinearSchedule::at(std::size_t episode) const {
  if (episodes == 0 || episode >= episodes) return episodes == 0 ? start : end;
  const double frac = static_cast<double>(episode) / static_cast<double>(episodes);
  return start + frac * (end - start);
}

void AgentConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be >= 0");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidArgument("gamma must lie in [0, 1)");
  if (sweeps == 0) throw InvalidArgument("sweeps must be positive");
  if (candidates == 0) throw InvalidArgument("candidates (K) must be positive");
  if (batch_size == 0) throw InvalidArgument("batch_size must be positive");
  if (replay_capacity == 0) throw InvalidArgument("replay_capacity must be positive");
  for (double e : {epsilon.start, epsilon.end}) {
    if (!(e >= 0.0 && e <= 1.0)) throw InvalidArgument("epsilon must lie in [0, 1]");
  }
  for (double b : {explore_beta.start, explore_beta.end}) {
    if (!(b > 0.0) || !std::isfinite(b)) throw InvalidArgument("explore_beta must be positive");
  }
  if (!(divergence_ceiling > 0.0)) throw InvalidArgument("divergence_ceiling must be positive");
  if (divergence_patience == 0) throw InvalidArgument("divergence_patience must be positive");
}

ExplorationParams exploration_at(const AgentConfig& config, std::size_t episode) {
  return ExplorationParams{config.epsilon.at(episode), config.explore_beta.at(episode)};
}

namespace {

RealVector clip_to(const RealVector& a, const std::vector<ActionBound>& bounds) {
  if (bounds.empty()) return a;
  RealVector out = a;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const auto& b = bounds[static_cast<std::size_t>(i)];
    out(i) = std::clamp(a(i), b.lower, b.upper);
  }
  return out;
}

void check_state(const CsqbmModel& model, const RealVector& s) {
  if (s.size() <= 0 || static_cast<std::size_t>(s.size()) >= model.num_visible()) {
    throw InvalidArgument("state has " + std::to_string(s.size()) +
                          " entries; the model has " + std::to_string(model.num_visible()) +
                          " visible units and needs at least one action coordinate");
  }
}

}  // namespace

ActionChoice select_action(const CsqbmModel& model, const RealVector& s, const AgentConfig& config,
                           Rng& rng) {
  check_state(model, s);
  const VisibleClamp clamp = VisibleClamp::leading(s);
  ActionChoice choice;
  choice.q = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < config.candidates; ++k) {
    RealVector a = clip_to(gibbs_sample_action(model, clamp, config.sweeps, rng),
                           config.action_bounds);
    const double q = q_value(model, s, a);
    if (k == 0 || q > choice.q) {
      choice.q = q;
      choice.action = a;
    }
    choice.candidates.push_back(std::move(a));
    choice.candidate_q.push_back(q);
  }
  return choice;
}

RealVector explore_action(const CsqbmModel& model, const RealVector& s, const AgentConfig& config,
                          const ExplorationParams& params, Rng& rng) {
  check_state(model, s);
  if (config.explore_mode == ExploreMode::Gibbs) {
    CsqbmModel tempered = model;
    tempered.beta = params.beta;
    return clip_to(gibbs_sample_action(tempered, VisibleClamp::leading(s), config.sweeps, rng),
                   config.action_bounds);
  }
  // The coin is only flipped for 0 < epsilon < 1 so the extremes consume no
  // extra randomness.
  const bool explore = params.epsilon >= 1.0 || (params.epsilon > 0.0 && uniform01(rng) < params.epsilon);
  if (explore) {
    const RealVector v = model.prior.sample(rng);
    return clip_to(v.tail(v.size() - s.size()), config.action_bounds);
  }
  return select_action(model, s, config, rng).action;
}

TdTerm td_term(const CsqbmModel& model, const Transition& t, const CsqbmModel& target,
               const AgentConfig& config, Rng& rng) {
  if (!std::isfinite(t.r)) throw NumericalError("transition reward is not finite");
  const RealVector v = concat(t.s, t.a);
  const FreeEnergyReport fe = free_energy(model, v);
  double residual = fe.f + t.r;
  if (config.gamma != 0.0 && !t.done) {
    // min over a' of F_target(s', a') ~ -max Q over sampled candidates.
    const ActionChoice best = select_action(target, t.s_next, config, rng);
    residual -= config.gamma * (-best.q);
  }
  if (!std::isfinite(residual)) throw NumericalError("non-finite TD residual");
  const GradientReport g = grad_free_energy(model, v, fe, GradientTarget::Weights);
  return TdTerm{residual, residual * g.d_weights};
}

TdUpdate td_update(const CsqbmModel& model, const std::vector<Transition>& batch,
                   const CsqbmModel& target, const AgentConfig& config, Rng& rng) {
  if (batch.empty()) throw InvalidArgument("TD update needs a non-empty batch");
  if (target.num_weights() != model.num_weights() ||
      target.num_visible() != model.num_visible() || target.num_hidden() != model.num_hidden()) {
    throw InvalidArgument("target model shape differs from the online model");
  }
  RealVector direction = RealVector::Zero(static_cast<Eigen::Index>(model.num_weights()));
  double abs_td = 0.0;
  for (const auto& t : batch) {
    const TdTerm term = td_term(model, t, target, config, rng);
    direction += term.direction;
    abs_td += std::abs(term.residual);
  }
  const auto count = static_cast<double>(batch.size());
  direction = direction.cwiseProduct(model.trainable_mask()) / count;
  // Gradient descent on the squared TD error: the residual is (F + r - gamma F'),
  // and F = -Q, so lowering the residual along dF needs a minus sign.
  const RealVector w = model.flat_weights() - config.alpha * direction;
  CsqbmModel next = config.alpha == 0.0 ? model : model.with_flat_weights(w);
  return TdUpdate{std::move(next), abs_td / count, direction.norm()};
}

TrainResult train(Environment& env, CsqbmModel model, AgentConfig config,
                  const TrainOptions& options) {
  model.validate();
  config.validate();
  const EnvSpec& spec = env.spec();
  if (model.num_visible() != spec.state_dim + spec.action_dim) {
    throw InvalidArgument("model has " + std::to_string(model.num_visible()) +
                          " visible units, environment needs " +
                          std::to_string(spec.state_dim + spec.action_dim));
  }
  if (config.action_bounds.empty()) config.action_bounds = spec.action_bounds;

  Rng env_rng = split_rng(options.root_seed, Stream::kEnvironment);
  Rng explore_rng = split_rng(options.root_seed, Stream::kExploration);
  Rng replay_rng = split_rng(options.root_seed, Stream::kReplay);

  ReplayBuffer buffer(config.replay_capacity);
  CsqbmModel target = model;
  TrainingLog log;
  std::size_t over_ceiling = 0;
  const std::size_t warmup = std::max<std::size_t>(config.warmup, 1);

  for (std::size_t ep = 0; ep < options.episodes; ++ep) {
    const auto t0 = std::chrono::steady_clock::now();
    const ExplorationParams params = exploration_at(config, ep);
    EpisodeRecord rec;
    rec.episode = ep;
    rec.epsilon_or_beta =
        config.explore_mode == ExploreMode::Gibbs ? params.beta : params.epsilon;
    double td_sum = 0.0;
    double gn_sum = 0.0;
    std::size_t n_updates = 0;

    RealVector s = env.reset(env_rng);
    for (;;) {
      const RealVector a = explore_action(model, s, config, params, explore_rng);
      const StepResult res = env.step(a);
      buffer.push(Transition{s, env.clip(a), res.r, res.s_next, res.done});
      rec.ret += res.r;
      ++rec.steps;
      ++log.total_steps;

      if (buffer.size() >= warmup) {
        const auto batch = buffer.sample(config.batch_size, replay_rng);
        TdUpdate upd = td_update(model, batch, target, config, explore_rng);
        model = std::move(upd.model);
        td_sum += upd.mean_abs_td;
        gn_sum += upd.grad_norm;
        ++n_updates;
        ++log.updates;
        over_ceiling = upd.mean_abs_td > config.divergence_ceiling ? over_ceiling + 1 : 0;
        if (over_ceiling >= config.divergence_patience) {
          throw DivergenceError("training diverged: mean |td| above " +
                                std::to_string(config.divergence_ceiling) + " for " +
                                std::to_string(over_ceiling) + " consecutive updates");
        }
      }
      if (config.target_sync > 0 && log.total_steps % config.target_sync == 0) target = model;
      if (options.checkpoint_interval > 0 && log.total_steps % options.checkpoint_interval == 0) {
        const Checkpoint ckpt{model,
                              "seed=" + std::to_string(options.root_seed) +
                                  "/step=" + std::to_string(log.total_steps),
                              OptimizerState{"sgd", log.updates}};
        log.checkpoint_hashes.push_back(checkpoint_hash(ckpt));
        if (options.on_checkpoint) options.on_checkpoint(log.total_steps, ckpt);
      }
      s = res.s_next;
      if (res.done) break;
    }
    if (n_updates > 0) {
      rec.mean_abs_td = td_sum / static_cast<double>(n_updates);
      rec.grad_norm = gn_sum / static_cast<double>(n_updates);
    }
    if (options.record_wall_time) {
      rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                        .count();
    }
    log.episodes.push_back(rec);
    if (options.on_episode) options.on_episode(rec, model);
  }
  return TrainResult{std::move(model), std::move(log)};
}

EvalSummary evaluate_policy(Environment& env, const Policy& policy, std::size_t episodes,
                            Rng& rng) {
  if (episodes == 0) throw InvalidArgument("evaluation needs at least one episode");
  EvalSummary out;
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    EpisodeTrace trace;
    double ret = 0.0;
    RealVector s = env.reset(rng);
    for (;;) {
      const RealVector a = env.clip(policy(s, rng));
      const StepResult res = env.step(a);
      trace.states.push_back(s);
      trace.actions.push_back(a);
      trace.rewards.push_back(res.r);
      ret += res.r;
      s = res.s_next;
      if (res.done) break;
    }
    out.returns.push_back(ret);
    out.traces.push_back(std::move(trace));
  }
  const auto n = static_cast<double>(episodes);
  double sum = 0.0;
  for (double r : out.returns) sum += r;
  out.mean_return = sum / n;
  double var = 0.0;
  for (double r : out.returns) var += (r - out.mean_return) * (r - out.mean_return);
  out.std_return = episodes > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
  return out;
}

EvalSummary evaluate(const CsqbmModel& model, Environment& env, const AgentConfig& config,
                     std::size_t episodes, Rng& rng) {
  AgentConfig cfg = config;
  if (cfg.action_bounds.empty()) cfg.action_bounds = env.spec().action_bounds;
  const Policy greedy = [&model, &cfg](const RealVector& s, Rng& r) {
    return select_action(model, s, cfg, r).action;
  };
  return evaluate_policy(env, greedy, episodes, rng);
}

}  // namespace csqbm
