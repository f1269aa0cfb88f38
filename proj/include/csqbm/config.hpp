#pragma once

// Experiment configuration: YAML on disk, versioned, strict about keys.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "csqbm/agent.hpp"
#include "csqbm/envs.hpp"
#include "csqbm/model.hpp"

namespace csqbm {

inline constexpr int kConfigVersion = 1;

struct HiddenTermConfig {
  double coefficient = 0.0;
  std::vector<std::size_t> qubits;
  std::string paulis;

  bool operator==(const HiddenTermConfig&) const = default;
};

/// Random hidden Hamiltonian: one field per qubit and/or one coupling per
/// qubit pair, all in the coupling basis, coefficients ~ U[-scale, scale].
struct HiddenRandomConfig {
  bool fields = true;
  bool pairs = false;
  double scale = 0.1;

  bool operator==(const HiddenRandomConfig&) const = default;
};

struct ModelConfig {
  std::size_t n = 2;
  std::size_t m = 2;
  std::string family = "gaussian";
  char coupling_basis = 'Z';
  double beta = 1.0;
  std::vector<double> prior_mu{0.0, 0.0};
  std::vector<double> prior_sigma{1.0, 1.0};
  /// Coupling entries start ~ U[-w_init_scale, w_init_scale].
  double w_init_scale = 0.5;
  /// Explicit terms win when non-empty; otherwise `hidden_random` is used.
  std::vector<HiddenTermConfig> hidden_terms;
  HiddenRandomConfig hidden_random;
  bool strict_sampler = true;
  bool quadratic_coupling = false;
  bool theta_trainable = false;
  bool offset_trainable = false;

  bool operator==(const ModelConfig&) const = default;
};

struct ScheduleConfig {
  double start = 1.0;
  double end = 1.0;
  std::size_t episodes = 0;

  bool operator==(const ScheduleConfig&) const = default;
};

struct AgentSection {
  double alpha = 0.05;
  double gamma = 0.9;
  std::size_t sweeps = 20;
  std::size_t candidates = 8;
  std::string explore_mode = "gibbs";
  ScheduleConfig epsilon{1.0, 0.05, 500};
  ScheduleConfig explore_beta{1.0, 1.0, 0};
  std::size_t batch_size = 16;
  std::size_t replay_capacity = 10000;
  std::size_t warmup = 32;
  std::size_t target_sync = 200;
  double divergence_ceiling = 1e6;
  std::size_t divergence_patience = 100;

  bool operator==(const AgentSection&) const = default;
};

struct EnvConfig {
  std::string name = "bandit";
  // bandit
  double slope = 0.5;
  // steerline
  std::size_t n_segments = 1;
  double kick_gain = 1.0;
  std::size_t horizon = 10;
  double done_threshold = 0.05;
  // shared
  double noise_sigma = 0.0;
  double action_limit = 2.0;

  bool operator==(const EnvConfig&) const = default;
};

struct RunConfig {
  std::size_t episodes = 100;
  /// Episodes between greedy evaluations printed during training; 0 disables.
  std::size_t eval_interval = 0;
  std::size_t eval_episodes = 100;
  std::string out_dir = "runs/default";
  std::uint64_t root_seed = 0;
  /// Environment steps between checkpoints; 0 keeps only the final one.
  std::size_t checkpoint_interval = 100;
  bool record_wall_time = false;

  bool operator==(const RunConfig&) const = default;
};

struct ExperimentConfig {
  int version = kConfigVersion;
  ModelConfig model;
  AgentSection agent;
  EnvConfig env;
  RunConfig run;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses and validates. `source` names the document in error messages.
/// `overrides` are "dotted.key=value" strings applied before validation; the
/// value is parsed as YAML. Throws ConfigError with "source:line:" prefixes.
ExperimentConfig parse_config(const std::string& text, const std::string& source,
                              const std::vector<std::string>& overrides = {});

/// Throws IoError when the file cannot be read.
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {});

/// Every field written explicitly; doubles round-trip exactly.
std::string config_to_yaml(const ExperimentConfig& config);

/// Cross-field checks (dims against the environment, prior lengths, ...).
void validate_config(const ExperimentConfig& config);

AgentConfig make_agent_config(const AgentSection& section);

/// Prior, hidden terms and coupling from the config; random parts drawn
/// from Stream::kInit of `root_seed`.
CsqbmModel build_model(const ModelConfig& config, std::uint64_t root_seed);

/// Environment whose noise generator is seeded from `root_seed`. `worker`
/// separates independent instances (training uses 0, evaluation 1).
std::unique_ptr<Environment> build_env(const EnvConfig& config, std::uint64_t root_seed,
                                       std::uint32_t worker = 0);

}  // namespace csqbm
