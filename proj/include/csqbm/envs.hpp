#pragma once

// Small seedable continuous-control environments.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "csqbm/quantum_core.hpp"
#include "csqbm/random.hpp"

namespace csqbm {

struct ActionBound {
  double lower = -1.0;
  double upper = 1.0;
};

struct EnvSpec {
  std::size_t state_dim = 1;
  std::size_t action_dim = 1;
  std::vector<ActionBound> action_bounds;
  std::size_t horizon = 1;

  void validate() const;
};

struct StepResult {
  RealVector s_next;
  double r = 0.0;
  bool done = false;
};

class Environment {
 public:
  explicit Environment(std::uint64_t noise_seed) : noise_rng_(noise_seed) {}
  virtual ~Environment() = default;

  virtual const EnvSpec& spec() const = 0;
  virtual std::string name() const = 0;

  /// Starts an episode; the initial state is drawn from `rng`.
  RealVector reset(Rng& rng);
  /// Clips `a` to the action bounds and advances. Throws EnvError when called
  /// before reset() or after the episode ended.
  StepResult step(const RealVector& a);

  /// Number of action components clipped since construction.
  std::size_t clip_count() const { return clip_count_; }
  RealVector clip(const RealVector& a) const;

  /// Lower bound on the return of any episode when the noise is zero.
  virtual double min_return() const = 0;

 protected:
  virtual RealVector initial_state(Rng& rng) = 0;
  virtual StepResult transition(const RealVector& s, const RealVector& a, Rng& noise) = 0;

 private:
  Rng noise_rng_;
  RealVector state_;
  std::size_t t_ = 0;
  bool active_ = false;
  std::size_t clip_count_ = 0;
};

/// One-step bandit: s ~ U[-1, 1], r = -(a - slope * s)^2 + noise.
class ContinuousBandit final : public Environment {
 public:
  ContinuousBandit(double slope, double noise_sigma, double action_limit, std::uint64_t noise_seed);

  const EnvSpec& spec() const override { return spec_; }
  std::string name() const override { return "bandit"; }
  double min_return() const override;

  double optimal_action(double s) const { return slope_ * s; }

 protected:
  RealVector initial_state(Rng& rng) override;
  StepResult transition(const RealVector& s, const RealVector& a, Rng& noise) override;

 private:
  EnvSpec spec_;
  double slope_;
  double noise_sigma_;
};

/// Beam-steering toy: offsets at n monitors, one corrector kick per segment.
///
/// s_next = s + G a + noise with G lower-triangular, G_ij = kick_gain for
/// j <= i (a kick deflects every downstream monitor). r = -||s_next||^2; the
/// episode ends when ||s_next|| < done_threshold or at the horizon.
/// Initial offsets are U[-1, 1] per monitor.
class SteerLine final : public Environment {
 public:
  SteerLine(std::size_t n_segments, double kick_gain, double noise_sigma, std::size_t horizon,
            double action_limit, double done_threshold, std::uint64_t noise_seed);

  const EnvSpec& spec() const override { return spec_; }
  std::string name() const override { return "steerline"; }
  double min_return() const override;

  const RealMatrix& response() const { return response_; }
  /// Kicks that cancel `s` exactly: a = -G^{-1} s.
  RealVector exact_correction(const RealVector& s) const;

 protected:
  RealVector initial_state(Rng& rng) override;
  StepResult transition(const RealVector& s, const RealVector& a, Rng& noise) override;

 private:
  EnvSpec spec_;
  RealMatrix response_;
  double noise_sigma_;
  double done_threshold_;
};

}  // namespace csqbm
