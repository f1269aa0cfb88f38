#include "csqbm/envs.hpp"

#include <algorithm>
#include <cmath>

#include "csqbm/errors.hpp"

namespace csqbm {

void EnvSpec::validate() const {
  if (state_dim == 0 || action_dim == 0) throw InvalidArgument("environment dims must be positive");
  if (action_bounds.size() != action_dim) {
    throw InvalidArgument("need one action bound per action dimension");
  }
  for (const auto& b : action_bounds) {
    if (!std::isfinite(b.lower) || !std::isfinite(b.upper) || !(b.lower < b.upper)) {
      throw InvalidArgument("action bounds must be finite with lower < upper");
    }
  }
  if (horizon == 0) throw InvalidArgument("horizon must be positive");
}

RealVector Environment::reset(Rng& rng) {
  state_ = initial_state(rng);
  t_ = 0;
  active_ = true;
  return state_;
}

RealVector Environment::clip(const RealVector& a) const {
  const auto& bounds = spec().action_bounds;
  RealVector out = a;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const auto& b = bounds[static_cast<std::size_t>(i)];
    out(i) = std::clamp(a(i), b.lower, b.upper);
  }
  return out;
}

StepResult Environment::step(const RealVector& a) {
  if (!active_) throw EnvError("step called on a finished or unstarted episode; call reset first");
  if (static_cast<std::size_t>(a.size()) != spec().action_dim) {
    throw InvalidArgument("action has " + std::to_string(a.size()) + " entries, expected " +
                          std::to_string(spec().action_dim));
  }
  if (!a.allFinite()) throw InvalidArgument("action has non-finite entries");
  const RealVector clipped = clip(a);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (clipped(i) != a(i)) ++clip_count_;
  }
  StepResult res = transition(state_, clipped, noise_rng_);
  ++t_;
  if (t_ >= spec().horizon) res.done = true;
  state_ = res.s_next;
  active_ = !res.done;
  return res;
}

ContinuousBandit::ContinuousBandit(double slope, double noise_sigma, double action_limit,
                                   std::uint64_t noise_seed)
    : Environment(noise_seed), slope_(slope), noise_sigma_(noise_sigma) {
  if (!(noise_sigma >= 0.0)) throw InvalidArgument("noise_sigma must be non-negative");
  spec_ = EnvSpec{1, 1, {ActionBound{-action_limit, action_limit}}, 1};
  spec_.validate();
}

double ContinuousBandit::min_return() const {
  const double worst = spec_.action_bounds[0].upper + std::abs(slope_);
  return -worst * worst;
}

RealVector ContinuousBandit::initial_state(Rng& rng) {
  return RealVector::Constant(1, 2.0 * uniform01(rng) - 1.0);
}

StepResult ContinuousBandit::transition(const RealVector& s, const RealVector& a, Rng& noise) {
  const double err = a(0) - slope_ * s(0);
  double r = -err * err;
  if (noise_sigma_ > 0.0) r += noise_sigma_ * standard_normal(noise);
  return StepResult{s, r, true};
}

SteerLine::SteerLine(std::size_t n_segments, double kick_gain, double noise_sigma,
                     std::size_t horizon, double action_limit, double done_threshold,
                     std::uint64_t noise_seed)
    : Environment(noise_seed), noise_sigma_(noise_sigma), done_threshold_(done_threshold) {
  if (n_segments == 0) throw InvalidArgument("SteerLine needs at least one segment");
  if (kick_gain == 0.0 || !std::isfinite(kick_gain)) {
    throw InvalidArgument("kick_gain must be finite and nonzero");
  }
  if (!(noise_sigma >= 0.0)) throw InvalidArgument("noise_sigma must be non-negative");
  spec_ = EnvSpec{n_segments, n_segments,
                  std::vector<ActionBound>(n_segments, ActionBound{-action_limit, action_limit}),
                  horizon};
  spec_.validate();
  const auto n = static_cast<Eigen::Index>(n_segments);
  response_ = RealMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) response_(i, j) = kick_gain;
  }
}

double SteerLine::min_return() const {
  // |s_t|_inf <= 1 + t * n * |gain| * limit, so each step costs at most
  // n * (that bound)^2.
  const auto n = static_cast<double>(spec_.state_dim);
  const double limit = spec_.action_bounds[0].upper;
  const double gain = std::abs(response_(0, 0));
  double total = 0.0;
  for (std::size_t t = 1; t <= spec_.horizon; ++t) {
    const double bound = 1.0 + static_cast<double>(t) * n * gain * limit;
    total += n * bound * bound;
  }
  return -total;
}

RealVector SteerLine::exact_correction(const RealVector& s) const {
  return -response_.triangularView<Eigen::Lower>().solve(s);
}

RealVector SteerLine::initial_state(Rng& rng) {
  RealVector s(static_cast<Eigen::Index>(spec_.state_dim));
  for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = 2.0 * uniform01(rng) - 1.0;
  return s;
}

StepResult SteerLine::transition(const RealVector& s, const RealVector& a, Rng& noise) {
  RealVector next = s + response_ * a;
  if (noise_sigma_ > 0.0) {
    for (Eigen::Index i = 0; i < next.size(); ++i) next(i) += noise_sigma_ * standard_normal(noise);
  }
  const double r = -next.squaredNorm();
  return StepResult{next, r, next.norm() < done_threshold_};
}

}  // namespace csqbm
