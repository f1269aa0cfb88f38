#pragma once

// Exponential-family priors over continuous visible units,
//
//   p(v) = exp(c(v) - A(theta)),   c(v) = theta^T s(v) + log g(v).
//
// Units are independent; each contributes `stats_per_unit()` consecutive
// entries to s(v). Only the Gaussian family ships: unit i contributes
// (v_i, v_i^2) with theta_i = (mu_i / sigma_i^2, -1 / (2 sigma_i^2)).

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "csqbm/quantum_core.hpp"
#include "csqbm/random.hpp"

namespace csqbm {

/// Natural parameters theta, laid out unit by unit.
struct NaturalParams {
  RealVector theta;

  Eigen::Index dim() const { return theta.size(); }
  friend bool operator==(const NaturalParams& a, const NaturalParams& b) {
    return a.theta.size() == b.theta.size() && a.theta == b.theta;
  }
};

class ExponentialFamily {
 public:
  virtual ~ExponentialFamily() = default;

  virtual std::string tag() const = 0;
  virtual std::size_t stats_per_unit() const = 0;

  /// s(v) in the layout (s_1(v_1), s_2(v_2), ...).
  virtual RealVector statistics(const RealVector& v) const = 0;
  /// d s_{unit,k} / d v_unit for each k of the unit's statistics.
  virtual RealVector unit_statistic_derivative(double v_unit) const = 0;
  /// log g(v); the shipped Gaussian uses g = 1.
  virtual double log_base_measure(const RealVector& v) const = 0;

  /// Throws NonNormalizableError naming the first unit whose parameters do not
  /// give a normalizable density.
  virtual void check_integrable(const NaturalParams& params) const = 0;
  /// log of the integral of exp(theta^T s(v)) g(v) over v.
  virtual double log_partition(const NaturalParams& params) const = 0;
  /// Draws unit `unit` from its (independent) marginal.
  virtual double sample_unit(const NaturalParams& params, std::size_t unit, Rng& rng) const = 0;

  /// Statistic indices within a unit whose coupling rows stay zero unless
  /// quadratic coupling is enabled (for the Gaussian: the v^2 entry).
  virtual std::vector<std::size_t> restricted_unit_stats() const = 0;

  std::size_t num_units(const NaturalParams& params) const;
  RealVector sample(const NaturalParams& params, Rng& rng) const;
  /// theta^T s(v) + log g(v) - A(theta)
  double log_density(const NaturalParams& params, const RealVector& v) const;
};

class GaussianFamily final : public ExponentialFamily {
 public:
  std::string tag() const override { return "gaussian"; }
  std::size_t stats_per_unit() const override { return 2; }
  RealVector statistics(const RealVector& v) const override;
  RealVector unit_statistic_derivative(double v_unit) const override;
  double log_base_measure(const RealVector& v) const override;
  void check_integrable(const NaturalParams& params) const override;
  double log_partition(const NaturalParams& params) const override;
  double sample_unit(const NaturalParams& params, std::size_t unit, Rng& rng) const override;
  std::vector<std::size_t> restricted_unit_stats() const override { return {1}; }

  static NaturalParams from_moments(std::span<const double> mu, std::span<const double> sigma);
  /// Per-unit mean and standard deviation; requires integrable parameters.
  static void to_moments(const NaturalParams& params, std::vector<double>& mu,
                         std::vector<double>& sigma);
};

/// Returns the shared family object for `tag`; throws InvalidArgument for an
/// unknown tag.
std::shared_ptr<const ExponentialFamily> family_from_tag(const std::string& tag);

/// theta' = beta * (theta + W h). W is (statistic dim) x (hidden count).
/// Throws NonNormalizableError if a tilted unit is not integrable.
NaturalParams tilt(const ExponentialFamily& family, const NaturalParams& params,
                   const RealMatrix& coupling, const SpinVector& h, double beta);

/// A prior over n visible units. `log_base_offset` adds a constant k to c(v)
/// (g -> e^k g); it changes free energies by -k and nothing else.
class ExpFamilyPrior {
 public:
  ExpFamilyPrior(std::shared_ptr<const ExponentialFamily> family, NaturalParams params,
                 double log_base_offset = 0.0);

  static ExpFamilyPrior gaussian(std::span<const double> mu, std::span<const double> sigma);

  const ExponentialFamily& family() const { return *family_; }
  std::shared_ptr<const ExponentialFamily> family_ptr() const { return family_; }
  const NaturalParams& params() const { return params_; }
  double log_base_offset() const { return log_base_offset_; }
  std::size_t num_units() const { return num_units_; }
  std::size_t stat_dim() const { return static_cast<std::size_t>(params_.dim()); }

  ExpFamilyPrior with_params(NaturalParams params) const;
  ExpFamilyPrior with_log_base_offset(double offset) const;

  /// c(v) = theta^T s(v) + log g(v) + offset
  double c_value(const RealVector& v) const;
  /// dc/dv
  RealVector grad_c_v(const RealVector& v) const;
  /// dc/dtheta = s(v)
  RealVector grad_c_theta(const RealVector& v) const;

  double log_partition() const { return family_->log_partition(params_); }
  double log_density(const RealVector& v) const { return family_->log_density(params_, v); }
  RealVector sample(Rng& rng) const { return family_->sample(params_, rng); }

 private:
  void check_input(const RealVector& v) const;

  std::shared_ptr<const ExponentialFamily> family_;
  NaturalParams params_;
  double log_base_offset_ = 0.0;
  std::size_t num_units_ = 0;
};

}  // namespace csqbm
