#include "csqbm/exp_family.hpp"

#include <cmath>
#include <numbers>

#include "csqbm/errors.hpp"

namespace csqbm {

std::size_t ExponentialFamily::num_units(const NaturalParams& params) const {
  const auto k = stats_per_unit();
  if (params.dim() == 0 || static_cast<std::size_t>(params.dim()) % k != 0) {
    throw InvalidArgument("natural parameter length " + std::to_string(params.dim()) +
                          " is not a positive multiple of " + std::to_string(k));
  }
  return static_cast<std::size_t>(params.dim()) / k;
}

RealVector ExponentialFamily::sample(const NaturalParams& params, Rng& rng) const {
  check_integrable(params);
  const std::size_t n = num_units(params);
  RealVector v(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i)) = sample_unit(params, i, rng);
  return v;
}

double ExponentialFamily::log_density(const NaturalParams& params, const RealVector& v) const {
  if (static_cast<std::size_t>(v.size()) != num_units(params)) {
    throw InvalidArgument("visible vector has " + std::to_string(v.size()) + " entries, expected " +
                          std::to_string(num_units(params)));
  }
  return params.theta.dot(statistics(v)) + log_base_measure(v) - log_partition(params);
}

RealVector GaussianFamily::statistics(const RealVector& v) const {
  RealVector s(2 * v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    s(2 * i) = v(i);
    s(2 * i + 1) = v(i) * v(i);
  }
  return s;
}

RealVector GaussianFamily::unit_statistic_derivative(double v_unit) const {
  return RealVector{{1.0, 2.0 * v_unit}};
}

double GaussianFamily::log_base_measure(const RealVector&) const { return 0.0; }

void GaussianFamily::check_integrable(const NaturalParams& params) const {
  const std::size_t n = num_units(params);
  for (std::size_t i = 0; i < n; ++i) {
    const double t1 = params.theta(static_cast<Eigen::Index>(2 * i));
    const double t2 = params.theta(static_cast<Eigen::Index>(2 * i + 1));
    if (!std::isfinite(t1) || !std::isfinite(t2)) {
      throw NonNormalizableError(i, "unit " + std::to_string(i) +
                                        " has non-finite natural parameters");
    }
    if (!(t2 < 0.0)) {
      throw NonNormalizableError(i, "unit " + std::to_string(i) +
                                        " is not normalizable: quadratic natural parameter " +
                                        std::to_string(t2) + " must be negative");
    }
  }
}

double GaussianFamily::log_partition(const NaturalParams& params) const {
  check_integrable(params);
  const std::size_t n = num_units(params);
  double a = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t1 = params.theta(static_cast<Eigen::Index>(2 * i));
    const double t2 = params.theta(static_cast<Eigen::Index>(2 * i + 1));
    a += -t1 * t1 / (4.0 * t2) + 0.5 * std::log(std::numbers::pi / -t2);
  }
  return a;
}

double GaussianFamily::sample_unit(const NaturalParams& params, std::size_t unit, Rng& rng) const {
  const double t1 = params.theta(static_cast<Eigen::Index>(2 * unit));
  const double t2 = params.theta(static_cast<Eigen::Index>(2 * unit + 1));
  if (!(t2 < 0.0)) {
    throw NonNormalizableError(unit, "cannot sample non-normalizable unit " + std::to_string(unit));
  }
  const double mu = -t1 / (2.0 * t2);
  const double sigma = std::sqrt(-1.0 / (2.0 * t2));
  return mu + sigma * standard_normal(rng);
}

NaturalParams GaussianFamily::from_moments(std::span<const double> mu,
                                           std::span<const double> sigma) {
  if (mu.size() != sigma.size() || mu.empty()) {
    throw InvalidArgument("Gaussian prior needs matching, non-empty mu and sigma lists");
  }
  RealVector theta(static_cast<Eigen::Index>(2 * mu.size()));
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (!std::isfinite(mu[i]) || !(sigma[i] > 0.0) || !std::isfinite(sigma[i])) {
      throw InvalidArgument("Gaussian unit " + std::to_string(i) +
                            " needs finite mu and positive finite sigma");
    }
    const double var = sigma[i] * sigma[i];
    theta(static_cast<Eigen::Index>(2 * i)) = mu[i] / var;
    theta(static_cast<Eigen::Index>(2 * i + 1)) = -1.0 / (2.0 * var);
  }
  return NaturalParams{std::move(theta)};
}

void GaussianFamily::to_moments(const NaturalParams& params, std::vector<double>& mu,
                                std::vector<double>& sigma) {
  GaussianFamily{}.check_integrable(params);
  const auto n = static_cast<std::size_t>(params.dim()) / 2;
  mu.resize(n);
  sigma.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t1 = params.theta(static_cast<Eigen::Index>(2 * i));
    const double t2 = params.theta(static_cast<Eigen::Index>(2 * i + 1));
    mu[i] = -t1 / (2.0 * t2);
    sigma[i] = std::sqrt(-1.0 / (2.0 * t2));
  }
}

std::shared_ptr<const ExponentialFamily> family_from_tag(const std::string& tag) {
  static const auto gaussian = std::make_shared<const GaussianFamily>();
  if (tag == "gaussian") return gaussian;
  throw InvalidArgument("unknown exponential family '" + tag + "'");
}

NaturalParams tilt(const ExponentialFamily& family, const NaturalParams& params,
                   const RealMatrix& coupling, const SpinVector& h, double beta) {
  if (!(beta > 0.0)) throw InvalidArgument("inverse temperature must be positive");
  if (coupling.rows() != params.dim() || static_cast<std::size_t>(coupling.cols()) != h.size()) {
    throw InvalidArgument("coupling matrix is " + std::to_string(coupling.rows()) + "x" +
                          std::to_string(coupling.cols()) + ", expected " +
                          std::to_string(params.dim()) + "x" + std::to_string(h.size()));
  }
  RealVector spins(static_cast<Eigen::Index>(h.size()));
  for (std::size_t j = 0; j < h.size(); ++j) spins(static_cast<Eigen::Index>(j)) = h[j];
  NaturalParams tilted{beta * (params.theta + coupling * spins)};
  family.check_integrable(tilted);
  return tilted;
}

ExpFamilyPrior::ExpFamilyPrior(std::shared_ptr<const ExponentialFamily> family,
                               NaturalParams params, double log_base_offset)
    : family_(std::move(family)), params_(std::move(params)), log_base_offset_(log_base_offset) {
  if (!family_) throw InvalidArgument("prior needs a family");
  if (!std::isfinite(log_base_offset_)) throw InvalidArgument("base-measure offset must be finite");
  num_units_ = family_->num_units(params_);
  family_->check_integrable(params_);
}

ExpFamilyPrior ExpFamilyPrior::gaussian(std::span<const double> mu, std::span<const double> sigma) {
  return ExpFamilyPrior(family_from_tag("gaussian"), GaussianFamily::from_moments(mu, sigma));
}

ExpFamilyPrior ExpFamilyPrior::with_params(NaturalParams params) const {
  return ExpFamilyPrior(family_, std::move(params), log_base_offset_);
}

ExpFamilyPrior ExpFamilyPrior::with_log_base_offset(double offset) const {
  return ExpFamilyPrior(family_, params_, offset);
}

void ExpFamilyPrior::check_input(const RealVector& v) const {
  if (static_cast<std::size_t>(v.size()) != num_units_) {
    throw InvalidArgument("visible vector has " + std::to_string(v.size()) + " entries, expected " +
                          std::to_string(num_units_));
  }
  if (!v.allFinite()) throw InvalidArgument("visible vector has non-finite entries");
}

double ExpFamilyPrior::c_value(const RealVector& v) const {
  check_input(v);
  return params_.theta.dot(family_->statistics(v)) + family_->log_base_measure(v) +
         log_base_offset_;
}

RealVector ExpFamilyPrior::grad_c_v(const RealVector& v) const {
  check_input(v);
  const auto k = static_cast<Eigen::Index>(family_->stats_per_unit());
  RealVector g(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    g(i) = params_.theta.segment(k * i, k).dot(family_->unit_statistic_derivative(v(i)));
  }
  return g;
}

RealVector ExpFamilyPrior::grad_c_theta(const RealVector& v) const {
  check_input(v);
  return family_->statistics(v);
}

}  // namespace csqbm
