#include "csqbm/model.hpp"

#include <algorithm>
#include <cmath>

#include "csqbm/errors.hpp"

namespace csqbm {

const char* weight_group_name(WeightGroup g) {
  switch (g) {
    case WeightGroup::Coupling:
      return "coupling";
    case WeightGroup::Hidden:
      return "hidden";
    case WeightGroup::Theta:
      return "theta";
    case WeightGroup::Offset:
      return "offset";
  }
  return "?";
}

void CsqbmModel::validate() const {
  hidden.validate();
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw InvalidArgument("inverse temperature must be positive and finite");
  }
  if (static_cast<std::size_t>(coupling.rows()) != stat_dim() ||
      static_cast<std::size_t>(coupling.cols()) != num_hidden()) {
    throw InvalidArgument("coupling matrix must be " + std::to_string(stat_dim()) + "x" +
                          std::to_string(num_hidden()) + ", got " +
                          std::to_string(coupling.rows()) + "x" + std::to_string(coupling.cols()));
  }
  if (!coupling.allFinite()) throw InvalidArgument("coupling matrix has non-finite entries");
  if (!quadratic_coupling) {
    const auto k = prior.family().stats_per_unit();
    for (std::size_t unit = 0; unit < num_visible(); ++unit) {
      for (std::size_t r : prior.family().restricted_unit_stats()) {
        const auto row = static_cast<Eigen::Index>(unit * k + r);
        if (coupling.row(row).cwiseAbs().maxCoeff() != 0.0) {
          throw InvalidArgument("coupling row " + std::to_string(row) +
                                " couples a restricted statistic; enable quadratic_coupling");
        }
      }
    }
  }
  if (strict_sampler) {
    for (const auto& t : hidden.terms) {
      if (!t.diagonal_in(coupling_basis)) {
        throw InvalidArgument("hidden term " + t.label() + " is not diagonal in the " +
                              std::string(1, pauli_char(coupling_basis)) +
                              " coupling basis; disable strict_sampler to allow it");
      }
    }
  }
}

std::size_t CsqbmModel::num_weights() const {
  std::size_t count = static_cast<std::size_t>(coupling.size()) + hidden.terms.size();
  if (theta_trainable) count += stat_dim();
  if (offset_trainable) count += 1;
  return count;
}

RealVector CsqbmModel::flat_weights() const {
  RealVector w(static_cast<Eigen::Index>(num_weights()));
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < coupling.rows(); ++i) {
    for (Eigen::Index j = 0; j < coupling.cols(); ++j) w(k++) = coupling(i, j);
  }
  for (const auto& t : hidden.terms) w(k++) = t.coefficient;
  if (theta_trainable) {
    for (Eigen::Index i = 0; i < prior.params().dim(); ++i) w(k++) = prior.params().theta(i);
  }
  if (offset_trainable) w(k++) = prior.log_base_offset();
  return w;
}

RealVector CsqbmModel::trainable_mask() const {
  RealVector mask = RealVector::Ones(static_cast<Eigen::Index>(num_weights()));
  if (quadratic_coupling) return mask;
  const std::size_t k = prior.family().stats_per_unit();
  for (std::size_t unit = 0; unit < num_visible(); ++unit) {
    for (std::size_t r : prior.family().restricted_unit_stats()) {
      const auto row = static_cast<Eigen::Index>(unit * k + r);
      mask.segment(row * coupling.cols(), coupling.cols()).setZero();
    }
  }
  return mask;
}

CsqbmModel CsqbmModel::with_flat_weights(const RealVector& w) const {
  if (static_cast<std::size_t>(w.size()) != num_weights()) {
    throw InvalidArgument("weight vector has " + std::to_string(w.size()) + " entries, expected " +
                          std::to_string(num_weights()));
  }
  CsqbmModel out = *this;
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < coupling.rows(); ++i) {
    for (Eigen::Index j = 0; j < coupling.cols(); ++j) out.coupling(i, j) = w(k++);
  }
  for (auto& t : out.hidden.terms) t.coefficient = w(k++);
  if (theta_trainable) {
    NaturalParams p{w.segment(k, prior.params().dim())};
    k += prior.params().dim();
    out.prior = out.prior.with_params(std::move(p));
  }
  if (offset_trainable) out.prior = out.prior.with_log_base_offset(w(k++));
  return out;
}

WeightGroup CsqbmModel::weight_group(std::size_t index) const {
  std::size_t edge = static_cast<std::size_t>(coupling.size());
  if (index < edge) return WeightGroup::Coupling;
  edge += hidden.terms.size();
  if (index < edge) return WeightGroup::Hidden;
  if (theta_trainable) {
    edge += stat_dim();
    if (index < edge) return WeightGroup::Theta;
  }
  if (offset_trainable && index == edge) return WeightGroup::Offset;
  throw InvalidArgument("weight index " + std::to_string(index) + " out of range");
}

std::string CsqbmModel::weight_label(std::size_t index) const {
  const auto group = weight_group(index);
  switch (group) {
    case WeightGroup::Coupling: {
      const auto cols = static_cast<std::size_t>(coupling.cols());
      return "W[" + std::to_string(index / cols) + "," + std::to_string(index % cols) + "]";
    }
    case WeightGroup::Hidden: {
      const auto t = index - static_cast<std::size_t>(coupling.size());
      return "hidden[" + std::to_string(t) + "] " + hidden.terms[t].label();
    }
    case WeightGroup::Theta: {
      const auto t = index - static_cast<std::size_t>(coupling.size()) - hidden.terms.size();
      return "theta[" + std::to_string(t) + "]";
    }
    case WeightGroup::Offset:
      return "offset";
  }
  return "?";
}

CsqbmModel make_model(ExpFamilyPrior prior, std::size_t num_hidden,
                      std::vector<PauliTerm> hidden_terms, PauliOp basis, double beta) {
  const auto d = static_cast<Eigen::Index>(prior.stat_dim());
  CsqbmModel model{std::move(prior), RealMatrix::Zero(d, static_cast<Eigen::Index>(num_hidden)),
                   PauliHamiltonianSpec{num_hidden, std::move(hidden_terms)}, basis, beta};
  model.validate();
  return model;
}

namespace {

void check_visible(const CsqbmModel& model, const RealVector& v) {
  if (static_cast<std::size_t>(v.size()) != model.num_visible()) {
    throw InvalidArgument("visible vector has " + std::to_string(v.size()) +
                          " entries, model expects " + std::to_string(model.num_visible()));
  }
}

}  // namespace

HermitianMatrix assemble_h_prime(const CsqbmModel& model, const RealVector& v) {
  check_visible(model, v);
  const std::size_t m = model.num_hidden();
  const RealVector field = model.coupling.transpose() * model.prior.grad_c_theta(v);
  PauliAccumulator acc(m);
  for (std::size_t j = 0; j < m; ++j) {
    acc.add(-field(static_cast<Eigen::Index>(j)), {PauliFactor{j, model.coupling_basis}});
  }
  for (const auto& t : model.hidden.terms) acc.add(t);
  return std::move(acc).finish();
}

FreeEnergyReport free_energy(const CsqbmModel& model, const RealVector& v) {
  const double c = model.prior.c_value(v);
  GibbsState g = gibbs_state(assemble_h_prime(model, v), model.beta);
  const double f_prime = g.free_energy();
  return FreeEnergyReport{-c + f_prime, f_prime, c, std::move(g)};
}

GradientReport grad_free_energy(const CsqbmModel& model, const RealVector& v,
                                GradientTarget target) {
  return grad_free_energy(model, v, free_energy(model, v), target);
}

GradientReport grad_free_energy(const CsqbmModel& model, const RealVector& v,
                                const FreeEnergyReport& report, GradientTarget target) {
  check_visible(model, v);
  const std::size_t m = model.num_hidden();
  RealVector pauli_mean(static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < m; ++j) {
    pauli_mean(static_cast<Eigen::Index>(j)) =
        pauli_expectation(report.gibbs, {PauliFactor{j, model.coupling_basis}});
  }
  const RealVector stats = model.prior.grad_c_theta(v);

  GradientReport out;
  if (target != GradientTarget::Visible) {
    out.d_weights.resize(static_cast<Eigen::Index>(model.num_weights()));
    Eigen::Index k = 0;
    // dH'/dW_ij = -s_i(v) P_j
    for (Eigen::Index i = 0; i < model.coupling.rows(); ++i) {
      for (Eigen::Index j = 0; j < model.coupling.cols(); ++j) {
        out.d_weights(k++) = -stats(i) * pauli_mean(j);
      }
    }
    for (const auto& t : model.hidden.terms) {
      out.d_weights(k++) = pauli_expectation(report.gibbs, t.factors);
    }
    // c = theta^T s + log g + offset; H' does not depend on either.
    if (model.theta_trainable) {
      out.d_weights.segment(k, stats.size()) = -stats;
      k += stats.size();
    }
    if (model.offset_trainable) out.d_weights(k++) = -1.0;
  }
  if (target != GradientTarget::Weights) {
    const RealVector dc = model.prior.grad_c_v(v);
    const RealVector coupled = model.coupling * pauli_mean;  // sum_j W_ij <P_j>
    const auto per_unit = static_cast<Eigen::Index>(model.prior.family().stats_per_unit());
    out.d_visible.resize(v.size());
    for (Eigen::Index u = 0; u < v.size(); ++u) {
      const RealVector ds = model.prior.family().unit_statistic_derivative(v(u));
      // dH'/dv_u = -sum_ij W_ij (ds_i/dv_u) P_j
      out.d_visible(u) = -dc(u) - ds.dot(coupled.segment(per_unit * u, per_unit));
    }
  }
  return out;
}

SpinVector conditional_hidden(const CsqbmModel& model, const RealVector& v, Rng& rng) {
  const GibbsState g = gibbs_state(assemble_h_prime(model, v), model.beta);
  return sample_hidden(g, model.coupling_basis, rng);
}

NaturalParams conditional_visible_params(const CsqbmModel& model, const SpinVector& h) {
  if (h.size() != model.num_hidden()) {
    throw InvalidArgument("hidden configuration has " + std::to_string(h.size()) +
                          " spins, model has " + std::to_string(model.num_hidden()));
  }
  for (int s : h) {
    if (s != 1 && s != -1) throw InvalidArgument("hidden spins must be +1 or -1");
  }
  return tilt(model.prior.family(), model.prior.params(), model.coupling, h, model.beta);
}

VisibleClamp VisibleClamp::leading(const RealVector& state) {
  VisibleClamp clamp;
  clamp.indices.resize(static_cast<std::size_t>(state.size()));
  for (std::size_t i = 0; i < clamp.indices.size(); ++i) clamp.indices[i] = i;
  clamp.values = state;
  return clamp;
}

RealVector gibbs_sample_action(const CsqbmModel& model, const VisibleClamp& clamp,
                               std::size_t sweeps, Rng& rng) {
  if (sweeps == 0) throw InvalidArgument("Gibbs sampler needs at least one sweep");
  const std::size_t n = model.num_visible();
  if (clamp.indices.size() != static_cast<std::size_t>(clamp.values.size())) {
    throw InvalidArgument("clamp indices and values differ in length");
  }
  std::vector<bool> fixed(n, false);
  RealVector v = RealVector::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < clamp.indices.size(); ++k) {
    const auto i = clamp.indices[k];
    if (i >= n || fixed[i]) throw InvalidArgument("invalid or repeated clamp index");
    fixed[i] = true;
    v(static_cast<Eigen::Index>(i)) = clamp.values(static_cast<Eigen::Index>(k));
  }
  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < n; ++i) {
    if (!fixed[i]) free.push_back(i);
  }
  if (free.empty()) throw InvalidArgument("clamp leaves no free coordinates to sample");

  const auto& family = model.prior.family();
  for (auto i : free) v(static_cast<Eigen::Index>(i)) = family.sample_unit(model.prior.params(), i, rng);

  for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
    const SpinVector h = conditional_hidden(model, v, rng);
    const NaturalParams tilted = conditional_visible_params(model, h);
    for (auto i : free) v(static_cast<Eigen::Index>(i)) = family.sample_unit(tilted, i, rng);
  }

  RealVector out(static_cast<Eigen::Index>(free.size()));
  for (std::size_t k = 0; k < free.size(); ++k) {
    out(static_cast<Eigen::Index>(k)) = v(static_cast<Eigen::Index>(free[k]));
  }
  return out;
}

RealVector concat(const RealVector& s, const RealVector& a) {
  RealVector v(s.size() + a.size());
  v << s, a;
  return v;
}

double q_value(const CsqbmModel& model, const RealVector& s, const RealVector& a) {
  return -free_energy(model, concat(s, a)).f;
}

}  // namespace csqbm
