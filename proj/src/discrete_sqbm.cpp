#include "csqbm/discrete_sqbm.hpp"

#include <cmath>

#include "csqbm/errors.hpp"

namespace csqbm {

void DiscreteSqbmModel::validate() const {
  if (num_visible == 0) throw InvalidArgument("discrete SQBM needs at least one visible unit");
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw InvalidArgument("inverse temperature must be positive and finite");
  }
  for (const auto& t : terms) {
    t.validate(num_qubits());
    for (const auto& f : t.factors) {
      if (f.qubit < num_visible && f.op != PauliOp::Z) {
        throw InvalidArgument("term " + t.label() +
                              " acts on a visible qubit with a non-Z operator");
      }
    }
  }
}

ClampedHamiltonian clamp_visible(const DiscreteSqbmModel& model, const SpinVector& v) {
  model.validate();
  if (v.size() != model.num_visible) {
    throw InvalidArgument("visible configuration has " + std::to_string(v.size()) +
                          " spins, model has " + std::to_string(model.num_visible));
  }
  for (int s : v) {
    if (s != 1 && s != -1) throw InvalidArgument("visible spins must be +1 or -1");
  }
  ClampedHamiltonian out;
  out.scalars.reserve(model.terms.size());
  out.hidden_factors.reserve(model.terms.size());
  for (const auto& t : model.terms) {
    double scalar = 1.0;
    std::vector<PauliFactor> rest;
    for (const auto& f : t.factors) {
      if (f.qubit < model.num_visible) {
        scalar *= v[f.qubit];
      } else {
        rest.push_back(PauliFactor{f.qubit - model.num_visible, f.op});
      }
    }
    if (rest.empty()) out.constant += t.coefficient * scalar;
    out.scalars.push_back(scalar);
    out.hidden_factors.push_back(std::move(rest));
  }
  return out;
}

namespace {

// Gibbs state of the clamped hidden Hamiltonian; requires num_hidden > 0.
GibbsState clamped_gibbs(const DiscreteSqbmModel& model, const ClampedHamiltonian& clamped) {
  PauliAccumulator acc(model.num_hidden);
  for (std::size_t k = 0; k < model.terms.size(); ++k) {
    if (!clamped.hidden_factors[k].empty()) {
      acc.add(model.terms[k].coefficient * clamped.scalars[k], clamped.hidden_factors[k]);
    }
  }
  return gibbs_state(std::move(acc).finish(), model.beta);
}

}  // namespace

double discrete_free_energy(const DiscreteSqbmModel& model, const SpinVector& v) {
  const ClampedHamiltonian clamped = clamp_visible(model, v);
  if (model.num_hidden == 0) return clamped.constant;
  return clamped.constant + clamped_gibbs(model, clamped).free_energy();
}

RealVector discrete_grad_free_energy(const DiscreteSqbmModel& model, const SpinVector& v) {
  const ClampedHamiltonian clamped = clamp_visible(model, v);
  RealVector grad(static_cast<Eigen::Index>(model.terms.size()));
  if (model.num_hidden == 0) {
    for (std::size_t k = 0; k < model.terms.size(); ++k) {
      grad(static_cast<Eigen::Index>(k)) = clamped.scalars[k];
    }
    return grad;
  }
  const GibbsState g = clamped_gibbs(model, clamped);
  for (std::size_t k = 0; k < model.terms.size(); ++k) {
    const double hidden_mean =
        clamped.hidden_factors[k].empty() ? 1.0 : pauli_expectation(g, clamped.hidden_factors[k]);
    grad(static_cast<Eigen::Index>(k)) = clamped.scalars[k] * hidden_mean;
  }
  return grad;
}

}  // namespace csqbm
