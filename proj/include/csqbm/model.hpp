#pragma once

// Continuous semi-quantum Boltzmann machine.
//
// The visible units v are classical with an exponential-family prior; the m
// hidden units are qubits. For a visible configuration the energy operator is
//
//   H(v)  = -c(v) I + H'(v)
//   H'(v) = -sum_{ij} W_ij s_i(v) P_j + H_hidden
//
// with a single coupling basis P. Because the -c(v) I part commutes with
// everything, the free energy splits into F(v) = -c(v) + F'(v) and the
// gradient into -dc + tr[rho'(v) dH'].

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

#include "csqbm/exp_family.hpp"
#include "csqbm/quantum_core.hpp"
#include "csqbm/random.hpp"

namespace csqbm {

enum class WeightGroup { Coupling, Hidden, Theta, Offset };

const char* weight_group_name(WeightGroup g);

struct CsqbmModel {
  ExpFamilyPrior prior;
  /// (statistic dim) x (hidden count); row i couples statistic s_i(v).
  RealMatrix coupling;
  PauliHamiltonianSpec hidden;
  PauliOp coupling_basis = PauliOp::Z;
  double beta = 1.0;
  /// Restrict hidden terms to be diagonal in coupling_basis so the
  /// exponential-family conditional of the visible units is exact.
  bool strict_sampler = true;
  /// Allow nonzero coupling rows on restricted statistics (Gaussian: v^2).
  bool quadratic_coupling = false;
  bool theta_trainable = false;
  bool offset_trainable = false;

  /// Throws InvalidArgument if any invariant is violated.
  void validate() const;

  std::size_t num_visible() const { return prior.num_units(); }
  std::size_t num_hidden() const { return hidden.num_qubits; }
  std::size_t stat_dim() const { return prior.stat_dim(); }

  /// Trainable parameter layout: coupling row-major, hidden coefficients in
  /// term order, then theta (if trainable), then the base offset (if
  /// trainable). This layout is part of the checkpoint contract.
  std::size_t num_weights() const;
  RealVector flat_weights() const;
  CsqbmModel with_flat_weights(const RealVector& w) const;
  WeightGroup weight_group(std::size_t index) const;
  std::string weight_label(std::size_t index) const;
  /// 1 for weights the learner may move, 0 for coupling rows of restricted
  /// statistics when quadratic_coupling is off.
  RealVector trainable_mask() const;
};

/// Builds a model with zero coupling and the given hidden terms.
CsqbmModel make_model(ExpFamilyPrior prior, std::size_t num_hidden,
                      std::vector<PauliTerm> hidden_terms, PauliOp basis, double beta);

/// H'(v) = H^{vh}(v) + H_hidden.
HermitianMatrix assemble_h_prime(const CsqbmModel& model, const RealVector& v);

struct FreeEnergyReport {
  double f = 0.0;        ///< F(v) = -c + f_prime
  double f_prime = 0.0;  ///< -(1/beta) log tr exp(-beta H'(v))
  double c = 0.0;
  GibbsState gibbs;      ///< Gibbs state of H'(v)
};

FreeEnergyReport free_energy(const CsqbmModel& model, const RealVector& v);

enum class GradientTarget { Weights, Visible, Both };

struct GradientReport {
  RealVector d_weights;  ///< layout of CsqbmModel::flat_weights; empty if not requested
  RealVector d_visible;  ///< dF/dv; empty if not requested
};

GradientReport grad_free_energy(const CsqbmModel& model, const RealVector& v,
                                GradientTarget target = GradientTarget::Both);
/// Same, reusing an already computed report for `v`.
GradientReport grad_free_energy(const CsqbmModel& model, const RealVector& v,
                                const FreeEnergyReport& report, GradientTarget target);

/// h ~ p(h | v): measure the Gibbs state of H'(v) in the coupling basis.
SpinVector conditional_hidden(const CsqbmModel& model, const RealVector& v, Rng& rng);

/// Natural parameters of p(v | h) = beta * (theta + W h).
NaturalParams conditional_visible_params(const CsqbmModel& model, const SpinVector& h);

/// Assignment of fixed values to a subset of visible coordinates.
struct VisibleClamp {
  std::vector<std::size_t> indices;
  RealVector values;

  /// Clamps the leading coordinates to `state`.
  static VisibleClamp leading(const RealVector& state);
};

/// Alternating sampler for the free coordinates given the clamp. Free
/// coordinates start from the prior; each sweep draws h ~ p(h | v) and then the
/// free coordinates from p(v | h). Returns the free coordinates in ascending
/// index order. Throws InvalidArgument for sweeps == 0.
RealVector gibbs_sample_action(const CsqbmModel& model, const VisibleClamp& clamp,
                               std::size_t sweeps, Rng& rng);

RealVector concat(const RealVector& s, const RealVector& a);

/// Q(s, a) = -F(concat(s, a)).
double q_value(const CsqbmModel& model, const RealVector& s, const RealVector& a);

}  // namespace csqbm
