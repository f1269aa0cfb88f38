#pragma once

// Semi-quantum Boltzmann machine with binary visible qubits.
//
// Qubits 0..n-1 are visible, n..n+m-1 hidden. Every factor acting on a visible
// qubit must be Pauli-Z, so H commutes with the projector onto a visible
// configuration and the projected free energy reduces to a 2^m problem after
// substituting v_i for Z_i.

#include <cstddef>
#include <vector>

#include "csqbm/quantum_core.hpp"

namespace csqbm {

struct DiscreteSqbmModel {
  std::size_t num_visible = 1;
  std::size_t num_hidden = 0;
  /// Terms on the joint (num_visible + num_hidden)-qubit register.
  std::vector<PauliTerm> terms;
  double beta = 1.0;

  void validate() const;
  std::size_t num_qubits() const { return num_visible + num_hidden; }
};

/// Hidden-register problem obtained by fixing the visible spins.
struct ClampedHamiltonian {
  double constant = 0.0;  ///< energy of terms acting only on visible qubits
  /// Per original term: the visible scalar prod_i v_i and the remaining
  /// hidden factors (re-indexed to 0..m-1, empty if none).
  std::vector<double> scalars;
  std::vector<std::vector<PauliFactor>> hidden_factors;
};

ClampedHamiltonian clamp_visible(const DiscreteSqbmModel& model, const SpinVector& v);

/// F(v) = -(1/beta) log tr[exp(-beta H) Delta_v], via clamping.
double discrete_free_energy(const DiscreteSqbmModel& model, const SpinVector& v);

/// dF/dw_k for each term coefficient, in term order.
RealVector discrete_grad_free_energy(const DiscreteSqbmModel& model, const SpinVector& v);

}  // namespace csqbm
