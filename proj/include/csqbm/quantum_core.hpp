#pragma once

// Dense Pauli-operator algebra and Gibbs states on a register of m qubits.
//
// Conventions used throughout the library:
//   * qubit 0 is the leftmost Kronecker factor, i.e. the most significant bit
//     of a computational-basis index;
//   * a measurement outcome bit 0 corresponds to Pauli eigenvalue +1 and to
//     spin +1, bit 1 to eigenvalue -1 and spin -1.

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "csqbm/random.hpp"

namespace csqbm {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;
using SpinVector = std::vector<int>;

inline constexpr double kHermitianTolerance = 1e-12;
inline constexpr double kTraceTolerance = 1e-10;

enum class PauliOp { X, Y, Z };

char pauli_char(PauliOp op);
/// Parses "X", "Y" or "Z"; throws InvalidArgument otherwise.
PauliOp parse_pauli(char c);

/// The standard 2x2 Pauli matrix.
Eigen::Matrix2cd pauli_matrix(PauliOp op);

struct PauliFactor {
  std::size_t qubit = 0;
  PauliOp op = PauliOp::Z;

  friend bool operator==(const PauliFactor&, const PauliFactor&) = default;
};

/// coefficient * (P_i) or coefficient * (P_i Q_j) with i < j.
struct PauliTerm {
  double coefficient = 0.0;
  std::vector<PauliFactor> factors;

  static PauliTerm single(double coefficient, PauliOp op, std::size_t qubit);
  static PauliTerm pair(double coefficient, PauliOp op_a, std::size_t qubit_a, PauliOp op_b,
                        std::size_t qubit_b);

  /// Throws InvalidArgument unless 1 <= #factors <= 2, indices strictly
  /// increasing and < num_qubits, coefficient finite.
  void validate(std::size_t num_qubits) const;

  /// True when every factor is `basis`, i.e. the term is diagonal in the
  /// product eigenbasis of that Pauli.
  bool diagonal_in(PauliOp basis) const;

  /// Label such as "Z0 Z1" or "X2".
  std::string label() const;

  friend bool operator==(const PauliTerm&, const PauliTerm&) = default;
};

struct PauliHamiltonianSpec {
  std::size_t num_qubits = 1;
  std::vector<PauliTerm> terms;

  void validate() const;
  std::size_t dim() const { return std::size_t{1} << num_qubits; }

  friend bool operator==(const PauliHamiltonianSpec&, const PauliHamiltonianSpec&) = default;
};

/// Dense matrix whose conjugate transpose equals itself within
/// kHermitianTolerance (relative, Frobenius). The dimension is a power of two.
class HermitianMatrix {
 public:
  /// Validates and stores `m`; throws InvalidArgument on a non-square,
  /// non-power-of-two or non-Hermitian input.
  explicit HermitianMatrix(ComplexMatrix m);

  static HermitianMatrix zero(std::size_t num_qubits);
  static HermitianMatrix identity(std::size_t num_qubits);

  const ComplexMatrix& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }
  std::size_t num_qubits() const;

  HermitianMatrix operator+(const HermitianMatrix& other) const;
  HermitianMatrix operator*(double s) const;

 private:
  struct Trusted {};
  HermitianMatrix(ComplexMatrix m, Trusted) : m_(std::move(m)) {}

  ComplexMatrix m_;

  friend class PauliAccumulator;
};

/// Builds sums of embedded Pauli products directly into a dense matrix, one
/// nonzero per column and term, without forming Kronecker products.
class PauliAccumulator {
 public:
  explicit PauliAccumulator(std::size_t num_qubits);

  void add(double coefficient, const std::vector<PauliFactor>& factors);
  void add(const PauliTerm& term) { add(term.coefficient, term.factors); }
  void add_diagonal_constant(double value);

  HermitianMatrix finish() &&;

 private:
  std::size_t num_qubits_;
  ComplexMatrix m_;
};

/// op acting on `qubit` of an m-qubit register, identity elsewhere.
HermitianMatrix embed_operator(PauliOp op, std::size_t qubit, std::size_t num_qubits);

/// Matrix of an unweighted Pauli product (coefficient ignored).
HermitianMatrix pauli_product_matrix(const std::vector<PauliFactor>& factors,
                                     std::size_t num_qubits);

HermitianMatrix assemble_hamiltonian(const PauliHamiltonianSpec& spec);

/// Thermal state rho = exp(-beta H) / Z with its eigendecomposition cached.
class GibbsState {
 public:
  const ComplexMatrix& rho() const { return rho_; }
  double beta() const { return beta_; }
  /// log tr[exp(-beta H)]
  double log_partition() const { return log_partition_; }
  /// -log_partition / beta
  double free_energy() const { return -log_partition_ / beta_; }
  /// Eigenvalues of H in ascending order.
  const RealVector& eigvals() const { return eigvals_; }
  const ComplexMatrix& eigvecs() const { return eigvecs_; }
  /// Boltzmann weights exp(-beta lambda_k) / Z matching eigvals().
  const RealVector& weights() const { return weights_; }
  std::size_t num_qubits() const;

 private:
  GibbsState() = default;

  ComplexMatrix rho_;
  double beta_ = 1.0;
  double log_partition_ = 0.0;
  RealVector eigvals_;
  ComplexMatrix eigvecs_;
  RealVector weights_;

  friend GibbsState gibbs_state(const HermitianMatrix& h, double beta);
};

/// Eigendecomposes h and forms the normalized thermal state. Diagonal inputs
/// skip the eigensolver. Throws InvalidArgument for beta <= 0 and
/// NumericalError if the eigensolver fails.
GibbsState gibbs_state(const HermitianMatrix& h, double beta);

/// tr[rho O]; throws NumericalError if the imaginary part exceeds 1e-10.
double expectation(const GibbsState& state, const HermitianMatrix& observable);

/// tr[rho P] for an unweighted Pauli product, in O(dim).
double pauli_expectation(const GibbsState& state, const std::vector<PauliFactor>& factors);

/// Outcome probabilities when every qubit is measured in the eigenbasis of
/// `basis`. Index bits follow the big-endian convention, bit 0 <-> +1.
RealVector measurement_distribution(const GibbsState& state, PauliOp basis);

/// Draws an outcome index from `probs` by inverse CDF.
std::size_t sample_index(const RealVector& probs, Rng& rng);

/// Spins of outcome `index` on `num_qubits` qubits: bit 0 -> +1, bit 1 -> -1.
SpinVector index_to_spins(std::size_t index, std::size_t num_qubits);
std::size_t spins_to_index(const SpinVector& spins);

SpinVector sample_hidden(const GibbsState& state, PauliOp basis, Rng& rng);

}  // namespace csqbm
