#include "csqbm/quantum_core.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "csqbm/errors.hpp"

namespace csqbm {

namespace {

constexpr Complex kI{0.0, 1.0};

bool is_power_of_two(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }

std::size_t log2_exact(Eigen::Index n) {
  std::size_t q = 0;
  while ((Eigen::Index{1} << q) < n) ++q;
  return q;
}

// Row index and phase of the single nonzero entry of column `col` of the
// Pauli product `factors` on `num_qubits` qubits.
struct ColumnEntry {
  std::size_t row;
  Complex phase;
};

ColumnEntry pauli_column(const std::vector<PauliFactor>& factors, std::size_t num_qubits,
                         std::size_t col) {
  std::size_t row = col;
  Complex phase{1.0, 0.0};
  for (const auto& f : factors) {
    const std::size_t shift = num_qubits - 1 - f.qubit;
    const bool bit = ((col >> shift) & 1u) != 0;
    switch (f.op) {
      case PauliOp::X:
        row ^= std::size_t{1} << shift;
        break;
      case PauliOp::Y:
        row ^= std::size_t{1} << shift;
        phase *= bit ? -kI : kI;
        break;
      case PauliOp::Z:
        if (bit) phase = -phase;
        break;
    }
  }
  return {row, phase};
}

// Applies the 2x2 matrix g to qubit `qubit` of every column of `cols`.
void apply_single_qubit(ComplexMatrix& cols, const Eigen::Matrix2cd& g, std::size_t qubit,
                        std::size_t num_qubits) {
  const std::size_t stride = std::size_t{1} << (num_qubits - 1 - qubit);
  const auto dim = static_cast<std::size_t>(cols.rows());
  for (Eigen::Index c = 0; c < cols.cols(); ++c) {
    for (std::size_t base = 0; base < dim; base += 2 * stride) {
      for (std::size_t k = base; k < base + stride; ++k) {
        const auto i0 = static_cast<Eigen::Index>(k);
        const auto i1 = static_cast<Eigen::Index>(k + stride);
        const Complex a0 = cols(i0, c);
        const Complex a1 = cols(i1, c);
        cols(i0, c) = g(0, 0) * a0 + g(0, 1) * a1;
        cols(i1, c) = g(1, 0) * a0 + g(1, 1) * a1;
      }
    }
  }
}

// Columns are the +1 and -1 eigenvectors of the Pauli.
Eigen::Matrix2cd eigenbasis(PauliOp op) {
  const double r = 1.0 / std::sqrt(2.0);
  Eigen::Matrix2cd u;
  switch (op) {
    case PauliOp::X:
      u << r, r, r, -r;
      break;
    case PauliOp::Y:
      u << r, r, kI * r, -kI * r;
      break;
    case PauliOp::Z:
      u = Eigen::Matrix2cd::Identity();
      break;
  }
  return u;
}

}  // namespace

char pauli_char(PauliOp op) {
  switch (op) {
    case PauliOp::X:
      return 'X';
    case PauliOp::Y:
      return 'Y';
    case PauliOp::Z:
      return 'Z';
  }
  return '?';
}

PauliOp parse_pauli(char c) {
  switch (c) {
    case 'X':
      return PauliOp::X;
    case 'Y':
      return PauliOp::Y;
    case 'Z':
      return PauliOp::Z;
    default:
      throw InvalidArgument(std::string("unknown Pauli operator '") + c + "'");
  }
}

Eigen::Matrix2cd pauli_matrix(PauliOp op) {
  Eigen::Matrix2cd p;
  switch (op) {
    case PauliOp::X:
      p << 0.0, 1.0, 1.0, 0.0;
      break;
    case PauliOp::Y:
      p << 0.0, -kI, kI, 0.0;
      break;
    case PauliOp::Z:
      p << 1.0, 0.0, 0.0, -1.0;
      break;
  }
  return p;
}

PauliTerm PauliTerm::single(double coefficient, PauliOp op, std::size_t qubit) {
  return PauliTerm{coefficient, {PauliFactor{qubit, op}}};
}

PauliTerm PauliTerm::pair(double coefficient, PauliOp op_a, std::size_t qubit_a, PauliOp op_b,
                          std::size_t qubit_b) {
  return PauliTerm{coefficient, {PauliFactor{qubit_a, op_a}, PauliFactor{qubit_b, op_b}}};
}

void PauliTerm::validate(std::size_t num_qubits) const {
  if (factors.empty() || factors.size() > 2) {
    throw InvalidArgument("Pauli term must act on one or two qubits, got " +
                          std::to_string(factors.size()));
  }
  if (!std::isfinite(coefficient)) {
    throw InvalidArgument("Pauli term " + label() + " has a non-finite coefficient");
  }
  for (std::size_t k = 0; k < factors.size(); ++k) {
    if (factors[k].qubit >= num_qubits) {
      throw InvalidArgument("Pauli term " + label() + " references qubit " +
                            std::to_string(factors[k].qubit) + " on a " +
                            std::to_string(num_qubits) + "-qubit register");
    }
    if (k > 0 && factors[k].qubit <= factors[k - 1].qubit) {
      throw InvalidArgument("Pauli term " + label() + " needs strictly increasing qubit indices");
    }
  }
}

bool PauliTerm::diagonal_in(PauliOp basis) const {
  return std::all_of(factors.begin(), factors.end(),
                     [basis](const PauliFactor& f) { return f.op == basis; });
}

std::string PauliTerm::label() const {
  std::ostringstream os;
  for (std::size_t k = 0; k < factors.size(); ++k) {
    if (k) os << ' ';
    os << pauli_char(factors[k].op) << factors[k].qubit;
  }
  return os.str();
}

void PauliHamiltonianSpec::validate() const {
  if (num_qubits == 0 || num_qubits > 16) {
    throw InvalidArgument("hidden register needs 1..16 qubits, got " + std::to_string(num_qubits));
  }
  for (const auto& t : terms) t.validate(num_qubits);
}

HermitianMatrix::HermitianMatrix(ComplexMatrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols() || !is_power_of_two(m_.rows())) {
    throw InvalidArgument("Hermitian matrix must be square with power-of-two dimension");
  }
  if (!m_.allFinite()) throw InvalidArgument("Hermitian matrix has non-finite entries");
  const double asym = (m_ - m_.adjoint()).norm();
  if (asym > kHermitianTolerance * m_.norm()) {
    throw InvalidArgument("matrix is not Hermitian (||A - A^H||_F = " + std::to_string(asym) +
                          ")");
  }
}

HermitianMatrix HermitianMatrix::zero(std::size_t num_qubits) {
  const auto d = Eigen::Index{1} << num_qubits;
  return HermitianMatrix(ComplexMatrix::Zero(d, d), Trusted{});
}

HermitianMatrix HermitianMatrix::identity(std::size_t num_qubits) {
  const auto d = Eigen::Index{1} << num_qubits;
  return HermitianMatrix(ComplexMatrix::Identity(d, d), Trusted{});
}

std::size_t HermitianMatrix::num_qubits() const { return log2_exact(m_.rows()); }

HermitianMatrix HermitianMatrix::operator+(const HermitianMatrix& other) const {
  if (other.dim() != dim()) throw InvalidArgument("dimension mismatch in Hermitian sum");
  return HermitianMatrix(m_ + other.m_, Trusted{});
}

HermitianMatrix HermitianMatrix::operator*(double s) const {
  return HermitianMatrix(m_ * s, Trusted{});
}

PauliAccumulator::PauliAccumulator(std::size_t num_qubits) : num_qubits_(num_qubits) {
  const auto d = Eigen::Index{1} << num_qubits;
  m_ = ComplexMatrix::Zero(d, d);
}

void PauliAccumulator::add(double coefficient, const std::vector<PauliFactor>& factors) {
  if (coefficient == 0.0) return;
  const auto dim = static_cast<std::size_t>(m_.rows());
  for (std::size_t col = 0; col < dim; ++col) {
    const auto e = pauli_column(factors, num_qubits_, col);
    m_(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(col)) += coefficient * e.phase;
  }
}

void PauliAccumulator::add_diagonal_constant(double value) {
  m_.diagonal().array() += value;
}

HermitianMatrix PauliAccumulator::finish() && {
  return HermitianMatrix(std::move(m_), HermitianMatrix::Trusted{});
}

HermitianMatrix embed_operator(PauliOp op, std::size_t qubit, std::size_t num_qubits) {
  if (qubit >= num_qubits) {
    throw InvalidArgument("qubit index " + std::to_string(qubit) + " out of range for " +
                          std::to_string(num_qubits) + " qubits");
  }
  return pauli_product_matrix({PauliFactor{qubit, op}}, num_qubits);
}

HermitianMatrix pauli_product_matrix(const std::vector<PauliFactor>& factors,
                                     std::size_t num_qubits) {
  PauliTerm{1.0, factors}.validate(num_qubits);
  PauliAccumulator acc(num_qubits);
  acc.add(1.0, factors);
  return std::move(acc).finish();
}

HermitianMatrix assemble_hamiltonian(const PauliHamiltonianSpec& spec) {
  spec.validate();
  PauliAccumulator acc(spec.num_qubits);
  for (const auto& t : spec.terms) acc.add(t);
  return std::move(acc).finish();
}

std::size_t GibbsState::num_qubits() const { return log2_exact(rho_.rows()); }

GibbsState gibbs_state(const HermitianMatrix& h, double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw InvalidArgument("inverse temperature must be positive and finite");
  }
  const ComplexMatrix& m = h.matrix();
  const Eigen::Index d = m.rows();

  GibbsState g;
  g.beta_ = beta;

  const bool diagonal = (m - ComplexMatrix(m.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
  std::vector<Eigen::Index> order;
  if (diagonal) {
    order.resize(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return m(a, a).real() < m(b, b).real();
    });
    g.eigvals_.resize(d);
    g.eigvecs_ = ComplexMatrix::Zero(d, d);
    for (Eigen::Index k = 0; k < d; ++k) {
      g.eigvals_(k) = m(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]).real();
      g.eigvecs_(order[static_cast<std::size_t>(k)], k) = 1.0;
    }
  } else {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m);
    if (es.info() != Eigen::Success) {
      throw NumericalError("Hermitian eigendecomposition failed");
    }
    g.eigvals_ = es.eigenvalues();
    g.eigvecs_ = es.eigenvectors();
  }

  // log-sum-exp over -beta * lambda, shifted by the smallest eigenvalue.
  const double shift = -beta * g.eigvals_.minCoeff();
  const RealVector scaled = ((-beta * g.eigvals_).array() - shift).exp();
  const double sum = scaled.sum();
  g.log_partition_ = shift + std::log(sum);
  g.weights_ = scaled / sum;

  if (diagonal) {
    g.rho_ = ComplexMatrix::Zero(d, d);
    for (Eigen::Index k = 0; k < d; ++k) {
      const Eigen::Index i = order[static_cast<std::size_t>(k)];
      g.rho_(i, i) = g.weights_(k);
    }
  } else {
    g.rho_ = g.eigvecs_ * g.weights_.cast<Complex>().asDiagonal() * g.eigvecs_.adjoint();
  }
  return g;
}

double expectation(const GibbsState& state, const HermitianMatrix& observable) {
  if (observable.dim() != state.rho().rows()) {
    throw InvalidArgument("observable dimension " + std::to_string(observable.dim()) +
                          " does not match state dimension " +
                          std::to_string(state.rho().rows()));
  }
  const Complex tr = state.rho().cwiseProduct(observable.matrix().transpose()).sum();
  if (std::abs(tr.imag()) >= kTraceTolerance) {
    throw NumericalError("expectation value has imaginary residue " + std::to_string(tr.imag()));
  }
  return tr.real();
}

double pauli_expectation(const GibbsState& state, const std::vector<PauliFactor>& factors) {
  const std::size_t m = state.num_qubits();
  PauliTerm{1.0, factors}.validate(m);
  const ComplexMatrix& rho = state.rho();
  const auto dim = static_cast<std::size_t>(rho.rows());
  Complex tr{0.0, 0.0};
  for (std::size_t col = 0; col < dim; ++col) {
    const auto e = pauli_column(factors, m, col);
    tr += e.phase * rho(static_cast<Eigen::Index>(col), static_cast<Eigen::Index>(e.row));
  }
  if (std::abs(tr.imag()) >= kTraceTolerance) {
    throw NumericalError("Pauli expectation has imaginary residue " + std::to_string(tr.imag()));
  }
  return tr.real();
}

RealVector measurement_distribution(const GibbsState& state, PauliOp basis) {
  const std::size_t m = state.num_qubits();
  RealVector probs;
  if (basis == PauliOp::Z) {
    probs = state.rho().diagonal().real();
  } else {
    // p_k = sum_l w_l |<b_k|v_l>|^2 with |b_k> the product eigenbasis.
    ComplexMatrix rotated = state.eigvecs();
    const Eigen::Matrix2cd u_dag = eigenbasis(basis).adjoint();
    for (std::size_t q = 0; q < m; ++q) apply_single_qubit(rotated, u_dag, q, m);
    probs = rotated.cwiseAbs2() * state.weights();
  }
  probs = probs.cwiseMax(0.0);
  const double total = probs.sum();
  if (std::abs(total - 1.0) > kTraceTolerance) {
    throw NumericalError("measurement distribution sums to " + std::to_string(total));
  }
  return probs / total;
}

std::size_t sample_index(const RealVector& probs, Rng& rng) {
  const double u = uniform01(rng) * probs.sum();
  double acc = 0.0;
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    acc += probs(k);
    if (u < acc) return static_cast<std::size_t>(k);
  }
  // Round-off at the top end: return the last outcome with nonzero mass.
  for (Eigen::Index k = probs.size() - 1; k >= 0; --k) {
    if (probs(k) > 0.0) return static_cast<std::size_t>(k);
  }
  return 0;
}

SpinVector index_to_spins(std::size_t index, std::size_t num_qubits) {
  SpinVector spins(num_qubits);
  for (std::size_t q = 0; q < num_qubits; ++q) {
    spins[q] = ((index >> (num_qubits - 1 - q)) & 1u) ? -1 : 1;
  }
  return spins;
}

std::size_t spins_to_index(const SpinVector& spins) {
  std::size_t index = 0;
  for (int s : spins) {
    if (s != 1 && s != -1) throw InvalidArgument("spins must be +1 or -1");
    index = (index << 1) | (s == -1 ? 1u : 0u);
  }
  return index;
}

SpinVector sample_hidden(const GibbsState& state, PauliOp basis, Rng& rng) {
  return index_to_spins(sample_index(measurement_distribution(state, basis), rng),
                        state.num_qubits());
}

}  // namespace csqbm
