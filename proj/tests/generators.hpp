#pragma once

// Hand-rolled random generators for property tests.

#include <cstdint>
#include <vector>

#include "csqbm/discrete_sqbm.hpp"
#include "csqbm/model.hpp"
#include "csqbm/random.hpp"

namespace gen {

inline double uniform(csqbm::Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * csqbm::uniform01(rng);
}

inline std::size_t index(csqbm::Rng& rng, std::size_t lo, std::size_t hi_inclusive) {
  return lo + static_cast<std::size_t>(csqbm::uniform01(rng) * static_cast<double>(hi_inclusive - lo + 1));
}

inline csqbm::PauliOp pauli(csqbm::Rng& rng) {
  return static_cast<csqbm::PauliOp>(index(rng, 0, 2));
}

/// 1- or 2-factor term with random Paulis on distinct qubits.
inline csqbm::PauliTerm term(csqbm::Rng& rng, std::size_t m, double scale = 1.0) {
  const double c = uniform(rng, -scale, scale);
  if (m == 1 || csqbm::uniform01(rng) < 0.5) return csqbm::PauliTerm::single(c, pauli(rng), index(rng, 0, m - 1));
  std::size_t a = index(rng, 0, m - 1), b = index(rng, 0, m - 2);
  if (b >= a) ++b;
  if (a > b) std::swap(a, b);
  return csqbm::PauliTerm::pair(c, pauli(rng), a, pauli(rng), b);
}

/// Term with every factor equal to `op`.
inline csqbm::PauliTerm diagonal_term(csqbm::Rng& rng, std::size_t m, csqbm::PauliOp op, double scale) {
  csqbm::PauliTerm t = term(rng, m, scale);
  for (auto& f : t.factors) f.op = op;
  return t;
}

inline csqbm::PauliHamiltonianSpec spec(csqbm::Rng& rng, std::size_t m, std::size_t max_terms) {
  csqbm::PauliHamiltonianSpec s{m, {}};
  const std::size_t count = index(rng, 0, max_terms);
  for (std::size_t k = 0; k < count; ++k) s.terms.push_back(term(rng, m));
  return s;
}

struct ModelOptions {
  std::size_t max_n = 2;
  std::size_t max_m = 4;
  double weight_scale = 1.0;
  bool diagonal_hidden = false;  ///< hidden terms diagonal in the coupling basis
  bool random_basis = true;
};

/// Gaussian prior with mu ~ U[-1, 1], sigma ~ U[0.5, 1.5]; couplings on the
/// linear rows ~ U[-scale, scale]; up to 2m hidden terms.
inline csqbm::CsqbmModel model(csqbm::Rng& rng, const ModelOptions& o = {}) {
  const std::size_t n = index(rng, 1, o.max_n);
  const std::size_t m = index(rng, 1, o.max_m);
  std::vector<double> mu(n), sigma(n);
  for (std::size_t i = 0; i < n; ++i) {
    mu[i] = uniform(rng, -1.0, 1.0);
    sigma[i] = uniform(rng, 0.5, 1.5);
  }
  const csqbm::PauliOp basis = o.random_basis ? pauli(rng) : csqbm::PauliOp::Z;
  std::vector<csqbm::PauliTerm> terms;
  const std::size_t count = index(rng, 0, 2 * m);
  for (std::size_t k = 0; k < count; ++k) {
    terms.push_back(o.diagonal_hidden ? diagonal_term(rng, m, basis, o.weight_scale)
                                      : term(rng, m, o.weight_scale));
  }
  const double betas[] = {0.5, 1.0, 2.0};
  const auto d = static_cast<Eigen::Index>(2 * n);
  csqbm::CsqbmModel mdl{csqbm::ExpFamilyPrior::gaussian(mu, sigma),
                        csqbm::RealMatrix::Zero(d, static_cast<Eigen::Index>(m)),
                        csqbm::PauliHamiltonianSpec{m, std::move(terms)}, basis,
                        betas[index(rng, 0, 2)]};
  mdl.strict_sampler = o.diagonal_hidden;
  for (Eigen::Index i = 0; i < mdl.coupling.rows(); i += 2) {
    for (Eigen::Index j = 0; j < mdl.coupling.cols(); ++j) {
      mdl.coupling(i, j) = uniform(rng, -o.weight_scale, o.weight_scale);
    }
  }
  mdl.validate();
  return mdl;
}

inline csqbm::RealVector visible(csqbm::Rng& rng, std::size_t n, double scale = 1.5) {
  csqbm::RealVector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = uniform(rng, -scale, scale);
  return v;
}

/// Random discrete model on n visible + m hidden qubits with Z on every
/// visible factor.
inline csqbm::DiscreteSqbmModel discrete_model(csqbm::Rng& rng, std::size_t n, std::size_t m) {
  const double betas[] = {0.5, 1.0, 2.0};
  csqbm::DiscreteSqbmModel model{n, m, {}, betas[index(rng, 0, 2)]};
  const std::size_t count = index(rng, 1, 2 * (n + m));
  for (std::size_t k = 0; k < count; ++k) {
    csqbm::PauliTerm t = term(rng, n + m);
    for (auto& f : t.factors) {
      if (f.qubit < n) f.op = csqbm::PauliOp::Z;
    }
    model.terms.push_back(t);
  }
  return model;
}

inline csqbm::SpinVector spins(csqbm::Rng& rng, std::size_t n) {
  csqbm::SpinVector v(n);
  for (auto& s : v) s = csqbm::uniform01(rng) < 0.5 ? 1 : -1;
  return v;
}

}  // namespace gen
