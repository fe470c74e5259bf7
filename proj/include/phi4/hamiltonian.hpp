#pragma once

#include <vector>

#include "phi4/fock.hpp"
#include "phi4/lattice.hpp"

namespace phi4 {

/// Free and interaction pieces of the lattice Hamiltonian. The interaction
/// is stored at unit coupling and scaled on demand.
struct HamiltonianTerms {
  SparseOperator free;
  SparseOperator interaction;
  double vacuum_constant = 0.0;

  /// H0 + coupling * H_int(lambda=1).
  SparseOperator full(double coupling) const;
};

/// H0 = sum_k (1/L) omega(k) a_k^dagger a_k + E0.
SparseOperator build_free(const LatticeSpec& spec);

/// H_int = (lambda/4!) L^{-3} sum_{k1,k2,k3} phi_k1 phi_k2 phi_k3 phi_{-k1-k2-k3}.
SparseOperator build_interaction(const LatticeSpec& spec);

HamiltonianTerms build_terms(const LatticeSpec& spec);

/// H0 + H_int at the spec's coupling.
SparseOperator build_hamiltonian(const LatticeSpec& spec);

/// H(s) = H0 + s H_int for s in [0, 1].
SparseOperator interpolated(const LatticeSpec& spec, double s);
SparseOperator interpolated(const HamiltonianTerms& terms, double coupling, double s);

/// H + alpha sum_j |psi_j><psi_j|, kept as base plus low-rank update.
class DeflatedOperator {
 public:
  DeflatedOperator(SparseOperator base, std::vector<StateVector> found, double alpha);
  // NOLINTNEXTLINE(google-explicit-constructor)
  DeflatedOperator(const SparseOperator& base) : DeflatedOperator(base, {}, 0.0) {}

  std::size_t dim() const { return base_.dim(); }
  const SparseOperator& base() const { return base_; }
  const std::vector<StateVector>& found_states() const { return found_; }
  double alpha() const { return alpha_; }

  StateVector apply(const StateVector& v) const;
  double expectation(const StateVector& v) const;
  /// Overlaps <psi_j|v> with every deflated state.
  std::vector<cplx> overlaps(const StateVector& v) const;
  DenseMatrix to_dense() const;

 private:
  SparseOperator base_;
  std::vector<StateVector> found_;
  double alpha_;
};

/// Total momentum index sum_j j n_j mod N of a basis state.
int total_momentum_index(const FockBasis& basis, std::size_t i);

/// Diagonal translation T_x with phase exp(i x P_total); x must be a lattice multiple.
SparseOperator translation_phase(const LatticeSpec& spec, double displacement);

/// Hermitized P = a sum_x pi(x) (phi(x+a) - phi(x)) / a.
SparseOperator momentum_quadratic(const LatticeSpec& spec);

}  // namespace phi4
