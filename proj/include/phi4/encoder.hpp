#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "phi4/fock.hpp"
#include "phi4/lattice.hpp"

namespace phi4 {

enum class Pauli : std::uint8_t { kI = 0, kX = 1, kY = 2, kZ = 3 };

char pauli_char(Pauli p);

struct PauliString {
  std::vector<Pauli> axes;
  cplx coefficient{0.0, 0.0};

  std::string axes_string() const;
  std::size_t weight() const;
};

/// Canonically ordered, merged list of Pauli strings. Coefficients below
/// kDropTolerance are removed.
class PauliSum {
 public:
  static constexpr double kDropTolerance = 1e-12;

  PauliSum() = default;
  explicit PauliSum(int n_qubits) : n_qubits_(n_qubits) {}

  int n_qubits() const { return n_qubits_; }
  const std::vector<PauliString>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  /// Adds a term; call canonicalize() before reading terms.
  void add(PauliString term);
  void canonicalize();

  bool is_hermitian(double tol = kDropTolerance) const;

  /// Dense 2^n x 2^n matrix of the sum.
  DenseMatrix to_matrix() const;

  /// Lines "coeff_re coeff_im AXES".
  std::string serialize() const;
  static PauliSum parse(const std::string& text);

 private:
  int n_qubits_ = 0;
  std::vector<PauliString> terms_;
};

/// n_q = ceil(log2 d) qubits per momentum mode, modes in ascending order,
/// most significant level bit first within each mode.
struct QubitLayout {
  int n_modes = 1;
  int local_dim = 2;
  int qubits_per_mode = 1;

  static QubitLayout for_spec(const LatticeSpec& spec);
  static QubitLayout single_mode(int local_dim);
  int total_qubits() const { return n_modes * qubits_per_mode; }
};

int qubits_for_levels(int local_dim);

/// Matrix-unit expansion of a dense matrix on `levels^n_modes` states embedded
/// in `n_modes * n_q` qubits.
PauliSum compile_dense(const DenseMatrix& m, int n_modes, int local_dim);

/// Modes on which the operator acts nontrivially.
std::vector<int> operator_support(const FockBasis& basis, const SparseOperator& op);

/// Exact Pauli expansion of an operator acting on at most two modes.
PauliSum compile(const SparseOperator& op, const QubitLayout& layout);
PauliSum compile(const LocalOperator& op, const QubitLayout& layout);

/// Inverse of the expansion: rebuilds the Fock-space operator and rejects
/// sums that reach padding levels.
SparseOperator reconstruct(const PauliSum& sum, const QubitLayout& layout);

struct HamiltonianCompile {
  PauliSum sum;
  std::size_t term_count = 0;
  double bound = 0.0;  ///< 8 N^3 (d + log2 d)
  bool within_bound = false;
};

HamiltonianCompile compile_hamiltonian(const LatticeSpec& spec);

/// Field-basis operators on 2^n_q grid points: phi diagonal from Z weights,
/// pi = F^dagger diag(p) F with the centered DFT F.
std::pair<DenseMatrix, DenseMatrix> field_basis_ops(int n_q, double phi_max);

struct ScanRow {
  int n_q = 0;
  double phi_max = 0.0;
  double error = 0.0;
};

using PhiMaxRule = std::function<double(int n_q)>;

/// phi_max = sqrt(2 n_q): grid spacing and window both improve with n_q.
double default_commutator_rule(int n_q);
/// phi_max = sqrt(pi 2^n_q / 2): field and momentum grids coincide.
double default_truncation_rule(int n_q);

/// |<g|[phi,pi]|g> - i| on the discretized Gaussian ground profile.
double commutator_error(int n_q, double phi_max);
std::vector<ScanRow> commutator_error_scan(int n_q_min, int n_q_max,
                                           const PhiMaxRule& rule = default_commutator_rule);

/// Probability mass of the unit-frequency Gaussian vacuum outside |phi| <= window.
double gaussian_tail_mass(double window);
std::vector<ScanRow> gaussian_truncation_scan(int n_q_min, int n_q_max,
                                              const PhiMaxRule& rule = default_truncation_rule);

}  // namespace phi4
