#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "phi4/lattice.hpp"

namespace phi4 {

using cplx = std::complex<double>;
using StateVector = Eigen::VectorXcd;
using DenseMatrix = Eigen::MatrixXcd;

/// Occupation numbers n_{k_j}, one per momentum mode.
using OccupationVector = std::vector<int>;

/// Mixed-radix indexing of the truncated Fock basis; mode 0 is least significant.
class FockBasis {
 public:
  FockBasis(int n_modes, int local_dim);
  explicit FockBasis(const LatticeSpec& spec);

  int n_modes() const { return n_modes_; }
  int local_dim() const { return local_dim_; }
  std::size_t dim() const { return dim_; }
  std::size_t stride(int mode) const { return strides_[static_cast<std::size_t>(mode)]; }

  std::size_t index(const OccupationVector& occ) const;
  OccupationVector unindex(std::size_t i) const;
  int occupation(std::size_t i, int mode) const {
    return static_cast<int>((i / stride(mode)) % static_cast<std::size_t>(local_dim_));
  }

  /// "|n0,n1,...>" label used in reports.
  std::string label(std::size_t i) const;

 private:
  int n_modes_;
  int local_dim_;
  std::size_t dim_;
  std::vector<std::size_t> strides_;
};

/// Complex sparse matrix over the truncated Fock basis. Entries with
/// magnitude below kDropTolerance are never stored.
class SparseOperator {
 public:
  using Matrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor, std::ptrdiff_t>;
  static constexpr double kDropTolerance = 1e-14;

  SparseOperator() = default;
  explicit SparseOperator(Matrix m);

  static SparseOperator identity(std::size_t dim);
  static SparseOperator zero(std::size_t dim);
  static SparseOperator diagonal(const Eigen::VectorXcd& diag);
  static SparseOperator from_dense(const DenseMatrix& m);

  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  std::size_t nonzeros() const { return static_cast<std::size_t>(m_.nonZeros()); }
  std::size_t max_row_nonzeros() const;

  SparseOperator adjoint() const;
  DenseMatrix to_dense() const;
  bool is_hermitian(double tol = 1e-12) const;
  bool is_diagonal() const;
  /// Largest entrywise modulus of (this - other).
  double max_abs_diff(const SparseOperator& other) const;
  cplx trace() const;

  StateVector apply(const StateVector& v) const;

  SparseOperator& operator+=(const SparseOperator& o);
  SparseOperator& operator-=(const SparseOperator& o);
  SparseOperator& operator*=(cplx s);

  friend SparseOperator operator+(SparseOperator a, const SparseOperator& b) { return a += b; }
  friend SparseOperator operator-(SparseOperator a, const SparseOperator& b) { return a -= b; }
  friend SparseOperator operator*(cplx s, SparseOperator a) { return a *= s; }
  friend SparseOperator operator*(SparseOperator a, cplx s) { return a *= s; }
  friend SparseOperator operator*(const SparseOperator& a, const SparseOperator& b);

 private:
  void prune();
  Matrix m_;
};

enum class LadderKind { kRaise, kLower };

/// Dense operator acting on a small set of modes; the first listed mode is
/// the least significant digit of the local index.
struct LocalOperator {
  std::vector<int> modes;
  DenseMatrix matrix;

  std::size_t local_dim() const { return static_cast<std::size_t>(matrix.rows()); }
};

/// Single-mode ladder matrix a^dagger = sum_s sqrt(s+1)|s+1><s| (or its adjoint).
DenseMatrix single_mode_ladder(int local_dim, LadderKind kind);

/// Precomputed gather/scatter indices for repeated local applications on one support.
struct LocalPlan {
  std::vector<int> modes;
  std::vector<std::size_t> bases;    ///< basis indices with all support digits zero
  std::vector<std::size_t> offsets;  ///< local index -> global offset
};

LocalPlan make_local_plan(const FockBasis& basis, const std::vector<int>& modes);
/// v <- m v on the plan's support; m must be offsets.size() square.
void apply_in_place(const LocalPlan& plan, const DenseMatrix& m, StateVector& v);

SparseOperator embed(const FockBasis& basis, const LocalOperator& op);
StateVector apply_local(const FockBasis& basis, const LocalOperator& op, const StateVector& v);

SparseOperator ladder(const LatticeSpec& spec, int mode, LadderKind kind);
SparseOperator number_operator(const LatticeSpec& spec, int mode);

/// phi_k = (a_k + a^dagger_{-k}) / sqrt(2 omega(k)).
SparseOperator field_mode(const LatticeSpec& spec, int mode);
/// pi_k = -i sqrt(omega(k)/2) (a_k - a^dagger_{-k}).
SparseOperator conjugate_mode(const LatticeSpec& spec, int mode);

/// phi(x) = L^{-1/2} sum_k phi_k e^{i k x} at site index x.
SparseOperator position_field(const LatticeSpec& spec, int site);
SparseOperator position_momentum(const LatticeSpec& spec, int site);

StateVector basis_state(const FockBasis& basis, const OccupationVector& occ);

/// Rejects states whose norm differs from one by more than tol.
void require_normalized(const StateVector& v, double tol = 1e-10);

StateVector apply(const SparseOperator& op, const StateVector& v);
cplx expectation(const SparseOperator& op, const StateVector& v);

/// <psi| phi(x) phi(y) |psi> for site indices x, y.
cplx two_point(const LatticeSpec& spec, const StateVector& state, int x, int y);

}  // namespace phi4
