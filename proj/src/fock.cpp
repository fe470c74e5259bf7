#include "phi4/fock.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "phi4/error.hpp"

namespace phi4 {

FockBasis::FockBasis(int n_modes, int local_dim) : n_modes_(n_modes), local_dim_(local_dim) {
  require(n_modes >= 1 && local_dim >= 2, ErrorCode::kInvalidArgument,
          "Fock basis needs at least one mode and two levels");
  dim_ = 1;
  strides_.resize(static_cast<std::size_t>(n_modes));
  for (int m = 0; m < n_modes; ++m) {
    strides_[static_cast<std::size_t>(m)] = dim_;
    dim_ *= static_cast<std::size_t>(local_dim);
    require(dim_ <= kMaxDenseDimension, ErrorCode::kGuardExceeded,
            "Fock dimension exceeds 2^20");
  }
}

FockBasis::FockBasis(const LatticeSpec& spec) : FockBasis(spec.n_sites, spec.local_dim) {}

std::size_t FockBasis::index(const OccupationVector& occ) const {
  require(occ.size() == static_cast<std::size_t>(n_modes_), ErrorCode::kInvalidArgument,
          "occupation vector length must equal the number of modes");
  std::size_t i = 0;
  for (int m = 0; m < n_modes_; ++m) {
    const int n = occ[static_cast<std::size_t>(m)];
    require(n >= 0 && n < local_dim_, ErrorCode::kInvalidArgument,
            "occupation out of range 0..local_dim-1");
    i += static_cast<std::size_t>(n) * stride(m);
  }
  return i;
}

OccupationVector FockBasis::unindex(std::size_t i) const {
  require(i < dim_, ErrorCode::kInvalidArgument, "basis index out of range");
  OccupationVector occ(static_cast<std::size_t>(n_modes_));
  for (int m = 0; m < n_modes_; ++m) occ[static_cast<std::size_t>(m)] = occupation(i, m);
  return occ;
}

std::string FockBasis::label(std::size_t i) const {
  std::ostringstream os;
  os << '|';
  for (int m = 0; m < n_modes_; ++m) {
    if (m) os << ',';
    os << occupation(i, m);
  }
  os << "⟩";
  return os.str();
}

// ---------------------------------------------------------------------------

SparseOperator::SparseOperator(Matrix m) : m_(std::move(m)) {
  require(m_.rows() == m_.cols(), ErrorCode::kDimensionMismatch, "operator must be square");
  prune();
}

void SparseOperator::prune() {
  m_.prune([](const Eigen::Index&, const Eigen::Index&, const cplx& v) {
    return std::abs(v) >= kDropTolerance;
  });
  m_.makeCompressed();
}

SparseOperator SparseOperator::identity(std::size_t dim) {
  Matrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  m.setIdentity();
  return SparseOperator(std::move(m));
}

SparseOperator SparseOperator::zero(std::size_t dim) {
  return SparseOperator(Matrix(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)));
}

SparseOperator SparseOperator::diagonal(const Eigen::VectorXcd& diag) {
  const auto n = diag.size();
  Matrix m(n, n);
  m.reserve(Eigen::VectorXi::Constant(n, 1));
  for (Eigen::Index i = 0; i < n; ++i) m.insert(i, i) = diag[i];
  return SparseOperator(std::move(m));
}

SparseOperator SparseOperator::from_dense(const DenseMatrix& d) {
  require(d.rows() == d.cols(), ErrorCode::kDimensionMismatch, "operator must be square");
  std::vector<Eigen::Triplet<cplx, std::ptrdiff_t>> trip;
  for (Eigen::Index r = 0; r < d.rows(); ++r)
    for (Eigen::Index c = 0; c < d.cols(); ++c)
      if (std::abs(d(r, c)) >= kDropTolerance) trip.emplace_back(r, c, d(r, c));
  Matrix m(d.rows(), d.cols());
  m.setFromTriplets(trip.begin(), trip.end());
  return SparseOperator(std::move(m));
}

std::size_t SparseOperator::max_row_nonzeros() const {
  std::size_t best = 0;
  for (Eigen::Index r = 0; r < m_.outerSize(); ++r) {
    std::size_t count = 0;
    for (Matrix::InnerIterator it(m_, r); it; ++it) ++count;
    best = std::max(best, count);
  }
  return best;
}

SparseOperator SparseOperator::adjoint() const {
  return SparseOperator(Matrix(m_.adjoint()));
}

DenseMatrix SparseOperator::to_dense() const { return DenseMatrix(m_); }

bool SparseOperator::is_hermitian(double tol) const {
  return max_abs_diff(adjoint()) <= tol;
}

bool SparseOperator::is_diagonal() const {
  for (Eigen::Index r = 0; r < m_.outerSize(); ++r)
    for (Matrix::InnerIterator it(m_, r); it; ++it)
      if (it.col() != r) return false;
  return true;
}

double SparseOperator::max_abs_diff(const SparseOperator& other) const {
  require(dim() == other.dim(), ErrorCode::kDimensionMismatch, "operator dimensions differ");
  const Matrix diff = m_ - other.m_;
  double best = 0.0;
  for (Eigen::Index r = 0; r < diff.outerSize(); ++r)
    for (Matrix::InnerIterator it(diff, r); it; ++it) best = std::max(best, std::abs(it.value()));
  return best;
}

cplx SparseOperator::trace() const {
  cplx t{0.0, 0.0};
  for (Eigen::Index r = 0; r < m_.outerSize(); ++r) t += m_.coeff(r, r);
  return t;
}

StateVector SparseOperator::apply(const StateVector& v) const {
  require(static_cast<std::size_t>(v.size()) == dim(), ErrorCode::kDimensionMismatch,
          "state dimension does not match operator");
  return m_ * v;
}

SparseOperator& SparseOperator::operator+=(const SparseOperator& o) {
  require(dim() == o.dim(), ErrorCode::kDimensionMismatch, "operator dimensions differ");
  m_ = m_ + o.m_;
  prune();
  return *this;
}

SparseOperator& SparseOperator::operator-=(const SparseOperator& o) {
  require(dim() == o.dim(), ErrorCode::kDimensionMismatch, "operator dimensions differ");
  m_ = m_ - o.m_;
  prune();
  return *this;
}

SparseOperator& SparseOperator::operator*=(cplx s) {
  m_ *= s;
  prune();
  return *this;
}

SparseOperator operator*(const SparseOperator& a, const SparseOperator& b) {
  require(a.dim() == b.dim(), ErrorCode::kDimensionMismatch, "operator dimensions differ");
  return SparseOperator(SparseOperator::Matrix(a.m_ * b.m_));
}

// ---------------------------------------------------------------------------

DenseMatrix single_mode_ladder(int local_dim, LadderKind kind) {
  DenseMatrix m = DenseMatrix::Zero(local_dim, local_dim);
  for (int s = 0; s + 1 < local_dim; ++s) m(s + 1, s) = std::sqrt(static_cast<double>(s + 1));
  if (kind == LadderKind::kLower) m.adjointInPlace();
  return m;
}

namespace {

// Full-space offset of every local index of a support.
std::vector<std::size_t> local_offsets(const FockBasis& basis, const std::vector<int>& modes) {
  std::size_t local = 1;
  for (std::size_t k = 0; k < modes.size(); ++k) local *= static_cast<std::size_t>(basis.local_dim());
  std::vector<std::size_t> offsets(local, 0);
  const auto d = static_cast<std::size_t>(basis.local_dim());
  for (std::size_t l = 0; l < local; ++l) {
    std::size_t rest = l;
    for (int m : modes) {
      offsets[l] += (rest % d) * basis.stride(m);
      rest /= d;
    }
  }
  return offsets;
}

bool support_is_zero(const FockBasis& basis, const std::vector<int>& modes, std::size_t i) {
  for (int m : modes)
    if (basis.occupation(i, m) != 0) return false;
  return true;
}

void check_local(const FockBasis& basis, const LocalOperator& op) {
  std::size_t local = 1;
  for (int m : op.modes) {
    require(m >= 0 && m < basis.n_modes(), ErrorCode::kInvalidArgument, "mode out of range");
    local *= static_cast<std::size_t>(basis.local_dim());
  }
  require(op.matrix.rows() == op.matrix.cols() &&
              static_cast<std::size_t>(op.matrix.rows()) == local,
          ErrorCode::kDimensionMismatch, "local matrix does not match its support");
}

}  // namespace

LocalPlan make_local_plan(const FockBasis& basis, const std::vector<int>& modes) {
  for (int m : modes)
    require(m >= 0 && m < basis.n_modes(), ErrorCode::kInvalidArgument, "mode out of range");
  LocalPlan plan;
  plan.modes = modes;
  plan.offsets = local_offsets(basis, modes);
  plan.bases.reserve(basis.dim() / plan.offsets.size());
  for (std::size_t base = 0; base < basis.dim(); ++base)
    if (support_is_zero(basis, modes, base)) plan.bases.push_back(base);
  return plan;
}

void apply_in_place(const LocalPlan& plan, const DenseMatrix& m, StateVector& v) {
  const auto local = static_cast<Eigen::Index>(plan.offsets.size());
  require(m.rows() == local && m.cols() == local, ErrorCode::kDimensionMismatch,
          "local matrix does not match plan");
  Eigen::VectorXcd in(local);
  Eigen::VectorXcd out(local);
  for (std::size_t base : plan.bases) {
    for (Eigen::Index l = 0; l < local; ++l)
      in[l] = v[static_cast<Eigen::Index>(base + plan.offsets[static_cast<std::size_t>(l)])];
    out.noalias() = m * in;
    for (Eigen::Index l = 0; l < local; ++l)
      v[static_cast<Eigen::Index>(base + plan.offsets[static_cast<std::size_t>(l)])] = out[l];
  }
}

SparseOperator embed(const FockBasis& basis, const LocalOperator& op) {
  check_local(basis, op);
  const auto offsets = local_offsets(basis, op.modes);
  const auto local = offsets.size();
  std::vector<Eigen::Triplet<cplx, std::ptrdiff_t>> trip;
  for (std::size_t base = 0; base < basis.dim(); ++base) {
    if (!support_is_zero(basis, op.modes, base)) continue;
    for (std::size_t c = 0; c < local; ++c)
      for (std::size_t r = 0; r < local; ++r) {
        const cplx v = op.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        if (std::abs(v) < SparseOperator::kDropTolerance) continue;
        trip.emplace_back(static_cast<std::ptrdiff_t>(base + offsets[r]),
                          static_cast<std::ptrdiff_t>(base + offsets[c]), v);
      }
  }
  const auto n = static_cast<Eigen::Index>(basis.dim());
  SparseOperator::Matrix m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  return SparseOperator(std::move(m));
}

StateVector apply_local(const FockBasis& basis, const LocalOperator& op, const StateVector& v) {
  check_local(basis, op);
  require(static_cast<std::size_t>(v.size()) == basis.dim(), ErrorCode::kDimensionMismatch,
          "state dimension does not match basis");
  const auto offsets = local_offsets(basis, op.modes);
  const auto local = static_cast<Eigen::Index>(offsets.size());
  StateVector out(v.size());
  Eigen::VectorXcd in_local(local);
  for (std::size_t base = 0; base < basis.dim(); ++base) {
    if (!support_is_zero(basis, op.modes, base)) continue;
    for (Eigen::Index l = 0; l < local; ++l)
      in_local[l] = v[static_cast<Eigen::Index>(base + offsets[static_cast<std::size_t>(l)])];
    const Eigen::VectorXcd out_local = op.matrix * in_local;
    for (Eigen::Index l = 0; l < local; ++l)
      out[static_cast<Eigen::Index>(base + offsets[static_cast<std::size_t>(l)])] = out_local[l];
  }
  return out;
}

SparseOperator ladder(const LatticeSpec& spec, int mode, LadderKind kind) {
  spec.validate();
  require(mode >= 0 && mode < spec.n_sites, ErrorCode::kInvalidArgument, "mode out of range");
  const FockBasis basis(spec);
  return embed(basis, LocalOperator{{mode}, single_mode_ladder(spec.local_dim, kind)});
}

SparseOperator number_operator(const LatticeSpec& spec, int mode) {
  spec.validate();
  require(mode >= 0 && mode < spec.n_sites, ErrorCode::kInvalidArgument, "mode out of range");
  const FockBasis basis(spec);
  Eigen::VectorXcd diag(static_cast<Eigen::Index>(basis.dim()));
  for (std::size_t i = 0; i < basis.dim(); ++i)
    diag[static_cast<Eigen::Index>(i)] = static_cast<double>(basis.occupation(i, mode));
  return SparseOperator::diagonal(diag);
}

SparseOperator field_mode(const LatticeSpec& spec, int mode) {
  const double w = mode_energy(spec, mode);
  SparseOperator phi = ladder(spec, mode, LadderKind::kLower) +
                       ladder(spec, reflect_mode(spec, mode), LadderKind::kRaise);
  return (1.0 / std::sqrt(2.0 * w)) * std::move(phi);
}

SparseOperator conjugate_mode(const LatticeSpec& spec, int mode) {
  const double w = mode_energy(spec, mode);
  SparseOperator pi = ladder(spec, mode, LadderKind::kLower) -
                      ladder(spec, reflect_mode(spec, mode), LadderKind::kRaise);
  return cplx{0.0, -std::sqrt(0.5 * w)} * std::move(pi);
}

namespace {

SparseOperator fourier_sum(const LatticeSpec& spec, int site,
                           SparseOperator (*mode_op)(const LatticeSpec&, int)) {
  require(site >= 0 && site < spec.n_sites, ErrorCode::kInvalidArgument, "site out of range");
  const double x = site * spec.spacing;
  const double norm = 1.0 / std::sqrt(spec.length());
  SparseOperator sum = SparseOperator::zero(spec.hilbert_dim());
  for (int j = 0; j < spec.n_sites; ++j)
    sum += std::polar(norm, momentum(spec, j) * x) * mode_op(spec, j);
  return sum;
}

}  // namespace

SparseOperator position_field(const LatticeSpec& spec, int site) {
  return fourier_sum(spec, site, &field_mode);
}

SparseOperator position_momentum(const LatticeSpec& spec, int site) {
  return fourier_sum(spec, site, &conjugate_mode);
}

StateVector basis_state(const FockBasis& basis, const OccupationVector& occ) {
  StateVector v = StateVector::Zero(static_cast<Eigen::Index>(basis.dim()));
  v[static_cast<Eigen::Index>(basis.index(occ))] = 1.0;
  return v;
}

void require_normalized(const StateVector& v, double tol) {
  require(std::abs(v.norm() - 1.0) <= tol, ErrorCode::kNotNormalized, "state is not normalized");
}

StateVector apply(const SparseOperator& op, const StateVector& v) { return op.apply(v); }

cplx expectation(const SparseOperator& op, const StateVector& v) {
  return v.dot(op.apply(v));
}

cplx two_point(const LatticeSpec& spec, const StateVector& state, int x, int y) {
  require_normalized(state);
  const SparseOperator phi_y = position_field(spec, y);
  const SparseOperator phi_x = position_field(spec, x);
  return state.dot(phi_x.apply(phi_y.apply(state)));
}

}  // namespace phi4
