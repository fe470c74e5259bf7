#include "phi4/hamiltonian.hpp"

#include <cmath>
#include <numbers>

#include "phi4/error.hpp"

namespace phi4 {

SparseOperator HamiltonianTerms::full(double coupling) const {
  return free + coupling * interaction;
}

SparseOperator build_free(const LatticeSpec& spec) {
  spec.validate();
  const FockBasis basis(spec);
  const double e0 = vacuum_energy(spec);
  std::vector<double> w(static_cast<std::size_t>(spec.n_sites));
  for (int j = 0; j < spec.n_sites; ++j) w[static_cast<std::size_t>(j)] = mode_energy(spec, j) / spec.length();
  Eigen::VectorXcd diag(static_cast<Eigen::Index>(basis.dim()));
  for (std::size_t i = 0; i < basis.dim(); ++i) {
    double e = e0;
    for (int j = 0; j < spec.n_sites; ++j) e += basis.occupation(i, j) * w[static_cast<std::size_t>(j)];
    diag[static_cast<Eigen::Index>(i)] = e;
  }
  return SparseOperator::diagonal(diag);
}

SparseOperator build_interaction(const LatticeSpec& spec) {
  spec.validate();
  const int n = spec.n_sites;
  std::vector<SparseOperator> phi;
  phi.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) phi.push_back(field_mode(spec, j));
  auto at = [&](int j) -> const SparseOperator& { return phi[static_cast<std::size_t>(j)]; };

  SparseOperator sum = SparseOperator::zero(spec.hilbert_dim());
  for (int k1 = 0; k1 < n; ++k1)
    for (int k2 = 0; k2 < n; ++k2) {
      const SparseOperator p12 = at(k1) * at(k2);
      for (int k3 = 0; k3 < n; ++k3) {
        const int k4 = ((-(k1 + k2 + k3)) % n + n) % n;
        sum += p12 * (at(k3) * at(k4));
      }
    }
  const double l = spec.length();
  return (spec.coupling / 24.0 / (l * l * l)) * std::move(sum);
}

HamiltonianTerms build_terms(const LatticeSpec& spec) {
  LatticeSpec unit = spec;
  unit.coupling = 1.0;
  return HamiltonianTerms{build_free(spec), build_interaction(unit), vacuum_energy(spec)};
}

SparseOperator build_hamiltonian(const LatticeSpec& spec) {
  return build_free(spec) + build_interaction(spec);
}

SparseOperator interpolated(const HamiltonianTerms& terms, double coupling, double s) {
  require(s >= 0.0 && s <= 1.0, ErrorCode::kInvalidArgument, "interpolation s must lie in [0,1]");
  return terms.free + (s * coupling) * terms.interaction;
}

SparseOperator interpolated(const LatticeSpec& spec, double s) {
  return interpolated(build_terms(spec), spec.coupling, s);
}

// ---------------------------------------------------------------------------

DeflatedOperator::DeflatedOperator(SparseOperator base, std::vector<StateVector> found, double alpha)
    : base_(std::move(base)), found_(std::move(found)), alpha_(alpha) {
  for (std::size_t i = 0; i < found_.size(); ++i) {
    require(static_cast<std::size_t>(found_[i].size()) == base_.dim(),
            ErrorCode::kDimensionMismatch, "deflation state dimension mismatch");
    for (std::size_t j = 0; j <= i; ++j) {
      const cplx g = found_[j].dot(found_[i]);
      const double target = i == j ? 1.0 : 0.0;
      require(std::abs(g - target) <= 1e-8, ErrorCode::kInvalidArgument,
              "deflation states must be orthonormal");
    }
  }
}

StateVector DeflatedOperator::apply(const StateVector& v) const {
  StateVector out = base_.apply(v);
  for (const auto& f : found_) out += alpha_ * f.dot(v) * f;
  return out;
}

double DeflatedOperator::expectation(const StateVector& v) const {
  return v.dot(apply(v)).real();
}

std::vector<cplx> DeflatedOperator::overlaps(const StateVector& v) const {
  std::vector<cplx> out;
  out.reserve(found_.size());
  for (const auto& f : found_) out.push_back(f.dot(v));
  return out;
}

DenseMatrix DeflatedOperator::to_dense() const {
  DenseMatrix m = base_.to_dense();
  for (const auto& f : found_) m += alpha_ * f * f.adjoint();
  return m;
}

// ---------------------------------------------------------------------------

int total_momentum_index(const FockBasis& basis, std::size_t i) {
  const int n = basis.n_modes();
  int p = 0;
  for (int j = 0; j < n; ++j) p += j * basis.occupation(i, j);
  return p % n;
}

SparseOperator translation_phase(const LatticeSpec& spec, double displacement) {
  spec.validate();
  const double steps = displacement / spec.spacing;
  const double rounded = std::round(steps);
  require(std::abs(steps - rounded) <= 1e-9, ErrorCode::kInvalidArgument,
          "displacement must be a lattice multiple");
  const FockBasis basis(spec);
  const auto n = static_cast<long long>(spec.n_sites);
  const auto shift = static_cast<long long>(rounded);
  Eigen::VectorXcd diag(static_cast<Eigen::Index>(basis.dim()));
  for (std::size_t i = 0; i < basis.dim(); ++i) {
    const long long p = total_momentum_index(basis, i);
    const long long phase_index = ((p * shift) % n + n) % n;
    diag[static_cast<Eigen::Index>(i)] =
        std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(phase_index) / static_cast<double>(n));
  }
  return SparseOperator::diagonal(diag);
}

SparseOperator momentum_quadratic(const LatticeSpec& spec) {
  spec.validate();
  const int n = spec.n_sites;
  const double a = spec.spacing;
  std::vector<SparseOperator> phi;
  for (int x = 0; x < n; ++x) phi.push_back(position_field(spec, x));
  SparseOperator p = SparseOperator::zero(spec.hilbert_dim());
  for (int x = 0; x < n; ++x) {
    const SparseOperator grad =
        (1.0 / a) * (phi[static_cast<std::size_t>((x + 1) % n)] - phi[static_cast<std::size_t>(x)]);
    p += position_momentum(spec, x) * grad;
  }
  p *= a;
  return 0.5 * (p + p.adjoint());
}

}  // namespace phi4
