#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "phi4/error.hpp"
#include "phi4/hamiltonian.hpp"

using namespace phi4;

namespace {
LatticeSpec spec_of(int n, double m0, double lambda = 0.0, int d = 4) {
  LatticeSpec s;
  s.n_sites = n;
  s.bare_mass = m0;
  s.coupling = lambda;
  s.local_dim = d;
  return s;
}

Eigen::VectorXd spectrum(const SparseOperator& h) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h.to_dense());
  return es.eigenvalues();
}
}  // namespace

TEST_CASE("free Hamiltonian one-particle energies") {
  const auto s = spec_of(4, 0.369);
  const auto h0 = build_free(s);
  CHECK(h0.is_diagonal());
  CHECK(h0.is_hermitian());
  const FockBasis b(s);
  const double expect[4] = {2.754, 3.027, 3.170, 3.027};
  for (int j = 0; j < 4; ++j) {
    OccupationVector occ(4, 0);
    occ[static_cast<std::size_t>(j)] = 1;
    const double e = expectation(h0, basis_state(b, occ)).real();
    CHECK(std::abs(e - expect[j]) < 3e-3);
  }
  CHECK(spectrum(h0)[0] == doctest::Approx(vacuum_energy(s)).epsilon(1e-12));
}

TEST_CASE("heavy mass keeps one-particle levels below two-particle levels") {
  const auto s = spec_of(4, 1.27);
  const auto h0 = build_free(s);
  const FockBasis b(s);
  double max_one = 0.0;
  double min_two = 1e9;
  for (std::size_t i = 0; i < b.dim(); ++i) {
    const auto occ = b.unindex(i);
    int n = 0;
    for (int v : occ) n += v;
    const double e = h0.matrix().coeff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
    if (n == 1) max_one = std::max(max_one, e);
    if (n == 2) min_two = std::min(min_two, e);
  }
  CHECK(max_one < min_two);
}

TEST_CASE("interaction structure") {
  CHECK(build_interaction(spec_of(3, 1.0, 0.0)).nonzeros() == 0);
  std::size_t prev = 0;
  for (int n : {2, 3, 4}) {
    const auto s = spec_of(n, 1.0, 1.0);
    const auto hi = build_interaction(s);
    CHECK(hi.is_hermitian());
    // each summand contributes at most 2^4 entries per row
    CHECK(hi.max_row_nonzeros() <= static_cast<std::size_t>(16 * n * n * n));
    CHECK(hi.max_row_nonzeros() > prev);
    prev = hi.max_row_nonzeros();
  }
}

TEST_CASE("exact interacting spectrum at m0 = 1.27") {
  // Frozen from an independent dense construction.
  const double lambdas[4] = {0.5, 1.0, 10.0, 24.0};
  const double ground[4] = {3.72158517, 3.72282016, 3.74368413, 3.77226002};
  const double first[4] = {4.04081523, 4.04376233, 4.09266596, 4.15628635};
  for (int i = 0; i < 4; ++i) {
    const auto ev = spectrum(build_hamiltonian(spec_of(4, 1.27, lambdas[i])));
    CHECK(ev[0] == doctest::Approx(ground[i]).epsilon(1e-8));
    CHECK(ev[1] == doctest::Approx(first[i]).epsilon(1e-8));
  }
}

TEST_CASE("interpolation") {
  const auto s = spec_of(3, 0.9, 2.0, 3);
  const auto terms = build_terms(s);
  CHECK(interpolated(s, 0.0).max_abs_diff(build_free(s)) < 1e-14);
  CHECK(interpolated(s, 1.0).max_abs_diff(build_hamiltonian(s)) < 1e-13);
  const auto mid = interpolated(s, 0.5);
  CHECK(mid.max_abs_diff(0.5 * (interpolated(s, 0.0) + interpolated(s, 1.0))) < 1e-13);
  CHECK_THROWS_AS(interpolated(s, 1.5), Error);
  CHECK_THROWS_AS(interpolated(s, -0.1), Error);
}

TEST_CASE("deflated operator") {
  const auto s = spec_of(4, 1.27, 1.0);
  const auto h = build_hamiltonian(s);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h.to_dense());
  const StateVector g = es.eigenvectors().col(0);
  DeflatedOperator plain(h);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  StateVector r(static_cast<Eigen::Index>(h.dim()));
  for (auto& x : r) x = {nd(rng), nd(rng)};
  r.normalize();
  CHECK(plain.expectation(r) == doctest::Approx(expectation(h, r).real()));

  DeflatedOperator def(h, {g}, 8.0);
  CHECK(def.expectation(g) == doctest::Approx(es.eigenvalues()[0] + 8.0));
  CHECK(std::abs(def.expectation(r) - r.dot(def.to_dense() * r).real()) < 1e-12);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es2(def.to_dense());
  const StateVector e1 = es.eigenvectors().col(1);
  CHECK(std::abs(es2.eigenvectors().col(0).dot(e1)) > 0.999);

  StateVector not_orth = (g + e1).normalized();
  CHECK_THROWS_AS(DeflatedOperator(h, {g, not_orth}, 8.0), Error);
  CHECK_THROWS_AS(DeflatedOperator(h, {2.0 * g}, 8.0), Error);
}

TEST_CASE("translations and momentum") {
  const auto s = spec_of(4, 0.369, 0.481);
  const auto h = build_hamiltonian(s);
  const auto t = translation_phase(s, 1.0);
  CHECK((t * h - h * t).to_dense().cwiseAbs().maxCoeff() < 1e-12);
  for (double sv : {0.0, 0.5, 1.0}) {
    const auto hs = interpolated(s, sv);
    CHECK((t * hs - hs * t).to_dense().cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK(translation_phase(s, 0.0).max_abs_diff(SparseOperator::identity(h.dim())) < 1e-15);
  CHECK((t * t * t * t).max_abs_diff(SparseOperator::identity(h.dim())) < 1e-12);
  CHECK_THROWS_AS(translation_phase(s, 0.5), Error);

  const auto p = momentum_quadratic(spec_of(4, 0.369));
  CHECK(p.is_hermitian());
  const FockBasis b(s);
  CHECK(std::abs(expectation(p, basis_state(b, {0, 0, 0, 0}))) < 1e-12);
  const double p1 = expectation(p, basis_state(b, {0, 1, 0, 0})).real();
  const double p3 = expectation(p, basis_state(b, {0, 0, 0, 1})).real();
  CHECK(std::abs(p1) > 1e-3);
  CHECK(p1 == doctest::Approx(-p3));
}
