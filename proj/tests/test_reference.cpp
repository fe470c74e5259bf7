#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "phi4/error.hpp"
#include "phi4/reference.hpp"

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

StateVector random_state(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  StateVector v(static_cast<Eigen::Index>(dim));
  for (auto& x : v) x = cplx(g(rng), g(rng));
  return v.normalized();
}

OccupationVector occ(std::initializer_list<int> l) { return OccupationVector(l); }
}  // namespace

TEST_CASE("eigensolve of the free theory") {
  const auto s = spec_of(4, 0.369);
  const auto rep = eigensolve(build_free(s));
  CHECK(rep.max_residual < 1e-10);
  CHECK(std::abs(rep.eigenvalues[0] - 2.662) < 3e-3);
  for (Eigen::Index i = 1; i < rep.eigenvalues.size(); ++i) CHECK(rep.eigenvalues[i] >= rep.eigenvalues[i - 1]);
  // diagonal H0: every eigenvector is a single occupation state
  for (Eigen::Index i = 0; i < rep.eigenvectors.cols(); ++i)
    CHECK(rep.eigenvectors.col(i).cwiseAbs().maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));
  // the j=1, j=3 pair shares a cluster
  const FockBasis b(s);
  int i1 = -1, i3 = -1;
  for (Eigen::Index i = 0; i < rep.eigenvectors.cols(); ++i) {
    Eigen::Index k;
    rep.eigenvectors.col(i).cwiseAbs().maxCoeff(&k);
    if (b.unindex(static_cast<std::size_t>(k)) == occ({0, 1, 0, 0})) i1 = static_cast<int>(i);
    if (b.unindex(static_cast<std::size_t>(k)) == occ({0, 0, 0, 1})) i3 = static_cast<int>(i);
  }
  REQUIRE(i1 >= 0);
  REQUIRE(i3 >= 0);
  CHECK(rep.cluster_of[static_cast<std::size_t>(i1)] == rep.cluster_of[static_cast<std::size_t>(i3)]);
  CHECK(rep.cluster_containing(i1).size() == 2);
}

TEST_CASE("eigensolve guards") {
  DenseMatrix m(2, 2);
  m << 1.0, cplx(0, 1), 0.0, 1.0;
  CHECK_THROWS_AS(eigensolve(SparseOperator::from_dense(m)), Error);
  try {
    eigensolve(SparseOperator::identity(kMaxEigenDimension + 1));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kGuardExceeded);
  }
}

TEST_CASE("Taylor propagator matches the dense exponential") {
  const auto s = spec_of(2, 0.8, 3.0, 4);
  const auto h = build_hamiltonian(s);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h.to_dense());
  std::mt19937_64 rng(7);
  for (double t : {0.01, 0.7, -2.5, 40.0}) {
    const StateVector v = random_state(h.dim(), rng);
    const Eigen::VectorXcd phase = (es.eigenvalues() * (-t)).unaryExpr([](double x) { return std::polar(1.0, x); });
    const StateVector exact = es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint() * v;
    CHECK((expm_action(h, v, t) - exact).norm() < 1e-11);
  }
  const StateVector v = random_state(h.dim(), rng);
  CHECK((expm_action(h, v, 0.0) - v).norm() == 0.0);
  CHECK_THROWS_AS(expm_action(h, StateVector::Ones(3), 1.0), Error);
}

TEST_CASE("adiabatic evolution with zero coupling is trivial") {
  const auto s = spec_of(4, 1.27, 0.0);
  AdiabaticConfig c;
  c.steps = 20;
  c.dt = 0.5;
  c.checkpoints = 4;
  const auto r = adiabatic_evolve(occ({0, 1, 0, 0}), s, c);
  CHECK(r.final_infidelity < 1e-12);
  CHECK(r.path.size() == 20);
  CHECK(r.steps == 20);
  CHECK(r.tracked_cluster.size() == 2);
}

TEST_CASE("adiabatic ramp to the interacting one-particle states") {
  const auto s = spec_of(4, 0.369, 0.481);
  AdiabaticConfig c;
  c.steps = 100;
  c.dt = 1.0;
  c.checkpoints = 5;
  for (const auto& o : {occ({0, 1, 0, 0}), occ({0, 0, 0, 1})}) {
    const auto r = adiabatic_evolve(o, s, c);
    CHECK(r.final_infidelity < 2e-3);
    CHECK(r.final_subspace_fidelity > 0.999);
    CHECK(r.tracked_cluster.size() == 2);
    CHECK(std::isfinite(r.path.back().infidelity));
    CHECK(std::isnan(r.path.front().infidelity));
    CHECK(r.path.back().energy == doctest::Approx(r.tracked_energy).epsilon(1e-4));
  }
}

TEST_CASE("adiabatic error shrinks with ramp length") {
  const auto s = spec_of(4, 0.369, 0.481);
  double prev = 1.0;
  for (int steps : {25, 50, 100}) {
    AdiabaticConfig c;
    c.steps = steps;
    c.dt = 1.0;
    c.checkpoints = 5;
    const double inf = adiabatic_evolve(occ({1, 0, 0, 0}), s, c).final_infidelity;
    CHECK(inf < prev);
    prev = inf;
  }
}

TEST_CASE("crowding diagnostics") {
  const auto r = crowding_report(spec_of(4, 0.369, 0.481));
  REQUIRE(r.parity_pairs.size() == 1);
  CHECK(r.parity_pairs[0].mode == 1);
  CHECK(r.parity_pairs[0].partner == 3);
  CHECK(r.parity_pairs[0].energy == doctest::Approx(3.027).epsilon(1e-3));
  CHECK(r.collisions.empty());
  CHECK(r.free_histogram.counts.size() == r.interacting_histogram.counts.size());
  CHECK(r.free_histogram.counts != r.interacting_histogram.counts);
  CHECK(r.free_clusters != r.interacting_clusters);
  int total = 0;
  for (int c : r.interacting_histogram.counts) total += c;
  CHECK(total == 256);

  // 2 m0 = omega(k_1) with the lattice dispersion: m0^2 + 2 = 4 m0^2
  const auto hit = crowding_report(spec_of(4, std::sqrt(2.0 / 3.0)));
  REQUIRE(hit.collisions.size() == 1);
  CHECK(hit.collisions[0].multiple == 2);
  CHECK(hit.collisions[0].mode == 1);
}

TEST_CASE("subspace projector") {
  std::mt19937_64 rng(3);
  std::vector<StateVector> vs;
  for (int i = 0; i < 3; ++i) vs.push_back(random_state(16, rng));
  vs.push_back(vs[0] * cplx(0.5, 0.5) + vs[1] * 2.0);  // dependent
  const auto p = SubspaceProjector::from_vectors(vs);
  CHECK(p.dimension() == 3);
  CHECK(p.gram_error() < 1e-10);
  const DenseMatrix lam = p.to_dense();
  CHECK((lam * lam - lam).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((lam - lam.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(subspace_fidelity(vs[2], p) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(binomial(5, 2) == 10);
  CHECK(binomial(3, 4) == 0);
}

TEST_CASE("n-particle subspaces") {
  AdiabaticConfig c;
  c.steps = 50;
  c.dt = 1.0;
  const auto one = n_particle_subspace(spec_of(4, 1.27, 1.0), 1, c);
  CHECK(one.projector.dimension() == 4);
  CHECK(one.expected_dimension == 4);
  CHECK_FALSE(one.reduced);

  const auto two = n_particle_subspace(spec_of(4, 1.27, 1.0, 3), 2, c);
  CHECK(two.projector.dimension() == 10);
  CHECK_FALSE(two.reduced);
  const DenseMatrix lam = two.projector.to_dense();
  CHECK((lam * lam - lam).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((lam - lam.adjoint()).cwiseAbs().maxCoeff() < 1e-10);

  // hard-core cap: |2,0,0,0> etc. do not exist
  const auto capped = n_particle_subspace(spec_of(4, 1.27, 1.0, 2), 2, c);
  CHECK(capped.projector.dimension() == 6);
  CHECK(capped.reduced);

  // no coupling: exactly the free sector
  const auto free = n_particle_subspace(spec_of(4, 1.27, 0.0), 1, c);
  const FockBasis b(spec_of(4, 1.27));
  for (int j = 0; j < 4; ++j) {
    OccupationVector o(4, 0);
    o[static_cast<std::size_t>(j)] = 1;
    CHECK(free.projector.fidelity(basis_state(b, o)) == doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK(free.projector.fidelity(basis_state(b, occ({2, 0, 0, 0}))) < 1e-14);
}

TEST_CASE("fidelities") {
  std::mt19937_64 rng(11);
  const StateVector a = random_state(8, rng);
  CHECK(state_fidelity(a, a) == doctest::Approx(1.0));
  CHECK(state_fidelity(a, a * std::polar(1.0, 0.9)) == doctest::Approx(1.0));
  CHECK(state_fidelity(StateVector::Unit(8, 0), StateVector::Unit(8, 3)) == 0.0);
  CHECK_THROWS_AS(state_fidelity(a, 2.0 * a), Error);

  const auto p = SubspaceProjector::from_vectors({StateVector::Unit(8, 0), StateVector::Unit(8, 1)});
  CHECK(subspace_fidelity(StateVector::Unit(8, 5), p) == 0.0);
  CHECK(subspace_fidelity(StateVector::Unit(8, 1), p) == 1.0);
}

TEST_CASE("subspace fidelity bounds the squared state fidelity") {
  const auto s = spec_of(2, 1.27, 1.0);
  AdiabaticConfig c;
  c.steps = 50;
  c.dt = 1.0;
  const auto lam = n_particle_subspace(s, 1, c).projector;
  std::mt19937_64 rng(2024);
  const auto dim = static_cast<std::size_t>(lam.basis().front().size());
  for (int draw = 0; draw < 1000; ++draw) {
    const StateVector psi = random_state(dim, rng);
    std::normal_distribution<double> g;
    StateVector ref = StateVector::Zero(static_cast<Eigen::Index>(dim));
    for (const auto& q : lam.basis()) ref += cplx(g(rng), g(rng)) * q;
    ref.normalize();
    const double f = state_fidelity(ref, psi);
    REQUIRE(subspace_fidelity(psi, lam) >= f * f - 1e-14);
  }
}

TEST_CASE("momentum projection") {
  const auto s = spec_of(4, 1.27);
  const FockBasis b(s);
  const StateVector k1 = basis_state(b, occ({0, 1, 0, 0}));
  const StateVector k3 = basis_state(b, occ({0, 0, 0, 1}));
  CHECK(state_fidelity(momentum_project(k1, 1, s), k1) == doctest::Approx(1.0).epsilon(1e-14));
  const StateVector mix = (k1 + k3) / std::sqrt(2.0);
  CHECK(state_fidelity(momentum_project(mix, 1, s), k1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(state_fidelity(momentum_project(mix, 3, s), k3) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(momentum_project(k1, 2, s), Error);

  std::mt19937_64 rng(5);
  const auto t = translation_phase(s, 1.0);
  for (int p = 0; p < 4; ++p) {
    const StateVector v = momentum_project(random_state(b.dim(), rng), p, s);
    CHECK((t.apply(v) - std::polar(1.0, momentum(s, p)) * v).norm() < 1e-12);
  }
}

TEST_CASE("free level ordering") {
  const auto levels = free_levels(spec_of(4, 0.5));
  CHECK(levels[0] == occ({0, 0, 0, 0}));
  const std::vector<OccupationVector> want = {occ({1, 0, 0, 0}), occ({2, 0, 0, 0}), occ({0, 1, 0, 0}),
                                              occ({0, 0, 0, 1}), occ({3, 0, 0, 0})};
  // 3 m0 equals omega(k_1) here, so the last three are compared as a set
  CHECK(levels[1] == want[0]);
  CHECK(levels[2] == want[1]);
  std::vector<OccupationVector> tail(levels.begin() + 3, levels.begin() + 6);
  for (const auto& w : {want[2], want[3], want[4]}) CHECK(std::find(tail.begin(), tail.end(), w) != tail.end());
  CHECK(free_energy(spec_of(4, 0.5), occ({3, 0, 0, 0})) ==
        doctest::Approx(free_energy(spec_of(4, 0.5), occ({0, 1, 0, 0}))).epsilon(1e-14));
}
