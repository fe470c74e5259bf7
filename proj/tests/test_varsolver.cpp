#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "phi4/error.hpp"
#include "phi4/varsolver.hpp"

using namespace phi4;

namespace {
LatticeSpec spec_of(int n, double m0, double lambda, int d) {
  LatticeSpec s;
  s.n_sites = n;
  s.bare_mass = m0;
  s.coupling = lambda;
  s.local_dim = d;
  return s;
}

// Richardson-extrapolated central difference, O(h^4).
template <class F>
auto richardson(F f, double h) {
  using T = decltype(f(0.0));
  auto central = [&](double e) -> T { return (f(e) - f(-e)) / (2.0 * e); };
  return T((4.0 * central(h / 2.0) - central(h)) / 3.0);
}

StateVector random_state(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  StateVector v(static_cast<Eigen::Index>(dim));
  for (auto& x : v) x = cplx(g(rng), g(rng));
  return v.normalized();
}

std::vector<Generator> pauli_pool(const LatticeSpec& spec) {
  const auto layout = QubitLayout::for_spec(spec);
  const int nq = layout.total_qubits();
  std::vector<Generator> pool;
  for (int code = 1; code < (1 << (2 * nq)); ++code) {
    PauliString p;
    p.coefficient = 1.0;
    for (int q = 0; q < nq; ++q) p.axes.push_back(static_cast<Pauli>((code >> (2 * q)) & 3));
    pool.push_back(pauli_generator(p, layout));
  }
  return pool;
}

std::vector<Generator> hamiltonian_pool(const LatticeSpec& spec, const SparseOperator& h) {
  const auto layout = QubitLayout::for_spec(spec);
  std::vector<Generator> pool;
  const PauliSum sum = compile(h, layout);
  for (const auto& t : sum.terms())
    if (t.weight() > 0) pool.push_back(pauli_generator(t, layout));
  return pool;
}
}  // namespace

TEST_CASE("McLachlan C and A against finite differences") {
  const auto s = spec_of(2, 1.0, 2.0, 3);
  AnsatzOptions o;
  o.max_transition = 2;
  const Circuit c = build_ucc(s, {0, 0}, o);
  const auto h = build_hamiltonian(s);
  REQUIRE(c.size() > 4);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int draw = 0; draw < 20; ++draw) {
    Eigen::VectorXd theta(static_cast<Eigen::Index>(c.size()));
    for (auto& t : theta) t = u(rng);
    const auto sys = mclachlan_ac(c, theta, h);
    const double scale_c = std::max(1.0, sys.C.cwiseAbs().maxCoeff());
    const double scale_a = std::max(1.0, sys.A.cwiseAbs().maxCoeff());
    std::vector<StateVector> fd;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      auto shifted = [&](double e) {
        Eigen::VectorXd th = theta;
        th[i] += e;
        return th;
      };
      const double g =
          richardson([&](double e) { return expectation(h, c.prepare(shifted(e))).real(); }, 1e-3);
      CHECK(std::abs(2.0 * sys.C[i] - g) < 1e-7 * scale_c);
      fd.push_back(richardson([&](double e) { return StateVector(c.prepare(shifted(e))); }, 1e-3));
    }
    for (std::size_t i = 0; i < fd.size(); ++i)
      for (std::size_t j = 0; j < fd.size(); ++j) {
        const double a = fd[i].dot(fd[j]).real();
        CHECK(std::abs(sys.A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - a) < 1e-7 * scale_a);
      }
  }
}

TEST_CASE("VQITE energy is monotone") {
  const auto s = spec_of(2, 1.27, 5.0, 4);
  const Circuit c = build_ucc(s, {0, 0}, AnsatzOptions{});
  EvolverConfig cfg;
  cfg.max_steps = 300;
  const auto traj = vqite_run(c, jitter(c.size(), 42), build_hamiltonian(s), cfg);
  REQUIRE(traj.records.size() > 10);
  for (std::size_t k = 1; k < traj.records.size(); ++k)
    CHECK(traj.records[k].energy <= traj.records[k - 1].energy + 1e-8);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(build_hamiltonian(s).to_dense());
  CHECK(traj.final_energy >= es.eigenvalues()[0] - 1e-12);
  CHECK(traj.final_energy - es.eigenvalues()[0] < 1e-3 * std::abs(es.eigenvalues()[0]));
}

TEST_CASE("VQITE at zero coupling stops immediately") {
  const auto s = spec_of(4, 1.27, 0.0, 4);
  AnsatzOptions o;
  o.forms = GeneratorForms::kAntisymmetric;
  const Circuit c = build_ucc(s, {0, 0, 0, 0}, o);
  const auto traj = vqite_run(c, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(c.size())), build_free(s), {});
  CHECK(traj.status == Termination::kConverged);
  CHECK(traj.records.size() == 1);
  CHECK(traj.final_energy == doctest::Approx(vacuum_energy(s)).epsilon(1e-14));
}

TEST_CASE("zero deflation weight changes nothing") {
  const auto s = spec_of(2, 1.27, 1.0, 4);
  const Circuit c = build_ucc(s, {1, 0}, AnsatzOptions{});
  const auto h = build_hamiltonian(s);
  EvolverConfig cfg;
  cfg.max_steps = 30;
  const Eigen::VectorXd th0 = jitter(c.size(), 7);
  const auto plain = vqite_run(c, th0, h, cfg);
  const auto deflated = vqite_run(c, th0, DeflatedOperator(h, {StateVector::Unit(16, 0)}, 0.0), cfg);
  REQUIRE(plain.records.size() == deflated.records.size());
  for (std::size_t k = 0; k < plain.records.size(); ++k)
    CHECK(plain.records[k].energy == doctest::Approx(deflated.records[k].energy).epsilon(1e-13));
}

TEST_CASE("excited search finds the first excited state") {
  const auto s = spec_of(2, 1.27, 1.0, 4);
  const auto h = build_hamiltonian(s);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h.to_dense());
  const Circuit g = build_ucc(s, {0, 0}, AnsatzOptions{});
  EvolverConfig cfg;
  cfg.max_steps = 3000;
  const auto ground = vqite_run(g, jitter(g.size(), 42), h, cfg);
  const Circuit e = build_ucc(s, {1, 0}, AnsatzOptions{});
  const StateVector target = es.eigenvectors().col(1);
  const auto exc = excited_run(e, jitter(e.size(), 43), h, {ground.final_state}, cfg, target);
  CHECK(exc.final_energy == doctest::Approx(es.eigenvalues()[1]).epsilon(1e-4));
  CHECK(1.0 - exc.records.back().fidelity < 1e-3);
}

TEST_CASE("Trotter-complete layered evolution") {
  // d = 2 keeps H diagonal at N = 2, so start from a superposition; d = 4 is the non-commuting case
  for (int d : {2, 4}) {
    CAPTURE(d);
    const auto s = spec_of(2, 1.0, 1.0, d);
    const auto h = build_hamiltonian(s);
    EvolverConfig cfg;
    cfg.step = 0.01;
    cfg.max_steps = 60;
    std::mt19937_64 rng(static_cast<unsigned long long>(d));
    const auto r = layered_real_time_run(s, {0, 0}, hamiltonian_pool(s, h), h, cfg, random_state(h.dim(), rng));
    REQUIRE(r.trajectory.records.size() == 61);
    REQUIRE(r.step_error.size() == 60);
    double sum = 0.0;
    for (std::size_t k = 0; k < r.trajectory.records.size(); ++k) {
      CHECK(std::sqrt(std::max(0.0, r.trajectory.records[k].delta2)) < 1e-8);
      CHECK(r.exact_distance[k] <= sum + 1e-12);
      CHECK(r.infidelity[k] <= sum + 1e-12);
      if (k < r.step_error.size()) sum += r.step_error[k];
    }
    if (d == 4) CHECK(r.exact_distance.back() > 1e-8);
  }
}

TEST_CASE("real-time evolution of an eigenstate keeps its energy") {
  const auto s = spec_of(2, 1.27, 3.0, 4);
  const auto h = build_hamiltonian(s);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h.to_dense());
  const Circuit base = build_ucc(s, {0, 0}, AnsatzOptions{});
  const Circuit c = Circuit::from_state(s, es.eigenvectors().col(2), base.generators());
  EvolverConfig cfg;
  cfg.max_steps = 100;
  const auto traj = real_time_run(c, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(c.size())),
                                  [&](double) { return h; }, cfg);
  for (const auto& rec : traj.records) CHECK(std::abs(rec.energy - es.eigenvalues()[2]) < 1e-8);
}

TEST_CASE("adaptive growth") {
  const auto s = spec_of(2, 1.0, 1.0, 2);
  const auto h = build_hamiltonian(s);
  const auto pool = pauli_pool(s);
  REQUIRE(pool.size() == 15);

  std::mt19937_64 rng(17);
  const StateVector psi0 = random_state(h.dim(), rng);

  SUBCASE("to zero") {
    Circuit c = Circuit::from_state(s, psi0, {});
    Eigen::VectorXd theta;
    const auto r = adaptive_grow(c, theta, h, 0.0, pool);
    CHECK(r.reached_cut);
    CHECK(r.delta.back() < 1e-8);
    CHECK(r.appended.size() <= pool.size());
    CHECK(r.appended.size() >= 1);
    for (std::size_t k = 1; k < r.delta.size(); ++k) CHECK(r.delta[k] < r.delta[k - 1]);
    CHECK(c.size() == r.appended.size());
    CHECK(static_cast<std::size_t>(theta.size()) == c.size());
  }
  SUBCASE("to a finite cut") {
    Circuit c = Circuit::from_state(s, psi0, {});
    Eigen::VectorXd theta;
    Circuit probe = c;
    Eigen::VectorXd th2;
    const double d0 = adaptive_grow(probe, th2, h, 1e9, pool).delta.front();
    const auto r = adaptive_grow(c, theta, h, 0.5 * d0, pool);
    CHECK(r.reached_cut);
    CHECK(r.delta.back() <= 0.5 * d0);
    CHECK(r.delta[r.delta.size() - 2] > 0.5 * d0);
  }
  SUBCASE("empty pool") {
    Circuit c = Circuit::from_state(s, psi0, {});
    Eigen::VectorXd theta;
    const auto r = adaptive_grow(c, theta, h, 0.0, {});
    CHECK_FALSE(r.reached_cut);
    CHECK(r.tolerance_floor);
  }
}

TEST_CASE("gradient descent and kernel rate") {
  const auto s = spec_of(2, 1.27, 1.0, 4);
  const auto h = build_hamiltonian(s);
  const Circuit c = build_ucc(s, {0, 0}, AnsatzOptions{});
  EvolverConfig cfg;
  cfg.max_steps = 200;
  cfg.learning_rate = 0.05;
  const auto traj = gd_run(c, jitter(c.size(), 1), h, cfg);
  CHECK(traj.records.back().energy < traj.records.front().energy);

  DenseMatrix z(2, 2);
  z << 1.0, 0.0, 0.0, -1.0;
  CHECK(qntk_rate(SparseOperator::from_dense(z), 0.25, 1) == doctest::Approx(0.125));
}

TEST_CASE("jitter is seeded") {
  CHECK(jitter(5, 3) == jitter(5, 3));
  CHECK(jitter(5, 3) != jitter(5, 4));
  CHECK(jitter(100, 3).cwiseAbs().maxCoeff() <= 0.01);
}
