#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "phi4/ansatz.hpp"
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

Eigen::VectorXd random_theta(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::VectorXd t(static_cast<Eigen::Index>(n));
  for (auto& x : t) x = u(rng);
  return t;
}

AnsatzOptions restricted() {
  AnsatzOptions o;
  o.max_transition = 2;
  o.max_level = 2;
  o.include_mirror = false;
  o.forms = GeneratorForms::kSymmetric;
  return o;
}
}  // namespace

TEST_CASE("minimal T1") {
  AnsatzOptions o;
  o.max_transition = 1;
  o.forms = GeneratorForms::kSymmetric;
  const auto g = build_t1(spec_of(1, 1.0, 0.0, 2), o);
  REQUIRE(g.size() == 1);
  const auto p = g[0].pauli_form(QubitLayout::single_mode(2));
  REQUIRE(p.size() == 1);
  CHECK(p.terms()[0].axes_string() == "X");
}

TEST_CASE("T1 respects momentum reflection") {
  const auto s = spec_of(4, 1.0);
  const FockBasis b(s);
  const auto r = reflection_operator(s);
  for (auto forms : {GeneratorForms::kSymmetric, GeneratorForms::kAntisymmetric}) {
    AnsatzOptions o;
    o.forms = forms;
    for (const auto& g : build_t1(s, o)) {
      const auto x = embed(b, g.action());
      CHECK((r * x - x * r).to_dense().cwiseAbs().maxCoeff() < 1e-14);
    }
    for (const auto& g : build_t2_paired(s, o)) {
      const auto x = embed(b, g.action());
      CHECK((r * x - x * r).to_dense().cwiseAbs().maxCoeff() < 1e-14);
    }
  }
}

TEST_CASE("deterministic enumeration") {
  const auto s = spec_of(4, 1.0);
  AnsatzOptions o;
  const auto a = build_ucc(s, {0, 0, 0, 0}, o);
  const auto b = build_ucc(s, {0, 0, 0, 0}, o);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.generators()[i].label() == b.generators()[i].label());
  // 6 level pairs on each of modes 0, 1 (mirrored with 3) and 2
  CHECK(build_t1(s, o).size() == 18);
  // pair (1,3): 6 ordered pairs on k times 12 on the partner
  CHECK(build_t2_paired(s, o).size() == 72);
  for (std::size_t i = 1; i < a.size(); ++i)
    CHECK_FALSE(a.generators()[i].label() < a.generators()[i - 1].label());
}

TEST_CASE("self-paired modes are not double counted") {
  const auto s = spec_of(4, 1.0);
  AnsatzOptions o;
  o.max_transition = 1;
  std::set<std::string> labels;
  for (const auto& g : build_t1(s, o)) labels.insert(g.label().to_string());
  const auto t2 = build_t2_paired(s, o);
  std::size_t single_mode = 0;
  for (const auto& g : t2) {
    CHECK(labels.insert(g.label().to_string()).second);
    if (g.label().modes.size() == 1) {
      ++single_mode;
      CHECK(g.label().target[0] - g.label().source[0] == 2);
    }
  }
  // modes 0 and 2, levels (0,2) and (1,3)
  CHECK(single_mode == 4);
  o.max_transition = 3;
  for (const auto& g : build_t2_paired(s, o)) CHECK(g.label().modes.size() == 2);
}

TEST_CASE("restricted T1 term compiles to six Pauli strings") {
  const auto s = spec_of(4, 1.0);
  const FockBasis b(s);
  const auto lay = QubitLayout::single_mode(4);
  DenseMatrix sum = DenseMatrix::Zero(4, 4);
  for (const auto& g : build_t1(spec_of(1, 1.0), restricted())) sum += g.action().matrix;
  const auto p = compile(LocalOperator{{0}, sum}, lay);
  std::set<std::string> axes;
  for (const auto& t : p.terms()) axes.insert(t.axes_string());
  CHECK(axes == std::set<std::string>{"IX", "XI", "XX", "XZ", "YY", "ZX"});
}

TEST_CASE("prepare is unitary and anchored") {
  const auto s = spec_of(4, 1.0);
  const auto c = build_ucc(s, {0, 0, 0, 0}, AnsatzOptions{});
  CHECK((c.prepare(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(c.size()))) - c.reference_state()).norm() ==
        0.0);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 100; ++k) CHECK(std::abs(c.prepare(random_theta(c.size(), rng)).norm() - 1.0) < 1e-12);
  CHECK_THROWS_AS(c.prepare(Eigen::VectorXd::Zero(3)), Error);
}

TEST_CASE("two-level rotation closed form") {
  AnsatzOptions o;
  o.max_transition = 1;
  o.forms = GeneratorForms::kSymmetric;
  const auto s = spec_of(1, 1.0, 0.0, 2);
  const Circuit c(s, {0}, build_t1(s, o));
  Eigen::VectorXd th(1);
  th[0] = M_PI / 2;
  const auto v = c.prepare(th);
  CHECK(std::abs(std::abs(v[1]) - 1.0) < 1e-14);
  CHECK(std::abs(v[1] - cplx{0.0, -1.0}) < 1e-14);
}

TEST_CASE("analytic derivatives") {
  const auto s = spec_of(3, 1.0, 0.0, 3);
  AnsatzOptions o;
  o.max_transition = 2;
  o.forms = GeneratorForms::kBoth;
  const auto c = build_ucc(s, {0, 1, 0}, o);
  std::mt19937_64 rng(5);
  const auto th = random_theta(c.size(), rng, 0.5);
  std::vector<StateVector> d;
  const auto psi = c.prepare_with_derivatives(th, d);
  CHECK((psi - c.prepare(th)).norm() < 1e-13);
  const double h = 1e-5;
  for (std::size_t i = 0; i < c.size(); ++i) {
    Eigen::VectorXd tp = th;
    Eigen::VectorXd tm = th;
    tp[static_cast<Eigen::Index>(i)] += h;
    tm[static_cast<Eigen::Index>(i)] -= h;
    const StateVector fd = (c.prepare(tp) - c.prepare(tm)) / (2 * h);
    CHECK((fd - d[i]).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((c.derivative(th, i) - d[i]).norm() < 1e-12);
    CHECK(std::abs(psi.dot(d[i]).real()) < 1e-12);
  }
  Circuit one(s, {0, 0, 0}, {c.generators()[0]});
  const auto d0 = one.derivative(Eigen::VectorXd::Zero(1), 0);
  const StateVector expect =
      cplx{0.0, -1.0} * apply_local(one.basis(), c.generators()[0].action(), one.reference_state());
  CHECK((d0 - expect).norm() < 1e-14);
  CHECK_THROWS_AS(c.derivative(th, c.size()), Error);
}

TEST_CASE("Pauli generators") {
  PauliString p{{Pauli::kX, Pauli::kZ}, 0.3};
  const auto g = pauli_generator(p, QubitLayout{2, 2, 1});
  CHECK(g.action().modes == std::vector<int>{0, 1});
  const auto back = g.pauli_form(QubitLayout{2, 2, 1});
  REQUIRE(back.size() == 1);
  CHECK(back.terms()[0].axes_string() == "XZ");
  CHECK(std::abs(back.terms()[0].coefficient - 1.0) < 1e-14);
}
