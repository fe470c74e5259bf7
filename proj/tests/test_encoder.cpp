#include <cmath>
#include <random>
#include <set>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "phi4/encoder.hpp"
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

std::set<std::string> axes_of(const PauliSum& p) {
  std::set<std::string> out;
  for (const auto& t : p.terms()) out.insert(t.axes_string());
  return out;
}
}  // namespace

TEST_CASE("single-mode ladder counts") {
  const auto lay2 = QubitLayout::single_mode(2);
  const auto a = compile(LocalOperator{{0}, single_mode_ladder(2, LadderKind::kLower)}, lay2);
  CHECK(a.size() == 2);
  CHECK(axes_of(a) == std::set<std::string>{"X", "Y"});
  const DenseMatrix x = single_mode_ladder(2, LadderKind::kLower) + single_mode_ladder(2, LadderKind::kRaise);
  const auto ax = compile(LocalOperator{{0}, x}, lay2);
  REQUIRE(ax.size() == 1);
  CHECK(ax.terms()[0].axes_string() == "X");
  CHECK(ax.is_hermitian());
  // cancellation: merged count at most half of the separate counts
  const auto ad = compile(LocalOperator{{0}, single_mode_ladder(2, LadderKind::kRaise)}, lay2);
  CHECK(2 * ax.size() <= a.size() + ad.size());

  const auto lay4 = QubitLayout::single_mode(4);
  const auto ad4 = compile(LocalOperator{{0}, single_mode_ladder(4, LadderKind::kRaise)}, lay4);
  CHECK(ad4.size() == 8);
}

TEST_CASE("round trip on random two-mode operators") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  for (int d : {2, 3, 4}) {
    const auto s = spec_of(3, 1.0, 0.0, d);
    const FockBasis b(s);
    const auto lay = QubitLayout::for_spec(s);
    const int ld = d * d;
    DenseMatrix m(ld, ld);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = {nd(rng), nd(rng)};
    const LocalOperator op{{0, 2}, m};
    const auto sum = compile(op, lay);
    const auto back = reconstruct(sum, lay);
    CHECK(back.max_abs_diff(embed(b, op)) < 1e-12);
    // sparse path agrees with the local path
    const auto sum2 = compile(embed(b, op), lay);
    CHECK(sum2.serialize() == sum.serialize());
  }
}

TEST_CASE("support detection") {
  const auto s = spec_of(4, 1.0);
  const FockBasis b(s);
  CHECK(operator_support(b, number_operator(s, 2)) == std::vector<int>{2});
  CHECK(operator_support(b, field_mode(s, 1)) == std::vector<int>{1, 3});
  CHECK(operator_support(b, SparseOperator::identity(b.dim())).empty());
  CHECK_THROWS_AS(compile(build_interaction(spec_of(4, 1.0, 1.0)), QubitLayout::for_spec(s)), Error);
}

TEST_CASE("padding is never reached") {
  const auto lay = QubitLayout::single_mode(3);
  PauliSum x(2);
  x.add({{Pauli::kI, Pauli::kX}, 1.0});
  x.canonicalize();
  CHECK_THROWS_AS(reconstruct(x, lay), Error);
  const auto a = compile(LocalOperator{{0}, single_mode_ladder(3, LadderKind::kRaise)}, lay);
  CHECK_NOTHROW(reconstruct(a, lay));
}

TEST_CASE("Hamiltonian compile") {
  const auto free1 = compile_hamiltonian(spec_of(1, 1.0, 0.0, 2));
  for (const auto& t : free1.sum.terms())
    for (Pauli p : t.axes) CHECK((p == Pauli::kI || p == Pauli::kZ));

  const auto s2 = spec_of(2, 1.0, 1.0, 4);
  const auto c2 = compile_hamiltonian(s2);
  CHECK(c2.sum.is_hermitian());
  CHECK(reconstruct(c2.sum, QubitLayout::for_spec(s2)).max_abs_diff(build_hamiltonian(s2)) < 1e-12);
  for (int n : {2, 3, 4}) {
    const auto c = compile_hamiltonian(spec_of(n, 1.0, 1.0, 4));
    CHECK(c.within_bound);
    CHECK(static_cast<double>(c.term_count) <= 8.0 * n * n * n * 6.0);
  }
}

TEST_CASE("serialization round trip") {
  const auto s = spec_of(2, 0.7, 3.0, 2);
  const auto c = compile_hamiltonian(s);
  const auto text = c.sum.serialize();
  const auto back = PauliSum::parse(text);
  CHECK(back.serialize() == text);
  CHECK((back.to_matrix() - c.sum.to_matrix()).norm() < 1e-12);
  CHECK_THROWS_AS(PauliSum::parse("1.0 0.0 XQ\n"), Error);
  CHECK_THROWS_AS(PauliSum::parse("nonsense\n"), Error);
}

TEST_CASE("field basis operators") {
  for (int nq : {1, 2, 3, 5}) {
    const double pm = 1.7;
    const auto [phi, pi] = field_basis_ops(nq, pm);
    const auto m = phi.rows();
    CHECK(std::abs(phi(0, 0).real() - phi(1, 1).real() - 2 * pm / static_cast<double>(m)) < 1e-13);
    CHECK((pi - pi.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<DenseMatrix> ep(pi);
    Eigen::SelfAdjointEigenSolver<DenseMatrix> ef(phi);
    // both spectra are uniform grids symmetric about zero; ratio fixed by the DFT
    const Eigen::VectorXd r = ep.eigenvalues().array() / ef.eigenvalues().array();
    CHECK(r.maxCoeff() - r.minCoeff() < 1e-10);
    const double spacing = 2 * pm / static_cast<double>(m);
    CHECK(r[0] == doctest::Approx(2 * M_PI / (static_cast<double>(m) * spacing * spacing)));
  }
}

TEST_CASE("commutator error scan decays exponentially") {
  const auto rows = commutator_error_scan(2, 8);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].error < rows[i - 1].error);
  // least-squares fit of log error against n_q
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  const double n = static_cast<double>(rows.size());
  for (const auto& r : rows) {
    const double x = r.n_q;
    const double y = std::log(r.error);
    sx += x; sy += y; sxx += x * x; sxy += x * y; syy += y * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double r2 = std::pow(n * sxy - sx * sy, 2) / ((n * sxx - sx * sx) * (n * syy - sy * sy));
  CHECK(slope < 0);
  CHECK(r2 > 0.9);
  CHECK(commutator_error(4, 2 * default_commutator_rule(4)) != doctest::Approx(rows[2].error));
}

TEST_CASE("Gaussian truncation scan decays double exponentially") {
  const auto rows = gaussian_truncation_scan(1, 6);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].error < rows[i - 1].error);
  for (std::size_t i = 2; i < rows.size(); ++i) CHECK(rows[i].error < 10.0 * rows[i - 1].error * rows[i - 1].error);
  CHECK(gaussian_tail_mass(INFINITY) == 0.0);
}
