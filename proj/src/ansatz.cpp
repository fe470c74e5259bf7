#include "phi4/ansatz.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <tuple>

#include <Eigen/Eigenvalues>

#include "phi4/error.hpp"

namespace phi4 {

std::string ExcitationLabel::to_string() const {
  std::ostringstream os;
  for (std::size_t k = 0; k < modes.size(); ++k) {
    if (k) os << ';';
    os << 'k' << modes[k];
    // Pauli-pool generators carry modes only
    if (k < source.size() && k < target.size()) os << ':' << source[k] << "<-" << target[k];
  }
  if (mirrored) os << "+mirror";
  os << (form == HermitianForm::kSymmetric ? "/sym" : "/anti");
  return os.str();
}

bool operator<(const ExcitationLabel& a, const ExcitationLabel& b) {
  return std::tie(a.modes, a.source, a.target, a.mirrored, a.form) <
         std::tie(b.modes, b.source, b.target, b.mirrored, b.form);
}

bool operator==(const ExcitationLabel& a, const ExcitationLabel& b) {
  return std::tie(a.modes, a.source, a.target, a.mirrored, a.form) ==
         std::tie(b.modes, b.source, b.target, b.mirrored, b.form);
}

Generator::Generator(std::string family, ExcitationLabel label, LocalOperator action)
    : family_(std::move(family)), label_(std::move(label)), action_(std::move(action)) {
  const DenseMatrix& x = action_.matrix;
  require(x.rows() == x.cols() && x.rows() > 0, ErrorCode::kDimensionMismatch, "generator must be square");
  require((x - x.adjoint()).cwiseAbs().maxCoeff() < 1e-12, ErrorCode::kNotHermitian,
          "generator must be Hermitian");
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(x);
  evals_ = es.eigenvalues();
  evecs_ = es.eigenvectors();
}

DenseMatrix Generator::rotation(double theta) const {
  if (theta == 0.0) return DenseMatrix::Identity(evecs_.rows(), evecs_.cols());
  Eigen::VectorXcd phases(evals_.size());
  for (Eigen::Index k = 0; k < evals_.size(); ++k) phases[k] = std::polar(1.0, -theta * evals_[k]);
  return evecs_ * phases.asDiagonal() * evecs_.adjoint();
}

PauliSum Generator::pauli_form(const QubitLayout& layout) const { return compile(action_, layout); }

namespace {

int level_cap(const LatticeSpec& spec, const AnsatzOptions& opts) {
  const int cap = opts.max_level < 0 ? spec.local_dim - 1 : opts.max_level;
  require(cap >= 1 && cap <= spec.local_dim - 1, ErrorCode::kInvalidArgument,
          "max_level must lie in 1..local_dim-1");
  require(opts.max_transition >= 1 && opts.max_transition <= spec.local_dim - 1,
          ErrorCode::kInvalidArgument, "max_transition must lie in 1..local_dim-1");
  return cap;
}

std::vector<HermitianForm> forms_of(GeneratorForms f) {
  switch (f) {
    case GeneratorForms::kSymmetric: return {HermitianForm::kSymmetric};
    case GeneratorForms::kAntisymmetric: return {HermitianForm::kAntisymmetric};
    case GeneratorForms::kBoth: return {HermitianForm::kSymmetric, HermitianForm::kAntisymmetric};
  }
  return {};
}

// |s><t| product over `term_modes`, identity elsewhere on `support`.
DenseMatrix hopper(const std::vector<int>& support, int d, const std::vector<int>& term_modes,
                   const std::vector<int>& s, const std::vector<int>& t) {
  Eigen::Index dim = 1;
  for (std::size_t k = 0; k < support.size(); ++k) dim *= d;
  DenseMatrix m = DenseMatrix::Zero(dim, dim);
  for (Eigen::Index c = 0; c < dim; ++c) {
    Eigen::Index r = 0;
    Eigen::Index rest = c;
    Eigen::Index stride = 1;
    bool hit = true;
    for (int mode : support) {
      const int level = static_cast<int>(rest % d);
      rest /= d;
      int out = level;
      const auto it = std::find(term_modes.begin(), term_modes.end(), mode);
      if (it != term_modes.end()) {
        const auto k = static_cast<std::size_t>(it - term_modes.begin());
        if (level != t[k]) {
          hit = false;
          break;
        }
        out = s[k];
      }
      r += out * stride;
      stride *= d;
    }
    if (hit) m(r, c) += 1.0;
  }
  return m;
}

}  // namespace

Generator make_excitation(const LatticeSpec& spec, const std::string& family, ExcitationLabel label) {
  spec.validate();
  const std::size_t n = label.modes.size();
  require(n >= 1 && n <= 2 && label.source.size() == n && label.target.size() == n,
          ErrorCode::kInvalidArgument, "excitation label must name one or two modes");
  for (std::size_t k = 0; k < n; ++k) {
    require(label.modes[k] >= 0 && label.modes[k] < spec.n_sites, ErrorCode::kInvalidArgument,
            "excitation mode out of range");
    require(label.source[k] >= 0 && label.source[k] < spec.local_dim && label.target[k] >= 0 &&
                label.target[k] < spec.local_dim,
            ErrorCode::kInvalidArgument, "excitation level out of range");
    require(label.source[k] != label.target[k], ErrorCode::kInvalidArgument,
            "excitation must change the level on every listed mode");
    require(std::abs(label.source[k] - label.target[k]) <= 4, ErrorCode::kInvalidArgument,
            "per-mode transition exceeds 4");
  }
  require(n == 1 || label.modes[0] != label.modes[1], ErrorCode::kInvalidArgument,
          "excitation modes must be distinct");

  std::vector<int> mirror_modes;
  for (int m : label.modes) mirror_modes.push_back(reflect_mode(spec, m));
  const bool self_mirror = [&] {
    // the mirrored term coincides with the primary one
    for (std::size_t k = 0; k < n; ++k) {
      const auto it = std::find(label.modes.begin(), label.modes.end(), mirror_modes[k]);
      if (it == label.modes.end()) return false;
      const auto j = static_cast<std::size_t>(it - label.modes.begin());
      if (label.source[j] != label.source[k] || label.target[j] != label.target[k]) return false;
    }
    return true;
  }();
  if (self_mirror) label.mirrored = false;

  std::set<int> sup(label.modes.begin(), label.modes.end());
  if (label.mirrored) sup.insert(mirror_modes.begin(), mirror_modes.end());
  const std::vector<int> support(sup.begin(), sup.end());

  DenseMatrix o = hopper(support, spec.local_dim, label.modes, label.source, label.target);
  if (label.mirrored) o += hopper(support, spec.local_dim, mirror_modes, label.source, label.target);
  DenseMatrix x = label.form == HermitianForm::kSymmetric ? DenseMatrix(o + o.adjoint())
                                                         : DenseMatrix(cplx{0.0, 1.0} * (o - o.adjoint()));
  return Generator(family, std::move(label), LocalOperator{support, std::move(x)});
}

Generator pauli_generator(const PauliString& p, const QubitLayout& layout) {
  require(static_cast<int>(p.axes.size()) == layout.total_qubits(), ErrorCode::kDimensionMismatch,
          "Pauli string does not match layout");
  require((1 << layout.qubits_per_mode) == layout.local_dim, ErrorCode::kUnsupported,
          "Pauli generators need a power-of-two local dimension");
  const int nq = layout.qubits_per_mode;
  std::vector<int> support;
  for (int m = 0; m < layout.n_modes; ++m)
    for (int b = 0; b < nq; ++b)
      if (p.axes[static_cast<std::size_t>(m * nq + b)] != Pauli::kI) {
        support.push_back(m);
        break;
      }
  require(!support.empty(), ErrorCode::kInvalidArgument, "identity string is not a generator");
  PauliString local;
  local.coefficient = 1.0;
  for (int m : support)
    for (int b = 0; b < nq; ++b) local.axes.push_back(p.axes[static_cast<std::size_t>(m * nq + b)]);
  PauliSum sum(static_cast<int>(local.axes.size()));
  sum.add(local);
  sum.canonicalize();
  // qubit index has the first support mode most significant; local Fock index
  // has it least significant
  const DenseMatrix q = sum.to_matrix();
  const auto dim = q.rows();
  const auto ns = static_cast<int>(support.size());
  auto to_fock = [&](Eigen::Index qi) {
    Eigen::Index f = 0;
    Eigen::Index stride = 1;
    for (int k = 0; k < ns; ++k) {
      const Eigen::Index level = (qi >> ((ns - 1 - k) * nq)) & ((1 << nq) - 1);
      f += level * stride;
      stride *= layout.local_dim;
    }
    return f;
  };
  DenseMatrix m(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r)
    for (Eigen::Index c = 0; c < dim; ++c) m(to_fock(r), to_fock(c)) = q(r, c);
  ExcitationLabel label;
  label.modes = support;
  return Generator("pauli:" + p.axes_string(), std::move(label), LocalOperator{support, std::move(m)});
}

std::vector<Generator> build_t1(const LatticeSpec& spec, const AnsatzOptions& opts) {
  const int cap = level_cap(spec, opts);
  std::vector<Generator> out;
  for (int k = 0; k < spec.n_sites; ++k) {
    if (reflect_mode(spec, k) < k) continue;
    for (int s = 0; s <= cap; ++s)
      for (int t = s + 1; t <= cap && t - s <= opts.max_transition; ++t)
        for (HermitianForm f : forms_of(opts.forms)) {
          ExcitationLabel l{{k}, {s}, {t}, true, f};
          out.push_back(make_excitation(spec, "T1", std::move(l)));
        }
  }
  return out;
}

std::vector<Generator> build_t2_paired(const LatticeSpec& spec, const AnsatzOptions& opts) {
  const int cap = level_cap(spec, opts);
  std::vector<Generator> out;
  for (int k = 0; k < spec.n_sites; ++k) {
    const int kt = reflect_mode(spec, k);
    if (kt < k) continue;
    if (kt == k) {
      // Self-paired mode: the pair collapses to single-mode two-level hops,
      // which T1 already carries whenever max_transition >= 2.
      if (opts.max_transition >= 2) continue;
      for (int s = 0; s + 2 <= cap; ++s)
        for (HermitianForm f : forms_of(opts.forms))
          out.push_back(make_excitation(spec, "T2", ExcitationLabel{{k}, {s}, {s + 2}, false, f}));
      continue;
    }
    for (int s1 = 0; s1 <= cap; ++s1)
      for (int t1 = s1 + 1; t1 <= cap && t1 - s1 <= opts.max_transition; ++t1)
        for (int s2 = 0; s2 <= cap; ++s2)
          for (int t2 = 0; t2 <= cap; ++t2) {
            if (s2 == t2 || std::abs(s2 - t2) > opts.max_transition) continue;
            for (HermitianForm f : forms_of(opts.forms)) {
              ExcitationLabel l{{k, kt}, {s1, s2}, {t1, t2}, opts.include_mirror, f};
              out.push_back(make_excitation(spec, "T2", std::move(l)));
            }
          }
  }
  return out;
}

SparseOperator reflection_operator(const LatticeSpec& spec) {
  spec.validate();
  const FockBasis basis(spec);
  std::vector<Eigen::Triplet<cplx, std::ptrdiff_t>> trip;
  trip.reserve(basis.dim());
  for (std::size_t i = 0; i < basis.dim(); ++i) {
    const auto occ = basis.unindex(i);
    OccupationVector r(occ.size());
    for (int j = 0; j < spec.n_sites; ++j)
      r[static_cast<std::size_t>(reflect_mode(spec, j))] = occ[static_cast<std::size_t>(j)];
    trip.emplace_back(static_cast<std::ptrdiff_t>(basis.index(r)), static_cast<std::ptrdiff_t>(i), 1.0);
  }
  const auto n = static_cast<Eigen::Index>(basis.dim());
  SparseOperator::Matrix m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  return SparseOperator(std::move(m));
}

// ---------------------------------------------------------------------------

Circuit::Circuit(const LatticeSpec& spec, OccupationVector reference, std::vector<Generator> generators)
    : basis_(spec), reference_(std::move(reference)) {
  basis_.index(reference_);
  for (auto& g : generators) append(std::move(g));
}

Circuit::Circuit(const LatticeSpec& spec) : basis_(spec) {}

Circuit Circuit::from_state(const LatticeSpec& spec, StateVector initial, std::vector<Generator> generators) {
  Circuit c(spec);
  require(static_cast<std::size_t>(initial.size()) == c.basis_.dim(), ErrorCode::kDimensionMismatch,
          "initial state does not match basis");
  require_normalized(initial);
  c.initial_ = std::move(initial);
  for (auto& g : generators) c.append(std::move(g));
  return c;
}

void Circuit::append(Generator g) {
  require(g.action().modes.size() <= 4, ErrorCode::kUnsupported, "generator support too large");
  plans_.push_back(make_local_plan(basis_, g.action().modes));
  generators_.push_back(std::move(g));
}

void Circuit::check_theta(const Eigen::VectorXd& theta) const {
  require(static_cast<std::size_t>(theta.size()) == generators_.size(), ErrorCode::kDimensionMismatch,
          "parameter count does not match generator count");
  require(theta.allFinite(), ErrorCode::kNumerical, "parameters must be finite");
}

StateVector Circuit::reference_state() const {
  return reference_.empty() ? initial_ : basis_state(basis_, reference_);
}

StateVector Circuit::prepare(const Eigen::VectorXd& theta) const {
  check_theta(theta);
  StateVector v = reference_state();
  for (std::size_t i = 0; i < generators_.size(); ++i)
    apply_in_place(plans_[i], generators_[i].rotation(theta[static_cast<Eigen::Index>(i)]), v);
  return v;
}

StateVector Circuit::derivative(const Eigen::VectorXd& theta, std::size_t i) const {
  check_theta(theta);
  require(i < generators_.size(), ErrorCode::kInvalidArgument, "parameter index out of range");
  StateVector v = reference_state();
  for (std::size_t j = 0; j < generators_.size(); ++j) {
    apply_in_place(plans_[j], generators_[j].rotation(theta[static_cast<Eigen::Index>(j)]), v);
    if (j == i) apply_in_place(plans_[j], cplx{0.0, -1.0} * generators_[j].action().matrix, v);
  }
  return v;
}

StateVector Circuit::prepare_with_derivatives(const Eigen::VectorXd& theta,
                                              std::vector<StateVector>& derivs) const {
  check_theta(theta);
  const std::size_t n = generators_.size();
  derivs.assign(n, StateVector());
  StateVector v = reference_state();
  if (n == 0) return v;

  // Consecutive gates on the same support form a run; later runs act on a
  // derivative state as one fused matrix each.
  std::vector<std::size_t> run_begin;
  for (std::size_t i = 0; i < n; ++i)
    if (i == 0 || plans_[i].modes != plans_[i - 1].modes) run_begin.push_back(i);
  run_begin.push_back(n);
  const std::size_t runs = run_begin.size() - 1;

  std::vector<DenseMatrix> gates(n);
  for (std::size_t i = 0; i < n; ++i) gates[i] = generators_[i].rotation(theta[static_cast<Eigen::Index>(i)]);

  std::vector<DenseMatrix> fused(runs);
  std::vector<std::size_t> run_of(n);
  for (std::size_t r = 0; r < runs; ++r) {
    const std::size_t a = run_begin[r];
    const std::size_t b = run_begin[r + 1];
    // suffix products U_{b-1} ... U_{i+1}, then fold -i X_i into them
    DenseMatrix suffix = DenseMatrix::Identity(gates[a].rows(), gates[a].cols());
    std::vector<DenseMatrix> lifted(b - a);
    for (std::size_t i = b; i-- > a;) {
      lifted[i - a] = suffix * (cplx{0.0, -1.0} * generators_[i].action().matrix);
      suffix = suffix * gates[i];
      run_of[i] = r;
    }
    fused[r] = suffix;
    for (std::size_t i = a; i < b; ++i) {
      apply_in_place(plans_[i], gates[i], v);
      derivs[i] = v;
      apply_in_place(plans_[i], lifted[i - a], derivs[i]);
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t r = run_of[i] + 1; r < runs; ++r) apply_in_place(plans_[run_begin[r]], fused[r], derivs[i]);
  return v;
}

std::size_t Circuit::rotation_count(const QubitLayout& layout) const {
  std::size_t total = 0;
  for (const auto& g : generators_) total += g.pauli_form(layout).size();
  return total;
}

std::size_t Circuit::distinct_pauli_count(const QubitLayout& layout) const {
  std::set<std::string> seen;
  for (const auto& g : generators_) {
    const PauliSum p = g.pauli_form(layout);
    for (const auto& t : p.terms()) seen.insert(t.axes_string());
  }
  return seen.size();
}

Circuit build_ucc(const LatticeSpec& spec, const OccupationVector& reference, const AnsatzOptions& opts) {
  std::vector<Generator> gens;
  if (opts.include_t1)
    for (auto& g : build_t1(spec, opts)) gens.push_back(std::move(g));
  if (opts.include_t2)
    for (auto& g : build_t2_paired(spec, opts)) gens.push_back(std::move(g));
  std::stable_sort(gens.begin(), gens.end(),
                   [](const Generator& a, const Generator& b) { return a.label() < b.label(); });
  return Circuit(spec, reference, std::move(gens));
}

}  // namespace phi4
