#include "phi4/encoder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "phi4/error.hpp"
#include "phi4/hamiltonian.hpp"

namespace phi4 {

char pauli_char(Pauli p) {
  switch (p) {
    case Pauli::kI: return 'I';
    case Pauli::kX: return 'X';
    case Pauli::kY: return 'Y';
    case Pauli::kZ: return 'Z';
  }
  return '?';
}

std::string PauliString::axes_string() const {
  std::string s;
  s.reserve(axes.size());
  for (Pauli p : axes) s.push_back(pauli_char(p));
  return s;
}

std::size_t PauliString::weight() const {
  return static_cast<std::size_t>(std::count_if(axes.begin(), axes.end(),
                                                [](Pauli p) { return p != Pauli::kI; }));
}

void PauliSum::add(PauliString term) {
  require(static_cast<int>(term.axes.size()) == n_qubits_, ErrorCode::kDimensionMismatch,
          "Pauli string length does not match qubit count");
  terms_.push_back(std::move(term));
}

void PauliSum::canonicalize() {
  std::sort(terms_.begin(), terms_.end(),
            [](const PauliString& a, const PauliString& b) { return a.axes < b.axes; });
  std::vector<PauliString> merged;
  for (auto& t : terms_) {
    if (!merged.empty() && merged.back().axes == t.axes)
      merged.back().coefficient += t.coefficient;
    else
      merged.push_back(std::move(t));
  }
  std::erase_if(merged, [](const PauliString& t) { return std::abs(t.coefficient) < kDropTolerance; });
  terms_ = std::move(merged);
}

bool PauliSum::is_hermitian(double tol) const {
  return std::all_of(terms_.begin(), terms_.end(),
                     [tol](const PauliString& t) { return std::abs(t.coefficient.imag()) <= tol; });
}

namespace {

struct PauliMasks {
  std::uint64_t x = 0;
  std::uint64_t z = 0;
  int n_y = 0;
};

// Qubit 0 is the most significant bit of the computational index.
PauliMasks masks_of(const PauliString& t) {
  PauliMasks m;
  const auto n = t.axes.size();
  for (std::size_t q = 0; q < n; ++q) {
    const std::uint64_t bit = std::uint64_t{1} << (n - 1 - q);
    switch (t.axes[q]) {
      case Pauli::kX: m.x |= bit; break;
      case Pauli::kY: m.x |= bit; m.z |= bit; ++m.n_y; break;
      case Pauli::kZ: m.z |= bit; break;
      case Pauli::kI: break;
    }
  }
  return m;
}

cplx i_power(int k) {
  switch (((k % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

// P|c> = i^{nY} (-1)^{popcount(c & z)} |c ^ x>
template <typename Visit>
void for_each_entry(const PauliString& t, Visit&& visit) {
  const PauliMasks m = masks_of(t);
  const std::uint64_t dim = std::uint64_t{1} << t.axes.size();
  const cplx base = t.coefficient * i_power(m.n_y);
  for (std::uint64_t c = 0; c < dim; ++c) {
    const double sign = (std::popcount(c & m.z) & 1) ? -1.0 : 1.0;
    visit(c ^ m.x, c, sign * base);
  }
}

}  // namespace

DenseMatrix PauliSum::to_matrix() const {
  require(n_qubits_ <= 14, ErrorCode::kGuardExceeded, "dense Pauli reconstruction limited to 14 qubits");
  const auto dim = Eigen::Index{1} << n_qubits_;
  DenseMatrix m = DenseMatrix::Zero(dim, dim);
  for (const auto& t : terms_)
    for_each_entry(t, [&](std::uint64_t r, std::uint64_t c, cplx v) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) += v;
    });
  return m;
}

std::string PauliSum::serialize() const {
  std::ostringstream os;
  os.precision(17);
  for (const auto& t : terms_)
    os << t.coefficient.real() << ' ' << t.coefficient.imag() << ' ' << t.axes_string() << '\n';
  return os.str();
}

PauliSum PauliSum::parse(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  PauliSum sum;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double re = 0.0;
    double im = 0.0;
    std::string axes;
    require(static_cast<bool>(ls >> re >> im >> axes), ErrorCode::kSchema,
            "malformed Pauli line: " + line);
    if (first) {
      sum = PauliSum(static_cast<int>(axes.size()));
      first = false;
    }
    PauliString t;
    t.coefficient = {re, im};
    for (char ch : axes) {
      switch (ch) {
        case 'I': t.axes.push_back(Pauli::kI); break;
        case 'X': t.axes.push_back(Pauli::kX); break;
        case 'Y': t.axes.push_back(Pauli::kY); break;
        case 'Z': t.axes.push_back(Pauli::kZ); break;
        default: fail(ErrorCode::kSchema, "unknown Pauli axis in: " + line);
      }
    }
    sum.add(std::move(t));
  }
  sum.canonicalize();
  return sum;
}

// ---------------------------------------------------------------------------

int qubits_for_levels(int local_dim) {
  require(local_dim >= 2, ErrorCode::kInvalidArgument, "local_dim must be at least 2");
  int n = 0;
  while ((1 << n) < local_dim) ++n;
  return n;
}

QubitLayout QubitLayout::for_spec(const LatticeSpec& spec) {
  return QubitLayout{spec.n_sites, spec.local_dim, qubits_for_levels(spec.local_dim)};
}

QubitLayout QubitLayout::single_mode(int local_dim) {
  return QubitLayout{1, local_dim, qubits_for_levels(local_dim)};
}

namespace {

// Fock local index (mode 0 least significant) -> qubit computational index
// (mode 0 in the most significant block).
std::uint64_t fock_to_qubit(std::size_t fock, int n_modes, int local_dim, int nq) {
  std::uint64_t q = 0;
  const int total = n_modes * nq;
  for (int m = 0; m < n_modes; ++m) {
    const auto level = static_cast<std::uint64_t>(fock % static_cast<std::size_t>(local_dim));
    fock /= static_cast<std::size_t>(local_dim);
    q |= level << (total - (m + 1) * nq);
  }
  return q;
}

// Returns false when some mode block holds a padding level.
bool qubit_to_fock(std::uint64_t q, int n_modes, int local_dim, int nq, std::size_t& fock) {
  const int total = n_modes * nq;
  const std::uint64_t block = (std::uint64_t{1} << nq) - 1;
  fock = 0;
  std::size_t stride = 1;
  for (int m = 0; m < n_modes; ++m) {
    const auto level = (q >> (total - (m + 1) * nq)) & block;
    if (level >= static_cast<std::uint64_t>(local_dim)) return false;
    fock += static_cast<std::size_t>(level) * stride;
    stride *= static_cast<std::size_t>(local_dim);
  }
  return true;
}

using TermMap = std::unordered_map<std::uint64_t, cplx>;

// Adds v * |r><c| expanded over matrix units, 2 Pauli terms per qubit.
void expand_unit(TermMap& acc, std::uint64_t r, std::uint64_t c, cplx v, int n) {
  const std::uint64_t count = std::uint64_t{1} << n;
  for (std::uint64_t choice = 0; choice < count; ++choice) {
    std::uint64_t key = 0;
    cplx coeff = v;
    for (int q = 0; q < n; ++q) {
      const int shift = n - 1 - q;
      const int rb = static_cast<int>((r >> shift) & 1U);
      const int cb = static_cast<int>((c >> shift) & 1U);
      const bool second = (choice >> q) & 1U;
      Pauli p;
      cplx f;
      if (rb == cb) {
        p = second ? Pauli::kZ : Pauli::kI;
        f = (second && rb == 1) ? -0.5 : 0.5;
      } else {
        p = second ? Pauli::kY : Pauli::kX;
        // |0><1| = (X + iY)/2, |1><0| = (X - iY)/2
        f = second ? cplx{0.0, rb == 0 ? 0.5 : -0.5} : cplx{0.5, 0.0};
      }
      coeff *= f;
      key |= static_cast<std::uint64_t>(p) << (2 * q);
    }
    acc[key] += coeff;
  }
}

PauliSum from_map(const TermMap& acc, int n) {
  PauliSum sum(n);
  for (const auto& [key, coeff] : acc) {
    if (std::abs(coeff) < PauliSum::kDropTolerance) continue;
    PauliString t;
    t.coefficient = coeff;
    t.axes.resize(static_cast<std::size_t>(n));
    for (int q = 0; q < n; ++q) t.axes[static_cast<std::size_t>(q)] = static_cast<Pauli>((key >> (2 * q)) & 3U);
    sum.add(std::move(t));
  }
  sum.canonicalize();
  return sum;
}

PauliSum embed_sum(const PauliSum& local, const std::vector<int>& support, const QubitLayout& layout) {
  PauliSum out(layout.total_qubits());
  const int nq = layout.qubits_per_mode;
  for (const auto& t : local.terms()) {
    PauliString e;
    e.coefficient = t.coefficient;
    e.axes.assign(static_cast<std::size_t>(layout.total_qubits()), Pauli::kI);
    for (std::size_t k = 0; k < support.size(); ++k)
      for (int b = 0; b < nq; ++b)
        e.axes[static_cast<std::size_t>(support[k] * nq + b)] =
            t.axes[static_cast<std::size_t>(static_cast<int>(k) * nq + b)];
    out.add(std::move(e));
  }
  out.canonicalize();
  return out;
}

}  // namespace

PauliSum compile_dense(const DenseMatrix& m, int n_modes, int local_dim) {
  const int nq = qubits_for_levels(local_dim);
  const int n = n_modes * nq;
  require(n <= 30, ErrorCode::kGuardExceeded, "too many qubits for Pauli compilation");
  std::size_t dim = 1;
  for (int k = 0; k < n_modes; ++k) dim *= static_cast<std::size_t>(local_dim);
  require(m.rows() == m.cols() && static_cast<std::size_t>(m.rows()) == dim,
          ErrorCode::kDimensionMismatch, "matrix does not match local dimension");
  TermMap acc;
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const cplx v = m(r, c);
      if (std::abs(v) < SparseOperator::kDropTolerance) continue;
      expand_unit(acc, fock_to_qubit(static_cast<std::size_t>(r), n_modes, local_dim, nq),
                  fock_to_qubit(static_cast<std::size_t>(c), n_modes, local_dim, nq), v, n);
    }
  return from_map(acc, n);
}

std::vector<int> operator_support(const FockBasis& basis, const SparseOperator& op) {
  require(op.dim() == basis.dim(), ErrorCode::kDimensionMismatch, "operator does not match basis");
  const auto& mat = op.matrix();
  std::vector<int> support;
  const int d = basis.local_dim();
  for (int m = 0; m < basis.n_modes(); ++m) {
    const auto stride = static_cast<std::ptrdiff_t>(basis.stride(m));
    bool trivial = true;
    for (Eigen::Index r = 0; r < mat.outerSize() && trivial; ++r)
      for (SparseOperator::Matrix::InnerIterator it(mat, r); it && trivial; ++it) {
        const auto row = static_cast<std::size_t>(it.row());
        const auto col = static_cast<std::size_t>(it.col());
        const int v = basis.occupation(row, m);
        if (basis.occupation(col, m) != v) {
          trivial = false;
          break;
        }
        for (int u = 0; u < d; ++u) {
          const auto rr = static_cast<Eigen::Index>(row) + (u - v) * stride;
          const auto cc = static_cast<Eigen::Index>(col) + (u - v) * stride;
          if (std::abs(mat.coeff(rr, cc) - it.value()) > 1e-13) {
            trivial = false;
            break;
          }
        }
      }
    if (!trivial) support.push_back(m);
  }
  return support;
}

PauliSum compile(const LocalOperator& op, const QubitLayout& layout) {
  require(op.modes.size() <= 2, ErrorCode::kUnsupported, "compile supports at most two modes");
  require(std::is_sorted(op.modes.begin(), op.modes.end()), ErrorCode::kInvalidArgument,
          "local operator modes must be ascending");
  for (int m : op.modes)
    require(m >= 0 && m < layout.n_modes, ErrorCode::kInvalidArgument, "mode outside layout");
  if (op.modes.empty()) {
    PauliSum sum(layout.total_qubits());
    PauliString t;
    t.axes.assign(static_cast<std::size_t>(layout.total_qubits()), Pauli::kI);
    t.coefficient = op.matrix(0, 0);
    sum.add(std::move(t));
    sum.canonicalize();
    return sum;
  }
  const PauliSum local = compile_dense(op.matrix, static_cast<int>(op.modes.size()), layout.local_dim);
  return embed_sum(local, op.modes, layout);
}

PauliSum compile(const SparseOperator& op, const QubitLayout& layout) {
  const FockBasis basis(layout.n_modes, layout.local_dim);
  const std::vector<int> support = operator_support(basis, op);
  require(support.size() <= 2, ErrorCode::kUnsupported,
          "operator acts on more than two modes; use compile_hamiltonian");
  std::size_t local_dim = 1;
  for (std::size_t k = 0; k < support.size(); ++k) local_dim *= static_cast<std::size_t>(layout.local_dim);
  std::vector<std::size_t> offsets(local_dim, 0);
  for (std::size_t l = 0; l < local_dim; ++l) {
    std::size_t rest = l;
    for (int m : support) {
      offsets[l] += (rest % static_cast<std::size_t>(layout.local_dim)) * basis.stride(m);
      rest /= static_cast<std::size_t>(layout.local_dim);
    }
  }
  LocalOperator local{support, DenseMatrix(static_cast<Eigen::Index>(local_dim),
                                           static_cast<Eigen::Index>(local_dim))};
  for (std::size_t r = 0; r < local_dim; ++r)
    for (std::size_t c = 0; c < local_dim; ++c)
      local.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          op.matrix().coeff(static_cast<Eigen::Index>(offsets[r]), static_cast<Eigen::Index>(offsets[c]));
  return compile(local, layout);
}

SparseOperator reconstruct(const PauliSum& sum, const QubitLayout& layout) {
  require(sum.n_qubits() == layout.total_qubits(), ErrorCode::kDimensionMismatch,
          "Pauli sum does not match layout");
  require(layout.total_qubits() <= 24, ErrorCode::kGuardExceeded, "reconstruction limited to 24 qubits");
  std::unordered_map<std::uint64_t, cplx> entries;
  const int shift = layout.total_qubits();
  for (const auto& t : sum.terms())
    for_each_entry(t, [&](std::uint64_t r, std::uint64_t c, cplx v) { entries[(r << shift) | c] += v; });
  const FockBasis basis(layout.n_modes, layout.local_dim);
  std::vector<Eigen::Triplet<cplx, std::ptrdiff_t>> trip;
  const std::uint64_t mask = (std::uint64_t{1} << shift) - 1;
  for (const auto& [key, v] : entries) {
    if (std::abs(v) < PauliSum::kDropTolerance) continue;
    std::size_t fr = 0;
    std::size_t fc = 0;
    const bool row_ok = qubit_to_fock(key >> shift, layout.n_modes, layout.local_dim, layout.qubits_per_mode, fr);
    const bool col_ok = qubit_to_fock(key & mask, layout.n_modes, layout.local_dim, layout.qubits_per_mode, fc);
    // identity factors on idle modes act padding-to-padding; only leakage matters
    if (!row_ok && !col_ok) continue;
    require(row_ok && col_ok, ErrorCode::kUnsupported, "Pauli sum couples physical and padding levels");
    trip.emplace_back(static_cast<std::ptrdiff_t>(fr), static_cast<std::ptrdiff_t>(fc), v);
  }
  const auto n = static_cast<Eigen::Index>(basis.dim());
  SparseOperator::Matrix m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  return SparseOperator(std::move(m));
}

HamiltonianCompile compile_hamiltonian(const LatticeSpec& spec) {
  spec.validate();
  require(spec.local_dim <= 4, ErrorCode::kGuardExceeded, "Hamiltonian compile requires local_dim <= 4");
  const QubitLayout layout = QubitLayout::for_spec(spec);
  require(layout.total_qubits() <= 16, ErrorCode::kGuardExceeded,
          "Hamiltonian compile limited to 16 qubits");
  const SparseOperator h = build_hamiltonian(spec);
  const int n = layout.total_qubits();
  TermMap acc;
  const auto& mat = h.matrix();
  for (Eigen::Index r = 0; r < mat.outerSize(); ++r)
    for (SparseOperator::Matrix::InnerIterator it(mat, r); it; ++it)
      expand_unit(acc,
                  fock_to_qubit(static_cast<std::size_t>(it.row()), spec.n_sites, spec.local_dim,
                                layout.qubits_per_mode),
                  fock_to_qubit(static_cast<std::size_t>(it.col()), spec.n_sites, spec.local_dim,
                                layout.qubits_per_mode),
                  it.value(), n);
  HamiltonianCompile out;
  out.sum = from_map(acc, n);
  out.term_count = out.sum.size();
  const double nn = spec.n_sites;
  out.bound = 8.0 * nn * nn * nn * (spec.local_dim + std::log2(static_cast<double>(spec.local_dim)));
  out.within_bound = static_cast<double>(out.term_count) <= out.bound;
  return out;
}

// ---------------------------------------------------------------------------

std::pair<DenseMatrix, DenseMatrix> field_basis_ops(int n_q, double phi_max) {
  require(n_q >= 1 && n_q <= 12, ErrorCode::kInvalidArgument, "n_q must lie in 1..12");
  require(phi_max > 0.0, ErrorCode::kInvalidArgument, "phi_max must be positive");
  const Eigen::Index dim = Eigen::Index{1} << n_q;
  const double m = static_cast<double>(dim);
  const double spacing = 2.0 * phi_max / m;
  const double center = 0.5 * (m - 1.0);
  Eigen::VectorXd x(dim);
  Eigen::VectorXd p(dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    // Z-weight eigenvalue (phi_max / 2^nq) sum_j 2^j (1 - 2 b_j) of index k
    x[k] = phi_max * (m - 1.0 - 2.0 * static_cast<double>(k)) / m;
    p[k] = 2.0 * std::numbers::pi / (m * spacing) * (static_cast<double>(k) - center);
  }
  DenseMatrix f(dim, dim);
  for (Eigen::Index k = 0; k < dim; ++k)
    for (Eigen::Index j = 0; j < dim; ++j) f(k, j) = std::polar(1.0 / std::sqrt(m), -p[k] * x[j]);
  DenseMatrix phi = x.cast<cplx>().asDiagonal();
  DenseMatrix pi = f.adjoint() * p.cast<cplx>().asDiagonal() * f;
  return {std::move(phi), std::move(pi)};
}

double default_commutator_rule(int n_q) { return std::sqrt(2.0 * n_q); }

double default_truncation_rule(int n_q) {
  return std::sqrt(std::numbers::pi * std::ldexp(1.0, n_q) / 2.0);
}

double commutator_error(int n_q, double phi_max) {
  const auto [phi, pi] = field_basis_ops(n_q, phi_max);
  Eigen::VectorXcd g(phi.rows());
  for (Eigen::Index k = 0; k < phi.rows(); ++k) {
    const double x = phi(k, k).real();
    g[k] = std::exp(-0.5 * x * x);
  }
  g.normalize();
  const DenseMatrix comm = phi * pi - pi * phi;
  return std::abs(g.dot(comm * g) - cplx{0.0, 1.0});
}

std::vector<ScanRow> commutator_error_scan(int n_q_min, int n_q_max, const PhiMaxRule& rule) {
  require(n_q_min >= 1 && n_q_min <= n_q_max, ErrorCode::kInvalidArgument, "empty n_q range");
  std::vector<ScanRow> rows;
  for (int nq = n_q_min; nq <= n_q_max; ++nq) {
    const double pm = rule(nq);
    rows.push_back({nq, pm, commutator_error(nq, pm)});
  }
  return rows;
}

double gaussian_tail_mass(double window) {
  if (std::isinf(window)) return 0.0;
  // |psi|^2 = exp(-phi^2)/sqrt(pi)
  return std::erfc(window);
}

std::vector<ScanRow> gaussian_truncation_scan(int n_q_min, int n_q_max, const PhiMaxRule& rule) {
  require(n_q_min >= 1 && n_q_min <= n_q_max, ErrorCode::kInvalidArgument, "empty n_q range");
  std::vector<ScanRow> rows;
  for (int nq = n_q_min; nq <= n_q_max; ++nq) {
    const double pm = rule(nq);
    rows.push_back({nq, pm, gaussian_tail_mass(pm)});
  }
  return rows;
}

}  // namespace phi4
