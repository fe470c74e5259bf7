#include "phi4/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "phi4/error.hpp"

namespace phi4 {

SpectrumReport eigensolve(const SparseOperator& h, double cluster_tol) {
  require(h.dim() <= kMaxEigenDimension, ErrorCode::kGuardExceeded, "dense eigensolve limited to 4096 states");
  require(h.is_hermitian(), ErrorCode::kNotHermitian, "eigensolve needs a Hermitian operator");
  const DenseMatrix dense = h.to_dense();
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(dense);
  require(es.info() == Eigen::Success, ErrorCode::kNumerical, "eigensolver failed");
  SpectrumReport r;
  r.eigenvalues = es.eigenvalues();
  r.eigenvectors = es.eigenvectors();
  const auto n = r.eigenvalues.size();
  const DenseMatrix resid = dense * r.eigenvectors - r.eigenvectors * r.eigenvalues.cast<cplx>().asDiagonal();
  r.max_residual = n ? resid.colwise().norm().maxCoeff() : 0.0;
  r.cluster_of.assign(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i == 0 || r.eigenvalues[i] - r.eigenvalues[i - 1] > cluster_tol) r.clusters.emplace_back();
    r.clusters.back().push_back(static_cast<int>(i));
    r.cluster_of[static_cast<std::size_t>(i)] = static_cast<int>(r.clusters.size()) - 1;
  }
  return r;
}

StateVector expm_action(const SparseOperator& h, const StateVector& v, double t) {
  require(static_cast<std::size_t>(v.size()) == h.dim(), ErrorCode::kDimensionMismatch,
          "state does not match operator");
  if (t == 0.0 || v.size() == 0) return v;
  // shift by the mean diagonal to shrink the norm; the shift is a global phase
  const cplx mu = h.trace() / static_cast<double>(h.dim());
  const auto& m = h.matrix();
  double norm = 0.0;
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    double row = 0.0;
    for (SparseOperator::Matrix::InnerIterator it(m, r); it; ++it)
      row += std::abs(it.row() == it.col() ? it.value() - mu : it.value());
    norm = std::max(norm, row);
  }
  const int substeps = std::max(1, static_cast<int>(std::ceil(norm * std::abs(t) / 0.5)));
  const double tau = t / substeps;
  StateVector out = v;
  for (int s = 0; s < substeps; ++s) {
    StateVector term = out;
    StateVector sum = out;
    for (int k = 1; k <= 60; ++k) {
      term = (cplx{0.0, -tau / k}) * (m * term - mu * term);
      sum += term;
      if (term.norm() <= 1e-17 * sum.norm()) break;
    }
    out = std::move(sum);
  }
  return out * std::polar(1.0, -mu.real() * t);
}

namespace {

struct Tracker {
  StateVector tracked;
  std::vector<int> cluster;
  double energy = 0.0;

  // Continues the tracked vector into the cluster of maximal overlap.
  void update(const SpectrumReport& rep) {
    double best = -1.0;
    std::size_t best_c = 0;
    for (std::size_t c = 0; c < rep.clusters.size(); ++c) {
      double w = 0.0;
      for (int i : rep.clusters[c]) w += std::norm(rep.eigenvectors.col(i).dot(tracked));
      if (w > best + 1e-12) {
        best = w;
        best_c = c;
      }
    }
    StateVector proj = StateVector::Zero(tracked.size());
    for (int i : rep.clusters[best_c]) proj += rep.eigenvectors.col(i) * rep.eigenvectors.col(i).dot(tracked);
    require(proj.norm() > 1e-8, ErrorCode::kNumerical, "eigenstate tracking lost the state");
    tracked = proj.normalized();
    cluster = rep.clusters[best_c];
    energy = rep.eigenvalues[cluster.front()];
  }

  double subspace_fidelity(const SpectrumReport& rep, const StateVector& psi) const {
    double w = 0.0;
    for (int i : cluster) w += std::norm(rep.eigenvectors.col(i).dot(psi));
    return w;
  }
};

}  // namespace

AdiabaticResult adiabatic_evolve(const OccupationVector& initial, const LatticeSpec& spec,
                                 const AdiabaticConfig& config) {
  spec.validate();
  require(config.steps >= 1, ErrorCode::kInvalidArgument, "adiabatic evolution needs at least one step");
  require(config.dt > 0.0, ErrorCode::kInvalidArgument, "dt must be positive");
  require(config.checkpoints >= 0, ErrorCode::kInvalidArgument, "checkpoints must be non-negative");
  const FockBasis basis(spec);
  const HamiltonianTerms terms = build_terms(spec);
  StateVector psi = basis_state(basis, initial);

  const bool track = config.checkpoints > 0;
  if (track)
    require(basis.dim() <= kMaxEigenDimension, ErrorCode::kGuardExceeded, "tracking needs a dense eigensolve");
  Tracker tracker;
  tracker.tracked = psi;
  const int stride = track ? std::max(1, config.steps / config.checkpoints) : config.steps + 1;

  AdiabaticResult out;
  out.steps = config.steps;
  out.dt = config.dt;
  SpectrumReport last;
  for (int j = 1; j <= config.steps; ++j) {
    const double s = static_cast<double>(j) / config.steps;
    const SparseOperator h = interpolated(terms, spec.coupling, s);
    psi = expm_action(h, psi, config.dt);
    AdiabaticPoint p;
    p.step = j;
    p.s = s;
    p.energy = expectation(h, psi).real();
    p.infidelity = std::numeric_limits<double>::quiet_NaN();
    p.subspace_infidelity = p.infidelity;
    if (track && (j % stride == 0 || j == config.steps)) {
      last = eigensolve(h);
      tracker.update(last);
      p.infidelity = 1.0 - std::abs(tracker.tracked.dot(psi));
      p.subspace_infidelity = 1.0 - tracker.subspace_fidelity(last, psi);
    }
    out.path.push_back(p);
  }
  out.final_state = psi;
  if (track) {
    out.tracked_state = tracker.tracked;
    out.tracked_cluster = tracker.cluster;
    out.tracked_energy = tracker.energy;
    out.final_infidelity = out.path.back().infidelity;
    out.final_subspace_fidelity = tracker.subspace_fidelity(last, psi);
  } else {
    out.final_infidelity = -1.0;
    out.final_subspace_fidelity = -1.0;
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

Histogram histogram(const Eigen::VectorXd& e, double lo, double width, std::size_t bins) {
  Histogram h{lo, width, std::vector<int>(bins, 0)};
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    auto b = static_cast<std::size_t>(std::floor((e[i] - lo) / width));
    h.counts[std::min(b, bins - 1)] += 1;
  }
  return h;
}

}  // namespace

CrowdingReport crowding_report(const LatticeSpec& spec, double cluster_tol, double bin_width,
                               double collision_tol) {
  spec.validate();
  require(bin_width > 0.0, ErrorCode::kInvalidArgument, "bin width must be positive");
  CrowdingReport r;
  const HamiltonianTerms terms = build_terms(spec);
  r.free = eigensolve(terms.free, cluster_tol);
  r.interacting = eigensolve(terms.full(spec.coupling), cluster_tol);
  r.free_clusters = r.free.clusters.size();
  r.interacting_clusters = r.interacting.clusters.size();
  const double l = spec.length();
  for (int j = 1; j < spec.n_sites; ++j) {
    const int p = reflect_mode(spec, j);
    if (p <= j) continue;
    r.parity_pairs.push_back({j, p, vacuum_energy(spec) + mode_energy(spec, j) / l});
  }
  for (int j = 1; j < spec.n_sites; ++j) {
    if (reflect_mode(spec, j) < j) continue;
    for (int n = 2; n < spec.local_dim; ++n) {
      const double gap = n * spec.bare_mass - mode_energy(spec, j);
      if (std::abs(gap) <= collision_tol) r.collisions.push_back({n, j, gap});
    }
  }
  const double lo = std::min(r.free.eigenvalues.minCoeff(), r.interacting.eigenvalues.minCoeff());
  const double hi = std::max(r.free.eigenvalues.maxCoeff(), r.interacting.eigenvalues.maxCoeff());
  const auto bins = static_cast<std::size_t>(std::floor((hi - lo) / bin_width)) + 1;
  r.free_histogram = histogram(r.free.eigenvalues, lo, bin_width, bins);
  r.interacting_histogram = histogram(r.interacting.eigenvalues, lo, bin_width, bins);
  return r;
}

// ---------------------------------------------------------------------------

SubspaceProjector SubspaceProjector::from_vectors(const std::vector<StateVector>& vectors, double drop_tol) {
  SubspaceProjector p;
  for (const auto& v : vectors) {
    StateVector w = v;
    // two passes of modified Gram-Schmidt keep the Gram error at rounding level
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : p.basis_) w -= q * q.dot(w);
    const double n = w.norm();
    if (n < drop_tol) continue;
    p.basis_.push_back(w / n);
  }
  return p;
}

double SubspaceProjector::fidelity(const StateVector& v) const {
  double w = 0.0;
  for (const auto& q : basis_) w += std::norm(q.dot(v));
  return w;
}

DenseMatrix SubspaceProjector::to_dense() const {
  require(!basis_.empty(), ErrorCode::kInvalidArgument, "empty subspace");
  const auto dim = basis_.front().size();
  require(static_cast<std::size_t>(dim) <= kMaxEigenDimension, ErrorCode::kGuardExceeded,
          "dense projector limited to 4096 states");
  DenseMatrix q(dim, static_cast<Eigen::Index>(basis_.size()));
  for (std::size_t i = 0; i < basis_.size(); ++i) q.col(static_cast<Eigen::Index>(i)) = basis_[i];
  return q * q.adjoint();
}

double SubspaceProjector::gram_error() const {
  double e = 0.0;
  for (std::size_t i = 0; i < basis_.size(); ++i)
    for (std::size_t j = 0; j < basis_.size(); ++j)
      e = std::max(e, std::abs(basis_[i].dot(basis_[j]) - (i == j ? 1.0 : 0.0)));
  return e;
}

std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

SubspaceResult n_particle_subspace(const LatticeSpec& spec, int n, const AdiabaticConfig& config) {
  spec.validate();
  require(n >= 0, ErrorCode::kInvalidArgument, "particle number must be non-negative");
  const FockBasis basis(spec);
  SubspaceResult out;
  out.expected_dimension = binomial(static_cast<std::size_t>(n + spec.n_sites - 1), static_cast<std::size_t>(n));
  AdiabaticConfig cfg = config;
  cfg.checkpoints = 0;
  std::vector<StateVector> evolved;
  for (std::size_t i = 0; i < basis.dim(); ++i) {
    const auto occ = basis.unindex(i);
    if (std::accumulate(occ.begin(), occ.end(), 0) != n) continue;
    out.sources.push_back(occ);
    evolved.push_back(spec.coupling == 0.0 ? basis_state(basis, occ) : adiabatic_evolve(occ, spec, cfg).final_state);
  }
  out.projector = SubspaceProjector::from_vectors(evolved);
  out.reduced = out.projector.dimension() < out.expected_dimension;
  return out;
}

double state_fidelity(const StateVector& a, const StateVector& b) {
  require(a.size() == b.size(), ErrorCode::kDimensionMismatch, "state dimensions differ");
  require_normalized(a);
  require_normalized(b);
  return std::abs(a.dot(b));
}

double subspace_fidelity(const StateVector& state, const SubspaceProjector& lambda) {
  require_normalized(state);
  for (const auto& q : lambda.basis())
    require(q.size() == state.size(), ErrorCode::kDimensionMismatch, "subspace does not match state");
  return lambda.fidelity(state);
}

StateVector momentum_project(const StateVector& state, int mode, const LatticeSpec& spec) {
  spec.validate();
  require(mode >= 0 && mode < spec.n_sites, ErrorCode::kInvalidArgument, "momentum index out of range");
  require(static_cast<std::size_t>(state.size()) == FockBasis(spec).dim(), ErrorCode::kDimensionMismatch,
          "state does not match lattice");
  require_normalized(state);
  StateVector out = StateVector::Zero(state.size());
  const double p = momentum(spec, mode);
  for (int x = 0; x < spec.n_sites; ++x) {
    const double disp = x * spec.spacing;
    out += std::polar(1.0, -p * disp) * translation_phase(spec, disp).apply(state);
  }
  out /= static_cast<double>(spec.n_sites);
  require(out.norm() >= 1e-10, ErrorCode::kNumerical, "state has no component at this momentum");
  return out.normalized();
}

double free_energy(const LatticeSpec& spec, const OccupationVector& occ) {
  require(occ.size() == static_cast<std::size_t>(spec.n_sites), ErrorCode::kInvalidArgument,
          "occupation length must equal n_sites");
  double e = vacuum_energy(spec);
  for (int j = 0; j < spec.n_sites; ++j) e += occ[static_cast<std::size_t>(j)] * mode_energy(spec, j) / spec.length();
  return e;
}

std::vector<OccupationVector> free_levels(const LatticeSpec& spec) {
  spec.validate();
  const FockBasis basis(spec);
  std::vector<std::pair<double, std::size_t>> e;
  e.reserve(basis.dim());
  for (std::size_t i = 0; i < basis.dim(); ++i) e.emplace_back(free_energy(spec, basis.unindex(i)), i);
  std::stable_sort(e.begin(), e.end(), [](const auto& a, const auto& b) { return a.first < b.first - 1e-12; });
  std::vector<OccupationVector> out;
  out.reserve(e.size());
  for (const auto& [_, i] : e) out.push_back(basis.unindex(i));
  return out;
}

}  // namespace phi4
