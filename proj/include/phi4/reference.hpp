#pragma once

#include <string>
#include <vector>

#include "phi4/fock.hpp"
#include "phi4/hamiltonian.hpp"

namespace phi4 {

/// Dense path limit for eigensolves and projector matrices.
inline constexpr std::size_t kMaxEigenDimension = 4096;

struct SpectrumReport {
  Eigen::VectorXd eigenvalues;  ///< ascending
  DenseMatrix eigenvectors;     ///< columns
  std::vector<std::vector<int>> clusters;
  std::vector<int> cluster_of;
  double max_residual = 0.0;

  /// Index of the cluster holding eigenvalue i.
  const std::vector<int>& cluster_containing(int i) const {
    return clusters[static_cast<std::size_t>(cluster_of[static_cast<std::size_t>(i)])];
  }
};

/// Full dense spectrum; eigenvalues closer than cluster_tol share a cluster.
SpectrumReport eigensolve(const SparseOperator& h, double cluster_tol = 1e-8);

/// exp(-i H t) v by a scaled Taylor series converged to machine precision.
StateVector expm_action(const SparseOperator& h, const StateVector& v, double t);

struct AdiabaticPoint {
  int step = 0;
  double s = 0.0;
  double energy = 0.0;      ///< <psi|H(s)|psi>
  double infidelity = 0.0;  ///< 1 - |<tracked|psi>|; NaN between checkpoints
  double subspace_infidelity = 0.0;
};

struct AdiabaticConfig {
  int steps = 100;
  double dt = 1.0;
  /// Eigen-tracking checkpoints along the ramp; 0 disables tracking.
  int checkpoints = 100;
};

struct AdiabaticResult {
  StateVector final_state;
  StateVector tracked_state;        ///< continued eigenvector of the final H
  std::vector<int> tracked_cluster;  ///< eigen indices of its (possibly degenerate) cluster
  double tracked_energy = 0.0;
  double final_infidelity = 0.0;
  double final_subspace_fidelity = 0.0;
  std::vector<AdiabaticPoint> path;
  int steps = 0;
  double dt = 0.0;
};

/// Applies exp(-i H(s_j) dt) for s_j = j/steps, j = 1..steps, from a free
/// occupation state, tracking the instantaneous eigenstate by maximal-overlap
/// continuation (projection onto the best cluster).
AdiabaticResult adiabatic_evolve(const OccupationVector& initial, const LatticeSpec& spec,
                                 const AdiabaticConfig& config);

struct ParityPair {
  int mode = 0;
  int partner = 0;
  double energy = 0.0;
};

/// n m0 = omega(p) for some mode p != 0 and integer n >= 2.
struct Collision {
  int multiple = 0;
  int mode = 0;
  double gap = 0.0;
};

struct Histogram {
  double lo = 0.0;
  double width = 0.0;
  std::vector<int> counts;
};

struct CrowdingReport {
  SpectrumReport free;
  SpectrumReport interacting;
  std::vector<ParityPair> parity_pairs;
  std::vector<Collision> collisions;
  Histogram free_histogram;
  Histogram interacting_histogram;
  std::size_t free_clusters = 0;
  std::size_t interacting_clusters = 0;
};

CrowdingReport crowding_report(const LatticeSpec& spec, double cluster_tol = 1e-6, double bin_width = 0.05,
                               double collision_tol = 1e-9);

class SubspaceProjector {
 public:
  SubspaceProjector() = default;
  /// Orthonormalizes by modified Gram-Schmidt, dropping vectors whose
  /// remainder falls below drop_tol.
  static SubspaceProjector from_vectors(const std::vector<StateVector>& vectors, double drop_tol = 1e-10);

  std::size_t dimension() const { return basis_.size(); }
  const std::vector<StateVector>& basis() const { return basis_; }
  double fidelity(const StateVector& v) const;
  DenseMatrix to_dense() const;
  /// Largest |G - I| entry of the Gram matrix.
  double gram_error() const;

 private:
  std::vector<StateVector> basis_;
};

struct SubspaceResult {
  SubspaceProjector projector;
  std::size_t expected_dimension = 0;  ///< binom(n + N - 1, n)
  bool reduced = false;
  std::vector<OccupationVector> sources;
};

/// Span of the adiabatically evolved free n-particle states.
SubspaceResult n_particle_subspace(const LatticeSpec& spec, int n, const AdiabaticConfig& config);

std::size_t binomial(std::size_t n, std::size_t k);

/// |<a|b>|.
double state_fidelity(const StateVector& a, const StateVector& b);
/// <psi|Lambda|psi>.
double subspace_fidelity(const StateVector& state, const SubspaceProjector& lambda);

/// (1/N) sum_x e^{-i p x} T_x psi, normalized; keeps the total-momentum-p part.
StateVector momentum_project(const StateVector& state, int mode, const LatticeSpec& spec);

/// Free energy E0 + sum_k n_k omega_k / L of an occupation state.
double free_energy(const LatticeSpec& spec, const OccupationVector& occ);

/// Free occupation states sorted by energy (ties by basis index).
std::vector<OccupationVector> free_levels(const LatticeSpec& spec);

}  // namespace phi4
