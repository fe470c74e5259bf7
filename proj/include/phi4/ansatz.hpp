#pragma once

#include <string>
#include <vector>

#include "phi4/encoder.hpp"
#include "phi4/fock.hpp"
#include "phi4/lattice.hpp"

namespace phi4 {

/// How the level hopper O is turned into a Hermitian generator.
/// kSymmetric: O + O^dagger. kAntisymmetric: i (O - O^dagger).
enum class HermitianForm { kSymmetric, kAntisymmetric };

enum class GeneratorForms { kSymmetric, kAntisymmetric, kBoth };

struct AnsatzOptions {
  int max_transition = 3;
  /// Highest level a transition may touch; -1 means local_dim - 1.
  int max_level = -1;
  bool include_mirror = true;
  bool include_t1 = true;
  bool include_t2 = true;
  GeneratorForms forms = GeneratorForms::kSymmetric;
};

/// Primary term |s><t| on `modes` (one level pair per mode); the mirrored
/// partner, when present, acts on the reflected modes with the same levels.
struct ExcitationLabel {
  std::vector<int> modes;
  std::vector<int> source;
  std::vector<int> target;
  bool mirrored = false;
  HermitianForm form = HermitianForm::kSymmetric;

  std::string to_string() const;
  friend bool operator<(const ExcitationLabel& a, const ExcitationLabel& b);
  friend bool operator==(const ExcitationLabel& a, const ExcitationLabel& b);
};

/// Hermitian generator X acting on a small support, with a cached
/// eigendecomposition so exp(-i theta X) is exact and cheap.
class Generator {
 public:
  Generator(std::string family, ExcitationLabel label, LocalOperator action);

  const std::string& family() const { return family_; }
  const ExcitationLabel& label() const { return label_; }
  const LocalOperator& action() const { return action_; }

  /// exp(-i theta X) on the support.
  DenseMatrix rotation(double theta) const;
  PauliSum pauli_form(const QubitLayout& layout) const;

 private:
  std::string family_;
  ExcitationLabel label_;
  LocalOperator action_;
  Eigen::VectorXd evals_;
  DenseMatrix evecs_;
};

/// Generator from a hopper label; validates levels and builds the local matrix.
Generator make_excitation(const LatticeSpec& spec, const std::string& family, ExcitationLabel label);

/// Generator exp(-i theta c P) for one Pauli string (coefficient taken as a real weight).
Generator pauli_generator(const PauliString& p, const QubitLayout& layout);

std::vector<Generator> build_t1(const LatticeSpec& spec, const AnsatzOptions& opts);
std::vector<Generator> build_t2_paired(const LatticeSpec& spec, const AnsatzOptions& opts);

/// Permutation n_j -> n_{N-j} on the Fock basis.
SparseOperator reflection_operator(const LatticeSpec& spec);

class Circuit {
 public:
  Circuit(const LatticeSpec& spec, OccupationVector reference, std::vector<Generator> generators);
  /// Circuit anchored on an arbitrary normalized state; reference() is then empty.
  static Circuit from_state(const LatticeSpec& spec, StateVector initial, std::vector<Generator> generators);

  const FockBasis& basis() const { return basis_; }
  const OccupationVector& reference() const { return reference_; }
  const std::vector<Generator>& generators() const { return generators_; }
  std::size_t size() const { return generators_.size(); }

  void append(Generator g);

  StateVector reference_state() const;
  StateVector prepare(const Eigen::VectorXd& theta) const;
  /// d/d theta_i of prepare(theta).
  StateVector derivative(const Eigen::VectorXd& theta, std::size_t i) const;
  /// State and every derivative in one sweep.
  StateVector prepare_with_derivatives(const Eigen::VectorXd& theta, std::vector<StateVector>& derivs) const;

  /// Sum over generators of their compiled Pauli term counts.
  std::size_t rotation_count(const QubitLayout& layout) const;
  /// Distinct Pauli strings across all generators.
  std::size_t distinct_pauli_count(const QubitLayout& layout) const;

 private:
  explicit Circuit(const LatticeSpec& spec);
  void check_theta(const Eigen::VectorXd& theta) const;

  FockBasis basis_;
  OccupationVector reference_;
  StateVector initial_;
  std::vector<Generator> generators_;
  std::vector<LocalPlan> plans_;
};

/// T1 + paired T2 over the options, sorted lexicographically by label.
Circuit build_ucc(const LatticeSpec& spec, const OccupationVector& reference, const AnsatzOptions& opts);

}  // namespace phi4
