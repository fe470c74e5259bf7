#pragma once

#include <cstddef>
#include <vector>

namespace phi4 {

/// Largest Hilbert dimension accepted by the dense paths.
inline constexpr std::size_t kMaxDenseDimension = std::size_t{1} << 20;

/// Physical and truncation parameters of one lattice theory instance.
/// All quantities are in lattice units.
struct LatticeSpec {
  int n_sites = 4;
  double spacing = 1.0;
  double bare_mass = 1.0;
  double coupling = 0.0;
  int local_dim = 4;

  double length() const { return n_sites * spacing; }
  std::size_t hilbert_dim() const;

  /// Throws Error(kInvalidArgument / kGuardExceeded) when the spec is unusable.
  void validate() const;
};

/// Physical momentum 2*pi*j/L of mode index j.
double momentum(const LatticeSpec& spec, int mode);

/// k_j = 2*pi*j/L for j = 0..N-1, in index order.
std::vector<double> momentum_modes(const LatticeSpec& spec);

/// Index of the reflected momentum -k_j, i.e. (N - j) mod N.
int reflect_mode(const LatticeSpec& spec, int mode);

/// omega(k) = sqrt(m0^2 + (4/a^2) sin^2(a k / 2)).
double dispersion(const LatticeSpec& spec, double k);
double mode_energy(const LatticeSpec& spec, int mode);

/// E0 = sum_k omega(k) / 2.
double vacuum_energy(const LatticeSpec& spec);

}  // namespace phi4
