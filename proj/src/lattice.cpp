#include "phi4/lattice.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "phi4/error.hpp"

namespace phi4 {

std::size_t LatticeSpec::hilbert_dim() const {
  std::size_t dim = 1;
  for (int i = 0; i < n_sites; ++i) {
    dim *= static_cast<std::size_t>(local_dim);
    if (dim > kMaxDenseDimension) return dim;
  }
  return dim;
}

void LatticeSpec::validate() const {
  require(n_sites >= 1, ErrorCode::kInvalidArgument, "n_sites must be positive");
  require(spacing > 0.0 && std::isfinite(spacing), ErrorCode::kInvalidArgument,
          "spacing must be positive");
  require(bare_mass > 0.0 && std::isfinite(bare_mass), ErrorCode::kInvalidArgument,
          "bare_mass must be positive");
  require(coupling >= 0.0 && std::isfinite(coupling), ErrorCode::kInvalidArgument,
          "coupling must be non-negative");
  require(local_dim >= 2, ErrorCode::kInvalidArgument, "local_dim must be at least 2");
  require(hilbert_dim() <= kMaxDenseDimension, ErrorCode::kGuardExceeded,
          "Hilbert dimension local_dim^n_sites exceeds 2^20");
}

double momentum(const LatticeSpec& spec, int mode) {
  return 2.0 * std::numbers::pi * mode / spec.length();
}

std::vector<double> momentum_modes(const LatticeSpec& spec) {
  std::vector<double> ks(static_cast<std::size_t>(spec.n_sites));
  for (int j = 0; j < spec.n_sites; ++j) ks[static_cast<std::size_t>(j)] = momentum(spec, j);
  return ks;
}

int reflect_mode(const LatticeSpec& spec, int mode) {
  return (spec.n_sites - mode) % spec.n_sites;
}

double dispersion(const LatticeSpec& spec, double k) {
  const double a = spec.spacing;
  const double s = std::sin(0.5 * a * k);
  return std::sqrt(spec.bare_mass * spec.bare_mass + 4.0 / (a * a) * s * s);
}

double mode_energy(const LatticeSpec& spec, int mode) {
  return dispersion(spec, momentum(spec, mode));
}

double vacuum_energy(const LatticeSpec& spec) {
  double e0 = 0.0;
  for (int j = 0; j < spec.n_sites; ++j) e0 += 0.5 * mode_energy(spec, j);
  return e0;
}

}  // namespace phi4
