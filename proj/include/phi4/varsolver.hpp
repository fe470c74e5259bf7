#pragma once

#include <functional>
#include <string>
#include <vector>

#include "phi4/ansatz.hpp"
#include "phi4/hamiltonian.hpp"

namespace phi4 {

/// Imaginary-time system (A, C) or real-time system (M, V) at one parameter point.
struct McLachlanSystem {
  Eigen::MatrixXd A;  ///< Re<d_i psi|d_j psi> (phase-projected for real time)
  Eigen::VectorXd C;  ///< Re<d_i psi|H|psi> (imaginary) or V (real time)
  double energy = 0.0;
  double h2 = 0.0;  ///< <H^2>
  StateVector state;
  std::vector<StateVector> derivs;
};

enum class Integrator { kEuler, kRk4 };

struct EvolverConfig {
  double step = 0.01;
  int max_steps = 2000;
  double regularization = 1e-6;
  double pinv_cutoff = 1e-10;
  double c_tolerance = 1e-8;
  double energy_tolerance = 1e-12;  ///< relative change over 10 steps
  double alpha = 8.0;
  double learning_rate = 0.1;
  double delta_cut = 0.0;
  Integrator integrator = Integrator::kEuler;
  bool record_theta = false;
};

enum class Termination { kConverged, kMaxSteps, kError };

std::string to_string(Termination t);

struct StepRecord {
  int step = 0;
  double time = 0.0;
  double energy = 0.0;
  double delta2 = 0.0;      ///< variance-based McLachlan distance
  double delta2_raw = 0.0;  ///< <H^2> + thetadot M thetadot - 2 V thetadot as printed
  double c_norm = 0.0;
  double fidelity = -1.0;  ///< against a supplied target, -1 when absent
  std::vector<double> overlaps;
  Eigen::VectorXd theta;
};

struct Trajectory {
  std::vector<StepRecord> records;
  Termination status = Termination::kMaxSteps;
  std::string message;
  Eigen::VectorXd theta;
  StateVector final_state;
  double final_energy = 0.0;
  int rejected_steps = 0;
};

/// A_ij = Re<d_i psi|d_j psi>, C_i = Re<d_i psi|H|psi> with the deflation
/// terms folded into H.
McLachlanSystem mclachlan_ac(const Circuit& circuit, const Eigen::VectorXd& theta, const DeflatedOperator& h);

/// Phase-corrected real-time system: M_ij = Re(<d_i|d_j> - <d_i|psi><psi|d_j>),
/// V_i = Im(<d_i|H|psi> - E <d_i|psi>).
McLachlanSystem mclachlan_mv(const Circuit& circuit, const Eigen::VectorXd& theta, const SparseOperator& h);

/// Tikhonov-regularized solve of (A + reg I) x = b with a pseudo-inverse fallback.
Eigen::VectorXd regularized_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double reg,
                                  double pinv_cutoff);

struct Distance {
  double delta2 = 0.0;  ///< <H^2> - <H>^2 + x M x - 2 V x
  double raw = 0.0;     ///< <H^2> + x M x - 2 V x
};

/// McLachlan distance of a real-time system for parameter velocity x.
Distance mclachlan_distance(const McLachlanSystem& sys, const Eigen::VectorXd& thetadot);

/// Imaginary-time flow A thetadot = -C from theta0; fidelity is tracked when
/// `target` is non-empty.
Trajectory vqite_run(const Circuit& circuit, const Eigen::VectorXd& theta0, const DeflatedOperator& h,
                     const EvolverConfig& config, const StateVector& target = StateVector());

/// VQITE under H + alpha sum_j |psi_j><psi_j|.
Trajectory excited_run(const Circuit& circuit, const Eigen::VectorXd& theta0, const SparseOperator& h,
                       const std::vector<StateVector>& found, const EvolverConfig& config,
                       const StateVector& target = StateVector());

using HamiltonianSchedule = std::function<SparseOperator(double t)>;

/// Real-time M thetadot = V under a (possibly time-dependent) Hamiltonian.
Trajectory real_time_run(const Circuit& circuit, const Eigen::VectorXd& theta0, const HamiltonianSchedule& h,
                         const EvolverConfig& config, const StateVector& target = StateVector());

/// Real-time run under H(s) = H0 + s H_int with s = t / total_time.
Trajectory adiabatic_variational_run(const Circuit& circuit, const Eigen::VectorXd& theta0,
                                     const LatticeSpec& spec, double total_time, const EvolverConfig& config,
                                     const StateVector& target = StateVector());

/// Real-time evolution that appends a fresh zero-angle copy of `pool` before
/// every step and moves only those angles. With a pool spanning H this is a
/// first-order Trotter step and the per-step distance vanishes.
struct LayeredResult {
  Trajectory trajectory;
  std::vector<double> step_error;      ///< one-step distance to exp(-i H dt) applied to the previous state
  std::vector<double> exact_distance;  ///< phase-optimized distance to exp(-i H t) psi0
  std::vector<double> infidelity;      ///< 1 - |<exact|psi>|
};
LayeredResult layered_real_time_run(const LatticeSpec& spec, const OccupationVector& reference,
                                    const std::vector<Generator>& pool, const SparseOperator& h,
                                    const EvolverConfig& config, const StateVector& initial = StateVector());

struct GrowthResult {
  std::vector<std::size_t> appended;  ///< pool indices in acceptance order
  std::vector<double> delta;          ///< Delta before the first append, then after each
  bool reached_cut = false;
  bool tolerance_floor = false;
};

/// Greedy growth: append the pool generator (at angle 0) that lowers the
/// McLachlan distance most, until Delta <= delta_cut. Each pool entry is used
/// at most once.
GrowthResult adaptive_grow(Circuit& circuit, Eigen::VectorXd& theta, const SparseOperator& h, double delta_cut,
                           const std::vector<Generator>& pool, const EvolverConfig& config = {});

/// Plain gradient descent theta <- theta - eta 2C.
Trajectory gd_run(const Circuit& circuit, const Eigen::VectorXd& theta0, const SparseOperator& h,
                  const EvolverConfig& config);

/// gamma = eta n_params tr(H^2) / dim^2.
double qntk_rate(const SparseOperator& h, double eta, std::size_t n_params);

/// Seeded uniform(-scale, scale) initial angles.
Eigen::VectorXd jitter(std::size_t n, unsigned long long seed, double scale = 0.01);

}  // namespace phi4
