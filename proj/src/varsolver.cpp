#include "phi4/varsolver.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "phi4/error.hpp"

namespace phi4 {

std::string to_string(Termination t) {
  switch (t) {
    case Termination::kConverged: return "converged";
    case Termination::kMaxSteps: return "max_steps";
    case Termination::kError: return "error";
  }
  return "unknown";
}

namespace {

enum class Flow { kImaginary, kReal };

DenseMatrix stack(const std::vector<StateVector>& derivs, Eigen::Index dim) {
  DenseMatrix d(dim, static_cast<Eigen::Index>(derivs.size()));
  for (std::size_t i = 0; i < derivs.size(); ++i) d.col(static_cast<Eigen::Index>(i)) = derivs[i];
  return d;
}

struct Snapshot {
  McLachlanSystem sys;
  StateVector hpsi;
  DenseMatrix d;
  Flow flow = Flow::kImaginary;
};

template <typename Apply>
Snapshot assemble(const Circuit& circuit, const Eigen::VectorXd& theta, Apply&& apply_h, Flow flow) {
  Snapshot s;
  s.flow = flow;
  s.sys.state = circuit.prepare_with_derivatives(theta, s.sys.derivs);
  s.d = stack(s.sys.derivs, s.sys.state.size());
  s.hpsi = apply_h(s.sys.state);
  s.sys.energy = s.sys.state.dot(s.hpsi).real();
  s.sys.h2 = s.hpsi.squaredNorm();
  const DenseMatrix gram = s.d.adjoint() * s.d;
  const Eigen::VectorXcd dh = s.d.adjoint() * s.hpsi;
  if (flow == Flow::kImaginary) {
    s.sys.A = gram.real();
    s.sys.C = dh.real();
  } else {
    const Eigen::VectorXcd g = s.d.adjoint() * s.sys.state;
    s.sys.A = (gram - g * g.adjoint()).real();
    s.sys.C = (dh - s.sys.energy * g).imag();
  }
  s.sys.A = 0.5 * (s.sys.A + s.sys.A.transpose());
  return s;
}

// Residual norm of the projected equation; avoids the cancellation in the
// expanded quadratic form.
double residual_distance(const Snapshot& s, const Eigen::VectorXd& x) {
  const StateVector& psi = s.sys.state;
  StateVector target;
  if (s.flow == Flow::kImaginary)
    target = -(s.hpsi - s.sys.energy * psi);
  else
    target = cplx{0.0, -1.0} * s.hpsi;
  StateVector r = (x.size() ? StateVector(s.d * x.cast<cplx>()) : StateVector::Zero(psi.size())) - target;
  r -= psi * psi.dot(r);
  return r.squaredNorm();
}

double fidelity_with(const StateVector& target, const StateVector& psi) {
  return target.size() ? std::abs(target.dot(psi)) : -1.0;
}

Eigen::VectorXd step_euler_or_rk4(const std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)>& f,
                                  const Eigen::VectorXd& theta, double t, double dt, Integrator integ,
                                  const Eigen::VectorXd& k1) {
  if (integ == Integrator::kEuler) return theta + dt * k1;
  const Eigen::VectorXd k2 = f(theta + 0.5 * dt * k1, t + 0.5 * dt);
  const Eigen::VectorXd k3 = f(theta + 0.5 * dt * k2, t + 0.5 * dt);
  const Eigen::VectorXd k4 = f(theta + dt * k3, t + dt);
  return theta + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void validate(const EvolverConfig& c) {
  require(c.step > 0.0, ErrorCode::kInvalidArgument, "step must be positive");
  require(c.max_steps >= 0, ErrorCode::kInvalidArgument, "max_steps must be non-negative");
  require(c.regularization >= 0.0, ErrorCode::kInvalidArgument, "regularization must be non-negative");
}

}  // namespace

McLachlanSystem mclachlan_ac(const Circuit& circuit, const Eigen::VectorXd& theta, const DeflatedOperator& h) {
  require(h.dim() == circuit.basis().dim(), ErrorCode::kDimensionMismatch, "Hamiltonian does not match circuit");
  return assemble(circuit, theta, [&](const StateVector& v) { return h.apply(v); }, Flow::kImaginary).sys;
}

McLachlanSystem mclachlan_mv(const Circuit& circuit, const Eigen::VectorXd& theta, const SparseOperator& h) {
  require(h.dim() == circuit.basis().dim(), ErrorCode::kDimensionMismatch, "Hamiltonian does not match circuit");
  return assemble(circuit, theta, [&](const StateVector& v) { return h.apply(v); }, Flow::kReal).sys;
}

Eigen::VectorXd regularized_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double reg,
                                  double pinv_cutoff) {
  require(a.rows() == a.cols() && a.rows() == b.size(), ErrorCode::kDimensionMismatch,
          "linear system dimensions disagree");
  if (b.size() == 0) return {};
  if (reg > 0.0) {
    const Eigen::MatrixXd ar = a + reg * Eigen::MatrixXd::Identity(a.rows(), a.cols());
    Eigen::LDLT<Eigen::MatrixXd> ldlt(ar);
    if (ldlt.info() == Eigen::Success) {
      Eigen::VectorXd x = ldlt.solve(b);
      if (x.allFinite() && (ar * x - b).norm() <= 1e-8 * (1.0 + b.norm())) return x;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  const Eigen::VectorXd& w = es.eigenvalues();
  const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
  Eigen::VectorXd proj = es.eigenvectors().transpose() * b;
  for (Eigen::Index k = 0; k < w.size(); ++k)
    proj[k] = w[k] > pinv_cutoff * scale ? proj[k] / (w[k] + reg) : 0.0;
  return es.eigenvectors() * proj;
}

Distance mclachlan_distance(const McLachlanSystem& sys, const Eigen::VectorXd& thetadot) {
  require(thetadot.size() == sys.C.size(), ErrorCode::kDimensionMismatch, "velocity size mismatch");
  Distance d;
  const double quad = thetadot.dot(sys.A * thetadot) - 2.0 * sys.C.dot(thetadot);
  d.delta2 = sys.h2 - sys.energy * sys.energy + quad;
  d.raw = sys.h2 + quad;
  if (d.delta2 < 0.0 && d.delta2 > -1e-10) d.delta2 = 0.0;
  return d;
}

// ---------------------------------------------------------------------------

Trajectory vqite_run(const Circuit& circuit, const Eigen::VectorXd& theta0, const DeflatedOperator& h,
                     const EvolverConfig& config, const StateVector& target) {
  validate(config);
  require(h.dim() == circuit.basis().dim(), ErrorCode::kDimensionMismatch, "Hamiltonian does not match circuit");
  auto apply_h = [&](const StateVector& v) { return h.apply(v); };
  auto velocity = [&](const Snapshot& s) {
    return regularized_solve(s.sys.A, -s.sys.C, config.regularization, config.pinv_cutoff);
  };
  auto f = [&](const Eigen::VectorXd& th, double) {
    return velocity(assemble(circuit, th, apply_h, Flow::kImaginary));
  };

  Trajectory traj;
  Eigen::VectorXd theta = theta0;
  std::vector<double> loss;
  for (int step = 0;; ++step) {
    const Snapshot s = assemble(circuit, theta, apply_h, Flow::kImaginary);
    const Eigen::VectorXd x = velocity(s);
    StepRecord rec;
    rec.step = step;
    rec.time = step * config.step;
    rec.energy = s.sys.energy;
    if (!h.found_states().empty()) {
      // report the physical energy; the deflated loss drives convergence
      rec.energy = expectation(h.base(), s.sys.state).real();
      for (const cplx o : h.overlaps(s.sys.state)) rec.overlaps.push_back(std::norm(o));
    }
    rec.delta2 = residual_distance(s, x);
    rec.delta2_raw = rec.delta2 + s.sys.energy * s.sys.energy;
    rec.c_norm = s.sys.C.size() ? s.sys.C.cwiseAbs().maxCoeff() : 0.0;
    rec.fidelity = fidelity_with(target, s.sys.state);
    if (config.record_theta) rec.theta = theta;
    traj.records.push_back(std::move(rec));
    loss.push_back(s.sys.energy);

    traj.theta = theta;
    traj.final_state = s.sys.state;
    traj.final_energy = traj.records.back().energy;

    if (!x.allFinite()) {
      traj.status = Termination::kError;
      traj.message = "singular McLachlan solve";
      ++traj.rejected_steps;
      break;
    }
    if (traj.records.back().c_norm < config.c_tolerance) {
      traj.status = Termination::kConverged;
      traj.message = "gradient below tolerance";
      break;
    }
    if (loss.size() > 10) {
      const double prev = loss[loss.size() - 11];
      if (std::abs(prev - loss.back()) <= config.energy_tolerance * std::abs(loss.back())) {
        traj.status = Termination::kConverged;
        traj.message = "energy stationary over 10 steps";
        break;
      }
    }
    if (step >= config.max_steps) {
      traj.status = Termination::kMaxSteps;
      break;
    }
    theta = step_euler_or_rk4(f, theta, rec.time, config.step, config.integrator, x);
  }
  return traj;
}

Trajectory excited_run(const Circuit& circuit, const Eigen::VectorXd& theta0, const SparseOperator& h,
                       const std::vector<StateVector>& found, const EvolverConfig& config,
                       const StateVector& target) {
  return vqite_run(circuit, theta0, DeflatedOperator(h, found, found.empty() ? 0.0 : config.alpha), config,
                   target);
}

Trajectory real_time_run(const Circuit& circuit, const Eigen::VectorXd& theta0, const HamiltonianSchedule& h,
                         const EvolverConfig& config, const StateVector& target) {
  validate(config);
  auto snapshot = [&](const Eigen::VectorXd& th, double t) {
    const SparseOperator ht = h(t);
    return assemble(circuit, th, [&](const StateVector& v) { return ht.apply(v); }, Flow::kReal);
  };
  auto velocity = [&](const Snapshot& s) {
    return regularized_solve(s.sys.A, s.sys.C, config.regularization, config.pinv_cutoff);
  };
  auto f = [&](const Eigen::VectorXd& th, double t) { return velocity(snapshot(th, t)); };

  Trajectory traj;
  Eigen::VectorXd theta = theta0;
  for (int step = 0;; ++step) {
    const double t = step * config.step;
    const Snapshot s = snapshot(theta, t);
    const Eigen::VectorXd x = velocity(s);
    StepRecord rec;
    rec.step = step;
    rec.time = t;
    rec.energy = s.sys.energy;
    rec.delta2 = residual_distance(s, x);
    rec.delta2_raw = mclachlan_distance(s.sys, x).raw;
    rec.c_norm = s.sys.C.size() ? s.sys.C.cwiseAbs().maxCoeff() : 0.0;
    rec.fidelity = fidelity_with(target, s.sys.state);
    if (config.record_theta) rec.theta = theta;
    traj.records.push_back(std::move(rec));
    traj.theta = theta;
    traj.final_state = s.sys.state;
    traj.final_energy = s.sys.energy;
    if (!x.allFinite()) {
      traj.status = Termination::kError;
      traj.message = "singular McLachlan solve";
      ++traj.rejected_steps;
      break;
    }
    if (step >= config.max_steps) {
      traj.status = Termination::kMaxSteps;
      break;
    }
    theta = step_euler_or_rk4(f, theta, t, config.step, config.integrator, x);
  }
  return traj;
}

Trajectory adiabatic_variational_run(const Circuit& circuit, const Eigen::VectorXd& theta0,
                                     const LatticeSpec& spec, double total_time, const EvolverConfig& config,
                                     const StateVector& target) {
  require(total_time > 0.0, ErrorCode::kInvalidArgument, "total time must be positive");
  const HamiltonianTerms terms = build_terms(spec);
  EvolverConfig cfg = config;
  cfg.max_steps = static_cast<int>(std::lround(total_time / config.step));
  auto schedule = [&](double t) {
    return interpolated(terms, spec.coupling, std::clamp(t / total_time, 0.0, 1.0));
  };
  return real_time_run(circuit, theta0, schedule, cfg, target);
}

LayeredResult layered_real_time_run(const LatticeSpec& spec, const OccupationVector& reference,
                                    const std::vector<Generator>& pool, const SparseOperator& h,
                                    const EvolverConfig& config, const StateVector& initial) {
  validate(config);
  const FockBasis basis(spec);
  require(h.dim() == basis.dim(), ErrorCode::kDimensionMismatch, "Hamiltonian does not match lattice");
  require(basis.dim() <= 4096, ErrorCode::kGuardExceeded, "layered evolution uses dense propagators");
  StateVector psi = initial.size() ? initial : basis_state(basis, reference);
  require_normalized(psi);
  const StateVector psi0 = psi;

  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h.to_dense());
  auto propagate = [&](const StateVector& v, double t) {
    Eigen::VectorXcd ph(es.eigenvalues().size());
    for (Eigen::Index k = 0; k < ph.size(); ++k) ph[k] = std::polar(1.0, -es.eigenvalues()[k] * t);
    return StateVector(es.eigenvectors() * (ph.asDiagonal() * (es.eigenvectors().adjoint() * v)));
  };
  auto distance = [](const StateVector& a, const StateVector& b) {
    return std::sqrt(std::max(0.0, 2.0 - 2.0 * std::abs(a.dot(b))));
  };

  LayeredResult out;
  auto apply_h = [&](const StateVector& v) { return h.apply(v); };
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pool.size()));
  for (int step = 0;; ++step) {
    const double t = step * config.step;
    const Circuit layer = Circuit::from_state(spec, psi, pool);
    const Snapshot s = assemble(layer, zero, apply_h, Flow::kReal);
    // exact minimizer; a Tikhonov shift would show up directly in Delta
    const Eigen::VectorXd x = regularized_solve(s.sys.A, s.sys.C, 0.0, config.pinv_cutoff);
    StepRecord rec;
    rec.step = step;
    rec.time = t;
    rec.energy = s.sys.energy;
    rec.delta2 = residual_distance(s, x);
    rec.delta2_raw = mclachlan_distance(s.sys, x).raw;
    rec.c_norm = s.sys.C.size() ? s.sys.C.cwiseAbs().maxCoeff() : 0.0;
    out.trajectory.records.push_back(std::move(rec));
    const StateVector exact = propagate(psi0, t);
    out.exact_distance.push_back(distance(exact, psi));
    out.infidelity.push_back(1.0 - std::abs(exact.dot(psi)));
    if (step >= config.max_steps) break;
    const StateVector next = layer.prepare(config.step * x);
    out.step_error.push_back(distance(propagate(psi, config.step), next));
    psi = next;
  }
  out.trajectory.final_state = psi;
  out.trajectory.final_energy = expectation(h, psi).real();
  out.trajectory.status = Termination::kMaxSteps;
  return out;
}

GrowthResult adaptive_grow(Circuit& circuit, Eigen::VectorXd& theta, const SparseOperator& h, double delta_cut,
                           const std::vector<Generator>& pool, const EvolverConfig& config) {
  require(delta_cut >= 0.0, ErrorCode::kInvalidArgument, "delta_cut must be non-negative");
  auto apply_h = [&](const StateVector& v) { return h.apply(v); };
  auto delta_of = [&](const Circuit& c, const Eigen::VectorXd& th) {
    const Snapshot s = assemble(c, th, apply_h, Flow::kReal);
    const Eigen::VectorXd x = regularized_solve(s.sys.A, s.sys.C, 0.0, config.pinv_cutoff);
    return std::sqrt(residual_distance(s, x));
  };
  // Below this the distance is rounding noise.
  constexpr double kFloor = 1e-12;
  GrowthResult out;
  double current = delta_of(circuit, theta);
  out.delta.push_back(current);
  std::vector<bool> used(pool.size(), false);
  while (true) {
    if (current <= delta_cut || current <= kFloor) {
      out.reached_cut = true;
      break;
    }
    double best = current;
    std::size_t best_j = pool.size();
    for (std::size_t j = 0; j < pool.size(); ++j) {
      if (used[j]) continue;
      Circuit trial = circuit;
      trial.append(pool[j]);
      Eigen::VectorXd th(theta.size() + 1);
      th << theta, 0.0;
      const double d = delta_of(trial, th);
      if (d < best) {  // strict; first in pool wins exact ties
        best = d;
        best_j = j;
      }
    }
    if (best_j == pool.size()) {
      out.tolerance_floor = true;
      break;
    }
    used[best_j] = true;
    circuit.append(pool[best_j]);
    Eigen::VectorXd th(theta.size() + 1);
    th << theta, 0.0;
    theta = th;
    current = best;
    out.appended.push_back(best_j);
    out.delta.push_back(current);
  }
  return out;
}

Trajectory gd_run(const Circuit& circuit, const Eigen::VectorXd& theta0, const SparseOperator& h,
                  const EvolverConfig& config) {
  validate(config);
  require(config.learning_rate > 0.0, ErrorCode::kInvalidArgument, "learning rate must be positive");
  auto apply_h = [&](const StateVector& v) { return h.apply(v); };
  Trajectory traj;
  Eigen::VectorXd theta = theta0;
  int rising = 0;
  for (int step = 0;; ++step) {
    const Snapshot s = assemble(circuit, theta, apply_h, Flow::kImaginary);
    StepRecord rec;
    rec.step = step;
    rec.time = step * config.learning_rate;
    rec.energy = s.sys.energy;
    rec.c_norm = s.sys.C.size() ? s.sys.C.cwiseAbs().maxCoeff() : 0.0;
    if (config.record_theta) rec.theta = theta;
    if (!traj.records.empty()) rising = rec.energy > traj.records.back().energy ? rising + 1 : 0;
    traj.records.push_back(std::move(rec));
    traj.theta = theta;
    traj.final_state = s.sys.state;
    traj.final_energy = s.sys.energy;
    if (rising >= 10) {
      traj.status = Termination::kError;
      traj.message = "energy increased over 10 consecutive steps";
      break;
    }
    if (traj.records.back().c_norm < config.c_tolerance) {
      traj.status = Termination::kConverged;
      traj.message = "gradient below tolerance";
      break;
    }
    if (step >= config.max_steps) {
      traj.status = Termination::kMaxSteps;
      break;
    }
    theta -= config.learning_rate * 2.0 * s.sys.C;
  }
  return traj;
}

double qntk_rate(const SparseOperator& h, double eta, std::size_t n_params) {
  const double dim = static_cast<double>(h.dim());
  require(dim > 0, ErrorCode::kInvalidArgument, "empty Hamiltonian");
  // tr(H^2) = sum_ij H_ij H_ji
  const double tr = (h * h).trace().real();
  return eta * static_cast<double>(n_params) * tr / (dim * dim);
}

Eigen::VectorXd jitter(std::size_t n, unsigned long long seed, double scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace phi4
