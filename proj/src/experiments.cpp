#include "phi4/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <set>

#include "phi4/encoder.hpp"
#include "phi4/error.hpp"
#include "phi4/reference.hpp"

namespace phi4 {

namespace {

std::string key_at(const std::string& name, double x) { return name + "@" + format_double(x); }

std::string occ_key(const OccupationVector& o) {
  std::string s = "[";
  for (std::size_t i = 0; i < o.size(); ++i) s += (i ? "," : "") + std::to_string(o[i]);
  return s + "]";
}

std::string occ_compact(const OccupationVector& o) {
  std::string s;
  for (int n : o) s += std::to_string(n);
  return s;
}

OccupationVector to_occupation(const std::vector<int>& v, const LatticeSpec& spec, const std::string& what) {
  require(v.size() == static_cast<std::size_t>(spec.n_sites), ErrorCode::kSchema,
          what + ": occupation length must equal n_sites");
  for (int n : v)
    require(n >= 0 && n < spec.local_dim, ErrorCode::kSchema, what + ": occupation outside 0..local_dim-1");
  return OccupationVector(v.begin(), v.end());
}

std::vector<OccupationVector> one_particle_states(const LatticeSpec& spec) {
  std::vector<OccupationVector> out;
  for (int j = 0; j < spec.n_sites; ++j) {
    OccupationVector o(static_cast<std::size_t>(spec.n_sites), 0);
    o[static_cast<std::size_t>(j)] = 1;
    out.push_back(o);
  }
  return out;
}

StateVector random_state(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  StateVector v(static_cast<Eigen::Index>(dim));
  for (auto& x : v) x = cplx(g(rng), g(rng));
  return v.normalized();
}

/// Largest-overlap eigenvector index for a state.
int best_eigen(const SpectrumReport& rep, const StateVector& v) {
  double best = -1.0;
  int bi = 0;
  for (Eigen::Index i = 0; i < rep.eigenvectors.cols(); ++i) {
    const double w = std::norm(rep.eigenvectors.col(i).dot(v));
    if (w > best + 1e-12) {
      best = w;
      bi = static_cast<int>(i);
    }
  }
  return bi;
}

/// Weight of v inside the degeneracy cluster of eigenvalue i.
double cluster_weight(const SpectrumReport& rep, int i, const StateVector& v) {
  double w = 0.0;
  for (int k : rep.cluster_containing(i)) w += std::norm(rep.eigenvectors.col(k).dot(v));
  return w;
}

class Artifacts {
 public:
  explicit Artifacts(std::string dir) : dir_(std::move(dir)) {
    if (!dir_.empty()) ensure_directory(dir_);
  }
  void csv(const std::string& name, const CsvWriter& w) { text(name, w.str()); }
  void json(const std::string& name, const Json& j) { text(name, j.dump(2) + "\n"); }
  void text(const std::string& name, const std::string& t) {
    if (dir_.empty()) return;
    write_text((std::filesystem::path(dir_) / name).string(), t);
    list_.push_back(name);
  }
  const Json& list() const { return list_; }

 private:
  std::string dir_;
  Json list_ = Json::array();
};

struct Context {
  const ExperimentConfig& cfg;
  ObjectReader params;
  Artifacts out;
  std::optional<std::uint64_t> seed;
  Json metrics = Json::object();
  Json assumptions = Json::array();

  std::uint64_t need_seed(const std::string& why) const {
    require(seed.has_value(), ErrorCode::kSchema, "seed: required because " + why);
    return *seed;
  }
};

AdiabaticConfig read_adiabatic(ObjectReader& p, int steps, double dt, int checkpoints) {
  AdiabaticConfig a;
  a.steps = p.integer("steps", steps);
  a.dt = p.number("dt", dt);
  a.checkpoints = p.integer("checkpoints", checkpoints);
  require(a.steps >= 1, ErrorCode::kSchema, "params.steps: must be positive");
  require(a.dt > 0.0, ErrorCode::kSchema, "params.dt: must be positive");
  require(a.checkpoints >= 0, ErrorCode::kSchema, "params.checkpoints: must be non-negative");
  return a;
}

void trajectory_csv(Artifacts& out, const std::string& name, const Trajectory& t) {
  CsvWriter w({"step", "time", "energy", "delta2", "c_norm", "fidelity"});
  for (const auto& r : t.records)
    w.row(std::vector<double>{static_cast<double>(r.step), r.time, r.energy, r.delta2, r.c_norm, r.fidelity});
  out.csv(name, w);
}

double monotone_violation(const Trajectory& t) {
  double worst = 0.0;
  for (std::size_t k = 1; k < t.records.size(); ++k)
    worst = std::max(worst, t.records[k].energy - t.records[k - 1].energy);
  return worst;
}

// ---------------------------------------------------------------------------

void run_spectrum(Context& ctx) {
  auto& p = ctx.params;
  const auto couplings = p.numbers("couplings", {ctx.cfg.lattice.coupling});
  const double cluster_tol = p.number("cluster_tol", 1e-6);
  const double bin_width = p.number("bin_width", 0.05);
  const int report_levels = p.integer("report_levels", 8);
  p.finish();
  require(!couplings.empty(), ErrorCode::kSchema, "params.couplings: must not be empty");
  require(report_levels >= 1, ErrorCode::kSchema, "params.report_levels: must be positive");

  const LatticeSpec& spec = ctx.cfg.lattice;
  const FockBasis basis(spec);
  require(basis.dim() <= kMaxEigenDimension, ErrorCode::kGuardExceeded, "spectrum limited to 4096 states");
  const HamiltonianTerms terms = build_terms(spec);
  const SparseOperator shift = translation_phase(spec, spec.spacing);
  const auto nlev = std::min<std::size_t>(static_cast<std::size_t>(report_levels), basis.dim());

  for (double c : couplings) {
    const SparseOperator h = terms.full(c);
    const SpectrumReport rep = eigensolve(h);
    CsvWriter w({"index", "energy", "cluster", "label", "weight", "momentum_index"});
    Json labels = Json::array();
    for (Eigen::Index i = 0; i < rep.eigenvalues.size(); ++i) {
      Eigen::Index k;
      const double wmax = rep.eigenvectors.col(i).cwiseAbs2().maxCoeff(&k);
      const auto ku = static_cast<std::size_t>(k);
      w.row({std::to_string(i), format_double(rep.eigenvalues[i]),
             std::to_string(rep.cluster_of[static_cast<std::size_t>(i)]), basis.label(ku), format_double(wmax),
             std::to_string(total_momentum_index(basis, ku))});
      if (static_cast<std::size_t>(i) < nlev) labels.push_back(basis.label(ku));
    }
    ctx.out.csv("spectrum_" + format_double(c) + ".csv", w);
    if (c == 0.0) {
      // exact free labels; ties broken by basis index
      labels = Json::array();
      const auto lv = free_levels(spec);
      for (std::size_t i = 0; i < nlev; ++i) labels.push_back(basis.label(basis.index(lv[i])));
    }
    Json levels = Json::array();
    for (std::size_t i = 0; i < nlev; ++i) levels.push_back(rep.eigenvalues[static_cast<Eigen::Index>(i)]);
    Json one = Json::array();
    for (const auto& o : one_particle_states(spec))
      one.push_back(rep.eigenvalues[best_eigen(rep, basis_state(basis, o))]);
    Json excited = Json::array();
    for (std::size_t i = 1; i < std::min<std::size_t>(6, labels.size()); ++i) excited.push_back(labels[i]);

    ctx.metrics[key_at("ground", c)] = rep.eigenvalues[0];
    ctx.metrics[key_at("levels", c)] = levels;
    ctx.metrics[key_at("labels", c)] = labels;
    ctx.metrics[key_at("excited_labels", c)] = excited;
    ctx.metrics[key_at("one_particle", c)] = one;
    ctx.metrics[key_at("clusters", c)] = rep.clusters.size();
    ctx.metrics[key_at("residual", c)] = rep.max_residual;
    ctx.metrics[key_at("translation_commutator", c)] = (shift * h).max_abs_diff(h * shift);
  }

  LatticeSpec crowd = spec;
  crowd.coupling = *std::max_element(couplings.begin(), couplings.end());
  const CrowdingReport cr = crowding_report(crowd, cluster_tol, bin_width);
  CsvWriter hist({"bin_lo", "bin_hi", "free", "interacting"});
  for (std::size_t b = 0; b < cr.free_histogram.counts.size(); ++b) {
    const double lo = cr.free_histogram.lo + static_cast<double>(b) * bin_width;
    hist.row(std::vector<double>{lo, lo + bin_width, static_cast<double>(cr.free_histogram.counts[b]),
                                 static_cast<double>(cr.interacting_histogram.counts[b])});
  }
  ctx.out.csv("histogram.csv", hist);
  Json pairs = Json::array();
  for (const auto& pp : cr.parity_pairs) pairs.push_back(Json{{"mode", pp.mode}, {"partner", pp.partner}, {"energy", pp.energy}});
  Json cols = Json::array();
  for (const auto& co : cr.collisions) cols.push_back(Json{{"multiple", co.multiple}, {"mode", co.mode}, {"gap", co.gap}});
  ctx.metrics["crowding_coupling"] = crowd.coupling;
  ctx.metrics["parity_pairs"] = pairs;
  ctx.metrics["collisions"] = cols;
  ctx.metrics["free_clusters"] = cr.free_clusters;
  ctx.metrics["interacting_clusters"] = cr.interacting_clusters;
}

// ---------------------------------------------------------------------------

struct FdErrors {
  double gradient = 0.0;
  double metric = 0.0;
};

FdErrors finite_difference_check(const Circuit& c, const SparseOperator& h, int draws, double step,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  FdErrors e;
  for (int d = 0; d < draws; ++d) {
    Eigen::VectorXd theta(static_cast<Eigen::Index>(c.size()));
    for (auto& t : theta) t = u(rng);
    const McLachlanSystem sys = mclachlan_ac(c, theta, h);
    std::vector<StateVector> fd;
    double gerr = 0.0;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      auto at = [&](double s) {
        Eigen::VectorXd th = theta;
        th[i] += s;
        return c.prepare(th);
      };
      const StateVector a1 = at(step), b1 = at(-step), a2 = at(step / 2), b2 = at(-step / 2);
      // Richardson on central differences
      const StateVector dv = (4.0 * (a2 - b2) / step - (a1 - b1) / (2.0 * step)) / 3.0;
      auto en = [&](const StateVector& v) { return expectation(h, v).real(); };
      const double g = (4.0 * (en(a2) - en(b2)) / step - (en(a1) - en(b1)) / (2.0 * step)) / 3.0;
      gerr = std::max(gerr, std::abs(2.0 * sys.C[i] - g));
      fd.push_back(dv);
    }
    e.gradient = std::max(e.gradient, gerr / std::max(1.0, 2.0 * sys.C.cwiseAbs().maxCoeff()));
    double aerr = 0.0;
    for (std::size_t i = 0; i < fd.size(); ++i)
      for (std::size_t j = 0; j < fd.size(); ++j)
        aerr = std::max(aerr, std::abs(sys.A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) -
                                       fd[i].dot(fd[j]).real()));
    e.metric = std::max(e.metric, aerr / std::max(1.0, sys.A.cwiseAbs().maxCoeff()));
  }
  return e;
}

double default_jitter(const AnsatzOptions& o) { return o.forms == GeneratorForms::kAntisymmetric ? 0.0 : 0.01; }

void run_ground(Context& ctx) {
  auto& p = ctx.params;
  const LatticeSpec& base = ctx.cfg.lattice;
  const auto couplings = p.numbers("couplings", {base.coupling});
  const auto reference =
      to_occupation(p.integers("reference", std::vector<int>(static_cast<std::size_t>(base.n_sites), 0)), base,
                    "params.reference");
  const double scale = p.number("jitter", default_jitter(ctx.cfg.ansatz));
  const int draws = p.integer("gradient_check_draws", 0);
  const double fd_step = p.number("gradient_check_step", 1e-3);
  p.finish();
  require(!couplings.empty(), ErrorCode::kSchema, "params.couplings: must not be empty");
  require(scale >= 0.0 && draws >= 0, ErrorCode::kSchema, "params: jitter and draws must be non-negative");
  std::uint64_t seed = 0;
  if (scale > 0.0) seed = ctx.need_seed("initial angles are jittered");
  if (draws > 0) seed = ctx.need_seed("gradient checks draw random angles");

  CsvWriter table({"lambda", "energy", "exact", "relative_error", "infidelity", "steps", "status"});
  for (double c : couplings) {
    LatticeSpec spec = base;
    spec.coupling = c;
    const SparseOperator h = build_hamiltonian(spec);
    const SpectrumReport rep = eigensolve(h);
    const Circuit circuit = build_ucc(spec, reference, ctx.cfg.ansatz);
    const Eigen::VectorXd th0 = scale > 0.0 ? jitter(circuit.size(), seed, scale)
                                            : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(circuit.size()));
    const StateVector target = rep.eigenvectors.col(0);
    const Trajectory t = vqite_run(circuit, th0, h, ctx.cfg.evolver, target);
    trajectory_csv(ctx.out, "ground_" + format_double(c) + ".csv", t);
    const double exact = rep.eigenvalues[0];
    const double rel = std::abs(t.final_energy - exact) / std::abs(exact);
    const double inf = 1.0 - t.records.back().fidelity;
    table.row({format_double(c), format_double(t.final_energy), format_double(exact), format_double(rel),
               format_double(inf), std::to_string(t.records.back().step), to_string(t.status)});
    ctx.metrics[key_at("energy", c)] = t.final_energy;
    ctx.metrics[key_at("exact", c)] = exact;
    ctx.metrics[key_at("rel_error", c)] = rel;
    ctx.metrics[key_at("infidelity", c)] = inf;
    ctx.metrics[key_at("steps", c)] = t.records.back().step;
    ctx.metrics[key_at("status", c)] = to_string(t.status);
    ctx.metrics[key_at("monotone_violation", c)] = monotone_violation(t);
    ctx.metrics["parameters"] = circuit.size();
    if (draws > 0 && c == couplings.front()) {
      const FdErrors e = finite_difference_check(circuit, h, draws, fd_step, seed);
      ctx.metrics["fd_gradient_error"] = e.gradient;
      ctx.metrics["fd_metric_error"] = e.metric;
      ctx.metrics["fd_draws"] = draws;
    }
  }
  ctx.out.csv("ground.csv", table);
}

// ---------------------------------------------------------------------------

void run_excited(Context& ctx) {
  auto& p = ctx.params;
  const LatticeSpec& base = ctx.cfg.lattice;
  const auto couplings = p.numbers("couplings", {base.coupling});
  std::vector<OccupationVector> refs;
  {
    const auto rows = p.integer_rows("references", {});
    for (const auto& r : rows) refs.push_back(to_occupation(r, base, "params.references"));
  }
  if (refs.empty()) {
    // |1,0,...>, then the one-particle states in order of free energy
    auto ones = one_particle_states(base);
    std::stable_sort(ones.begin(), ones.end(), [&](const auto& a, const auto& b) {
      return free_energy(base, a) < free_energy(base, b) - 1e-12;
    });
    refs = ones;
  }
  const auto ground_ref =
      to_occupation(p.integers("ground_reference", std::vector<int>(static_cast<std::size_t>(base.n_sites), 0)), base,
                    "params.ground_reference");
  const double scale = p.number("jitter", default_jitter(ctx.cfg.ansatz));
  p.finish();
  std::uint64_t seed = 0;
  if (scale > 0.0) seed = ctx.need_seed("initial angles are jittered");

  CsvWriter table({"lambda", "state", "reference", "energy", "exact", "infidelity", "cluster_size",
                   "subspace_fidelity", "steps", "status"});
  for (double c : couplings) {
    LatticeSpec spec = base;
    spec.coupling = c;
    const SparseOperator h = build_hamiltonian(spec);
    const SpectrumReport rep = eigensolve(h);
    std::vector<StateVector> found;
    double worst_inf = 0.0, worst_pair = 1.0;
    for (std::size_t k = 0; k <= refs.size(); ++k) {
      const OccupationVector& ref = k == 0 ? ground_ref : refs[k - 1];
      const Circuit circuit = build_ucc(spec, ref, ctx.cfg.ansatz);
      const Eigen::VectorXd th0 = scale > 0.0 ? jitter(circuit.size(), seed + k, scale)
                                              : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(circuit.size()));
      const Trajectory t = excited_run(circuit, th0, h, found, ctx.cfg.evolver);
      trajectory_csv(ctx.out, "excited_" + format_double(c) + "_" + std::to_string(k) + ".csv", t);
      const auto idx = static_cast<int>(k);
      const double weight = cluster_weight(rep, idx, t.final_state);
      const double inf = 1.0 - std::sqrt(weight);
      const auto csize = rep.cluster_containing(idx).size();
      const std::string sk = "[" + std::to_string(k) + "]";
      ctx.metrics[key_at("energy" + sk, c)] = t.final_energy;
      ctx.metrics[key_at("exact" + sk, c)] = rep.eigenvalues[idx];
      ctx.metrics[key_at("infidelity" + sk, c)] = inf;
      ctx.metrics[key_at("cluster_size" + sk, c)] = csize;
      ctx.metrics[key_at("subspace_fidelity" + sk, c)] = weight;
      table.row({format_double(c), std::to_string(k), occ_key(ref), format_double(t.final_energy),
                 format_double(rep.eigenvalues[idx]), format_double(inf), std::to_string(csize), format_double(weight),
                 std::to_string(t.records.back().step), to_string(t.status)});
      if (k > 0) worst_inf = std::max(worst_inf, inf);
      if (k > 0 && csize > 1) worst_pair = std::min(worst_pair, weight);
      // deflate against an orthonormal set
      StateVector v = t.final_state;
      for (const auto& f : found) v -= f * f.dot(v);
      require(v.norm() > 1e-8, ErrorCode::kNumerical, "excited search returned a previously found state");
      found.push_back(v.normalized());
    }
    ctx.metrics[key_at("max_infidelity", c)] = worst_inf;
    ctx.metrics[key_at("degenerate_subspace_fidelity", c)] = worst_pair;
  }
  ctx.out.csv("excited.csv", table);
}

// ---------------------------------------------------------------------------

void run_adiabatic(Context& ctx) {
  auto& p = ctx.params;
  const LatticeSpec& base = ctx.cfg.lattice;
  const auto couplings = p.numbers("couplings", {base.coupling});
  std::vector<OccupationVector> initial;
  for (const auto& r : p.integer_rows("initial", {})) initial.push_back(to_occupation(r, base, "params.initial"));
  if (initial.empty()) initial = one_particle_states(base);
  const AdiabaticConfig acfg = read_adiabatic(p, 100, 1.0, 100);
  const bool variational = p.boolean("variational", false);
  p.finish();
  require(acfg.checkpoints > 0, ErrorCode::kSchema, "params.checkpoints: tracking needs at least one checkpoint");

  CsvWriter table({"lambda", "initial", "tracked_energy", "final_energy", "infidelity", "subspace_fidelity",
                   "variational_infidelity"});
  for (double c : couplings) {
    LatticeSpec spec = base;
    spec.coupling = c;
    double worst = 0.0;
    for (const auto& o : initial) {
      const AdiabaticResult r = adiabatic_evolve(o, spec, acfg);
      CsvWriter w({"step", "s", "energy", "infidelity", "subspace_infidelity"});
      for (const auto& pt : r.path)
        w.row(std::vector<double>{static_cast<double>(pt.step), pt.s, pt.energy, pt.infidelity, pt.subspace_infidelity});
      ctx.out.csv("adiabatic_" + format_double(c) + "_" + occ_compact(o) + ".csv", w);
      const std::string k = occ_key(o);
      ctx.metrics[key_at("final_infidelity" + k, c)] = r.final_infidelity;
      ctx.metrics[key_at("subspace_fidelity" + k, c)] = r.final_subspace_fidelity;
      ctx.metrics[key_at("tracked_energy" + k, c)] = r.tracked_energy;
      ctx.metrics[key_at("final_energy" + k, c)] = r.path.back().energy;
      worst = std::max(worst, r.final_infidelity);
      double vinf = std::numeric_limits<double>::quiet_NaN();
      if (variational) {
        const Circuit circuit = build_ucc(spec, o, ctx.cfg.ansatz);
        EvolverConfig ec = ctx.cfg.evolver;
        ec.step = acfg.dt;
        ec.max_steps = acfg.steps;
        const Trajectory t = adiabatic_variational_run(
            circuit, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(circuit.size())), spec, acfg.steps * acfg.dt, ec,
            r.tracked_state);
        trajectory_csv(ctx.out, "adiabatic_variational_" + format_double(c) + "_" + occ_compact(o) + ".csv", t);
        vinf = 1.0 - t.records.back().fidelity;
        ctx.metrics[key_at("variational_infidelity" + k, c)] = vinf;
      }
      table.row({format_double(c), occ_key(o), format_double(r.tracked_energy), format_double(r.path.back().energy),
                 format_double(r.final_infidelity), format_double(r.final_subspace_fidelity), format_double(vinf)});
    }
    ctx.metrics[key_at("max_infidelity", c)] = worst;
  }
  ctx.metrics["steps"] = acfg.steps;
  ctx.metrics["dt"] = acfg.dt;
  ctx.out.csv("adiabatic.csv", table);
}

// ---------------------------------------------------------------------------

std::vector<Generator> make_pool(const std::string& kind, const LatticeSpec& spec, const SparseOperator& h,
                                 const AnsatzOptions& opts) {
  if (kind == "ucc") return build_ucc(spec, OccupationVector(static_cast<std::size_t>(spec.n_sites), 0), opts).generators();
  const QubitLayout layout = QubitLayout::for_spec(spec);
  std::vector<Generator> pool;
  if (kind == "hamiltonian") {
    const PauliSum sum = compile(h, layout);
    for (const auto& t : sum.terms())
      if (t.weight() > 0) pool.push_back(pauli_generator(t, layout));
    return pool;
  }
  if (kind == "pauli") {
    const int nq = layout.total_qubits();
    require(nq <= 6, ErrorCode::kGuardExceeded, "full Pauli pool limited to 6 qubits");
    for (long code = 1; code < (1L << (2 * nq)); ++code) {
      PauliString ps;
      ps.coefficient = 1.0;
      for (int q = 0; q < nq; ++q) ps.axes.push_back(static_cast<Pauli>((code >> (2 * q)) & 3));
      pool.push_back(pauli_generator(ps, layout));
    }
    return pool;
  }
  fail(ErrorCode::kSchema, "params.pool: expected hamiltonian, pauli or ucc");
}

void run_evolve(Context& ctx) {
  auto& p = ctx.params;
  const LatticeSpec& spec = ctx.cfg.lattice;
  const std::string mode = p.string("mode", "layered");
  const std::string pool_kind = p.string("pool", mode == "adaptive" ? "pauli" : "hamiltonian");
  const bool random_initial = p.boolean("random_initial", false);
  const int eigenstate = p.integer("eigenstate", -1);
  const auto occ =
      to_occupation(p.integers("initial", std::vector<int>(static_cast<std::size_t>(spec.n_sites), 0)), spec,
                    "params.initial");
  const auto fractions = p.numbers("delta_cut_fractions", {0.0});
  p.finish();
  require(mode == "layered" || mode == "variational" || mode == "adaptive", ErrorCode::kSchema,
          "params.mode: expected layered, variational or adaptive");
  require(!(random_initial && eigenstate >= 0), ErrorCode::kSchema,
          "params: random_initial and eigenstate are exclusive");

  const SparseOperator h = build_hamiltonian(spec);
  const FockBasis basis(spec);
  StateVector psi0 = basis_state(basis, occ);
  if (random_initial) {
    std::mt19937_64 rng(ctx.need_seed("the initial state is random"));
    psi0 = random_state(basis.dim(), rng);
  } else if (eigenstate >= 0) {
    const SpectrumReport rep = eigensolve(h);
    require(eigenstate < rep.eigenvalues.size(), ErrorCode::kSchema, "params.eigenstate: index out of range");
    psi0 = rep.eigenvectors.col(eigenstate);
    ctx.metrics["eigen_energy"] = rep.eigenvalues[eigenstate];
  }
  ctx.metrics["initial_energy"] = expectation(h, psi0).real();

  if (mode == "layered") {
    const auto pool = make_pool(pool_kind, spec, h, ctx.cfg.ansatz);
    const LayeredResult r = layered_real_time_run(spec, occ, pool, h, ctx.cfg.evolver, psi0);
    CsvWriter w({"step", "time", "energy", "delta", "delta2_raw", "step_error", "error_sum", "exact_distance",
                 "infidelity"});
    double sum = 0.0, max_delta = 0.0, drift = 0.0;
    bool bound = true;
    const double e0 = r.trajectory.records.front().energy;
    for (std::size_t k = 0; k < r.trajectory.records.size(); ++k) {
      const auto& rec = r.trajectory.records[k];
      const double delta = std::sqrt(std::max(0.0, rec.delta2));
      max_delta = std::max(max_delta, delta);
      drift = std::max(drift, std::abs(rec.energy - e0));
      bound = bound && r.exact_distance[k] <= sum + 1e-12 && r.infidelity[k] <= sum + 1e-12;
      const double se = k < r.step_error.size() ? r.step_error[k] : std::numeric_limits<double>::quiet_NaN();
      w.row(std::vector<double>{static_cast<double>(rec.step), rec.time, rec.energy, delta, rec.delta2_raw, se, sum,
                                r.exact_distance[k], r.infidelity[k]});
      if (k < r.step_error.size()) sum += r.step_error[k];
    }
    ctx.out.csv("layered.csv", w);
    ctx.metrics["pool_size"] = pool.size();
    ctx.metrics["steps"] = r.step_error.size();
    ctx.metrics["max_delta"] = max_delta;
    ctx.metrics["error_sum"] = sum;
    ctx.metrics["final_distance"] = r.exact_distance.back();
    ctx.metrics["final_infidelity"] = r.infidelity.back();
    ctx.metrics["energy_drift"] = drift;
    ctx.metrics["bound_holds"] = bound;
    return;
  }

  if (mode == "variational") {
    const Circuit base = build_ucc(spec, occ, ctx.cfg.ansatz);
    const Circuit circuit = Circuit::from_state(spec, psi0, base.generators());
    const Trajectory t = real_time_run(circuit, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(circuit.size())),
                                       [&](double) { return h; }, ctx.cfg.evolver);
    CsvWriter w({"step", "time", "energy", "delta2", "delta2_raw"});
    double drift = 0.0, max_d2 = 0.0;
    for (const auto& rec : t.records) {
      w.row(std::vector<double>{static_cast<double>(rec.step), rec.time, rec.energy, rec.delta2, rec.delta2_raw});
      drift = std::max(drift, std::abs(rec.energy - t.records.front().energy));
      max_d2 = std::max(max_d2, rec.delta2);
    }
    ctx.out.csv("realtime.csv", w);
    ctx.metrics["energy_drift"] = drift;
    ctx.metrics["max_delta"] = std::sqrt(max_d2);
    ctx.metrics["final_energy"] = t.final_energy;
    ctx.metrics["steps"] = t.records.back().step;
    return;
  }

  // adaptive
  const auto pool = make_pool(pool_kind, spec, h, ctx.cfg.ansatz);
  ctx.metrics["pool_size"] = pool.size();
  double initial_delta = -1.0;
  bool all_strict = true, all_reached = true, all_within = true;
  for (double f : fractions) {
    require(f >= 0.0 && f < 1.0, ErrorCode::kSchema, "params.delta_cut_fractions: values must lie in [0, 1)");
    Circuit c = Circuit::from_state(spec, psi0, {});
    Eigen::VectorXd theta;
    if (initial_delta < 0.0) {
      Circuit probe = c;
      Eigen::VectorXd tp;
      initial_delta = adaptive_grow(probe, tp, h, std::numeric_limits<double>::infinity(), pool, ctx.cfg.evolver).delta.front();
    }
    const double cut = f * initial_delta;
    const GrowthResult g = adaptive_grow(c, theta, h, cut, pool, ctx.cfg.evolver);
    CsvWriter w({"iteration", "pool_index", "label", "delta"});
    w.row({"0", "", "", format_double(g.delta.front())});
    bool strict = true;
    for (std::size_t k = 0; k < g.appended.size(); ++k) {
      w.row({std::to_string(k + 1), std::to_string(g.appended[k]), pool[g.appended[k]].family() + " " + pool[g.appended[k]].label().to_string(),
             format_double(g.delta[k + 1])});
      strict = strict && g.delta[k + 1] < g.delta[k];
    }
    ctx.out.csv("adaptive_" + format_double(f) + ".csv", w);
    const std::string tag = "@" + format_double(f);
    ctx.metrics["appended" + tag] = g.appended.size();
    ctx.metrics["final_delta" + tag] = g.delta.back();
    ctx.metrics["reached_cut" + tag] = g.reached_cut;
    ctx.metrics["strictly_decreasing" + tag] = strict;
    all_strict = all_strict && strict;
    all_reached = all_reached && g.reached_cut;
    all_within = all_within && g.appended.size() <= pool.size();
  }
  ctx.metrics["initial_delta"] = initial_delta;
  ctx.metrics["strictly_decreasing"] = all_strict;
  ctx.metrics["reached_cut"] = all_reached;
  ctx.metrics["within_pool"] = all_within;
}

// ---------------------------------------------------------------------------

void run_compile(Context& ctx) {
  auto& p = ctx.params;
  const LatticeSpec& base = ctx.cfg.lattice;
  const auto sites = p.integers("n_sites", {2, 3, 4, 5, 6, 7, 8});
  const auto h_sites = p.integers("hamiltonian_sites", {2, 3, 4});
  const bool ladders = p.boolean("ladders", true);
  p.finish();

  double roundtrip = 0.0;
  auto track = [&](const SparseOperator& op, const PauliSum& sum, const QubitLayout& layout) {
    roundtrip = std::max(roundtrip, reconstruct(sum, layout).max_abs_diff(op));
  };

  if (ladders) {
    CsvWriter w({"operator", "local_dim", "qubits", "terms"});
    struct Case {
      std::string name;
      int d;
      DenseMatrix m;
    };
    const std::vector<Case> cases = {
        {"a+adag", 2, single_mode_ladder(2, LadderKind::kLower) + single_mode_ladder(2, LadderKind::kRaise)},
        {"a", 2, single_mode_ladder(2, LadderKind::kLower)},
        {"adag", 4, single_mode_ladder(4, LadderKind::kRaise)},
        {"a", 4, single_mode_ladder(4, LadderKind::kLower)}};
    for (const auto& cs : cases) {
      const QubitLayout lay = QubitLayout::single_mode(cs.d);
      const PauliSum sum = compile(LocalOperator{{0}, cs.m}, lay);
      track(SparseOperator::from_dense(cs.m), sum, lay);
      w.row({cs.name, std::to_string(cs.d), std::to_string(lay.total_qubits()), std::to_string(sum.size())});
      ctx.metrics["terms[" + cs.name + ",d=" + std::to_string(cs.d) + "]"] = sum.size();
    }
    ctx.out.csv("ladders.csv", w);
  }

  {
    // all T1 transitions of one mode summed into a single operator
    LatticeSpec one = base;
    one.n_sites = 1;
    const auto gens = build_t1(one, ctx.cfg.ansatz);
    if (!gens.empty()) {
      const int d = base.local_dim;
      DenseMatrix sum = DenseMatrix::Zero(d, d);
      for (const auto& g : gens) sum += g.action().matrix;
      const QubitLayout lay = QubitLayout::single_mode(d);
      const PauliSum ps = compile(LocalOperator{{0}, sum}, lay);
      track(SparseOperator::from_dense(sum), ps, lay);
      Json axes = Json::array();
      for (const auto& t : ps.terms()) axes.push_back(t.axes_string());
      ctx.metrics["t1_single_terms"] = ps.size();
      ctx.metrics["t1_single_axes"] = axes;
    }
  }

  CsvWriter counts({"n_sites", "generators", "rotation_count", "distinct_pauli", "bound_18N"});
  std::vector<double> xs, ys;
  bool within = true;
  for (int n : sites) {
    LatticeSpec spec = base;
    spec.n_sites = n;
    try {
      spec.validate();
    } catch (const Error& e) {
      fail(ErrorCode::kSchema, std::string("params.n_sites: ") + e.what());
    }
    const Circuit c = build_ucc(spec, OccupationVector(static_cast<std::size_t>(n), 0), ctx.cfg.ansatz);
    const QubitLayout lay = QubitLayout::for_spec(spec);
    const auto rot = c.rotation_count(lay);
    const auto distinct = c.distinct_pauli_count(lay);
    counts.row({std::to_string(n), std::to_string(c.size()), std::to_string(rot), std::to_string(distinct),
                std::to_string(18 * n)});
    const std::string tag = "@" + std::to_string(n);
    ctx.metrics["generators" + tag] = c.size();
    ctx.metrics["rotations" + tag] = rot;
    ctx.metrics["distinct" + tag] = distinct;
    within = within && distinct <= static_cast<std::size_t>(18 * n);
    xs.push_back(n);
    ys.push_back(static_cast<double>(distinct));
  }
  ctx.out.csv("pauli_counts.csv", counts);
  if (xs.size() >= 2) {
    const LineFit f = fit_line(xs, ys);
    ctx.metrics["distinct_slope"] = f.slope;
    ctx.metrics["distinct_intercept"] = f.intercept;
  }
  ctx.metrics["within_18N"] = within;

  CsvWriter hw({"n_sites", "terms", "bound"});
  for (int n : h_sites) {
    LatticeSpec spec = base;
    spec.n_sites = n;
    const HamiltonianCompile hc = compile_hamiltonian(spec);
    const QubitLayout lay = QubitLayout::for_spec(spec);
    track(build_hamiltonian(spec), hc.sum, lay);
    hw.row({std::to_string(n), std::to_string(hc.term_count), format_double(hc.bound)});
    ctx.metrics["hamiltonian_terms@" + std::to_string(n)] = hc.term_count;
    ctx.metrics["hamiltonian_bound@" + std::to_string(n)] = hc.bound;
    ctx.metrics["hamiltonian_margin@" + std::to_string(n)] = hc.bound - static_cast<double>(hc.term_count);
    if (n == base.n_sites) {
      ctx.out.text("hamiltonian.pauli", hc.sum.serialize());
      ctx.out.text("hamiltonian.coo", coordinate_list(build_hamiltonian(spec)));
    }
  }
  ctx.out.csv("hamiltonian_counts.csv", hw);

  // generators of the configured lattice
  const Circuit c = build_ucc(base, OccupationVector(static_cast<std::size_t>(base.n_sites), 0), ctx.cfg.ansatz);
  const QubitLayout lay = QubitLayout::for_spec(base);
  if (lay.total_qubits() <= 16)
    for (const auto& g : c.generators()) track(embed(FockBasis(base), g.action()), g.pauli_form(lay), lay);
  ctx.out.json("circuit_manifest.json", circuit_manifest(c, base));
  ctx.metrics["roundtrip_error"] = roundtrip;
}

// ---------------------------------------------------------------------------

void run_fidelity(Context& ctx) {
  auto& p = ctx.params;
  const LatticeSpec& spec = ctx.cfg.lattice;
  const auto particles = p.integers("particles", {1});
  const int draws = p.integer("draws", 0);
  const AdiabaticConfig acfg = read_adiabatic(p, 100, 1.0, 0);
  p.finish();
  require(draws >= 0, ErrorCode::kSchema, "params.draws: must be non-negative");

  CsvWriter table({"particles", "dimension", "expected", "reduced", "gram_error", "idempotency_error"});
  std::optional<SubspaceProjector> first;
  for (int n : particles) {
    const SubspaceResult r = n_particle_subspace(spec, n, acfg);
    const DenseMatrix lam = r.projector.to_dense();
    const double idem = (lam * lam - lam).cwiseAbs().maxCoeff();
    const double herm = (lam - lam.adjoint()).cwiseAbs().maxCoeff();
    const std::string tag = "[" + std::to_string(n) + "]";
    ctx.metrics["dimension" + tag] = r.projector.dimension();
    ctx.metrics["expected_dimension" + tag] = r.expected_dimension;
    ctx.metrics["reduced" + tag] = r.reduced;
    ctx.metrics["gram_error" + tag] = r.projector.gram_error();
    ctx.metrics["idempotency_error" + tag] = idem;
    ctx.metrics["hermiticity_error" + tag] = herm;
    table.row({std::to_string(n), std::to_string(r.projector.dimension()), std::to_string(r.expected_dimension),
               r.reduced ? "true" : "false", format_double(r.projector.gram_error()), format_double(idem)});
    ctx.out.json("subspace_" + std::to_string(n) + ".json", state_bundle(r.projector.basis()));
    if (!first) first = r.projector;
  }
  ctx.out.csv("subspaces.csv", table);

  if (draws > 0 && first && first->dimension() > 0) {
    std::mt19937_64 rng(ctx.need_seed("fidelity draws are random"));
    std::normal_distribution<double> g;
    const auto dim = static_cast<std::size_t>(first->basis().front().size());
    CsvWriter w({"draw", "state_fidelity", "subspace_fidelity", "margin"});
    double min_margin = std::numeric_limits<double>::infinity();
    int violations = 0;
    for (int d = 0; d < draws; ++d) {
      const StateVector psi = random_state(dim, rng);
      StateVector ref = StateVector::Zero(static_cast<Eigen::Index>(dim));
      for (const auto& q : first->basis()) ref += cplx(g(rng), g(rng)) * q;
      ref.normalize();
      const double f = state_fidelity(ref, psi);
      const double fl = subspace_fidelity(psi, *first);
      const double margin = fl - f * f;
      min_margin = std::min(min_margin, margin);
      if (margin < -1e-12) ++violations;
      w.row(std::vector<double>{static_cast<double>(d), f, fl, margin});
    }
    ctx.out.csv("draws.csv", w);
    ctx.metrics["draws"] = draws;
    ctx.metrics["min_margin"] = min_margin;
    ctx.metrics["violations"] = violations;
  }
}

// ---------------------------------------------------------------------------

void run_scan(Context& ctx) {
  auto& p = ctx.params;
  const std::string kind = p.string("kind", "both");
  const auto cq = p.integers("commutator_qubits", {2, 8});
  const auto tq = p.integers("truncation_qubits", {1, 6});
  p.finish();
  require(kind == "commutator" || kind == "truncation" || kind == "both", ErrorCode::kSchema,
          "params.kind: expected commutator, truncation or both");
  require(cq.size() == 2 && tq.size() == 2 && cq[0] >= 1 && cq[0] < cq[1] && tq[0] >= 1 && tq[0] < tq[1],
          ErrorCode::kSchema, "params: qubit ranges are [min, max] with min < max");

  if (kind != "truncation") {
    const auto rows = commutator_error_scan(cq[0], cq[1]);
    CsvWriter w({"n_q", "phi_max", "error"});
    std::vector<double> x, y;
    bool decreasing = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      w.row(std::vector<double>{static_cast<double>(rows[i].n_q), rows[i].phi_max, rows[i].error});
      x.push_back(rows[i].n_q);
      y.push_back(std::log(rows[i].error));
      if (i > 0) decreasing = decreasing && rows[i].error < rows[i - 1].error;
    }
    ctx.out.csv("commutator_scan.csv", w);
    const LineFit f = fit_line(x, y);
    ctx.metrics["commutator_log_slope"] = f.slope;
    ctx.metrics["commutator_r2"] = f.r2;
    ctx.metrics["commutator_decreasing"] = decreasing;
  }
  if (kind != "commutator") {
    const auto rows = gaussian_truncation_scan(tq[0], tq[1]);
    CsvWriter w({"n_q", "window", "error"});
    std::vector<double> x, y;
    bool decreasing = true;
    double ratio = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      w.row(std::vector<double>{static_cast<double>(rows[i].n_q), rows[i].phi_max, rows[i].error});
      require(rows[i].error > 0.0, ErrorCode::kNumerical, "truncation error underflowed; shrink the scan range");
      x.push_back(rows[i].n_q);
      y.push_back(std::log(-std::log(rows[i].error)));
      if (i > 0) {
        decreasing = decreasing && rows[i].error < rows[i - 1].error;
        // double exponential: eps_{n+1} ~ eps_n^2
        ratio = std::max(ratio, std::log(rows[i].error) / std::log(rows[i - 1].error));
      }
    }
    double min_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < rows.size(); ++i)
      min_ratio = std::min(min_ratio, std::log(rows[i].error) / std::log(rows[i - 1].error));
    ctx.out.csv("truncation_scan.csv", w);
    const LineFit f = fit_line(x, y);
    ctx.metrics["truncation_loglog_slope"] = f.slope;
    ctx.metrics["truncation_loglog_r2"] = f.r2;
    ctx.metrics["truncation_log_ratio_min"] = min_ratio;
    ctx.metrics["truncation_log_ratio_max"] = ratio;
    ctx.metrics["truncation_decreasing"] = decreasing;
  }
}

}  // namespace

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorCode::kInvalidArgument, "fit needs two or more points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  LineFit f;
  const double vx = n * sxx - sx * sx;
  const double vy = n * syy - sy * sy;
  require(vx > 0.0, ErrorCode::kInvalidArgument, "fit needs distinct x values");
  f.slope = (n * sxy - sx * sy) / vx;
  f.intercept = (sy - f.slope * sx) / n;
  f.r2 = vy > 0.0 ? (n * sxy - sx * sy) * (n * sxy - sx * sy) / (vx * vy) : 1.0;
  return f;
}

Json run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  const std::string out_dir = options.out_dir.empty() ? config.output : options.out_dir;
  Context ctx{config, ObjectReader(config.params, "params"), Artifacts(out_dir),
              options.seed ? options.seed : config.seed};
  switch (config.task) {
    case Task::kSpectrum: run_spectrum(ctx); break;
    case Task::kGround: run_ground(ctx); break;
    case Task::kExcited: run_excited(ctx); break;
    case Task::kAdiabatic: run_adiabatic(ctx); break;
    case Task::kEvolve: run_evolve(ctx); break;
    case Task::kCompile: run_compile(ctx); break;
    case Task::kFidelity: run_fidelity(ctx); break;
    case Task::kScan: run_scan(ctx); break;
  }
  Json s;
  s["task"] = to_string(config.task);
  s["origin"] = config.origin;
  s["description"] = config.description;
  s["seed"] = ctx.seed ? Json(*ctx.seed) : Json(nullptr);
  s["lattice"] = to_json(config.lattice);
  s["evolver"] = to_json(config.evolver);
  s["ansatz"] = to_json(config.ansatz);
  s["params"] = config.params;
  s["metrics"] = ctx.metrics;
  Json arts = ctx.out.list();
  if (!out_dir.empty()) arts.push_back("summary.json");
  s["artifacts"] = arts;
  ctx.out.json("summary.json", s);
  return s;
}

// ---------------------------------------------------------------------------

std::vector<std::string> GoldenTable::configs() const {
  std::vector<std::string> out;
  for (const auto& g : goldens)
    if (std::find(out.begin(), out.end(), g.config) == out.end()) out.push_back(g.config);
  return out;
}

const KnownDeviation* GoldenTable::deviation(const std::string& golden_id) const {
  for (const auto& d : deviations)
    if (d.golden == golden_id) return &d;
  return nullptr;
}

GoldenTable load_goldens(const std::string& path) {
  GoldenTable t;
  t.path = path;
  t.directory = std::filesystem::path(path).parent_path().string();
  std::string text;
  try {
    text = read_text(path);
  } catch (const Error&) {
    fail(ErrorCode::kSchema, "golden table not found: " + path);
  }
  try {
    t.document = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kSchema, path + ": invalid JSON: " + e.what());
  }
  ObjectReader r(t.document, "");
  r.integer("version");
  r.string("description", "");
  {
    const Json& crit = r.raw("criteria");
    require(crit.is_object(), ErrorCode::kSchema, "criteria: expected an object");
    for (const auto& [k, v] : crit.items()) {
      int id = 0;
      try {
        id = std::stoi(k);
      } catch (...) {
        fail(ErrorCode::kSchema, "criteria: keys must be criterion numbers");
      }
      require(id >= 1 && id <= 99 && v.is_string(), ErrorCode::kSchema, "criteria." + k + ": expected a title");
      if (t.criteria_titles.size() <= static_cast<std::size_t>(id)) t.criteria_titles.resize(static_cast<std::size_t>(id) + 1);
      t.criteria_titles[static_cast<std::size_t>(id)] = v.get<std::string>();
    }
  }
  const Json& gs = r.raw("goldens");
  require(gs.is_array(), ErrorCode::kSchema, "goldens: expected an array");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < gs.size(); ++i) {
    ObjectReader g(gs[i], "goldens[" + std::to_string(i) + "]");
    Golden e;
    e.id = g.string("id");
    require(ids.insert(e.id).second, ErrorCode::kSchema, g.path() + ": duplicate id " + e.id);
    e.criterion = g.integer("criterion");
    e.config = g.string("config");
    e.provenance = g.string("provenance");
    require(e.provenance == "PUBLISHED" || e.provenance == "DERIVED" || e.provenance == "TRIVIAL", ErrorCode::kSchema,
            g.path() + ".provenance: expected PUBLISHED, DERIVED or TRIVIAL");
    e.note = g.string("note", "");
    int kinds = 0;
    if (g.has("value")) {
      e.value = g.number("value");
      e.tol = g.number("tol");
      ++kinds;
    }
    if (g.has("max")) e.max = g.number("max");
    if (g.has("min")) e.min = g.number("min");
    if (e.max || e.min) ++kinds;
    if (g.has("increasing")) {
      const Json& inc = g.raw("increasing");
      require(inc.is_array() && inc.size() >= 2, ErrorCode::kSchema, g.path() + ".increasing: expected metric list");
      for (const auto& m : inc) {
        require(m.is_string(), ErrorCode::kSchema, g.path() + ".increasing: expected metric names");
        e.increasing.push_back(m.get<std::string>());
      }
      ++kinds;
    }
    if (g.has("same_set")) {
      e.same_set = g.raw("same_set");
      require(e.same_set->is_array(), ErrorCode::kSchema, g.path() + ".same_set: expected an array");
      ++kinds;
    }
    if (e.increasing.empty()) e.metric = g.string("metric");
    require(kinds == 1, ErrorCode::kSchema, g.path() + ": exactly one comparison kind is required");
    g.finish();
    require(e.criterion >= 1 && static_cast<std::size_t>(e.criterion) < t.criteria_titles.size() &&
                !t.criteria_titles[static_cast<std::size_t>(e.criterion)].empty(),
            ErrorCode::kSchema, g.path() + ".criterion: not declared under criteria");
    t.goldens.push_back(std::move(e));
  }
  if (r.has("known_deviations")) {
    const Json& ds = r.raw("known_deviations");
    require(ds.is_array(), ErrorCode::kSchema, "known_deviations: expected an array");
    for (std::size_t i = 0; i < ds.size(); ++i) {
      ObjectReader d(ds[i], "known_deviations[" + std::to_string(i) + "]");
      KnownDeviation k{d.string("golden"), d.string("reason")};
      d.finish();
      require(ids.count(k.golden) > 0, ErrorCode::kSchema, d.path() + ".golden: unknown golden id " + k.golden);
      t.deviations.push_back(std::move(k));
    }
  }
  r.finish();
  return t;
}

std::string sibling_goldens(const std::string& config_path) {
  return (std::filesystem::path(config_path).parent_path() / "goldens.json").string();
}

namespace {

/// Metric lookup; "name[k]" indexes into an array metric when "name[k]" itself is absent.
std::optional<Json> lookup(const Json& metrics, const std::string& key) {
  if (metrics.contains(key)) return metrics.at(key);
  const auto open = key.rfind('[');
  if (open != std::string::npos && key.back() == ']') {
    const std::string base = key.substr(0, open);
    const std::string idx = key.substr(open + 1, key.size() - open - 2);
    if (metrics.contains(base) && metrics.at(base).is_array() && !idx.empty() &&
        idx.find_first_not_of("0123456789") == std::string::npos) {
      const auto i = std::stoul(idx);
      if (i < metrics.at(base).size()) return metrics.at(base).at(i);
    }
  }
  return std::nullopt;
}

std::optional<double> as_number(const std::optional<Json>& j) {
  if (!j) return std::nullopt;
  if (j->is_boolean()) return j->get<bool>() ? 1.0 : 0.0;
  if (j->is_number()) return j->get<double>();
  return std::nullopt;
}

std::string show(const std::optional<Json>& j) { return j ? j->dump() : "missing"; }

}  // namespace

std::vector<GoldenResult> evaluate_goldens(const GoldenTable& table, const std::string& config_name,
                                           const Json& summary) {
  std::vector<GoldenResult> out;
  const Json& metrics = summary.contains("metrics") ? summary.at("metrics") : Json::object();
  for (const auto& g : table.goldens) {
    if (g.config != config_name) continue;
    GoldenResult r;
    r.id = g.id;
    r.criterion = g.criterion;
    if (const auto* d = table.deviation(g.id)) r.deviation = d->reason;
    if (!g.increasing.empty()) {
      std::vector<double> vals;
      std::string obs;
      bool ok = true;
      for (const auto& m : g.increasing) {
        const auto v = as_number(lookup(metrics, m));
        obs += (obs.empty() ? "" : " , ") + m + "=" + (v ? format_double(*v) : "missing");
        if (!v) ok = false;
        else vals.push_back(*v);
      }
      for (std::size_t i = 1; ok && i < vals.size(); ++i) ok = vals[i] > vals[i - 1];
      r.pass = ok;
      r.observed = obs;
      r.expected = "strictly increasing";
    } else if (g.same_set) {
      const auto v = lookup(metrics, g.metric);
      std::multiset<std::string> a, b;
      if (v && v->is_array())
        for (const auto& x : *v) a.insert(x.dump());
      for (const auto& x : *g.same_set) b.insert(x.dump());
      r.pass = v && v->is_array() && a == b;
      r.observed = g.metric + "=" + show(v);
      r.expected = "same set as " + g.same_set->dump();
    } else {
      const auto v = as_number(lookup(metrics, g.metric));
      r.observed = g.metric + "=" + (v ? format_double(*v) : "missing");
      if (!v) {
        r.pass = false;
      } else if (g.value) {
        r.pass = std::abs(*v - *g.value) <= g.tol;
        r.expected = format_double(*g.value) + " +- " + format_double(g.tol);
      } else {
        r.pass = (!g.max || *v <= *g.max) && (!g.min || *v >= *g.min);
        if (g.min) r.expected += ">= " + format_double(*g.min);
        if (g.max) r.expected += std::string(g.min ? " and " : "") + "<= " + format_double(*g.max);
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

bool AcceptanceReport::all_pass() const {
  return std::all_of(criteria.begin(), criteria.end(), [](const auto& c) { return c.pass; });
}

bool AcceptanceReport::only_documented_failures() const {
  return std::all_of(criteria.begin(), criteria.end(), [](const auto& c) { return c.pass || c.documented; });
}

AcceptanceReport run_acceptance(const GoldenTable& table, const RunOptions& options) {
  std::map<int, CriterionResult> by_id;
  for (std::size_t i = 1; i < table.criteria_titles.size(); ++i)
    if (!table.criteria_titles[i].empty()) {
      by_id[static_cast<int>(i)].id = static_cast<int>(i);
      by_id[static_cast<int>(i)].title = table.criteria_titles[i];
    }
  for (const auto& name : table.configs()) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<GoldenResult> results;
    try {
      ExperimentConfig cfg = load_config((std::filesystem::path(table.directory) / name).string());
      // artifacts only when the caller asked for them
      if (options.out_dir.empty()) cfg.output.clear();
      RunOptions o = options;
      if (!o.out_dir.empty()) o.out_dir = (std::filesystem::path(o.out_dir) / std::filesystem::path(name).stem()).string();
      results = evaluate_goldens(table, name, run_experiment(cfg, o));
    } catch (const Error& e) {
      for (const auto& g : table.goldens)
        if (g.config == name) {
          GoldenResult r;
          r.id = g.id;
          r.criterion = g.criterion;
          r.observed = std::string("error: ") + e.what();
          if (const auto* d = table.deviation(g.id)) r.deviation = d->reason;
          results.push_back(r);
        }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::set<int> touched;
    for (auto& r : results) {
      touched.insert(r.criterion);
      by_id[r.criterion].goldens.push_back(r);
    }
    for (int c : touched) by_id[c].seconds += secs / static_cast<double>(touched.size());
  }
  AcceptanceReport rep;
  for (auto& [id, c] : by_id) {
    c.pass = !c.goldens.empty() &&
             std::all_of(c.goldens.begin(), c.goldens.end(), [](const auto& g) { return g.pass; });
    c.documented = !c.pass && !c.goldens.empty() && std::all_of(c.goldens.begin(), c.goldens.end(), [](const auto& g) {
      return g.pass || g.deviation.has_value();
    });
    rep.criteria.push_back(c);
  }
  return rep;
}

Json to_json(const AcceptanceReport& report) {
  Json j;
  Json cs = Json::array();
  for (const auto& c : report.criteria) {
    Json gs = Json::array();
    for (const auto& g : c.goldens) {
      Json e{{"id", g.id}, {"pass", g.pass}, {"observed", g.observed}, {"expected", g.expected}};
      if (g.deviation) e["documented_deviation"] = *g.deviation;
      gs.push_back(e);
    }
    cs.push_back(Json{{"criterion", c.id},
                      {"title", c.title},
                      {"pass", c.pass},
                      {"documented_deviation", c.documented},
                      {"seconds", c.seconds},
                      {"goldens", gs}});
  }
  j["criteria"] = cs;
  j["all_pass"] = report.all_pass();
  j["only_documented_failures"] = report.only_documented_failures();
  return j;
}

std::size_t regenerate_derived(const std::string& goldens_path, const RunOptions& options) {
  GoldenTable table = load_goldens(goldens_path);
  std::map<std::string, Json> summaries;
  std::size_t updated = 0;
  Json& doc = table.document["goldens"];
  for (std::size_t i = 0; i < table.goldens.size(); ++i) {
    const Golden& g = table.goldens[i];
    if (g.provenance != "DERIVED" || !g.value) continue;
    if (!summaries.count(g.config)) {
      ExperimentConfig cfg = load_config((std::filesystem::path(table.directory) / g.config).string());
      if (options.out_dir.empty()) cfg.output.clear();
      RunOptions o = options;
      if (!o.out_dir.empty()) o.out_dir = (std::filesystem::path(o.out_dir) / std::filesystem::path(g.config).stem()).string();
      summaries[g.config] = run_experiment(cfg, o);
    }
    const auto v = as_number(lookup(summaries[g.config]["metrics"], g.metric));
    require(v.has_value(), ErrorCode::kSchema, "metric " + g.metric + " missing from " + g.config);
    doc[i]["value"] = *v;
    ++updated;
  }
  write_text(goldens_path, table.document.dump(2) + "\n");
  return updated;
}

}  // namespace phi4
