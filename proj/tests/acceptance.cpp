// End-to-end acceptance suite. Ten numbered criteria cover the quantitative
// behavior the library promises, from exact spectra through the driven
// asymptotic regime to the structural theorems. Each criterion prints one
// PASS/FAIL line with its key measurements; failures add indented detail.
// The exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "catchain/analysis.hpp"
#include "catchain/bath.hpp"
#include "catchain/chain.hpp"
#include "catchain/checks.hpp"
#include "catchain/oracle.hpp"
#include "catchain/partition.hpp"
#include "catchain/solver.hpp"
#include "catchain/types.hpp"

using namespace catchain;

namespace {

struct Outcome {
  bool pass = true;
  std::string summary;
  std::vector<std::string> failures;
};

class Gate {
 public:
  void require(bool cond, const std::string& what) {
    if (!cond) {
      out_.pass = false;
      out_.failures.push_back(what);
    }
  }

  template <typename... Args>
  void summarize(const char* fmt, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), fmt, args...);
    out_.summary = buf;
  }

  Outcome finish() { return std::move(out_); }

 private:
  Outcome out_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c);
  return buf;
}

// ---------------------------------------------------------------------------
// Shared setups. The cat regime: resonant drive omega = 2 h_2, T = omega/8,
// local coupling one hundredth of the drive, drive one tenth of the uniform
// coupling.
// ---------------------------------------------------------------------------

struct Setup {
  EigenStructure es;
  BathSpec bath;
  CouplingSpec coupling;
  double omega = 0.0;
};

Setup cat_setup(double temperature) {
  Setup s;
  ChainSpec spec;
  spec.n_half = 2;
  spec.fields_h = {0.26, 0.22};
  s.es = build_eigenstructure(spec);
  s.omega = 2.0 * spec.fields_h.back();
  s.bath.temperature = temperature;
  s.coupling.e_uniform = 0.1;
  s.coupling.eps_drive = 0.1 * s.coupling.e_uniform;
  s.coupling.eps_local = 0.01 * s.coupling.eps_drive;
  return s;
}

Setup thermal_setup() {
  Setup s;
  ChainSpec spec;
  spec.n_half = 2;
  spec.fields_h = {0.3, 0.15};
  s.es = build_eigenstructure(spec);
  s.bath.temperature = 0.5;
  s.coupling.e_uniform = 0.3;
  s.coupling.eps_local = 0.015;
  return s;
}

Vector gibbs_populations(const EigenStructure& es, double t) {
  Vector p(es.dim);
  for (int k = 0; k < es.dim; ++k)
    p(k) = std::exp(-(es.state_energy(k) - es.ground_energy()) / t);
  return p / p.sum();
}

double min_eigenvalue(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> s((m + m.adjoint()) / 2.0);
  return s.eigenvalues().minCoeff();
}

// Every state the suite emits is registered with the positivity floor its
// regime contracts for; criterion 10 sweeps the registry. Solver outputs
// promise clean positivity; oracle outputs inherit the floor of their run
// (the frozen cold regime genuinely dips a few 1e-3, which its own criterion
// bounds separately).
struct EmittedState {
  std::string label;
  DensityMatrix state;
  double floor;
};

std::vector<EmittedState>& registry() {
  static std::vector<EmittedState> states;
  return states;
}

void emit(const std::string& label, const DensityMatrix& state, double floor) {
  registry().push_back({label, state, floor});
}

// ---------------------------------------------------------------------------
// 1. Spectrum reproduction: the five lowest levels of the reference chain.
// ---------------------------------------------------------------------------
Outcome criterion1() {
  Gate g;
  const auto t0 = std::chrono::steady_clock::now();

  ChainSpec spec;
  spec.n_half = 2;
  spec.fields_h = {0.2, 0.1};
  const EigenStructure es = build_eigenstructure(spec);

  // E_0 = -3J plus the one-interface quartet -J - 2h_1 - 2h_2, -J - 2h_1,
  // -J + 2h_1 and -J + 2h_1 + 2h_2.
  const double expected[5] = {-3.0, -1.6, -1.4, -0.6, -0.4};
  g.require(es.levels.size() >= 5, "fewer than five levels");
  double worst = 0.0;
  for (int i = 0; i < 5 && i < static_cast<int>(es.levels.size()); ++i) {
    const double gap = std::abs(es.levels[i].energy - expected[i]);
    worst = std::max(worst, gap);
    g.require(gap < 1e-12,
              fmt("level %.0f off by %.2e", static_cast<double>(i), gap));
  }
  const double wall = seconds_since(t0);
  g.require(wall < 1.0, fmt("runtime %.2f s >= 1 s", wall));
  g.summarize("five lowest levels exact (worst gap %.1e), %.3f s", worst, wall);
  return g.finish();
}

// ---------------------------------------------------------------------------
// 2. Partition counts and parity homogeneity for N <= 4.
// ---------------------------------------------------------------------------
Outcome criterion2() {
  Gate g;
  const auto t0 = std::chrono::steady_clock::now();

  {
    ChainSpec spec;
    spec.n_half = 2;
    spec.fields_h = {0.2, 0.1};
    const auto es = build_eigenstructure(spec);
    const auto part = build_partition(es, sx_matrix(es), 0.3);
    g.require(part.n_sectors() == 2,
              fmt("generic N=2 sectors %g != 2",
                  static_cast<double>(part.n_sectors())));
  }

  {
    ChainSpec spec;
    spec.n_half = 2;
    spec.fields_h = {0.2, 0.0};
    const auto es = build_eigenstructure(spec);
    const auto part = build_partition(es, sx_matrix(es), 0.3);
    g.require(part.n_sectors() == 3,
              fmt("h2=0 sectors %g != 3",
                  static_cast<double>(part.n_sectors())));
    int singleton = -1;
    for (int q = 0; q < part.n_sectors(); ++q)
      if (part.sets[q].size() == 1) singleton = q;
    g.require(singleton >= 0, "h2=0 partition has no singleton sector");
    if (singleton >= 0) {
      const CVector v = es.adapted.cast<Complex>() *
                        part.basis.col(part.sets[singleton][0]);
      CVector special = CVector::Zero(16);
      special(13) = 0.5;
      special(4) = -0.5;
      special(11) = -0.5;
      special(2) = 0.5;
      const double overlap = std::abs(special.dot(v));
      g.require(std::abs(overlap - 1.0) < 1e-10,
                fmt("special-state overlap %.12f != 1", overlap));
    }
  }

  int sectors_checked = 0;
  for (int n = 2; n <= 4; ++n) {
    ChainSpec spec;
    spec.n_half = n;
    if (n == 2) spec.fields_h = {0.2, 0.1};
    if (n == 3) spec.fields_h = {0.2, 0.14, 0.09};
    if (n == 4) spec.fields_h = {0.2221, 0.1241, 0.0767, 0.0421};
    const auto es = build_eigenstructure(spec);
    const auto part = build_partition(es, sx_matrix(es), 0.3);
    for (int q = 0; q < part.n_sectors(); ++q) {
      ++sectors_checked;
      g.require(part.pi_label[q] != 0,
                fmt("N=%g sector %g mixes both parities",
                    static_cast<double>(n), static_cast<double>(q)));
    }
  }

  const double wall = seconds_since(t0);
  g.require(wall < 10.0, fmt("runtime %.2f s >= 10 s", wall));
  g.summarize("2 generic / 3 special sectors, %d sectors parity-pure to N=4, "
              "%.2f s",
              sectors_checked, wall);
  return g.finish();
}

// ---------------------------------------------------------------------------
// 3. Thermalization: solver and time integrator land on the Gibbs state.
// ---------------------------------------------------------------------------
Outcome criterion3() {
  Gate g;
  const Setup s = thermal_setup();
  const double t = s.bath.temperature;

  const RateTensor rt0 =
      gamma_block(s.es, s.coupling, s.bath, std::nullopt, 0, 0.0);
  const ThermalSolution sol = solve_thermal(rt0, s.es, t);
  emit("thermal solver state", sol.steady, -1e-9);

  CMatrix gibbs = CMatrix::Zero(s.es.dim, s.es.dim);
  const Vector p = gibbs_populations(s.es, t);
  for (int k = 0; k < s.es.dim; ++k) gibbs(k, k) = p(k);

  const double d_solver = trace_distance(sol.steady.entries, gibbs);
  g.require(d_solver < 1e-6, fmt("solver Gibbs distance %.2e >= 1e-6",
                                 d_solver));

  // Slowest relaxation rate of the population generator, so the integrator
  // horizon is finite.
  Matrix rates(s.es.dim, s.es.dim);
  for (int k = 0; k < s.es.dim; ++k)
    for (int l = 0; l < s.es.dim; ++l)
      rates(k, l) = rt0.entries(rt0.support.index_of(k, k),
                                rt0.support.index_of(l, l))
                        .real();
  Eigen::EigenSolver<Matrix> esol(rates);
  double slowest = std::numeric_limits<double>::infinity();
  for (int i = 0; i < s.es.dim; ++i) {
    const double r = -esol.eigenvalues()(i).real();
    if (r > 1e-12) slowest = std::min(slowest, r);
  }
  g.require(slowest > 1e-6, fmt("slowest rate %.2e <= 1e-6 J", slowest));

  const auto t0 = std::chrono::steady_clock::now();
  EvolveOptions opts;
  opts.period = 2.0;
  opts.rel_tol = 1e-7;
  opts.converge_tol = 1e-7;
  const DensityMatrix seed = make_density_matrix(
      CMatrix::Identity(s.es.dim, s.es.dim) / static_cast<double>(s.es.dim),
      "adapted");
  const EvolveResult res = integrate(s.es, s.coupling, s.bath, seed, opts);
  const double wall = seconds_since(t0);
  emit("thermal oracle state", res.stroboscopic, -1e-6);

  const double d_oracle = trace_distance(res.stroboscopic.entries, gibbs);
  g.require(res.converged, "integrator did not converge");
  g.require(d_oracle < 1e-4, fmt("oracle Gibbs distance %.2e >= 1e-4",
                                 d_oracle));
  g.require(wall < 300.0, fmt("oracle runtime %.1f s >= 300 s", wall));

  g.summarize("Gibbs distance %.1e (solver) / %.1e (integrator), slowest "
              "rate %.1e, %.1f s",
              d_solver, d_oracle, slowest, wall);
  return g.finish();
}

// ---------------------------------------------------------------------------
// 4. Cat regime fidelities from both driven solvers.
// ---------------------------------------------------------------------------
Outcome criterion4() {
  Gate g;
  Setup s = cat_setup(0.0);
  s.bath.temperature = s.omega / 8.0;

  const GeneratorBlocks blocks =
      build_generator_blocks(s.es, s.coupling, s.bath, 1, true);
  const SectorPartition part =
      build_partition(s.es, sx_matrix(s.es), s.bath.temperature);
  const SteadyHarmonics direct =
      solve_driven_direct(blocks, s.coupling.eps_drive);
  const PerturbativeSolution pert =
      solve_driven_perturbative(blocks, part, s.coupling.eps_drive);
  emit("driven direct state", direct.steady, -1e-9);
  emit("driven perturbative state", pert.harmonics.steady, -1e-9);

  const int cm = s.es.named.cat_minus.state;
  const double fid_direct = direct.steady.entries(cm, cm).real();
  const double fid_pert = pert.harmonics.steady.entries(cm, cm).real();
  const double mutual =
      trace_distance(direct.steady.entries, pert.harmonics.steady.entries);

  g.require(fid_direct > 0.99,
            fmt("direct fidelity %.4f <= 0.99: the exact nullspace sits in a "
                "2-mode metastable cluster (the odd-cat target plus the "
                "anti-damped doublet coherence) and refines to their trap "
                "mixture, not the pure cat",
                fid_direct));
  g.require(fid_pert > 0.99, fmt("perturbative fidelity %.4f <= 0.99",
                                 fid_pert));
  g.require(mutual < 1e-3,
            fmt("mutual trace distance %.3f >= 1e-3 (follows from the direct "
                "side landing on the trap mixture)",
                mutual));

  g.summarize("odd-cat fidelity %.4f direct / %.4f perturbative, mutual "
              "distance %.2e",
              fid_direct, fid_pert, mutual);
  return g.finish();
}

// ---------------------------------------------------------------------------
// 5. Population ratio follows exp(-omega/T) and is monotone in T.
// ---------------------------------------------------------------------------
Outcome criterion5() {
  Gate g;
  const double factors[3] = {8.0, 6.0, 4.0};
  double ratios[3] = {0.0, 0.0, 0.0};
  double rel_err[3] = {0.0, 0.0, 0.0};

  for (int i = 0; i < 3; ++i) {
    Setup s = cat_setup(0.0);
    s.bath.temperature = s.omega / factors[i];
    const auto blocks =
        build_generator_blocks(s.es, s.coupling, s.bath, 1, true);
    const auto part =
        build_partition(s.es, sx_matrix(s.es), s.bath.temperature);
    const auto pert =
        solve_driven_perturbative(blocks, part, s.coupling.eps_drive);
    emit("ratio sweep state " + std::to_string(i), pert.harmonics.steady,
         -1e-9);

    const int qp = sector_of_state(part, s.es.named.cat_plus.state);
    const int qm = sector_of_state(part, s.es.named.cat_minus.state);
    ratios[i] =
        pert.rates.populations(qp) / pert.rates.populations(qm);
    rel_err[i] = std::abs(ratios[i] * std::exp(factors[i]) - 1.0);
  }

  g.require(rel_err[0] < 0.15,
            fmt("T=omega/8 ratio off by %.3f >= 0.15", rel_err[0]));
  g.require(rel_err[2] < 0.25,
            fmt("T=omega/4 ratio off by %.3f >= 0.25", rel_err[2]));
  g.require(ratios[0] < ratios[1] && ratios[1] < ratios[2],
            fmt("ratios %.3e, %.3e, %.3e not increasing in T", ratios[0],
                ratios[1], ratios[2]));

  g.summarize("p+/p- tracks exp(-omega/T) to %.4f and %.4f, monotone over "
              "{omega/8, omega/6, omega/4}",
              rel_err[0], rel_err[2]);
  return g.finish();
}

// ---------------------------------------------------------------------------
// 6. The time integrator reproduces the solver state from two seeds.
// ---------------------------------------------------------------------------
Outcome criterion6() {
  Gate g;
  const auto t0 = std::chrono::steady_clock::now();
  Setup s = cat_setup(0.0);
  s.bath.temperature = s.omega / 8.0;

  const auto blocks =
      build_generator_blocks(s.es, s.coupling, s.bath, 1, true);
  const auto direct = solve_driven_direct(blocks, s.coupling.eps_drive);

  // Second seed: the solver state kicked by five percent of a bright doublet
  // block, so the two runs start a finite distance apart.
  const int cp = s.es.named.cat_plus.state;
  const int cm = s.es.named.cat_minus.state;
  CMatrix kicked = 0.95 * direct.steady.entries;
  kicked(cp, cp) += 0.025;
  kicked(cm, cm) += 0.025;
  kicked(cp, cm) += 0.025;
  kicked(cm, cp) += 0.025;

  // The frozen regime has no reachable bounded fixed point (an anti-damped
  // doublet coherence), so the run is capped inside the quasi-steady plateau
  // where the fast rates have relaxed and the slow drift has not yet moved;
  // the integrator reports the cap instead of a convergence claim.
  EvolveOptions opts;
  opts.rel_tol = 1e-6;
  opts.abs_tol = 1e-9;
  opts.converge_tol = 1e-6;
  opts.max_periods = 1024;
  opts.positivity_floor = -0.05;

  const auto runs = integrate(
      s.es, s.coupling, s.bath,
      {direct.steady,
       make_density_matrix(std::move(kicked), "adapted", 1e-9, 1e-9, -0.05)},
      opts);

  double dist[2] = {0.0, 0.0};
  for (int i = 0; i < 2; ++i) {
    const auto& r = runs[i];
    emit("plateau average seed " + std::to_string(i), r.period_average,
         -0.01);
    dist[i] =
        trace_distance(r.period_average.entries, direct.steady.entries);
    g.require(dist[i] < 0.05, fmt("seed %g distance %.4f >= 0.05",
                                  static_cast<double>(i), dist[i]));
    g.require(r.periods == opts.max_periods,
              "run stopped before the plateau cap");
    g.require(!r.converged,
              "integrator claimed convergence in the anti-damped regime");
    g.require(r.max_trace_drift < 1e-9,
              fmt("trace drift %.1e >= 1e-9", r.max_trace_drift));
    g.require(r.min_eigenvalue > -0.01,
              fmt("eigenvalue dip %.1e beyond the documented band",
                  r.min_eigenvalue));
  }
  const double mutual = trace_distance(runs[0].stroboscopic.entries,
                                       runs[1].stroboscopic.entries);
  g.require(mutual < 0.01,
            fmt("seeds still %.3f apart at the cap", mutual));

  const double wall = seconds_since(t0);
  g.require(wall < 600.0, fmt("runtime %.0f s >= 600 s", wall));
  g.summarize("period average within %.3f / %.3f of solver state (two "
              "seeds, %.3f apart), %.0f s",
              dist[0], dist[1], mutual, wall);
  return g.finish();
}

// ---------------------------------------------------------------------------
// 7. A much colder second bath distills the even cat; detailed balance at
//    equal temperatures.
// ---------------------------------------------------------------------------
Outcome criterion7() {
  Gate g;
  ChainSpec spec;
  spec.n_half = 3;
  spec.fields_h = {0.2, 0.14, 0.09};
  const auto es = build_eigenstructure(spec);

  CouplingSpec coupling;
  coupling.e_uniform = 0.1;
  coupling.eps2_local = 0.01;

  BathSpec bath1;
  bath1.temperature = spec.fields_h[0] / 20.0;
  BathSpec bath2;
  bath2.temperature = 0.01 * bath1.temperature;

  const auto part = build_partition(es, sx_matrix(es), bath1.temperature);
  const auto cold = solve_two_bath(es, part, coupling, bath1, bath2);
  emit("two-bath cold state", cold.harmonics.steady, -1e-9);

  const int plus = es.named.cat_plus.state;
  const double fid = cold.harmonics.steady.entries(plus, plus).real();
  g.require(fid > 0.99, fmt("even-cat fidelity %.4f <= 0.99", fid));

  // Equal temperatures: z_q' r_qq' = z_q r_q'q with the true per-sector
  // partition functions (referenced to the ground energy).
  const double t_eq = 0.5;
  BathSpec warm1 = bath1;
  warm1.temperature = t_eq;
  BathSpec warm2 = bath2;
  warm2.temperature = t_eq;
  const auto part_eq = build_partition(es, sx_matrix(es), t_eq);
  const auto eq = solve_two_bath(es, part_eq, coupling, warm1, warm2);
  emit("two-bath equal-T state", eq.harmonics.steady, -1e-9);

  Vector z = Vector::Zero(part_eq.n_sectors());
  for (int q = 0; q < part_eq.n_sectors(); ++q)
    for (int state : part_eq.sets[q])
      z(q) += std::exp(-(part_eq.state_energy(state) - es.ground_energy()) /
                       t_eq);

  double worst = 0.0;
  for (int q = 0; q < part_eq.n_sectors(); ++q) {
    for (int q2 = q + 1; q2 < part_eq.n_sectors(); ++q2) {
      const double forward = z(q2) * eq.rates.r(q, q2);
      const double backward = z(q) * eq.rates.r(q2, q);
      const double scale = std::max(std::abs(forward), std::abs(backward));
      if (scale > 0.0)
        worst = std::max(worst, std::abs(forward - backward) / scale);
    }
  }
  g.require(worst < 1e-10,
            fmt("detailed-balance residual %.2e >= 1e-10", worst));

  g.summarize("even-cat fidelity %.5f at T'/T = 0.01, detailed balance to "
              "%.1e at T' = T",
              fid, worst);
  return g.finish();
}

// ---------------------------------------------------------------------------
// 8. Single two-level resonance: closed form vs rotating-frame integration.
// ---------------------------------------------------------------------------
Outcome criterion8() {
  Gate g;
  const double field_h = 1.0;
  double worst = 0.0;
  for (double gamma_target : {0.05, 0.1, 0.2}) {
    for (double eps_drive : {0.02, 0.05, 0.08}) {
      BathSpec bath;
      bath.temperature = 0.0;
      bath.model.cutoff = 10.0;
      bath.model.eta = gamma_target / (2.0 * kPi * 2.0 * field_h *
                                       std::exp(-2.0 * field_h /
                                                bath.model.cutoff));
      const BlochCheck bc = single_tls_bloch(field_h, eps_drive, bath, 1.0);
      const double gap =
          std::abs(bc.integrated_excited - bc.closed_form_excited);
      worst = std::max(worst, gap);
      g.require(gap < 1e-6,
                fmt("gamma %.2f eps %.2f gap %.2e >= 1e-6", gamma_target,
                    eps_drive, gap));
    }
  }
  g.summarize("3-equation solve matches the integrator to %.1e over the "
              "3x3 grid",
              worst);
  return g.finish();
}

// ---------------------------------------------------------------------------
// 9. Structural theorems: protected states and the no-thermal-cat sweep.
// ---------------------------------------------------------------------------
Outcome criterion9() {
  Gate g;

  std::mt19937 gen(0xACCE97u);
  int empty_scans = 0;
  for (int draw = 0; draw < 20; ++draw) {
    ChainSpec spec;
    spec.n_half = 2 + draw % 2;
    std::uniform_real_distribution<double> field(0.05,
                                                 0.45 / spec.n_half);
    for (int n = 0; n < spec.n_half; ++n)
      spec.fields_h.push_back(field(gen));
    const auto found = dfs_scan(spec);
    if (found.empty()) ++empty_scans;
    g.require(found.empty(),
              fmt("draw %g (N=%g) found a protected state",
                  static_cast<double>(draw),
                  static_cast<double>(spec.n_half)));
  }

  ChainSpec special;
  special.n_half = 2;
  special.fields_h = {0.3, 0.0};
  const auto found = dfs_scan(special);
  g.require(found.size() == 1,
            fmt("h2=0 scan found %g states != 1",
                static_cast<double>(found.size())));
  double overlap = 0.0;
  if (found.size() == 1) {
    CVector expected = CVector::Zero(16);
    expected(13) = 0.5;
    expected(4) = -0.5;
    expected(11) = -0.5;
    expected(2) = 0.5;
    overlap = std::abs(expected.dot(found[0].vector));
    g.require(std::abs(overlap - 1.0) < 1e-10,
              fmt("protected state overlap %.12f != 1", overlap));
    g.require(std::abs(found[0].sx_value) < 1e-12,
              fmt("protected state S_x value %.2e != 0", found[0].sx_value));
  }

  const NoThermalCatTrials trials =
      run_no_thermal_cat_trials(4, 100, 20240811u);
  g.require(trials.strict == trials.trials && trials.trials == 100,
            fmt("strict inequality in %g/%g trials",
                static_cast<double>(trials.strict),
                static_cast<double>(trials.trials)));

  g.summarize("%d/20 generic scans empty, one protected state at h2=0 "
              "(overlap %.10f), cat above ground in %d/%d local draws",
              empty_scans, overlap, trials.strict, trials.trials);
  return g.finish();
}

// ---------------------------------------------------------------------------
// 10. Invariant suite: rate symmetries, harmonic-block structure, emitted
//     state hygiene.
// ---------------------------------------------------------------------------
Outcome criterion10() {
  Gate g;
  const Setup s = thermal_setup();
  const double t = s.bath.temperature;

  // KMS ratio of the bath spectrum.
  double worst_kms = 0.0;
  for (double nu : {0.3, 0.44, 1.0, 2.7}) {
    const double up = noise_power(s.bath, nu);
    const double down = noise_power(s.bath, -nu);
    const double rel = std::abs(down - std::exp(-nu / t) * up) /
                       (std::exp(-nu / t) * up);
    worst_kms = std::max(worst_kms, rel);
    g.require(rel < 1e-12, fmt("KMS ratio off by %.2e at nu %.2f", rel, nu));
  }

  // Population rates: zero column sums; Boltzmann-weighted symmetry.
  const RateTensor rt0 =
      gamma_block(s.es, s.coupling, s.bath, std::nullopt, 0, 0.0);
  Matrix rates(s.es.dim, s.es.dim);
  for (int k = 0; k < s.es.dim; ++k)
    for (int l = 0; l < s.es.dim; ++l)
      rates(k, l) = rt0.entries(rt0.support.index_of(k, k),
                                rt0.support.index_of(l, l))
                        .real();
  const double rate_scale = rates.cwiseAbs().maxCoeff();
  double worst_col = 0.0;
  for (int l = 0; l < s.es.dim; ++l)
    worst_col = std::max(worst_col, std::abs(rates.col(l).sum()));
  g.require(worst_col < 1e-12 * rate_scale,
            fmt("rate column sum %.2e", worst_col));
  const Matrix upsilon = upsilon_matrix(rt0, s.es, t);
  const double asym =
      (upsilon - upsilon.transpose()).cwiseAbs().maxCoeff();
  g.require(asym < 1e-12 * rate_scale,
            fmt("balance matrix asymmetry %.2e", asym));

  // Harmonic blocks at a warm driven setup: sector structure of the inverse
  // blocks and the conjugation relation between opposite harmonics.
  Setup d = cat_setup(0.5);
  d.coupling.e_uniform = 2.0;
  d.coupling.eps_drive = 0.02;
  const auto blocks = build_generator_blocks(d.es, d.coupling, d.bath, 1);
  const auto part = build_partition(d.es, sx_matrix(d.es), d.bath.temperature);
  const auto& sup1 = blocks.support.at(1);
  const auto& sup_m = blocks.support.at(-1);
  const CMatrix& f1 = blocks.f.at(1);
  const CMatrix& fm = blocks.f.at(-1);
  const double fmax = f1.cwiseAbs().maxCoeff();
  double worst_block = 0.0;
  double worst_conj = 0.0;
  for (int a = 0; a < sup1.size(); ++a) {
    for (int b = 0; b < sup1.size(); ++b) {
      const auto [k, l] = sup1.pairs[a];
      const auto [k2, l2] = sup1.pairs[b];
      if (part.sector_of[k] != part.sector_of[k2] ||
          part.sector_of[l] != part.sector_of[l2])
        worst_block = std::max(worst_block, std::abs(f1(a, b)));
      const int u = sup_m.index_of(l, k);
      const int u2 = sup_m.index_of(l2, k2);
      if (u < 0 || u2 < 0) {
        g.require(false, "mirrored pair missing from the -1 support");
        continue;
      }
      worst_conj =
          std::max(worst_conj, std::abs(fm(u, u2) - std::conj(f1(a, b))));
    }
  }
  g.require(worst_block < 1e-10 * fmax,
            fmt("cross-sector inverse-block leak %.2e", worst_block));
  g.require(worst_conj < 1e-10 * fmax,
            fmt("conjugation relation off by %.2e", worst_conj));

  // First-harmonic amplitude scales linearly in the drive.
  auto first_harmonic = [&d](double eps_drive) {
    CouplingSpec c = d.coupling;
    c.eps_drive = eps_drive;
    const auto b = build_generator_blocks(d.es, c, d.bath, 1);
    return solve_driven_direct(b, eps_drive);
  };
  const auto sh_a = first_harmonic(d.coupling.eps_drive);
  const auto sh_b = first_harmonic(2.0 * d.coupling.eps_drive);
  const double slope = std::log(sh_b.harmonics.at(1).cwiseAbs().maxCoeff() /
                                sh_a.harmonics.at(1).cwiseAbs().maxCoeff()) /
                       std::log(2.0);
  g.require(std::abs(slope - 1.0) < 0.1,
            fmt("harmonic scaling slope %.3f outside 1 +- 0.1", slope));
  emit("warm driven state", sh_a.steady, -1e-9);

  // Hygiene of every state the suite emitted.
  double worst_trace = 0.0;
  double worst_herm = 0.0;
  for (const EmittedState& e : registry()) {
    const CMatrix& m = e.state.entries;
    const double trace_gap = std::abs(m.trace().real() - 1.0);
    const double herm_gap = (m - m.adjoint()).cwiseAbs().maxCoeff();
    const double mineig = min_eigenvalue(m);
    worst_trace = std::max(worst_trace, trace_gap);
    worst_herm = std::max(worst_herm, herm_gap);
    g.require(trace_gap < 1e-9, e.label + fmt(": trace off by %.2e",
                                              trace_gap));
    g.require(herm_gap < 1e-9, e.label + fmt(": hermiticity gap %.2e",
                                             herm_gap));
    g.require(mineig > e.floor,
              e.label + fmt(": eigenvalue %.2e below floor %.0e", mineig,
                            e.floor));
  }
  g.require(registry().size() >= 10, "state registry unexpectedly small");

  g.summarize("KMS %.0e, column sums %.0e, block leak %.0e, conjugation "
              "%.0e, slope dev %.3f, %zu states clean",
              worst_kms, worst_col, worst_block, worst_conj,
              std::abs(slope - 1.0), registry().size());
  return g.finish();
}

}  // namespace

int main() {
  struct Row {
    int id;
    const char* label;
    Outcome (*fn)();
  };
  const Row rows[] = {
      {1, "spectrum reproduction", criterion1},
      {2, "partition counts", criterion2},
      {3, "thermalization", criterion3},
      {4, "cat regime", criterion4},
      {5, "population-ratio asymptotics", criterion5},
      {6, "integrator equivalence", criterion6},
      {7, "two-bath cat", criterion7},
      {8, "two-level resonance cross-check", criterion8},
      {9, "structural theorems", criterion9},
      {10, "invariant suite", criterion10},
  };

  int failed = 0;
  for (const Row& row : rows) {
    Outcome o;
    try {
      o = row.fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.summary = "aborted";
      o.failures = {std::string("exception: ") + e.what()};
    }
    std::printf("criterion %2d (%s): %s  %s\n", row.id, row.label,
                o.pass ? "PASS" : "FAIL", o.summary.c_str());
    for (const std::string& f : o.failures)
      std::printf("               - %s\n", f.c_str());
    if (!o.pass) ++failed;
  }
  std::printf("%d/10 criteria passed\n", 10 - failed);
  return failed;
}
