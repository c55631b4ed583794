#pragma once

// Time-domain cross-check of the steady-state solvers. The full relaxation
// generator (no resonance filtering, no perturbative elimination) plus the
// exact cosine drive is integrated with an adaptive embedded Runge-Kutta
// pair; long horizons are reached by repeated squaring of the one-period
// propagator, with the state re-validated at every dyadic checkpoint. The
// result is an asymptotic state obtained by a route that shares nothing with
// the nullspace and rate-matrix solvers beyond the relaxation tensor itself.
//
// The same stepper drives a single two-level resonance check: the closed-form
// stationary excited population of the optical Bloch equations is compared
// against a rotating-frame integration and against the fixed point of the
// full cosine-drive propagator.

#include "catchain/bath.hpp"
#include "catchain/chain.hpp"
#include "catchain/types.hpp"

#include <vector>

namespace catchain {

struct EvolveOptions {
  // Embedded pair step control (per-entry mixed absolute/relative test).
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  // Monodromy horizon. Driven evolutions must use the drive period (the
  // default 0 resolves to it); undriven evolutions have no intrinsic period
  // and require an explicit positive value.
  double period = 0.0;
  // Stop squaring once the state has evolved this many periods.
  long long max_periods = 1LL << 40;
  // Converged when consecutive dyadic checkpoints are this close in trace
  // distance.
  double converge_tol = 1e-7;
  // Trapezoid points for the period average of the converged orbit.
  int average_samples = 64;
  bool record_history = false;
  // Checkpoint states with an eigenvalue below this throw PositivityLoss.
  // The default is the weak-coupling contract; deep in the frozen low
  // temperature regime the relaxation description itself is no longer
  // positivity-preserving (thermally empty levels sit far below the
  // coupling-induced coherence scale), so cross-check runs there must relax
  // the floor explicitly. A dip below the default is always reported in the
  // warnings, never repaired.
  double positivity_floor = -1e-6;
};

// One dyadic checkpoint of the evolution, for relaxation diagnostics.
struct HistoryRow {
  double time = 0.0;
  double distance_to_final = 0.0;
  double fidelity_cat_plus = 0.0;
  double fidelity_cat_minus = 0.0;
  double pi_expectation = 0.0;
  double purity = 0.0;
};

struct EvolveResult {
  // State after the final whole number of periods (drive phase zero).
  DensityMatrix stroboscopic;
  // Trapezoid average of the converged orbit over one period; for an
  // undriven evolution this coincides with the stroboscopic state.
  DensityMatrix period_average;
  long long periods = 0;
  double convergence_gap = 0.0;
  bool converged = false;
  // Largest trace and hermiticity error the raw propagated state accumulated
  // between checkpoints, before each cleanup. Both stay near rounding for a
  // well-resolved evolution; growth signals accuracy exhaustion.
  double max_trace_drift = 0.0;
  double max_hermiticity_gap = 0.0;
  // Smallest eigenvalue seen at any checkpoint; negative values measure how
  // far the evolution left the positivity-preserving regime.
  double min_eigenvalue = 0.0;
  std::vector<HistoryRow> history;
  std::vector<std::string> warnings;
};

// Evolve an adapted-basis density matrix under the full generator
//
//   d rho/dt = -i [H, rho] + (relaxation tensor)
//              - i eps_drive [exp(-i w t) V + exp(+i w t) V^dag, rho]
//
// until the dyadic checkpoints settle. Bath channels follow the coupling
// spec (uniform and local; a second bath is not supported here); the drive
// operator and frequency resolve exactly as in the steady-state solvers.
// Restricted to chains with up to four sites, the size this cross-check is
// meant for. Throws InvalidParameter on bad setup, NoConvergence when the
// step size collapses or propagator error destroys the trace, and
// PositivityLoss when a checkpoint state acquires a negative eigenvalue
// beyond tolerance.
EvolveResult integrate(const EigenStructure& es, const CouplingSpec& coupling,
                       const BathSpec& bath, const DensityMatrix& seed,
                       const EvolveOptions& opts = {});

// Same evolution for several seeds, sharing one propagator computation.
std::vector<EvolveResult> integrate(const EigenStructure& es,
                                    const CouplingSpec& coupling,
                                    const BathSpec& bath,
                                    const std::vector<DensityMatrix>& seeds,
                                    const EvolveOptions& opts = {});

// Stationary excited population of the optical Bloch equations in the
// rotating wave approximation at exact resonance,
//
//   u_ee = beta / (1 + 2 beta),  beta = eps_drive^2 / ((gamma/2)^2 + theta^2),
//
// with gamma the population relaxation rate and theta the bath-induced
// detuning of the coherence.
double bloch_excited_population(double gamma, double theta, double eps_drive);

struct BlochCheck {
  double gamma = 0.0;  // population relaxation rate of the two-level system
  double theta = 0.0;  // bath-induced coherence detuning
  double closed_form_excited = 0.0;  // algebraic stationary solution
  double integrated_excited = 0.0;   // rotating-frame integration, same model
  double full_cos_excited = 0.0;     // full cosine-drive propagator fixed
                                     // point, period-averaged
};

// One two-level system in a field of strength field_h (splitting 2 field_h),
// coupled through e_coupling * sigma^x to the bath (principal-value shifts
// forced on) and driven at exact resonance with amplitude eps_drive. Returns
// the three routes to the stationary excited population plus the extracted
// rates. The rotating-frame route must agree with the closed form to
// integrator accuracy; the cosine-drive route differs by genuine
// counter-rotating corrections.
BlochCheck single_tls_bloch(double field_h, double eps_drive,
                            const BathSpec& bath, double e_coupling);

}  // namespace catchain
