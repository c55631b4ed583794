#pragma once

// Numerical witnesses of the structural theorems behind the asymptotic
// analysis: no local Hamiltonian holds an aligned cat as its unique ground
// state, generic chains admit no state protected from the collective bath
// coupling, and the h_N = 0 special case admits exactly one.

#include <cstdint>
#include <vector>

#include "catchain/chain.hpp"
#include "catchain/types.hpp"

namespace catchain {

// One product term c * sigma_{s1}^{a1} sigma_{s2}^{a2} ... of a local
// Hamiltonian. The touched sites must form a contiguous block.
struct LocalTerm {
  double coeff = 0.0;
  std::vector<std::pair<int, Axis>> factors;  // (site, axis), sites ascending
};

struct LocalHamiltonian {
  int sites = 0;
  std::vector<LocalTerm> terms;
};

// Dense configuration-basis matrix of the Hamiltonian.
CMatrix local_dense(const LocalHamiltonian& h);

// The chain Hamiltonian itself as a sum of local terms.
LocalHamiltonian chain_local_hamiltonian(const ChainSpec& spec);

// Witness report for one local Hamiltonian. Because no term reaches across
// the whole chain, the matrix element between the two aligned configurations
// contains an orthogonal single-site overlap and vanishes; the mean energy of
// any aligned cat is therefore exactly the average of the two aligned
// energies, and with a unique ground state it sits strictly above it. The
// same orthogonality makes the mean energy of any state with a product
// Schmidt form additive over its Schmidt branches.
struct NoThermalCatReport {
  double cross_term = 0.0;    // |<up|H|down>|
  double identity_gap = 0.0;  // |<cat|H|cat> - aligned mean|, worse sign
  double schmidt_gap = 0.0;   // branch-additivity residual, worst sample
  double cat_energy = 0.0;    // equal for both cat signs up to cross_term
  double ground_energy = 0.0;
  double ground_gap = 0.0;    // E_1 - E_0
  bool unique_ground = false;
  bool strictly_above = false;
};

// Throws SplitInvalid when some term touches both chain ends (then no cut
// isolates site 1 from the far end and the orthogonality argument breaks).
NoThermalCatReport no_thermal_cat_property(const LocalHamiltonian& h);

// Randomized sweep over nearest-neighbour Hamiltonians with all two-site
// axis pairs and single-site terms, coefficients uniform in [-1, 1]. Draws
// whose ground gap falls below 1e-8 of the spectral scale are redrawn (the
// strict inequality is only claimed for unique ground states).
struct NoThermalCatTrials {
  int trials = 0;
  int strict = 0;
  int redraws = 0;
  double max_identity_gap = 0.0;
  double max_cross_term = 0.0;
  double max_schmidt_gap = 0.0;
  double min_margin = 0.0;  // smallest cat_energy - ground_energy seen
  std::uint32_t seed = 0;
};
NoThermalCatTrials run_no_thermal_cat_trials(int sites, int trials,
                                             std::uint32_t seed);

// A simultaneous eigenvector of the chain Hamiltonian and the collective
// coupling operator S_x: a state the uniform bath cannot see.
struct DfsState {
  CVector vector;  // configuration basis, unit norm
  double energy = 0.0;
  double sx_value = 0.0;
  double h_residual = 0.0;
  double sx_residual = 0.0;
};

// Scans every exact eigenspace of the chain Hamiltonian for vectors that
// S_x keeps inside the eigenspace, then diagonalizes S_x on that remnant.
// Generic fields return an empty list; h_N = 0 returns exactly one state.
// Nullspace and eigenvector thresholds are 1e-10 of the leading singular
// value; reported residuals are exact operator residuals.
std::vector<DfsState> dfs_scan(const ChainSpec& spec);

}  // namespace catchain
