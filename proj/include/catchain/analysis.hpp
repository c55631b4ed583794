#pragma once

// State metrics for the asymptotic states: the ground-doublet mixing
// parameter, overlap fidelities, von Neumann entropies and the bipartite
// entanglement witness that compares a subsystem entropy against the total.

#include <vector>

#include "catchain/chain.hpp"
#include "catchain/types.hpp"

namespace catchain {

// Conjugate a density matrix between the sigma^z product basis and the
// adapted basis of the given chain. Conversions preserve the spectrum, so the
// result is repackaged without re-validation.
DensityMatrix to_config_basis(const EigenStructure& es,
                              const DensityMatrix& rho);
DensityMatrix to_adapted_basis(const EigenStructure& es,
                               const DensityMatrix& rho);

// Mixing parameter of the aligned doublet. For the asymptotic family
//
//   rho = (1 - p) |cat+><cat+| + p |cat-><cat-|,   cat-+ = (up -+ down)/sqrt2,
//
// the aligned-configuration coherence fixes p = 1/2 - Re <up|rho|down>. The
// value is meaningful when the state actually sits on the doublet, so the
// population carried by the two aligned configurations is reported alongside.
struct CatParameter {
  double p = 0.5;
  double doublet_mass = 0.0;
};
CatParameter cat_parameter(const EigenStructure& es, const DensityMatrix& rho);

// Partial trace of a product-basis density matrix onto the given sites
// (1-based labels, duplicates rejected). Rows and columns of the result are
// indexed by the kept sites in ascending order, least significant bit first.
CMatrix partial_trace(const ChainSpec& spec, const CMatrix& rho_config,
                      const std::vector<int>& keep_sites);

// Von Neumann entropy -Tr(rho ln rho) in natural log units. Eigenvalues are
// clipped to [0, 1] before x ln x, so round-off negatives at the 1e-12 scale
// do not produce NaNs.
double von_neumann_entropy(const CMatrix& rho);

// Entropy comparison across a bipartition: a subsystem strictly more mixed
// than the whole (margin 1e-9) certifies entanglement.
struct WitnessReport {
  double subsystem_entropy = 0.0;
  double total_entropy = 0.0;
  bool entangled = false;
};
WitnessReport entanglement_witness(const ChainSpec& spec,
                                   const DensityMatrix& rho_config,
                                   const std::vector<int>& subsystem_sites);

// Overlap <target|rho|target> with a pure state given in the same basis as
// rho. Clamped into [0, 1] against round-off.
double fidelity_with(const DensityMatrix& rho, const CVector& target);

// Tr(rho^2), real by hermiticity.
double purity(const DensityMatrix& rho);

// Expectation of the mirror-flip symmetry operator in either basis.
double pi_expectation(const EigenStructure& es, const DensityMatrix& rho);

}  // namespace catchain
