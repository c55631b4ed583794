#pragma once

// Decomposition of the adapted basis into the minimal subsets left invariant
// by a family of coupling operators. The asymptotic populations of the
// uniformly coupled chain are free within each such sector, so getting the
// partition right (and certifiably minimal) is what makes the steady-state
// family well defined.
//
// Method: a Hermitian block matrix K (one block per energy level) commutes
// with every coupling operator iff it lies in the commutant of the generated
// algebra. The commutant's dimension equals the number of minimal sectors
// provided it is abelian, which we certify by simultaneously diagonalizing a
// random commutant element per level and checking every basis element comes
// out diagonal. The sectors are then the connected components of the coupling
// graph in that (possibly rotated) basis.

#include "catchain/chain.hpp"

namespace catchain {

struct SectorPartition {
  double temperature = 0.0;
  // Columns express the sector-aligned states in adapted-basis coordinates;
  // block diagonal over levels, and exactly the identity whenever no rotation
  // inside degenerate levels is required (the generic case).
  CMatrix basis;
  bool basis_is_identity = true;
  // Per aligned state, carried over from the eigenstructure (levels survive
  // the rotation; parity is recomputed and 0 when a rotated state mixes both).
  Vector state_energy;
  std::vector<int> state_level;
  std::vector<int> state_parity;
  // The sectors: aligned state indices, each sorted ascending, sets ordered by
  // their smallest member.
  std::vector<std::vector<int>> sets;
  std::vector<int> sector_of;  // per state
  std::vector<int> pi_label;   // +1/-1 if a set has uniform parity, else 0
  // Per-sector partition functions z_q = sum_k exp(-(E_k - z_shift_q)/T),
  // shifted by the sector's own minimum energy so they stay representable at
  // any temperature; at T = 0 they count the sector's lowest-level states.
  Vector z;
  Vector z_shift;
  unsigned seed_used = 0;
  std::vector<std::string> warnings;

  int dim() const { return static_cast<int>(basis.rows()); }
  int n_sectors() const { return static_cast<int>(sets.size()); }
};

// The uniform flip operator sum_n sigma_n^x in the adapted basis, the coupling
// that defines the physical sector structure.
Matrix sx_matrix(const EigenStructure& es);

// Minimal invariant subsets under an arbitrary operator family. Throws
// NonMinimalPartition when the commutant cannot be certified abelian or its
// dimension disagrees with the connected component count.
SectorPartition build_partition_ops(const EigenStructure& es,
                                    const std::vector<CMatrix>& ops,
                                    double temperature,
                                    double edge_tol = 1e-14,
                                    unsigned seed = 0x5eed5eedu);

// The physical partition: minimal invariant subsets under S_x.
SectorPartition build_partition(const EigenStructure& es, const Matrix& sx,
                                double temperature, double edge_tol = 1e-14,
                                unsigned seed = 0x5eed5eedu);

// Thermal weights of sector q over all aligned states: Boltzmann factors
// normalized within the sector, zero elsewhere. At T = 0 the weight is spread
// uniformly over the sector's lowest level.
Vector sector_weights(const SectorPartition& part, int q);

// rho = sum_q weights[q] * (sector q Gibbs state), in the adapted basis.
// weights must be a probability vector over sectors.
DensityMatrix sector_gibbs_state(const SectorPartition& part,
                                 const Vector& weights);

// Sector index containing a named adapted-basis state. Requires an
// identity-basis partition (otherwise state indices do not line up).
int sector_of_state(const SectorPartition& part, int state);

}  // namespace catchain
