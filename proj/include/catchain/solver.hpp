#pragma once

// Asymptotic-state solvers. Four regimes share one representation:
//
//   - uniform coupling alone: every mixture of per-sector Gibbs states is
//     stationary (an affine family, not a point);
//   - local channels added: the family collapses to the global Gibbs state;
//   - resonant drive added: the harmonic system i(p*omega - omega_kl) u^(p)
//     + (gamma^(p) u^(p)) - i*eps_f([V,u^(p-1)] + [Vt,u^(p+1)]) = 0 picks a
//     unique quasi-stationary state, solved either directly (nullspace of the
//     coupled system) or by eliminating the p = +-1 harmonics into an
//     effective sector-hopping rate matrix r_qq';
//   - a second, colder bath instead of the drive: golden-rule sector hopping
//     with the same rate-matrix reduction.
//
// Conventions: g0[p] is the full coefficient of u^(p) in row p (damping block
// plus the i(p*omega - omega_kl) diagonal); the drive couplings g_minus[p] =
// [V, .] and g_plus[p] = [Vt, .] are stored bare, the -i*eps_f factor is
// applied by the solvers; f[p] inverts the uniform-channel-only (tilde)
// version of g0[p].

#include "catchain/bath.hpp"
#include "catchain/partition.hpp"

#include <map>
#include <optional>

namespace catchain {

// Matrix of the map u -> [X, u] between two resonant-pair supports.
CMatrix commutator_coupling(const CMatrix& x, const PairSupport& from,
                            const PairSupport& to);

// Embed a pair-support vector as a dense matrix and back.
CMatrix embed_pairs(const PairSupport& support, const CVector& v);
CVector restrict_pairs(const PairSupport& support, const CMatrix& m);

struct GeneratorBlocks {
  double omega = 0.0;
  int max_p = 1;
  int dim = 0;
  std::map<int, PairSupport> support;
  // Row-p coefficient of u^(p); includes local channels when requested.
  std::map<int, CMatrix> g0;
  // Uniform-channel-only variant used for the inverses and diagnostics.
  std::map<int, CMatrix> g0_tilde;
  std::map<int, CMatrix> g_minus;  // feeds u^(p-1): [V, .]
  std::map<int, CMatrix> g_plus;   // feeds u^(p+1): [Vt, .]
  std::map<int, CMatrix> f;        // inverse of g0_tilde, p != 0
  std::map<int, double> f_condition;
  CMatrix drive_op;  // V in the adapted basis
  // Slot of the (c-, a) pair in the p = 1 support, the dominant pumping
  // channel at low temperature; -1 when absent.
  int pump_slot_p1 = -1;
};

// Builds all harmonic blocks for |p| <= max_p. Requires e_uniform > 0, and
// T > 0 plus a doublet-selecting drive orientation when max_p >= 1.
// include_local_channels folds the local sigma channels into g0 (never into
// the tilde blocks).
GeneratorBlocks build_generator_blocks(const EigenStructure& es,
                                       const CouplingSpec& coupling,
                                       const BathSpec& bath, int max_p,
                                       bool include_local_channels = false);

struct SteadyHarmonics {
  double omega = 0.0;
  // Dense embeddings of u^(p); entries vanish off the resonant supports.
  std::map<int, CMatrix> harmonics;
  DensityMatrix steady;         // the p = 0 part
  Vector sector_populations;    // filled by the sector-rate paths
  std::vector<std::string> warnings;
};

struct EffectiveRateMatrix {
  Matrix r;                  // r(q, q') = rate from sector q' into q
  double scalar_r = 0.0;     // eps_f^2 Re[1/g0_tilde^(1) at the (c-,a) slot],
                             // the dominant low-temperature pumping amplitude
                             // (diagnostic; 0 when the slot is absent)
  double column_sum_residual = 0.0;
  Vector populations;
};

// Affine family of stationary states under the uniform coupling alone.
struct UniformFamily {
  Matrix population_rates;   // population generator of the uniform channel
  int nullspace_dim = 0;     // numerical nullspace dimension at 1e-8
  double max_null_residual = 0.0;
  std::vector<DensityMatrix> members;  // per-sector Gibbs states
};
UniformFamily solve_uniform(const EigenStructure& es,
                            const SectorPartition& part,
                            const CouplingSpec& coupling,
                            const BathSpec& bath);

struct ThermalSolution {
  DensityMatrix steady;
  Vector populations;
  double null_residual = 0.0;
  int nullspace_dim = 1;
};
// Unique stationary state when local channels break the sector degeneracy.
// rt0 must be the p = 0 rate tensor built with those channels included.
ThermalSolution solve_thermal(const RateTensor& rt0, const EigenStructure& es,
                              double temperature);

// Nullspace of the coupled harmonic system, trace-normalized. Throws
// NoNullVector when no singular value falls below 1e-10 of the largest.
// When metastable modes (frozen traps, cat coherences) also dip below the
// threshold, the minimal singular direction is still returned and a warning
// records the separation from the next slowest mode.
SteadyHarmonics solve_driven_direct(const GeneratorBlocks& blocks,
                                    double eps_drive);

// Second-order elimination of the p = +-1 harmonics into sector rates.
struct PerturbativeSolution {
  EffectiveRateMatrix rates;
  SteadyHarmonics harmonics;
};
PerturbativeSolution solve_driven_perturbative(const GeneratorBlocks& blocks,
                                               const SectorPartition& part,
                                               double eps_drive);

// Sector hopping induced by a second bath coupled through local sigma^x
// channels with strength eps2_local, the first bath holding each sector at
// its Gibbs state.
struct TwoBathSolution {
  EffectiveRateMatrix rates;
  SteadyHarmonics harmonics;
};
TwoBathSolution solve_two_bath(const EigenStructure& es,
                               const SectorPartition& part,
                               const CouplingSpec& coupling,
                               const BathSpec& bath1, const BathSpec& bath2);

// How much stationary population sits above the interface barrier, compared
// with the exp(-3J/T) scale that bounds it at low temperature.
struct FreezeoutReport {
  double mass_above = 0.0;  // population at E > E_0 + 3J
  double bound = 0.0;       // exp(-3J/T)
  double ratio = 0.0;       // mass_above / bound (infinity if bound underflows)
  bool resolvable = true;   // bound representable in double precision
  std::string note;
};
FreezeoutReport low_t_freezeout_report(const SteadyHarmonics& sh,
                                       const EigenStructure& es,
                                       double temperature);

}  // namespace catchain
