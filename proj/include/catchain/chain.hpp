#pragma once

// Diagonal structure of the driven Ising chain. The chain Hamiltonian
//
//   H = -J sum_{n=1}^{2N-1} sigma^z_n sigma^z_{n+1}
//       - sum_{n=1}^{N} h_n (sigma^z_n - sigma^z_{2N+1-n})
//
// is diagonal in the sigma^z product basis, so "diagonalization" means exact
// integer bookkeeping: each configuration's energy is J * a + sum_n h_n * b_n
// with integer coefficients a and b_n, and two configurations are degenerate iff
// their coefficient tuples coincide (or the field values conspire, which is
// flagged as non-generic). The mirror-flip symmetry Pi (reverse the chain,
// then flip every spin) commutes with H and acts as a permutation on
// configurations; the adapted basis consists of its +1/-1 combinations.

#include "catchain/types.hpp"

namespace catchain {

// Energy of a classical configuration.
double energy_of(const ChainSpec& spec, Configuration c);

// Integer coefficient tuple (a, b_1..b_N) with energy J*a + sum h_n b_n.
// Exact degeneracy detection compares these tuples, never floats.
std::vector<long> energy_tuple(const ChainSpec& spec, Configuration c);

// Mirror-flip: site n <-> 2N+1-n followed by flipping every spin. An
// involution and a pure permutation of configurations.
Configuration apply_pi(const ChainSpec& spec, Configuration c);

// One level of the spectrum: its energy, the configurations that share it and
// the adapted-basis states built from them.
struct Level {
  double energy = 0.0;
  std::vector<std::uint32_t> configs;  // ascending
  std::vector<int> states;             // adapted column indices, ascending
};

// A distinguished adapted-basis state: column index plus the sign that makes
// sign * adapted.col(state) equal the conventional vector for that name.
struct NamedHandle {
  int state = -1;
  double sign = 1.0;

  bool valid() const { return state >= 0; }
};

// The cast of states the asymptotic analysis tracks by name. up/down are the
// fully aligned product configurations; cat_plus/cat_minus are their even/odd
// combinations (the bottom doublet resolved by mirror-flip parity); a and b
// are the lowest single-interface states with the interface at the chain
// midpoint (a: left half up, b: right half up); c/d move the interface one
// site left of the midpoint (c: leading spins up, d: leading spins down) and
// e/f put it at the chain end, each resolved into mirror-flip parity pairs.
// For N = 2 the c/d and e/f families coincide.
struct NamedStates {
  Configuration up;    // all spins up
  Configuration down;  // all spins down
  NamedHandle cat_plus, cat_minus;
  NamedHandle a, b;
  NamedHandle c_plus, c_minus;
  NamedHandle d_plus, d_minus;
  NamedHandle e_plus, e_minus;
  NamedHandle f_plus, f_minus;
};

// Spectrum and adapted basis of a chain. Columns of `adapted` are unit vectors
// in the configuration basis, grouped by level (ascending energy); each column
// is either a single Pi-invariant configuration (parity +1) or
// (|c> +- |Pi c>) / sqrt(2) over a two-configuration orbit, even before odd.
struct EigenStructure {
  ChainSpec spec;
  int dim = 0;
  Vector config_energy;  // indexed by configuration bits
  std::vector<Level> levels;
  Matrix adapted;       // dim x dim, orthogonal
  Vector state_energy;  // per adapted column
  std::vector<int> state_level;
  std::vector<int> state_parity;  // +1 or -1
  std::vector<int> state_offset;  // position within the level
  NamedStates named;
  std::vector<std::string> warnings;

  double ground_energy() const { return levels.front().energy; }
};

// Build the full structure. Distinct coefficient tuples whose energies agree
// exactly merge into one level with a non-generic warning; energies closer
// than rel_tol * max(J, |E|_max) without being exactly equal raise
// DegeneracyAmbiguity.
EigenStructure build_eigenstructure(const ChainSpec& spec,
                                    double rel_tol = 1e-9);

// The 2(2N-1) configurations with exactly one domain wall, as (configuration,
// energy) pairs ordered by interface position m = 1..2N-1, leading spin up
// before leading spin down. Their energies obey
//   E = E_0 + 2J - 2 eta sum_{n <= min(m, 2N-m)} h_n
// with eta the leading spin sign.
std::vector<std::pair<Configuration, double>> one_interface_states(
    const ChainSpec& spec);

// Conventional vector of a named state in the configuration basis.
CVector named_vector(const EigenStructure& es, const NamedHandle& handle);

// Pauli operators in the configuration basis.
CMatrix sigma_config(const ChainSpec& spec, int site, Axis axis);
Matrix sx_total_config(const ChainSpec& spec);  // sum_n sigma_n^x, real

// Conjugate a configuration-basis operator into the adapted basis.
CMatrix to_adapted(const EigenStructure& es, const CMatrix& config_op);
Matrix to_adapted(const EigenStructure& es, const Matrix& config_op);

// Pauli operators directly in the adapted basis.
CMatrix sigma_adapted(const EigenStructure& es, int site, Axis axis);
Matrix sx_total_adapted(const EigenStructure& es);

// Drive operator V = sum_r weight_r sigma_{site_r}^{axis_r} (default: a single
// sigma_N^x term) in the adapted basis.
CMatrix drive_operator_adapted(const EigenStructure& es,
                               const CouplingSpec& coupling);

// Whether the drive weights couple the bottom doublet to the single-interface
// ladder: lambda_{N,x} - i lambda_{N,y} - lambda_{N+1,x} - i lambda_{N+1,y}
// must not vanish, where lambda_{n,nu} sums the weights on site n, axis nu.
bool drive_orientation_valid(const CouplingSpec& coupling,
                             const ChainSpec& chain);

}  // namespace catchain
