#pragma once

// Shared scalar/matrix aliases, parameter records, and the error taxonomy used
// across the library. Everything numerical is double precision: the physics
// invariants we test against (detailed balance, trace conservation, nullspace
// ranks) are absolute-tolerance statements, so a scalar template would buy
// nothing and cost clarity.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace catchain {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;

inline constexpr Complex kI{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Error taxonomy. Two bases so the CLI can map failures to exit codes:
// ValidationError (bad or non-generic input, exit 2) and SolverError
// (a computation that could not be completed reliably, exit 3).
// ---------------------------------------------------------------------------

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A parameter violates a documented constraint; message names the constraint.
class InvalidParameter : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Two energy levels are neither exactly degenerate (by the integer coefficient
// bookkeeping) nor separated by more than the resolution tolerance, so level
// grouping would be arbitrary.
class DegeneracyAmbiguity : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A Hamiltonian passed to the no-thermal-cat check cannot be split into the
// required two overlapping pieces.
class SplitInvalid : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A harmonic index carries no resonant level pairs at all.
class EmptyBlock : public SolverError {
 public:
  using SolverError::SolverError;
};

// The commutant construction found a decomposition finer than the connectivity
// components, i.e. the candidate partition is not minimal.
class NonMinimalPartition : public SolverError {
 public:
  using SolverError::SolverError;
};

// A linear solve expected a one-dimensional nullspace and found more.
class DegenerateNullspace : public SolverError {
 public:
  using SolverError::SolverError;
};

// A linear solve expected a nontrivial nullspace and found none.
class NoNullVector : public SolverError {
 public:
  using SolverError::SolverError;
};

// A population left the physical range by more than the clipping tolerance.
class NegativePopulation : public SolverError {
 public:
  using SolverError::SolverError;
};

// An iteration hit its budget without meeting its convergence criterion.
class NoConvergence : public SolverError {
 public:
  using SolverError::SolverError;
};

// A propagated state developed eigenvalues below the positivity floor.
class PositivityLoss : public SolverError {
 public:
  using SolverError::SolverError;
};

// ---------------------------------------------------------------------------
// Parameter records.
// ---------------------------------------------------------------------------

// Ising chain of 2 * n_half two-level systems with ferromagnetic coupling
// coupling_j > 0 and site fields h_n > 0 applied antisymmetrically: site n
// gets -h_n and site 2N+1-n gets +h_n for n = 1..N (when acting on sigma^z).
// The fields must satisfy sum(h) < J/2 so that the fully aligned doublet
// stays at the bottom of the spectrum.
struct ChainSpec {
  int n_half = 2;                // N; the chain has 2N sites
  double coupling_j = 1.0;       // J
  std::vector<double> fields_h;  // h_1..h_N, all > 0

  int sites() const { return 2 * n_half; }
  int dim() const { return 1 << sites(); }
  void validate() const;
};

// A classical spin configuration: bit n-1 of `bits` is site n, set bit = spin
// up (+1 eigenvalue of sigma^z). Configurations double as basis indices; the
// basis is ordered lexicographically, i.e. by the integer value of `bits`.
struct Configuration {
  std::uint32_t bits = 0;

  int spin(int site) const { return (bits >> (site - 1)) & 1u ? +1 : -1; }
};

// Ohmic spectral density J(nu) = eta * nu * exp(-nu / cutoff) for nu >= 0.
struct OhmicSpec {
  double eta = 0.1;
  double cutoff = 10.0;
};

struct BathSpec {
  double temperature = 0.0;  // T >= 0, in units of J (k_B = 1, hbar = 1)
  OhmicSpec model;
  // Whether rate kernels carry their imaginary (principal value) parts. Level
  // shifts are not part of the asymptotic-state analysis, so steady-state
  // solvers run with this off; the single-spin resonance check turns it on.
  bool include_shifts = false;

  void validate() const;
};

enum class Axis { X = 0, Y = 1, Z = 2 };

// One term of a generalized drive operator V = sum_r lambda_r sigma_{site}^axis.
struct DriveTerm {
  int site = 1;
  Axis axis = Axis::X;
  Complex weight{1.0, 0.0};
};

// System-bath and system-drive coupling strengths. The uniform channel couples
// e_uniform * S_x (S_x = sum_n sigma_n^x) to one bath coordinate; the local
// channels couple eps_local * sigma_n^nu for every site n and axis nu to
// independent coordinates of the same bath; the drive adds
// eps_drive * (exp(-i w t) V + exp(+i w t) V^dag) with V defaulting to
// sigma_N^x (so the default drive is 2 eps_drive cos(w t) sigma_N^x).
struct CouplingSpec {
  double e_uniform = 0.0;
  double eps_local = 0.0;
  double eps_drive = 0.0;
  // Second-bath local coupling strength (x axis only); used by the two-bath
  // solver and ignored unless a second bath is supplied.
  double eps2_local = 0.0;
  // Drive frequency; NaN means "resonant", i.e. w = 2 h_N resolved against the
  // chain at hand.
  double drive_frequency = std::numeric_limits<double>::quiet_NaN();
  std::vector<DriveTerm> drive_weights;  // empty => sigma_N^x

  bool drive_resonant() const { return std::isnan(drive_frequency); }
  void validate() const;
};

double resolve_drive_frequency(const CouplingSpec& coupling,
                               const ChainSpec& chain);

// ---------------------------------------------------------------------------
// Density matrices.
// ---------------------------------------------------------------------------

// A density matrix together with the tag of the basis its entries refer to
// ("config" for the sigma^z product basis, "adapted" for the parity-adapted
// eigenbasis of a specific chain). Construction validates trace one, hermiticity
// and positivity up to fixed tolerances.
struct DensityMatrix {
  CMatrix entries;
  std::string basis = "adapted";

  int dim() const { return static_cast<int>(entries.rows()); }
};

DensityMatrix make_density_matrix(CMatrix entries, std::string basis,
                                  double trace_tol = 1e-9,
                                  double herm_tol = 1e-9,
                                  double eig_floor = -1e-9);

// Largest absolute entry of the difference, a cheap metric used by tests.
double max_abs_diff(const CMatrix& a, const CMatrix& b);

// Trace distance (half the sum of singular values of the difference).
double trace_distance(const CMatrix& a, const CMatrix& b);

}  // namespace catchain
