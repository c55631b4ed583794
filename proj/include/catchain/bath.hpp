#pragma once

// Bath correlation kernels and the relaxation tensor they induce on the
// chain. The bath is Ohmic with exponential cutoff; its absorption/emission
// spectrum W and one-sided kernel g enter the evolution through the
// four-term tensor
//
//   gamma_{kl,k'l'}(i0+ + w) =
//     sum_channels  X_{l'l} X_{kk'} [ g(w + w_{l'k}) + h(w + w_{lk'}) ]
//       - delta_{ll'} sum_j X_{kj} X_{jk'} g(w + w_{lj})
//       - delta_{kk'} sum_j X_{l'j} X_{jl} h(w + w_{jk})
//
// with w_{ab} = E_a - E_b, g(y) = W(y)/2 + (i/2pi) PV int W(nu)/(y-nu) dnu and
// h(y) = conj(g(-y)). Each coupling channel contributes through its own
// operator X (strength folded in) and the kernel of the bath it touches.

#include "catchain/chain.hpp"

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <utility>

namespace catchain {

// Absorption/emission spectrum of the bath at frequency nu:
//   nu > 0: 2 pi eta nu exp(-nu/cutoff) (n_B(nu/T) + 1)
//   nu < 0: 2 pi eta |nu| exp(-|nu|/cutoff) n_B(|nu|/T)
//   nu = 0: 2 pi eta T
// Detailed balance W(-nu) = exp(-nu/T) W(nu) holds to rounding because both
// branches share the expm1-based Bose factor. At T = 0 the spectrum vanishes
// for nu <= 0.
double noise_power(const BathSpec& bath, double nu);

// PV int_{-inf}^{inf} W(nu) / (y - nu) dnu, via the symmetric excision
// int_0^inf [W(y-u) - W(y+u)] / u du evaluated with adaptive Gauss-Kronrod
// panels split at the kink u = |y|.
double pv_integral(const BathSpec& bath, double y, double abs_tol = 1e-8);

// Memoizing evaluator of g and h for one bath. Cheap to copy; the cache is
// keyed on the frequency quantized at 1e-12.
class GEvaluator {
 public:
  explicit GEvaluator(BathSpec bath, double pv_abs_tol = 1e-8);

  Complex g(double y) const;
  Complex h(double y) const { return std::conj(g(-y)); }
  const BathSpec& bath() const { return bath_; }

 private:
  BathSpec bath_;
  double pv_tol_;
  mutable std::unordered_map<std::int64_t, Complex> cache_;
};

// The coupling channels of a concrete problem: adapted-basis operators with
// strengths folded in, each referring to one of the bath evaluators.
struct ChannelSet {
  Vector energies;  // adapted-basis state energies
  std::vector<CMatrix> ops;
  std::vector<int> bath_of;  // index into evals, per op
  std::vector<GEvaluator> evals;
};

// Which coupling channels to include when assembling a ChannelSet.
inline constexpr unsigned kUniformChannel = 1u;      // e * S_x into bath 1
inline constexpr unsigned kLocalChannels = 2u;       // eps * sigma_n^nu into bath 1
inline constexpr unsigned kSecondBathChannels = 4u;  // eps2 * sigma_n^x into bath 2
inline constexpr unsigned kAllChannels =
    kUniformChannel | kLocalChannels | kSecondBathChannels;

ChannelSet make_chain_channels(const EigenStructure& es,
                               const CouplingSpec& coupling,
                               const BathSpec& bath,
                               const std::optional<BathSpec>& second_bath = {},
                               unsigned mask = kAllChannels);

// One four-term tensor element at argument i0+ + omega_arg. Indices are
// adapted-basis states.
Complex gamma_element(const ChannelSet& channels, int k, int l, int k2, int l2,
                      double omega_arg);

// The set of state pairs (k,l) whose Bohr frequency w_kl = E_k - E_l matches
// p * omega within tol_scale * J. For p = 0 these are the intra-level pairs.
struct PairSupport {
  int dim = 0;
  std::vector<std::pair<int, int>> pairs;
  std::unordered_map<std::int64_t, int> lookup;

  int size() const { return static_cast<int>(pairs.size()); }
  int index_of(int k, int l) const {
    auto it = lookup.find(static_cast<std::int64_t>(k) * dim + l);
    return it == lookup.end() ? -1 : it->second;
  }
};

PairSupport resonant_pairs(const EigenStructure& es, int p, double omega,
                           double tol_scale = 1e-9);

// Dense gamma block over the resonant pairs of harmonic p, every entry
// evaluated at the common argument i0+ + p*omega. The oscillatory diagonal
// i(p*omega - w_kl) is *not* included; solvers add it where needed.
struct RateTensor {
  int p_index = 0;
  double omega_arg = 0.0;
  PairSupport support;
  CMatrix entries;
};

RateTensor gamma_block_for(const ChannelSet& channels,
                           const EigenStructure& es, int p, double omega);

// Convenience wrapper assembling all channels first. Throws EmptyBlock when
// no pair is resonant with harmonic p.
RateTensor gamma_block(const EigenStructure& es, const CouplingSpec& coupling,
                       const BathSpec& bath,
                       const std::optional<BathSpec>& second_bath, int p,
                       double omega);

// Upsilon_{kl} = Re gamma_{kk,ll}(i0+) * exp(-(E_l - E_0)/T): the detailed
// balance form of the population rate matrix. Symmetric with zero column sums
// of the underlying rates; the Boltzmann factor is measured from the ground
// energy so the matrix stays representable at low T (the physics is invariant
// under that shift).
Matrix upsilon_matrix(const RateTensor& rt0, const EigenStructure& es,
                      double temperature);

// Full pair-space generator of the undriven evolution: row index k*dim+l,
// entry -i w_kl on the diagonal plus gamma_{kl,k'l'}(i0+ + w_{k'l'}) with the
// argument set by the column pair.
CMatrix redfield_generator(const ChannelSet& channels);

}  // namespace catchain
