#include "catchain/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace catchain {

namespace {

void require_dim(const EigenStructure& es, const DensityMatrix& rho) {
  if (rho.dim() != es.dim)
    throw InvalidParameter("density matrix dimension does not match the chain");
}

bool is_config(const DensityMatrix& rho) {
  if (rho.basis == "config") return true;
  if (rho.basis == "adapted") return false;
  throw InvalidParameter("unknown density matrix basis tag '" + rho.basis +
                         "'");
}

// Scatter the k low bits of `packed` into the bit positions listed in
// `positions` (0-based), preserving order.
std::uint32_t scatter_bits(std::uint32_t packed,
                           const std::vector<int>& positions) {
  std::uint32_t out = 0;
  for (size_t i = 0; i < positions.size(); ++i) {
    if ((packed >> i) & 1u) out |= 1u << positions[i];
  }
  return out;
}

}  // namespace

DensityMatrix to_config_basis(const EigenStructure& es,
                              const DensityMatrix& rho) {
  require_dim(es, rho);
  if (is_config(rho)) return rho;
  const CMatrix q = es.adapted.cast<Complex>();
  DensityMatrix out;
  out.entries = q * rho.entries * q.adjoint();
  out.basis = "config";
  return out;
}

DensityMatrix to_adapted_basis(const EigenStructure& es,
                               const DensityMatrix& rho) {
  require_dim(es, rho);
  if (!is_config(rho)) return rho;
  DensityMatrix out;
  out.entries = to_adapted(es, rho.entries);
  out.basis = "adapted";
  return out;
}

CatParameter cat_parameter(const EigenStructure& es, const DensityMatrix& rho) {
  require_dim(es, rho);
  const int up = static_cast<int>(es.named.up.bits);
  const int down = static_cast<int>(es.named.down.bits);

  Complex coherence;
  double mass = 0.0;
  if (is_config(rho)) {
    coherence = rho.entries(up, down);
    mass = rho.entries(up, up).real() + rho.entries(down, down).real();
  } else {
    // <c|rho_config|c'> = row_c(U) rho row_c'(U)^T without forming the full
    // conjugation.
    const CVector u = es.adapted.row(up).transpose().cast<Complex>();
    const CVector v = es.adapted.row(down).transpose().cast<Complex>();
    coherence = u.adjoint() * rho.entries * v;
    mass = (u.adjoint() * rho.entries * u).value().real() +
           (v.adjoint() * rho.entries * v).value().real();
  }

  CatParameter out;
  out.p = 0.5 - coherence.real();
  out.doublet_mass = mass;
  return out;
}

CMatrix partial_trace(const ChainSpec& spec, const CMatrix& rho_config,
                      const std::vector<int>& keep_sites) {
  const int sites = spec.sites();
  if (rho_config.rows() != spec.dim() || rho_config.cols() != spec.dim())
    throw InvalidParameter("density matrix dimension does not match the chain");

  std::vector<int> keep = keep_sites;
  std::sort(keep.begin(), keep.end());
  if (keep.empty() || keep.front() < 1 || keep.back() > sites ||
      std::adjacent_find(keep.begin(), keep.end()) != keep.end()) {
    throw InvalidParameter(
        "kept sites must be distinct labels in 1..2*n_half");
  }

  std::vector<int> keep_bits, env_bits;
  for (int s : keep) keep_bits.push_back(s - 1);
  for (int b = 0; b < sites; ++b) {
    if (!std::binary_search(keep.begin(), keep.end(), b + 1))
      env_bits.push_back(b);
  }

  const int sub_dim = 1 << keep_bits.size();
  const int env_dim = 1 << env_bits.size();
  CMatrix out = CMatrix::Zero(sub_dim, sub_dim);
  for (std::uint32_t e = 0; e < static_cast<std::uint32_t>(env_dim); ++e) {
    const std::uint32_t env = scatter_bits(e, env_bits);
    for (std::uint32_t a = 0; a < static_cast<std::uint32_t>(sub_dim); ++a) {
      const std::uint32_t ra = scatter_bits(a, keep_bits) | env;
      for (std::uint32_t b = 0; b < static_cast<std::uint32_t>(sub_dim); ++b) {
        out(a, b) += rho_config(ra, scatter_bits(b, keep_bits) | env);
      }
    }
  }
  return out;
}

double von_neumann_entropy(const CMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(rho,
                                                Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (int i = 0; i < solver.eigenvalues().size(); ++i) {
    const double x = std::clamp(solver.eigenvalues()(i), 0.0, 1.0);
    if (x > 0.0) s -= x * std::log(x);
  }
  return s;
}

WitnessReport entanglement_witness(const ChainSpec& spec,
                                   const DensityMatrix& rho_config,
                                   const std::vector<int>& subsystem_sites) {
  if (!rho_config.basis.empty() && rho_config.basis != "config")
    throw InvalidParameter(
        "the witness bipartition is defined in the product basis");
  if (static_cast<int>(subsystem_sites.size()) >= spec.sites())
    throw InvalidParameter("bipartition must be a proper site subset");

  WitnessReport out;
  out.subsystem_entropy = von_neumann_entropy(
      partial_trace(spec, rho_config.entries, subsystem_sites));
  out.total_entropy = von_neumann_entropy(rho_config.entries);
  out.entangled = out.subsystem_entropy > out.total_entropy + 1e-9;
  return out;
}

double fidelity_with(const DensityMatrix& rho, const CVector& target) {
  if (target.size() != rho.dim())
    throw InvalidParameter("target state dimension does not match");
  const double f = (target.adjoint() * rho.entries * target).value().real();
  return std::clamp(f, 0.0, 1.0);
}

double purity(const DensityMatrix& rho) {
  return rho.entries.cwiseAbs2().sum();
}

double pi_expectation(const EigenStructure& es, const DensityMatrix& rho) {
  require_dim(es, rho);
  double val = 0.0;
  if (is_config(rho)) {
    for (std::uint32_t c = 0; c < static_cast<std::uint32_t>(es.dim); ++c) {
      const std::uint32_t pc = apply_pi(es.spec, Configuration{c}).bits;
      val += rho.entries(pc, c).real();
    }
  } else {
    for (int k = 0; k < es.dim; ++k) {
      val += es.state_parity[k] * rho.entries(k, k).real();
    }
  }
  return val;
}

}  // namespace catchain
