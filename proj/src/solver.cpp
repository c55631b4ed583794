#include "catchain/solver.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace catchain {

namespace {

// Drop the last rate row, append the normalization row, solve least squares,
// then clip rounding-level negatives and renormalize.
Vector population_solve(const Matrix& rates) {
  const int n = static_cast<int>(rates.rows());
  Matrix m(n, n);
  m.topRows(n - 1) = rates.topRows(n - 1);
  m.row(n - 1).setOnes();
  Vector b = Vector::Zero(n);
  b(n - 1) = 1.0;
  Vector w = m.colPivHouseholderQr().solve(b);
  for (int q = 0; q < n; ++q) {
    if (w(q) < -1e-8) {
      throw NegativePopulation("population " + std::to_string(q) + " = " +
                               std::to_string(w(q)));
    }
    w(q) = std::max(w(q), 0.0);
  }
  const double total = w.sum();
  if (!(total > 0)) throw NoNullVector("population vector vanished");
  return w / total;
}

int count_null(const Vector& singular_values, double rel_tol) {
  if (singular_values.size() == 0) return 0;
  const double cut = rel_tol * singular_values(0);
  int n = 0;
  for (int i = 0; i < singular_values.size(); ++i) {
    if (singular_values(i) <= cut) ++n;
  }
  return n;
}

// Population generator R(k,l) = Re gamma_{kk,ll} in the basis the channel
// operators are expressed in.
Matrix population_rates(const ChannelSet& channels) {
  const int dim = static_cast<int>(channels.energies.size());
  Matrix r(dim, dim);
  for (int l = 0; l < dim; ++l) {
    for (int k = 0; k < dim; ++k) {
      r(k, l) = gamma_element(channels, k, k, l, l, 0.0).real();
    }
  }
  return r;
}

// Channel operators conjugated into the partition basis (a no-op for the
// generic identity-basis case).
ChannelSet rotate_channels(ChannelSet channels, const SectorPartition& part) {
  if (!part.basis_is_identity) {
    for (auto& op : channels.ops) {
      op = part.basis.adjoint() * op * part.basis;
    }
  }
  return channels;
}

}  // namespace

CMatrix commutator_coupling(const CMatrix& x, const PairSupport& from,
                            const PairSupport& to) {
  const int dim = from.dim;
  if (x.rows() != dim || x.cols() != dim || to.dim != dim) {
    throw InvalidParameter("commutator operands have mismatched dimensions");
  }
  CMatrix m = CMatrix::Zero(to.size(), from.size());
  for (int t = 0; t < to.size(); ++t) {
    const auto [k, l] = to.pairs[t];
    // [X, u]_{kl} = sum_j X_{kj} u_{jl} - u_{kj} X_{jl}
    for (int j = 0; j < dim; ++j) {
      const int a = from.index_of(j, l);
      if (a >= 0) m(t, a) += x(k, j);
      const int b = from.index_of(k, j);
      if (b >= 0) m(t, b) -= x(j, l);
    }
  }
  return m;
}

CMatrix embed_pairs(const PairSupport& support, const CVector& v) {
  if (v.size() != support.size()) {
    throw InvalidParameter("pair vector does not match the support");
  }
  CMatrix m = CMatrix::Zero(support.dim, support.dim);
  for (int t = 0; t < support.size(); ++t) {
    m(support.pairs[t].first, support.pairs[t].second) = v(t);
  }
  return m;
}

CVector restrict_pairs(const PairSupport& support, const CMatrix& m) {
  if (m.rows() != support.dim || m.cols() != support.dim) {
    throw InvalidParameter("matrix does not match the support dimension");
  }
  CVector v(support.size());
  for (int t = 0; t < support.size(); ++t) {
    v(t) = m(support.pairs[t].first, support.pairs[t].second);
  }
  return v;
}

GeneratorBlocks build_generator_blocks(const EigenStructure& es,
                                       const CouplingSpec& coupling,
                                       const BathSpec& bath, int max_p,
                                       bool include_local_channels) {
  coupling.validate();
  bath.validate();
  if (max_p < 0 || max_p > 3) throw InvalidParameter("max_p outside 0..3");
  if (coupling.e_uniform <= 0) {
    throw InvalidParameter("harmonic blocks need the uniform channel");
  }
  if (max_p >= 1) {
    if (bath.temperature <= 0) {
      throw InvalidParameter("driven harmonics require T > 0");
    }
    if (!drive_orientation_valid(coupling, es.spec)) {
      throw InvalidParameter(
          "drive orientation cannot select the mirror doublet");
    }
  }

  GeneratorBlocks blocks;
  blocks.omega = resolve_drive_frequency(coupling, es.spec);
  blocks.max_p = max_p;
  blocks.dim = es.dim;

  const auto full = make_chain_channels(
      es, coupling, bath, {},
      kUniformChannel | (include_local_channels ? kLocalChannels : 0));
  const auto tilde =
      include_local_channels
          ? make_chain_channels(es, coupling, bath, {}, kUniformChannel)
          : full;

  for (int p = -max_p; p <= max_p; ++p) {
    blocks.support.emplace(p, resonant_pairs(es, p, blocks.omega));
  }
  for (int p = -max_p; p <= max_p; ++p) {
    const auto& sup = blocks.support.at(p);
    auto oscillation = [&](CMatrix& g) {
      for (int t = 0; t < sup.size(); ++t) {
        const auto [k, l] = sup.pairs[t];
        const double detuning =
            p * blocks.omega - (es.state_energy(k) - es.state_energy(l));
        g(t, t) += kI * detuning;
      }
    };
    CMatrix g_full = gamma_block_for(full, es, p, blocks.omega).entries;
    oscillation(g_full);
    blocks.g0.emplace(p, std::move(g_full));
    if (include_local_channels) {
      CMatrix g_tilde = gamma_block_for(tilde, es, p, blocks.omega).entries;
      oscillation(g_tilde);
      blocks.g0_tilde.emplace(p, std::move(g_tilde));
    } else {
      blocks.g0_tilde.emplace(p, blocks.g0.at(p));
    }
    if (p != 0) {
      const CMatrix& g = blocks.g0_tilde.at(p);
      Eigen::FullPivLU<CMatrix> lu(g);
      if (!lu.isInvertible()) {
        throw SolverError("harmonic block at p = " + std::to_string(p) +
                          " is singular");
      }
      blocks.f.emplace(p, lu.inverse());
      Eigen::JacobiSVD<CMatrix> svd(g);
      const auto& sv = svd.singularValues();
      blocks.f_condition[p] = sv(0) / sv(sv.size() - 1);
    }
  }

  if (max_p >= 1) {
    if (es.named.c_minus.valid() && es.named.a.valid()) {
      blocks.pump_slot_p1 = blocks.support.at(1).index_of(
          es.named.c_minus.state, es.named.a.state);
    }
    blocks.drive_op = drive_operator_adapted(es, coupling);
    const CMatrix vdag = blocks.drive_op.adjoint();
    for (int p = -max_p; p <= max_p; ++p) {
      if (p - 1 >= -max_p) {
        blocks.g_minus.emplace(
            p, commutator_coupling(blocks.drive_op, blocks.support.at(p - 1),
                                   blocks.support.at(p)));
      }
      if (p + 1 <= max_p) {
        blocks.g_plus.emplace(
            p, commutator_coupling(vdag, blocks.support.at(p + 1),
                                   blocks.support.at(p)));
      }
    }
  }
  return blocks;
}

UniformFamily solve_uniform(const EigenStructure& es,
                            const SectorPartition& part,
                            const CouplingSpec& coupling,
                            const BathSpec& bath) {
  if (coupling.eps_local != 0 || coupling.eps_drive != 0) {
    throw InvalidParameter(
        "uniform mode requires eps_local = 0 and eps_drive = 0");
  }
  if (coupling.e_uniform <= 0) {
    throw InvalidParameter("uniform mode needs e_uniform > 0");
  }
  const auto channels = rotate_channels(
      make_chain_channels(es, coupling, bath, {}, kUniformChannel), part);

  UniformFamily family;
  family.population_rates = population_rates(channels);
  const double scale =
      std::max(family.population_rates.cwiseAbs().maxCoeff(), 1e-300);

  Eigen::BDCSVD<Matrix> svd(family.population_rates);
  family.nullspace_dim = count_null(svd.singularValues(), 1e-8);

  for (int q = 0; q < part.n_sectors(); ++q) {
    const Vector resid = family.population_rates * sector_weights(part, q);
    family.max_null_residual =
        std::max(family.max_null_residual, resid.cwiseAbs().maxCoeff());
    Vector unit = Vector::Zero(part.n_sectors());
    unit(q) = 1.0;
    family.members.push_back(sector_gibbs_state(part, unit));
  }
  if (family.max_null_residual > 1e-10 * scale) {
    throw SolverError("a sector Gibbs state fails stationarity: residual " +
                      std::to_string(family.max_null_residual));
  }
  return family;
}

ThermalSolution solve_thermal(const RateTensor& rt0, const EigenStructure& es,
                              double temperature) {
  if (rt0.p_index != 0) {
    throw InvalidParameter("thermal solve needs the p = 0 rate tensor");
  }
  if (temperature <= 0) throw InvalidParameter("T <= 0");
  const int dim = es.dim;
  Matrix rates(dim, dim);
  for (int l = 0; l < dim; ++l) {
    const int ill = rt0.support.index_of(l, l);
    if (ill < 0) {
      throw InvalidParameter("rate tensor lacks population entries");
    }
    for (int k = 0; k < dim; ++k) {
      rates(k, l) = rt0.entries(rt0.support.index_of(k, k), ill).real();
    }
  }

  Eigen::BDCSVD<Matrix> svd(rates);
  ThermalSolution sol;
  sol.nullspace_dim = count_null(svd.singularValues(), 1e-8);
  if (sol.nullspace_dim > 1) {
    throw DegenerateNullspace(
        "population generator has nullspace dimension " +
        std::to_string(sol.nullspace_dim) +
        "; local channels too weak to resolve a unique state");
  }
  sol.populations = population_solve(rates);
  sol.null_residual = (rates * sol.populations).cwiseAbs().maxCoeff();
  sol.steady = make_density_matrix(
      sol.populations.cast<Complex>().asDiagonal(), "adapted");
  return sol;
}

SteadyHarmonics solve_driven_direct(const GeneratorBlocks& blocks,
                                    double eps_drive) {
  if (eps_drive < 0) throw InvalidParameter("eps_drive < 0");
  std::map<int, int> offset;
  int total = 0;
  for (const auto& [p, sup] : blocks.support) {
    offset[p] = total;
    total += sup.size();
  }

  CMatrix a = CMatrix::Zero(total, total);
  const Complex drive_factor = -kI * eps_drive;
  for (int p = -blocks.max_p; p <= blocks.max_p; ++p) {
    const int np = blocks.support.at(p).size();
    a.block(offset[p], offset[p], np, np) = blocks.g0.at(p);
    if (auto it = blocks.g_minus.find(p); it != blocks.g_minus.end()) {
      a.block(offset[p], offset[p - 1], np, it->second.cols()) =
          drive_factor * it->second;
    }
    if (auto it = blocks.g_plus.find(p); it != blocks.g_plus.end()) {
      a.block(offset[p], offset[p + 1], np, it->second.cols()) =
          drive_factor * it->second;
    }
  }

  Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cut = 1e-10 * sv(0);
  if (sv(total - 1) > cut) {
    throw NoNullVector("the harmonic system has no null vector: smallest "
                       "singular value ratio " +
                       std::to_string(sv(total - 1) / sv(0)));
  }
  // Deep in the frozen regime, metastable modes (trap populations and the
  // coherence between the two cats) relax slower than double rounding on the
  // O(1) detuning entries can resolve, so several singular values fall below
  // the cut and the minimal direction inside that cluster is noise-selected.
  // The cluster span itself is still accurate, so re-evaluate the generator
  // on the span with quad-precision accumulation; the refined residuals drop
  // far below the slowest genuine rate and the true null direction separates
  // cleanly from the metastable ones.
  int cluster = 0;
  while (cluster < total && sv(total - 1 - cluster) <= cut) ++cluster;
  std::string degeneracy_note;
  CVector v;
  if (cluster <= 1) {
    v = svd.matrixV().col(total - 1);
  } else {
    degeneracy_note =
        "nullspace numerically degenerate at threshold: refined the steady "
        "direction inside a cluster of " + std::to_string(cluster) +
        " slow modes";
    const CMatrix basis = svd.matrixV().rightCols(cluster);
    // b = a * basis, accumulated entrywise in quad precision. The columns of
    // b are near-cancelling sums of O(1) products, so the accumulator's
    // epsilon, not double's, sets the attainable residual floor.
    std::vector<std::vector<std::complex<long double>>> b(
        cluster, std::vector<std::complex<long double>>(total));
    for (int c = 0; c < cluster; ++c) {
      for (int i = 0; i < total; ++i) {
        __float128 re = 0, im = 0;
        for (int j = 0; j < total; ++j) {
          const Complex& aij = a(i, j);
          if (aij == Complex(0.0, 0.0)) continue;
          const __float128 ar = aij.real(), ai = aij.imag();
          const __float128 br = basis(j, c).real(), bi = basis(j, c).imag();
          re += ar * br - ai * bi;
          im += ar * bi + ai * br;
        }
        b[c][i] = std::complex<long double>(static_cast<long double>(re),
                                            static_cast<long double>(im));
      }
    }
    // Gram matrix of the refined columns; its null eigenvector gives the
    // in-span direction with the smallest true residual. The large
    // eigenvalues are well separated from zero, so the null direction is
    // insensitive to the squaring.
    using LMatrix = Eigen::Matrix<std::complex<long double>, Eigen::Dynamic,
                                  Eigen::Dynamic>;
    LMatrix gram(cluster, cluster);
    for (int r = 0; r < cluster; ++r) {
      for (int c = r; c < cluster; ++c) {
        std::complex<long double> acc(0.0L, 0.0L);
        for (int i = 0; i < total; ++i) acc += std::conj(b[r][i]) * b[c][i];
        gram(r, c) = acc;
        gram(c, r) = std::conj(acc);
      }
    }
    Eigen::SelfAdjointEigenSolver<LMatrix> eig(gram);
    CVector coeff(cluster);
    for (int r = 0; r < cluster; ++r) {
      const std::complex<long double> e = eig.eigenvectors()(r, 0);
      coeff(r) = Complex(static_cast<double>(e.real()),
                         static_cast<double>(e.imag()));
    }
    v = basis * coeff;
  }

  // Normalize the stationary part to unit trace.
  const auto& sup0 = blocks.support.at(0);
  Complex trace = 0.0;
  for (int t = 0; t < sup0.size(); ++t) {
    if (sup0.pairs[t].first == sup0.pairs[t].second) {
      trace += v(offset[0] + t);
    }
  }
  if (std::abs(trace) < 1e-10) {
    throw NoNullVector("stationary null vector is traceless");
  }
  v /= trace;

  SteadyHarmonics sh;
  sh.omega = blocks.omega;
  if (!degeneracy_note.empty()) sh.warnings.push_back(degeneracy_note);
  for (const auto& [p, sup] : blocks.support) {
    sh.harmonics[p] = embed_pairs(sup, v.segment(offset[p], sup.size()));
  }
  // rho(t) real: pair up u^(p) with u^(-p) adjoint, recording the mismatch.
  double mismatch = 0.0;
  for (int p = 1; p <= blocks.max_p; ++p) {
    const CMatrix avg =
        0.5 * (sh.harmonics[p] + sh.harmonics[-p].adjoint().eval());
    mismatch = std::max(
        mismatch, (sh.harmonics[p] - sh.harmonics[-p].adjoint()).cwiseAbs()
                      .maxCoeff());
    sh.harmonics[p] = avg;
    sh.harmonics[-p] = avg.adjoint();
  }
  CMatrix u0 = sh.harmonics[0];
  mismatch = std::max(mismatch, (u0 - u0.adjoint()).cwiseAbs().maxCoeff());
  u0 = 0.5 * (u0 + u0.adjoint()).eval();
  sh.harmonics[0] = u0;
  if (mismatch > 1e-8) {
    sh.warnings.push_back("harmonic conjugation mismatch " +
                          std::to_string(mismatch));
  }
  sh.steady = make_density_matrix(u0, "adapted");
  return sh;
}

PerturbativeSolution solve_driven_perturbative(const GeneratorBlocks& blocks,
                                               const SectorPartition& part,
                                               double eps_drive) {
  if (eps_drive < 0) throw InvalidParameter("eps_drive < 0");
  if (blocks.max_p < 1) {
    throw InvalidParameter("perturbative elimination needs max_p >= 1");
  }
  if (!part.basis_is_identity) {
    throw InvalidParameter(
        "perturbative elimination needs a level-aligned partition basis");
  }
  if (part.dim() != blocks.dim) {
    throw InvalidParameter("partition and blocks dimensions differ");
  }
  const auto& sup0 = blocks.support.at(0);
  const int n_q = part.n_sectors();
  const double ef2 = eps_drive * eps_drive;

  // r(q, q') = eps_f^2 Phi_q [g_plus(0) f(1) g_minus(1)
  //                           + g_minus(0) f(-1) g_plus(-1)] Psi_q'
  Matrix r = Matrix::Zero(n_q, n_q);
  double max_imag = 0.0;
  for (int qp = 0; qp < n_q; ++qp) {
    const Vector w = sector_weights(part, qp);
    CVector v0 = CVector::Zero(sup0.size());
    for (int t = 0; t < sup0.size(); ++t) {
      const auto [k, l] = sup0.pairs[t];
      if (k == l) v0(t) = w(k);
    }
    const CVector up = blocks.f.at(1) * (blocks.g_minus.at(1) * v0);
    const CVector dn = blocks.f.at(-1) * (blocks.g_plus.at(-1) * v0);
    const CVector y =
        ef2 * (blocks.g_plus.at(0) * up + blocks.g_minus.at(0) * dn);
    for (int t = 0; t < sup0.size(); ++t) {
      const auto [k, l] = sup0.pairs[t];
      if (k == l) {
        r(part.sector_of[k], qp) += y(t).real();
        max_imag = std::max(max_imag, std::abs(y(t).imag()));
      }
    }
  }

  PerturbativeSolution sol;
  sol.rates.r = r;
  const double r_scale = std::max(r.cwiseAbs().maxCoeff(), 1e-300);
  sol.rates.column_sum_residual =
      r.colwise().sum().cwiseAbs().maxCoeff() / r_scale;
  if (max_imag > 1e-10 * r_scale) {
    sol.harmonics.warnings.push_back("sector rates have imaginary residue " +
                                     std::to_string(max_imag));
  }
  sol.rates.populations = population_solve(r);

  // Diagnostic scalar: the dominant pumping amplitude through the lowest
  // one-interface doublet, read off the tilde block diagonal.
  if (blocks.pump_slot_p1 >= 0) {
    const int s = blocks.pump_slot_p1;
    sol.rates.scalar_r = ef2 * (1.0 / blocks.g0_tilde.at(1)(s, s)).real();
  }

  SteadyHarmonics& sh = sol.harmonics;
  sh.omega = blocks.omega;
  sh.sector_populations = sol.rates.populations;
  Vector diag = Vector::Zero(part.dim());
  for (int q = 0; q < n_q; ++q) {
    diag += sol.rates.populations(q) * sector_weights(part, q);
  }
  CVector v0(sup0.size());
  for (int t = 0; t < sup0.size(); ++t) {
    const auto [k, l] = sup0.pairs[t];
    v0(t) = (k == l) ? diag(k) : 0.0;
  }
  const Complex i_ef = kI * eps_drive;
  sh.harmonics[0] = embed_pairs(sup0, v0);
  sh.harmonics[1] = embed_pairs(
      blocks.support.at(1), i_ef * (blocks.f.at(1) * (blocks.g_minus.at(1) * v0)));
  sh.harmonics[-1] = embed_pairs(
      blocks.support.at(-1),
      i_ef * (blocks.f.at(-1) * (blocks.g_plus.at(-1) * v0)));
  sh.steady = sector_gibbs_state(part, sol.rates.populations);
  return sol;
}

TwoBathSolution solve_two_bath(const EigenStructure& es,
                               const SectorPartition& part,
                               const CouplingSpec& coupling,
                               const BathSpec& bath1, const BathSpec& bath2) {
  coupling.validate();
  bath1.validate();
  bath2.validate();
  if (coupling.eps2_local <= 0) {
    throw InvalidParameter("two-bath mode needs eps2_local > 0");
  }
  if (coupling.eps_drive != 0) {
    throw InvalidParameter("two-bath mode requires eps_drive = 0");
  }
  if (std::abs(part.temperature - bath1.temperature) >
      1e-12 * std::max(1.0, bath1.temperature)) {
    throw InvalidParameter("partition temperature differs from bath 1");
  }

  const int sites = es.spec.sites();
  std::vector<CMatrix> sx_ops;
  for (int n = 1; n <= sites; ++n) {
    CMatrix op = sigma_adapted(es, n, Axis::X).cast<Complex>();
    if (!part.basis_is_identity) {
      op = part.basis.adjoint() * op * part.basis;
    }
    sx_ops.push_back(std::move(op));
  }

  const int n_q = part.n_sectors();
  const double ep2 = coupling.eps2_local * coupling.eps2_local;
  Matrix r = Matrix::Zero(n_q, n_q);
  for (int qp = 0; qp < n_q; ++qp) {
    const Vector w = sector_weights(part, qp);
    for (int l : part.sets[qp]) {
      if (w(l) == 0.0) continue;
      for (int q = 0; q < n_q; ++q) {
        if (q == qp) continue;
        for (int k : part.sets[q]) {
          double strength = 0.0;
          for (const auto& op : sx_ops) strength += std::norm(op(k, l));
          if (strength == 0.0) continue;
          const double nu = part.state_energy(l) - part.state_energy(k);
          r(q, qp) += ep2 * w(l) * strength * noise_power(bath2, nu);
        }
      }
    }
  }
  for (int qp = 0; qp < n_q; ++qp) {
    r(qp, qp) = -r.col(qp).sum() + r(qp, qp);
  }

  TwoBathSolution sol;
  sol.rates.r = r;
  sol.rates.populations = population_solve(r);
  sol.harmonics.omega = 0.0;
  sol.harmonics.sector_populations = sol.rates.populations;
  sol.harmonics.steady = sector_gibbs_state(part, sol.rates.populations);
  sol.harmonics.harmonics[0] = sol.harmonics.steady.entries;
  return sol;
}

FreezeoutReport low_t_freezeout_report(const SteadyHarmonics& sh,
                                       const EigenStructure& es,
                                       double temperature) {
  FreezeoutReport rep;
  const double threshold = es.ground_energy() + 3.0 * es.spec.coupling_j;
  for (int k = 0; k < es.dim; ++k) {
    if (es.state_energy(k) > threshold) {
      rep.mass_above += sh.steady.entries(k, k).real();
    }
  }
  rep.bound = temperature > 0
                  ? std::exp(-3.0 * es.spec.coupling_j / temperature)
                  : 0.0;
  rep.resolvable = rep.bound > 0;
  if (rep.bound > 0) {
    rep.ratio = rep.mass_above / rep.bound;
    rep.note = rep.mass_above < rep.bound
                   ? "multi-interface population is frozen below the barrier "
                     "scale"
                   : "multi-interface population exceeds the barrier scale";
  } else {
    rep.ratio = rep.mass_above > 0
                    ? std::numeric_limits<double>::infinity()
                    : 0.0;
    rep.note = "barrier scale exp(-3J/T) underflows at this temperature";
  }
  return rep;
}

}  // namespace catchain
