#include "catchain/checks.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/SVD>

namespace catchain {

namespace {

void validate_local(const LocalHamiltonian& h) {
  if (h.sites < 2 || h.sites > 20)
    throw InvalidParameter("local Hamiltonian needs 2..20 sites");
  for (const LocalTerm& t : h.terms) {
    if (t.factors.empty())
      throw InvalidParameter("local term with no factors");
    for (size_t i = 0; i < t.factors.size(); ++i) {
      const int s = t.factors[i].first;
      if (s < 1 || s > h.sites)
        throw InvalidParameter("local term site outside the chain");
      if (i > 0 && s != t.factors[i - 1].first + 1)
        throw InvalidParameter(
            "local term sites must be ascending and contiguous");
    }
  }
}

// 2x2 Pauli blocks in the configuration bit convention (index 1 = spin up),
// matching sigma_config.
void pauli_entries(Axis axis, Complex out[2][2]) {
  out[0][0] = out[0][1] = out[1][0] = out[1][1] = 0.0;
  switch (axis) {
    case Axis::X:
      out[0][1] = out[1][0] = 1.0;
      break;
    case Axis::Y:
      // sigma^y = i sigma^x sigma^z, the convention used throughout.
      out[0][1] = Complex(0.0, 1.0);
      out[1][0] = Complex(0.0, -1.0);
      break;
    case Axis::Z:
      out[0][0] = -1.0;
      out[1][1] = 1.0;
      break;
  }
}

}  // namespace

CMatrix local_dense(const LocalHamiltonian& h) {
  validate_local(h);
  const int dim = 1 << h.sites;
  CMatrix m = CMatrix::Zero(dim, dim);
  Complex p[2][2];
  for (const LocalTerm& t : h.terms) {
    // A Pauli product maps each configuration to exactly one configuration:
    // follow columns instead of forming per-site matrices.
    for (std::uint32_t w = 0; w < static_cast<std::uint32_t>(dim); ++w) {
      Complex amp = t.coeff;
      std::uint32_t v = w;
      for (const auto& [site, axis] : t.factors) {
        pauli_entries(axis, p);
        const std::uint32_t bit = 1u << (site - 1);
        const int in = (v >> (site - 1)) & 1u;
        const int out = axis == Axis::Z ? in : 1 - in;
        amp *= p[out][in];
        if (out != in) v ^= bit;
      }
      m(v, w) += amp;
    }
  }
  return m;
}

LocalHamiltonian chain_local_hamiltonian(const ChainSpec& spec) {
  spec.validate();
  LocalHamiltonian h;
  h.sites = spec.sites();
  for (int n = 1; n < h.sites; ++n) {
    h.terms.push_back(
        {-spec.coupling_j, {{n, Axis::Z}, {n + 1, Axis::Z}}});
  }
  for (int n = 1; n <= spec.n_half; ++n) {
    h.terms.push_back({-spec.fields_h[n - 1], {{n, Axis::Z}}});
    h.terms.push_back({+spec.fields_h[n - 1], {{h.sites - n + 1, Axis::Z}}});
  }
  return h;
}

NoThermalCatReport no_thermal_cat_property(const LocalHamiltonian& h) {
  validate_local(h);
  for (const LocalTerm& t : h.terms) {
    if (t.factors.front().first == 1 && t.factors.back().first == h.sites) {
      throw SplitInvalid(
          "a term touches both chain ends; no cut isolates site 1");
    }
  }

  const CMatrix m = local_dense(h);
  const int dim = 1 << h.sites;
  const int up = dim - 1;
  const int down = 0;

  NoThermalCatReport out;
  out.cross_term = std::abs(m(up, down));
  const double mean = (m(up, up).real() + m(down, down).real()) / 2.0;
  // <cat|H|cat> = mean +- Re <up|H|down> for the two cat signs.
  out.identity_gap = std::abs(m(up, down).real());
  out.cat_energy = mean;

  Eigen::SelfAdjointEigenSolver<CMatrix> eig(m, Eigen::EigenvaluesOnly);
  const double scale =
      std::max(std::abs(eig.eigenvalues()(0)),
               std::abs(eig.eigenvalues()(dim - 1)));
  out.ground_energy = eig.eigenvalues()(0);
  out.ground_gap = eig.eigenvalues()(1) - eig.eigenvalues()(0);
  out.unique_ground = out.ground_gap > 1e-8 * std::max(scale, 1.0);
  out.strictly_above = out.cat_energy > out.ground_energy;

  // Branch additivity of the mean energy for product Schmidt forms
  //   psi = sum_r lambda_r prod_n |u_n^(r)>,   <u_n^(r)|u_n^(r')> = delta
  // at every site. Any term that misses at least one site then meets a bare
  // orthogonal overlap in each cross-branch matrix element, so the mean
  // energy is additive over branches; the aligned cats are exactly such
  // states, which is why they can never be a unique ground state.
  std::mt19937 gen(12345);
  std::normal_distribution<double> nrm(0.0, 1.0);
  for (int sample = 0; sample < 8; ++sample) {
    // Per-site random qubit and its orthogonal partner.
    std::vector<std::array<Complex, 2>> a(h.sites), b(h.sites);
    for (int n = 0; n < h.sites; ++n) {
      Complex a0(nrm(gen), nrm(gen)), a1(nrm(gen), nrm(gen));
      const double norm = std::sqrt(std::norm(a0) + std::norm(a1));
      a[n] = {a0 / norm, a1 / norm};
      b[n] = {-std::conj(a[n][1]), std::conj(a[n][0])};
    }
    CVector b0(dim), b1(dim);
    for (int w = 0; w < dim; ++w) {
      Complex p0 = 1.0, p1 = 1.0;
      for (int n = 0; n < h.sites; ++n) {
        const int bit = (w >> n) & 1;
        p0 *= a[n][bit];
        p1 *= b[n][bit];
      }
      b0(w) = p0;
      b1(w) = p1;
    }
    const double angle = std::abs(nrm(gen));
    const double l0 = std::cos(angle);
    const double l1 = std::sin(angle);
    const CVector psi = l0 * b0 + l1 * b1;
    const double whole = (psi.adjoint() * m * psi).value().real();
    const double branches =
        l0 * l0 * (b0.adjoint() * m * b0).value().real() +
        l1 * l1 * (b1.adjoint() * m * b1).value().real();
    out.schmidt_gap =
        std::max(out.schmidt_gap, std::abs(whole - branches));
  }
  return out;
}

NoThermalCatTrials run_no_thermal_cat_trials(int sites, int trials,
                                             std::uint32_t seed) {
  if (trials < 1) throw InvalidParameter("at least one trial");
  NoThermalCatTrials out;
  out.seed = seed;
  out.min_margin = std::numeric_limits<double>::infinity();
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  const Axis axes[3] = {Axis::X, Axis::Y, Axis::Z};

  int accepted = 0;
  while (accepted < trials) {
    LocalHamiltonian h;
    h.sites = sites;
    for (int n = 1; n < sites; ++n) {
      for (Axis a : axes) {
        for (Axis b : axes) {
          h.terms.push_back({coeff(gen), {{n, a}, {n + 1, b}}});
        }
      }
    }
    for (int n = 1; n <= sites; ++n) {
      for (Axis a : axes) h.terms.push_back({coeff(gen), {{n, a}}});
    }

    const auto report = no_thermal_cat_property(h);
    ++out.trials;
    if (!report.unique_ground) {
      ++out.redraws;
      if (out.redraws > 50 * trials)
        throw NoConvergence("degenerate redraw loop did not terminate");
      continue;
    }
    ++accepted;
    out.max_identity_gap = std::max(out.max_identity_gap, report.identity_gap);
    out.max_cross_term = std::max(out.max_cross_term, report.cross_term);
    out.max_schmidt_gap = std::max(out.max_schmidt_gap, report.schmidt_gap);
    out.min_margin = std::min(out.min_margin,
                              report.cat_energy - report.ground_energy);
    if (report.strictly_above) ++out.strict;
  }
  return out;
}

std::vector<DfsState> dfs_scan(const ChainSpec& spec) {
  const EigenStructure es = build_eigenstructure(spec);
  const Matrix sx = sx_total_config(spec);
  const int dim = es.dim;

  std::vector<DfsState> found;
  for (const Level& level : es.levels) {
    const int m = static_cast<int>(level.configs.size());
    // Columns of the eigenspace in the configuration basis are unit vectors,
    // so S_x restricted to and out of the level is a column selection.
    Matrix s_cols(dim, m);
    for (int j = 0; j < m; ++j) {
      s_cols.col(j) = sx.col(level.configs[j]);
    }
    Matrix outside = s_cols;
    Matrix inside(m, m);
    for (int i = 0; i < m; ++i) {
      inside.row(i) = s_cols.row(level.configs[i]);
      outside.row(level.configs[i]).setZero();
    }

    // Vectors the coupling keeps inside the eigenspace.
    Eigen::JacobiSVD<Matrix> svd(outside, Eigen::ComputeThinV);
    const double smax = svd.singularValues().size() > 0
                            ? svd.singularValues()(0)
                            : 0.0;
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i) {
      if (svd.singularValues()(i) > 1e-10 * std::max(smax, 1.0)) ++rank;
    }
    const int w = m - rank;
    if (w == 0) continue;
    const Matrix null_basis = svd.matrixV().rightCols(w);

    // Diagonalize the coupling on the protected remnant.
    const Matrix g = null_basis.transpose() * inside * null_basis;
    Eigen::SelfAdjointEigenSolver<Matrix> eig((g + g.transpose()) / 2.0);
    for (int j = 0; j < w; ++j) {
      Vector v = Vector::Zero(dim);
      const Vector coeffs = null_basis * eig.eigenvectors().col(j);
      for (int i = 0; i < m; ++i) v(level.configs[i]) = coeffs(i);
      v.normalize();

      DfsState state;
      state.vector = v.cast<Complex>();
      state.energy = level.energy;
      state.sx_value = eig.eigenvalues()(j);
      state.h_residual =
          ((es.config_energy.array() - level.energy) * v.array())
              .matrix()
              .norm();
      state.sx_residual = (sx * v - state.sx_value * v).norm();
      if (state.h_residual < 1e-10 && state.sx_residual < 1e-10) {
        found.push_back(std::move(state));
      }
    }
  }
  return found;
}

}  // namespace catchain
