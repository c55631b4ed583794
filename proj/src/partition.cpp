#include "catchain/partition.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>

namespace catchain {

namespace {

// Contiguous state-index range of one energy level in the adapted basis.
struct LevelRange {
  int base = 0;
  int size = 0;
};

std::vector<LevelRange> level_ranges(const EigenStructure& es) {
  std::vector<LevelRange> ranges;
  ranges.reserve(es.levels.size());
  for (const auto& level : es.levels) {
    ranges.push_back({level.states.front(),
                      static_cast<int>(level.states.size())});
  }
  return ranges;
}

// A Hermitian matrix confined to the level blocks is parametrized by real
// numbers: per level, first the diagonal entries, then (re, im) for each
// strictly upper pair in row-major order. These helpers map (level, i, j)
// to parameter indices.
struct HermitianParams {
  std::vector<int> level_base;
  int total = 0;

  explicit HermitianParams(const std::vector<LevelRange>& ranges) {
    level_base.reserve(ranges.size());
    for (const auto& r : ranges) {
      level_base.push_back(total);
      total += r.size * r.size;
    }
  }

  int diag(int level, int i, const std::vector<LevelRange>& ranges) const {
    (void)ranges;
    return level_base[level] + i;
  }

  // Parameter index of Re K(r,c) for r < c; Im is the next index.
  int pair_re(int level, int r, int c,
              const std::vector<LevelRange>& ranges) const {
    const int d = ranges[level].size;
    // Pairs (0,1), (0,2), ..., (0,d-1), (1,2), ... in row-major order.
    const int pair_index = r * d - r * (r + 1) / 2 + (c - r - 1);
    return level_base[level] + d + 2 * pair_index;
  }
};

// Accumulate the coefficient of K_A(i,k) (an entry of the unknown Hermitian
// block) into the real/imaginary constraint rows.
void add_entry_coeff(Eigen::MatrixXd& m, int row_re, int row_im, int level,
                     int i, int k, Complex coeff,
                     const HermitianParams& params,
                     const std::vector<LevelRange>& ranges) {
  if (i == k) {
    const int p = params.diag(level, i, ranges);
    m(row_re, p) += coeff.real();
    m(row_im, p) += coeff.imag();
    return;
  }
  // K(i,k) = x + iy when i < k and x - iy when i > k, with (x, y) the
  // parameters of the ordered pair.
  const int r = std::min(i, k);
  const int c = std::max(i, k);
  const int px = params.pair_re(level, r, c, ranges);
  const double sign = (i < k) ? 1.0 : -1.0;
  // coeff * (x + i*sign*y): real row gets Re(coeff)*x - sign*Im(coeff)*y,
  // imaginary row gets Im(coeff)*x + sign*Re(coeff)*y.
  m(row_re, px) += coeff.real();
  m(row_re, px + 1) += -sign * coeff.imag();
  m(row_im, px) += coeff.imag();
  m(row_im, px + 1) += sign * coeff.real();
}

CMatrix unpack(const Eigen::VectorXd& v, const HermitianParams& params,
               const std::vector<LevelRange>& ranges, int dim) {
  CMatrix k = CMatrix::Zero(dim, dim);
  for (std::size_t a = 0; a < ranges.size(); ++a) {
    const int base = ranges[a].base;
    const int d = ranges[a].size;
    for (int i = 0; i < d; ++i) {
      k(base + i, base + i) = v(params.diag(static_cast<int>(a), i, ranges));
    }
    for (int r = 0; r < d; ++r) {
      for (int c = r + 1; c < d; ++c) {
        const int px = params.pair_re(static_cast<int>(a), r, c, ranges);
        const Complex val(v(px), v(px + 1));
        k(base + r, base + c) = val;
        k(base + c, base + r) = std::conj(val);
      }
    }
  }
  return k;
}

double max_offdiag(const CMatrix& m) {
  double worst = 0.0;
  for (int j = 0; j < m.cols(); ++j) {
    for (int i = 0; i < m.rows(); ++i) {
      if (i != j) worst = std::max(worst, std::abs(m(i, j)));
    }
  }
  return worst;
}

struct UnionFind {
  std::vector<int> parent;

  explicit UnionFind(int n) : parent(n) {
    for (int i = 0; i < n; ++i) parent[i] = i;
  }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

Matrix sx_matrix(const EigenStructure& es) { return sx_total_adapted(es); }

SectorPartition build_partition_ops(const EigenStructure& es,
                                    const std::vector<CMatrix>& ops,
                                    double temperature, double edge_tol,
                                    unsigned seed) {
  const int dim = es.dim;
  if (temperature < 0) throw InvalidParameter("T < 0");
  if (ops.empty()) throw InvalidParameter("empty operator family");
  for (const auto& op : ops) {
    if (op.rows() != dim || op.cols() != dim) {
      throw InvalidParameter("operator dimension does not match the chain");
    }
  }

  const auto ranges = level_ranges(es);
  const HermitianParams params(ranges);
  const int n_levels = static_cast<int>(ranges.size());

  // Count constraint rows: one complex equation per entry of K_A X_AB -
  // X_AB K_B for every operator and every level pair the operator touches.
  struct BlockRef {
    int op;
    int a;
    int b;
  };
  std::vector<BlockRef> blocks;
  long long rows = 0;
  for (std::size_t o = 0; o < ops.size(); ++o) {
    for (int a = 0; a < n_levels; ++a) {
      for (int b = 0; b < n_levels; ++b) {
        const auto blk = ops[o].block(ranges[a].base, ranges[b].base,
                                      ranges[a].size, ranges[b].size);
        if (blk.cwiseAbs().maxCoeff() > 0.0) {
          blocks.push_back({static_cast<int>(o), a, b});
          rows += 2LL * ranges[a].size * ranges[b].size;
        }
      }
    }
  }
  rows = std::max(rows, static_cast<long long>(params.total));
  if (rows * params.total > 50'000'000LL) {
    throw InvalidParameter("partition problem too large");
  }

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, params.total);
  int row = 0;
  for (const auto& ref : blocks) {
    const auto& x = ops[ref.op];
    const int base_a = ranges[ref.a].base;
    const int base_b = ranges[ref.b].base;
    const int da = ranges[ref.a].size;
    const int db = ranges[ref.b].size;
    for (int i = 0; i < da; ++i) {
      for (int j = 0; j < db; ++j) {
        const int row_re = row;
        const int row_im = row + 1;
        row += 2;
        // sum_k K_A(i,k) X(k,j) - sum_k X(i,k) K_B(k,j) = 0
        for (int k = 0; k < da; ++k) {
          add_entry_coeff(m, row_re, row_im, ref.a, i, k,
                          x(base_a + k, base_b + j), params, ranges);
        }
        for (int k = 0; k < db; ++k) {
          add_entry_coeff(m, row_re, row_im, ref.b, k, j,
                          -x(base_a + i, base_b + k), params, ranges);
        }
      }
    }
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double sv_max = sv.size() > 0 ? sv(0) : 0.0;
  const double cut = 1e-10 * std::max(sv_max, 1e-300);
  std::vector<CMatrix> commutant;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) <= cut) {
      commutant.push_back(unpack(svd.matrixV().col(i), params, ranges, dim));
    }
  }
  if (sv_max == 0.0) {
    // No constraints at all: every block-Hermitian matrix commutes, which can
    // only be minimal if every level is nondegenerate. Fall through with the
    // full parameter space; the component comparison below rejects it.
    commutant.clear();
    for (int i = 0; i < params.total; ++i) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(params.total);
      e(i) = 1.0;
      commutant.push_back(unpack(e, params, ranges, dim));
    }
  }
  const int c_dim = static_cast<int>(commutant.size());

  SectorPartition part;
  part.temperature = temperature;
  part.seed_used = seed;

  // Certificate: find a basis (identity if possible, otherwise a per-level
  // rotation diagonalizing a random commutant element) in which every
  // commutant basis element is diagonal. Failure means the commutant is
  // non-abelian and no unique minimal partition exists.
  auto all_diagonal = [&](const CMatrix& basis, bool identity) {
    for (const auto& k : commutant) {
      const CMatrix kr = identity ? k : CMatrix(basis.adjoint() * k * basis);
      const double scale = std::max(kr.cwiseAbs().maxCoeff(), 1e-300);
      if (max_offdiag(kr) > 1e-10 * scale) return false;
    }
    return true;
  };

  CMatrix basis = CMatrix::Identity(dim, dim);
  bool identity = all_diagonal(basis, true);
  if (!identity) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    bool certified = false;
    for (int attempt = 0; attempt < 4 && !certified; ++attempt) {
      CMatrix k_rand = CMatrix::Zero(dim, dim);
      for (const auto& k : commutant) k_rand += gauss(rng) * k;
      k_rand = 0.5 * (k_rand + k_rand.adjoint()).eval();
      basis = CMatrix::Zero(dim, dim);
      for (const auto& r : ranges) {
        Eigen::SelfAdjointEigenSolver<CMatrix> eig(
            k_rand.block(r.base, r.base, r.size, r.size));
        CMatrix u = eig.eigenvectors();
        // Deterministic column order and phase: assign each column to the
        // axis of its largest component and make that component real
        // positive, so an already-diagonal block reproduces the identity.
        std::vector<int> axis_of(r.size, -1);
        std::vector<bool> taken(r.size, false);
        for (int c = 0; c < r.size; ++c) {
          int best = -1;
          double best_mag = -1.0;
          for (int a = 0; a < r.size; ++a) {
            if (taken[a]) continue;
            const double mag = std::abs(u(a, c));
            if (mag > best_mag) {
              best_mag = mag;
              best = a;
            }
          }
          axis_of[c] = best;
          taken[best] = true;
          const Complex lead = u(best, c);
          if (std::abs(lead) > 0) u.col(c) *= std::abs(lead) / lead;
        }
        std::vector<int> order(r.size);
        for (int c = 0; c < r.size; ++c) order[c] = c;
        std::sort(order.begin(), order.end(),
                  [&](int lhs, int rhs) { return axis_of[lhs] < axis_of[rhs]; });
        for (int c = 0; c < r.size; ++c) {
          basis.block(r.base, r.base + c, r.size, 1) = u.col(order[c]);
        }
      }
      certified = all_diagonal(basis, false);
    }
    if (!certified) {
      throw NonMinimalPartition(
          "commutant is not abelian; no unique minimal partition exists");
    }
  }
  part.basis = basis;
  part.basis_is_identity = identity;

  // The abelian commutant consists of exactly the functions constant on the
  // minimal sectors, so states sharing the same diagonal signature across the
  // commutant basis belong to the same sector. This is far more robust than
  // thresholding rotated coupling entries, whose rounding dust sits just
  // above machine precision.
  Eigen::MatrixXd sig(dim, c_dim);
  for (int m = 0; m < c_dim; ++m) {
    const CMatrix km =
        identity ? commutant[m]
                 : CMatrix(basis.adjoint() * commutant[m] * basis);
    for (int i = 0; i < dim; ++i) sig(i, m) = km(i, i).real();
  }
  const double sig_scale = std::max(sig.cwiseAbs().maxCoeff(), 1e-300);
  std::vector<int> sector_of(dim, -1);
  std::vector<std::vector<int>> sets;
  for (int i = 0; i < dim; ++i) {
    int s = -1;
    for (std::size_t q = 0; q < sets.size() && s < 0; ++q) {
      const int rep = sets[q].front();
      if ((sig.row(i) - sig.row(rep)).cwiseAbs().maxCoeff() <
          1e-6 * sig_scale) {
        s = static_cast<int>(q);
      }
    }
    if (s < 0) {
      s = static_cast<int>(sets.size());
      sets.emplace_back();
    }
    sets[s].push_back(i);
    sector_of[i] = s;
  }
  // States were scanned in ascending order, so each set is sorted and the
  // sets are already ordered by their smallest member.
  if (static_cast<int>(sets.size()) != c_dim) {
    throw NonMinimalPartition(
        "commutant dimension " + std::to_string(c_dim) +
        " does not match the " + std::to_string(sets.size()) +
        " diagonal signature classes; partition is not minimal");
  }

  // Cross-check against the coupling graph: no operator may couple across
  // sectors beyond rounding dust, and each sector must be internally
  // connected through entries above the edge tolerance.
  UnionFind uf(dim);
  for (const auto& op : ops) {
    const CMatrix x = identity ? op : CMatrix(basis.adjoint() * op * basis);
    const double scale = std::max(x.cwiseAbs().maxCoeff(), 1e-300);
    for (int j = 0; j < dim; ++j) {
      for (int i = 0; i < dim; ++i) {
        if (i == j) continue;
        if (sector_of[i] != sector_of[j]) {
          if (std::abs(x(i, j)) > 1e-8 * scale) {
            throw NonMinimalPartition(
                "a coupling connects states across certified sectors");
          }
        } else if (std::abs(x(i, j)) > edge_tol * scale) {
          uf.unite(i, j);
        }
      }
    }
  }
  for (const auto& set : sets) {
    const int root = uf.find(set.front());
    for (int s : set) {
      if (uf.find(s) != root) {
        throw NonMinimalPartition(
            "a certified sector is not connected by the couplings");
      }
    }
  }
  part.sets = std::move(sets);
  part.sector_of = std::move(sector_of);

  // State metadata in the certified basis. Levels are preserved by the block
  // structure; parity is recomputed because a rotation may mix it.
  part.state_energy = es.state_energy;
  part.state_level = es.state_level;
  part.state_parity.assign(dim, 0);
  bool mixed_parity = false;
  for (int s = 0; s < dim; ++s) {
    if (identity) {
      part.state_parity[s] = es.state_parity[s];
      continue;
    }
    Complex p = 0.0;
    for (int i = 0; i < dim; ++i) {
      p += std::conj(basis(i, s)) * double(es.state_parity[i]) * basis(i, s);
    }
    if (std::abs(p - 1.0) < 1e-9) {
      part.state_parity[s] = 1;
    } else if (std::abs(p + 1.0) < 1e-9) {
      part.state_parity[s] = -1;
    } else {
      part.state_parity[s] = 0;
      mixed_parity = true;
    }
  }
  if (mixed_parity) {
    part.warnings.push_back("a rotated state mixes both mirror parities");
  }

  part.pi_label.assign(part.sets.size(), 0);
  for (std::size_t q = 0; q < part.sets.size(); ++q) {
    int label = part.state_parity[part.sets[q].front()];
    for (int s : part.sets[q]) {
      if (part.state_parity[s] != label) label = 0;
    }
    part.pi_label[q] = label;
    if (label == 0) {
      part.warnings.push_back("sector " + std::to_string(q) +
                              " has no uniform mirror parity");
    }
  }

  part.z = Vector::Zero(part.n_sectors());
  part.z_shift = Vector::Zero(part.n_sectors());
  for (int q = 0; q < part.n_sectors(); ++q) {
    double e_min = std::numeric_limits<double>::infinity();
    for (int s : part.sets[q]) e_min = std::min(e_min, part.state_energy(s));
    part.z_shift(q) = e_min;
    double z = 0.0;
    for (int s : part.sets[q]) {
      if (temperature > 0) {
        z += std::exp(-(part.state_energy(s) - e_min) / temperature);
      } else if (part.state_energy(s) == e_min) {
        z += 1.0;
      }
    }
    part.z(q) = z;
  }
  return part;
}

SectorPartition build_partition(const EigenStructure& es, const Matrix& sx,
                                double temperature, double edge_tol,
                                unsigned seed) {
  std::vector<CMatrix> ops;
  ops.push_back(sx.cast<Complex>());
  return build_partition_ops(es, ops, temperature, edge_tol, seed);
}

Vector sector_weights(const SectorPartition& part, int q) {
  if (q < 0 || q >= part.n_sectors()) {
    throw InvalidParameter("sector index out of range");
  }
  Vector w = Vector::Zero(part.dim());
  const double shift = part.z_shift(q);
  for (int s : part.sets[q]) {
    if (part.temperature > 0) {
      w(s) = std::exp(-(part.state_energy(s) - shift) / part.temperature);
    } else if (part.state_energy(s) == shift) {
      w(s) = 1.0;
    }
  }
  return w / part.z(q);
}

DensityMatrix sector_gibbs_state(const SectorPartition& part,
                                 const Vector& weights) {
  if (weights.size() != part.n_sectors()) {
    throw InvalidParameter("sector weight count does not match the partition");
  }
  double total = 0.0;
  for (int q = 0; q < weights.size(); ++q) {
    if (weights(q) < -1e-12) {
      throw InvalidParameter("sector weight < 0");
    }
    total += weights(q);
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InvalidParameter("sector weights do not sum to 1");
  }
  Vector diag = Vector::Zero(part.dim());
  for (int q = 0; q < part.n_sectors(); ++q) {
    if (weights(q) > 0) diag += weights(q) * sector_weights(part, q);
  }
  CMatrix rho;
  if (part.basis_is_identity) {
    rho = diag.cast<Complex>().asDiagonal();
  } else {
    rho = part.basis * diag.cast<Complex>().asDiagonal() *
          part.basis.adjoint();
  }
  return make_density_matrix(rho, "adapted");
}

int sector_of_state(const SectorPartition& part, int state) {
  if (!part.basis_is_identity) {
    throw InvalidParameter(
        "named-state lookup needs an unrotated partition basis");
  }
  if (state < 0 || state >= part.dim()) {
    throw InvalidParameter("state index out of range");
  }
  return part.sector_of[state];
}

}  // namespace catchain
