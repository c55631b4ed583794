#include "catchain/chain.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace catchain {

namespace {

// Energy from the integer tuple, always summed in the same order so identical
// tuples yield bit-identical doubles.
double tuple_energy(const ChainSpec& spec, const std::vector<long>& t) {
  double e = spec.coupling_j * static_cast<double>(t[0]);
  for (int n = 1; n <= spec.n_half; ++n)
    e += spec.fields_h[static_cast<std::size_t>(n - 1)] *
         static_cast<double>(t[static_cast<std::size_t>(n)]);
  return e;
}

}  // namespace

std::vector<long> energy_tuple(const ChainSpec& spec, Configuration c) {
  const int sites = spec.sites();
  std::vector<long> t(static_cast<std::size_t>(1 + spec.n_half), 0);
  for (int n = 1; n < sites; ++n) t[0] -= c.spin(n) * c.spin(n + 1);
  for (int n = 1; n <= spec.n_half; ++n)
    t[static_cast<std::size_t>(n)] = -(c.spin(n) - c.spin(sites + 1 - n));
  return t;
}

double energy_of(const ChainSpec& spec, Configuration c) {
  return tuple_energy(spec, energy_tuple(spec, c));
}

Configuration apply_pi(const ChainSpec& spec, Configuration c) {
  const int sites = spec.sites();
  std::uint32_t reversed = 0;
  for (int i = 0; i < sites; ++i)
    if ((c.bits >> i) & 1u) reversed |= 1u << (sites - 1 - i);
  const std::uint32_t mask = (1u << sites) - 1u;
  return Configuration{~reversed & mask};
}

namespace {

// Orbit of the mirror-flip acting on one level: the base configuration, its
// image (equal to the base when invariant) and the adapted columns built from
// it. Named-state lookup walks these records.
struct OrbitRecord {
  std::uint32_t base = 0;
  std::uint32_t partner = 0;
  int even_col = -1;
  int odd_col = -1;
};

NamedHandle locate_named(const std::vector<OrbitRecord>& orbits,
                         std::uint32_t word, int parity) {
  for (const OrbitRecord& o : orbits) {
    if (o.base != word && o.partner != word) continue;
    if (o.base == o.partner) {
      // Pi-invariant configuration: only the even combination exists.
      if (parity < 0) return NamedHandle{};
      return NamedHandle{o.even_col, 1.0};
    }
    const int col = parity > 0 ? o.even_col : o.odd_col;
    // The stored odd column is (|base> - |partner>)/sqrt(2); the conventional
    // vector for `word` leads with |word>, so the sign flips when the name
    // refers to the partner.
    const double sign = (parity < 0 && word == o.partner) ? -1.0 : 1.0;
    return NamedHandle{col, sign};
  }
  return NamedHandle{};
}

}  // namespace

EigenStructure build_eigenstructure(const ChainSpec& spec, double rel_tol) {
  spec.validate();
  EigenStructure es;
  es.spec = spec;
  es.dim = spec.dim();
  const int dim = es.dim;
  const int sites = spec.sites();

  for (int n = 0; n < spec.n_half; ++n) {
    if (spec.fields_h[static_cast<std::size_t>(n)] == 0.0) {
      std::ostringstream w;
      w << "field h[" << n + 1 << "] is zero (non-generic parameters)";
      es.warnings.push_back(w.str());
    }
    for (int m = n + 1; m < spec.n_half; ++m) {
      if (spec.fields_h[static_cast<std::size_t>(n)] ==
          spec.fields_h[static_cast<std::size_t>(m)]) {
        std::ostringstream w;
        w << "fields h[" << n + 1 << "] and h[" << m + 1
          << "] coincide (non-generic parameters)";
        es.warnings.push_back(w.str());
      }
    }
  }

  // Group configurations by exact integer tuple.
  es.config_energy.resize(dim);
  std::map<std::vector<long>, std::vector<std::uint32_t>> groups;
  for (std::uint32_t w = 0; w < static_cast<std::uint32_t>(dim); ++w) {
    auto t = energy_tuple(spec, Configuration{w});
    es.config_energy[static_cast<int>(w)] = tuple_energy(spec, t);
    groups[std::move(t)].push_back(w);
  }

  struct Group {
    double energy;
    std::vector<std::uint32_t> words;
  };
  std::vector<Group> sorted;
  sorted.reserve(groups.size());
  for (auto& [t, words] : groups)
    sorted.push_back(Group{tuple_energy(spec, t), std::move(words)});
  std::sort(sorted.begin(), sorted.end(),
            [](const Group& a, const Group& b) { return a.energy < b.energy; });

  double scale = spec.coupling_j;
  for (const Group& g : sorted) scale = std::max(scale, std::abs(g.energy));

  // Merge exactly equal energies into one level; refuse to decide about
  // near-misses. Different tuples can only share an energy when the field
  // values conspire (e.g. a vanishing or repeated field), which is legal but
  // non-generic, hence the warning.
  bool merged_any = false;
  for (Group& g : sorted) {
    if (!es.levels.empty() && g.energy == es.levels.back().energy) {
      auto& cfgs = es.levels.back().configs;
      cfgs.insert(cfgs.end(), g.words.begin(), g.words.end());
      merged_any = true;
      continue;
    }
    if (!es.levels.empty()) {
      const double gap = g.energy - es.levels.back().energy;
      if (gap < rel_tol * scale) {
        std::ostringstream msg;
        msg << "levels at " << es.levels.back().energy << " and " << g.energy
            << " are neither exactly degenerate nor separated beyond "
            << rel_tol * scale;
        throw DegeneracyAmbiguity(msg.str());
      }
    }
    Level lvl;
    lvl.energy = g.energy;
    lvl.configs = std::move(g.words);
    es.levels.push_back(std::move(lvl));
  }
  if (merged_any)
    es.warnings.push_back(
        "distinct configuration classes share an energy exactly "
        "(non-generic parameters)");
  for (Level& lvl : es.levels) std::sort(lvl.configs.begin(), lvl.configs.end());

  // Adapted basis: per level, walk configurations in ascending order and emit
  // the mirror-flip parity combinations of each unvisited orbit.
  es.adapted = Matrix::Zero(dim, dim);
  es.state_energy.resize(dim);
  es.state_level.assign(static_cast<std::size_t>(dim), 0);
  es.state_parity.assign(static_cast<std::size_t>(dim), 0);
  es.state_offset.assign(static_cast<std::size_t>(dim), 0);
  std::vector<OrbitRecord> orbits;
  std::vector<char> visited(static_cast<std::size_t>(dim), 0);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  int col = 0;
  for (std::size_t li = 0; li < es.levels.size(); ++li) {
    Level& lvl = es.levels[li];
    int offset = 0;
    auto push_state = [&](int parity) {
      es.state_energy[col] = lvl.energy;
      es.state_level[static_cast<std::size_t>(col)] = static_cast<int>(li);
      es.state_parity[static_cast<std::size_t>(col)] = parity;
      es.state_offset[static_cast<std::size_t>(col)] = offset++;
      lvl.states.push_back(col);
      ++col;
    };
    for (std::uint32_t w : lvl.configs) {
      if (visited[w]) continue;
      visited[w] = 1;
      const std::uint32_t pw = apply_pi(spec, Configuration{w}).bits;
      if (pw == w) {
        es.adapted(static_cast<int>(w), col) = 1.0;
        orbits.push_back(OrbitRecord{w, w, col, -1});
        push_state(+1);
      } else {
        visited[pw] = 1;
        OrbitRecord rec{w, pw, col, col + 1};
        es.adapted(static_cast<int>(w), col) = inv_sqrt2;
        es.adapted(static_cast<int>(pw), col) = inv_sqrt2;
        push_state(+1);
        es.adapted(static_cast<int>(w), col) = inv_sqrt2;
        es.adapted(static_cast<int>(pw), col) = -inv_sqrt2;
        push_state(-1);
        orbits.push_back(rec);
      }
    }
  }

  // Named states. Words follow the conventions spelled out at NamedStates.
  const std::uint32_t mask = (1u << sites) - 1u;
  const std::uint32_t up_w = mask;
  const std::uint32_t down_w = 0u;
  const std::uint32_t a_w = (1u << spec.n_half) - 1u;
  const std::uint32_t b_w = a_w << spec.n_half;
  const std::uint32_t c_w = (1u << (spec.n_half - 1)) - 1u;
  const std::uint32_t d_w = ~c_w & mask;
  const std::uint32_t e_w = 1u;
  const std::uint32_t f_w = ~e_w & mask;
  es.named.up = Configuration{up_w};
  es.named.down = Configuration{down_w};
  es.named.cat_plus = locate_named(orbits, down_w, +1);
  es.named.cat_minus = locate_named(orbits, up_w, -1);
  es.named.a = locate_named(orbits, a_w, +1);
  es.named.b = locate_named(orbits, b_w, +1);
  es.named.c_plus = locate_named(orbits, c_w, +1);
  es.named.c_minus = locate_named(orbits, c_w, -1);
  es.named.d_plus = locate_named(orbits, d_w, +1);
  es.named.d_minus = locate_named(orbits, d_w, -1);
  es.named.e_plus = locate_named(orbits, e_w, +1);
  es.named.e_minus = locate_named(orbits, e_w, -1);
  es.named.f_plus = locate_named(orbits, f_w, +1);
  es.named.f_minus = locate_named(orbits, f_w, -1);

  return es;
}

std::vector<std::pair<Configuration, double>> one_interface_states(
    const ChainSpec& spec) {
  spec.validate();
  const int sites = spec.sites();
  const std::uint32_t mask = (1u << sites) - 1u;
  std::vector<std::pair<Configuration, double>> out;
  out.reserve(2 * static_cast<std::size_t>(sites - 1));
  for (int m = 1; m < sites; ++m) {
    const std::uint32_t lead_up = (1u << m) - 1u;
    out.emplace_back(Configuration{lead_up},
                     energy_of(spec, Configuration{lead_up}));
    out.emplace_back(Configuration{~lead_up & mask},
                     energy_of(spec, Configuration{~lead_up & mask}));
  }
  return out;
}

CVector named_vector(const EigenStructure& es, const NamedHandle& handle) {
  if (!handle.valid()) throw InvalidParameter("named state does not exist");
  return handle.sign * es.adapted.col(handle.state).cast<Complex>();
}

CMatrix sigma_config(const ChainSpec& spec, int site, Axis axis) {
  if (site < 1 || site > spec.sites())
    throw InvalidParameter("site outside 1..2*n_half");
  const int dim = spec.dim();
  const std::uint32_t bit = 1u << (site - 1);
  CMatrix m = CMatrix::Zero(dim, dim);
  for (std::uint32_t w = 0; w < static_cast<std::uint32_t>(dim); ++w) {
    const double eta = Configuration{w}.spin(site);
    switch (axis) {
      case Axis::X:
        m(static_cast<int>(w ^ bit), static_cast<int>(w)) = 1.0;
        break;
      case Axis::Y:
        // sigma^y = i sigma^x sigma^z flips the spin with amplitude i*eta.
        m(static_cast<int>(w ^ bit), static_cast<int>(w)) = kI * eta;
        break;
      case Axis::Z:
        m(static_cast<int>(w), static_cast<int>(w)) = eta;
        break;
    }
  }
  return m;
}

Matrix sx_total_config(const ChainSpec& spec) {
  const int dim = spec.dim();
  Matrix m = Matrix::Zero(dim, dim);
  for (std::uint32_t w = 0; w < static_cast<std::uint32_t>(dim); ++w)
    for (int site = 1; site <= spec.sites(); ++site)
      m(static_cast<int>(w ^ (1u << (site - 1))), static_cast<int>(w)) += 1.0;
  return m;
}

CMatrix to_adapted(const EigenStructure& es, const CMatrix& config_op) {
  const CMatrix q = es.adapted.cast<Complex>();
  return q.adjoint() * config_op * q;
}

Matrix to_adapted(const EigenStructure& es, const Matrix& config_op) {
  return es.adapted.transpose() * config_op * es.adapted;
}

CMatrix sigma_adapted(const EigenStructure& es, int site, Axis axis) {
  return to_adapted(es, sigma_config(es.spec, site, axis));
}

Matrix sx_total_adapted(const EigenStructure& es) {
  return to_adapted(es, sx_total_config(es.spec));
}

CMatrix drive_operator_adapted(const EigenStructure& es,
                               const CouplingSpec& coupling) {
  if (coupling.drive_weights.empty())
    return sigma_adapted(es, es.spec.n_half, Axis::X);
  CMatrix v = CMatrix::Zero(es.dim, es.dim);
  for (const DriveTerm& t : coupling.drive_weights) {
    if (t.site > es.spec.sites())
      throw InvalidParameter("drive site outside 1..2*n_half");
    v += t.weight * sigma_adapted(es, t.site, t.axis);
  }
  return v;
}

bool drive_orientation_valid(const CouplingSpec& coupling,
                             const ChainSpec& chain) {
  std::vector<DriveTerm> terms = coupling.drive_weights;
  if (terms.empty()) terms.push_back(DriveTerm{chain.n_half, Axis::X, 1.0});
  Complex lam_nx = 0.0, lam_ny = 0.0, lam_mx = 0.0, lam_my = 0.0;
  for (const DriveTerm& t : terms) {
    if (t.site == chain.n_half) {
      if (t.axis == Axis::X) lam_nx += t.weight;
      if (t.axis == Axis::Y) lam_ny += t.weight;
    } else if (t.site == chain.n_half + 1) {
      if (t.axis == Axis::X) lam_mx += t.weight;
      if (t.axis == Axis::Y) lam_my += t.weight;
    }
  }
  const Complex expr = lam_nx - kI * lam_ny - lam_mx - kI * lam_my;
  return std::abs(expr) > 1e-12;
}

}  // namespace catchain
