#include "catchain/bath.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace catchain {

double noise_power(const BathSpec& bath, double nu) {
  const double eta = bath.model.eta;
  const double wc = bath.model.cutoff;
  const double t = bath.temperature;
  if (nu == 0.0) return 2.0 * kPi * eta * t;
  const double anu = std::abs(nu);
  const double base = 2.0 * kPi * eta * anu * std::exp(-anu / wc);
  if (t == 0.0) return nu > 0.0 ? base : 0.0;
  const double x = anu / t;
  // Both signs share one expm1 so detailed balance W(-nu) = e^{-nu/T} W(nu)
  // holds to rounding, not just to model accuracy.
  const double bose = 1.0 / std::expm1(x);
  return nu > 0.0 ? base * (bose + 1.0) : base * bose;
}

namespace {

// Gauss-Kronrod 7-15 rule, positive abscissae in descending order.
constexpr double kXgk[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0};
constexpr double kWgk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
constexpr double kWg[4] = {0.129484966168870, 0.279705391489277,
                           0.381830050505119, 0.417959183673469};

template <class F>
std::pair<double, double> gk15(const F& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double hw = 0.5 * (b - a);
  double resk = 0.0, resg = 0.0;
  for (int i = 0; i < 8; ++i) {
    if (i == 7) {
      const double v = f(mid);
      resk += kWgk[7] * v;
      resg += kWg[3] * v;
    } else {
      const double v = f(mid - hw * kXgk[i]) + f(mid + hw * kXgk[i]);
      resk += kWgk[i] * v;
      if (i % 2 == 1) resg += kWg[i / 2] * v;
    }
  }
  return {resk * hw, std::abs((resk - resg) * hw)};
}

// Globally adaptive bisection: always split the segment with the largest
// error estimate until the summed estimate meets the absolute tolerance.
template <class F>
double adaptive_quad(const F& f, double a, double b, double abs_tol) {
  struct Seg {
    double a, b, val, err;
  };
  auto [v0, e0] = gk15(f, a, b);
  std::vector<Seg> segs{{a, b, v0, e0}};
  for (int iter = 0; iter < 4000; ++iter) {
    double total_err = 0.0;
    std::size_t worst = 0;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      total_err += segs[i].err;
      if (segs[i].err > segs[worst].err) worst = i;
    }
    if (total_err <= abs_tol) {
      double total = 0.0;
      for (const Seg& s : segs) total += s.val;
      return total;
    }
    const Seg s = segs[worst];
    const double mid = 0.5 * (s.a + s.b);
    auto [vl, el] = gk15(f, s.a, mid);
    auto [vr, er] = gk15(f, mid, s.b);
    segs[worst] = Seg{s.a, mid, vl, el};
    segs.push_back(Seg{mid, s.b, vr, er});
  }
  throw NoConvergence("principal value quadrature did not reach tolerance");
}

}  // namespace

double pv_integral(const BathSpec& bath, double y, double abs_tol) {
  const double ay = std::abs(y);
  // Symmetric excision around the pole; the integrand extends continuously to
  // u = 0 and the open quadrature nodes never touch the endpoint.
  const auto f = [&](double u) {
    return (noise_power(bath, y - u) - noise_power(bath, y + u)) / u;
  };
  // W decays like exp(-nu/cutoff), so beyond the kink the tail past 60
  // cutoffs is far below any tolerance we accept.
  const double u_end = ay + 60.0 * bath.model.cutoff + 10.0 * bath.temperature;
  double total = 0.0;
  if (ay > 0.0) {
    // Split at u = |y| where W's kink at zero frequency crosses the window.
    total += adaptive_quad(f, 0.0, ay, 0.5 * abs_tol);
    total += adaptive_quad(f, ay, u_end, 0.5 * abs_tol);
  } else {
    total = adaptive_quad(f, 0.0, u_end, abs_tol);
  }
  return total;
}

GEvaluator::GEvaluator(BathSpec bath, double pv_abs_tol)
    : bath_(std::move(bath)), pv_tol_(pv_abs_tol) {
  bath_.validate();
}

Complex GEvaluator::g(double y) const {
  const auto key = static_cast<std::int64_t>(std::llround(y * 1e12));
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  const double re = 0.5 * noise_power(bath_, y);
  const double im =
      bath_.include_shifts ? pv_integral(bath_, y, pv_tol_) / (2.0 * kPi) : 0.0;
  const Complex val{re, im};
  cache_.emplace(key, val);
  return val;
}

ChannelSet make_chain_channels(const EigenStructure& es,
                               const CouplingSpec& coupling,
                               const BathSpec& bath,
                               const std::optional<BathSpec>& second_bath,
                               unsigned mask) {
  coupling.validate();
  bath.validate();
  if (second_bath) second_bath->validate();
  ChannelSet ch;
  ch.energies = es.state_energy;
  ch.evals.emplace_back(bath);
  if ((mask & kUniformChannel) && coupling.e_uniform > 0.0) {
    ch.ops.push_back(
        (coupling.e_uniform * sx_total_adapted(es)).cast<Complex>());
    ch.bath_of.push_back(0);
  }
  if ((mask & kLocalChannels) && coupling.eps_local > 0.0) {
    for (int n = 1; n <= es.spec.sites(); ++n)
      for (Axis axis : {Axis::X, Axis::Y, Axis::Z}) {
        ch.ops.push_back(coupling.eps_local * sigma_adapted(es, n, axis));
        ch.bath_of.push_back(0);
      }
  }
  if ((mask & kSecondBathChannels) && second_bath &&
      coupling.eps2_local > 0.0) {
    ch.evals.emplace_back(*second_bath);
    const int second_index = static_cast<int>(ch.evals.size()) - 1;
    for (int n = 1; n <= es.spec.sites(); ++n) {
      ch.ops.push_back(coupling.eps2_local * sigma_adapted(es, n, Axis::X));
      ch.bath_of.push_back(second_index);
    }
  }
  return ch;
}

Complex gamma_element(const ChannelSet& channels, int k, int l, int k2, int l2,
                      double omega_arg) {
  const Vector& e = channels.energies;
  const int dim = static_cast<int>(e.size());
  Complex sum = 0.0;
  for (std::size_t c = 0; c < channels.ops.size(); ++c) {
    const CMatrix& x = channels.ops[c];
    const GEvaluator& ev = channels.evals[static_cast<std::size_t>(
        channels.bath_of[c])];
    Complex term = x(l2, l) * x(k, k2) *
                   (ev.g(omega_arg + e(l2) - e(k)) +
                    ev.h(omega_arg + e(l) - e(k2)));
    if (l == l2) {
      Complex s = 0.0;
      for (int j = 0; j < dim; ++j)
        s += x(k, j) * x(j, k2) * ev.g(omega_arg + e(l) - e(j));
      term -= s;
    }
    if (k == k2) {
      Complex s = 0.0;
      for (int j = 0; j < dim; ++j)
        s += x(l2, j) * x(j, l) * ev.h(omega_arg + e(j) - e(k));
      term -= s;
    }
    sum += term;
  }
  return sum;
}

PairSupport resonant_pairs(const EigenStructure& es, int p, double omega,
                           double tol_scale) {
  const double tol = tol_scale * es.spec.coupling_j;
  PairSupport sup;
  sup.dim = es.dim;
  for (int k = 0; k < es.dim; ++k)
    for (int l = 0; l < es.dim; ++l) {
      const double w_kl = es.state_energy[k] - es.state_energy[l];
      if (std::abs(w_kl - p * omega) < tol) {
        sup.lookup.emplace(static_cast<std::int64_t>(k) * es.dim + l,
                           sup.pairs.size());
        sup.pairs.emplace_back(k, l);
      }
    }
  if (sup.pairs.empty()) {
    std::ostringstream msg;
    msg << "harmonic " << p << " at frequency " << omega
        << " carries no resonant level pairs";
    throw EmptyBlock(msg.str());
  }
  return sup;
}

RateTensor gamma_block_for(const ChannelSet& channels,
                           const EigenStructure& es, int p, double omega) {
  PairSupport sup = resonant_pairs(es, p, omega);
  const int s = sup.size();
  RateTensor rt{p, p * omega, std::move(sup), CMatrix::Zero(s, s)};
  for (int b = 0; b < s; ++b) {
    const auto [k2, l2] = rt.support.pairs[static_cast<std::size_t>(b)];
    for (int a = 0; a < s; ++a) {
      const auto [k, l] = rt.support.pairs[static_cast<std::size_t>(a)];
      rt.entries(a, b) = gamma_element(channels, k, l, k2, l2, rt.omega_arg);
    }
  }
  return rt;
}

RateTensor gamma_block(const EigenStructure& es, const CouplingSpec& coupling,
                       const BathSpec& bath,
                       const std::optional<BathSpec>& second_bath, int p,
                       double omega) {
  const ChannelSet ch =
      make_chain_channels(es, coupling, bath, second_bath, kAllChannels);
  return gamma_block_for(ch, es, p, omega);
}

Matrix upsilon_matrix(const RateTensor& rt0, const EigenStructure& es,
                      double temperature) {
  if (rt0.p_index != 0)
    throw InvalidParameter("upsilon_matrix needs the p = 0 block");
  const int dim = es.dim;
  const double e0 = es.ground_energy();
  Matrix u = Matrix::Zero(dim, dim);
  for (int k = 0; k < dim; ++k)
    for (int l = 0; l < dim; ++l) {
      const int a = rt0.support.index_of(k, k);
      const int b = rt0.support.index_of(l, l);
      if (a < 0 || b < 0) continue;
      double boltz;
      if (temperature > 0.0) {
        boltz = std::exp(-(es.state_energy[l] - e0) / temperature);
      } else {
        boltz = es.state_energy[l] == e0 ? 1.0 : 0.0;
      }
      u(k, l) = rt0.entries(a, b).real() * boltz;
    }
  return u;
}

CMatrix redfield_generator(const ChannelSet& channels) {
  const int dim = static_cast<int>(channels.energies.size());
  const int d2 = dim * dim;
  CMatrix m = CMatrix::Zero(d2, d2);
  for (int k2 = 0; k2 < dim; ++k2)
    for (int l2 = 0; l2 < dim; ++l2) {
      const int col = k2 * dim + l2;
      const double wa = channels.energies(k2) - channels.energies(l2);
      for (int k = 0; k < dim; ++k)
        for (int l = 0; l < dim; ++l)
          m(k * dim + l, col) = gamma_element(channels, k, l, k2, l2, wa);
    }
  for (int k = 0; k < dim; ++k)
    for (int l = 0; l < dim; ++l)
      m(k * dim + l, k * dim + l) -=
          kI * (channels.energies(k) - channels.energies(l));
  return m;
}

}  // namespace catchain
