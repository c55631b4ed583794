#include "catchain/types.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <sstream>

namespace catchain {

void ChainSpec::validate() const {
  if (n_half < 2) throw InvalidParameter("n_half < 2");
  if (n_half > 6) throw InvalidParameter("n_half > 6");
  if (!(coupling_j > 0.0)) throw InvalidParameter("J <= 0");
  if (static_cast<int>(fields_h.size()) != n_half)
    throw InvalidParameter("size(h) != n_half");
  double sum = 0.0;
  for (std::size_t n = 0; n < fields_h.size(); ++n) {
    if (!(fields_h[n] >= 0.0)) {
      std::ostringstream msg;
      msg << "h[" << n + 1 << "] < 0";
      throw InvalidParameter(msg.str());
    }
    sum += fields_h[n];
  }
  if (!(sum < coupling_j / 2.0)) throw InvalidParameter("sum(h) >= J/2");
}

void BathSpec::validate() const {
  if (!(temperature >= 0.0)) throw InvalidParameter("T < 0");
  if (!(model.eta > 0.0)) throw InvalidParameter("eta <= 0");
  if (!(model.cutoff > 0.0)) throw InvalidParameter("cutoff <= 0");
}

void CouplingSpec::validate() const {
  if (!(e_uniform >= 0.0)) throw InvalidParameter("e_uniform < 0");
  if (!(eps_local >= 0.0)) throw InvalidParameter("eps_local < 0");
  if (!(eps_drive >= 0.0)) throw InvalidParameter("eps_drive < 0");
  if (!(eps2_local >= 0.0)) throw InvalidParameter("eps2_local < 0");
  if (!drive_resonant() && !(drive_frequency > 0.0))
    throw InvalidParameter("drive_frequency <= 0");
  for (const DriveTerm& t : drive_weights)
    if (t.site < 1) throw InvalidParameter("drive site < 1");
}

double resolve_drive_frequency(const CouplingSpec& coupling,
                               const ChainSpec& chain) {
  if (!coupling.drive_resonant()) return coupling.drive_frequency;
  // Resonant means tuned to the splitting 2 h_N that the drive bridges when it
  // acts at the chain midpoint.
  return 2.0 * chain.fields_h.back();
}

DensityMatrix make_density_matrix(CMatrix entries, std::string basis,
                                  double trace_tol, double herm_tol,
                                  double eig_floor) {
  if (entries.rows() != entries.cols())
    throw InvalidParameter("rho not square");
  const double tr_err = std::abs(entries.trace() - Complex(1.0, 0.0));
  if (tr_err > trace_tol) {
    std::ostringstream msg;
    msg << "trace(rho) != 1 (off by " << tr_err << ")";
    throw InvalidParameter(msg.str());
  }
  const double herm_err =
      (entries - entries.adjoint()).cwiseAbs().maxCoeff();
  if (herm_err > herm_tol) {
    std::ostringstream msg;
    msg << "rho != rho^dagger (off by " << herm_err << ")";
    throw InvalidParameter(msg.str());
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(
      0.5 * (entries + entries.adjoint()), Eigen::EigenvaluesOnly);
  const double min_eig = eig.eigenvalues().minCoeff();
  if (min_eig < eig_floor) {
    std::ostringstream msg;
    msg << "rho has eigenvalue " << min_eig << " below " << eig_floor;
    throw InvalidParameter(msg.str());
  }
  return DensityMatrix{std::move(entries), std::move(basis)};
}

double max_abs_diff(const CMatrix& a, const CMatrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

double trace_distance(const CMatrix& a, const CMatrix& b) {
  Eigen::JacobiSVD<CMatrix> svd(a - b);
  return 0.5 * svd.singularValues().sum();
}

}  // namespace catchain
