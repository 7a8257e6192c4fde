#include "cqed/numerics/linalg.hpp"

#include <stdexcept>

namespace cqed::numerics {

EighResult eigh(const Eigen::MatrixXcd& H) {
  if (H.rows() != H.cols()) throw std::invalid_argument("eigh: non-square input");
  const double norm = H.norm();
  if ((H - H.adjoint()).norm() > 1e-10 * std::max(norm, 1.0))
    throw std::invalid_argument("eigh: input not Hermitian within tolerance");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(H);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigh: eigensolver failed to converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

}  // namespace cqed::numerics
