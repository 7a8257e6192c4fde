#pragma once

// Hermitian eigenproblem wrapper with contract checks.

#include <Eigen/Dense>
#include <complex>

namespace cqed::numerics {

struct EighResult {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXcd eigenvectors; // columns, unitary
};

// Throws std::invalid_argument if H deviates from Hermitian by more than
// 1e-10 * ||H||.
EighResult eigh(const Eigen::MatrixXcd& H);

}  // namespace cqed::numerics
