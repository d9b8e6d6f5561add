// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#ifdef QUADCURL_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include "quadcurl/assembly.hpp"

namespace quadcurl {

/// Raised when a linear solve fails; carries the achieved relative residual.
class SolveError : public std::runtime_error {
 public:
  SolveError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

inline constexpr double kDefaultRelTol = 1e-10;

struct LinearSolveResult {
  Eigen::VectorXd x;
  double relative_residual = 0.0;
};

/// Direct sparse LU solve with a few steps of iterative refinement.
/// Guarantees |A x - b| <= rel_tol |b| or throws SolveError.
inline LinearSolveResult solve_linear_checked(const SparseMatrix& a, const Eigen::VectorXd& b,
                                              double rel_tol = kDefaultRelTol) {
  if (a.rows() != a.cols()) throw std::invalid_argument("solve_linear: matrix is not square");
  if (b.size() != a.rows()) throw std::invalid_argument("solve_linear: right-hand side has the wrong size");
  const double nb = b.norm();
  if (nb == 0.0) return {Eigen::VectorXd::Zero(b.size()), 0.0};

#ifdef QUADCURL_HAVE_UMFPACK
  // 64-bit indices: the 32-bit variant cannot address the factors of the n = 8 saddle systems.
  using Factored = Eigen::SparseMatrix<double, Eigen::ColMajor, SuiteSparse_long>;
  const Factored ac = a;
  Eigen::UmfPackLU<Factored> lu;
  lu.umfpackControl()(UMFPACK_ORDERING) = UMFPACK_ORDERING_METIS;
#else
  const Eigen::SparseMatrix<double, Eigen::ColMajor> ac = a;
  Eigen::SparseLU<Eigen::SparseMatrix<double, Eigen::ColMajor>, Eigen::COLAMDOrdering<int>> lu;
#endif
  lu.compute(ac);
  if (lu.info() != Eigen::Success) throw SolveError("solve_linear: factorization failed (singular matrix?)", 1.0);

  Eigen::VectorXd x = lu.solve(b);
  if (lu.info() != Eigen::Success || !x.allFinite()) throw SolveError("solve_linear: back-substitution failed", 1.0);
  double res = (b - a * x).norm() / nb;
  for (int it = 0; it < 3 && res > 0.1 * rel_tol; ++it) {
    const Eigen::VectorXd r = b - a * x;
    const Eigen::VectorXd dx = lu.solve(r);
    if (!dx.allFinite()) break;
    const Eigen::VectorXd trial = x + dx;
    const double tres = (b - a * trial).norm() / nb;
    if (!(tres < res)) break;
    x = trial;
    res = tres;
  }
  if (!(res <= rel_tol)) {
    std::ostringstream msg;
    msg << "solve_linear: relative residual " << res << " exceeds tolerance " << rel_tol;
    throw SolveError(msg.str(), res);
  }
  return {std::move(x), res};
}

inline Eigen::VectorXd solve_linear(const SparseMatrix& a, const Eigen::VectorXd& b,
                                    double rel_tol = kDefaultRelTol) {
  return solve_linear_checked(a, b, rel_tol).x;
}

}  // namespace quadcurl
