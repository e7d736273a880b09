#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <memory>
#include <string>

namespace ddeopt {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class SolverKind { Auto, Dense, Sparse };

SolverKind parse_solver_kind(const std::string& s);

// LU factorization of a square matrix with determinant sign and log-magnitude.
// Auto picks dense partial pivoting up to kDenseLimit unknowns, sparse LU beyond.
class LinearSolver {
 public:
  static constexpr Index kDenseLimit = 2000;

  explicit LinearSolver(SolverKind kind = SolverKind::Auto);
  ~LinearSolver();
  LinearSolver(LinearSolver&&) noexcept;
  LinearSolver& operator=(LinearSolver&&) noexcept;

  // throws SolverFault when the matrix is numerically singular
  void factor(const Eigen::SparseMatrix<double>& A);
  VectorXd solve(const VectorXd& b) const;
  int sign_det() const { return sign_; }
  double log_abs_det() const { return logabs_; }
  bool singular() const { return singular_; }
  Index size() const { return n_; }

 private:
  struct Impl;
  SolverKind kind_;
  std::unique_ptr<Impl> impl_;
  Index n_ = 0;
  int sign_ = 0;
  double logabs_ = 0.0;
  bool singular_ = false;
};

}  // namespace ddeopt
