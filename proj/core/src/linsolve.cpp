#include "ddeopt/linsolve.hpp"

#include <cmath>

#include "ddeopt/errors.hpp"

namespace ddeopt {

SolverKind parse_solver_kind(const std::string& s) {
  if (s == "auto") return SolverKind::Auto;
  if (s == "dense") return SolverKind::Dense;
  if (s == "sparse") return SolverKind::Sparse;
  throw ContractViolation("unknown linear solver '" + s + "' (auto|dense|sparse)");
}

struct LinearSolver::Impl {
  bool dense = true;
  Eigen::PartialPivLU<MatrixXd> lu;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> slu;
};

LinearSolver::LinearSolver(SolverKind kind) : kind_(kind) {}
LinearSolver::~LinearSolver() = default;
LinearSolver::LinearSolver(LinearSolver&&) noexcept = default;
LinearSolver& LinearSolver::operator=(LinearSolver&&) noexcept = default;

void LinearSolver::factor(const Eigen::SparseMatrix<double>& A) {
  if (A.rows() != A.cols()) throw ContractViolation("linear solve needs a square matrix");
  n_ = A.rows();
  if (!impl_) impl_ = std::make_unique<Impl>();
  impl_->dense = kind_ == SolverKind::Dense || (kind_ == SolverKind::Auto && n_ <= kDenseLimit);
  singular_ = false;
  if (impl_->dense) {
    impl_->lu.compute(MatrixXd(A));
    const auto& LU = impl_->lu.matrixLU();
    int s = impl_->lu.permutationP().determinant() > 0 ? 1 : -1;
    double la = 0.0;
    for (Index i = 0; i < n_; ++i) {
      const double d = LU(i, i);
      if (d == 0.0 || !std::isfinite(d)) {
        singular_ = true;
        s = 0;
        la = -INFINITY;
        break;
      }
      if (d < 0) s = -s;
      la += std::log(std::abs(d));
    }
    sign_ = s;
    logabs_ = la;
  } else {
    Eigen::SparseMatrix<double> C = A;
    C.makeCompressed();
    impl_->slu.compute(C);
    if (impl_->slu.info() != Eigen::Success) {
      singular_ = true;
      sign_ = 0;
      logabs_ = -INFINITY;
    } else {
      sign_ = static_cast<int>(impl_->slu.signDeterminant());
      logabs_ = impl_->slu.logAbsDeterminant();
    }
  }
  if (singular_) throw SolverFault("singular linear system", NAN);
}

VectorXd LinearSolver::solve(const VectorXd& b) const {
  if (!impl_ || b.size() != n_) throw ContractViolation("solve before factor or size mismatch");
  VectorXd x = impl_->dense ? VectorXd(impl_->lu.solve(b)) : VectorXd(impl_->slu.solve(b));
  if (!x.allFinite()) throw SolverFault("non-finite linear solve", NAN);
  return x;
}

}  // namespace ddeopt
