#include "ddeopt/lagrangian.hpp"

#include <algorithm>
#include <cmath>

#include "ddeopt/errors.hpp"

namespace ddeopt {

bool UnknownLayout::has(const std::string& name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

Index UnknownLayout::index(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ContractViolation("unknown variable '" + name + "'");
  return indices[it - names.begin()];
}

void UnknownLayout::add(const std::string& name, Index idx) {
  if (has(name)) throw ContractViolation("duplicate variable name '" + name + "'");
  names.push_back(name);
  indices.push_back(idx);
}

VectorXd LagrangianProblem::primal_residual(const VectorXd& u) const {
  VectorXd r = VectorXd::Zero(primal_equations());
  assemble(u, true, false, r, nullptr, false, false);
  return r;
}

VectorXd LagrangianProblem::adjoint_residual(const VectorXd& u) const {
  VectorXd r = VectorXd::Zero(adjoint_equations());
  assemble(u, false, true, r, nullptr, false, false);
  return r;
}

SparseMatrix LagrangianProblem::jacobian(const VectorXd& u, const JacobianRequest& req) const {
  const Index P = req.primal_rows ? primal_equations() : 0;
  const Index A = req.adjoint_rows ? adjoint_equations() : 0;
  const Index np = layout().primal_size, nt = layout().total();
  VectorXd r = VectorXd::Zero(P + A);
  TripletList J;
  assemble(u, req.primal_rows, req.adjoint_rows, r, &J, req.primal_cols, req.multiplier_cols);

  std::vector<char> fd(nt, 0);
  if (req.primal_cols)
    for (Index c : fd_columns()) fd[c] = 1;
  auto& t = J.data();
  t.erase(std::remove_if(t.begin(), t.end(),
                         [&](const Eigen::Triplet<double>& e) {
                           const Index c = e.col();
                           return c < np ? (!req.primal_cols || fd[c]) : !req.multiplier_cols;
                         }),
          t.end());

  if (req.primal_cols) {
    VectorXd up = u;
    for (Index c : fd_columns()) {
      const double x = u[c], h = 1e-7 * std::max(1.0, std::abs(x));
      VectorXd rp = VectorXd::Zero(P + A), rm = VectorXd::Zero(P + A);
      up[c] = x + h;
      assemble(up, req.primal_rows, req.adjoint_rows, rp, nullptr, false, false);
      up[c] = x - h;
      assemble(up, req.primal_rows, req.adjoint_rows, rm, nullptr, false, false);
      up[c] = x;
      for (Index i = 0; i < P + A; ++i) J.add(i, c, (rp[i] - rm[i]) / (2 * h));
    }
  }
  SparseMatrix M(P + A, nt);
  M.setFromTriplets(t.begin(), t.end());
  return M;
}

}  // namespace ddeopt
