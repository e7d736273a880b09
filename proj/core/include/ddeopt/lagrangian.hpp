#pragma once

#include <Eigen/Sparse>
#include <string>
#include <utility>
#include <vector>

#include "ddeopt/field.hpp"

namespace ddeopt {

using Eigen::Index;
using SparseMatrix = Eigen::SparseMatrix<double>;

class TripletList {
 public:
  void add(Index r, Index c, double v) {
    if (v != 0.0) t_.emplace_back(r, c, v);
  }
  std::vector<Eigen::Triplet<double>>& data() { return t_; }
  const std::vector<Eigen::Triplet<double>>& data() const { return t_; }

 private:
  std::vector<Eigen::Triplet<double>> t_;
};

// Flat unknown vector: [primal block | multiplier block]; selected scalars carry names.
struct UnknownLayout {
  Index primal_size = 0;
  Index multiplier_size = 0;
  std::vector<std::string> names;
  std::vector<Index> indices;

  Index total() const { return primal_size + multiplier_size; }
  bool has(const std::string& name) const;
  Index index(const std::string& name) const;
  void add(const std::string& name, Index idx);
};

struct JacobianRequest {
  bool primal_rows = true;
  bool adjoint_rows = true;
  bool primal_cols = true;
  bool multiplier_cols = true;
};

// A discretized total Lagrangian: primal constraints plus the adjoint system obtained from
// vanishing variations. Adjoint rows are linear and homogeneous in the multipliers.
class LagrangianProblem {
 public:
  virtual ~LagrangianProblem() = default;

  virtual const UnknownLayout& layout() const = 0;
  virtual Index primal_equations() const = 0;
  virtual Index adjoint_equations() const = 0;

  virtual VectorXd primal_residual(const VectorXd& u) const;
  virtual VectorXd adjoint_residual(const VectorXd& u) const;
  // rows: requested primal rows then adjoint rows; columns: all unknowns (unrequested column
  // classes are left structurally empty)
  virtual SparseMatrix jacobian(const VectorXd& u, const JacobianRequest& req = {}) const;

  // variations with respect to continuation parameters μ (objective contributes 1); these are
  // trivially solvable and stay out of the continued system
  virtual std::vector<std::pair<std::string, double>> trivial_residuals(const VectorXd& u) const = 0;

  virtual std::vector<std::string> parameters() const = 0;
  virtual std::vector<std::string> multipliers() const = 0;
  virtual std::vector<std::string> special_multipliers() const = 0;
  virtual std::string objective() const = 0;
  virtual void check_regime(const VectorXd& u) const = 0;
  // adjoint row (offset inside adjoint_residual) holding the variation with respect to an
  // active scalar; -1 when the name has none (continuation parameters use trivial_residuals)
  virtual Index variation_row(const std::string& name) const = 0;

 protected:
  virtual void assemble(const VectorXd& u, bool primal, bool adjoint, VectorXd& r, TripletList* J, bool primal_cols,
                        bool multiplier_cols) const = 0;
  // primal unknowns whose Jacobian columns come from differencing the whole residual
  virtual std::vector<Index> fd_columns() const = 0;
};

}  // namespace ddeopt
