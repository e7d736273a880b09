#pragma once

// Collocation engine shared by the periodic-orbit and torus assemblies. A problem holds M copies
// of one piecewise-polynomial layout (M = 1 for periodic orbits, M angle samples for tori);
// arguments that wrap around τ = 0 or τ = 1 are mixed across copies by W_delay / W_adv.

#include <Eigen/Sparse>
#include <vector>

#include "ddeopt/field.hpp"
#include "ddeopt/lagrangian.hpp"
#include "ddeopt/mesh.hpp"

namespace ddeopt::detail {

using Eigen::Index;

struct Term {
  Index idx;  // unknown index of component 0 of a basepoint value
  double w;
};
using Stencil = std::vector<Term>;

using Triplets = TripletList;

struct CoefficientBlock {
  Index offset = 0;
  Index stride = 0;  // size of one copy
};

VectorXd apply(const Stencil& s, const VectorXd& u, int n);
void scatter(Triplets& J, Index row, const MatrixXd& block, const Stencil& s, int n);

enum class ScalarKind { T, Alpha, P };
struct ScalarRow {
  ScalarKind kind;
  int p = 0;
};

// central differences of a pointwise kernel with respect to one of its inputs
template <class K>
MatrixXd fd_input(const K& kernel, std::vector<VectorXd>& in, int which, Index nout) {
  MatrixXd B(nout, in[which].size());
  for (Index c = 0; c < in[which].size(); ++c) {
    const double x = in[which][c];
    const double h = 1e-7 * std::max(1.0, std::abs(x));
    in[which][c] = x + h;
    VectorXd op = kernel(in);
    in[which][c] = x - h;
    VectorXd om = kernel(in);
    in[which][c] = x;
    B.col(c) = (op - om) / (2 * h);
  }
  return B;
}

struct Engine {
  const DdeVectorField* field = nullptr;
  Mesh mesh;
  int n = 0;
  int M = 1;
  double a = 0.0;  // α/T
  ProblemParams params;
  MatrixXd W_delay;  // for V(φ - 2πϱ, ·) at wrapped delayed arguments
  MatrixXd W_adv;    // for V(φ + 2πϱ, ·) at wrapped advanced arguments
  CoefficientBlock x, lam;
  std::vector<ScalarRow> scalar_rows;

  Index coeffs_per_copy() const { return static_cast<Index>(mesh.intervals()) * (mesh.degree() + 1) * n; }
  Index rows_per_copy() const { return coeffs_per_copy() - n; }
  Index collocation_row(int copy, int k, int m) const {
    return copy * rows_per_copy() + (static_cast<Index>(k) * mesh.degree() + m) * n;
  }
  Index continuity_row(int copy, int k) const {
    return copy * rows_per_copy() + static_cast<Index>(mesh.intervals()) * mesh.degree() * n + static_cast<Index>(k) * n;
  }
  Index basepoint_index(const CoefficientBlock& b, int copy, int k, int j) const {
    return b.offset + copy * b.stride + (static_cast<Index>(k) * (mesh.degree() + 1) + j) * n;
  }
  bool delayed_wraps(int k) const { return mesh.interval_end(k) <= a + 1e-12; }
  bool advanced_wraps(int k) const { return mesh.interval_start(k) >= 1.0 - a - 1e-12; }

  // mix == nullptr selects a single copy; otherwise a weighted sum over all copies
  void stencil(const CoefficientBlock& b, int copy, const double* mix, double tau, Side side, bool derivative,
               Stencil& out) const;

  void primal(const VectorXd& u, Index row0, VectorXd& r, Triplets* J) const;
  void adjoint(const VectorXd& u, Index row0, VectorXd& r, Triplets* J, bool primal_cols, bool mult_cols) const;
  void integrals(const VectorXd& u, Index row0, VectorXd& r, Triplets* J, bool primal_cols, bool mult_cols) const;
};

}  // namespace ddeopt::detail
