#pragma once

#include <map>
#include <string>
#include <vector>

#include "ddeopt/field.hpp"
#include "ddeopt/lagrangian.hpp"
#include "ddeopt/mesh.hpp"
#include "ddeopt/periodic_bvp.hpp"

namespace ddeopt {

// Family V(φ_i, τ) of trajectory segments on a torus, sampled at M = 2H+1 angles.
struct TorusState {
  int H = 5;
  double rho = 0.0;
  std::vector<SegmentedFunction> segments;  // M entries, shared mesh
  double T = 1.0;
  double alpha = 1.0;
  VectorXd p;
  std::map<std::string, double> mu;
  MatrixXd Vstar;  // M × n reference for the phase condition

  int M() const { return 2 * H + 1; }
};

struct TorusAdjointState {
  std::vector<SegmentedFunction> lambda_f;
  MatrixXd lambda_rot;  // M × n
  double lambda_ph = 0.0;
  std::map<std::string, double> multipliers;  // extra constraints (η_ω, ...)
};

// [W_a^j V](φ_i, τ) = V(φ_i - 2πjϱ, τ - a + j), one row per angle
MatrixXd wrap_eval(const TorusState& state, double a, int j, double tau, Side side = Side::Right);

// Primal rows:  [collocation+continuity per angle | (S(2πϱ)V(0))_i - V_i(1) | phase | extras]
// Adjoint rows: [adjoint collocation+continuity | V(·,0) variations | V(·,1) variations | integrals]
// Unknowns:     [V | active scalars | μ's] [λ_f | λ_rot | λ_ph | extra multipliers]
// Angle averages carry weight 1/M; per-angle adjoint rows are scaled by M. With H = 0 the rows
// coincide with PeriodicBvp (plus an inert phase row).
class TorusBvp : public LagrangianProblem {
 public:
  TorusBvp(DdeVectorField field, ProblemParams constants, double rho, int H = 5, int N = 10, int degree = 4);

  void activate(const std::string& scalar);
  void add_parameter(const std::string& mu);
  // only scalar targets are supported on tori
  void register_constraint(PointConstraint c);
  void set_objective(const std::string& mu);
  void set_reference(const MatrixXd& Vstar);

  const DdeVectorField& field() const { return field_; }
  const ProblemParams& constants() const { return constants_; }
  double rho() const { return rho_; }
  int H() const { return H_; }
  int M() const { return M_; }
  int N() const { return N_; }
  int degree() const { return d_; }
  const MatrixXd& reference() const { return Vstar_; }
  Mesh mesh_for(double alpha, double T) const;
  ProblemParams params_at(const VectorXd& u) const;
  double scalar_value(const VectorXd& u, const std::string& name) const;

  VectorXd pack(const TorusState& state, const TorusAdjointState* adjoint = nullptr) const;
  TorusState state(const VectorXd& u) const;
  TorusAdjointState adjoint_state(const VectorXd& u) const;

  VectorXd assemble_torus_primal(const TorusState& state) const;
  VectorXd assemble_torus_adjoint(const TorusState& state, const TorusAdjointState& adjoint) const;

  const UnknownLayout& layout() const override { return layout_; }
  Index primal_equations() const override { return nv_ + 1 + static_cast<Index>(constraints_.size()); }
  Index adjoint_equations() const override { return nv_ + M_ * field_.n + static_cast<Index>(scalar_rows_.size()); }
  std::vector<std::pair<std::string, double>> trivial_residuals(const VectorXd& u) const override;
  std::vector<std::string> parameters() const override;
  std::vector<std::string> multipliers() const override;
  std::vector<std::string> special_multipliers() const override { return {"lambda_ph"}; }
  std::string objective() const override { return objective_; }
  void check_regime(const VectorXd& u) const override;
  Index variation_row(const std::string& name) const override;

  Index coefficients_per_angle() const { return nv_ / M_; }
  Index adjoint_boundary_row() const { return nv_ - M_ * field_.n; }
  Index adjoint_integral_row() const { return nv_ + M_ * field_.n; }
  Index rotation_row() const { return nv_ - M_ * field_.n; }

 protected:
  void assemble(const VectorXd& u, bool primal, bool adjoint, VectorXd& r, TripletList* J, bool primal_cols,
                bool multiplier_cols) const override;
  std::vector<Index> fd_columns() const override;

 private:
  struct ScalarSlot {
    std::string name;
    int kind;
    int p;
    bool active;
  };
  void rebuild();

  DdeVectorField field_;
  ProblemParams constants_;
  double rho_;
  int H_, M_, N_, d_;
  Index nv_ = 0;  // coefficients of V over all angles
  std::vector<ScalarSlot> scalars_;
  std::vector<std::string> mus_;
  std::vector<PointConstraint> constraints_;
  std::string objective_;
  std::vector<int> scalar_rows_;
  UnknownLayout layout_;
  MatrixXd Vstar_, Vstar_phi_;
  MatrixXd S_fwd_, S_back_;  // S(2πϱ), S(-2πϱ)
};

// Hopf unfolding with forced feedback gain on a ϱ-torus: α = 1, p = ω, objective μ_ω = ω.
TorusBvp hopf_problem(double rho, int H = 5, int N = 10, int degree = 4);

}  // namespace ddeopt
