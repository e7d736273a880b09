#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ddeopt/field.hpp"
#include "ddeopt/lagrangian.hpp"
#include "ddeopt/mesh.hpp"

namespace ddeopt {

// Interior point β at which extra conditions may sample x.
struct InteriorPoint {
  enum class Rule { None, Fixed, OneMinusDelay };
  Rule rule = Rule::None;
  double value = 0.0;

  static InteriorPoint none() { return {}; }
  static InteriorPoint fixed(double b) { return {Rule::Fixed, b}; }
  static InteriorPoint one_minus_delay() { return {Rule::OneMinusDelay, 0.0}; }

  bool present() const { return rule != Rule::None; }
  double at(double alpha, double T) const;
  double d_dalpha(double alpha, double T) const;
  double d_dT(double alpha, double T) const;
};

// Split points of [0,1] for a single delay: (0, α/T, β-α/T, β, 1-α/T, 1) or (0, α/T, 1-α/T, 1),
// near-duplicates merged. Throws RegimeFault outside 2α/T < β <= 1-α/T (resp. T > 2α).
std::vector<double> breakpoint_layout(double alpha, double T, std::optional<double> beta = std::nullopt);

struct VariationTarget {
  enum class Kind { StateAtZero, StateAtBeta, Scalar };
  Kind kind = Kind::Scalar;
  std::string name;

  static VariationTarget x0() { return {Kind::StateAtZero, "x(0)"}; }
  static VariationTarget xbeta() { return {Kind::StateAtBeta, "x(beta)"}; }
  static VariationTarget scalar(std::string s) { return {Kind::Scalar, std::move(s)}; }
};

// Scalar condition g(args) = 0 whose arguments are the concatenated values of its targets
// (n entries for a state target, 1 for a scalar). Its multiplier feeds the variation of each target.
struct PointConstraint {
  std::string name;
  std::string multiplier;
  std::vector<VariationTarget> targets;
  std::function<double(const VectorXd&)> value;
  std::function<VectorXd(const VectorXd&)> gradient;  // optional
  bool vanishing_multiplier = false;                  // e.g. phase conditions
};

struct PeriodicOrbitState {
  SegmentedFunction x;
  double T = 1.0;
  double alpha = 1.0;
  VectorXd p;
  std::map<std::string, double> mu;
};

struct PeriodicAdjointState {
  SegmentedFunction lambda_f;
  VectorXd lambda_bc;
  std::map<std::string, double> multipliers;  // one per registered constraint (λ_ph, η_A, ...)
};

// Periodic orbits z(t) = x(t/T) of a DDE with one delay, x on [0,1] collocated segment-wise.
//
// Primal rows:  [collocation+continuity | x(0)-x(1) | extras]
// Adjoint rows: [adjoint collocation+continuity | x(0), x(1) variations | integral conditions]
// Unknowns:     [x | active scalars (T, alpha, p...) | μ's] [λ_f | λ_bc | constraint multipliers]
class PeriodicBvp : public LagrangianProblem {
 public:
  PeriodicBvp(DdeVectorField field, ProblemParams constants, int N = 10, int degree = 4,
              InteriorPoint beta = InteriorPoint::none());

  // "T", "alpha" or a field parameter name; inactive scalars keep their constant value
  void activate(const std::string& scalar);
  void add_parameter(const std::string& mu);
  void register_constraint(PointConstraint c);
  void set_objective(const std::string& mu);

  const DdeVectorField& field() const { return field_; }
  const ProblemParams& constants() const { return constants_; }
  const InteriorPoint& beta() const { return beta_; }
  int N() const { return N_; }
  int degree() const { return d_; }
  Mesh mesh_for(double alpha, double T) const;
  const std::vector<PointConstraint>& constraints() const { return constraints_; }

  double scalar_value(const VectorXd& u, const std::string& name) const;
  ProblemParams params_at(const VectorXd& u) const;
  Mesh mesh_at(const VectorXd& u) const;

  VectorXd pack(const PeriodicOrbitState& orbit, const PeriodicAdjointState* adjoint = nullptr) const;
  PeriodicOrbitState orbit(const VectorXd& u) const;
  PeriodicAdjointState adjoint_state(const VectorXd& u) const;

  VectorXd assemble_primal_residual(const PeriodicOrbitState& orbit) const;
  VectorXd assemble_adjoint_residual(const PeriodicOrbitState& orbit, const PeriodicAdjointState& adjoint) const;

  const UnknownLayout& layout() const override { return layout_; }
  Index primal_equations() const override { return nc_ + static_cast<Index>(constraints_.size()); }
  Index adjoint_equations() const override { return nc_ + field_.n + static_cast<Index>(scalar_rows_.size()); }
  std::vector<std::pair<std::string, double>> trivial_residuals(const VectorXd& u) const override;
  std::vector<std::string> parameters() const override;
  std::vector<std::string> multipliers() const override;
  std::vector<std::string> special_multipliers() const override;
  std::string objective() const override { return objective_; }
  void check_regime(const VectorXd& u) const override;
  Index variation_row(const std::string& name) const override;

  // offsets of the adjoint blocks inside adjoint_residual()
  Index adjoint_boundary_row() const { return nc_ - field_.n; }
  Index adjoint_integral_row() const { return nc_ + field_.n; }
  std::vector<std::string> active_scalars() const;

 protected:
  void assemble(const VectorXd& u, bool primal, bool adjoint, VectorXd& r, TripletList* J, bool primal_cols,
                bool multiplier_cols) const override;
  std::vector<Index> fd_columns() const override;

 private:
  struct ScalarSlot {
    std::string name;
    int kind;  // 0 T, 1 alpha, 2 parameter
    int p;
    bool active;
  };

  void rebuild();
  int beta_breakpoint(const Mesh& mesh, double beta) const;
  VectorXd constraint_args(const PointConstraint& c, const VectorXd& u, const Mesh& mesh, double beta) const;
  VectorXd constraint_gradient(const PointConstraint& c, const VectorXd& args) const;

  DdeVectorField field_;
  ProblemParams constants_;
  int N_, d_;
  InteriorPoint beta_;
  int segments_;
  Index nc_;  // coefficients of x
  std::vector<ScalarSlot> scalars_;
  std::vector<std::string> mus_;
  std::vector<PointConstraint> constraints_;
  std::string objective_;
  std::vector<int> scalar_rows_;  // indices into scalars_ of active ones
  UnknownLayout layout_;
};

}  // namespace ddeopt
