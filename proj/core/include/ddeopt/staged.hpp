#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ddeopt/continuation.hpp"
#include "ddeopt/lagrangian.hpp"

namespace ddeopt {

struct StageSpec {
  std::string name;
  bool full = false;  // primal rows only, or primal + adjoint rows
  // pinned unknowns; nullopt keeps the value inherited from the previous stage. In a primal
  // stage every multiplier is pinned implicitly.
  std::map<std::string, std::optional<double>> fix;
  std::string terminal_event = "BP";  // BP | UZ | FP
  std::string terminal_monitor;       // UZ / FP
  double terminal_value = 0.0;
  std::string action = "stop";  // branch-switch | restart | stop
  int max_steps = 100;
  double h0 = 0.05;
  double h_max = 0.5;
  // auto: toward the UZ target, otherwise uphill in the objective; also uphill, downhill, +name, -name
  std::string direction = "auto";
};

struct StageScript {
  std::vector<StageSpec> stages;
  SolverKind solver = SolverKind::Auto;
};

// Restriction of a LagrangianProblem to its free unknowns.
class SubsetSystem {
 public:
  SubsetSystem(const LagrangianProblem& problem, VectorXd base, bool full, const std::vector<std::string>& pinned);

  const LagrangianProblem& problem() const { return *problem_; }
  const std::vector<Index>& free() const { return free_; }
  Index free_count() const { return static_cast<Index>(free_.size()); }
  Index equation_count() const;
  VectorXd restrict(const VectorXd& u) const;
  VectorXd expand(const VectorXd& v) const;
  bool full() const { return full_; }
  VectorXd residual(const VectorXd& v) const;
  SparseMatrix jacobian(const VectorXd& v) const;
  // adjoint rows by multiplier columns at the full unknown vector u
  SparseMatrix adjoint_block(const VectorXd& u) const;
  ContinuationSystem system(SolverKind solver = SolverKind::Auto, bool adjoint_bp_test = false) const;

 private:
  const LagrangianProblem* problem_;
  VectorXd base_;
  bool full_;
  std::vector<Index> free_;
  std::vector<Index> column_map_;  // full column -> free column or -1
};

struct StationaryCertificate {
  bool certified = false;
  double primal_residual = 0.0;
  double adjoint_residual = 0.0;
  std::map<std::string, double> trivial;     // μ-variations (must vanish)
  std::map<std::string, double> multipliers;  // named multipliers
  std::map<std::string, double> special;      // multipliers expected to vanish (λ_ph, λ₃, ...)
  std::map<std::string, double> parameters;
  std::vector<std::string> reasons;           // why not certified
  std::vector<std::string> history;           // "stage: TYPE name at chart k"
};

StationaryCertificate certify(const LagrangianProblem& problem, const VectorXd& u, double tol = 1e-6);

struct StageRun {
  StageSpec spec;
  std::shared_ptr<SubsetSystem> subset;
  ContinuationSystem system;
  ContinuationRun run;
  VectorXd terminal;  // full unknown vector at the terminal event
};

struct StagedResult {
  std::vector<StageRun> stages;
  VectorXd solution;
  StationaryCertificate certificate;
};

// Runs the script from a primal initial guess (multipliers are zeroed). Throws StageFault.
StagedResult run_stages(const StageScript& script, const LagrangianProblem& problem, const VectorXd& initial_guess);

struct SpecialMultiplierReport {
  std::map<std::string, double> values;
  double max_abs = 0.0;
  bool exceeded = false;  // any |value| > threshold
};

SpecialMultiplierReport monitor_special_multipliers(const LagrangianProblem& problem, const VectorXd& u,
                                                    double threshold = 1e-4);

struct GradientEntry {
  std::string parameter;
  double adjoint = 0.0;
  double finite_difference = 0.0;
  double relative_error = 0.0;
};

// Sensitivities of the objective with respect to the pinned parameters at a primal solution u:
// adjoint prediction (multipliers solved with the objective's trivial equation imposed) versus
// central differences of re-solved primal problems.
std::vector<GradientEntry> adjoint_gradient_check(const LagrangianProblem& problem, const VectorXd& u,
                                                  const std::vector<std::string>& pinned, double h = 1e-5,
                                                  SolverKind solver = SolverKind::Auto);

// Null vector of a nearly singular square matrix by inverse iteration.
VectorXd null_vector(const SparseMatrix& A, SolverKind solver = SolverKind::Auto, double* residual = nullptr);

}  // namespace ddeopt
