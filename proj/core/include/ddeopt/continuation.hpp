#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ddeopt/lagrangian.hpp"
#include "ddeopt/linsolve.hpp"

namespace ddeopt {

struct DetIndicator {
  int sign = 0;
  double log_abs = 0.0;
};

// An underdetermined map F: R^dim -> R^(dim-1) whose zero set is a curve.
struct ContinuationSystem {
  Index dim = 0;
  std::function<VectorXd(const VectorXd&)> residual;
  std::function<SparseMatrix(const VectorXd&)> jacobian;
  // named coordinates recorded in the run log (e.g. T, mu_A, eta_A)
  std::vector<std::pair<std::string, Index>> coordinates;
  std::vector<std::string> monitor_names;
  std::function<VectorXd(const VectorXd&)> monitors;  // optional
  // throws (RegimeFault, DomainFault) when u leaves the admissible set; optional
  std::function<void(const VectorXd&)> admissible;
  // replaces the bordered-determinant branch-point indicator when set
  std::function<DetIndicator(const VectorXd&)> bp_test;

  Index coordinate(const std::string& name) const;
};

struct Chart {
  VectorXd u;
  VectorXd tangent;
  VectorXd monitors;
  int step = 0;
  double s = 0.0;  // arclength from the start chart
  std::vector<std::string> labels;
  DetIndicator bp;

  bool has_label(const std::string& l) const;
};

struct Event {
  std::string type;  // FP, BP, UZ, EP
  std::string name;  // coordinate or monitor that triggered it
  std::size_t chart = 0;
};

struct UserZero {
  std::string monitor;  // coordinate or monitor name
  double value = 0.0;
};

struct Bound {
  std::string name;
  double lo = -INFINITY;
  double hi = INFINITY;
};

struct ContinuationSettings {
  double tol = 1e-8;
  int max_iter = 15;
  double h0 = 0.1;
  double h_min = 1e-5;
  double h_max = 0.5;
  int max_steps = 100;
  double event_tol = 1e-8;
  std::vector<std::string> folds;  // coordinates whose tangent component is watched
  std::vector<UserZero> user_zeros;
  std::vector<Bound> bounds;
  bool detect_bp = false;
  // stop at the first located event of this type ("" = never); for UZ optionally matching a name
  std::string terminal_type;
  std::string terminal_name;
  SolverKind solver = SolverKind::Auto;
};

struct ContinuationRun {
  std::vector<Chart> charts;
  std::vector<Event> events;
  ContinuationSettings settings;
  std::string stop_reason;

  const Event* find(const std::string& type, const std::string& name = "") const;
};

struct NewtonResult {
  VectorXd u;
  int iterations = 0;
  double residual = 0.0;
};

// Square Newton solve with halving damping. Throws SolverFault on failure.
NewtonResult newton_correct(const std::function<VectorXd(const VectorXd&)>& F,
                            const std::function<SparseMatrix(const VectorXd&)>& J, const VectorXd& u0,
                            double tol = 1e-8, int max_iter = 15, SolverKind solver = SolverKind::Auto);

// Bordered square system [F(u); tᵀ(u - u0) - h] of an underdetermined map.
VectorXd bordered_residual(const ContinuationSystem& sys, const VectorXd& u, const VectorXd& u0, const VectorXd& t,
                           double h);
SparseMatrix bordered_matrix(const SparseMatrix& J, const VectorXd& t);

// Unit tangent from [J; t_refᵀ] t = e_last, oriented along t_ref.
VectorXd tangent_at(const ContinuationSystem& sys, const VectorXd& u, const VectorXd& t_ref,
                    SolverKind solver = SolverKind::Auto, DetIndicator* det = nullptr);

// Corrects u0 onto the curve in the hyperplane through u0 orthogonal to direction; computes
// tangent (oriented along direction) and monitors.
Chart initial_chart(const ContinuationSystem& sys, const VectorXd& u0, const VectorXd& direction,
                    const ContinuationSettings& settings = {});

// Pseudo-arclength continuation from an accepted chart along start.tangent.
ContinuationRun continue_branch(const ContinuationSystem& sys, const Chart& start, const ContinuationSettings& settings);

// Secondary direction at a branch point: null vector of the bordered Jacobian. Throws
// NotBranchPoint when the smallest singular value exceeds 1e-6·‖J‖.
Chart switch_branch(const ContinuationSystem& sys, const Chart& bp, SolverKind solver = SolverKind::Auto);

// Re-scans a finished run for events (used when monitors are added after the fact).
std::vector<Event> detect_events(const ContinuationSystem& sys, ContinuationRun& run);

// step, s, coordinates, monitors, label
void write_run_csv(const ContinuationSystem& sys, const ContinuationRun& run, const std::string& path);
std::string run_csv(const ContinuationSystem& sys, const ContinuationRun& run);

}  // namespace ddeopt
