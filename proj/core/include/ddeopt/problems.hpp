#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ddeopt/builtin_fields.hpp"
#include "ddeopt/periodic_bvp.hpp"
#include "ddeopt/staged.hpp"
#include "ddeopt/torus_bvp.hpp"

namespace ddeopt {

struct ProblemOptions {
  std::map<std::string, double> parameters;  // overrides of the defaults below
  int N = 10;
  int degree = 4;
  int harmonics = 5;
  bool refine = true;  // Newton-correct the primal seed
};

// A ready-to-run optimization problem: discretized Lagrangian, primal seed, default stages.
struct ProblemSetup {
  std::string name;
  std::map<std::string, double> parameters;  // effective values
  std::shared_ptr<PeriodicBvp> periodic;
  std::shared_ptr<TorusBvp> torus;
  VectorXd seed;
  StageScript stages;

  const LagrangianProblem& problem() const;
  bool is_torus() const { return torus != nullptr; }
};

std::vector<std::string> builtin_problems();
// defaults of the named problem (coefficients, delays, seed controls)
std::map<std::string, double> default_parameters(const std::string& name);

// linear_scalar: maximize the response amplitude of z' = -z - z(t-1) + cos(2πt/T + φ) over T.
// duffing_pd:    stationary amplitude of the delayed Duffing oscillator over T and α.
// hopf_torus:    stationary rotation frequency ω on the ϱ-torus over T.
ProblemSetup make_problem(const std::string& name, const ProblemOptions& opt = {});

// Square primal solve with the named unknowns pinned (multipliers stay untouched).
VectorXd refine_primal(const LagrangianProblem& problem, const VectorXd& u, const std::vector<std::string>& pinned,
                       double tol = 1e-10);

// Rotating-frame torus seed: solves the co-rotating periodic orbit at fixed T and lifts it to
// V(φ,τ) = Rot(φ + 2πϱτ) R(τ). Returns the state with mu_omega = ω.
TorusState hopf_torus_seed(double rho, double T, double omega0, int H, int N, int degree);

}  // namespace ddeopt
