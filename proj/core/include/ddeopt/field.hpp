#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace ddeopt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct ProblemParams {
  double alpha = 1.0;
  double T = 1.0;
  VectorXd p;
};

struct FieldJacobians {
  VectorXd dt;  // ∂f/∂t
  VectorXd dT;  // explicit ∂f/∂T at fixed t (forcing written as cos(2πt/T))
  MatrixXd du;
  MatrixXd dv;
  MatrixXd dp;  // n × q
  bool finite_difference = false;
};

// Right-hand side f(t, u, v, p) of  z'(t) = f(t, z(t), z(t-alpha), p).
// Partials left empty fall back to central differences.
struct DdeVectorField {
  using Vec = std::function<VectorXd(double, const VectorXd&, const VectorXd&, const ProblemParams&)>;
  using Mat = std::function<MatrixXd(double, const VectorXd&, const VectorXd&, const ProblemParams&)>;

  std::string name;
  int n = 0;
  int q = 0;
  bool periodic_in_t = true;
  std::vector<std::string> param_names;

  Vec f;
  Vec df_dt;
  Vec df_dT;
  Mat df_du;
  Mat df_dv;
  Mat df_dp;

  int param_index(const std::string& pname) const;
};

VectorXd eval_field(const DdeVectorField& field, double t, const VectorXd& u, const VectorXd& v,
                    const ProblemParams& params);

FieldJacobians eval_jacobians(const DdeVectorField& field, double t, const VectorXd& u,
                              const VectorXd& v, const ProblemParams& params);

// Single partials without shape checks, for assembly loops. Same fallback rule as eval_jacobians.
MatrixXd partial_u(const DdeVectorField& field, double t, const VectorXd& u, const VectorXd& v, const ProblemParams& params);
MatrixXd partial_v(const DdeVectorField& field, double t, const VectorXd& u, const VectorXd& v, const ProblemParams& params);
MatrixXd partial_p(const DdeVectorField& field, double t, const VectorXd& u, const VectorXd& v, const ProblemParams& params);
VectorXd partial_t(const DdeVectorField& field, double t, const VectorXd& u, const VectorXd& v, const ProblemParams& params);
VectorXd partial_T(const DdeVectorField& field, double t, const VectorXd& u, const VectorXd& v, const ProblemParams& params);

struct SamplePoint {
  double t = 0.0;
  VectorXd u, v;
  ProblemParams params;
};

// Worst |analytic - fd| / max(1, |analytic|) over all partials and samples.
double check_jacobians(const DdeVectorField& field, const std::vector<SamplePoint>& samples);

}  // namespace ddeopt
