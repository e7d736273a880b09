#include "ddeopt/field.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ddeopt/errors.hpp"

namespace ddeopt {

namespace {

void check_shapes(const DdeVectorField& field, const VectorXd& u, const VectorXd& v,
                  const ProblemParams& params) {
  if (u.size() != field.n || v.size() != field.n || params.p.size() != field.q) {
    std::ostringstream os;
    os << field.name << ": expected n=" << field.n << ", q=" << field.q << " but got |u|=" << u.size()
       << ", |v|=" << v.size() << ", |p|=" << params.p.size();
    throw ContractViolation(os.str());
  }
}

void check_finite(const DdeVectorField& field, const char* what, const auto& m, double t) {
  if (!m.allFinite()) {
    std::ostringstream os;
    os << field.name << ": non-finite " << what << " at t=" << t;
    throw NumericFault(os.str());
  }
}

double fd_step(double x) { return 1e-6 * std::max(1.0, std::abs(x)); }

MatrixXd fd_state(const DdeVectorField& field, double t, const VectorXd& u, const VectorXd& v,
                  const ProblemParams& params, bool wrt_v) {
  MatrixXd J(field.n, field.n);
  VectorXd up = u, vp = v;
  for (int k = 0; k < field.n; ++k) {
    VectorXd& w = wrt_v ? vp : up;
    const double x = w[k], h = fd_step(x);
    w[k] = x + h;
    VectorXd fp = field.f(t, up, vp, params);
    w[k] = x - h;
    VectorXd fm = field.f(t, up, vp, params);
    w[k] = x;
    J.col(k) = (fp - fm) / (2 * h);
  }
  return J;
}

MatrixXd fd_params(const DdeVectorField& field, double t, const VectorXd& u, const VectorXd& v,
                   const ProblemParams& params) {
  MatrixXd J(field.n, field.q);
  ProblemParams pp = params;
  for (int k = 0; k < field.q; ++k) {
    const double x = params.p[k], h = fd_step(x);
    pp.p[k] = x + h;
    VectorXd fp = field.f(t, u, v, pp);
    pp.p[k] = x - h;
    VectorXd fm = field.f(t, u, v, pp);
    pp.p[k] = x;
    J.col(k) = (fp - fm) / (2 * h);
  }
  return J;
}

VectorXd fd_time(const DdeVectorField& field, double t, const VectorXd& u, const VectorXd& v,
                 const ProblemParams& params) {
  const double h = fd_step(t);
  return (field.f(t + h, u, v, params) - field.f(t - h, u, v, params)) / (2 * h);
}

VectorXd fd_period(const DdeVectorField& field, double t, const VectorXd& u, const VectorXd& v,
                   const ProblemParams& params) {
  ProblemParams pp = params;
  const double h = fd_step(params.T);
  pp.T = params.T + h;
  VectorXd fp = field.f(t, u, v, pp);
  pp.T = params.T - h;
  VectorXd fm = field.f(t, u, v, pp);
  return (fp - fm) / (2 * h);
}

double worst(const auto& analytic, const auto& fd) {
  double e = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double a = analytic.data()[i];
    e = std::max(e, std::abs(a - fd.data()[i]) / std::max(1.0, std::abs(a)));
  }
  return e;
}

}  // namespace

int DdeVectorField::param_index(const std::string& pname) const {
  auto it = std::find(param_names.begin(), param_names.end(), pname);
  if (it == param_names.end()) throw ContractViolation(name + ": no parameter named '" + pname + "'");
  return static_cast<int>(it - param_names.begin());
}

VectorXd eval_field(const DdeVectorField& field, double t, const VectorXd& u, const VectorXd& v,
                    const ProblemParams& params) {
  check_shapes(field, u, v, params);
  VectorXd out = field.f(t, u, v, params);
  if (out.size() != field.n) throw ContractViolation(field.name + ": f returned wrong length");
  check_finite(field, "f", out, t);
  return out;
}

FieldJacobians eval_jacobians(const DdeVectorField& field, double t, const VectorXd& u,
                              const VectorXd& v, const ProblemParams& params) {
  check_shapes(field, u, v, params);
  FieldJacobians J;
  auto flag = [&J]() { J.finite_difference = true; };
  if (field.df_dt) J.dt = field.df_dt(t, u, v, params); else { J.dt = fd_time(field, t, u, v, params); flag(); }
  if (field.df_dT) J.dT = field.df_dT(t, u, v, params); else { J.dT = fd_period(field, t, u, v, params); flag(); }
  if (field.df_du) J.du = field.df_du(t, u, v, params); else { J.du = fd_state(field, t, u, v, params, false); flag(); }
  if (field.df_dv) J.dv = field.df_dv(t, u, v, params); else { J.dv = fd_state(field, t, u, v, params, true); flag(); }
  if (field.df_dp) J.dp = field.df_dp(t, u, v, params); else { J.dp = fd_params(field, t, u, v, params); flag(); }
  check_finite(field, "df/dt", J.dt, t);
  check_finite(field, "df/dT", J.dT, t);
  check_finite(field, "df/du", J.du, t);
  check_finite(field, "df/dv", J.dv, t);
  check_finite(field, "df/dp", J.dp, t);
  return J;
}

MatrixXd partial_u(const DdeVectorField& field, double t, const VectorXd& u, const VectorXd& v, const ProblemParams& params) {
  return field.df_du ? field.df_du(t, u, v, params) : fd_state(field, t, u, v, params, false);
}

MatrixXd partial_v(const DdeVectorField& field, double t, const VectorXd& u, const VectorXd& v, const ProblemParams& params) {
  return field.df_dv ? field.df_dv(t, u, v, params) : fd_state(field, t, u, v, params, true);
}

MatrixXd partial_p(const DdeVectorField& field, double t, const VectorXd& u, const VectorXd& v, const ProblemParams& params) {
  return field.df_dp ? field.df_dp(t, u, v, params) : fd_params(field, t, u, v, params);
}

VectorXd partial_t(const DdeVectorField& field, double t, const VectorXd& u, const VectorXd& v, const ProblemParams& params) {
  return field.df_dt ? field.df_dt(t, u, v, params) : fd_time(field, t, u, v, params);
}

VectorXd partial_T(const DdeVectorField& field, double t, const VectorXd& u, const VectorXd& v, const ProblemParams& params) {
  return field.df_dT ? field.df_dT(t, u, v, params) : fd_period(field, t, u, v, params);
}

double check_jacobians(const DdeVectorField& field, const std::vector<SamplePoint>& samples) {
  if (samples.empty()) throw ContractViolation("check_jacobians: need at least one sample point");
  double err = 0.0;
  for (const auto& s : samples) {
    check_shapes(field, s.u, s.v, s.params);
    if (field.df_dt) err = std::max(err, worst(field.df_dt(s.t, s.u, s.v, s.params), fd_time(field, s.t, s.u, s.v, s.params)));
    if (field.df_dT) err = std::max(err, worst(field.df_dT(s.t, s.u, s.v, s.params), fd_period(field, s.t, s.u, s.v, s.params)));
    if (field.df_du) err = std::max(err, worst(field.df_du(s.t, s.u, s.v, s.params), fd_state(field, s.t, s.u, s.v, s.params, false)));
    if (field.df_dv) err = std::max(err, worst(field.df_dv(s.t, s.u, s.v, s.params), fd_state(field, s.t, s.u, s.v, s.params, true)));
    if (field.df_dp) err = std::max(err, worst(field.df_dp(s.t, s.u, s.v, s.params), fd_params(field, s.t, s.u, s.v, s.params)));
  }
  return err;
}

}  // namespace ddeopt
