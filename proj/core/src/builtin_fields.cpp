#include "ddeopt/builtin_fields.hpp"

#include <cmath>
#include <numbers>

namespace ddeopt {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

DdeVectorField linear_scalar_field() {
  DdeVectorField F;
  F.name = "linear_scalar";
  F.n = 1;
  F.q = 1;
  F.param_names = {"phi"};
  F.f = [](double t, const VectorXd& u, const VectorXd& v, const ProblemParams& P) {
    VectorXd r(1);
    r[0] = -u[0] - v[0] + std::cos(kTwoPi * t / P.T + P.p[0]);
    return r;
  };
  F.df_dt = [](double t, const VectorXd&, const VectorXd&, const ProblemParams& P) {
    VectorXd r(1);
    r[0] = -std::sin(kTwoPi * t / P.T + P.p[0]) * kTwoPi / P.T;
    return r;
  };
  F.df_dT = [](double t, const VectorXd&, const VectorXd&, const ProblemParams& P) {
    VectorXd r(1);
    r[0] = std::sin(kTwoPi * t / P.T + P.p[0]) * kTwoPi * t / (P.T * P.T);
    return r;
  };
  F.df_du = [](double, const VectorXd&, const VectorXd&, const ProblemParams&) {
    return MatrixXd::Constant(1, 1, -1.0);
  };
  F.df_dv = F.df_du;
  F.df_dp = [](double t, const VectorXd&, const VectorXd&, const ProblemParams& P) {
    return MatrixXd::Constant(1, 1, -std::sin(kTwoPi * t / P.T + P.p[0]));
  };
  return F;
}

DdeVectorField duffing_pd_field(const DuffingCoefficients& c) {
  DdeVectorField F;
  F.name = "duffing_pd";
  F.n = 2;
  F.q = 1;
  F.param_names = {"phi"};
  F.f = [c](double t, const VectorXd& u, const VectorXd& v, const ProblemParams& P) {
    VectorXd r(2);
    r[0] = u[1];
    r[1] = -2 * c.zeta * u[1] - u[0] - c.mu * u[0] * u[0] * u[0] + 2 * c.a * v[0] + 2 * c.b * v[1] +
           c.gamma * std::cos(kTwoPi * t / P.T + P.p[0]);
    return r;
  };
  F.df_dt = [c](double t, const VectorXd&, const VectorXd&, const ProblemParams& P) {
    VectorXd r = VectorXd::Zero(2);
    r[1] = -c.gamma * std::sin(kTwoPi * t / P.T + P.p[0]) * kTwoPi / P.T;
    return r;
  };
  F.df_dT = [c](double t, const VectorXd&, const VectorXd&, const ProblemParams& P) {
    VectorXd r = VectorXd::Zero(2);
    r[1] = c.gamma * std::sin(kTwoPi * t / P.T + P.p[0]) * kTwoPi * t / (P.T * P.T);
    return r;
  };
  F.df_du = [c](double, const VectorXd& u, const VectorXd&, const ProblemParams&) {
    MatrixXd J(2, 2);
    J << 0.0, 1.0, -1.0 - 3 * c.mu * u[0] * u[0], -2 * c.zeta;
    return J;
  };
  F.df_dv = [c](double, const VectorXd&, const VectorXd&, const ProblemParams&) {
    MatrixXd J(2, 2);
    J << 0.0, 0.0, 2 * c.a, 2 * c.b;
    return J;
  };
  F.df_dp = [c](double t, const VectorXd&, const VectorXd&, const ProblemParams& P) {
    MatrixXd J = MatrixXd::Zero(2, 1);
    J(1, 0) = -c.gamma * std::sin(kTwoPi * t / P.T + P.p[0]);
    return J;
  };
  return F;
}

namespace {

// gain g = 1 + |u|(cos(2πt/T) - 1) and its gradient in u
double hopf_gain(double t, const VectorXd& u, double T, Eigen::Vector2d* grad) {
  const double r = std::hypot(u[0], u[1]);
  const double c = std::cos(kTwoPi * t / T) - 1.0;
  if (grad) {
    if (r > 0) *grad = Eigen::Vector2d(u[0], u[1]) * (c / r);
    else grad->setZero();
  }
  return 1.0 + r * c;
}

}  // namespace

DdeVectorField hopf_torus_field() {
  DdeVectorField F;
  F.name = "hopf_torus";
  F.n = 2;
  F.q = 1;
  F.param_names = {"omega"};
  F.f = [](double t, const VectorXd& u, const VectorXd& v, const ProblemParams& P) {
    const double w = P.p[0], g = hopf_gain(t, u, P.T, nullptr);
    VectorXd r(2);
    r[0] = -w * u[1] + v[0] * g;
    r[1] = w * u[0] + v[1] * g;
    return r;
  };
  F.df_dt = [](double t, const VectorXd& u, const VectorXd& v, const ProblemParams& P) {
    const double r = std::hypot(u[0], u[1]);
    return VectorXd(v * (-r * std::sin(kTwoPi * t / P.T) * kTwoPi / P.T));
  };
  F.df_dT = [](double t, const VectorXd& u, const VectorXd& v, const ProblemParams& P) {
    const double r = std::hypot(u[0], u[1]);
    return VectorXd(v * (r * std::sin(kTwoPi * t / P.T) * kTwoPi * t / (P.T * P.T)));
  };
  F.df_du = [](double t, const VectorXd& u, const VectorXd& v, const ProblemParams& P) {
    Eigen::Vector2d dg;
    hopf_gain(t, u, P.T, &dg);
    const double w = P.p[0];
    MatrixXd J(2, 2);
    J << v[0] * dg[0], -w + v[0] * dg[1], w + v[1] * dg[0], v[1] * dg[1];
    return J;
  };
  F.df_dv = [](double t, const VectorXd& u, const VectorXd&, const ProblemParams& P) {
    return MatrixXd(MatrixXd::Identity(2, 2) * hopf_gain(t, u, P.T, nullptr));
  };
  F.df_dp = [](double, const VectorXd& u, const VectorXd&, const ProblemParams&) {
    MatrixXd J(2, 1);
    J << -u[1], u[0];
    return J;
  };
  return F;
}

DdeVectorField hopf_corotating_field(double rho) {
  DdeVectorField F;
  F.name = "hopf_corotating";
  F.n = 2;
  F.q = 1;
  F.param_names = {"omega"};
  // R' = (ω-ν) J R + g(t,|R|) Rot(-να) R(t-α)
  auto rotated_delay = [rho](const VectorXd& v, const ProblemParams& P) {
    const double th = -kTwoPi * rho / P.T * P.alpha;
    Eigen::Vector2d out(std::cos(th) * v[0] - std::sin(th) * v[1], std::sin(th) * v[0] + std::cos(th) * v[1]);
    return out;
  };
  F.f = [rho, rotated_delay](double t, const VectorXd& u, const VectorXd& v, const ProblemParams& P) {
    const double s = P.p[0] - kTwoPi * rho / P.T;
    const double g = hopf_gain(t, u, P.T, nullptr);
    const Eigen::Vector2d rv = rotated_delay(v, P);
    VectorXd r(2);
    r[0] = -s * u[1] + g * rv[0];
    r[1] = s * u[0] + g * rv[1];
    return r;
  };
  F.df_du = [rho, rotated_delay](double t, const VectorXd& u, const VectorXd& v, const ProblemParams& P) {
    const double s = P.p[0] - kTwoPi * rho / P.T;
    Eigen::Vector2d dg;
    hopf_gain(t, u, P.T, &dg);
    const Eigen::Vector2d rv = rotated_delay(v, P);
    MatrixXd J(2, 2);
    J << 0.0, -s, s, 0.0;
    J += rv * dg.transpose();
    return J;
  };
  F.df_dv = [rho](double t, const VectorXd& u, const VectorXd&, const ProblemParams& P) {
    const double th = -kTwoPi * rho / P.T * P.alpha;
    const double g = hopf_gain(t, u, P.T, nullptr);
    MatrixXd J(2, 2);
    J << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    return MatrixXd(g * J);
  };
  F.df_dp = [](double, const VectorXd& u, const VectorXd&, const ProblemParams&) {
    MatrixXd J(2, 1);
    J << -u[1], u[0];
    return J;
  };
  return F;
}

}  // namespace ddeopt
