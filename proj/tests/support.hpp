#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "ddeopt/lagrangian.hpp"

namespace testing {

inline constexpr double kPi = std::numbers::pi;

// worst |J - FD| over the listed columns, relative to max(1, |J|)
inline double jacobian_fd_error(const ddeopt::LagrangianProblem& p, const Eigen::VectorXd& u,
                                const std::vector<Eigen::Index>& cols, double h = 1e-6) {
  const Eigen::MatrixXd J = Eigen::MatrixXd(p.jacobian(u));
  auto F = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd a = p.primal_residual(v), b = p.adjoint_residual(v), r(a.size() + b.size());
    r << a, b;
    return r;
  };
  double worst = 0.0;
  for (Eigen::Index c : cols) {
    Eigen::VectorXd up = u, um = u;
    const double s = h * std::max(1.0, std::abs(u[c]));
    up[c] += s;
    um[c] -= s;
    const Eigen::VectorXd fd = (F(up) - F(um)) / (2 * s);
    for (Eigen::Index r = 0; r < fd.size(); ++r)
      worst = std::max(worst, std::abs(J(r, c) - fd[r]) / std::max(1.0, std::abs(J(r, c))));
  }
  return worst;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, std::uint32_t seed, double scale = 1.0) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> d(-scale, scale);
  Eigen::VectorXd v(n);
  for (Eigen::Index k = 0; k < n; ++k) v[k] = d(gen);
  return v;
}

}  // namespace testing
