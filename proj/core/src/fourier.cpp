#include "ddeopt/fourier.hpp"

#include <cmath>
#include <numbers>

#include "ddeopt/errors.hpp"

namespace ddeopt {

namespace {
void require_odd(int M) {
  if (M < 1 || M % 2 == 0) throw ContractViolation("angle grid size must be odd");
}
}  // namespace

std::vector<double> angle_grid(int M) {
  require_odd(M);
  std::vector<double> phi(M);
  for (int i = 0; i < M; ++i) phi[i] = 2.0 * std::numbers::pi * i / M;
  return phi;
}

Eigen::MatrixXd shift_matrix(int M, double s) {
  require_odd(M);
  const int H = (M - 1) / 2;
  const auto phi = angle_grid(M);
  Eigen::MatrixXd S(M, M);
  for (int i = 0; i < M; ++i)
    for (int k = 0; k < M; ++k) {
      double v = 1.0;
      for (int m = 1; m <= H; ++m) v += 2.0 * std::cos(m * (phi[i] + s - phi[k]));
      S(i, k) = v / M;
    }
  return S;
}

Eigen::MatrixXd fourier_derivative_matrix(int M) {
  require_odd(M);
  const int H = (M - 1) / 2;
  const auto phi = angle_grid(M);
  Eigen::MatrixXd D(M, M);
  for (int i = 0; i < M; ++i)
    for (int k = 0; k < M; ++k) {
      double v = 0.0;
      for (int m = 1; m <= H; ++m) v -= 2.0 * m * std::sin(m * (phi[i] - phi[k]));
      D(i, k) = v / M;
    }
  return D;
}

Eigen::MatrixXd angle_shift(const Eigen::MatrixXd& values, double shift) {
  return shift_matrix(static_cast<int>(values.rows()), shift) * values;
}

}  // namespace ddeopt
