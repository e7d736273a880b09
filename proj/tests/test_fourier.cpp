#include <doctest.h>

#include "ddeopt/errors.hpp"
#include "ddeopt/fourier.hpp"
#include "support.hpp"

using namespace ddeopt;
using testing::kPi;

TEST_SUITE("fourier") {

TEST_CASE("shift matrices form a group") {
  const int M = 11;
  const Eigen::MatrixXd A = shift_matrix(M, 0.7), B = shift_matrix(M, -2.1);
  CHECK((A * B - shift_matrix(M, -1.4)).norm() < 1e-12);
  CHECK((A.transpose() - shift_matrix(M, -0.7)).norm() < 1e-13);
  CHECK((shift_matrix(M, 2 * kPi) - Eigen::MatrixXd::Identity(M, M)).norm() < 1e-12);
  CHECK((shift_matrix(M, 2 * kPi * 3 / M).col(0) - Eigen::VectorXd::Unit(M, M - 3)).norm() < 1e-12);
}

TEST_CASE("shift and derivative are exact on trigonometric polynomials") {
  const int H = 4, M = 2 * H + 1;
  const auto phi = angle_grid(M);
  Eigen::MatrixXd v(M, 2), shifted(M, 2), dv(M, 2);
  const double s = 0.913;
  for (int i = 0; i < M; ++i) {
    auto f = [](double p) { return 0.3 + std::cos(p) - 0.5 * std::sin(4 * p); };
    auto g = [](double p) { return std::sin(2 * p) + 0.1 * std::cos(3 * p); };
    v(i, 0) = f(phi[i]);
    v(i, 1) = g(phi[i]);
    shifted(i, 0) = f(phi[i] + s);
    shifted(i, 1) = g(phi[i] + s);
    dv(i, 0) = -std::sin(phi[i]) - 2 * std::cos(4 * phi[i]);
    dv(i, 1) = 2 * std::cos(2 * phi[i]) - 0.3 * std::sin(3 * phi[i]);
  }
  CHECK((angle_shift(v, s) - shifted).norm() < 1e-12);
  CHECK((fourier_derivative_matrix(M) * v - dv).norm() < 1e-12);
}

TEST_CASE("grid size must be odd") {
  CHECK_THROWS_AS(angle_grid(4), ContractViolation);
  CHECK(shift_matrix(1, 1.234)(0, 0) == doctest::Approx(1.0));
}

}
