#include <doctest.h>

#include "ddeopt/builtin_fields.hpp"
#include "ddeopt/errors.hpp"
#include "support.hpp"

using namespace ddeopt;
using testing::kPi;

namespace {

std::vector<SamplePoint> samples(int n, int q, double T, std::uint32_t seed) {
  std::vector<SamplePoint> out;
  for (int k = 0; k < 5; ++k) {
    SamplePoint s;
    s.t = 0.37 + 1.3 * k;
    s.u = testing::random_vector(n, seed + k) + Eigen::VectorXd::Constant(n, 0.5);
    s.v = testing::random_vector(n, seed + 10 + k);
    s.params.T = T;
    s.params.alpha = 0.8;
    s.params.p = testing::random_vector(q, seed + 20 + k);
    out.push_back(s);
  }
  return out;
}

Eigen::Vector2d rot(double th, const Eigen::VectorXd& v) {
  return {std::cos(th) * v[0] - std::sin(th) * v[1], std::sin(th) * v[0] + std::cos(th) * v[1]};
}

}  // namespace

TEST_SUITE("field") {

TEST_CASE("analytic partials agree with differences") {
  CHECK(check_jacobians(linear_scalar_field(), samples(1, 1, 3.7, 1)) < 1e-6);
  CHECK(check_jacobians(duffing_pd_field(), samples(2, 1, 5.9, 2)) < 1e-6);
  CHECK(check_jacobians(hopf_torus_field(), samples(2, 1, 5.3, 3)) < 1e-6);
  CHECK(check_jacobians(hopf_corotating_field(0.6618), samples(2, 1, 5.3, 4)) < 1e-6);
}

TEST_CASE("linear field") {
  const DdeVectorField f = linear_scalar_field();
  ProblemParams P;
  P.T = 2.0;
  P.p = Eigen::VectorXd::Constant(1, 0.0);
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, 0.25), v = Eigen::VectorXd::Constant(1, -1.0);
  CHECK(eval_field(f, 0.5, u, v, P)[0] == doctest::Approx(-0.25 + 1.0 + std::cos(kPi / 2)));
}

TEST_CASE("co-rotating field is the Hopf field in a rotating frame") {
  const double rho = 0.6618;
  const DdeVectorField F = hopf_torus_field(), G = hopf_corotating_field(rho);
  ProblemParams P;
  P.T = 5.3;
  P.alpha = 1.0;
  P.p = Eigen::VectorXd::Constant(1, 0.43);
  const double nu = 2 * kPi * rho / P.T;
  for (double t : {0.1, 1.7, 4.2}) {
    const Eigen::VectorXd R = testing::random_vector(2, 11), Rd = testing::random_vector(2, 12);
    const Eigen::VectorXd z = rot(nu * t, R), zd = rot(nu * (t - P.alpha), Rd);
    // d/dt [Rot(νt) R] = Rot(νt) (R' + ν J R)
    Eigen::Vector2d JR(-R[1], R[0]);
    const Eigen::Vector2d lhs = rot(nu * t, Eigen::VectorXd(G.f(t, R, Rd, P) + nu * JR));
    CHECK((lhs - F.f(t, z, zd, P)).norm() < 1e-13);
  }
}

TEST_CASE("shape mismatch is a contract violation") {
  ProblemParams P;
  P.p = Eigen::VectorXd::Zero(1);
  CHECK_THROWS_AS(eval_field(duffing_pd_field(), 0.0, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(2), P),
                  ContractViolation);
}

}
