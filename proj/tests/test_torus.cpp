#include <doctest.h>

#include "ddeopt/builtin_fields.hpp"
#include "ddeopt/errors.hpp"
#include "ddeopt/fourier.hpp"
#include "ddeopt/problems.hpp"
#include "ddeopt/torus_bvp.hpp"
#include "support.hpp"

using namespace ddeopt;
using testing::kPi;

namespace {

constexpr double kRho = 0.6618;

TorusBvp small_hopf(int H, int N = 4, int d = 3) {
  TorusBvp p = hopf_problem(kRho, H, N, d);
  return p;
}

Eigen::Vector2d rot(double th, const Eigen::VectorXd& v) {
  return {std::cos(th) * v[0] - std::sin(th) * v[1], std::sin(th) * v[0] + std::cos(th) * v[1]};
}

}  // namespace

TEST_SUITE("torus") {

TEST_CASE("with H = 0 the torus rows are the periodic-orbit rows") {
  ProblemParams P{1.0, 4.7, Eigen::VectorXd::Constant(1, 0.42)};
  PeriodicBvp per(hopf_torus_field(), P, 5, 4);
  TorusBvp tor(hopf_torus_field(), P, kRho, 0, 5, 4);
  for (auto* name : {"T", "omega"}) {
    per.activate(name);
    tor.activate(name);
  }
  const auto& Lp = per.layout();
  const auto& Lt = tor.layout();
  REQUIRE(Lt.primal_size == Lp.primal_size);
  REQUIRE(Lt.multiplier_size == Lp.multiplier_size + 1);
  Eigen::VectorXd up = testing::random_vector(Lp.total(), 21, 0.8);
  up[Lp.index("T")] = 4.7;
  up[Lp.index("omega")] = 0.42;
  Eigen::VectorXd ut = Eigen::VectorXd::Zero(Lt.total());
  ut.head(Lp.total()) = up;
  ut[Lt.index("lambda_ph")] = 0.9;
  const Eigen::VectorXd pp = per.primal_residual(up), pt = tor.primal_residual(ut);
  CHECK((pp - pt.head(pp.size())).lpNorm<Eigen::Infinity>() <= 1e-12);
  CHECK(pt[pp.size()] == 0.0);
  CHECK((per.adjoint_residual(up) - tor.adjoint_residual(ut)).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("adjoint rows are homogeneous in the multipliers") {
  TorusBvp p = small_hopf(2);
  const TorusState seed = hopf_torus_seed(kRho, 4.8, 0.4, 2, 4, 3);
  p.set_reference(seed.Vstar);
  Eigen::VectorXd u = p.pack(seed);
  const Eigen::Index m = p.layout().multiplier_size;
  u.tail(m) = testing::random_vector(m, 9);
  const Eigen::VectorXd r = p.adjoint_residual(u);
  for (double c : {-1.0, 2.0, 10.0}) {
    Eigen::VectorXd v = u;
    v.tail(m) *= c;
    CHECK((p.adjoint_residual(v) - c * r).norm() <= 1e-12 * std::abs(c) * r.norm());
  }
}

TEST_CASE("wrapped evaluation shifts the angle by the rotation number") {
  const int H = 2;
  const TorusState st = hopf_torus_seed(kRho, 4.8, 0.4, H, 4, 3);
  const auto phi = angle_grid(2 * H + 1);
  // the lifted seed V(φ,τ) = Rot(φ + 2πϱτ) R(τ) is first order in φ, so the angle shift is exact
  const double a = 1.0 / 4.8;
  for (double tau : {0.05, 0.15}) {
    const Eigen::MatrixXd W = wrap_eval(st, a, 1, tau);
    for (int i = 0; i <= 2 * H; ++i) {
      const Eigen::VectorXd R = rot(-(phi[i] + 2 * kPi * kRho * (tau - a + 1)), eval(st.segments[i], tau - a + 1));
      const Eigen::Vector2d expect = rot(phi[i] + 2 * kPi * kRho * (tau - a), R);
      CHECK((W.row(i).transpose() - Eigen::VectorXd(expect)).norm() < 1e-12);
    }
  }
  CHECK((wrap_eval(st, a, 0, 0.6).row(1).transpose() - eval(st.segments[1], 0.6 - a)).norm() < 1e-15);
}

TEST_CASE("rotating-frame seed is close to a torus and Newton finishes it") {
  const int H = 2;
  TorusBvp p = small_hopf(H, 6, 4);
  const TorusState seed = hopf_torus_seed(kRho, 4.8, 0.4, H, 6, 4);
  p.set_reference(seed.Vstar);
  const Eigen::VectorXd u0 = p.pack(seed);
  // the lift is exact for the continuous problem; what remains is discretization error
  CHECK(p.primal_residual(u0).lpNorm<Eigen::Infinity>() < 1e-2);
  const Eigen::VectorXd u = refine_primal(p, u0, {"T"});
  CHECK(p.primal_residual(u).lpNorm<Eigen::Infinity>() < 1e-10);
  CHECK(u[p.layout().index("omega")] == doctest::Approx(seed.p[0]).epsilon(1e-4));
}

TEST_CASE("jacobian matches differences of the residual") {
  const int H = 1;
  TorusBvp p = small_hopf(H, 3, 3);
  const TorusState seed = hopf_torus_seed(kRho, 4.8, 0.4, H, 3, 3);
  p.set_reference(seed.Vstar);
  TorusAdjointState a;
  const Mesh mesh = seed.segments[0].mesh();
  for (int i = 0; i < 2 * H + 1; ++i)
    a.lambda_f.push_back(SegmentedFunction::sample(mesh, 2, [&](double t) {
      Eigen::VectorXd v(2);
      v << 0.2 * std::cos(2 * kPi * t + i), 0.1 + 0.05 * i * t;
      return v;
    }));
  a.lambda_rot = Eigen::MatrixXd::Constant(2 * H + 1, 2, 0.15);
  a.lambda_ph = 0.3;
  a.multipliers["eta_omega"] = 0.7;
  const Eigen::VectorXd u = p.pack(seed, &a);
  std::vector<Eigen::Index> cols;
  for (Eigen::Index c = 0; c < u.size(); c += 5) cols.push_back(c);
  for (const auto& n : p.layout().names) cols.push_back(p.layout().index(n));
  CHECK(testing::jacobian_fd_error(p, u, cols) < 1e-5);
}

TEST_CASE("torus constraints only see scalars") {
  TorusBvp p = small_hopf(1);
  PointConstraint c;
  c.name = "pin";
  c.multiplier = "m";
  c.targets = {VariationTarget::x0()};
  c.value = [](const Eigen::VectorXd& v) { return v[0]; };
  CHECK_THROWS_AS(p.register_constraint(c), ContractViolation);
  CHECK_THROWS_AS(p.set_reference(Eigen::MatrixXd::Zero(2, 2)), ContractViolation);
  CHECK(p.multipliers() == std::vector<std::string>{"lambda_ph", "eta_omega"});
  CHECK(p.adjoint_equations() + p.primal_equations() + 1 == p.layout().total());
}

}
