#include <doctest.h>

#include "ddeopt/errors.hpp"
#include "ddeopt/oracles.hpp"
#include "ddeopt/periodic_bvp.hpp"
#include "ddeopt/problems.hpp"
#include "support.hpp"

using namespace ddeopt;
using testing::kPi;

namespace {

// analytic steady state of the linear example, multipliers as given
Eigen::VectorXd linear_exact(const PeriodicBvp& p, double T) {
  const double w = 2 * kPi / T, r = linear_amplitude(w);
  PeriodicOrbitState o;
  o.T = T;
  o.alpha = 1.0;
  o.p = Eigen::VectorXd::Constant(1, linear_response_phase(w));
  o.x = SegmentedFunction::sample(p.mesh_for(1.0, T), 1,
                                  [&](double tau) { return Eigen::VectorXd::Constant(1, r * std::cos(2 * kPi * tau)); });
  o.mu["mu_A"] = r;
  return p.pack(o);
}

// smooth multipliers: continuous λ with a kink-free profile and nonzero scalars
void smooth_multipliers(const PeriodicBvp& p, Eigen::VectorXd& u) {
  const auto& L = p.layout();
  const ProblemParams P = p.params_at(u);
  PeriodicAdjointState a;
  a.lambda_f = SegmentedFunction::sample(p.mesh_for(P.alpha, P.T), p.field().n, [&](double t) {
    Eigen::VectorXd v(p.field().n);
    for (int c = 0; c < v.size(); ++c) v[c] = 0.3 * std::sin(2 * kPi * t + c) + 0.1 * (c + 1);
    return v;
  });
  a.lambda_bc = Eigen::VectorXd::Constant(p.field().n, 0.2);
  for (const auto& m : p.multipliers()) a.multipliers[m] = 0.37;
  const Eigen::VectorXd v = p.pack(p.orbit(u), &a);
  u.tail(L.multiplier_size) = v.tail(L.multiplier_size);
}

}  // namespace

TEST_SUITE("periodic") {

TEST_CASE("breakpoint layouts and regime guards") {
  const auto b = breakpoint_layout(1.0, 4.0, 0.75);
  REQUIRE(b.size() == 5);
  CHECK(b[1] == doctest::Approx(0.25));
  CHECK(b[2] == doctest::Approx(0.5));
  CHECK(b[3] == doctest::Approx(0.75));
  CHECK(breakpoint_layout(1.0, 3.6).size() == 4);
  CHECK(breakpoint_layout(1.0, 5.0, 0.8).size() == 5);
  CHECK(breakpoint_layout(1.0, 6.0, 1.0 - 1.0 / 6).size() == 5);  // β = 1 - α/T merges
  CHECK_THROWS_AS(breakpoint_layout(1.0, 1.9), RegimeFault);
  CHECK_THROWS_AS(breakpoint_layout(1.0, 2.5, 0.6), RegimeFault);   // 2α/T = 0.8 ≥ β
  CHECK_THROWS_AS(breakpoint_layout(1.0, 8.0, 0.9), RegimeFault);   // β > 1 - α/T
  CHECK_THROWS_AS(breakpoint_layout(-1.0, 8.0), RegimeFault);
  try {
    breakpoint_layout(1.0, 1.5);
  } catch (const RegimeFault& e) {
    CHECK(e.inequality().find("T > 2 alpha") != std::string::npos);
  }
}

TEST_CASE("linear example: analytic orbit solves the discretization") {
  const ProblemSetup s = make_problem("linear_scalar");
  const PeriodicBvp& p = *s.periodic;
  for (double T : {3.2, 3.6516, 4.0}) {
    const Eigen::VectorXd u = linear_exact(p, T);
    CHECK(p.primal_residual(u).lpNorm<Eigen::Infinity>() < 1e-6);
  }
  // the refined seed reproduces the closed-form amplitude
  const double r = linear_amplitude(2 * kPi / 4.0);
  CHECK(s.seed[p.layout().index("mu_A")] == doctest::Approx(r).epsilon(1e-7));
  CHECK(p.primal_equations() == p.layout().primal_size - 1);
}

TEST_CASE("adjoint rows are linear and homogeneous in the multipliers") {
  const ProblemSetup s = make_problem("duffing_pd", {{}, 10, 4, 5, false});
  const PeriodicBvp& p = *s.periodic;
  const auto& L = p.layout();
  Eigen::VectorXd u = s.seed;
  u.tail(L.multiplier_size) = testing::random_vector(L.multiplier_size, 5);
  const Eigen::VectorXd r1 = p.adjoint_residual(u);
  for (double c : {-1.0, 2.0, 10.0}) {
    Eigen::VectorXd v = u;
    v.tail(L.multiplier_size) *= c;
    CHECK((p.adjoint_residual(v) - c * r1).norm() <= 1e-12 * std::max(1.0, std::abs(c) * r1.norm()));
  }
  u.tail(L.multiplier_size).setZero();
  CHECK(p.adjoint_residual(u).norm() == 0.0);
}

TEST_CASE("jacobian matches differences of the residual") {
  ProblemSetup s = make_problem("linear_scalar");
  const PeriodicBvp& p = *s.periodic;
  Eigen::VectorXd u = linear_exact(p, 3.8);
  smooth_multipliers(p, u);
  std::vector<Eigen::Index> cols;
  for (Eigen::Index c = 0; c < u.size(); c += 7) cols.push_back(c);
  for (const auto& n : p.layout().names) cols.push_back(p.layout().index(n));
  CHECK(testing::jacobian_fd_error(p, u, cols) < 1e-5);

  ProblemSetup d = make_problem("duffing_pd");
  Eigen::VectorXd v = d.seed;
  smooth_multipliers(*d.periodic, v);
  std::vector<Eigen::Index> dcols;
  for (Eigen::Index c = 0; c < v.size(); c += 11) dcols.push_back(c);
  CHECK(testing::jacobian_fd_error(*d.periodic, v, dcols) < 1e-5);
  std::vector<Eigen::Index> scols;
  for (const auto& n : d.periodic->layout().names) scols.push_back(d.periodic->layout().index(n));
  // shifted evaluation points cross piece boundaries as α/T moves, and the pieces only join C0,
  // so the residual has small kinks in T and α
  CHECK(testing::jacobian_fd_error(*d.periodic, v, scols) < 1e-4);
}

TEST_CASE("adjoint boundary rows carry the constraint multipliers") {
  // -λ(0) + λ_bc + λ_3 + η_A and λ(1) - λ_bc at the x(0), x(1) variation rows
  const ProblemSetup s = make_problem("linear_scalar");
  const PeriodicBvp& p = *s.periodic;
  Eigen::VectorXd u = s.seed;
  smooth_multipliers(p, u);
  const auto a = p.adjoint_state(u);
  const Eigen::VectorXd r = p.adjoint_residual(u);
  const Eigen::Index b0 = p.adjoint_boundary_row();
  const double l0 = eval(a.lambda_f, 0.0)[0], l1 = eval(a.lambda_f, 1.0, Side::Left)[0];
  CHECK(r[b0] == doctest::Approx(-l0 + a.lambda_bc[0] + a.multipliers.at("lambda_3") + a.multipliers.at("eta_A")));
  CHECK(r[b0 + 1] == doctest::Approx(l1 - a.lambda_bc[0]));
}

TEST_CASE("state, multipliers and scalars survive pack and unpack") {
  const ProblemSetup s = make_problem("linear_scalar");
  const PeriodicBvp& p = *s.periodic;
  Eigen::VectorXd u = s.seed;
  smooth_multipliers(p, u);
  const PeriodicAdjointState a = p.adjoint_state(u);
  const Eigen::VectorXd v = p.pack(p.orbit(u), &a);
  CHECK((u - v).norm() < 1e-14);
  CHECK(p.variation_row("T") == p.adjoint_integral_row());
  CHECK(p.variation_row("mu_A") == -1);
  CHECK(p.parameters() == std::vector<std::string>{"T", "phi", "mu_A"});
  CHECK(p.special_multipliers() == std::vector<std::string>{"lambda_3"});
}

TEST_CASE("leaving the breakpoint regime is reported") {
  const ProblemSetup s = make_problem("linear_scalar");
  Eigen::VectorXd u = s.seed;
  u[s.periodic->layout().index("T")] = 1.5;
  CHECK_THROWS_AS(s.periodic->check_regime(u), RegimeFault);
  CHECK_THROWS_AS(s.periodic->primal_residual(u), RegimeFault);
}

TEST_CASE("misconfigured constraints are rejected") {
  PeriodicBvp p(linear_scalar_field(), {1.0, 4.0, Eigen::VectorXd::Zero(1)}, 4, 3);
  PointConstraint c;
  c.name = "x";
  c.multiplier = "m";
  c.targets = {VariationTarget::xbeta()};
  c.value = [](const Eigen::VectorXd& a) { return a[0]; };
  CHECK_THROWS_AS(p.register_constraint(c), ContractViolation);
  c.targets = {VariationTarget::scalar("nope")};
  CHECK_THROWS_AS(p.register_constraint(c), ContractViolation);
  CHECK_THROWS_AS(p.set_objective("mu"), ContractViolation);
  CHECK_THROWS_AS(p.activate("omega"), ContractViolation);
}

}
