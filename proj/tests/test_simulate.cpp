#include <doctest.h>

#include <complex>

#include "ddeopt/builtin_fields.hpp"
#include "ddeopt/continuation.hpp"
#include "ddeopt/errors.hpp"
#include "ddeopt/oracles.hpp"
#include "ddeopt/problems.hpp"
#include "ddeopt/simulate.hpp"
#include "support.hpp"

using namespace ddeopt;
using testing::kPi;

namespace {

// steady state of z' = -z - z(t-1) + cos ωt
double linear_exact(double w, double t) {
  const std::complex<double> Z = 1.0 / std::complex<double>(1.0 + std::cos(w), w - std::sin(w));
  return std::real(Z * std::exp(std::complex<double>(0.0, w * t)));
}

double linear_error(double dt) {
  const double w = 1.7207;
  ProblemParams P{1.0, 2 * kPi / w, Eigen::VectorXd::Zero(1)};
  const Trajectory tr = simulate_dde(linear_scalar_field(), P,
                                     [&](double t) { return Eigen::VectorXd::Constant(1, linear_exact(w, t)); }, 8.0, dt);
  double err = 0.0;
  for (std::size_t k = 0; k < tr.x.size(); ++k) {
    const double t = tr.t0 + dt * static_cast<double>(k);
    err = std::max(err, std::abs(tr.x[k][0] - linear_exact(w, t)));
  }
  return err;
}

}  // namespace

TEST_SUITE("simulate") {

TEST_CASE("zero field keeps the initial state") {
  DdeVectorField f;
  f.name = "zero";
  f.n = 2;
  f.f = [](double, const Eigen::VectorXd&, const Eigen::VectorXd&, const ProblemParams&) {
    return Eigen::VectorXd(Eigen::VectorXd::Zero(2));
  };
  ProblemParams P{0.5, 1.0, Eigen::VectorXd()};
  const Trajectory tr = simulate_dde(f, P, [](double t) { return Eigen::Vector2d(1.0 + t, -2.0).eval(); }, 3.0, 0.1);
  for (const auto& x : tr.x) CHECK((x - Eigen::Vector2d(1.0, -2.0)).norm() == 0.0);
  CHECK(tr.t_end() == doctest::Approx(3.0));
}

TEST_CASE("transient decays to the closed-form amplitude") {
  const double w = 1.7207;
  ProblemParams P{1.0, 2 * kPi / w, Eigen::VectorXd::Zero(1)};
  const Trajectory tr =
      simulate_dde(linear_scalar_field(), P, [](double) { return Eigen::VectorXd(Eigen::VectorXd::Zero(1)); }, 200.0, 0.01);
  CHECK(std::abs(final_period_amplitude(tr, P.T) - 0.8911) < 5e-3);
  CHECK(std::abs(final_period_amplitude(tr, P.T) - linear_amplitude(w)) < 1e-4);
}

TEST_CASE("fourth-order convergence under step halving") {
  std::vector<double> e;
  for (double dt : {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64}) e.push_back(linear_error(dt));
  for (std::size_t k = 0; k + 1 < e.size(); ++k) {
    const double order = std::log2(e[k] / e[k + 1]);
    CHECK(order > 3.5);
    CHECK(order < 4.5);
  }
}

TEST_CASE("simulated Duffing steady state is a good Newton seed") {
  ProblemOptions opt;
  opt.refine = false;
  const ProblemSetup s = make_problem("duffing_pd", opt);
  SubsetSystem sub(s.problem(), s.seed, false, {"T", "mu_alpha"});
  const NewtonResult r = newton_correct([&](const Eigen::VectorXd& v) { return sub.residual(v); },
                                        [&](const Eigen::VectorXd& v) { return sub.jacobian(v); }, sub.restrict(s.seed),
                                        1e-10, 15);
  CHECK(r.iterations <= 5);
}

TEST_CASE("step restrictions and blow-up") {
  ProblemParams P{1.0, 4.0, Eigen::VectorXd::Zero(1)};
  auto zero = [](double) { return Eigen::VectorXd(Eigen::VectorXd::Zero(1)); };
  CHECK_THROWS_AS(simulate_dde(linear_scalar_field(), P, zero, 1.0, 0.5), ContractViolation);
  DdeVectorField f;
  f.n = 1;
  f.f = [](double, const Eigen::VectorXd& u, const Eigen::VectorXd&, const ProblemParams&) {
    return Eigen::VectorXd(u.array() * u.array());
  };
  CHECK_THROWS_AS(simulate_dde(f, P, [](double) { return Eigen::VectorXd::Constant(1, 1.0); }, 5.0, 0.01), NumericFault);
}

}
