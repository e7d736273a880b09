#include <doctest.h>

#include "ddeopt/errors.hpp"
#include "ddeopt/oracles.hpp"
#include "ddeopt/problems.hpp"
#include "ddeopt/staged.hpp"
#include "support.hpp"

using namespace ddeopt;
using testing::kPi;

TEST_SUITE("staged") {

TEST_CASE("linear example reaches the certified optimum") {
  const ProblemSetup s = make_problem("linear_scalar");
  const StagedResult r = run_stages(s.stages, s.problem(), s.seed);
  const auto& c = r.certificate;
  CHECK(c.certified);
  const LinearOptimum opt = linear_optimum();
  CHECK(c.parameters.at("T") == doctest::Approx(opt.T).epsilon(1e-5));
  CHECK(c.parameters.at("mu_A") == doctest::Approx(opt.r).epsilon(1e-6));
  CHECK(c.multipliers.at("eta_A") == 1.0);
  CHECK(std::abs(c.special.at("lambda_3")) < 1e-4);
  REQUIRE(r.stages.size() == 2);
  CHECK(r.stages[0].run.find("BP") != nullptr);
  CHECK(r.stages[1].run.find("UZ", "eta_A") != nullptr);
  // primal charts carry zero multipliers
  for (const auto& ch : r.stages[0].run.charts)
    CHECK(r.stages[0].subset->expand(ch.u).tail(s.problem().layout().multiplier_size).norm() == 0.0);
}

TEST_CASE("stage 1 amplitudes agree with the closed form") {
  const ProblemSetup s = make_problem("linear_scalar");
  StageScript one = s.stages;
  one.stages.resize(1);
  one.stages[0].action = "stop";
  const StagedResult r = run_stages(one, s.problem(), s.seed);
  const auto& L = s.problem().layout();
  for (const auto& ch : r.stages[0].run.charts) {
    const Eigen::VectorXd u = r.stages[0].subset->expand(ch.u);
    CHECK(std::abs(u[L.index("mu_A")] - linear_amplitude(2 * kPi / u[L.index("T")])) < 1e-4);
  }
}

TEST_CASE("stages must describe a curve") {
  const ProblemSetup s = make_problem("linear_scalar");
  StageScript bad = s.stages;
  bad.stages[0].fix["T"] = std::nullopt;
  CHECK_THROWS_AS(run_stages(bad, s.problem(), s.seed), StageFault);
  bad = s.stages;
  bad.stages[0].fix["nope"] = 1.0;
  try {
    run_stages(bad, s.problem(), s.seed);
    CHECK(false);
  } catch (const StageFault& e) {
    CHECK(e.stage() == "primal");
  }
}

TEST_CASE("a stage without its terminal event fails") {
  const ProblemSetup s = make_problem("linear_scalar");
  StageScript sc = s.stages;
  sc.stages.resize(1);
  sc.stages[0].terminal_event = "UZ";
  sc.stages[0].terminal_monitor = "T";
  sc.stages[0].terminal_value = 100.0;
  sc.stages[0].max_steps = 3;
  sc.stages[0].direction = "+T";
  CHECK_THROWS_AS(run_stages(sc, s.problem(), s.seed), StageFault);
}

TEST_CASE("certificates flag non-stationary points") {
  const ProblemSetup s = make_problem("linear_scalar");
  const StationaryCertificate c = certify(s.problem(), s.seed);
  CHECK_FALSE(c.certified);
  CHECK(c.trivial.at("mu_A") == doctest::Approx(1.0));
  CHECK(c.primal_residual < 1e-8);
  const SpecialMultiplierReport m = monitor_special_multipliers(s.problem(), s.seed);
  CHECK(m.values.count("lambda_3") == 1);
  CHECK_FALSE(m.exceeded);
}

TEST_CASE("adjoint sensitivities match re-solved differences") {
  const ProblemSetup s = make_problem("linear_scalar");
  for (double T : {3.3, 3.9}) {
    Eigen::VectorXd u = s.seed;
    u[s.problem().layout().index("T")] = T;
    u = refine_primal(s.problem(), u, {"T"}, 1e-12);
    const auto g = adjoint_gradient_check(s.problem(), u, {"T"});
    REQUIRE(g.size() == 1);
    CHECK(g[0].relative_error < 1e-4);
    // dr/dT from the closed form, by the chain rule through ω = 2π/T
    const double w = 2 * kPi / T, h = 1e-6;
    const double drdT = (linear_amplitude(w + h) - linear_amplitude(w - h)) / (2 * h) * (-w / T);
    CHECK(g[0].adjoint == doctest::Approx(drdT).epsilon(1e-4));
  }
}

TEST_CASE("null vectors of singular matrices") {
  Eigen::MatrixXd A(3, 3);
  A << 1, 2, 3, 2, 4, 6, 0, 1, 1;
  double res = 1.0;
  const Eigen::VectorXd v = null_vector(A.sparseView(), SolverKind::Dense, &res);
  CHECK((A * v).norm() < 1e-10);
  CHECK(v.norm() == doctest::Approx(1.0));
  CHECK(res < 1e-10);
}

}
