#include <doctest.h>

#include "ddeopt/continuation.hpp"
#include "ddeopt/errors.hpp"
#include "support.hpp"

using namespace ddeopt;

namespace {

SparseMatrix dense_to_sparse(const Eigen::MatrixXd& A) { return A.sparseView(); }

ContinuationSystem circle() {
  ContinuationSystem s;
  s.dim = 2;
  s.residual = [](const Eigen::VectorXd& u) { return Eigen::VectorXd::Constant(1, u.squaredNorm() - 1.0); };
  s.jacobian = [](const Eigen::VectorXd& u) {
    Eigen::MatrixXd J(1, 2);
    J << 2 * u[0], 2 * u[1];
    return dense_to_sparse(J);
  };
  s.coordinates = {{"x", 0}, {"y", 1}};
  return s;
}

// x (λ - x²) = 0: trivial branch x = 0 crossed by a parabola at λ = 0
ContinuationSystem pitchfork() {
  ContinuationSystem s;
  s.dim = 2;
  s.residual = [](const Eigen::VectorXd& u) { return Eigen::VectorXd::Constant(1, u[0] * (u[1] - u[0] * u[0])); };
  s.jacobian = [](const Eigen::VectorXd& u) {
    Eigen::MatrixXd J(1, 2);
    J << u[1] - 3 * u[0] * u[0], u[0];
    return dense_to_sparse(J);
  };
  s.coordinates = {{"x", 0}, {"lambda", 1}};
  return s;
}

}  // namespace

TEST_SUITE("continuation") {

TEST_CASE("newton converges quadratically and reports failure") {
  auto F = [](const Eigen::VectorXd& u) {
    Eigen::VectorXd r(2);
    r << u[0] * u[0] - 2.0, u[1] - u[0];
    return r;
  };
  auto J = [](const Eigen::VectorXd& u) {
    Eigen::MatrixXd A(2, 2);
    A << 2 * u[0], 0, -1, 1;
    return dense_to_sparse(A);
  };
  const NewtonResult r = newton_correct(F, J, Eigen::Vector2d(1.0, 0.0), 1e-12);
  CHECK(r.u[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(r.iterations <= 6);
  auto G = [](const Eigen::VectorXd& u) { return Eigen::VectorXd::Constant(1, u[0] * u[0] + 1.0); };
  auto H = [](const Eigen::VectorXd& u) { return dense_to_sparse(Eigen::MatrixXd::Constant(1, 1, 2 * u[0])); };
  CHECK_THROWS_AS(newton_correct(G, H, Eigen::VectorXd::Constant(1, 0.3)), SolverFault);
}

TEST_CASE("charts stay on the curve and folds are located") {
  const ContinuationSystem s = circle();
  ContinuationSettings set;
  set.folds = {"y"};
  set.h_max = 0.2;
  set.max_steps = 40;
  set.terminal_type = "FP";
  const Chart c0 = initial_chart(s, Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(0.0, 1.0), set);
  const ContinuationRun run = continue_branch(s, c0, set);
  for (const auto& c : run.charts) CHECK(std::abs(c.u.norm() - 1.0) < 1e-8);
  const Event* fp = run.find("FP", "y");
  REQUIRE(fp != nullptr);
  const Chart& c = run.charts[fp->chart];
  CHECK(std::abs(c.u[1] - 1.0) < 1e-8);  // corrector tolerance
  CHECK(std::abs(c.u[0]) < 1e-6);
  for (std::size_t k = 1; k < run.charts.size(); ++k) CHECK(run.charts[k].s > run.charts[k - 1].s);
}

TEST_CASE("user zeros and bounds") {
  const ContinuationSystem s = circle();
  ContinuationSettings set;
  set.user_zeros = {{"x", 0.5}};
  set.bounds = {{"y", -INFINITY, 0.95}};
  set.h_max = 0.15;
  const Chart c0 = initial_chart(s, Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(0.0, 1.0), set);
  const ContinuationRun run = continue_branch(s, c0, set);
  const Event* uz = run.find("UZ", "x");
  REQUIRE(uz != nullptr);
  CHECK(std::abs(run.charts[uz->chart].u[0] - 0.5) < 1e-8);
  CHECK(run.charts.back().has_label("EP"));
  CHECK(run.charts.back().u[1] <= 0.95 + 1e-8);
}

TEST_CASE("branch points are detected and switched") {
  const ContinuationSystem s = pitchfork();
  ContinuationSettings set;
  set.detect_bp = true;
  set.terminal_type = "BP";
  set.h_max = 0.1;
  const Chart c0 = initial_chart(s, Eigen::Vector2d(0.0, -0.5), Eigen::Vector2d(0.0, 1.0), set);
  const ContinuationRun run = continue_branch(s, c0, set);
  REQUIRE(run.find("BP") != nullptr);
  const Chart& bp = run.charts.back();
  CHECK(std::abs(bp.u[1]) < 1e-6);
  const Chart sw = switch_branch(s, bp);
  CHECK(std::abs(sw.tangent[0]) > 0.99);
  // the regular chart at λ = -0.5 is not a branch point
  CHECK_THROWS_AS(switch_branch(s, c0), NotBranchPoint);
}

TEST_CASE("run csv has a fixed header") {
  const ContinuationSystem s = circle();
  ContinuationSettings set;
  set.max_steps = 3;
  const Chart c0 = initial_chart(s, Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(0.0, 1.0), set);
  const ContinuationRun run = continue_branch(s, c0, set);
  const std::string csv = run_csv(s, run);
  CHECK(csv.rfind("step,s,x,y,label\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(run.charts.size()) + 1);
}

}
