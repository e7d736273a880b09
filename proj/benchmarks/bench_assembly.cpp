#include <benchmark/benchmark.h>

#include "ddeopt/continuation.hpp"
#include "ddeopt/errors.hpp"
#include "ddeopt/problems.hpp"
#include "ddeopt/staged.hpp"

using namespace ddeopt;

namespace {

const ProblemSetup& setup(const std::string& name) {
  static std::map<std::string, ProblemSetup> cache;
  auto it = cache.find(name);
  if (it == cache.end()) {
    ProblemOptions opt;
    opt.refine = false;
    it = cache.emplace(name, make_problem(name, opt)).first;
  }
  return it->second;
}

const char* kNames[] = {"linear_scalar", "duffing_pd", "hopf_torus"};

void BM_Residual(benchmark::State& state) {
  const ProblemSetup& s = setup(kNames[state.range(0)]);
  VectorXd u = s.seed;
  u.tail(s.problem().layout().multiplier_size).setConstant(0.1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(s.problem().primal_residual(u));
    benchmark::DoNotOptimize(s.problem().adjoint_residual(u));
  }
  state.SetLabel(s.name);
}

void BM_Jacobian(benchmark::State& state) {
  const ProblemSetup& s = setup(kNames[state.range(0)]);
  VectorXd u = s.seed;
  u.tail(s.problem().layout().multiplier_size).setConstant(0.1);
  for (auto _ : state) benchmark::DoNotOptimize(s.problem().jacobian(u));
  state.SetLabel(s.name);
}

// one primal Newton correction with T pinned
void BM_NewtonStep(benchmark::State& state) {
  const ProblemSetup& s = setup(kNames[state.range(0)]);
  std::vector<std::string> pinned = {"T"};
  if (s.problem().layout().has("mu_alpha")) pinned.push_back("mu_alpha");
  const SubsetSystem sub(s.problem(), s.seed, false, pinned);
  const VectorXd v0 = sub.restrict(s.seed);
  for (auto _ : state) {
    try {
      benchmark::DoNotOptimize(newton_correct([&](const VectorXd& v) { return sub.residual(v); },
                                              [&](const VectorXd& v) { return sub.jacobian(v); }, v0, 0.0, 1));
    } catch (const SolverFault&) {
      // a single iteration never meets a zero tolerance
    }
  }
  state.SetLabel(s.name);
}

}  // namespace

BENCHMARK(BM_Residual)->DenseRange(0, 2)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Jacobian)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NewtonStep)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
