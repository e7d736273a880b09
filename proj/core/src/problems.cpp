#include "ddeopt/problems.hpp"

#include <cmath>
#include <numbers>

#include "ddeopt/continuation.hpp"
#include "ddeopt/errors.hpp"
#include "ddeopt/fourier.hpp"
#include "ddeopt/oracles.hpp"
#include "ddeopt/simulate.hpp"

namespace ddeopt {

namespace {

constexpr double kPi = std::numbers::pi;

VectorXd grad(std::initializer_list<double> g) {
  VectorXd v(static_cast<Index>(g.size()));
  Index k = 0;
  for (double x : g) v[k++] = x;
  return v;
}

double get(const std::map<std::string, double>& m, const std::string& k) {
  auto it = m.find(k);
  if (it == m.end()) throw ContractViolation("missing parameter '" + k + "'");
  return it->second;
}

StageSpec stage(std::string name, bool full, std::string event, std::string action) {
  StageSpec s;
  s.name = std::move(name);
  s.full = full;
  s.terminal_event = std::move(event);
  s.action = std::move(action);
  return s;
}

PointConstraint link(const std::string& name, const std::string& mult, const std::string& var, const std::string& mu) {
  PointConstraint c;
  c.name = name;
  c.multiplier = mult;
  c.targets = {VariationTarget::scalar(var), VariationTarget::scalar(mu)};
  c.value = [](const VectorXd& a) { return a[0] - a[1]; };
  c.gradient = [](const VectorXd&) { return grad({1.0, -1.0}); };
  return c;
}

ProblemSetup linear_setup(const std::map<std::string, double>& prm, const ProblemOptions& opt) {
  ProblemSetup s;
  ProblemParams P;
  P.alpha = get(prm, "alpha");
  P.T = get(prm, "T0");
  const double w = 2 * kPi / P.T;
  P.p = VectorXd::Constant(1, linear_response_phase(w));
  auto prob = std::make_shared<PeriodicBvp>(linear_scalar_field(), P, opt.N, opt.degree, InteriorPoint::one_minus_delay());
  prob->activate("T");
  prob->activate("phi");
  prob->add_parameter("mu_A");

  // x(0) + x(1 - α/T) = cos φ, i.e. the forcing-side form of the periodicity/phase relation
  PointConstraint phase;
  phase.name = "phase";
  phase.multiplier = "lambda_3";
  phase.targets = {VariationTarget::x0(), VariationTarget::xbeta(), VariationTarget::scalar("phi")};
  phase.value = [](const VectorXd& a) { return a[0] + a[1] - std::cos(a[2]); };
  phase.gradient = [](const VectorXd& a) { return grad({1.0, 1.0, std::sin(a[2])}); };
  phase.vanishing_multiplier = true;
  prob->register_constraint(std::move(phase));

  PointConstraint amp;
  amp.name = "amplitude";
  amp.multiplier = "eta_A";
  amp.targets = {VariationTarget::x0(), VariationTarget::scalar("mu_A")};
  amp.value = [](const VectorXd& a) { return a[0] - a[1]; };
  amp.gradient = [](const VectorXd&) { return grad({1.0, -1.0}); };
  prob->register_constraint(std::move(amp));
  prob->set_objective("mu_A");

  const double r = linear_amplitude(w);
  PeriodicOrbitState o;
  o.T = P.T;
  o.alpha = P.alpha;
  o.p = P.p;
  o.x = SegmentedFunction::sample(prob->mesh_for(P.alpha, P.T), 1,
                                  [&](double tau) { return VectorXd::Constant(1, r * std::cos(2 * kPi * tau)); });
  o.mu["mu_A"] = r;
  s.seed = opt.refine ? refine_primal(*prob, prob->pack(o), {"T"}) : prob->pack(o);

  StageSpec s1 = stage("primal", false, "BP", "branch-switch");
  s1.h_max = 0.05;
  StageSpec s2 = stage("adjoint", true, "UZ", "stop");
  s2.terminal_monitor = "eta_A";
  s2.terminal_value = 1.0;
  s2.h_max = 1e3;
  s.stages.stages = {s1, s2};
  s.periodic = prob;
  return s;
}

ProblemSetup duffing_setup(const std::map<std::string, double>& prm, const ProblemOptions& opt) {
  ProblemSetup s;
  DuffingCoefficients c;
  c.zeta = get(prm, "zeta");
  c.mu = get(prm, "mu");
  c.a = get(prm, "a");
  c.b = get(prm, "b");
  c.gamma = get(prm, "gamma");
  const DdeVectorField field = duffing_pd_field(c);

  // steady state from direct simulation, time-shifted so that x1 peaks at τ = 0
  ProblemParams sim;
  sim.alpha = get(prm, "alpha0");
  sim.T = get(prm, "T0");
  sim.p = VectorXd::Zero(1);
  const double t_end = get(prm, "t_end");
  const double dt = std::min(sim.alpha / 4, sim.T / 400);
  const Trajectory traj =
      simulate_dde(field, sim, [](double) { return VectorXd(VectorXd::Zero(2)); }, t_end, dt);
  double t_peak = t_end - 2 * sim.T, best = -INFINITY;
  for (int k = 0; k <= 4000; ++k) {
    const double t = t_end - 2 * sim.T + sim.T * k / 4000.0;
    const double v = traj.at(t)[0];
    if (v > best) {
      best = v;
      t_peak = t;
    }
  }

  ProblemParams P = sim;
  P.p[0] = std::fmod(2 * kPi * t_peak / sim.T, 2 * kPi);
  auto prob = std::make_shared<PeriodicBvp>(field, P, opt.N, opt.degree);
  prob->activate("T");
  prob->activate("alpha");
  prob->activate("phi");
  prob->add_parameter("mu_A");
  prob->add_parameter("mu_alpha");

  PointConstraint phase;
  phase.name = "phase";
  phase.multiplier = "lambda_ph";
  phase.targets = {VariationTarget::x0()};
  phase.value = [](const VectorXd& a) { return a[1]; };
  phase.gradient = [](const VectorXd&) { return grad({0.0, 1.0}); };
  phase.vanishing_multiplier = true;
  prob->register_constraint(std::move(phase));

  PointConstraint amp;
  amp.name = "amplitude";
  amp.multiplier = "eta_A";
  amp.targets = {VariationTarget::x0(), VariationTarget::scalar("mu_A")};
  amp.value = [](const VectorXd& a) { return a[0] - a[2]; };
  amp.gradient = [](const VectorXd&) { return grad({1.0, 0.0, -1.0}); };
  prob->register_constraint(std::move(amp));
  prob->register_constraint(link("delay", "eta_alpha", "alpha", "mu_alpha"));
  prob->set_objective("mu_A");

  PeriodicOrbitState o;
  o.T = P.T;
  o.alpha = P.alpha;
  o.p = P.p;
  o.x = SegmentedFunction::sample(prob->mesh_for(P.alpha, P.T), 2,
                                  [&](double tau) { return traj.at(t_peak + P.T * tau); });
  o.mu["mu_A"] = best;
  o.mu["mu_alpha"] = P.alpha;
  s.seed = opt.refine ? refine_primal(*prob, prob->pack(o), {"T", "mu_alpha"}) : prob->pack(o);

  StageSpec s1 = stage("primal", false, "BP", "branch-switch");
  s1.fix["mu_alpha"] = std::nullopt;
  s1.h_max = 0.2;
  StageSpec s2 = stage("amplitude", true, "UZ", "restart");
  s2.fix["mu_alpha"] = std::nullopt;
  s2.terminal_monitor = "eta_A";
  s2.terminal_value = 1.0;
  s2.h_max = 1e3;
  StageSpec s3 = stage("delay", true, "UZ", "stop");
  s3.fix["eta_A"] = 1.0;
  s3.terminal_monitor = "eta_alpha";
  s3.terminal_value = 0.0;
  s3.max_steps = 400;
  s3.h_max = 0.2;
  s.stages.stages = {s1, s2, s3};
  s.periodic = prob;
  return s;
}

ProblemSetup hopf_setup(const std::map<std::string, double>& prm, const ProblemOptions& opt) {
  ProblemSetup s;
  const double rho = get(prm, "rho");
  const TorusState seed = hopf_torus_seed(rho, get(prm, "T0"), get(prm, "omega0"), opt.harmonics, opt.N, opt.degree);
  ProblemParams P;
  P.alpha = 1.0;
  P.T = seed.T;
  P.p = seed.p;
  auto prob = std::make_shared<TorusBvp>(hopf_torus_field(), P, rho, opt.harmonics, opt.N, opt.degree);
  prob->activate("T");
  prob->activate("omega");
  prob->add_parameter("mu_omega");
  prob->register_constraint(link("frequency", "eta_omega", "omega", "mu_omega"));
  prob->set_objective("mu_omega");
  prob->set_reference(seed.Vstar);
  s.seed = prob->pack(seed);

  StageSpec s1 = stage("primal", false, "BP", "branch-switch");
  s1.h_max = 0.2;
  StageSpec s2 = stage("adjoint", true, "UZ", "stop");
  s2.terminal_monitor = "eta_omega";
  s2.terminal_value = 1.0;
  s2.h_max = 1e3;
  s.stages.stages = {s1, s2};
  s.torus = prob;
  return s;
}

}  // namespace

const LagrangianProblem& ProblemSetup::problem() const {
  if (torus) return *torus;
  if (periodic) return *periodic;
  throw ContractViolation("empty problem setup");
}

std::vector<std::string> builtin_problems() { return {"linear_scalar", "duffing_pd", "hopf_torus"}; }

std::map<std::string, double> default_parameters(const std::string& name) {
  if (name == "linear_scalar") return {{"alpha", 1.0}, {"T0", 4.0}};
  if (name == "duffing_pd")
    return {{"zeta", 0.05}, {"mu", 0.05},    {"a", 0.05},    {"b", -0.05},
            {"gamma", 0.5}, {"alpha0", 0.1}, {"T0", 2 * kPi}, {"t_end", 300.0}};
  if (name == "hopf_torus") return {{"rho", 0.6618}, {"T0", 4.8}, {"omega0", 0.4}};
  throw ContractViolation("unknown problem '" + name + "'");
}

ProblemSetup make_problem(const std::string& name, const ProblemOptions& opt) {
  std::map<std::string, double> prm = default_parameters(name);
  for (const auto& [k, v] : opt.parameters) {
    if (!prm.count(k)) throw ContractViolation("problem '" + name + "' has no parameter '" + k + "'");
    prm[k] = v;
  }
  ProblemSetup s = name == "linear_scalar" ? linear_setup(prm, opt)
                   : name == "duffing_pd"  ? duffing_setup(prm, opt)
                                           : hopf_setup(prm, opt);
  s.name = name;
  s.parameters = prm;
  return s;
}

VectorXd refine_primal(const LagrangianProblem& problem, const VectorXd& u, const std::vector<std::string>& pinned,
                       double tol) {
  SubsetSystem sub(problem, u, false, pinned);
  if (sub.free_count() != sub.equation_count())
    throw ContractViolation("pinned set does not make the primal system square");
  const NewtonResult nr = newton_correct([&](const VectorXd& v) { return sub.residual(v); },
                                         [&](const VectorXd& v) { return sub.jacobian(v); }, sub.restrict(u), tol, 25);
  return sub.expand(nr.u);
}

TorusState hopf_torus_seed(double rho, double T, double omega0, int H, int N, int degree) {
  ProblemParams P;
  P.alpha = 1.0;
  P.T = T;
  P.p = VectorXd::Constant(1, omega0);
  PeriodicBvp rot(hopf_corotating_field(rho), P, N, degree);
  rot.activate("omega");
  PointConstraint anchor;
  anchor.name = "anchor";
  anchor.multiplier = "lambda_anchor";
  anchor.targets = {VariationTarget::x0()};
  anchor.value = [](const VectorXd& a) { return a[1]; };
  anchor.gradient = [](const VectorXd&) { return grad({0.0, 1.0}); };
  rot.register_constraint(std::move(anchor));

  PeriodicOrbitState o;
  o.T = T;
  o.alpha = 1.0;
  o.p = P.p;
  o.x = SegmentedFunction::sample(rot.mesh_for(1.0, T), 2, [](double) { return VectorXd((VectorXd(2) << 1.0, 0.0).finished()); });
  const VectorXd u = refine_primal(rot, rot.pack(o), {});
  const PeriodicOrbitState R = rot.orbit(u);

  TorusState st;
  st.H = H;
  st.rho = rho;
  st.T = T;
  st.alpha = 1.0;
  st.p = R.p;
  st.mu["mu_omega"] = R.p[0];
  const auto phi = angle_grid(2 * H + 1);
  const Mesh& mesh = R.x.mesh();
  for (double ph : phi)
    st.segments.push_back(SegmentedFunction::sample(mesh, 2, [&](double tau) {
      const VectorXd r = eval(R.x, tau);
      const double th = ph + 2 * kPi * rho * tau;
      return VectorXd((VectorXd(2) << std::cos(th) * r[0] - std::sin(th) * r[1],
                       std::sin(th) * r[0] + std::cos(th) * r[1]).finished());
    }));
  st.Vstar.resize(2 * H + 1, 2);
  for (int i = 0; i < 2 * H + 1; ++i) st.Vstar.row(i) = eval(st.segments[i], 0.0).transpose();
  return st;
}

}  // namespace ddeopt
