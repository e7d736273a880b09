#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numbers>

#include "ddeopt/errors.hpp"
#include "ddeopt/io.hpp"
#include "ddeopt/oracles.hpp"
#include "ddeopt/problems.hpp"
#include "ddeopt/simulate.hpp"

using namespace ddeopt;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kNotCertified = 1, kConfig = 2, kStage = 3, kDomain = 4, kKind = 5 };

std::string output_dir(const RunConfig& cfg, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("DDEOPT_OUT"); env && *env) return env;
  return cfg.output;
}

int cmd_run(const std::string& path, const std::string& out_flag, bool quiet) {
  RunConfig cfg;
  ProblemSetup setup;
  try {
    cfg = load_run_config(path);
    setup = make_problem(cfg.problem, cfg.options());
  } catch (const ConfigError& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return kConfig;
  } catch (const ContractViolation& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return kConfig;
  }
  StageScript script = cfg.stages ? *cfg.stages : setup.stages;
  script.solver = cfg.solver;
  const std::string dir = output_dir(cfg, out_flag);
  StagedResult res;
  try {
    res = run_stages(script, setup.problem(), setup.seed);
  } catch (const StageFault& e) {
    std::cerr << "stage failure in '" << e.stage() << "': " << e.what() << "\n";
    return kStage;
  } catch (const Error& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return kStage;
  }
  for (std::size_t k = 0; k < res.stages.size(); ++k) {
    const auto& st = res.stages[k];
    atomic_write(dir + "/stage" + std::to_string(k + 1) + "_" + st.spec.name + ".csv", run_csv(st.system, st.run));
  }
  const ProblemOptions opt = cfg.options();
  atomic_write(dir + "/solution.json", solution_json(setup, opt, res.solution, &res.certificate).dump(2));
  atomic_write(dir + "/certificate.json", certificate_json(res.certificate).dump(2));
  if (!quiet) {
    json summary = {{"certified", res.certificate.certified},
                    {"parameters", res.certificate.parameters},
                    {"multipliers", res.certificate.multipliers},
                    {"output", dir}};
    std::cout << summary.dump(2) << "\n";
  }
  if (!res.certificate.certified) {
    for (const auto& r : res.certificate.reasons) std::cerr << "not certified: " << r << "\n";
    return kNotCertified;
  }
  return kOk;
}

int cmd_simulate(const std::string& path, const std::string& out_flag) {
  RunConfig cfg;
  try {
    cfg = load_run_config(path);
    if (!cfg.simulation) throw ConfigError("config has no \"simulation\" section");
  } catch (const ConfigError& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return kConfig;
  }
  const auto prm = [&] {
    auto d = default_parameters(cfg.problem);
    for (const auto& [k, v] : cfg.parameters) d[k] = v;
    return d;
  }();
  DdeVectorField field;
  ProblemParams P;
  if (cfg.problem == "linear_scalar") {
    field = linear_scalar_field();
    P.alpha = prm.at("alpha");
    P.T = prm.at("T0");
  } else if (cfg.problem == "duffing_pd") {
    field = duffing_pd_field({prm.at("zeta"), prm.at("mu"), prm.at("a"), prm.at("b"), prm.at("gamma")});
    P.alpha = prm.at("alpha0");
    P.T = prm.at("T0");
  } else {
    field = hopf_torus_field();
    P.alpha = 1.0;
    P.T = prm.at("T0");
  }
  const SimulationConfig& sc = *cfg.simulation;
  if (sc.T) P.T = *sc.T;
  if (sc.alpha) P.alpha = *sc.alpha;
  P.p = VectorXd::Zero(field.q);
  if (cfg.problem == "hopf_torus") P.p[0] = prm.at("omega0");
  if (!sc.p.empty()) {
    if (static_cast<int>(sc.p.size()) != field.q) {
      std::cerr << path << ": simulation.p needs " << field.q << " entries\n";
      return kConfig;
    }
    for (int k = 0; k < field.q; ++k) P.p[k] = sc.p[k];
  }
  VectorXd h0 = VectorXd::Zero(field.n);
  if (!sc.history.empty()) {
    if (static_cast<int>(sc.history.size()) != field.n) {
      std::cerr << path << ": simulation.history needs " << field.n << " entries\n";
      return kConfig;
    }
    for (int k = 0; k < field.n; ++k) h0[k] = sc.history[k];
  }
  Trajectory tr;
  try {
    tr = simulate_dde(field, P, [&](double) { return h0; }, sc.t_end, sc.dt);
  } catch (const Error& e) {
    std::cerr << "simulation failed: " << e.what() << "\n";
    return kDomain;
  }
  std::ostringstream os;
  os << "t";
  for (int c = 0; c < field.n; ++c) os << ",x" << c + 1;
  os << '\n';
  for (std::size_t k = 0; k < tr.x.size(); ++k) {
    os << fmt(tr.t0 + tr.dt * static_cast<double>(k));
    for (int c = 0; c < field.n; ++c) os << ',' << fmt(tr.x[k][c]);
    os << '\n';
  }
  const std::string dir = output_dir(cfg, out_flag);
  atomic_write(dir + "/trajectory.csv", os.str());
  json out = {{"t_end", tr.t_end()},
              {"steps", tr.x.size() - 1},
              {"final_period_amplitude", final_period_amplitude(tr, P.T)},
              {"output", dir + "/trajectory.csv"}};
  std::cout << out.dump(2) << "\n";
  return kOk;
}

int cmd_export(const std::string& path, const std::string& kind, const std::string& out, int samples) {
  std::string csv;
  if (kind == "branch") {
    std::string text;
    try {
      text = read_file(path);
    } catch (const ConfigError& e) {
      std::cerr << e.what() << "\n";
      return kConfig;
    }
    if (text.rfind("step,", 0) != 0) {
      std::cerr << "export: '" << path << "' is not a branch CSV\n";
      return kKind;
    }
    csv = text;
  } else {
    LoadedSolution sol;
    try {
      sol = load_solution_file(path);
    } catch (const Error& e) {
      std::cerr << "export: " << e.what() << "\n";
      return kKind;
    }
    const bool torus = sol.setup.is_torus();
    if ((kind == "torus") != torus) {
      std::cerr << "export: kind '" << kind << "' does not match a " << (torus ? "torus" : "periodic-orbit")
                << " solution\n";
      return kKind;
    }
    if (kind == "orbit") csv = export_orbit_csv(*sol.setup.periodic, sol.u, samples > 0 ? samples : 401);
    else if (kind == "multiplier") csv = export_multiplier_csv(*sol.setup.periodic, sol.u, samples > 0 ? samples : 401);
    else csv = export_torus_csv(*sol.setup.torus, sol.u, samples > 0 ? samples : 101);
  }
  if (out.empty()) std::cout << csv;
  else atomic_write(out, csv);
  return kOk;
}

MsParams ms_from(double zeta, double mu, double a, double b, double gamma) { return {zeta, mu, a, b, gamma}; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Staged continuation for optimal periodic and quasiperiodic responses of delay equations"};
  app.require_subcommand(1);

  std::string cfg_path, out_dir;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "execute the stage script of a run configuration");
  run->add_option("config", cfg_path, "run configuration (JSON)")->required();
  run->add_option("--out", out_dir, "output directory (overrides DDEOPT_OUT and the config)");
  run->add_flag("--quiet", quiet, "no summary on stdout");

  auto* sim = app.add_subcommand("simulate", "direct simulation by the method of steps");
  sim->add_option("config", cfg_path, "run configuration with a \"simulation\" section")->required();
  sim->add_option("--out", out_dir, "output directory");

  std::string sol_path, kind, out_file;
  int samples = 0;
  auto* exp = app.add_subcommand("export", "CSV export of a stored solution or branch");
  exp->add_option("solution", sol_path, "solution.json, or a stage CSV for --kind branch")->required();
  exp->add_option("--kind", kind, "orbit | multiplier | branch | torus")
      ->required()
      ->check(CLI::IsMember({"orbit", "multiplier", "branch", "torus"}));
  exp->add_option("--out", out_file, "output file (stdout if omitted)");
  exp->add_option("--samples", samples, "number of τ samples");

  auto* orc = app.add_subcommand("oracle", "closed-form and multiple-scales reference values");
  orc->require_subcommand(1);
  double omega = 0, zeta = 0.05, mu = 0.05, a = 0.05, b = -0.05, gamma = 0.5, alpha = std::numbers::pi / 4, sigma = 0;
  bool b_minus_a = false;
  auto add_ms = [&](CLI::App* c) {
    c->add_option("--zeta", zeta);
    c->add_option("--mu", mu);
    c->add_option("--a", a);
    c->add_option("--b", b);
    c->add_option("--gamma", gamma);
    c->add_flag("--b-equals-minus-a", b_minus_a, "set b = -a");
  };
  auto* o_amp = orc->add_subcommand("linear-amplitude", "r(ω) of the linear example");
  o_amp->add_option("--omega", omega)->required();
  auto* o_opt = orc->add_subcommand("linear-optimum", "maximizer of r(ω)");
  auto* o_rho = orc->add_subcommand("ms-rho-max", "multiple-scales peak amplitude");
  add_ms(o_rho);
  o_rho->add_option("--alpha", alpha);
  auto* o_delay = orc->add_subcommand("ms-delay", "delay minimizing the multiple-scales peak");
  add_ms(o_delay);
  auto* o_resp = orc->add_subcommand("ms-response", "frequency-amplitude roots at a detuning");
  add_ms(o_resp);
  o_resp->add_option("--alpha", alpha);
  o_resp->add_option("--sigma", sigma)->required();
  auto* o_peak = orc->add_subcommand("ms-peak-detuning", "detuning of the response peak");
  add_ms(o_peak);
  o_peak->add_option("--alpha", alpha);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfig;
  }

  try {
    if (*run) return cmd_run(cfg_path, out_dir, quiet);
    if (*sim) return cmd_simulate(cfg_path, out_dir);
    if (*exp) return cmd_export(sol_path, kind, out_file, samples);

    if (b_minus_a) b = -a;
    const MsParams ms = ms_from(zeta, mu, a, b, gamma);
    const json ms_in = {{"zeta", zeta}, {"mu", mu}, {"a", a}, {"b", b}, {"gamma", gamma}};
    json out;
    if (*o_amp) {
      out = {{"inputs", {{"omega", omega}}}, {"outputs", {{"r", linear_amplitude(omega)}}}};
    } else if (*o_opt) {
      const LinearOptimum L = linear_optimum();
      out = {{"inputs", json::object()},
             {"outputs", {{"omega", L.omega}, {"r", L.r}, {"T", L.T}, {"t_crit", L.t_crit}, {"phase", L.phase}}}};
    } else if (*o_rho) {
      json in = ms_in;
      in["alpha"] = alpha;
      out = {{"inputs", in}, {"outputs", {{"rho_max", ms_rho_max(ms, alpha)}}}};
    } else if (*o_delay) {
      out = {{"inputs", ms_in}, {"outputs", {{"alpha", ms_optimal_delay(ms)}}}};
    } else if (*o_resp) {
      json in = ms_in;
      in["alpha"] = alpha;
      in["sigma"] = sigma;
      out = {{"inputs", in}, {"outputs", {{"rho", ms_frequency_response(ms, alpha, sigma)}}}};
    } else if (*o_peak) {
      json in = ms_in;
      in["alpha"] = alpha;
      out = {{"inputs", in}, {"outputs", {{"sigma", ms_peak_detuning(ms, alpha)}, {"rho_max", ms_rho_max(ms, alpha)}}}};
    }
    std::cout << out.dump(2) << "\n";
    return kOk;
  } catch (const DomainFault& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kDomain;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomain;
  }
}
