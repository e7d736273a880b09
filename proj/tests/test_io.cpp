#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <sys/wait.h>

#include "ddeopt/errors.hpp"
#include "ddeopt/io.hpp"
#include "support.hpp"

using namespace ddeopt;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ddeopt_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("defaults and bundled configs") {
  const RunConfig c = parse_run_config(R"({"problem": "linear_scalar"})");
  CHECK(c.N == 10);
  CHECK(c.degree == 4);
  CHECK(c.harmonics == 5);
  CHECK_FALSE(c.stages.has_value());
  CHECK(c.output == "out/linear_scalar");
  for (const char* f : {"linear.json", "duffing.json", "duffing_b0_weak.json", "duffing_b0_strong.json", "hopf.json"}) {
    const RunConfig b = load_run_config(std::string(DDEOPT_CONFIG_DIR) + "/" + f);
    CHECK(b.stages.has_value());
  }
  const RunConfig d = load_run_config(std::string(DDEOPT_CONFIG_DIR) + "/duffing.json");
  REQUIRE(d.stages->stages.size() == 3);
  CHECK(d.stages->stages[2].fix.at("eta_A") == 1.0);
  CHECK_FALSE(d.stages->stages[0].fix.at("mu_alpha").has_value());
}

TEST_CASE("strict parsing names the offending key and its position") {
  try {
    parse_run_config("{\"problem\": \"linear_scalar\",\n  \"mehs\": {\"N\": 4}}");
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("mehs") != std::string::npos);
    CHECK(e.line() == 2);
    CHECK(e.column() == 3);
  }
  CHECK_THROWS_AS(parse_run_config(R"({"problem": "linear_scalar", "mesh": {"N": "ten"}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"problem": "linear_scalar", "parameters": {"gamma": 1}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"problem": "unknown"})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"problem": "linear_scalar", "stages": [{"name": "a", "action": "jump"}]})"),
                  ConfigError);
  try {
    parse_run_config("{\"problem\": \n ,}");
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("stage specs round trip through json") {
  StageSpec s;
  s.name = "delay";
  s.full = true;
  s.fix["eta_A"] = 1.0;
  s.fix["mu_alpha"] = std::nullopt;
  s.terminal_event = "UZ";
  s.terminal_monitor = "eta_alpha";
  s.terminal_value = 0.0;
  s.max_steps = 17;
  s.h_max = 3.0;
  s.direction = "-T";
  const StageSpec t = parse_stage(stage_to_json(s));
  CHECK(t.name == s.name);
  CHECK(t.full);
  CHECK(t.fix == s.fix);
  CHECK(t.terminal_monitor == "eta_alpha");
  CHECK(t.max_steps == 17);
  CHECK(t.h_max == 3.0);
  CHECK(t.direction == "-T");
}

TEST_CASE("atomic writes leave no temporaries") {
  const fs::path d = scratch("atomic");
  atomic_write((d / "sub" / "a.txt").string(), "one");
  atomic_write((d / "sub" / "a.txt").string(), "two");
  CHECK(read_file((d / "sub" / "a.txt").string()) == "two");
  CHECK_FALSE(fs::exists(d / "sub" / "a.txt.tmp"));
}

TEST_CASE("solutions round trip and export") {
  const ProblemOptions opt;
  const ProblemSetup s = make_problem("linear_scalar", opt);
  const StagedResult r = run_stages(s.stages, s.problem(), s.seed);
  const fs::path d = scratch("solution");
  const std::string path = (d / "solution.json").string();
  atomic_write(path, solution_json(s, opt, r.solution, &r.certificate).dump(2));
  const LoadedSolution back = load_solution_file(path);
  CHECK((back.u - r.solution).norm() == 0.0);
  const double p0 = s.problem().primal_residual(r.solution).norm(), p1 = back.setup.problem().primal_residual(back.u).norm();
  const double a0 = s.problem().adjoint_residual(r.solution).norm(), a1 = back.setup.problem().adjoint_residual(back.u).norm();
  CHECK(std::abs(p0 - p1) <= 1e-12);
  CHECK(std::abs(a0 - a1) <= 1e-12);

  const auto orbit = lines(export_orbit_csv(*back.setup.periodic, back.u));
  REQUIRE(orbit.size() == 402);
  CHECK(orbit[0] == "tau,x1");
  const double T = back.u[back.setup.problem().layout().index("T")];
  const double rc = back.u[back.setup.problem().layout().index("mu_A")];
  for (std::size_t k = 1; k < orbit.size(); ++k) {
    double tau, x;
    std::sscanf(orbit[k].c_str(), "%lf,%lf", &tau, &x);
    CHECK(std::abs(x - rc * std::cos(2 * testing::kPi * tau)) < 1e-3);
  }

  const auto mult = lines(export_multiplier_csv(*back.setup.periodic, back.u));
  const double beta = 1.0 - 1.0 / T;
  int sided = 0;
  for (std::size_t k = 1; k + 1 < mult.size(); ++k) {
    double t0, t1, l0, l1;
    char s0[16] = {0}, s1[16] = {0};
    if (std::sscanf(mult[k].c_str(), "%lf,%15[a-z],%lf", &t0, s0, &l0) != 3) continue;
    if (std::sscanf(mult[k + 1].c_str(), "%lf,%15[a-z],%lf", &t1, s1, &l1) != 3) continue;
    if (std::string(s0) == "left" && std::string(s1) == "right") {
      ++sided;
      CHECK(t0 == t1);
      if (std::abs(t0 - beta) < 1e-12) CHECK(std::abs(l0 - l1) < 1e-3);
    }
  }
  CHECK(sided == 3);
}

TEST_CASE("torus export grid") {
  ProblemOptions opt;
  opt.harmonics = 2;
  opt.N = 4;
  opt.degree = 3;
  const ProblemSetup s = make_problem("hopf_torus", opt);
  const auto rows = lines(export_torus_csv(*s.torus, s.seed, 21));
  CHECK(rows.size() == 1 + 5 * 21);
  CHECK(rows[0] == "phi,tau,V1,V2");
  for (const auto& l : rows) CHECK(l.find("nan") == std::string::npos);
  const nlohmann::json j = solution_json(s, opt, s.seed);
  const LoadedSolution back = load_solution(nlohmann::json::parse(j.dump()));
  CHECK((back.setup.torus->primal_residual(back.u) - s.torus->primal_residual(s.seed)).norm() <= 1e-12);
}

#ifdef DDEOPT_CLI
TEST_CASE("command line exit codes") {
  const fs::path d = scratch("cli");
  auto run = [&](const std::string& args) {
    const std::string cmd = std::string(DDEOPT_CLI) + " " + args + " > " + (d / "stdout").string() + " 2> " +
                            (d / "stderr").string();
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  };
  atomic_write((d / "bad.json").string(), "{\"problem\": \"linear_scalar\", \"mehs\": 1}");
  CHECK(run((d / "bad.json").string().insert(0, "run ")) == 2);
  CHECK(read_file((d / "stderr").string()).find("mehs") != std::string::npos);

  const std::string out = (d / "lin").string();
  CHECK(run("run " + std::string(DDEOPT_CONFIG_DIR) + "/linear.json --quiet --out " + out) == 0);
  const nlohmann::json cert = nlohmann::json::parse(read_file(out + "/certificate.json"));
  CHECK(cert["certified"] == true);
  CHECK(cert["multipliers"]["eta_A"] == 1.0);
  const std::string h1 = lines(read_file(out + "/stage1_primal.csv"))[0];
  CHECK(h1 == "step,s,T,phi,mu_A,lambda_3,eta_A,label");

  CHECK(run("export " + out + "/solution.json --kind torus") == 5);
  CHECK(run("export " + out + "/solution.json --kind branch") == 5);
  CHECK(run("export " + out + "/stage2_adjoint.csv --kind branch") == 0);
  CHECK(run("export " + out + "/solution.json --kind orbit --out " + out + "/orbit.csv") == 0);
  CHECK(lines(read_file(out + "/orbit.csv")).size() == 402);

  CHECK(run("oracle linear-amplitude --omega 0") == 4);
  CHECK(run("oracle linear-amplitude --omega 3.14159265") == 0);
  const nlohmann::json o = nlohmann::json::parse(read_file((d / "stdout").string()));
  CHECK(o["outputs"]["r"].get<double>() == doctest::Approx(0.3183).epsilon(1e-4));
  CHECK(run("oracle ms-delay --b-equals-minus-a") == 0);
  CHECK(nlohmann::json::parse(read_file((d / "stdout").string()))["outputs"]["alpha"].get<double>() ==
        doctest::Approx(0.7853981634).epsilon(1e-10));

  // branch schema is stable between runs
  const std::string out2 = (d / "lin2").string();
  setenv("DDEOPT_OUT", out2.c_str(), 1);
  CHECK(run("run " + std::string(DDEOPT_CONFIG_DIR) + "/linear.json --quiet") == 0);
  unsetenv("DDEOPT_OUT");
  CHECK(lines(read_file(out2 + "/stage2_adjoint.csv"))[0] == lines(read_file(out + "/stage2_adjoint.csv"))[0]);
}
#endif

}
