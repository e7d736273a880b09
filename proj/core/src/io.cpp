#include "ddeopt/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ddeopt/errors.hpp"
#include "ddeopt/fourier.hpp"

namespace ddeopt {

using nlohmann::json;

namespace {

struct Position {
  int line = 0, column = 0;
};

Position position_of(const std::string& text, std::size_t byte) {
  Position p{1, 1};
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++p.line;
      p.column = 1;
    } else {
      ++p.column;
    }
  }
  return p;
}

// nlohmann does not keep source positions; locate a key by its first quoted occurrence after `from`
Position key_position(const std::string& text, const std::string& key, std::size_t from = 0) {
  const std::size_t at = text.find("\"" + key + "\"", from);
  if (at == std::string::npos) return {};
  return position_of(text, at);
}

class Checker {
 public:
  explicit Checker(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const std::string& what, const std::string& key) const {
    const Position p = key.empty() ? Position{} : key_position(text_, key);
    std::ostringstream os;
    if (p.line) os << "line " << p.line << ", column " << p.column << ": ";
    os << what;
    throw ConfigError(os.str(), p.line, p.column);
  }

  void keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) const {
    if (!j.is_object()) fail(where + " must be an object", "");
    for (auto it = j.begin(); it != j.end(); ++it) {
      bool ok = false;
      for (const char* a : allowed) ok |= it.key() == a;
      if (!ok) fail("unknown key \"" + it.key() + "\" in " + where, it.key());
    }
  }

  double number(const json& j, const std::string& key) const {
    if (!j.is_number()) fail("\"" + key + "\" must be a number", key);
    return j.get<double>();
  }
  int integer(const json& j, const std::string& key) const {
    if (!j.is_number_integer()) fail("\"" + key + "\" must be an integer", key);
    return j.get<int>();
  }
  std::string string(const json& j, const std::string& key) const {
    if (!j.is_string()) fail("\"" + key + "\" must be a string", key);
    return j.get<std::string>();
  }

 private:
  const std::string& text_;
};

StageSpec parse_stage_checked(const json& j, const Checker& ck) {
  ck.keys(j, "stage", {"name", "equations", "fix", "terminal", "action", "max_steps", "h0", "h_max", "direction"});
  StageSpec s;
  if (!j.contains("name")) ck.fail("stage without \"name\"", "stages");
  s.name = ck.string(j["name"], "name");
  if (j.contains("equations")) {
    const std::string e = ck.string(j["equations"], "equations");
    if (e != "primal" && e != "full") ck.fail("\"equations\" must be \"primal\" or \"full\"", "equations");
    s.full = e == "full";
  }
  if (j.contains("fix")) {
    if (!j["fix"].is_object()) ck.fail("\"fix\" must be an object", "fix");
    for (auto it = j["fix"].begin(); it != j["fix"].end(); ++it) {
      if (it->is_null()) s.fix[it.key()] = std::nullopt;
      else s.fix[it.key()] = ck.number(*it, it.key());
    }
  }
  if (j.contains("terminal")) {
    const json& t = j["terminal"];
    ck.keys(t, "terminal", {"event", "monitor", "value"});
    if (t.contains("event")) s.terminal_event = ck.string(t["event"], "event");
    if (s.terminal_event != "BP" && s.terminal_event != "UZ" && s.terminal_event != "FP")
      ck.fail("terminal event must be BP, UZ or FP", "event");
    if (t.contains("monitor")) s.terminal_monitor = ck.string(t["monitor"], "monitor");
    if (t.contains("value")) s.terminal_value = ck.number(t["value"], "value");
    if (s.terminal_event == "UZ" && s.terminal_monitor.empty()) ck.fail("UZ terminal needs a \"monitor\"", "terminal");
  }
  if (j.contains("action")) {
    s.action = ck.string(j["action"], "action");
    if (s.action != "branch-switch" && s.action != "restart" && s.action != "stop")
      ck.fail("\"action\" must be branch-switch, restart or stop", "action");
  }
  if (j.contains("max_steps")) s.max_steps = ck.integer(j["max_steps"], "max_steps");
  if (j.contains("h0")) s.h0 = ck.number(j["h0"], "h0");
  if (j.contains("h_max")) s.h_max = ck.number(j["h_max"], "h_max");
  if (j.contains("direction")) s.direction = ck.string(j["direction"], "direction");
  return s;
}

std::vector<double> to_vector(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ProblemOptions RunConfig::options() const {
  ProblemOptions o;
  o.parameters = parameters;
  o.N = N;
  o.degree = degree;
  o.harmonics = harmonics;
  return o;
}

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const Position p = position_of(text, e.byte > 0 ? e.byte - 1 : 0);
    std::ostringstream os;
    os << "line " << p.line << ", column " << p.column << ": malformed JSON (" << e.what() << ")";
    throw ConfigError(os.str(), p.line, p.column);
  }
  const Checker ck(text);
  ck.keys(j, "config", {"problem", "parameters", "mesh", "stages", "solver", "output", "seed", "simulation"});
  RunConfig c;
  if (!j.contains("problem")) ck.fail("missing \"problem\"", "");
  c.problem = ck.string(j["problem"], "problem");
  bool known = false;
  for (const auto& b : builtin_problems()) known |= b == c.problem;
  if (!known) ck.fail("unknown problem \"" + c.problem + "\"", "problem");
  const auto defaults = default_parameters(c.problem);
  if (j.contains("parameters")) {
    if (!j["parameters"].is_object()) ck.fail("\"parameters\" must be an object", "parameters");
    for (auto it = j["parameters"].begin(); it != j["parameters"].end(); ++it) {
      if (!defaults.count(it.key())) ck.fail("unknown key \"" + it.key() + "\" in parameters", it.key());
      c.parameters[it.key()] = ck.number(*it, it.key());
    }
  }
  if (j.contains("mesh")) {
    const json& m = j["mesh"];
    ck.keys(m, "mesh", {"N", "degree", "harmonics"});
    if (m.contains("N")) c.N = ck.integer(m["N"], "N");
    if (m.contains("degree")) c.degree = ck.integer(m["degree"], "degree");
    if (m.contains("harmonics")) c.harmonics = ck.integer(m["harmonics"], "harmonics");
    if (c.N < 1 || c.degree < 1 || c.degree > 20 || c.harmonics < 0) ck.fail("mesh sizes out of range", "mesh");
  }
  if (j.contains("solver")) {
    try {
      c.solver = parse_solver_kind(ck.string(j["solver"], "solver"));
    } catch (const ContractViolation& e) {
      ck.fail(e.what(), "solver");
    }
  }
  if (j.contains("stages")) {
    if (!j["stages"].is_array() || j["stages"].empty()) ck.fail("\"stages\" must be a non-empty array", "stages");
    StageScript s;
    s.solver = c.solver;
    for (const auto& st : j["stages"]) s.stages.push_back(parse_stage_checked(st, ck));
    c.stages = s;
  }
  c.output = j.contains("output") ? ck.string(j["output"], "output") : "out/" + c.problem;
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) ck.fail("\"seed\" must be a non-negative integer", "seed");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("simulation")) {
    const json& s = j["simulation"];
    ck.keys(s, "simulation", {"t_end", "dt", "T", "alpha", "p", "history"});
    SimulationConfig sc;
    if (s.contains("t_end")) sc.t_end = ck.number(s["t_end"], "t_end");
    if (s.contains("dt")) sc.dt = ck.number(s["dt"], "dt");
    if (s.contains("T")) sc.T = ck.number(s["T"], "T");
    if (s.contains("alpha")) sc.alpha = ck.number(s["alpha"], "alpha");
    for (const char* k : {"p", "history"}) {
      if (!s.contains(k)) continue;
      if (!s[k].is_array()) ck.fail(std::string("\"") + k + "\" must be an array", k);
      std::vector<double>& dst = std::string(k) == "p" ? sc.p : sc.history;
      for (const auto& v : s[k]) dst.push_back(ck.number(v, k));
    }
    c.simulation = sc;
  }
  return c;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig load_run_config(const std::string& path) { return parse_run_config(read_file(path)); }

StageSpec parse_stage(const json& j) {
  const std::string text = j.dump();
  return parse_stage_checked(j, Checker(text));
}

json stage_to_json(const StageSpec& s) {
  json fix = json::object();
  for (const auto& [k, v] : s.fix) fix[k] = v ? json(*v) : json(nullptr);
  json term = {{"event", s.terminal_event}};
  if (!s.terminal_monitor.empty()) {
    term["monitor"] = s.terminal_monitor;
    term["value"] = s.terminal_value;
  }
  return {{"name", s.name}, {"equations", s.full ? "full" : "primal"}, {"fix", fix}, {"terminal", term},
          {"action", s.action}, {"max_steps", s.max_steps}, {"h0", s.h0}, {"h_max", s.h_max},
          {"direction", s.direction}};
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out) throw Error("write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, p);
}

json certificate_json(const StationaryCertificate& c) {
  return {{"certified", c.certified},     {"primal_residual", c.primal_residual},
          {"adjoint_residual", c.adjoint_residual}, {"trivial", c.trivial},
          {"multipliers", c.multipliers}, {"special", c.special},
          {"parameters", c.parameters},   {"reasons", c.reasons},
          {"history", c.history}};
}

json solution_json(const ProblemSetup& setup, const ProblemOptions& opt, const VectorXd& u,
                   const StationaryCertificate* cert) {
  const auto& L = setup.problem().layout();
  json named = json::object();
  for (std::size_t k = 0; k < L.names.size(); ++k) named[L.names[k]] = u[L.indices[k]];
  json j = {{"problem", setup.name},
            {"kind", setup.is_torus() ? "torus" : "periodic"},
            {"parameters", opt.parameters},
            {"mesh", {{"N", opt.N}, {"degree", opt.degree}, {"harmonics", opt.harmonics}}},
            {"named", named},
            {"primal_size", L.primal_size},
            {"u", to_vector(u)}};
  if (setup.is_torus()) {
    const MatrixXd& R = setup.torus->reference();
    json rows = json::array();
    for (Index i = 0; i < R.rows(); ++i) rows.push_back(to_vector(R.row(i).transpose()));
    j["reference"] = rows;
    j["rho"] = setup.torus->rho();
  } else {
    const PeriodicBvp& P = *setup.periodic;
    const ProblemParams pp = P.params_at(u);
    j["breakpoints"] = P.mesh_for(pp.alpha, pp.T).breakpoints();
  }
  if (cert) j["certificate"] = certificate_json(*cert);
  return j;
}

LoadedSolution load_solution(const json& j) {
  LoadedSolution s;
  s.raw = j;
  try {
    const std::string name = j.at("problem").get<std::string>();
    s.options.parameters = j.at("parameters").get<std::map<std::string, double>>();
    s.options.N = j.at("mesh").at("N").get<int>();
    s.options.degree = j.at("mesh").at("degree").get<int>();
    s.options.harmonics = j.at("mesh").at("harmonics").get<int>();
    std::map<std::string, double> prm = default_parameters(name);
    for (const auto& [k, v] : s.options.parameters) prm[k] = v;
    const auto u = j.at("u").get<std::vector<double>>();
    s.u = Eigen::Map<const VectorXd>(u.data(), static_cast<Index>(u.size()));
    s.setup.name = name;
    s.setup.parameters = prm;
    if (name == "hopf_torus") {
      const auto rows = j.at("reference").get<std::vector<std::vector<double>>>();
      const int M = 2 * s.options.harmonics + 1;
      if (static_cast<int>(rows.size()) != M) throw ContractViolation("reference has the wrong number of angles");
      MatrixXd R(M, 2);
      for (int i = 0; i < M; ++i)
        for (int c = 0; c < 2; ++c) R(i, c) = rows[i].at(c);
      ProblemParams P;
      P.alpha = 1.0;
      P.T = j.at("named").at("T").get<double>();
      P.p = VectorXd::Constant(1, j.at("named").at("omega").get<double>());
      auto prob = std::make_shared<TorusBvp>(hopf_torus_field(), P, prm.at("rho"), s.options.harmonics, s.options.N,
                                             s.options.degree);
      prob->activate("T");
      prob->activate("omega");
      prob->add_parameter("mu_omega");
      PointConstraint c;
      c.name = "frequency";
      c.multiplier = "eta_omega";
      c.targets = {VariationTarget::scalar("omega"), VariationTarget::scalar("mu_omega")};
      c.value = [](const VectorXd& a) { return a[0] - a[1]; };
      c.gradient = [](const VectorXd&) { return VectorXd((VectorXd(2) << 1.0, -1.0).finished()); };
      prob->register_constraint(std::move(c));
      prob->set_objective("mu_omega");
      prob->set_reference(R);
      s.setup.torus = prob;
    } else {
      s.setup = make_problem(name, s.options);
    }
    if (s.u.size() != s.setup.problem().layout().total())
      throw ContractViolation("stored unknown vector does not match the rebuilt problem");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed solution file: ") + e.what());
  }
  return s;
}

LoadedSolution load_solution_file(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed solution file: ") + e.what());
  }
  return load_solution(j);
}

std::string export_orbit_csv(const PeriodicBvp& problem, const VectorXd& u, int samples) {
  const PeriodicOrbitState o = problem.orbit(u);
  std::ostringstream os;
  os << "tau";
  for (int c = 0; c < o.x.dim(); ++c) os << ",x" << c + 1;
  os << '\n';
  for (int k = 0; k < samples; ++k) {
    const double tau = static_cast<double>(k) / (samples - 1);
    const VectorXd v = eval(o.x, tau, k == samples - 1 ? Side::Left : Side::Right);
    os << fmt(tau);
    for (Index c = 0; c < v.size(); ++c) os << ',' << fmt(v[c]);
    os << '\n';
  }
  return os.str();
}

std::string export_multiplier_csv(const PeriodicBvp& problem, const VectorXd& u, int samples) {
  const PeriodicAdjointState a = problem.adjoint_state(u);
  const auto& bp = a.lambda_f.mesh().breakpoints();
  struct Row {
    double tau;
    int side;  // -1 left, 0 plain, 1 right
  };
  std::vector<Row> rows;
  for (int k = 0; k < samples; ++k) {
    const double tau = static_cast<double>(k) / (samples - 1);
    bool at_bp = false;
    for (std::size_t b = 1; b + 1 < bp.size(); ++b) at_bp |= std::abs(tau - bp[b]) < 1e-12;
    if (!at_bp) rows.push_back({tau, 0});
  }
  for (std::size_t b = 1; b + 1 < bp.size(); ++b) {
    rows.push_back({bp[b], -1});
    rows.push_back({bp[b], 1});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& x, const Row& y) { return x.tau < y.tau || (x.tau == y.tau && x.side < y.side); });
  std::ostringstream os;
  os << "tau,side";
  for (int c = 0; c < a.lambda_f.dim(); ++c) os << ",lambda" << c + 1;
  os << '\n';
  for (const Row& r : rows) {
    const Side s = r.side < 0 || r.tau >= 1.0 ? Side::Left : Side::Right;
    const VectorXd v = eval(a.lambda_f, r.tau, s);
    os << fmt(r.tau) << ',' << (r.side < 0 ? "left" : r.side > 0 ? "right" : "");
    for (Index c = 0; c < v.size(); ++c) os << ',' << fmt(v[c]);
    os << '\n';
  }
  return os.str();
}

std::string export_torus_csv(const TorusBvp& problem, const VectorXd& u, int samples) {
  const TorusState st = problem.state(u);
  const auto phi = angle_grid(st.M());
  std::ostringstream os;
  os << "phi,tau";
  for (int c = 0; c < problem.field().n; ++c) os << ",V" << c + 1;
  os << '\n';
  for (int i = 0; i < st.M(); ++i)
    for (int k = 0; k < samples; ++k) {
      const double tau = static_cast<double>(k) / (samples - 1);
      const VectorXd v = eval(st.segments[i], tau, k == samples - 1 ? Side::Left : Side::Right);
      os << fmt(phi[i]) << ',' << fmt(tau);
      for (Index c = 0; c < v.size(); ++c) os << ',' << fmt(v[c]);
      os << '\n';
    }
  return os.str();
}

}  // namespace ddeopt
