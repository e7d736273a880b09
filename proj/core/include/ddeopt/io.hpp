#pragma once

#include <cstdint>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "ddeopt/problems.hpp"
#include "ddeopt/staged.hpp"

namespace ddeopt {

struct SimulationConfig {
  double t_end = 200.0;
  double dt = 0.01;
  std::optional<double> T, alpha;
  std::vector<double> p;        // field parameters; defaults to zeros
  std::vector<double> history;  // constant history; defaults to zeros
};

struct RunConfig {
  std::string problem;
  std::map<std::string, double> parameters;
  int N = 10;
  int degree = 4;
  int harmonics = 5;
  std::optional<StageScript> stages;  // built-in default when absent
  SolverKind solver = SolverKind::Auto;
  std::string output;                 // default out/<problem>
  std::uint64_t seed = 0;
  std::optional<SimulationConfig> simulation;

  ProblemOptions options() const;
};

// Strict parsing: unknown keys and type mismatches raise ConfigError carrying line/column.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);
StageSpec parse_stage(const nlohmann::json& j);
nlohmann::json stage_to_json(const StageSpec& s);

// temp file + rename
void atomic_write(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

nlohmann::json certificate_json(const StationaryCertificate& c);

// problem name, options, named scalars, unknown vector, torus reference
nlohmann::json solution_json(const ProblemSetup& setup, const ProblemOptions& opt, const VectorXd& u,
                             const StationaryCertificate* cert = nullptr);

struct LoadedSolution {
  ProblemSetup setup;
  ProblemOptions options;
  VectorXd u;
  nlohmann::json raw;
};
// rebuilds the problem from the stored name and options; the seed is not recomputed
LoadedSolution load_solution(const nlohmann::json& j);
LoadedSolution load_solution_file(const std::string& path);

// (τ, x...) at `samples` uniform points
std::string export_orbit_csv(const PeriodicBvp& problem, const VectorXd& u, int samples = 401);
// (τ, λ_f...) at uniform points; interior breakpoints appear twice, left then right limit
std::string export_multiplier_csv(const PeriodicBvp& problem, const VectorXd& u, int samples = 401);
// (φ, τ, V...) on the angle grid × `samples` τ points
std::string export_torus_csv(const TorusBvp& problem, const VectorXd& u, int samples = 101);

// full-precision CSV number
std::string fmt(double v);

}  // namespace ddeopt
