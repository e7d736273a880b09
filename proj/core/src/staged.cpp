#include "ddeopt/staged.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ddeopt/errors.hpp"

namespace ddeopt {

namespace {

SparseMatrix select_columns(const SparseMatrix& J, const std::vector<Index>& map, Index ncols) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(J.nonZeros());
  for (Index k = 0; k < J.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(J, k); it; ++it)
      if (map[it.col()] >= 0) t.emplace_back(it.row(), map[it.col()], it.value());
  SparseMatrix S(J.rows(), ncols);
  S.setFromTriplets(t.begin(), t.end());
  return S;
}

SparseMatrix select_rows(const SparseMatrix& J, const std::vector<Index>& rowmap, Index nrows) {
  std::vector<Eigen::Triplet<double>> t;
  for (Index k = 0; k < J.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(J, k); it; ++it)
      if (rowmap[it.row()] >= 0) t.emplace_back(rowmap[it.row()], it.col(), it.value());
  SparseMatrix S(nrows, J.cols());
  S.setFromTriplets(t.begin(), t.end());
  return S;
}

}  // namespace

SubsetSystem::SubsetSystem(const LagrangianProblem& problem, VectorXd base, bool full,
                           const std::vector<std::string>& pinned)
    : problem_(&problem), base_(std::move(base)), full_(full) {
  const auto& L = problem.layout();
  if (base_.size() != L.total()) throw ContractViolation("base vector does not match the problem layout");
  std::vector<char> pin(L.total(), 0);
  for (const auto& p : pinned) pin[L.index(p)] = 1;
  if (!full_)
    for (Index i = L.primal_size; i < L.total(); ++i) pin[i] = 1;
  column_map_.assign(L.total(), -1);
  for (Index i = 0; i < L.total(); ++i)
    if (!pin[i]) {
      column_map_[i] = static_cast<Index>(free_.size());
      free_.push_back(i);
    }
}

Index SubsetSystem::equation_count() const {
  return problem_->primal_equations() + (full_ ? problem_->adjoint_equations() : 0);
}

VectorXd SubsetSystem::restrict(const VectorXd& u) const {
  VectorXd v(free_count());
  for (Index k = 0; k < v.size(); ++k) v[k] = u[free_[k]];
  return v;
}

VectorXd SubsetSystem::expand(const VectorXd& v) const {
  VectorXd u = base_;
  for (Index k = 0; k < v.size(); ++k) u[free_[k]] = v[k];
  return u;
}

VectorXd SubsetSystem::residual(const VectorXd& v) const {
  const VectorXd u = expand(v);
  const VectorXd p = problem_->primal_residual(u);
  if (!full_) return p;
  const VectorXd a = problem_->adjoint_residual(u);
  VectorXd r(p.size() + a.size());
  r << p, a;
  return r;
}

SparseMatrix SubsetSystem::jacobian(const VectorXd& v) const {
  JacobianRequest req{true, full_, true, full_};
  return select_columns(problem_->jacobian(expand(v), req), column_map_, free_count());
}

SparseMatrix SubsetSystem::adjoint_block(const VectorXd& u) const {
  const auto& L = problem_->layout();
  const SparseMatrix J = problem_->jacobian(u, {false, true, false, true});
  std::vector<Index> map(L.total(), -1);
  for (Index i = L.primal_size; i < L.total(); ++i) map[i] = i - L.primal_size;
  return select_columns(J, map, L.multiplier_size);
}

ContinuationSystem SubsetSystem::system(SolverKind solver, bool adjoint_bp_test) const {
  ContinuationSystem sys;
  sys.dim = free_count();
  const auto& L = problem_->layout();
  std::vector<std::pair<std::string, Index>> pinned_names;
  for (std::size_t k = 0; k < L.names.size(); ++k) {
    const Index c = column_map_[L.indices[k]];
    if (c >= 0) sys.coordinates.emplace_back(L.names[k], c);
    else pinned_names.emplace_back(L.names[k], L.indices[k]);
  }
  for (const auto& p : pinned_names) sys.monitor_names.push_back(p.first);
  sys.residual = [this](const VectorXd& v) { return residual(v); };
  sys.jacobian = [this](const VectorXd& v) { return jacobian(v); };
  sys.monitors = [this, pinned_names](const VectorXd& v) {
    VectorXd m(static_cast<Index>(pinned_names.size()));
    for (std::size_t k = 0; k < pinned_names.size(); ++k) m[static_cast<Index>(k)] = base_[pinned_names[k].second];
    (void)v;
    return m;
  };
  sys.admissible = [this](const VectorXd& v) { problem_->check_regime(expand(v)); };
  if (adjoint_bp_test)
    sys.bp_test = [this, solver](const VectorXd& v) {
      LinearSolver lu(solver);
      try {
        lu.factor(adjoint_block(expand(v)));
      } catch (const SolverFault&) {
        return DetIndicator{0, -INFINITY};
      }
      return DetIndicator{lu.sign_det(), lu.log_abs_det()};
    };
  return sys;
}

VectorXd null_vector(const SparseMatrix& A, SolverKind solver, double* residual) {
  LinearSolver lu(solver);
  try {
    lu.factor(A);
  } catch (const SolverFault&) {
    SparseMatrix I(A.rows(), A.cols());
    I.setIdentity();
    lu.factor(A + 1e-13 * std::max(1.0, A.norm()) * I);
  }
  VectorXd y(A.cols());
  for (Index i = 0; i < y.size(); ++i) y[i] = 1.0 + 0.1 * std::sin(1.0 + i);
  y.normalize();
  for (int it = 0; it < 8; ++it) {
    y = lu.solve(y);
    y.normalize();
  }
  if (residual) *residual = (A * y).norm() / std::max(1.0, A.norm());
  return y;
}

StationaryCertificate certify(const LagrangianProblem& problem, const VectorXd& u, double tol) {
  StationaryCertificate c;
  const auto& L = problem.layout();
  c.primal_residual = problem.primal_residual(u).lpNorm<Eigen::Infinity>();
  c.adjoint_residual = problem.adjoint_residual(u).lpNorm<Eigen::Infinity>();
  for (const auto& t : problem.trivial_residuals(u)) c.trivial[t.first] = t.second;
  for (const auto& m : problem.multipliers()) c.multipliers[m] = u[L.index(m)];
  for (const auto& m : problem.special_multipliers()) c.special[m] = u[L.index(m)];
  for (const auto& p : problem.parameters()) c.parameters[p] = u[L.index(p)];
  std::ostringstream os;
  if (!(c.primal_residual <= tol)) {
    os << "primal residual " << c.primal_residual << " > " << tol;
    c.reasons.push_back(os.str());
    os.str("");
  }
  if (!(c.adjoint_residual <= tol)) {
    os << "adjoint residual " << c.adjoint_residual << " > " << tol;
    c.reasons.push_back(os.str());
    os.str("");
  }
  for (const auto& t : c.trivial)
    if (!(std::abs(t.second) <= tol)) {
      os << "variation with respect to " << t.first << " is " << t.second;
      c.reasons.push_back(os.str());
      os.str("");
    }
  c.certified = c.reasons.empty();
  return c;
}

SpecialMultiplierReport monitor_special_multipliers(const LagrangianProblem& problem, const VectorXd& u,
                                                    double threshold) {
  SpecialMultiplierReport r;
  for (const auto& m : problem.special_multipliers()) {
    const double v = u[problem.layout().index(m)];
    r.values[m] = v;
    r.max_abs = std::max(r.max_abs, std::abs(v));
  }
  r.exceeded = r.max_abs > threshold;
  return r;
}

namespace {

double objective_slope(const ContinuationSystem& sys, const Chart& c, const std::string& name) {
  for (const auto& k : sys.coordinates)
    if (k.first == name) return c.tangent[k.second];
  return 0.0;
}

double coordinate_value(const ContinuationSystem& sys, const Chart& c, const std::string& name, bool& found) {
  for (const auto& k : sys.coordinates)
    if (k.first == name) {
      found = true;
      return c.u[k.second];
    }
  found = false;
  return 0.0;
}

void orient(const ContinuationSystem& sys, Chart& c, const StageSpec& spec, const std::string& objective) {
  double slope = 0.0;
  const std::string& d = spec.direction;
  if (d == "auto" && spec.terminal_event == "UZ") {
    bool found = false;
    const double cur = coordinate_value(sys, c, spec.terminal_monitor, found);
    if (found) slope = objective_slope(sys, c, spec.terminal_monitor) * (spec.terminal_value - cur);
  } else if (d == "auto" || d == "uphill") {
    slope = objective_slope(sys, c, objective);
  } else if (d == "downhill") {
    slope = -objective_slope(sys, c, objective);
  } else if (!d.empty() && (d[0] == '+' || d[0] == '-')) {
    slope = (d[0] == '+' ? 1.0 : -1.0) * objective_slope(sys, c, d.substr(1));
  } else {
    throw ContractViolation("unknown stage direction '" + d + "'");
  }
  if (slope < 0) c.tangent = -c.tangent;
}

ContinuationSettings settings_for(const StageSpec& spec, const std::string& objective, SolverKind solver) {
  ContinuationSettings s;
  s.h0 = spec.h0;
  s.h_max = spec.h_max;
  s.max_steps = spec.max_steps;
  s.solver = solver;
  s.terminal_type = spec.terminal_event;
  if (!objective.empty()) s.folds.push_back(objective);
  if (spec.terminal_event == "BP") s.detect_bp = true;
  if (spec.terminal_event == "UZ") {
    s.user_zeros.push_back({spec.terminal_monitor, spec.terminal_value});
    s.terminal_name = spec.terminal_monitor;
  }
  if (spec.terminal_event == "FP") {
    s.folds = {spec.terminal_monitor.empty() ? objective : spec.terminal_monitor};
    s.terminal_name = s.folds[0];
  }
  return s;
}

bool has_terminal(const ContinuationRun& run) { return run.stop_reason.rfind("terminal event", 0) == 0; }

}  // namespace

StagedResult run_stages(const StageScript& script, const LagrangianProblem& problem, const VectorXd& initial_guess) {
  const auto& L = problem.layout();
  if (initial_guess.size() != L.total()) throw ContractViolation("initial guess does not match the problem layout");
  if (script.stages.empty()) throw ContractViolation("empty stage script");
  StagedResult result;
  VectorXd u = initial_guess;
  u.tail(L.multiplier_size).setZero();
  const std::string objective = problem.objective();

  for (std::size_t i = 0; i < script.stages.size(); ++i) {
    const StageSpec& spec = script.stages[i];
    StageRun sr;
    sr.spec = spec;
    std::vector<std::string> pinned;
    for (const auto& f : spec.fix) {
      if (!L.has(f.first)) throw StageFault(spec.name, "cannot fix unknown variable '" + f.first + "'");
      if (f.second) u[L.index(f.first)] = *f.second;
      pinned.push_back(f.first);
    }
    sr.subset = std::make_shared<SubsetSystem>(problem, u, spec.full, pinned);
    const Index dim = sr.subset->free_count() - sr.subset->equation_count();
    if (dim != 1) {
      std::ostringstream os;
      os << "solution set has dimension " << dim << " (" << sr.subset->free_count() << " unknowns, "
         << sr.subset->equation_count() << " equations); adjust the fixed variables";
      throw StageFault(spec.name, os.str());
    }
    const bool custom_bp = !spec.full && spec.terminal_event == "BP";
    sr.system = sr.subset->system(script.solver, custom_bp);
    ContinuationSettings settings = settings_for(spec, objective, script.solver);

    Chart start;
    const StageRun* prev = i > 0 ? &result.stages[i - 1] : nullptr;
    try {
      if (prev && prev->spec.action == "branch-switch") {
        if (!prev->spec.full && spec.full) {
          // secondary branch: primal fixed, multipliers along the adjoint null vector
          double res = 0.0;
          const VectorXd lam = null_vector(sr.subset->adjoint_block(u), script.solver, &res);
          if (res > 1e-6) {
            std::ostringstream os;
            os << "adjoint system is not singular at the switch point (residual " << res << ")";
            throw NotBranchPoint(os.str());
          }
          VectorXd dir = VectorXd::Zero(L.total());
          dir.tail(L.multiplier_size) = lam;
          start.u = sr.subset->restrict(u);
          start.tangent = sr.subset->restrict(dir);
          if (start.tangent.norm() == 0.0) throw NotBranchPoint("null vector vanishes on the free multipliers");
          start.tangent.normalize();
        } else {
          Chart bp = prev->run.charts.back();
          Chart sw = switch_branch(prev->system, bp, script.solver);
          start.u = sr.subset->restrict(prev->subset->expand(sw.u));
          start.tangent = sr.subset->restrict(prev->subset->expand(sw.tangent) - prev->subset->expand(VectorXd::Zero(sw.u.size())));
          start.tangent.normalize();
        }
        start.labels = {"BP"};
        settings.h0 = settings.h_min * 10;
      } else {
        VectorXd dir = VectorXd::Zero(L.total());
        std::string anchor;
        if (prev)
          for (const auto& c : sr.system.coordinates) {
            bool was_free = false;
            for (const auto& pc : prev->system.coordinates) was_free |= pc.first == c.first;
            if (!was_free) {
              anchor = c.first;
              break;
            }
          }
        if (anchor.empty() && L.has("T") && sr.subset->restrict(VectorXd::Unit(L.total(), L.index("T"))).norm() > 0)
          anchor = "T";
        if (anchor.empty()) anchor = objective;
        dir[L.index(anchor)] = 1.0;
        start = initial_chart(sr.system, sr.subset->restrict(u), sr.subset->restrict(dir), settings);
      }
    } catch (const Error& e) {
      throw StageFault(spec.name, std::string("could not start: ") + e.what());
    }
    orient(sr.system, start, spec, objective);

    try {
      sr.run = continue_branch(sr.system, start, settings);
      if (!has_terminal(sr.run)) {
        ContinuationSettings more = settings;
        more.max_steps = 2 * settings.max_steps;
        Chart from = sr.run.charts.back();
        from.labels.clear();
        ContinuationRun ext = continue_branch(sr.system, from, more);
        const std::size_t off = sr.run.charts.size() - 1;
        sr.run.charts.back().labels.erase(
            std::remove(sr.run.charts.back().labels.begin(), sr.run.charts.back().labels.end(), "EP"),
            sr.run.charts.back().labels.end());
        for (std::size_t k = 1; k < ext.charts.size(); ++k) sr.run.charts.push_back(ext.charts[k]);
        for (auto e : ext.events) {
          e.chart += off;
          sr.run.events.push_back(e);
        }
        sr.run.stop_reason = ext.stop_reason;
      }
    } catch (const Error& e) {
      throw StageFault(spec.name, e.what());
    }
    if (!has_terminal(sr.run))
      throw StageFault(spec.name, "no " + spec.terminal_event + " event within the step budget (" + sr.run.stop_reason + ")");
    u = sr.subset->expand(sr.run.charts.back().u);
    if (spec.terminal_event == "UZ" && L.has(spec.terminal_monitor) &&
        std::find(pinned.begin(), pinned.end(), spec.terminal_monitor) == pinned.end()) {
      // the located zero satisfies the target only to the event tolerance; re-solve with it pinned
      VectorXd up = u;
      up[L.index(spec.terminal_monitor)] = spec.terminal_value;
      std::vector<std::string> pin = pinned;
      pin.push_back(spec.terminal_monitor);
      SubsetSystem sq(problem, up, spec.full, pin);
      if (sq.free_count() == sq.equation_count()) {
        try {
          const NewtonResult nr = newton_correct([&](const VectorXd& v) { return sq.residual(v); },
                                                 [&](const VectorXd& v) { return sq.jacobian(v); }, sq.restrict(up),
                                                 settings.tol * 1e-2, settings.max_iter, script.solver);
          u = sq.expand(nr.u);
          sr.run.charts.back().u = sr.subset->restrict(u);
          if (sr.system.monitors) sr.run.charts.back().monitors = sr.system.monitors(sr.run.charts.back().u);
        } catch (const SolverFault&) {
          // keep the located point
        }
      }
    }
    sr.terminal = u;
    result.stages.push_back(std::move(sr));
    if (spec.action == "stop") break;
  }
  result.solution = u;
  result.certificate = certify(problem, u);
  for (const auto& st : result.stages)
    for (const auto& e : st.run.events) {
      std::ostringstream os;
      os << st.spec.name << ": " << e.type << (e.name.empty() ? "" : " " + e.name) << " at chart " << e.chart;
      result.certificate.history.push_back(os.str());
    }
  return result;
}

std::vector<GradientEntry> adjoint_gradient_check(const LagrangianProblem& problem, const VectorXd& u,
                                                  const std::vector<std::string>& pinned, double h,
                                                  SolverKind solver) {
  const auto& L = problem.layout();
  const Index P = L.primal_size, m = L.multiplier_size;
  const std::string obj = problem.objective();
  VectorXd u0 = u;
  u0.tail(m).setZero();

  // adjoint rows minus the variations of pinned scalars, plus trivial rows of free μ's
  const Index A = problem.adjoint_equations();
  std::vector<Index> rowmap(A, 0);
  for (const auto& p : pinned) {
    const Index r = problem.variation_row(p);
    if (r >= 0) rowmap[r] = -1;
  }
  Index nrows = 0;
  for (auto& r : rowmap)
    if (r == 0) r = nrows++;
  std::vector<std::string> free_mu;
  for (const auto& p : problem.parameters())
    if (problem.variation_row(p) < 0 && std::find(pinned.begin(), pinned.end(), p) == pinned.end()) free_mu.push_back(p);

  const SparseMatrix Ja = problem.jacobian(u0, {false, true, false, true});
  std::vector<Index> colmap(L.total(), -1);
  for (Index i = P; i < L.total(); ++i) colmap[i] = i - P;
  SparseMatrix Aa = select_rows(select_columns(Ja, colmap, m), rowmap, nrows);

  auto trivial_of = [&](const VectorXd& v) {
    std::map<std::string, double> t;
    for (const auto& x : problem.trivial_residuals(v)) t[x.first] = x.second;
    return t;
  };
  const auto c0 = trivial_of(u0);
  std::vector<Eigen::Triplet<double>> trip;
  for (Index k = 0; k < Aa.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(Aa, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
  VectorXd rhs = VectorXd::Zero(nrows + static_cast<Index>(free_mu.size()));
  for (std::size_t q = 0; q < free_mu.size(); ++q) rhs[nrows + static_cast<Index>(q)] = -c0.at(free_mu[q]);
  for (const auto& name : problem.multipliers()) {
    VectorXd v = u0;
    v[L.index(name)] = 1.0;
    const auto c1 = trivial_of(v);
    for (std::size_t q = 0; q < free_mu.size(); ++q) {
      const double g = c1.at(free_mu[q]) - c0.at(free_mu[q]);
      if (g != 0.0) trip.emplace_back(nrows + static_cast<Index>(q), L.index(name) - P, g);
    }
  }
  const Index nr = nrows + static_cast<Index>(free_mu.size());
  if (nr != m) {
    std::ostringstream os;
    os << "gradient check needs a square adjoint system (" << nr << " equations, " << m << " multipliers)";
    throw ContractViolation(os.str());
  }
  SparseMatrix M(nr, m);
  M.setFromTriplets(trip.begin(), trip.end());
  LinearSolver lu(solver);
  lu.factor(M);
  VectorXd ul = u0;
  ul.tail(m) = lu.solve(rhs);
  const VectorXd ar = problem.adjoint_residual(ul);
  const auto tl = trivial_of(ul);

  std::vector<GradientEntry> out;
  for (const auto& p : pinned) {
    GradientEntry g;
    g.parameter = p;
    const Index row = problem.variation_row(p);
    g.adjoint = row >= 0 ? ar[row] : tl.at(p);

    const Index pi = L.index(p);
    const double step = h * std::max(1.0, std::abs(u0[pi]));
    double val[2];
    for (int sgn = 0; sgn < 2; ++sgn) {
      VectorXd b = u0;
      b[pi] += sgn ? -step : step;
      SubsetSystem sub(problem, b, false, pinned);
      auto F = [&](const VectorXd& v) { return sub.residual(v); };
      auto J = [&](const VectorXd& v) { return sub.jacobian(v); };
      const VectorXd v = newton_correct(F, J, sub.restrict(b), 1e-11, 20, solver).u;
      val[sgn] = sub.expand(v)[L.index(obj)];
    }
    g.finite_difference = (val[0] - val[1]) / (2 * step);
    g.relative_error = std::abs(g.adjoint - g.finite_difference) / std::max(std::abs(g.finite_difference), 1e-3);
    out.push_back(g);
  }
  return out;
}

}  // namespace ddeopt
