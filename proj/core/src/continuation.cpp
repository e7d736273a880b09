#include "ddeopt/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ddeopt/errors.hpp"

namespace ddeopt {

Index ContinuationSystem::coordinate(const std::string& name) const {
  for (const auto& c : coordinates)
    if (c.first == name) return c.second;
  throw ContractViolation("unknown continuation coordinate '" + name + "'");
}

bool Chart::has_label(const std::string& l) const { return std::find(labels.begin(), labels.end(), l) != labels.end(); }

const Event* ContinuationRun::find(const std::string& type, const std::string& name) const {
  for (const auto& e : events)
    if (e.type == type && (name.empty() || e.name == name)) return &e;
  return nullptr;
}

NewtonResult newton_correct(const std::function<VectorXd(const VectorXd&)>& F,
                            const std::function<SparseMatrix(const VectorXd&)>& J, const VectorXd& u0, double tol,
                            int max_iter, SolverKind solver) {
  NewtonResult res;
  res.u = u0;
  VectorXd r = F(res.u);
  if (r.size() != u0.size()) throw ContractViolation("newton_correct needs a square system");
  double norm = r.lpNorm<Eigen::Infinity>();
  LinearSolver lu(solver);
  for (int it = 0; it < max_iter && !(norm <= tol); ++it) {
    lu.factor(J(res.u));
    const VectorXd du = lu.solve(-r);
    double lam = 1.0;
    VectorXd best_u, best_r;
    double best = INFINITY;
    for (int k = 0; k <= 8; ++k, lam *= 0.5) {
      VectorXd v = res.u + lam * du;
      VectorXd rv;
      try {
        rv = F(v);
      } catch (const RegimeFault&) {
        continue;
      } catch (const NumericFault&) {
        continue;
      }
      const double nv = rv.lpNorm<Eigen::Infinity>();
      if (!std::isfinite(nv)) continue;
      if (nv < best) {
        best = nv;
        best_u = std::move(v);
        best_r = std::move(rv);
      }
      if (nv < norm) break;
    }
    if (!std::isfinite(best)) throw SolverFault("Newton step left the admissible set", norm);
    res.u = std::move(best_u);
    r = std::move(best_r);
    norm = best;
    res.iterations = it + 1;
  }
  res.residual = norm;
  if (!(norm <= tol)) {
    std::ostringstream os;
    os << "Newton did not converge in " << max_iter << " iterations (residual " << norm << ")";
    throw SolverFault(os.str(), norm);
  }
  return res;
}

VectorXd bordered_residual(const ContinuationSystem& sys, const VectorXd& u, const VectorXd& u0, const VectorXd& t,
                           double h) {
  const VectorXd F = sys.residual(u);
  VectorXd r(F.size() + 1);
  r << F, t.dot(u - u0) - h;
  return r;
}

SparseMatrix bordered_matrix(const SparseMatrix& J, const VectorXd& t) {
  SparseMatrix B(J.rows() + 1, J.cols());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(J.nonZeros() + t.size());
  for (Index k = 0; k < J.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(J, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
  for (Index c = 0; c < t.size(); ++c)
    if (t[c] != 0.0) trip.emplace_back(J.rows(), c, t[c]);
  B.setFromTriplets(trip.begin(), trip.end());
  return B;
}

VectorXd tangent_at(const ContinuationSystem& sys, const VectorXd& u, const VectorXd& t_ref, SolverKind solver,
                    DetIndicator* det) {
  LinearSolver lu(solver);
  lu.factor(bordered_matrix(sys.jacobian(u), t_ref));
  VectorXd e = VectorXd::Zero(u.size());
  e[e.size() - 1] = 1.0;
  VectorXd t = lu.solve(e);
  t.normalize();
  if (t.dot(t_ref) < 0) t = -t;
  if (det) *det = {lu.sign_det(), lu.log_abs_det()};
  return t;
}

namespace {

VectorXd eval_monitors(const ContinuationSystem& sys, const VectorXd& u) {
  if (!sys.monitors) return VectorXd();
  VectorXd m = sys.monitors(u);
  if (!m.allFinite()) throw NumericFault("non-finite monitor value");
  return m;
}

void finish_chart(const ContinuationSystem& sys, Chart& c, const VectorXd& t_ref, SolverKind solver) {
  DetIndicator det;
  c.tangent = tangent_at(sys, c.u, t_ref, solver, &det);
  c.bp = sys.bp_test ? sys.bp_test(c.u) : det;
  c.monitors = eval_monitors(sys, c.u);
}

double named_value(const ContinuationSystem& sys, const Chart& c, const std::string& name) {
  for (const auto& k : sys.coordinates)
    if (k.first == name) return c.u[k.second];
  for (std::size_t i = 0; i < sys.monitor_names.size(); ++i)
    if (sys.monitor_names[i] == name) return c.monitors[static_cast<Index>(i)];
  throw ContractViolation("unknown monitor '" + name + "'");
}

struct Indicator {
  std::string type, name;
  std::function<double(const Chart&)> g;
};

std::vector<Indicator> indicators(const ContinuationSystem& sys, const ContinuationSettings& s, double bp_ref) {
  std::vector<Indicator> out;
  for (const auto& f : s.folds) {
    const Index idx = sys.coordinate(f);
    out.push_back({"FP", f, [idx](const Chart& c) { return c.tangent[idx]; }});
  }
  for (const auto& z : s.user_zeros)
    out.push_back({"UZ", z.monitor, [&sys, z](const Chart& c) { return named_value(sys, c, z.monitor) - z.value; }});
  for (const auto& b : s.bounds) {
    if (std::isfinite(b.lo))
      out.push_back({"EP", b.name, [&sys, b](const Chart& c) { return named_value(sys, c, b.name) - b.lo; }});
    if (std::isfinite(b.hi))
      out.push_back({"EP", b.name, [&sys, b](const Chart& c) { return b.hi - named_value(sys, c, b.name); }});
  }
  if (s.detect_bp)
    out.push_back({"BP", "", [bp_ref](const Chart& c) {
                     return c.bp.sign * std::exp(std::clamp(c.bp.log_abs - bp_ref, -700.0, 700.0));
                   }});
  return out;
}

bool changes_sign(double a, double b) { return (a < 0) != (b < 0); }

// point on the curve at arclength sigma along A's tangent
Chart chart_at(const ContinuationSystem& sys, const Chart& A, double sigma, const ContinuationSettings& s) {
  Chart c;
  const VectorXd v0 = A.u + sigma * A.tangent;
  auto F = [&](const VectorXd& v) { return bordered_residual(sys, v, A.u, A.tangent, sigma); };
  auto J = [&](const VectorXd& v) { return bordered_matrix(sys.jacobian(v), A.tangent); };
  c.u = newton_correct(F, J, v0, s.tol, s.max_iter, s.solver).u;
  if (sys.admissible) sys.admissible(c.u);
  finish_chart(sys, c, A.tangent, s.solver);
  c.s = A.s + sigma;
  c.step = A.step;
  return c;
}

// Illinois iteration on sigma in (0, h)
Chart locate(const ContinuationSystem& sys, const Chart& A, const Chart& B, const Indicator& ind,
             const ContinuationSettings& s) {
  double lo = 0.0, hi = B.s - A.s;
  double glo = ind.g(A), ghi = ind.g(B);
  Chart best = std::abs(glo) < std::abs(ghi) ? A : B;
  double gbest = std::min(std::abs(glo), std::abs(ghi));
  int side = 0;
  for (int it = 0; it < 60; ++it) {
    double sigma = (lo * ghi - hi * glo) / (ghi - glo);
    if (!(sigma > lo && sigma < hi)) sigma = 0.5 * (lo + hi);
    Chart c = chart_at(sys, A, sigma, s);
    const double g = ind.g(c);
    if (std::abs(g) <= gbest) {
      best = c;
      gbest = std::abs(g);
    }
    if (std::abs(g) <= s.event_tol || hi - lo <= 1e-13 * std::max(1.0, std::abs(B.s))) break;
    if (changes_sign(g, ghi)) {
      lo = sigma;
      glo = g;
      if (side == -1) ghi *= 0.5;
      side = -1;
    } else {
      hi = sigma;
      ghi = g;
      if (side == 1) glo *= 0.5;
      side = 1;
    }
  }
  best.labels = {ind.type};
  return best;
}

struct Located {
  Chart chart;
  Event event;
};

std::vector<Located> scan(const ContinuationSystem& sys, const Chart& A, const Chart& B, const ContinuationSettings& s) {
  std::vector<Located> out;
  for (const auto& ind : indicators(sys, s, A.bp.log_abs)) {
    const double ga = ind.g(A), gb = ind.g(B);
    if (!std::isfinite(ga) || !std::isfinite(gb)) throw NumericFault("non-finite event indicator " + ind.type);
    if (!changes_sign(ga, gb)) continue;
    Located l;
    l.chart = locate(sys, A, B, ind, s);
    l.event = {ind.type, ind.name, 0};
    out.push_back(std::move(l));
  }
  std::sort(out.begin(), out.end(), [](const Located& a, const Located& b) { return a.chart.s < b.chart.s; });
  return out;
}

bool is_terminal(const ContinuationSettings& s, const Event& e) {
  if (e.type == "EP") return true;
  return !s.terminal_type.empty() && e.type == s.terminal_type && (s.terminal_name.empty() || e.name == s.terminal_name);
}

}  // namespace

Chart initial_chart(const ContinuationSystem& sys, const VectorXd& u0, const VectorXd& direction,
                    const ContinuationSettings& settings) {
  if (u0.size() != sys.dim || direction.size() != sys.dim) throw ContractViolation("initial chart has wrong length");
  const VectorXd d = direction.normalized();
  auto F = [&](const VectorXd& v) { return bordered_residual(sys, v, u0, d, 0.0); };
  auto J = [&](const VectorXd& v) { return bordered_matrix(sys.jacobian(v), d); };
  Chart c;
  c.u = newton_correct(F, J, u0, settings.tol, settings.max_iter, settings.solver).u;
  if (sys.admissible) sys.admissible(c.u);
  finish_chart(sys, c, d, settings.solver);
  c.labels = {"EP"};
  return c;
}

ContinuationRun continue_branch(const ContinuationSystem& sys, const Chart& start, const ContinuationSettings& s) {
  ContinuationRun run;
  run.settings = s;
  Chart first = start;
  first.tangent = start.tangent.normalized();
  if (first.monitors.size() == 0 && sys.monitors) first.monitors = eval_monitors(sys, first.u);
  if (first.bp.sign == 0) {
    DetIndicator det;
    try {
      (void)tangent_at(sys, first.u, first.tangent, s.solver, &det);
    } catch (const SolverFault&) {
      det = {1, 0.0};
    }
    first.bp = sys.bp_test ? sys.bp_test(first.u) : det;
  }
  if (first.labels.empty()) first.labels = {"EP"};
  run.charts.push_back(first);

  double h = std::clamp(s.h0, s.h_min, s.h_max);
  std::string last_failure;
  bool regime_failure = false;
  for (int step = 1; step <= s.max_steps; ++step) {
    const Chart& A = run.charts.back();
    Chart B;
    bool ok = false;
    while (!ok) {
      try {
        B = chart_at(sys, A, h, s);
        ok = true;
      } catch (const RegimeFault& e) {
        last_failure = e.what();
        regime_failure = true;
      } catch (const DomainFault& e) {
        last_failure = e.what();
        regime_failure = true;
      } catch (const SolverFault& e) {
        last_failure = e.what();
        regime_failure = false;
      } catch (const NumericFault& e) {
        last_failure = e.what();
        regime_failure = false;
      }
      if (!ok) {
        h *= 0.5;
        if (h < s.h_min) {
          if (regime_failure) {
            run.charts.back().labels.push_back("EP");
            run.events.push_back({"EP", "regime", run.charts.size() - 1});
            run.stop_reason = "left admissible regime: " + last_failure;
            return run;
          }
          throw StallFault("step size fell below h_min after " + std::to_string(step - 1) +
                           " steps; last failure: " + last_failure);
        }
      }
    }
    B.step = step;
    B.labels.clear();

    const Chart A_copy = run.charts.back();
    auto located = scan(sys, A_copy, B, s);
    bool stop = false;
    for (auto& l : located) {
      l.chart.step = step;
      run.charts.push_back(l.chart);
      l.event.chart = run.charts.size() - 1;
      run.events.push_back(l.event);
      if (is_terminal(s, l.event)) {
        stop = true;
        run.stop_reason = "terminal event " + l.event.type + (l.event.name.empty() ? "" : " " + l.event.name);
        break;
      }
    }
    if (stop) return run;
    run.charts.push_back(B);

    // fast convergence widens the step; a located event keeps it
    h = std::min(h * 1.3, s.h_max);
  }
  run.charts.back().labels.push_back("EP");
  run.stop_reason = "step budget exhausted";
  return run;
}

std::vector<Event> detect_events(const ContinuationSystem& sys, ContinuationRun& run) {
  std::vector<Chart> charts;
  std::vector<Event> events;
  for (std::size_t k = 0; k < run.charts.size(); ++k) {
    if (k > 0) {
      for (auto& l : scan(sys, charts.back(), run.charts[k], run.settings)) {
        charts.push_back(l.chart);
        l.event.chart = charts.size() - 1;
        events.push_back(l.event);
      }
    }
    charts.push_back(run.charts[k]);
  }
  run.charts = std::move(charts);
  run.events = events;
  return events;
}

Chart switch_branch(const ContinuationSystem& sys, const Chart& bp, SolverKind solver) {
  const SparseMatrix J = sys.jacobian(bp.u);
  const SparseMatrix B = bordered_matrix(J, bp.tangent);
  LinearSolver lu(solver);
  SparseMatrix Bs = B;
  try {
    lu.factor(Bs);
  } catch (const SolverFault&) {
    SparseMatrix I(B.rows(), B.cols());
    I.setIdentity();
    Bs = B + 1e-13 * std::max(1.0, B.norm()) * I;
    lu.factor(Bs);
  }
  VectorXd y(bp.u.size());
  for (Index i = 0; i < y.size(); ++i) y[i] = 1.0 + 0.1 * std::sin(1.0 + i);
  for (int it = 0; it < 6; ++it) {
    y = lu.solve(y);
    y.normalize();
  }
  const double sigma = (B * y).norm();
  if (sigma > 1e-6 * std::max(1.0, J.norm())) {
    std::ostringstream os;
    os << "no null direction at the chart (smallest singular value estimate " << sigma << ")";
    throw NotBranchPoint(os.str());
  }
  y -= y.dot(bp.tangent) * bp.tangent;
  if (y.norm() < 1e-12) throw NotBranchPoint("null direction coincides with the primary tangent");
  Chart c = bp;
  c.tangent = y.normalized();
  c.labels = {"BP"};
  return c;
}

std::string run_csv(const ContinuationSystem& sys, const ContinuationRun& run) {
  std::ostringstream os;
  os << "step,s";
  for (const auto& c : sys.coordinates) os << ',' << c.first;
  for (const auto& m : sys.monitor_names) os << ',' << m;
  os << ",label\n";
  char buf[64];
  for (const auto& ch : run.charts) {
    os << ch.step;
    std::snprintf(buf, sizeof buf, ",%.17g", ch.s);
    os << buf;
    for (const auto& c : sys.coordinates) {
      std::snprintf(buf, sizeof buf, ",%.17g", ch.u[c.second]);
      os << buf;
    }
    for (Index i = 0; i < static_cast<Index>(sys.monitor_names.size()); ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g", i < ch.monitors.size() ? ch.monitors[i] : NAN);
      os << buf;
    }
    os << ',';
    for (std::size_t l = 0; l < ch.labels.size(); ++l) os << (l ? "|" : "") << ch.labels[l];
    os << '\n';
  }
  return os.str();
}

void write_run_csv(const ContinuationSystem& sys, const ContinuationRun& run, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << run_csv(sys, run);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw Error("cannot rename onto " + path);
}

}  // namespace ddeopt
