#include "ddeopt/periodic_bvp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "collocation.hpp"
#include "ddeopt/errors.hpp"

namespace ddeopt {

double InteriorPoint::at(double alpha, double T) const {
  switch (rule) {
    case Rule::Fixed: return value;
    case Rule::OneMinusDelay: return 1.0 - alpha / T;
    default: throw ContractViolation("no interior point configured");
  }
}

double InteriorPoint::d_dalpha(double, double T) const { return rule == Rule::OneMinusDelay ? -1.0 / T : 0.0; }

double InteriorPoint::d_dT(double alpha, double T) const {
  return rule == Rule::OneMinusDelay ? alpha / (T * T) : 0.0;
}

std::vector<double> breakpoint_layout(double alpha, double T, std::optional<double> beta) {
  if (!(alpha > 0.0) || !(T > 0.0)) throw RegimeFault("alpha > 0 and T > 0");
  const double a = alpha / T;
  std::ostringstream os;
  if (!(a < 1.0)) {
    os << "alpha/T < 1 (alpha/T = " << a << ")";
    throw RegimeFault(os.str());
  }
  std::vector<double> raw;
  if (beta) {
    const double b = *beta;
    if (!(2 * a < b)) {
      os << "2 alpha/T < beta (" << 2 * a << " >= " << b << ")";
      throw RegimeFault(os.str());
    }
    if (!(b <= 1.0 - a + kBreakpointMergeTol)) {
      os << "beta <= 1 - alpha/T (" << b << " > " << 1.0 - a << ")";
      throw RegimeFault(os.str());
    }
    raw = {0.0, a, b - a, b, 1.0 - a, 1.0};
  } else {
    if (!(T > 2 * alpha)) {
      os << "T > 2 alpha (T = " << T << ", alpha = " << alpha << ")";
      throw RegimeFault(os.str());
    }
    raw = {0.0, a, 1.0 - a, 1.0};
  }
  std::sort(raw.begin(), raw.end());
  std::vector<double> out;
  for (double v : raw)
    if (out.empty() || v - out.back() > kBreakpointMergeTol) out.push_back(v);
  return out;
}

PeriodicBvp::PeriodicBvp(DdeVectorField field, ProblemParams constants, int N, int degree, InteriorPoint beta)
    : field_(std::move(field)), constants_(std::move(constants)), N_(N), d_(degree), beta_(beta) {
  if (constants_.p.size() != field_.q) throw ContractViolation("parameter vector does not match field.q");
  const Mesh m(breakpoint_layout(constants_.alpha, constants_.T,
                                 beta_.present() ? std::optional<double>(beta_.at(constants_.alpha, constants_.T))
                                                 : std::nullopt),
               N_, d_);
  segments_ = m.segments();
  scalars_.push_back({"T", 0, 0, false});
  scalars_.push_back({"alpha", 1, 0, false});
  for (int k = 0; k < field_.q; ++k) scalars_.push_back({field_.param_names[k], 2, k, false});
  rebuild();
}

void PeriodicBvp::activate(const std::string& scalar) {
  for (auto& s : scalars_)
    if (s.name == scalar) {
      s.active = true;
      rebuild();
      return;
    }
  throw ContractViolation("cannot activate unknown scalar '" + scalar + "'");
}

void PeriodicBvp::add_parameter(const std::string& mu) {
  if (std::find(mus_.begin(), mus_.end(), mu) != mus_.end() ||
      std::any_of(scalars_.begin(), scalars_.end(), [&](const ScalarSlot& s) { return s.name == mu; }))
    throw ContractViolation("parameter name '" + mu + "' already in use");
  mus_.push_back(mu);
  rebuild();
}

void PeriodicBvp::register_constraint(PointConstraint c) {
  if (!c.value) throw ContractViolation("constraint '" + c.name + "' has no value function");
  for (const auto& t : c.targets) {
    if (t.kind == VariationTarget::Kind::StateAtBeta && !beta_.present())
      throw ContractViolation("constraint '" + c.name + "' targets x(beta) but no interior point is configured");
    if (t.kind == VariationTarget::Kind::Scalar) {
      const bool known = std::find(mus_.begin(), mus_.end(), t.name) != mus_.end() ||
                         std::any_of(scalars_.begin(), scalars_.end(), [&](const ScalarSlot& s) { return s.name == t.name; });
      if (!known) throw ContractViolation("constraint '" + c.name + "' targets unknown variable '" + t.name + "'");
    }
  }
  for (const auto& e : constraints_)
    if (e.multiplier == c.multiplier) throw ContractViolation("multiplier '" + c.multiplier + "' already registered");
  constraints_.push_back(std::move(c));
  rebuild();
}

void PeriodicBvp::set_objective(const std::string& mu) {
  if (std::find(mus_.begin(), mus_.end(), mu) == mus_.end())
    throw ContractViolation("objective '" + mu + "' is not a registered continuation parameter");
  objective_ = mu;
}

void PeriodicBvp::rebuild() {
  const int n = field_.n;
  nc_ = static_cast<Index>(segments_) * N_ * (d_ + 1) * n;
  layout_ = UnknownLayout{};
  scalar_rows_.clear();
  Index idx = nc_;
  for (std::size_t s = 0; s < scalars_.size(); ++s)
    if (scalars_[s].active) {
      layout_.add(scalars_[s].name, idx++);
      scalar_rows_.push_back(static_cast<int>(s));
    }
  for (const auto& m : mus_) layout_.add(m, idx++);
  layout_.primal_size = idx;
  idx += nc_ + n;
  for (const auto& c : constraints_) layout_.add(c.multiplier, idx++);
  layout_.multiplier_size = idx - layout_.primal_size;
}

std::vector<std::string> PeriodicBvp::active_scalars() const {
  std::vector<std::string> out;
  for (int s : scalar_rows_) out.push_back(scalars_[s].name);
  return out;
}

std::vector<std::string> PeriodicBvp::parameters() const {
  std::vector<std::string> out = active_scalars();
  out.insert(out.end(), mus_.begin(), mus_.end());
  return out;
}

std::vector<std::string> PeriodicBvp::multipliers() const {
  std::vector<std::string> out;
  for (const auto& c : constraints_) out.push_back(c.multiplier);
  return out;
}

std::vector<std::string> PeriodicBvp::special_multipliers() const {
  std::vector<std::string> out;
  for (const auto& c : constraints_)
    if (c.vanishing_multiplier) out.push_back(c.multiplier);
  return out;
}

std::vector<Index> PeriodicBvp::fd_columns() const {
  std::vector<Index> out;
  for (Index c = nc_; c < layout_.primal_size; ++c) out.push_back(c);
  return out;
}

double PeriodicBvp::scalar_value(const VectorXd& u, const std::string& name) const {
  if (layout_.has(name)) return u[layout_.index(name)];
  for (const auto& s : scalars_)
    if (s.name == name) return s.kind == 0 ? constants_.T : s.kind == 1 ? constants_.alpha : constants_.p[s.p];
  throw ContractViolation("unknown scalar '" + name + "'");
}

ProblemParams PeriodicBvp::params_at(const VectorXd& u) const {
  ProblemParams P = constants_;
  for (int s : scalar_rows_) {
    const auto& sl = scalars_[s];
    const double v = u[layout_.index(sl.name)];
    if (sl.kind == 0) P.T = v;
    else if (sl.kind == 1) P.alpha = v;
    else P.p[sl.p] = v;
  }
  return P;
}

Mesh PeriodicBvp::mesh_for(double alpha, double T) const {
  Mesh m(breakpoint_layout(alpha, T, beta_.present() ? std::optional<double>(beta_.at(alpha, T)) : std::nullopt), N_, d_);
  if (m.segments() != segments_) {
    std::ostringstream os;
    os << "segment count of the breakpoint layout changed (" << segments_ << " -> " << m.segments() << ")";
    throw RegimeFault(os.str());
  }
  return m;
}

Mesh PeriodicBvp::mesh_at(const VectorXd& u) const {
  const ProblemParams P = params_at(u);
  return mesh_for(P.alpha, P.T);
}

void PeriodicBvp::check_regime(const VectorXd& u) const { (void)mesh_at(u); }

Index PeriodicBvp::variation_row(const std::string& name) const {
  for (std::size_t q = 0; q < scalar_rows_.size(); ++q)
    if (scalars_[scalar_rows_[q]].name == name) return adjoint_integral_row() + static_cast<Index>(q);
  return -1;
}

int PeriodicBvp::beta_breakpoint(const Mesh& mesh, double beta) const {
  const auto& b = mesh.breakpoints();
  for (std::size_t i = 1; i + 1 < b.size(); ++i)
    if (std::abs(b[i] - beta) <= kBreakpointMergeTol) return static_cast<int>(i);
  throw ContractViolation("interior point is not a mesh breakpoint");
}

VectorXd PeriodicBvp::constraint_args(const PointConstraint& c, const VectorXd& u, const Mesh& mesh, double beta) const {
  const int n = field_.n;
  Index len = 0;
  for (const auto& t : c.targets) len += t.kind == VariationTarget::Kind::Scalar ? 1 : n;
  VectorXd args(len);
  Index pos = 0;
  for (const auto& t : c.targets) {
    switch (t.kind) {
      case VariationTarget::Kind::StateAtZero:
        args.segment(pos, n) = u.segment(0, n);
        pos += n;
        break;
      case VariationTarget::Kind::StateAtBeta: {
        SegmentedFunction x(mesh, n, u.segment(0, nc_));
        args.segment(pos, n) = eval(x, beta, Side::Left);
        pos += n;
        break;
      }
      case VariationTarget::Kind::Scalar:
        args[pos++] = scalar_value(u, t.name);
        break;
    }
  }
  return args;
}

VectorXd PeriodicBvp::constraint_gradient(const PointConstraint& c, const VectorXd& args) const {
  if (c.gradient) return c.gradient(args);
  VectorXd g(args.size());
  VectorXd a = args;
  for (Index k = 0; k < args.size(); ++k) {
    const double x = args[k], h = 6e-6 * std::max(1.0, std::abs(x));
    a[k] = x + h;
    const double fp = c.value(a);
    a[k] = x - h;
    const double fm = c.value(a);
    a[k] = x;
    g[k] = (fp - fm) / (2 * h);
  }
  return g;
}

void PeriodicBvp::assemble(const VectorXd& u, bool primal, bool adjoint, VectorXd& r, TripletList* J, bool primal_cols,
                           bool multiplier_cols) const {
  if (u.size() != layout_.total()) throw ContractViolation("unknown vector has the wrong length");
  const int n = field_.n;
  const ProblemParams P = params_at(u);
  const Mesh mesh = mesh_for(P.alpha, P.T);
  const int I = mesh.intervals();
  const double beta = beta_.present() ? beta_.at(P.alpha, P.T) : 0.0;

  detail::Engine E;
  E.field = &field_;
  E.mesh = mesh;
  E.n = n;
  E.M = 1;
  E.a = P.alpha / P.T;
  E.params = P;
  E.W_delay = E.W_adv = MatrixXd::Identity(1, 1);
  E.x = {0, nc_};
  E.lam = {layout_.primal_size, nc_};
  for (int s : scalar_rows_) {
    const auto& sl = scalars_[s];
    E.scalar_rows.push_back({sl.kind == 0 ? detail::ScalarKind::T : sl.kind == 1 ? detail::ScalarKind::Alpha
                                                                                   : detail::ScalarKind::P,
                             sl.p});
  }
  const Index x1 = E.basepoint_index(E.x, 0, I - 1, d_);

  // stencils for the state samples constraints may use
  detail::Stencil S0 = {{0, 1.0}}, Sb, Sdb;
  if (beta_.present()) {
    E.stencil(E.x, 0, nullptr, beta, Side::Left, false, Sb);
    E.stencil(E.x, 0, nullptr, beta, Side::Left, true, Sdb);
  }

  if (primal) {
    E.primal(u, 0, r, J);
    const Index row = nc_ - n;
    r.segment(row, n) = u.segment(0, n) - u.segment(x1, n);
    if (J)
      for (int c = 0; c < n; ++c) {
        J->add(row + c, c, 1.0);
        J->add(row + c, x1 + c, -1.0);
      }
    for (std::size_t e = 0; e < constraints_.size(); ++e) {
      const auto& C = constraints_[e];
      const VectorXd args = constraint_args(C, u, mesh, beta);
      const Index crow = nc_ + static_cast<Index>(e);
      r[crow] = C.value(args);
      if (!J) continue;
      const VectorXd g = constraint_gradient(C, args);
      Index pos = 0;
      for (const auto& t : C.targets) {
        if (t.kind == VariationTarget::Kind::Scalar) {
          ++pos;
          continue;
        }
        detail::scatter(*J, crow, g.segment(pos, n).transpose(), t.kind == VariationTarget::Kind::StateAtZero ? S0 : Sb, n);
        pos += n;
      }
    }
  }

  if (adjoint) {
    const Index A0 = primal ? primal_equations() : 0;
    const Index lam0 = layout_.primal_size, lbc = lam0 + nc_;
    E.adjoint(u, A0, r, J, primal_cols, multiplier_cols);
    const Index b0 = A0 + nc_ - n, b1 = A0 + nc_;
    const Index l1 = E.basepoint_index(E.lam, 0, I - 1, d_);
    r.segment(b0, n) = -u.segment(lam0, n) + u.segment(lbc, n);
    r.segment(b1, n) = u.segment(l1, n) - u.segment(lbc, n);
    if (J && multiplier_cols)
      for (int c = 0; c < n; ++c) {
        J->add(b0 + c, lam0 + c, -1.0);
        J->add(b0 + c, lbc + c, 1.0);
        J->add(b1 + c, l1 + c, 1.0);
        J->add(b1 + c, lbc + c, -1.0);
      }
    const Index srow = A0 + nc_ + n;
    E.integrals(u, srow, r, J, primal_cols, multiplier_cols);

    // extra-constraint multipliers; local rows: [x(0) variation | jump at β | scalar rows]
    const Index S = static_cast<Index>(scalar_rows_.size());
    std::vector<Index> rowmap;
    for (int c = 0; c < n; ++c) rowmap.push_back(b0 + c);
    const Index brow = beta_.present() ? A0 + E.continuity_row(0, beta_breakpoint(mesh, beta) * N_ - 1) : -1;
    for (int c = 0; c < n; ++c) rowmap.push_back(brow + c);
    for (Index q = 0; q < S; ++q) rowmap.push_back(srow + q);

    for (std::size_t e = 0; e < constraints_.size(); ++e) {
      const auto& C = constraints_[e];
      const Index mcol = layout_.index(C.multiplier);
      const double nu = u[mcol];
      bool uses_beta = false;
      for (const auto& t : C.targets) uses_beta |= t.kind == VariationTarget::Kind::StateAtBeta;
      const VectorXd args0 = constraint_args(C, u, mesh, beta);

      // inputs: 0 x(0), 1 x(β), 2 x'(β)
      auto local = [&](const std::vector<VectorXd>& v) -> VectorXd {
        VectorXd args = args0;
        Index pos = 0;
        for (const auto& t : C.targets) {
          if (t.kind == VariationTarget::Kind::Scalar) { ++pos; continue; }
          args.segment(pos, n) = t.kind == VariationTarget::Kind::StateAtZero ? v[0] : v[1];
          pos += n;
        }
        const VectorXd g = constraint_gradient(C, args);
        VectorXd out = VectorXd::Zero(2 * n + S);
        pos = 0;
        for (const auto& t : C.targets) {
          if (t.kind == VariationTarget::Kind::StateAtZero) {
            out.segment(0, n) += g.segment(pos, n);
            pos += n;
          } else if (t.kind == VariationTarget::Kind::StateAtBeta) {
            out.segment(n, n) += g.segment(pos, n);
            const double chain = g.segment(pos, n).dot(v[2]);
            for (Index q = 0; q < S; ++q) {
              const auto& sl = scalars_[scalar_rows_[q]];
              if (sl.kind == 0) out[2 * n + q] += chain * beta_.d_dT(P.alpha, P.T);
              if (sl.kind == 1) out[2 * n + q] += chain * beta_.d_dalpha(P.alpha, P.T);
            }
            pos += n;
          } else {
            for (Index q = 0; q < S; ++q)
              if (scalars_[scalar_rows_[q]].name == t.name) out[2 * n + q] += g[pos];
            ++pos;
          }
        }
        return out;
      };
      std::vector<VectorXd> in = {u.segment(0, n), uses_beta ? detail::apply(Sb, u, n) : VectorXd(VectorXd::Zero(n)),
                                  uses_beta ? detail::apply(Sdb, u, n) : VectorXd(VectorXd::Zero(n))};
      const VectorXd contrib = local(in);
      for (Index k = 0; k < contrib.size(); ++k) {
        if (contrib[k] == 0.0) continue;
        r[rowmap[k]] += nu * contrib[k];
        if (J && multiplier_cols) J->add(rowmap[k], mcol, contrib[k]);
      }
      if (J && primal_cols && nu != 0.0) {
        auto scaled = [&](const std::vector<VectorXd>& v) -> VectorXd { return nu * local(v); };
        const detail::Stencil* st[3] = {&S0, &Sb, &Sdb};
        for (int w = 0; w < (uses_beta ? 3 : 1); ++w) {
          const MatrixXd B = detail::fd_input(scaled, in, w, contrib.size());
          for (const auto& term : *st[w])
            for (Index k = 0; k < B.rows(); ++k)
              for (int c = 0; c < n; ++c) J->add(rowmap[k], term.idx + c, term.w * B(k, c));
        }
      }
    }
  }
  if (!r.allFinite()) throw NumericFault("non-finite residual in periodic BVP assembly");
}

std::vector<std::pair<std::string, double>> PeriodicBvp::trivial_residuals(const VectorXd& u) const {
  std::vector<std::pair<std::string, double>> out;
  const ProblemParams P = params_at(u);
  const Mesh mesh = mesh_for(P.alpha, P.T);
  const double beta = beta_.present() ? beta_.at(P.alpha, P.T) : 0.0;
  for (const auto& mu : mus_) {
    double v = mu == objective_ ? 1.0 : 0.0;
    for (const auto& C : constraints_) {
      const double nu = u[layout_.index(C.multiplier)];
      if (nu == 0.0) continue;
      const VectorXd g = constraint_gradient(C, constraint_args(C, u, mesh, beta));
      Index pos = 0;
      for (const auto& t : C.targets) {
        if (t.kind == VariationTarget::Kind::Scalar) {
          if (t.name == mu) v += nu * g[pos];
          ++pos;
        } else {
          pos += field_.n;
        }
      }
    }
    out.emplace_back(mu, v);
  }
  return out;
}

VectorXd PeriodicBvp::pack(const PeriodicOrbitState& orbit, const PeriodicAdjointState* adjoint) const {
  VectorXd u = VectorXd::Zero(layout_.total());
  const Mesh mesh = mesh_for(orbit.alpha, orbit.T);
  if (orbit.x.dim() != field_.n) throw ContractViolation("orbit dimension does not match the field");
  u.segment(0, nc_) = remesh(orbit.x, mesh).coefficients();
  for (int s : scalar_rows_) {
    const auto& sl = scalars_[s];
    u[layout_.index(sl.name)] = sl.kind == 0 ? orbit.T : sl.kind == 1 ? orbit.alpha : orbit.p[sl.p];
  }
  for (const auto& m : mus_) {
    auto it = orbit.mu.find(m);
    if (it == orbit.mu.end()) throw ContractViolation("orbit state lacks continuation parameter '" + m + "'");
    u[layout_.index(m)] = it->second;
  }
  if (adjoint) {
    const Index lam0 = layout_.primal_size;
    u.segment(lam0, nc_) = remesh(adjoint->lambda_f, mesh).coefficients();
    u.segment(lam0 + nc_, field_.n) = adjoint->lambda_bc;
    for (const auto& c : constraints_) {
      auto it = adjoint->multipliers.find(c.multiplier);
      if (it != adjoint->multipliers.end()) u[layout_.index(c.multiplier)] = it->second;
    }
  }
  return u;
}

PeriodicOrbitState PeriodicBvp::orbit(const VectorXd& u) const {
  PeriodicOrbitState o;
  const ProblemParams P = params_at(u);
  o.x = SegmentedFunction(mesh_for(P.alpha, P.T), field_.n, u.segment(0, nc_));
  o.T = P.T;
  o.alpha = P.alpha;
  o.p = P.p;
  for (const auto& m : mus_) o.mu[m] = u[layout_.index(m)];
  return o;
}

PeriodicAdjointState PeriodicBvp::adjoint_state(const VectorXd& u) const {
  PeriodicAdjointState a;
  const ProblemParams P = params_at(u);
  const Mesh mesh = mesh_for(P.alpha, P.T);
  const Index lam0 = layout_.primal_size;
  a.lambda_f = SegmentedFunction(mesh, field_.n, u.segment(lam0, nc_));
  bool jump = false;
  for (const auto& c : constraints_)
    for (const auto& t : c.targets) jump |= t.kind == VariationTarget::Kind::StateAtBeta;
  if (jump) a.lambda_f.allow_jump(beta_breakpoint(mesh, beta_.at(P.alpha, P.T)));
  a.lambda_bc = u.segment(lam0 + nc_, field_.n);
  for (const auto& c : constraints_) a.multipliers[c.multiplier] = u[layout_.index(c.multiplier)];
  return a;
}

VectorXd PeriodicBvp::assemble_primal_residual(const PeriodicOrbitState& orbit) const {
  return primal_residual(pack(orbit));
}

VectorXd PeriodicBvp::assemble_adjoint_residual(const PeriodicOrbitState& orbit, const PeriodicAdjointState& adjoint) const {
  return adjoint_residual(pack(orbit, &adjoint));
}

}  // namespace ddeopt
