#include "ddeopt/torus_bvp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "collocation.hpp"
#include "ddeopt/builtin_fields.hpp"
#include "ddeopt/errors.hpp"
#include "ddeopt/fourier.hpp"

namespace ddeopt {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

VectorXd scalar_gradient(const PointConstraint& c, const VectorXd& args) {
  if (c.gradient) return c.gradient(args);
  VectorXd g(args.size()), a = args;
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

}  // namespace

MatrixXd wrap_eval(const TorusState& state, double a, int j, double tau, Side side) {
  const int M = state.M();
  if (static_cast<int>(state.segments.size()) != M) throw ContractViolation("torus state has the wrong number of angles");
  const int n = state.segments.front().dim();
  MatrixXd vals(M, n);
  for (int i = 0; i < M; ++i) vals.row(i) = eval(state.segments[i], tau - a + j, side).transpose();
  if (j == 0) return vals;
  return angle_shift(vals, -kTwoPi * j * state.rho);
}

TorusBvp::TorusBvp(DdeVectorField field, ProblemParams constants, double rho, int H, int N, int degree)
    : field_(std::move(field)), constants_(std::move(constants)), rho_(rho), H_(H), M_(2 * H + 1), N_(N), d_(degree) {
  if (H < 0) throw ContractViolation("number of harmonics must be non-negative");
  if (constants_.p.size() != field_.q) throw ContractViolation("parameter vector does not match field.q");
  (void)breakpoint_layout(constants_.alpha, constants_.T);
  scalars_.push_back({"T", 0, 0, false});
  scalars_.push_back({"alpha", 1, 0, false});
  for (int k = 0; k < field_.q; ++k) scalars_.push_back({field_.param_names[k], 2, k, false});
  S_fwd_ = shift_matrix(M_, kTwoPi * rho_);
  S_back_ = shift_matrix(M_, -kTwoPi * rho_);
  Vstar_ = MatrixXd::Zero(M_, field_.n);
  Vstar_phi_ = Vstar_;
  rebuild();
}

void TorusBvp::activate(const std::string& scalar) {
  for (auto& s : scalars_)
    if (s.name == scalar) {
      s.active = true;
      rebuild();
      return;
    }
  throw ContractViolation("cannot activate unknown scalar '" + scalar + "'");
}

void TorusBvp::add_parameter(const std::string& mu) {
  if (std::find(mus_.begin(), mus_.end(), mu) != mus_.end() ||
      std::any_of(scalars_.begin(), scalars_.end(), [&](const ScalarSlot& s) { return s.name == mu; }))
    throw ContractViolation("parameter name '" + mu + "' already in use");
  mus_.push_back(mu);
  rebuild();
}

void TorusBvp::register_constraint(PointConstraint c) {
  if (!c.value) throw ContractViolation("constraint '" + c.name + "' has no value function");
  for (const auto& t : c.targets) {
    if (t.kind != VariationTarget::Kind::Scalar)
      throw ContractViolation("torus constraint '" + c.name + "' may only target scalars");
    const bool known = std::find(mus_.begin(), mus_.end(), t.name) != mus_.end() ||
                       std::any_of(scalars_.begin(), scalars_.end(), [&](const ScalarSlot& s) { return s.name == t.name; });
    if (!known) throw ContractViolation("constraint '" + c.name + "' targets unknown variable '" + t.name + "'");
  }
  if (c.multiplier == "lambda_ph") throw ContractViolation("multiplier name 'lambda_ph' is reserved");
  for (const auto& e : constraints_)
    if (e.multiplier == c.multiplier) throw ContractViolation("multiplier '" + c.multiplier + "' already registered");
  constraints_.push_back(std::move(c));
  rebuild();
}

void TorusBvp::set_objective(const std::string& mu) {
  if (std::find(mus_.begin(), mus_.end(), mu) == mus_.end())
    throw ContractViolation("objective '" + mu + "' is not a registered continuation parameter");
  objective_ = mu;
}

void TorusBvp::set_reference(const MatrixXd& Vstar) {
  if (Vstar.rows() != M_ || Vstar.cols() != field_.n) throw ContractViolation("reference must be M x n");
  Vstar_ = Vstar;
  Vstar_phi_ = fourier_derivative_matrix(M_) * Vstar_;
}

void TorusBvp::rebuild() {
  const int n = field_.n;
  const Mesh m(breakpoint_layout(constants_.alpha, constants_.T), N_, d_);
  nv_ = static_cast<Index>(M_) * m.intervals() * (d_ + 1) * n;
  layout_ = UnknownLayout{};
  scalar_rows_.clear();
  Index idx = nv_;
  for (std::size_t s = 0; s < scalars_.size(); ++s)
    if (scalars_[s].active) {
      layout_.add(scalars_[s].name, idx++);
      scalar_rows_.push_back(static_cast<int>(s));
    }
  for (const auto& mu : mus_) layout_.add(mu, idx++);
  layout_.primal_size = idx;
  idx += nv_ + M_ * n;
  layout_.add("lambda_ph", idx++);
  for (const auto& c : constraints_) layout_.add(c.multiplier, idx++);
  layout_.multiplier_size = idx - layout_.primal_size;
}

std::vector<std::string> TorusBvp::parameters() const {
  std::vector<std::string> out;
  for (int s : scalar_rows_) out.push_back(scalars_[s].name);
  out.insert(out.end(), mus_.begin(), mus_.end());
  return out;
}

std::vector<std::string> TorusBvp::multipliers() const {
  std::vector<std::string> out = {"lambda_ph"};
  for (const auto& c : constraints_) out.push_back(c.multiplier);
  return out;
}

std::vector<Index> TorusBvp::fd_columns() const {
  std::vector<Index> out;
  for (Index c = nv_; c < layout_.primal_size; ++c) out.push_back(c);
  return out;
}

double TorusBvp::scalar_value(const VectorXd& u, const std::string& name) const {
  if (layout_.has(name)) return u[layout_.index(name)];
  for (const auto& s : scalars_)
    if (s.name == name) return s.kind == 0 ? constants_.T : s.kind == 1 ? constants_.alpha : constants_.p[s.p];
  throw ContractViolation("unknown scalar '" + name + "'");
}

ProblemParams TorusBvp::params_at(const VectorXd& u) const {
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

Mesh TorusBvp::mesh_for(double alpha, double T) const {
  Mesh m(breakpoint_layout(alpha, T), N_, d_);
  if (static_cast<Index>(M_) * m.intervals() * (d_ + 1) * field_.n != nv_) {
    std::ostringstream os;
    os << "segment count of the breakpoint layout changed (alpha = " << alpha << ", T = " << T << ")";
    throw RegimeFault(os.str());
  }
  return m;
}

void TorusBvp::check_regime(const VectorXd& u) const {
  const ProblemParams P = params_at(u);
  (void)mesh_for(P.alpha, P.T);
}

Index TorusBvp::variation_row(const std::string& name) const {
  for (std::size_t q = 0; q < scalar_rows_.size(); ++q)
    if (scalars_[scalar_rows_[q]].name == name) return adjoint_integral_row() + static_cast<Index>(q);
  return -1;
}

void TorusBvp::assemble(const VectorXd& u, bool primal, bool adjoint, VectorXd& r, TripletList* J, bool primal_cols,
                        bool multiplier_cols) const {
  if (u.size() != layout_.total()) throw ContractViolation("unknown vector has the wrong length");
  const int n = field_.n;
  const ProblemParams P = params_at(u);
  const Mesh mesh = mesh_for(P.alpha, P.T);
  const int I = mesh.intervals();
  const Index cpc = nv_ / M_;

  detail::Engine E;
  E.field = &field_;
  E.mesh = mesh;
  E.n = n;
  E.M = M_;
  E.a = P.alpha / P.T;
  E.params = P;
  E.W_delay = S_back_;
  E.W_adv = S_fwd_;
  E.x = {0, cpc};
  E.lam = {layout_.primal_size, cpc};
  for (int s : scalar_rows_) {
    const auto& sl = scalars_[s];
    E.scalar_rows.push_back({sl.kind == 0 ? detail::ScalarKind::T : sl.kind == 1 ? detail::ScalarKind::Alpha
                                                                                   : detail::ScalarKind::P,
                             sl.p});
  }

  auto args_of = [&](const PointConstraint& C) {
    VectorXd a(C.targets.size());
    for (std::size_t k = 0; k < C.targets.size(); ++k) a[k] = scalar_value(u, C.targets[k].name);
    return a;
  };

  if (primal) {
    E.primal(u, 0, r, J);
    // Σ_k S(2πϱ)_ik V_k(0) - V_i(1); equals x(0) - x(1) for H = 0
    const Index rot = nv_ - static_cast<Index>(M_) * n;
    for (int i = 0; i < M_; ++i) {
      const Index row = rot + static_cast<Index>(i) * n;
      const Index v1 = E.basepoint_index(E.x, i, I - 1, d_);
      r.segment(row, n) = -u.segment(v1, n);
      for (int k = 0; k < M_; ++k) {
        const Index v0 = E.basepoint_index(E.x, k, 0, 0);
        r.segment(row, n) += S_fwd_(i, k) * u.segment(v0, n);
        if (J)
          for (int c = 0; c < n; ++c) J->add(row + c, v0 + c, S_fwd_(i, k));
      }
      if (J)
        for (int c = 0; c < n; ++c) J->add(row + c, v1 + c, -1.0);
    }
    const Index ph = nv_;
    r[ph] = 0.0;
    for (int i = 0; i < M_; ++i) {
      const Index v0 = E.basepoint_index(E.x, i, 0, 0);
      const double w = kTwoPi / M_;
      r[ph] += w * (u.segment(v0, n) - Vstar_.row(i).transpose()).dot(Vstar_phi_.row(i).transpose());
      if (J)
        for (int c = 0; c < n; ++c) J->add(ph, v0 + c, w * Vstar_phi_(i, c));
    }
    for (std::size_t e = 0; e < constraints_.size(); ++e) {
      const auto& C = constraints_[e];
      r[nv_ + 1 + static_cast<Index>(e)] = C.value(args_of(C));
    }
  }

  if (adjoint) {
    const Index A0 = primal ? primal_equations() : 0;
    const Index lrot = layout_.primal_size + nv_;
    const Index lph = layout_.index("lambda_ph");
    E.adjoint(u, A0, r, J, primal_cols, multiplier_cols);
    const Index b0 = A0 + nv_ - static_cast<Index>(M_) * n, b1 = A0 + nv_;
    const double lamph = u[lph];
    for (int i = 0; i < M_; ++i) {
      const Index r0 = b0 + static_cast<Index>(i) * n, r1 = b1 + static_cast<Index>(i) * n;
      const Index l0 = E.basepoint_index(E.lam, i, 0, 0), l1 = E.basepoint_index(E.lam, i, I - 1, d_);
      const Index li = lrot + static_cast<Index>(i) * n;
      r.segment(r0, n) = -u.segment(l0, n) + kTwoPi * lamph * Vstar_phi_.row(i).transpose();
      for (int k = 0; k < M_; ++k) r.segment(r0, n) += S_back_(i, k) * u.segment(lrot + static_cast<Index>(k) * n, n);
      r.segment(r1, n) = u.segment(l1, n) - u.segment(li, n);
      if (J && multiplier_cols)
        for (int c = 0; c < n; ++c) {
          J->add(r0 + c, l0 + c, -1.0);
          J->add(r0 + c, lph, kTwoPi * Vstar_phi_(i, c));
          for (int k = 0; k < M_; ++k) J->add(r0 + c, lrot + static_cast<Index>(k) * n + c, S_back_(i, k));
          J->add(r1 + c, l1 + c, 1.0);
          J->add(r1 + c, li + c, -1.0);
        }
    }
    const Index srow = A0 + nv_ + static_cast<Index>(M_) * n;
    E.integrals(u, srow, r, J, primal_cols, multiplier_cols);
    for (const auto& C : constraints_) {
      const Index mcol = layout_.index(C.multiplier);
      const VectorXd g = scalar_gradient(C, args_of(C));
      for (std::size_t k = 0; k < C.targets.size(); ++k)
        for (std::size_t q = 0; q < scalar_rows_.size(); ++q)
          if (scalars_[scalar_rows_[q]].name == C.targets[k].name) {
            r[srow + static_cast<Index>(q)] += u[mcol] * g[k];
            if (J && multiplier_cols) J->add(srow + static_cast<Index>(q), mcol, g[k]);
          }
    }
  }
  if (!r.allFinite()) throw NumericFault("non-finite residual in torus BVP assembly");
}

std::vector<std::pair<std::string, double>> TorusBvp::trivial_residuals(const VectorXd& u) const {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& mu : mus_) {
    double v = mu == objective_ ? 1.0 : 0.0;
    for (const auto& C : constraints_) {
      const double nu = u[layout_.index(C.multiplier)];
      if (nu == 0.0) continue;
      VectorXd a(C.targets.size());
      for (std::size_t k = 0; k < C.targets.size(); ++k) a[k] = scalar_value(u, C.targets[k].name);
      const VectorXd g = scalar_gradient(C, a);
      for (std::size_t k = 0; k < C.targets.size(); ++k)
        if (C.targets[k].name == mu) v += nu * g[k];
    }
    out.emplace_back(mu, v);
  }
  return out;
}

VectorXd TorusBvp::pack(const TorusState& st, const TorusAdjointState* adjoint) const {
  if (st.M() != M_ || static_cast<int>(st.segments.size()) != M_)
    throw ContractViolation("torus state has the wrong number of angles");
  VectorXd u = VectorXd::Zero(layout_.total());
  const Mesh mesh = mesh_for(st.alpha, st.T);
  const Index cpc = nv_ / M_;
  for (int i = 0; i < M_; ++i) {
    if (st.segments[i].dim() != field_.n) throw ContractViolation("torus state dimension does not match the field");
    u.segment(i * cpc, cpc) = remesh(st.segments[i], mesh).coefficients();
  }
  for (int s : scalar_rows_) {
    const auto& sl = scalars_[s];
    u[layout_.index(sl.name)] = sl.kind == 0 ? st.T : sl.kind == 1 ? st.alpha : st.p[sl.p];
  }
  for (const auto& m : mus_) {
    auto it = st.mu.find(m);
    if (it == st.mu.end()) throw ContractViolation("torus state lacks continuation parameter '" + m + "'");
    u[layout_.index(m)] = it->second;
  }
  if (adjoint) {
    const Index lam0 = layout_.primal_size;
    for (int i = 0; i < M_; ++i) u.segment(lam0 + i * cpc, cpc) = remesh(adjoint->lambda_f[i], mesh).coefficients();
    for (int i = 0; i < M_; ++i) u.segment(lam0 + nv_ + static_cast<Index>(i) * field_.n, field_.n) = adjoint->lambda_rot.row(i).transpose();
    u[layout_.index("lambda_ph")] = adjoint->lambda_ph;
    for (const auto& c : constraints_) {
      auto it = adjoint->multipliers.find(c.multiplier);
      if (it != adjoint->multipliers.end()) u[layout_.index(c.multiplier)] = it->second;
    }
  }
  return u;
}

TorusState TorusBvp::state(const VectorXd& u) const {
  TorusState st;
  const ProblemParams P = params_at(u);
  const Mesh mesh = mesh_for(P.alpha, P.T);
  const Index cpc = nv_ / M_;
  st.H = H_;
  st.rho = rho_;
  for (int i = 0; i < M_; ++i) st.segments.emplace_back(mesh, field_.n, u.segment(i * cpc, cpc));
  st.T = P.T;
  st.alpha = P.alpha;
  st.p = P.p;
  for (const auto& m : mus_) st.mu[m] = u[layout_.index(m)];
  st.Vstar = Vstar_;
  return st;
}

TorusAdjointState TorusBvp::adjoint_state(const VectorXd& u) const {
  TorusAdjointState a;
  const ProblemParams P = params_at(u);
  const Mesh mesh = mesh_for(P.alpha, P.T);
  const Index cpc = nv_ / M_, lam0 = layout_.primal_size;
  for (int i = 0; i < M_; ++i) a.lambda_f.emplace_back(mesh, field_.n, u.segment(lam0 + i * cpc, cpc));
  a.lambda_rot.resize(M_, field_.n);
  for (int i = 0; i < M_; ++i) a.lambda_rot.row(i) = u.segment(lam0 + nv_ + static_cast<Index>(i) * field_.n, field_.n).transpose();
  a.lambda_ph = u[layout_.index("lambda_ph")];
  for (const auto& c : constraints_) a.multipliers[c.multiplier] = u[layout_.index(c.multiplier)];
  return a;
}

VectorXd TorusBvp::assemble_torus_primal(const TorusState& st) const { return primal_residual(pack(st)); }

VectorXd TorusBvp::assemble_torus_adjoint(const TorusState& st, const TorusAdjointState& adjoint) const {
  return adjoint_residual(pack(st, &adjoint));
}

TorusBvp hopf_problem(double rho, int H, int N, int degree) {
  ProblemParams P;
  P.alpha = 1.0;
  P.T = 4.8;
  P.p = VectorXd::Constant(1, 0.4);
  TorusBvp prob(hopf_torus_field(), P, rho, H, N, degree);
  prob.activate("T");
  prob.activate("omega");
  prob.add_parameter("mu_omega");
  PointConstraint c;
  c.name = "omega_target";
  c.multiplier = "eta_omega";
  c.targets = {VariationTarget::scalar("omega"), VariationTarget::scalar("mu_omega")};
  c.value = [](const VectorXd& a) { return a[0] - a[1]; };
  c.gradient = [](const VectorXd&) { return VectorXd((VectorXd(2) << 1.0, -1.0).finished()); };
  prob.register_constraint(std::move(c));
  prob.set_objective("mu_omega");
  return prob;
}

}  // namespace ddeopt
