#include "collocation.hpp"

namespace ddeopt::detail {

VectorXd apply(const Stencil& s, const VectorXd& u, int n) {
  VectorXd v = VectorXd::Zero(n);
  for (const Term& t : s) v += t.w * u.segment(t.idx, n);
  return v;
}

void scatter(Triplets& J, Index row, const MatrixXd& block, const Stencil& s, int n) {
  for (const Term& t : s)
    for (Index r = 0; r < block.rows(); ++r)
      for (int c = 0; c < n; ++c) J.add(row + r, t.idx + c, t.w * block(r, c));
}

void Engine::stencil(const CoefficientBlock& b, int copy, const double* mix, double tau, Side side, bool derivative,
                     Stencil& out) const {
  out.clear();
  const Location L = mesh.locate(tau, side);
  const int d = mesh.degree();
  double w[32];
  if (derivative) {
    lagrange_basis_derivative(d, L.sigma, w);
    const double len = mesh.interval_length(L.interval);
    for (int j = 0; j <= d; ++j) w[j] /= len;
  } else {
    lagrange_basis(d, L.sigma, w);
  }
  if (!mix) {
    for (int j = 0; j <= d; ++j) out.push_back({basepoint_index(b, copy, L.interval, j), w[j]});
    return;
  }
  for (int m = 0; m < M; ++m) {
    if (mix[m] == 0.0) continue;
    for (int j = 0; j <= d; ++j) out.push_back({basepoint_index(b, m, L.interval, j), mix[m] * w[j]});
  }
}

namespace {

// W is stored column-major; row i of W is needed as a contiguous mix vector
std::vector<double> row_of(const MatrixXd& W, int i) {
  std::vector<double> r(W.cols());
  for (Index k = 0; k < W.cols(); ++k) r[k] = W(i, k);
  return r;
}

void continuity(const Engine& E, const CoefficientBlock& b, const VectorXd& u, Index row0, VectorXd& r, Triplets* J,
                bool cols) {
  const int I = E.mesh.intervals(), d = E.mesh.degree(), n = E.n;
  for (int i = 0; i < E.M; ++i)
    for (int k = 0; k + 1 < I; ++k) {
      const Index row = row0 + E.continuity_row(i, k);
      const Index l = E.basepoint_index(b, i, k, d), rr = E.basepoint_index(b, i, k + 1, 0);
      r.segment(row, n) = u.segment(l, n) - u.segment(rr, n);
      if (J && cols)
        for (int c = 0; c < n; ++c) {
          J->add(row + c, l + c, 1.0);
          J->add(row + c, rr + c, -1.0);
        }
    }
}

}  // namespace

void Engine::primal(const VectorXd& u, Index row0, VectorXd& r, Triplets* J) const {
  const int I = mesh.intervals(), d = mesh.degree();
  const double T = params.T;
  Stencil D, X, Xd;
  const MatrixXd Id = MatrixXd::Identity(n, n);
  for (int i = 0; i < M; ++i) {
    const std::vector<double> mix = row_of(W_delay, i);
    for (int k = 0; k < I; ++k) {
      const bool wrap = delayed_wraps(k);
      for (int m = 0; m < d; ++m) {
        const double tau = mesh.node(k, m);
        stencil(x, i, nullptr, tau, Side::Right, true, D);
        stencil(x, i, nullptr, tau, Side::Right, false, X);
        stencil(x, i, wrap ? mix.data() : nullptr, tau - a + (wrap ? 1 : 0), Side::Right, false, Xd);
        const VectorXd xv = apply(X, u, n), xd = apply(Xd, u, n);
        const Index row = row0 + collocation_row(i, k, m);
        r.segment(row, n) = apply(D, u, n) - T * field->f(T * tau, xv, xd, params);
        if (J) {
          scatter(*J, row, Id, D, n);
          scatter(*J, row, -T * partial_u(*field, T * tau, xv, xd, params), X, n);
          scatter(*J, row, -T * partial_v(*field, T * tau, xv, xd, params), Xd, n);
        }
      }
    }
  }
  continuity(*this, x, u, row0, r, J, true);
}

void Engine::adjoint(const VectorXd& u, Index row0, VectorXd& r, Triplets* J, bool primal_cols, bool mult_cols) const {
  const int I = mesh.intervals(), d = mesh.degree();
  const double T = params.T;
  Stencil DL, L, Ls, X, Xd, Xs;
  const MatrixXd Id = MatrixXd::Identity(n, n);
  // inputs: 0 λ', 1 λ(τ), 2 λ(s), 3 x(τ), 4 x_d(τ), 5 x(s)
  for (int i = 0; i < M; ++i) {
    const std::vector<double> dmix = row_of(W_delay, i), amix = row_of(W_adv, i);
    for (int k = 0; k < I; ++k) {
      const bool dwrap = delayed_wraps(k), awrap = advanced_wraps(k);
      for (int m = 0; m < d; ++m) {
        const double tau = mesh.node(k, m);
        const double s = awrap ? tau + a - 1.0 : tau + a;
        stencil(lam, i, nullptr, tau, Side::Right, true, DL);
        stencil(lam, i, nullptr, tau, Side::Right, false, L);
        stencil(lam, i, awrap ? amix.data() : nullptr, s, Side::Right, false, Ls);
        stencil(x, i, nullptr, tau, Side::Right, false, X);
        stencil(x, i, dwrap ? dmix.data() : nullptr, tau - a + (dwrap ? 1 : 0), Side::Right, false, Xd);
        stencil(x, i, awrap ? amix.data() : nullptr, s, Side::Right, false, Xs);
        std::vector<VectorXd> in = {apply(DL, u, n), apply(L, u, n), apply(Ls, u, n),
                                    apply(X, u, n), apply(Xd, u, n), apply(Xs, u, n)};
        auto kernel = [&](const std::vector<VectorXd>& v) -> VectorXd {
          const MatrixXd fu = partial_u(*field, T * tau, v[3], v[4], params);
          const MatrixXd fv = partial_v(*field, T * s, v[5], v[3], params);
          return -v[0] - T * (fu.transpose() * v[1]) - T * (fv.transpose() * v[2]);
        };
        const Index row = row0 + collocation_row(i, k, m);
        r.segment(row, n) = kernel(in);
        if (!J) continue;
        if (mult_cols) {
          const MatrixXd fu = partial_u(*field, T * tau, in[3], in[4], params);
          const MatrixXd fv = partial_v(*field, T * s, in[5], in[3], params);
          scatter(*J, row, -Id, DL, n);
          scatter(*J, row, -T * fu.transpose(), L, n);
          scatter(*J, row, -T * fv.transpose(), Ls, n);
        }
        if (primal_cols) {
          scatter(*J, row, fd_input(kernel, in, 3, n), X, n);
          scatter(*J, row, fd_input(kernel, in, 4, n), Xd, n);
          scatter(*J, row, fd_input(kernel, in, 5, n), Xs, n);
        }
      }
    }
  }
  continuity(*this, lam, u, row0, r, J, mult_cols);
}

void Engine::integrals(const VectorXd& u, Index row0, VectorXd& r, Triplets* J, bool primal_cols, bool mult_cols) const {
  const Index S = static_cast<Index>(scalar_rows.size());
  if (S == 0) return;
  const int I = mesh.intervals(), d = mesh.degree();
  const double T = params.T;
  const auto& gw = mesh.gauss_weights();
  Stencil L, X, Xd, DXd;
  // inputs: 0 λ(τ), 1 x(τ), 2 x_d, 3 x'_d
  for (int i = 0; i < M; ++i) {
    const std::vector<double> dmix = row_of(W_delay, i);
    for (int k = 0; k < I; ++k) {
      const bool dwrap = delayed_wraps(k);
      const double len = mesh.interval_length(k);
      for (int m = 0; m < d; ++m) {
        const double tau = mesh.node(k, m), t = T * tau;
        const double wq = gw[m] * len / M;
        const double sd = tau - a + (dwrap ? 1 : 0);
        stencil(lam, i, nullptr, tau, Side::Right, false, L);
        stencil(x, i, nullptr, tau, Side::Right, false, X);
        stencil(x, i, dwrap ? dmix.data() : nullptr, sd, Side::Right, false, Xd);
        stencil(x, i, dwrap ? dmix.data() : nullptr, sd, Side::Right, true, DXd);
        std::vector<VectorXd> in = {apply(L, u, n), apply(X, u, n), apply(Xd, u, n), apply(DXd, u, n)};
        // row s of `dirs` is the vector paired with λ in scalar row s
        auto directions = [&](const std::vector<VectorXd>& v) -> MatrixXd {
          MatrixXd dirs(S, n);
          const MatrixXd fv = partial_v(*field, t, v[1], v[2], params);
          for (Index q = 0; q < S; ++q) {
            switch (scalar_rows[q].kind) {
              case ScalarKind::Alpha:
                dirs.row(q) = (fv * v[3]).transpose();
                break;
              case ScalarKind::T:
                dirs.row(q) = -(field->f(t, v[1], v[2], params) + t * partial_t(*field, t, v[1], v[2], params) +
                                T * partial_T(*field, t, v[1], v[2], params) + a * (fv * v[3]))
                                   .transpose();
                break;
              case ScalarKind::P:
                dirs.row(q) = -T * partial_p(*field, t, v[1], v[2], params).col(scalar_rows[q].p).transpose();
                break;
            }
          }
          return wq * dirs;
        };
        auto kernel = [&](const std::vector<VectorXd>& v) -> VectorXd { return directions(v) * v[0]; };
        const MatrixXd dirs = directions(in);
        r.segment(row0, S) += dirs * in[0];
        if (!J) continue;
        if (mult_cols) scatter(*J, row0, dirs, L, n);
        if (primal_cols) {
          scatter(*J, row0, fd_input(kernel, in, 1, S), X, n);
          scatter(*J, row0, fd_input(kernel, in, 2, S), Xd, n);
          scatter(*J, row0, fd_input(kernel, in, 3, S), DXd, n);
        }
      }
    }
  }
}

}  // namespace ddeopt::detail
