#include "ddeopt/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>
#include <sstream>

#include "ddeopt/errors.hpp"

namespace ddeopt {

void gauss_legendre(int m, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(m, 0.0);
  weights.assign(m, 0.0);
  for (int i = 0; i < m; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double dp;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= m; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = m * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged root
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= m; ++k) {
      const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = m * (x * p1 - p0) / (x * x - 1.0);
    nodes[m - 1 - i] = 0.5 * (x + 1.0);
    weights[m - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);  // 2/((1-x²)P'²) halved
  }
}

void lagrange_basis(int d, double sigma, double* w) {
  for (int j = 0; j <= d; ++j) {
    double v = 1.0;
    const double sj = static_cast<double>(j) / d;
    for (int m = 0; m <= d; ++m) {
      if (m == j) continue;
      const double sm = static_cast<double>(m) / d;
      v *= (sigma - sm) / (sj - sm);
    }
    w[j] = v;
  }
}

void lagrange_basis_derivative(int d, double sigma, double* w) {
  for (int j = 0; j <= d; ++j) {
    const double sj = static_cast<double>(j) / d;
    double sum = 0.0;
    for (int l = 0; l <= d; ++l) {
      if (l == j) continue;
      const double sl = static_cast<double>(l) / d;
      double prod = 1.0 / (sj - sl);
      for (int m = 0; m <= d; ++m) {
        if (m == j || m == l) continue;
        const double sm = static_cast<double>(m) / d;
        prod *= (sigma - sm) / (sj - sm);
      }
      sum += prod;
    }
    w[j] = sum;
  }
}

Mesh::Mesh(std::vector<double> breakpoints, int N, int degree) : N_(N), d_(degree) {
  if (N < 1 || degree < 1) throw ContractViolation("mesh needs N >= 1 and degree >= 1");
  for (double b : breakpoints) {
    if (!(b >= -kBreakpointMergeTol && b <= 1.0 + kBreakpointMergeTol)) {
      std::ostringstream os;
      os << "breakpoint " << b << " outside [0,1]";
      throw ContractViolation(os.str());
    }
  }
  std::sort(breakpoints.begin(), breakpoints.end());
  for (double b : breakpoints) {
    if (bp_.empty() || b - bp_.back() > kBreakpointMergeTol) bp_.push_back(b);
  }
  if (bp_.size() < 2 || std::abs(bp_.front()) > kBreakpointMergeTol || std::abs(bp_.back() - 1.0) > kBreakpointMergeTol)
    throw ContractViolation("breakpoints must contain 0 and 1");
  bp_.front() = 0.0;
  bp_.back() = 1.0;
  gauss_legendre(d_, gauss_x_, gauss_w_);
}

Mesh build_mesh(const std::vector<double>& breakpoints, int N, int d) { return Mesh(breakpoints, N, d); }

double Mesh::interval_start(int k) const {
  const int s = k / N_, i = k % N_;
  return bp_[s] + i * (bp_[s + 1] - bp_[s]) / N_;
}

double Mesh::interval_end(int k) const {
  const int s = k / N_, i = k % N_;
  if (i + 1 == N_) return bp_[s + 1];
  return bp_[s] + (i + 1) * (bp_[s + 1] - bp_[s]) / N_;
}

double Mesh::basepoint(int k, int j) const {
  if (j == 0) return interval_start(k);
  if (j == d_) return interval_end(k);
  return interval_start(k) + interval_length(k) * j / d_;
}

Location Mesh::locate(double tau, Side side) const {
  constexpr double snap = 1e-13;
  if (tau < -1e-12 || tau > 1.0 + 1e-12) {
    std::ostringstream os;
    os << "tau=" << tau << " outside [0,1]";
    throw ContractViolation(os.str());
  }
  tau = std::clamp(tau, 0.0, 1.0);
  const int m = segments();
  int s;
  if (side == Side::Right) {
    // last segment whose left end is <= tau
    s = static_cast<int>(std::upper_bound(bp_.begin(), bp_.end(), tau + snap) - bp_.begin()) - 1;
    s = std::clamp(s, 0, m - 1);
  } else {
    // first segment whose right end is >= tau
    s = static_cast<int>(std::lower_bound(bp_.begin(), bp_.end(), tau - snap) - bp_.begin()) - 1;
    s = std::clamp(s, 0, m - 1);
  }
  const double len = bp_[s + 1] - bp_[s];
  const double x = std::clamp((tau - bp_[s]) / len * N_, 0.0, static_cast<double>(N_));
  int i = side == Side::Right ? static_cast<int>(std::floor(x)) : static_cast<int>(std::ceil(x)) - 1;
  i = std::clamp(i, 0, N_ - 1);
  return {s * N_ + i, std::clamp(x - i, 0.0, 1.0)};
}

SegmentedFunction::SegmentedFunction(Mesh mesh, int dim)
    : mesh_(std::move(mesh)), dim_(dim), jumps_(mesh_.breakpoints().size(), false) {
  c_ = VectorXd::Zero(static_cast<Eigen::Index>(mesh_.intervals()) * (mesh_.degree() + 1) * dim_);
}

SegmentedFunction::SegmentedFunction(Mesh mesh, int dim, VectorXd coefficients)
    : mesh_(std::move(mesh)), dim_(dim), c_(std::move(coefficients)), jumps_(mesh_.breakpoints().size(), false) {
  if (c_.size() != static_cast<Eigen::Index>(mesh_.intervals()) * (mesh_.degree() + 1) * dim_)
    throw ContractViolation("coefficient vector does not match mesh and dim");
}

SegmentedFunction SegmentedFunction::sample(const Mesh& mesh, int dim, const std::function<VectorXd(double)>& g) {
  SegmentedFunction sf(mesh, dim);
  for (int k = 0; k < mesh.intervals(); ++k)
    for (int j = 0; j <= mesh.degree(); ++j) sf.c_.segment(sf.index(k, j), dim) = g(mesh.basepoint(k, j));
  return sf;
}

void SegmentedFunction::allow_jump(int breakpoint, bool on) {
  if (breakpoint <= 0 || breakpoint >= static_cast<int>(jumps_.size()) - 1)
    throw ContractViolation("jumps are only allowed at interior breakpoints");
  jumps_[breakpoint] = on;
}

namespace {

VectorXd combine(const SegmentedFunction& sf, int k, const double* w) {
  VectorXd out = VectorXd::Zero(sf.dim());
  for (int j = 0; j <= sf.mesh().degree(); ++j) out += w[j] * sf.coefficients().segment(sf.index(k, j), sf.dim());
  return out;
}

}  // namespace

VectorXd eval(const SegmentedFunction& sf, double tau, Side side) {
  const Location L = sf.mesh().locate(tau, side);
  double w[32];
  lagrange_basis(sf.mesh().degree(), L.sigma, w);
  return combine(sf, L.interval, w);
}

VectorXd eval_shifted(const SegmentedFunction& sf, double tau, double a, int j, Side side) {
  const double s = tau - a + j;
  if (s < -1e-12 || s > 1.0 + 1e-12) {
    std::ostringstream os;
    os << "wrapped argument outside [0,1] for tau=" << tau << ", a=" << a << ", j=" << j;
    throw ContractViolation(os.str());
  }
  return eval(sf, s, side);
}

VectorXd eval_derivative(const SegmentedFunction& sf, double tau, Side side) {
  const Location L = sf.mesh().locate(tau, side);
  double w[32];
  lagrange_basis_derivative(sf.mesh().degree(), L.sigma, w);
  const double len = sf.mesh().interval_length(L.interval);
  for (int j = 0; j <= sf.mesh().degree(); ++j) w[j] /= len;
  return combine(sf, L.interval, w);
}

SegmentedFunction remesh(const SegmentedFunction& sf, const Mesh& mesh) {
  if (mesh == sf.mesh()) return sf;
  SegmentedFunction out(mesh, sf.dim());
  for (int k = 0; k < mesh.intervals(); ++k)
    for (int j = 0; j <= mesh.degree(); ++j) {
      const double tau = mesh.basepoint(k, j);
      out.coefficients().segment(out.index(k, j), sf.dim()) = eval(sf, tau, tau >= 1.0 ? Side::Left : Side::Right);
    }
  const auto& ob = sf.mesh().breakpoints();
  const auto& nb = mesh.breakpoints();
  for (std::size_t i = 1; i + 1 < nb.size(); ++i)
    for (std::size_t m = 1; m + 1 < ob.size(); ++m)
      if (sf.jump_allowed()[m] && std::abs(ob[m] - nb[i]) <= kBreakpointMergeTol) out.allow_jump(static_cast<int>(i));
  return out;
}

double integrate_against(const SegmentedFunction& a, const SegmentedFunction& b,
                         const std::function<double(double)>& weight, double lo, double hi) {
  if (a.dim() != b.dim()) throw ContractViolation("integrate_against: dimension mismatch");
  if (!(lo <= hi)) throw ContractViolation("integrate_against: empty interval");
  // each factor has degree d on a mesh interval; d+1 points integrate the product exactly
  std::vector<double> x, w;
  gauss_legendre(std::max(a.mesh().degree(), b.mesh().degree()) + 1, x, w);
  // union of both meshes' interval ends inside [lo,hi]
  std::vector<double> cuts = {lo, hi};
  for (const Mesh* m : {&a.mesh(), &b.mesh()})
    for (int k = 0; k < m->intervals(); ++k) {
      const double e = m->interval_end(k);
      if (e > lo && e < hi) cuts.push_back(e);
    }
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double l = cuts[i], r = cuts[i + 1];
    if (r - l <= 0.0) continue;
    for (std::size_t q = 0; q < x.size(); ++q) {
      const double t = l + x[q] * (r - l);
      total += w[q] * (r - l) * weight(t) * eval(a, t).dot(eval(b, t));
    }
  }
  return total;
}

void to_json(nlohmann::json& j, const Mesh& m) {
  j = nlohmann::json{{"breakpoints", m.breakpoints()}, {"N", m.N()}, {"degree", m.degree()}};
}

void from_json(const nlohmann::json& j, Mesh& m) {
  m = Mesh(j.at("breakpoints").get<std::vector<double>>(), j.at("N").get<int>(), j.at("degree").get<int>());
}

void to_json(nlohmann::json& j, const SegmentedFunction& sf) {
  to_json(j, sf.mesh());
  j["dim"] = sf.dim();
  j["coefficients"] = std::vector<double>(sf.coefficients().data(), sf.coefficients().data() + sf.coefficients().size());
  std::vector<int> jumps;
  for (std::size_t i = 0; i < sf.jump_allowed().size(); ++i)
    if (sf.jump_allowed()[i]) jumps.push_back(static_cast<int>(i));
  if (!jumps.empty()) j["jumps"] = jumps;
}

void from_json(const nlohmann::json& j, SegmentedFunction& sf) {
  Mesh m;
  from_json(j, m);
  auto c = j.at("coefficients").get<std::vector<double>>();
  sf = SegmentedFunction(m, j.at("dim").get<int>(), Eigen::Map<VectorXd>(c.data(), static_cast<Eigen::Index>(c.size())));
  if (j.contains("jumps"))
    for (int b : j.at("jumps").get<std::vector<int>>()) sf.allow_jump(b);
}

}  // namespace ddeopt
