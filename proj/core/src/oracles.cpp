#include "ddeopt/oracles.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "ddeopt/errors.hpp"

namespace ddeopt {

double linear_amplitude(double omega) {
  if (!(omega > 0.0)) throw DomainFault("linear_amplitude needs omega > 0");
  const double rad = 2.0 + omega * omega - 2.0 * omega * std::sin(omega) + 2.0 * std::cos(omega);
  if (!(rad > 0.0)) {
    std::ostringstream os;
    os << "nonpositive radicand " << rad << " at omega = " << omega;
    throw DomainFault(os.str());
  }
  return 1.0 / std::sqrt(rad);
}

double golden_max(const std::function<double(double)>& g, double lo, double hi, double tol) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double gc = g(c), gd = g(d);
  while (b - a > tol) {
    if (gc > gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - invphi * (b - a);
      gc = g(c);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + invphi * (b - a);
      gd = g(d);
    }
  }
  return 0.5 * (a + b);
}

double linear_response_phase(double omega) {
  return std::atan2(omega - std::sin(omega), 1.0 + std::cos(omega));
}

LinearOptimum linear_optimum() {
  LinearOptimum o;
  o.omega = golden_max(linear_amplitude, 1.0, 3.0, 1e-10);
  o.r = linear_amplitude(o.omega);
  o.T = 2.0 * M_PI / o.omega;
  const double theta = std::atan2(o.r * (std::sin(o.omega) - o.omega), -o.r * (1.0 + std::cos(o.omega)));
  o.t_crit = std::fmod(theta + 2.0 * M_PI, 2.0 * M_PI) / o.omega;
  o.phase = linear_response_phase(o.omega);
  return o;
}

MsParams ms_params(const DuffingCoefficients& c) { return {c.zeta, c.mu, c.a, c.b, c.gamma}; }

namespace {
double damping(const MsParams& p, double alpha) { return p.zeta + p.a * std::sin(alpha) - p.b * std::cos(alpha); }
}  // namespace

double ms_rho_max(const MsParams& p, double alpha) {
  const double e = damping(p, alpha);
  if (std::abs(e) < 1e-300) throw DomainFault("resonance: zeta + a sin(alpha) - b cos(alpha) vanishes");
  return p.gamma / (2.0 * std::abs(e));
}

double ms_optimal_delay(const MsParams& p) {
  if (p.a == 0.0 && p.b == 0.0) throw DomainFault("ms_optimal_delay needs (a, b) != (0, 0)");
  auto g = [&](double al) { return std::abs(damping(p, al)); };
  const int n = 200;
  int best = 0;
  for (int i = 1; i <= n; ++i)
    if (g(M_PI * i / n) > g(M_PI * best / n)) best = i;
  const double lo = M_PI * std::max(best - 1, 0) / n, hi = M_PI * std::min(best + 1, n) / n;
  double x = golden_max(g, lo, hi, 1e-12);
  // golden-section stalls near sqrt(eps) on a flat maximum; finish with Newton on d/dα of the damping
  for (int it = 0; it < 4; ++it) {
    const double d1 = p.a * std::cos(x) + p.b * std::sin(x), d2 = -p.a * std::sin(x) + p.b * std::cos(x);
    if (d2 == 0.0) break;
    const double y = x - d1 / d2;
    if (!(y > lo && y < hi)) break;
    x = y;
  }
  // endpoint maxima are attained exactly at the boundary
  if (g(0.0) >= g(x)) return 0.0;
  if (g(M_PI) >= g(x)) return M_PI;
  return x;
}

double ms_peak_detuning(const MsParams& p, double alpha) {
  const double r = ms_rho_max(p, alpha);
  return 3.0 * p.mu * r * r / 8.0 - p.a * std::cos(alpha) - p.b * std::sin(alpha);
}

std::vector<double> ms_frequency_response(const MsParams& p, double alpha, double sigma) {
  const double k = 3.0 * p.mu / 8.0;
  const double c = sigma + p.a * std::cos(alpha) + p.b * std::sin(alpha);
  const double e = damping(p, alpha);
  const double g2 = p.gamma * p.gamma / 4.0;
  // y = ρ²:  k²y³ - 2ck y² + (c² + e²) y - γ²/4 = 0
  auto poly = [&](double y) { return ((k * k * y - 2 * c * k) * y + (c * c + e * e)) * y - g2; };
  auto dpoly = [&](double y) { return (3 * k * k * y - 4 * c * k) * y + (c * c + e * e); };
  std::vector<double> ys;
  if (k == 0.0) {
    ys.push_back(g2 / (c * c + e * e));
  } else {
    Eigen::Matrix3d C = Eigen::Matrix3d::Zero();
    C(0, 0) = 2 * c / k;
    C(0, 1) = -(c * c + e * e) / (k * k);
    C(0, 2) = g2 / (k * k);
    C(1, 0) = 1.0;
    C(2, 1) = 1.0;
    const Eigen::Vector3cd ev = C.eigenvalues();
    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    for (int i = 0; i < 3; ++i)
      if (std::abs(ev[i].imag()) <= 1e-7 * scale && ev[i].real() > 0.0) ys.push_back(ev[i].real());
  }
  std::vector<double> out;
  for (double y : ys) {
    for (int it = 0; it < 50; ++it) {
      const double d = dpoly(y);
      if (d == 0.0) break;
      const double dy = poly(y) / d;
      y -= dy;
      if (std::abs(dy) <= 1e-16 * std::max(1.0, std::abs(y))) break;
    }
    if (y > 0.0) out.push_back(std::sqrt(y));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(), [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, b); }),
            out.end());
  return out;
}

}  // namespace ddeopt
