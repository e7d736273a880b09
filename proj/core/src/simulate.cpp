#include "ddeopt/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ddeopt/errors.hpp"

namespace ddeopt {

VectorXd Trajectory::at(double t) const {
  if (x.empty()) throw ContractViolation("empty trajectory");
  const double s = (t - t0) / dt;
  const double last = static_cast<double>(x.size() - 1);
  if (s < -1e-9 || s > last + 1e-9) throw ContractViolation("trajectory evaluated outside its time range");
  std::size_t k = static_cast<std::size_t>(std::clamp(std::floor(s), 0.0, std::max(last - 1.0, 0.0)));
  if (x.size() == 1) return x[0];
  const double th = s - static_cast<double>(k);
  const double h00 = (1 + 2 * th) * (1 - th) * (1 - th), h10 = th * (1 - th) * (1 - th);
  const double h01 = th * th * (3 - 2 * th), h11 = th * th * (th - 1);
  return h00 * x[k] + h10 * dt * dx[k] + h01 * x[k + 1] + h11 * dt * dx[k + 1];
}

Trajectory simulate_dde(const DdeVectorField& field, const ProblemParams& params,
                        const std::function<VectorXd(double)>& history, double t_end, double dt) {
  if (!(dt > 0.0) || dt > params.alpha / 4.0 * (1 + 1e-12))
    throw ContractViolation("simulate_dde needs 0 < dt <= alpha/4");
  const double alpha = params.alpha;
  Trajectory tr;
  tr.t0 = 0.0;
  tr.dt = dt;
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  tr.x.reserve(steps + 1);
  tr.dx.reserve(steps + 1);

  auto delayed = [&](double t) -> VectorXd {
    const double s = t - alpha;
    return s <= 0.0 ? history(s) : tr.at(s);
  };
  auto rhs = [&](double t, const VectorXd& z) {
    VectorXd f = field.f(t, z, delayed(t), params);
    if (!f.allFinite()) {
      std::ostringstream os;
      os << "blow-up: non-finite state derivative at t = " << t;
      throw NumericFault(os.str());
    }
    return f;
  };

  VectorXd z = history(0.0);
  tr.x.push_back(z);
  tr.dx.push_back(rhs(0.0, z));
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = dt * static_cast<double>(k);
    const VectorXd& k1 = tr.dx.back();
    const VectorXd k2 = rhs(t + dt / 2, z + dt / 2 * k1);
    const VectorXd k3 = rhs(t + dt / 2, z + dt / 2 * k2);
    const VectorXd k4 = rhs(t + dt, z + dt * k3);
    z = z + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    if (!z.allFinite()) {
      std::ostringstream os;
      os << "blow-up: non-finite state at t = " << t + dt;
      throw NumericFault(os.str());
    }
    tr.x.push_back(z);
    tr.dx.push_back(rhs(t + dt, z));
  }
  return tr;
}

double final_period_amplitude(const Trajectory& traj, double period, int component, int samples) {
  const double te = traj.t_end();
  double lo = INFINITY, hi = -INFINITY;
  for (int i = 0; i <= samples; ++i) {
    const double v = traj.at(te - period + period * i / samples)[component];
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return 0.5 * (hi - lo);
}

}  // namespace ddeopt
