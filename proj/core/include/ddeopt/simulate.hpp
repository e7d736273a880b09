#pragma once

#include <functional>
#include <vector>

#include "ddeopt/field.hpp"

namespace ddeopt {

// Uniform-step trajectory with derivative samples; at() interpolates by cubic Hermite.
struct Trajectory {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<VectorXd> x;
  std::vector<VectorXd> dx;

  double t_end() const { return t0 + dt * static_cast<double>(x.size() - 1); }
  VectorXd at(double t) const;
};

// Method of steps with classical RK4; delayed values come from the history for t <= 0 and
// from Hermite interpolation of the computed steps afterwards. Requires dt <= alpha/4.
Trajectory simulate_dde(const DdeVectorField& field, const ProblemParams& params,
                        const std::function<VectorXd(double)>& history, double t_end, double dt);

// half the peak-to-peak range of one component over [t_end - period, t_end]
double final_period_amplitude(const Trajectory& traj, double period, int component = 0, int samples = 2000);

}  // namespace ddeopt
