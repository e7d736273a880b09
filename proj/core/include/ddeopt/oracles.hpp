#pragma once

#include <vector>

#include "ddeopt/builtin_fields.hpp"

namespace ddeopt {

// Steady-state amplitude of z' = -z - z(t-1) + cos ωt.
double linear_amplitude(double omega);

struct LinearOptimum {
  double omega = 0.0;
  double r = 0.0;
  double T = 0.0;
  // θ/ω with cos θ = -r(1 + cos ω), sin θ = r(sin ω - ω), reduced to [0, T)
  double t_crit = 0.0;
  // φ with z(T(τ + φ/2π)) = r cos 2πτ, i.e. the forcing phase that puts the maximum at τ = 0
  double phase = 0.0;
};

// Golden-section maximization of linear_amplitude on [1, 3].
LinearOptimum linear_optimum();
double linear_response_phase(double omega);

struct MsParams {
  double zeta = 0.05;
  double mu = 0.05;
  double a = 0.05;
  double b = -0.05;
  double gamma = 0.5;
};

MsParams ms_params(const DuffingCoefficients& c);

// γ / (2|ζ + a sin α - b cos α|)
double ms_rho_max(const MsParams& p, double alpha);
// maximizer on [0, π] of |ζ + a sin α - b cos α| (minimizer of ms_rho_max)
double ms_optimal_delay(const MsParams& p);
// positive ρ solving the first-order frequency-amplitude relation at detuning σ, ascending
std::vector<double> ms_frequency_response(const MsParams& p, double alpha, double sigma);
// detuning at which ρ = ρ_max
double ms_peak_detuning(const MsParams& p, double alpha);

// 1-D golden-section maximization of g on [lo, hi]
double golden_max(const std::function<double(double)>& g, double lo, double hi, double tol = 1e-10);

}  // namespace ddeopt
