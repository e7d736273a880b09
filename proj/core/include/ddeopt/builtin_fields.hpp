#pragma once

#include "ddeopt/field.hpp"

namespace ddeopt {

// z' = -z - z(t-alpha) + cos(2πt/T + phi);  p = (phi)
DdeVectorField linear_scalar_field();

struct DuffingCoefficients {
  double zeta = 0.05;
  double mu = 0.05;
  double a = 0.05;
  double b = -0.05;
  double gamma = 0.5;
};

// x'' + 2ζx' + x + μx³ = 2a x(t-α) + 2b x'(t-α) + γ cos(2πt/T + φ);  p = (phi)
DdeVectorField duffing_pd_field(const DuffingCoefficients& c = {});

// Delayed Hopf normal form with periodic forcing of the feedback gain;  p = (omega)
DdeVectorField hopf_torus_field();

// hopf_torus_field written for R(t) = e^{-iνt} z(t) with ν = 2πϱ/T. Rotation-equivariance of the
// Hopf field turns a ϱ-torus into a T-periodic orbit of this field.
DdeVectorField hopf_corotating_field(double rho);

}  // namespace ddeopt
