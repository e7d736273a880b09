#pragma once

#include <Eigen/Dense>
#include <vector>

namespace ddeopt {

// φ_i = 2π i / M, i = 0..M-1 (M odd)
std::vector<double> angle_grid(int M);

// Trigonometric-interpolation resampling: (S(s) v)_i = interpolant of v evaluated at φ_i + s.
// S(s)ᵀ = S(-s), S(s1) S(s2) = S(s1 + s2).
Eigen::MatrixXd shift_matrix(int M, double s);

// exact d/dφ of the trigonometric interpolant, sampled on the grid
Eigen::MatrixXd fourier_derivative_matrix(int M);

// rows are angle samples
Eigen::MatrixXd angle_shift(const Eigen::MatrixXd& values, double shift);

}  // namespace ddeopt
