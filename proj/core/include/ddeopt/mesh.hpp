#pragma once

#include <Eigen/Dense>
#include <functional>
#include <nlohmann/json_fwd.hpp>
#include <vector>

namespace ddeopt {

using Eigen::VectorXd;

enum class Side { Left, Right };

inline constexpr double kBreakpointMergeTol = 1e-10;

// Gauss–Legendre nodes and weights mapped to (0,1); weights sum to 1.
void gauss_legendre(int m, std::vector<double>& nodes, std::vector<double>& weights);

// Lagrange basis on the d+1 equispaced points j/d of [0,1], and its σ-derivative.
void lagrange_basis(int d, double sigma, double* w);
void lagrange_basis_derivative(int d, double sigma, double* w);

struct Location {
  int interval = 0;
  double sigma = 0.0;  // local coordinate in [0,1]
};

class Mesh {
 public:
  Mesh() = default;
  Mesh(std::vector<double> breakpoints, int N, int degree);

  const std::vector<double>& breakpoints() const { return bp_; }
  int segments() const { return static_cast<int>(bp_.size()) - 1; }
  int N() const { return N_; }
  int degree() const { return d_; }
  int intervals() const { return segments() * N_; }
  int nodes_per_interval() const { return d_; }

  double interval_start(int k) const;
  double interval_end(int k) const;
  double interval_length(int k) const { return interval_end(k) - interval_start(k); }
  int segment_of(int k) const { return k / N_; }
  double basepoint(int k, int j) const;
  double node(int k, int m) const { return interval_start(k) + gauss_x_[m] * interval_length(k); }

  const std::vector<double>& gauss_nodes() const { return gauss_x_; }
  const std::vector<double>& gauss_weights() const { return gauss_w_; }

  Location locate(double tau, Side side) const;

  bool operator==(const Mesh& o) const { return bp_ == o.bp_ && N_ == o.N_ && d_ == o.d_; }

 private:
  std::vector<double> bp_;
  int N_ = 0;
  int d_ = 0;
  std::vector<double> gauss_x_, gauss_w_;
};

Mesh build_mesh(const std::vector<double>& breakpoints, int N, int d);

// Piecewise polynomial in Lagrange form; interval k stores d+1 basepoint values.
// Coefficient layout: ((k*(d+1)) + j)*dim + c.
class SegmentedFunction {
 public:
  SegmentedFunction() = default;
  SegmentedFunction(Mesh mesh, int dim);
  SegmentedFunction(Mesh mesh, int dim, VectorXd coefficients);

  static SegmentedFunction sample(const Mesh& mesh, int dim, const std::function<VectorXd(double)>& g);

  const Mesh& mesh() const { return mesh_; }
  int dim() const { return dim_; }
  const VectorXd& coefficients() const { return c_; }
  VectorXd& coefficients() { return c_; }
  Eigen::Index index(int k, int j) const { return (static_cast<Eigen::Index>(k) * (mesh_.degree() + 1) + j) * dim_; }
  VectorXd value(int k, int j) const { return c_.segment(index(k, j), dim_); }

  // one flag per breakpoint; endpoints 0 and 1 are never jumps
  const std::vector<bool>& jump_allowed() const { return jumps_; }
  void allow_jump(int breakpoint, bool on = true);

 private:
  Mesh mesh_;
  int dim_ = 0;
  VectorXd c_;
  std::vector<bool> jumps_;
};

VectorXd eval(const SegmentedFunction& sf, double tau, Side side = Side::Right);
VectorXd eval_shifted(const SegmentedFunction& sf, double tau, double a, int j, Side side = Side::Right);
VectorXd eval_derivative(const SegmentedFunction& sf, double tau, Side side = Side::Right);
SegmentedFunction remesh(const SegmentedFunction& sf, const Mesh& mesh);

// ∫_lo^hi w(τ) a(τ)·b(τ) dτ by Gauss quadrature on each mesh interval.
double integrate_against(const SegmentedFunction& a, const SegmentedFunction& b,
                         const std::function<double(double)>& weight, double lo = 0.0, double hi = 1.0);

void to_json(nlohmann::json& j, const Mesh& m);
void from_json(const nlohmann::json& j, Mesh& m);
void to_json(nlohmann::json& j, const SegmentedFunction& sf);
void from_json(const nlohmann::json& j, SegmentedFunction& sf);

}  // namespace ddeopt
