#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dapdb/graph.hpp"
#include "dapdb/kernels.hpp"
#include "dapdb/types.hpp"

namespace dapdb {

// q(x) = 0.5 (x - o)^T P (x - o) + b^T (x - o) + c, with P symmetric.
struct QuadraticForm {
  Matrix hessian;
  Vector linear;
  double constant = 0.0;
  Vector center;

  static QuadraticForm zero(int dim);
  static QuadraticForm affine(const Vector& linear, double constant);

  int dim() const { return static_cast<int>(linear.size()); }
  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  // q(x + d) - q(x) - <grad q(x), d> = 0.5 d^T P d, evaluated without cancellation.
  double bregman(const Vector& d) const { return 0.5 * d.dot(hessian * d); }
  void validate(int dim) const;
};

// phi(x) = weight * ||x||_1 + indicator{ ||x||_inf <= radius }.
struct L1BoxRegularizer {
  double weight = 0.0;
  double radius = kInfinity;

  // +inf outside the box (with a 1e-12 relative allowance for rounding).
  double value(const Vector& x) const;
  Vector prox(const Vector& v, double tau) const { return prox_l1_box(v, tau * weight, radius); }
  bool contains(const Vector& x) const;
};

// One agent's private data: smooth objective f_i, scalar constraints
// g_ij(x) <= 0 (cone R_+^{m_i}), nonsmooth term phi_i and the dual bound B_i.
class NodeProblem {
 public:
  NodeProblem(QuadraticForm objective, std::vector<QuadraticForm> constraints,
              L1BoxRegularizer regularizer, double dual_bound = kInfinity,
              std::optional<NodeSmoothness> smoothness = std::nullopt);

  int dim() const { return objective_.dim(); }
  int num_constraints() const { return static_cast<int>(constraints_.size()); }

  double f_value(const Vector& x) const { return objective_.value(x); }
  Vector f_grad(const Vector& x) const { return objective_.gradient(x); }
  // f(x') - f(x) - <grad f(x), x' - x>
  double f_bregman(const Vector& x, const Vector& x_other) const {
    return objective_.bregman(x_other - x);
  }
  // <grad f(x') - grad f(x), x' - x>
  double f_gradient_gap(const Vector& x, const Vector& x_other) const {
    return 2.0 * objective_.bregman(x_other - x);
  }
  Vector g_value(const Vector& x) const;
  // Jg(x)^T theta
  Vector g_jac_T_apply(const Vector& x, const Vector& theta) const;
  // (Jg(x) - Jg(x'))^T theta
  Vector g_jac_diff_T_apply(const Vector& x, const Vector& x_other, const Vector& theta) const;
  Vector prox_phi(const Vector& v, double tau) const { return regularizer_.prox(v, tau); }
  Vector project_dual(const Vector& theta) const;

  double phi_value(const Vector& x) const { return regularizer_.value(x); }
  // varphi_i = phi_i + f_i
  double local_objective(const Vector& x) const { return phi_value(x) + f_value(x); }
  // ||(g_i(x))_+||
  double violation(const Vector& x) const;

  double dual_bound() const { return dual_bound_; }
  // D_i with ||x|| <= D_i on dom phi_i.
  double domain_radius() const;

  const QuadraticForm& objective() const { return objective_; }
  const std::vector<QuadraticForm>& constraints() const { return constraints_; }
  const L1BoxRegularizer& regularizer() const { return regularizer_; }
  const std::optional<NodeSmoothness>& smoothness() const { return smoothness_; }

 private:
  QuadraticForm objective_;
  std::vector<QuadraticForm> constraints_;
  L1BoxRegularizer regularizer_;
  double dual_bound_;
  std::optional<NodeSmoothness> smoothness_;
};

// Cached centralized solution.
struct ReferenceSolution {
  Vector x_star;
  double phi_star = 0.0;
  NodeVectors theta_star;
  double kkt_residual = kInfinity;
  std::string method_tag;
  double tolerance = 0.0;
  long iterations = 0;
};

struct ProblemInstance {
  std::string family = "custom";  // "qcqp", "qp" or "custom"
  std::uint64_t seed = 0;
  NetworkGraph graph;
  std::vector<NodeProblem> nodes;
  NodeVectors x0;
  std::string generator_tag;
  std::optional<ReferenceSolution> reference;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int dim() const { return nodes.empty() ? 0 : nodes.front().dim(); }
  bool has_constraints() const;
  std::optional<double> phi_star() const {
    if (reference) return reference->phi_star;
    return std::nullopt;
  }
  // sum_i varphi_i(x)
  double objective(const Vector& x) const;

  // Shared dimension, one node per graph vertex, x0_i in dom phi_i.
  void validate() const;
};

}  // namespace dapdb
