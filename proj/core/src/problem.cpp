#include "dapdb/problem.hpp"

#include <cmath>

namespace dapdb {

QuadraticForm QuadraticForm::zero(int dim) {
  return QuadraticForm{Matrix::Zero(dim, dim), Vector::Zero(dim), 0.0, Vector::Zero(dim)};
}

QuadraticForm QuadraticForm::affine(const Vector& linear, double constant) {
  const auto n = linear.size();
  return QuadraticForm{Matrix::Zero(n, n), linear, constant, Vector::Zero(n)};
}

double QuadraticForm::value(const Vector& x) const {
  const Vector d = x - center;
  return 0.5 * d.dot(hessian * d) + linear.dot(d) + constant;
}

Vector QuadraticForm::gradient(const Vector& x) const {
  return hessian * (x - center) + linear;
}

void QuadraticForm::validate(int n) const {
  if (hessian.rows() != n || hessian.cols() != n || linear.size() != n || center.size() != n) {
    throw ValidationError("quadratic form: dimension mismatch (expected " + std::to_string(n) + ")");
  }
  if (!hessian.allFinite() || !linear.allFinite() || !center.allFinite() ||
      !std::isfinite(constant)) {
    throw ValidationError("quadratic form: non-finite data");
  }
}

double L1BoxRegularizer::value(const Vector& x) const {
  if (!contains(x)) return kInfinity;
  return weight * x.lpNorm<1>();
}

bool L1BoxRegularizer::contains(const Vector& x) const {
  if (std::isinf(radius)) return x.allFinite();
  const double limit = radius * (1.0 + 1e-12);
  return x.size() == 0 || x.cwiseAbs().maxCoeff() <= limit;
}

NodeProblem::NodeProblem(QuadraticForm objective, std::vector<QuadraticForm> constraints,
                         L1BoxRegularizer regularizer, double dual_bound,
                         std::optional<NodeSmoothness> smoothness)
    : objective_(std::move(objective)),
      constraints_(std::move(constraints)),
      regularizer_(regularizer),
      dual_bound_(dual_bound),
      smoothness_(smoothness) {
  const int n = objective_.dim();
  if (n < 1) throw ValidationError("node problem: dimension must be positive");
  objective_.validate(n);
  for (const auto& g : constraints_) g.validate(n);
  if (!(regularizer_.weight >= 0.0) || !(regularizer_.radius > 0.0)) {
    throw ValidationError("node problem: need l1 weight >= 0 and box radius > 0");
  }
  if (!(dual_bound_ > 0.0)) {
    throw ValidationError("node problem: dual bound must be positive (inf allowed)");
  }
}

Vector NodeProblem::g_value(const Vector& x) const {
  Vector out(num_constraints());
  for (int j = 0; j < num_constraints(); ++j) out[j] = constraints_[j].value(x);
  return out;
}

Vector NodeProblem::g_jac_T_apply(const Vector& x, const Vector& theta) const {
  Vector out = Vector::Zero(dim());
  for (int j = 0; j < num_constraints(); ++j) {
    if (theta[j] != 0.0) out += theta[j] * constraints_[j].gradient(x);
  }
  return out;
}

Vector NodeProblem::g_jac_diff_T_apply(const Vector& x, const Vector& x_other,
                                       const Vector& theta) const {
  Vector out = Vector::Zero(dim());
  const Vector d = x - x_other;
  for (int j = 0; j < num_constraints(); ++j) {
    if (theta[j] != 0.0) out += theta[j] * (constraints_[j].hessian * d);
  }
  return out;
}

Vector NodeProblem::project_dual(const Vector& theta) const {
  if (theta.size() == 0) return theta;
  return project_cone_ball(theta, dual_bound_);
}

double NodeProblem::violation(const Vector& x) const {
  if (num_constraints() == 0) return 0.0;
  return g_value(x).cwiseMax(0.0).norm();
}

double NodeProblem::domain_radius() const {
  return regularizer_.radius * std::sqrt(static_cast<double>(dim()));
}

bool ProblemInstance::has_constraints() const {
  for (const auto& node : nodes) {
    if (node.num_constraints() > 0) return true;
  }
  return false;
}

double ProblemInstance::objective(const Vector& x) const {
  double total = 0.0;
  for (const auto& node : nodes) total += node.local_objective(x);
  return total;
}

void ProblemInstance::validate() const {
  if (nodes.empty()) throw ValidationError("instance has no nodes");
  if (graph.num_nodes() != num_nodes()) {
    throw ValidationError("instance: graph has " + std::to_string(graph.num_nodes()) +
                          " nodes but " + std::to_string(num_nodes()) + " node problems");
  }
  const int n = dim();
  for (const auto& node : nodes) {
    if (node.dim() != n) throw ValidationError("instance: nodes disagree on dimension");
  }
  if (x0.size() != nodes.size()) throw ValidationError("instance: need one x0 per node");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (x0[i].size() != n) throw ValidationError("instance: x0 has wrong dimension");
    if (!nodes[i].regularizer().contains(x0[i])) {
      throw ValidationError("instance: x0_" + std::to_string(i) + " is outside dom phi_i");
    }
  }
}

}  // namespace dapdb
