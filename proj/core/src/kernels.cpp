#include "dapdb/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace dapdb {

namespace {

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) {
    throw ValidationError(std::string(what) + ": non-finite input");
  }
}

}  // namespace

Vector prox_l1_box(const Vector& v, double weight, double radius) {
  require_finite(v, "prox_l1_box");
  if (!(weight >= 0.0) || !(radius > 0.0)) {
    throw ValidationError("prox_l1_box: need weight >= 0 and radius > 0");
  }
  Vector out(v.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    const double shrunk = std::copysign(std::max(std::abs(v[j]) - weight, 0.0), v[j]);
    out[j] = std::clamp(shrunk, -radius, radius);
  }
  return out;
}

Vector project_cone_ball(const Vector& v, double bound) {
  require_finite(v, "project_cone_ball");
  if (!(bound > 0.0)) {
    throw ValidationError("project_cone_ball: bound must be positive");
  }
  Vector out = v.cwiseMax(0.0);
  if (std::isfinite(bound)) {
    const double norm = out.norm();
    if (norm > bound) out *= bound / norm;
  }
  return out;
}

namespace {

void validate_constants(const StepConstants& k, double zeta) {
  const double c = k.c_alpha + k.c_beta + k.c_varsigma;
  if (!(k.delta > 0.0) || !(k.c_alpha > 0.0) || !(k.c_varsigma > 0.0) || k.c_beta < 0.0) {
    throw ValidationError("step constants: delta, c_alpha, c_varsigma must be positive, c_beta >= 0");
  }
  if (!(k.delta + c < 1.0)) {
    throw ValidationError("step constants: need delta + c_alpha + c_beta + c_varsigma < 1");
  }
  if (!(zeta > 0.0)) {
    throw ValidationError("step constants: zeta must be positive");
  }
}

}  // namespace

double hat_tau(const NodeSmoothness& smooth, double dual_bound, const StepConstants& consts,
               double zeta) {
  validate_constants(consts, zeta);
  const double lf = smooth.lipschitz_grad_f;
  const double lg = smooth.lipschitz_jac_g;
  const double cg = smooth.jac_bound;
  if (lf < 0.0 || lg < 0.0 || cg < 0.0 || !(dual_bound > 0.0)) {
    throw ValidationError("hat_tau: smoothness constants must be nonnegative, B positive");
  }
  const double margin = 1.0 - (consts.delta + consts.c_alpha + consts.c_beta + consts.c_varsigma);

  // L_g * B with the convention 0 * inf = 0 (no constraint curvature).
  const double lgb = (lg == 0.0) ? 0.0 : lg * dual_bound;
  double first = kInfinity;
  if (lgb > 0.0) {
    if (consts.c_beta == 0.0) {
      throw ValidationError("hat_tau: c_beta must be positive when L_g * B > 0");
    }
    const double a = lgb * lgb / consts.c_beta;
    if (std::isinf(a)) {
      throw ValidationError("hat_tau: L_g * B must be finite");
    }
    first = 2.0 * margin / (lf + std::sqrt(lf * lf + 4.0 * margin * a));
  } else if (lf > 0.0) {
    first = margin / lf;
  }

  double second = kInfinity;
  if (cg > 0.0) {
    second = std::sqrt(consts.c_alpha * (1.0 - consts.delta) / (2.0 * zeta)) / cg;
  }
  return std::min(first, second);
}

bool satisfies_step_certificate(double tau, const NodeSmoothness& smooth, double dual_bound,
                                const StepConstants& consts, double zeta, double slack) {
  const double c = consts.c_alpha + consts.c_beta + consts.c_varsigma;
  const double lhs = (1.0 - consts.delta) / tau;
  const double lgb = (smooth.lipschitz_jac_g == 0.0) ? 0.0 : smooth.lipschitz_jac_g * dual_bound;
  double curvature = 0.0;
  if (lgb > 0.0) curvature = lgb * lgb / consts.c_beta * tau;
  const double rhs1 = c / tau + smooth.lipschitz_grad_f + curvature;
  const double rhs2 = 2.0 * zeta * smooth.jac_bound * smooth.jac_bound / consts.c_alpha * tau;
  return lhs >= rhs1 * (1.0 - slack) && lhs >= rhs2 * (1.0 - slack);
}

}  // namespace dapdb
