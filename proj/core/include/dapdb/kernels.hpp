#pragma once

#include "dapdb/types.hpp"

namespace dapdb {

// Coordinatewise minimizer of weight*|w| + 0.5*(w - v)^2 over [-radius, radius]:
// soft-thresholding followed by clamping. radius may be +inf.
Vector prox_l1_box(const Vector& v, double weight, double radius);

// Euclidean projection onto {theta >= 0} ∩ {||theta|| <= bound}. For the
// nonnegative orthant intersected with a centered ball the projection is the
// clip followed by radial scaling. bound = +inf skips the scaling.
Vector project_cone_ball(const Vector& v, double bound);

struct StepConstants {
  double delta = 0.1;
  double c_alpha = 0.1;
  double c_beta = 0.1;
  double c_varsigma = 0.1;
};

struct NodeSmoothness {
  double lipschitz_grad_f = 0.0;  // L_f
  double lipschitz_jac_g = 0.0;   // L_g
  double jac_bound = 0.0;         // C_g
};

// Largest primal step for which the node's backtracking test is guaranteed to
// pass:
//   min{ 2(1-delta-c) / (L_f + sqrt(L_f^2 + 4(1-delta-c) L_g^2 B^2 / c_beta)),
//        (1/C_g) sqrt(c_alpha (1-delta) / (2 zeta)) }.
// The first branch is the positive root of the quadratic written in a
// cancellation-free form; it reduces to (1-delta-c)/L_f when L_g*B = 0.
// Returns +inf when both branches are unbounded (f affine, no constraints).
double hat_tau(const NodeSmoothness& smooth, double dual_bound, const StepConstants& consts,
               double zeta);

// Both inequalities that certify the backtracking test at step tau:
//   (1-delta)/tau >= c/tau + L_f + L_g^2 B^2 tau / c_beta
//   (1-delta)/tau >= 2 zeta C_g^2 tau / c_alpha
// `slack` is a relative tolerance applied to the right-hand sides.
bool satisfies_step_certificate(double tau, const NodeSmoothness& smooth, double dual_bound,
                                const StepConstants& consts, double zeta, double slack = 0.0);

}  // namespace dapdb
