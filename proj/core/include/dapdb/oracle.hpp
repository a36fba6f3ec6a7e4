#pragma once

#include "dapdb/problem.hpp"

namespace dapdb {

struct CentralizedOptions {
  double tol = 1e-10;
  long max_iters = 2'000'000;
  // Dual-to-primal step ratio of the single-node primal-dual loop; <= 0
  // starts at 1e4 and rebalances it from the primal/dual residual ratio.
  double zeta = 0.0;
  // Residual is evaluated every `check_every` iterations.
  int check_every = 10;
};

// min_x sum_i varphi_i(x) s.t. g_i(x) <= 0 for all i, solved by a single-agent
// primal-dual loop with backtracking on the aggregated problem. Throws
// SolverError with the best residual if the cap is reached.
ReferenceSolution solve_centralized(const ProblemInstance& instance,
                                    const CentralizedOptions& options = {});
ReferenceSolution solve_centralized(const ProblemInstance& instance, double tol);

// Exhaustive evaluation of sum_i varphi_i over the lattice step * Z^n inside
// dom phi, skipping infeasible points. Only n <= 3. Restricts the search to
// the bounding box of each node's constraint ellipsoid when g_i is strongly
// convex, and solves each grid line's feasible interval in closed form before
// checking every point exactly. Returns +inf if no lattice point is feasible.
double brute_force_grid(const ProblemInstance& instance, double grid_step);

// max of: ||x - prox_phi(x - (grad f(x) + sum_i Jg_i(x)^T theta_i))||,
// max_i max_j (g_ij(x))_+, max_i max_j |theta_ij g_ij(x)|, where f and phi are
// the network sums.
double kkt_residual(const ProblemInstance& instance, const Vector& x, const NodeVectors& theta);

// Bound on the Lipschitz constant of sum_i varphi_i on dom phi (Euclidean norm):
// ||P|| R sqrt(n) + ||b|| + w sqrt(n). Used for grid tolerances.
double objective_lipschitz_bound(const ProblemInstance& instance);

}  // namespace dapdb
