#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dapdb/graph.hpp"
#include "dapdb/problem.hpp"

namespace dapdb {

// A metric value plus a flag set when the normalizer was (near) zero and the
// absolute quantity was returned instead.
struct GuardedValue {
  double value = 0.0;
  bool guarded = false;
};

inline constexpr double kConsensusGuard = 1e-12;

Vector node_mean(const NodeVectors& x);

// log(|sum_i varphi_i(xbar) - phi*| / |phi*| + 1) with xbar the node mean;
// log(|gap| + 1) (guarded) when phi* = 0.
GuardedValue log_rel_suboptimality(const NodeVectors& x, const ProblemInstance& instance,
                                   double phi_star);

// sum_i ||x_i - xbar||^2 / (N ||xbar||^2); the unnormalized mean squared
// deviation (guarded) when ||xbar|| <= 1e-12.
GuardedValue rel_consensus_error(const NodeVectors& x);

// max_i ||(g_i(x))_+||
double max_violation(const Vector& x, const ProblemInstance& instance);
// Same with node i evaluated at its own point x_i.
double max_violation(const NodeVectors& x, const ProblemInstance& instance);

// max_violation(xbar) / baseline; the absolute violation (guarded) when
// baseline is zero.
GuardedValue rel_infeasibility(const Vector& x_bar, const ProblemInstance& instance,
                               double baseline);

// ||A x|| over the stacked edge differences.
double consensus_residual(const NetworkGraph& graph, const NodeVectors& x);

// Diagnostic multiplier of the consensus constraint, lambda = A s.
NodeVectors reconstruct_lambda(const NetworkGraph& graph, const NodeVectors& s);

// sum_i varphi_i(x_i)
double separable_objective(const NodeVectors& x, const ProblemInstance& instance);

struct TraceRow {
  long k = 0;
  double t = 1.0;
  double eta = 1.0;
  double gamma = 0.0;
  double log_rel_subopt = 0.0;
  double rel_consensus_err = 0.0;
  int consensus_guarded = 0;
  double rel_infeasibility = 0.0;
  double avg_grad_calls_per_node = 0.0;
  std::uint64_t neighbor_rounds = 0;
  std::uint64_t flood_rounds = 0;
  long total_backtracks = 0;
  // Metrics of the t-weighted averages of x^0..x^k (per node).
  double ergodic_subopt_gap = 0.0;
  double ergodic_consensus_violation = 0.0;
  double ergodic_infeasibility = 0.0;

  // Field-wise equality; NaN compares equal to NaN.
  bool same_as(const TraceRow& other) const;
};

struct RunTrace {
  std::string algorithm;
  std::vector<TraceRow> rows;
  // Metrics at the last iterate x^K (k = K).
  TraceRow final_row;
  // t-weighted ergodic averages over x^0..x^{K-1}.
  NodeVectors ergodic_x;
  NodeVectors ergodic_theta;
};

const std::vector<std::string>& trace_columns();

void csv_export(const RunTrace& trace, std::ostream& out);
void csv_export(const RunTrace& trace, const std::string& path);
std::vector<TraceRow> csv_parse(std::istream& in);
std::vector<TraceRow> csv_parse_file(const std::string& path);

// "%.17g"
std::string format_double(double v);

}  // namespace dapdb
