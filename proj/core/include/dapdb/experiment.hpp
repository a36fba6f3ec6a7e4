#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dapdb/algorithm.hpp"
#include "dapdb/metrics.hpp"
#include "dapdb/problem.hpp"

namespace dapdb {

struct AlgorithmEntry {
  std::string label;  // file stem and aggregate key; defaults to the algorithm name
  Algorithm algorithm = Algorithm::kDapdb;
  ParameterSet params;
};

struct ExperimentSpec {
  std::string family = "qcqp";  // "qcqp" | "qp"
  int n = 20;
  int num_nodes = 12;
  int num_edges = 24;
  std::vector<std::uint64_t> seeds;
  std::vector<AlgorithmEntry> algorithms;
  long iterations = 1000;
  int metric_stride = 1;
  std::string output_dir;  // empty: $DAPDB_OUTPUT_DIR, then "dapdb_out"
  int jobs = 1;
  double reference_tol = 1e-10;

  void validate() const;
};

// QCQP: n=20, N=12, |E|=24, seeds 1..20, D-APDB (kappa 20) and D-APD with
// zeta=1, c_alpha=c_beta=c_varsigma=0.1, delta=0.1, rho=0.9.
// QP: same network, D-APDB0 (kappa 5) and D-APD with c_alpha=c_varsigma=0.4,
// c_beta=0, delta=0.1, rho=0.9 and tau_hat = 1/(2 L_f).
ExperimentSpec default_spec(const std::string& family);

// JSON spec files. Missing keys keep the family defaults; an "algorithms"
// array replaces the default list.
ExperimentSpec spec_from_json(const std::string& text);
std::string spec_to_json(const ExperimentSpec& spec);
ExperimentSpec load_spec(const std::string& path);

ParameterSet parameter_set_from_json(const std::string& text, ParameterSet base = {});

std::string resolved_output_dir(const ExperimentSpec& spec);

// Instance of the experiment family for one seed (no reference attached).
ProblemInstance make_instance(const ExperimentSpec& spec, std::uint64_t seed);

enum class AggregateAxis { kIteration, kGradCalls, kCommRounds };
std::string to_string(AggregateAxis axis);

// x-coordinate of a row on the given axis. Communication is counted in
// neighbor rounds; max-consensus floods are reported separately.
double axis_value(const TraceRow& row, AggregateAxis axis);

// Recorded rows followed by the final row at k = K.
std::vector<TraceRow> trace_points(const RunTrace& trace);

// Step interpolation: the row with the largest axis value <= x (the first
// row when x precedes all of them).
const TraceRow& row_at(const std::vector<TraceRow>& points, AggregateAxis axis, double x);

// Largest axis value reached by every trace.
double common_budget(const std::vector<RunTrace>& traces, AggregateAxis axis);

struct AggregateRow {
  std::string label;
  AggregateAxis axis = AggregateAxis::kIteration;
  double x = 0.0;
  int count = 0;
  double mean_log_rel_subopt = 0.0;
  double std_log_rel_subopt = 0.0;
  double mean_rel_consensus_err = 0.0;
  double std_rel_consensus_err = 0.0;
  double mean_rel_infeasibility = 0.0;
  double std_rel_infeasibility = 0.0;
};

// Mean and population standard deviation across traces of one algorithm.
// The iteration axis uses the recorded iteration indices; the other axes
// use `grid_points` evenly spaced values up to the common budget.
std::vector<AggregateRow> aggregate(const std::string& label,
                                    const std::vector<RunTrace>& traces, AggregateAxis axis,
                                    int grid_points = 200);

void aggregate_csv_export(const std::vector<AggregateRow>& rows, std::ostream& out);

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<RunTrace> traces;  // one per spec algorithm, in order
};

struct ExperimentResult {
  std::vector<SeedOutcome> seeds;
  std::vector<AggregateRow> aggregate;
  std::string output_dir;

  int failed_seeds() const;
  // 0 all seeds ok, 2 every seed failed, 3 some seeds failed.
  int exit_code() const;
};

// Per seed: instance + reference (seed_<s>/instance.json), one CSV per
// algorithm (seed_<s>/<label>.csv). Then aggregate.csv over the successful
// seeds and summary.json. Seeds run on `jobs` worker threads.
ExperimentResult run_experiment(const ExperimentSpec& spec, std::ostream* log = nullptr);

// Resolved plan without running anything.
std::string describe(const ExperimentSpec& spec);

}  // namespace dapdb
