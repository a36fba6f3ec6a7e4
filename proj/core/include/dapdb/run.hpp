#pragma once

#include <functional>
#include <string>

#include "dapdb/algorithm.hpp"
#include "dapdb/metrics.hpp"

namespace dapdb {

struct RunOptions {
  long iterations = 1000;
  // Record every stride-th iteration (the last one is always kept).
  int metric_stride = 1;
  // Dump a JSON checkpoint every M iterations into checkpoint_dir (0 = off).
  long checkpoint_every = 0;
  std::string checkpoint_dir;
  // Called after every iteration with the report and the updated state.
  std::function<void(const IterationReport&, const SolverState&)> observer;
};

struct RunResult {
  RunTrace trace;
  SolverState state;
  CommLedger ledger;
  long contraction_iterations = 0;  // |I|
  int max_node_contractions = 0;    // largest single backtracking call
  long last_contraction = -1;       // last k with a contraction
};

// Runs K iterations of config.algorithm on the instance, recording metrics at
// x^k before iteration k. Counters in row k are those spent to produce x^k.
RunResult run_algorithm(const ProblemInstance& instance, const AlgorithmConfig& config,
                        const RunOptions& options);

// Constant-step baseline: eta = 1, tau_i = tau_hat_i, no inner loop.
RunTrace dapd_run(const ProblemInstance& instance, const AlgorithmConfig& config, long K);

void write_checkpoint(const SolverState& state, const std::string& path);

}  // namespace dapdb
