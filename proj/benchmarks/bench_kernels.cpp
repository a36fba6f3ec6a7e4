#include <random>

#include <benchmark/benchmark.h>

#include "dapdb/algorithm.hpp"
#include "dapdb/generators.hpp"
#include "dapdb/graph.hpp"
#include "dapdb/kernels.hpp"
#include "dapdb/metrics.hpp"

using namespace dapdb;

namespace {

Vector random_vector(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 5.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = nd(rng);
  return v;
}

void BM_ProxL1Box(benchmark::State& state) {
  const Vector v = random_vector(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(prox_l1_box(v, 0.3, 10.0));
}
BENCHMARK(BM_ProxL1Box)->Arg(20)->Arg(200);

void BM_ProjectConeBall(benchmark::State& state) {
  const Vector v = random_vector(static_cast<int>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(project_cone_ball(v, 3.0));
}
BENCHMARK(BM_ProjectConeBall)->Arg(1)->Arg(50);

void BM_NeighborDiff(benchmark::State& state) {
  const int nodes = static_cast<int>(state.range(0));
  const NetworkGraph g = build_small_world(nodes, 2 * nodes, 7);
  NodeVectors s;
  for (int i = 0; i < nodes; ++i) s.push_back(random_vector(20, 100 + i));
  CommLedger ledger;
  for (auto _ : state) benchmark::DoNotOptimize(neighbor_diff(g, s, ledger));
}
BENCHMARK(BM_NeighborDiff)->Arg(12)->Arg(100);

void BM_Iteration(benchmark::State& state, Algorithm algo, bool qcqp) {
  const ProblemInstance inst = qcqp ? gen_qcqp(20, 12, 1) : gen_qp(20, 12, 1);
  ParameterSet p;
  if (!qcqp) {
    p.consts = {0.1, 0.4, 0.0, 0.4};
    p.hat_tau_rule = HatTauRule::kHalfInverseLipschitz;
  }
  const AlgorithmConfig cfg = make_config(inst, algo, p);
  CommLedger ledger;
  SolverState s = initialize(inst, cfg, ledger);
  for (auto _ : state) benchmark::DoNotOptimize(iterate(inst, s, cfg, ledger));
}
BENCHMARK_CAPTURE(BM_Iteration, dapdb_qcqp, Algorithm::kDapdb, true);
BENCHMARK_CAPTURE(BM_Iteration, dapd_qcqp, Algorithm::kDapd, true);
BENCHMARK_CAPTURE(BM_Iteration, dapdb0_qp, Algorithm::kDapdb0, false);

void BM_TraceMetrics(benchmark::State& state) {
  const ProblemInstance inst = gen_qcqp(20, 12, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rel_consensus_error(inst.x0));
    benchmark::DoNotOptimize(max_violation(node_mean(inst.x0), inst));
  }
}
BENCHMARK(BM_TraceMetrics);

}  // namespace

BENCHMARK_MAIN();
