#include "dapdb/run.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace dapdb {

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

struct Recorder {
  const ProblemInstance& instance;
  double phi_star;
  double infeasibility_baseline;
  ErgodicAccumulator ergodic;

  TraceRow row(long k, const SolverState& state, const CommLedger& ledger) const {
    TraceRow r;
    r.k = k;
    const NodeVectors x = primal_iterates(state);
    r.log_rel_subopt = std::isnan(phi_star)
                           ? std::numeric_limits<double>::quiet_NaN()
                           : log_rel_suboptimality(x, instance, phi_star).value;
    const GuardedValue cons = rel_consensus_error(x);
    r.rel_consensus_err = cons.value;
    r.consensus_guarded = cons.guarded ? 1 : 0;
    r.rel_infeasibility =
        rel_infeasibility(node_mean(x), instance, infeasibility_baseline).value;
    long calls = 0;
    long backtracks = 0;
    for (const auto& a : state.agents) {
      calls += a.grad_calls;
      backtracks += a.total_backtracks;
    }
    r.avg_grad_calls_per_node = static_cast<double>(calls) / instance.num_nodes();
    r.neighbor_rounds = ledger.neighbor_rounds;
    r.flood_rounds = ledger.flood_rounds;
    r.total_backtracks = backtracks;
    return r;
  }

  void fill_ergodic(TraceRow& r) const {
    if (ergodic.empty()) return;
    const NodeVectors xe = ergodic.x();
    r.ergodic_subopt_gap = std::isnan(phi_star)
                               ? std::numeric_limits<double>::quiet_NaN()
                               : std::abs(separable_objective(xe, instance) - phi_star);
    r.ergodic_consensus_violation = consensus_residual(instance.graph, xe);
    r.ergodic_infeasibility = max_violation(xe, instance);
  }
};

}  // namespace

RunResult run_algorithm(const ProblemInstance& instance, const AlgorithmConfig& config,
                        const RunOptions& options) {
  if (options.iterations < 0) throw ValidationError("run: iterations must be >= 0");
  if (options.metric_stride < 1) throw ValidationError("run: metric stride must be >= 1");
  if (options.checkpoint_every > 0) {
    if (options.checkpoint_dir.empty()) throw ValidationError("run: checkpoint dir missing");
    std::filesystem::create_directories(options.checkpoint_dir);
  }

  RunResult res;
  res.trace.algorithm = to_string(config.algorithm);
  res.state = initialize(instance, config, res.ledger);

  Recorder rec{instance,
               instance.phi_star().value_or(std::numeric_limits<double>::quiet_NaN()),
               max_violation(node_mean(instance.x0), instance),
               {}};

  const long K = options.iterations;
  for (long k = 0; k < K; ++k) {
    const bool record = (k % options.metric_stride == 0) || k == K - 1;
    TraceRow row;
    if (record) row = rec.row(k, res.state, res.ledger);

    const NodeVectors x_k = primal_iterates(res.state);
    const NodeVectors theta_k = dual_iterates(res.state);
    const IterationReport rep = iterate(instance, res.state, config, res.ledger);
    rec.ergodic.add(rep.t, x_k, theta_k);

    if (rep.did_contract) {
      ++res.contraction_iterations;
      res.last_contraction = k;
    }
    for (int c : rep.per_node_backtracks) {
      res.max_node_contractions = std::max(res.max_node_contractions, c);
    }
    if (record) {
      row.t = rep.t;
      row.eta = rep.eta;
      row.gamma = rep.gamma;
      rec.fill_ergodic(row);
      res.trace.rows.push_back(row);
    }
    if (options.observer) options.observer(rep, res.state);
    if (options.checkpoint_every > 0 && (k + 1) % options.checkpoint_every == 0) {
      write_checkpoint(res.state, options.checkpoint_dir + "/checkpoint_" +
                                      std::to_string(k + 1) + ".json");
    }
  }

  res.trace.final_row = rec.row(K, res.state, res.ledger);
  rec.fill_ergodic(res.trace.final_row);
  if (!res.trace.rows.empty()) {
    const auto& last = res.trace.rows.back();
    res.trace.final_row.t = last.t;
    res.trace.final_row.eta = last.eta;
    res.trace.final_row.gamma = last.gamma;
  }
  if (!rec.ergodic.empty()) {
    res.trace.ergodic_x = rec.ergodic.x();
    res.trace.ergodic_theta = rec.ergodic.theta();
  }
  return res;
}

RunTrace dapd_run(const ProblemInstance& instance, const AlgorithmConfig& config, long K) {
  if (config.algorithm != Algorithm::kDapd) {
    throw ValidationError("dapd_run: config is for " + to_string(config.algorithm));
  }
  RunOptions opts;
  opts.iterations = K;
  return run_algorithm(instance, config, opts).trace;
}

void write_checkpoint(const SolverState& state, const std::string& path) {
  nlohmann::json j;
  j["iteration"] = state.iteration;
  j["t"] = state.t;
  j["tau_bar_max"] = state.tau_bar_max;
  auto& agents = j["agents"];
  agents = nlohmann::json::array();
  for (const auto& a : state.agents) {
    agents.push_back({{"x", to_std(a.x)},
                      {"theta", to_std(a.theta)},
                      {"s", to_std(a.s)},
                      {"tau", a.tau},
                      {"grad_calls", a.grad_calls},
                      {"total_backtracks", a.total_backtracks}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  out << j.dump(1) << '\n';
}

}  // namespace dapdb
