#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dapdb/graph.hpp"
#include "dapdb/kernels.hpp"
#include "dapdb/problem.hpp"

namespace dapdb {

enum class Algorithm { kDapdb, kDapdb0, kDapd };

std::string to_string(Algorithm algo);
Algorithm parse_algorithm(const std::string& name);

// How the reference step tau_hat_i is obtained from the node's smoothness data.
enum class HatTauRule {
  kTheory,                // hat_tau(): the step that certifies the backtracking test
  kHalfInverseLipschitz,  // 1 / (2 L_f)
};

std::string to_string(HatTauRule rule);
HatTauRule parse_hat_tau_rule(const std::string& name);

// User-facing knobs; make_config() resolves them against an instance.
struct ParameterSet {
  StepConstants consts;
  std::optional<double> c_gamma;  // default 1 / (2|E|)
  double rho = 0.9;
  double zeta = 1.0;
  double kappa = 1.0;  // tau_bar_i = kappa * tau_hat_i
  HatTauRule hat_tau_rule = HatTauRule::kTheory;
  // Replace Lambda by <grad f(x~) - grad f(x), x~ - x> in the test.
  bool inner_product_test = false;
  // Explicit tau_bar_i; required when nodes carry no smoothness data.
  std::optional<std::vector<double>> tau_bar;
  // Per-call contraction cap; 0 derives it from tau_bar / tau_hat.
  int max_backtracks = 0;
};

struct AlgorithmConfig {
  Algorithm algorithm = Algorithm::kDapdb;
  StepConstants consts;
  double c_gamma = 0.0;
  double rho = 0.9;
  double kappa = 1.0;
  HatTauRule hat_tau_rule = HatTauRule::kTheory;
  bool inner_product_test = false;
  std::vector<double> zeta;
  std::vector<double> tau_bar;
  std::vector<double> hat_tau;  // +inf where unknown
  std::vector<int> max_backtracks;

  // Throws ValidationError when the constants violate the method's
  // requirements or do not match the instance.
  void validate(const ProblemInstance& instance) const;
};

inline constexpr int kDefaultMaxBacktracks = 500;

AlgorithmConfig make_config(const ProblemInstance& instance, Algorithm algo,
                            const ParameterSet& params);

// 10 * (max(0, ceil(log_{1/rho}(tau_bar / tau_hat))) + 1), or the default
// cap when tau_hat is unknown.
int backtrack_cap(double tau_bar, double tau_hat, double rho);

struct AgentState {
  Vector x;           // x_i^k
  Vector x_prev;      // x_i^{k-1}
  Vector theta;       // theta_i^k
  Vector theta_prev;  // theta_i^{k-1}
  Vector s;           // s_i^k
  Vector r;           // r_i^k
  Vector r_prev;      // r_i^{k-1}
  Vector grad;        // grad f_i(x_i^k)
  double f_x = 0.0;   // f_i(x_i^k)
  double tau = 0.0;   // tau_i^{k-1}
  double sigma = 0.0; // sigma_i^{k-1}
  int backtracks_this_iter = 0;
  long grad_calls = 0;
  long total_backtracks = 0;
};

struct SolverState {
  std::vector<AgentState> agents;
  double tau_bar_max = 0.0;
  long iteration = 0;          // index k of the next iteration
  double t = 1.0;              // t_{k-1}
  std::vector<double> tau0;    // tau_i^0, known after iteration 0
};

// Initialization of the state machine, including the startup flood that
// computes max_i tau_bar_i and one oracle call per node at x_i^0.
SolverState initialize(const ProblemInstance& instance, const AlgorithmConfig& config,
                       CommLedger& ledger);

// 2 Lambda - (1/tau)(1-c) ||dx||^2 - (1/(zeta tau)) ||dtheta||^2
//   + (2 tau / c_alpha) ||Jg(x~)^T dtheta||^2 + (tau / c_beta) ||(Jg(x~) - Jg(x))^T theta||^2
// with Lambda = f(x~) - f(x) - <grad f(x), x~ - x>. The c_beta term is dropped when
// c_beta = 0 (only valid without constraints).
double test_function_E(const NodeProblem& node, const Vector& x, const Vector& theta,
                       const Vector& x_cand, const Vector& theta_cand, double tau_tilde,
                       double zeta, const StepConstants& consts, bool inner_product = false);

// Right-hand side of the acceptance test: -(delta/tau)||dx||^2 - (delta/(zeta tau))||dtheta||^2.
double test_threshold(const Vector& x, const Vector& theta, const Vector& x_cand,
                      const Vector& theta_cand, double tau_tilde, double zeta, double delta);

struct Candidate {
  Vector x;
  Vector theta;
};

// x+ = prox_{tau phi}(x - tau (grad f(x) + r + eta (r - r_prev))),
// theta+ = P(theta + zeta tau g(x+)).
Candidate primal_dual_step(const NodeProblem& node, const AgentState& agent, double tau,
                           double eta, double zeta);

struct BacktrackResult {
  double tau_tilde = 0.0;
  double eta = 1.0;
  Candidate candidate;
  int num_contractions = 0;
  int oracle_calls = 0;
};

// Inner loop of one node: contract tau~ by rho until the test holds.
BacktrackResult backtrack_node(const NodeProblem& node, const AgentState& agent,
                               const AlgorithmConfig& config, int node_index);

// (c_gamma / tau_bar) (2/c_alpha + eta/c_varsigma)^{-1}
double gamma_update(double eta, double tau_bar_max, double c_gamma, const StepConstants& consts);

struct IterationReport {
  long k = 0;
  double eta = 1.0;
  double gamma = 0.0;
  double t = 1.0;
  bool did_contract = false;
  std::vector<int> per_node_backtracks;
  std::vector<double> per_node_eta;
  // (sum_i d_i (2 tau_i^k / c_alpha + eta tau_i^{k-1} / c_varsigma))^{-1}
  double gamma_bound = 0.0;
  // max_i |tau_i^k / tau_i^0 - t_k|
  double step_ratio_error = 0.0;
};

// One outer iteration of the configured method. Throws SolverError on
// runaway backtracking, non-finite state or divergence.
IterationReport iterate(const ProblemInstance& instance, SolverState& state,
                        const AlgorithmConfig& config, CommLedger& ledger);

IterationReport dapdb_iterate(const ProblemInstance& instance, SolverState& state,
                              const AlgorithmConfig& config, CommLedger& ledger);
IterationReport dapdb0_iterate(const ProblemInstance& instance, SolverState& state,
                               const AlgorithmConfig& config, CommLedger& ledger);
IterationReport dapd_iterate(const ProblemInstance& instance, SolverState& state,
                             const AlgorithmConfig& config, CommLedger& ledger);

// t_0 = 1, t_k = t_{k-1} / eta[k]; eta[0] is ignored.
std::vector<double> t_weights(const std::vector<double>& eta);

// Running t-weighted average of per-node iterates.
class ErgodicAccumulator {
 public:
  void add(double weight, const NodeVectors& x, const NodeVectors& theta);
  bool empty() const { return total_weight_ == 0.0; }
  double total_weight() const { return total_weight_; }
  NodeVectors x() const;
  NodeVectors theta() const;

 private:
  double total_weight_ = 0.0;
  NodeVectors x_sum_;
  NodeVectors theta_sum_;
};

// sum_k t_k x^k / sum_k t_k over the first K entries.
NodeVectors ergodic_average(const std::vector<NodeVectors>& trajectory,
                            const std::vector<double>& weights, std::size_t K);

NodeVectors primal_iterates(const SolverState& state);
NodeVectors dual_iterates(const SolverState& state);

}  // namespace dapdb
