#include "dapdb/algorithm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dapdb {

namespace {

constexpr double kTestRelTol = 1e-12;
constexpr double kDivergenceFactor = 1e3;

}  // namespace

std::string to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::kDapdb: return "dapdb";
    case Algorithm::kDapdb0: return "dapdb0";
    case Algorithm::kDapd: return "dapd";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "dapdb") return Algorithm::kDapdb;
  if (name == "dapdb0") return Algorithm::kDapdb0;
  if (name == "dapd") return Algorithm::kDapd;
  throw ValidationError("unknown algorithm '" + name + "' (expected dapdb, dapdb0 or dapd)");
}

std::string to_string(HatTauRule rule) {
  switch (rule) {
    case HatTauRule::kTheory: return "theory";
    case HatTauRule::kHalfInverseLipschitz: return "half-inverse-lipschitz";
  }
  return "unknown";
}

HatTauRule parse_hat_tau_rule(const std::string& name) {
  if (name == "theory") return HatTauRule::kTheory;
  if (name == "half-inverse-lipschitz") return HatTauRule::kHalfInverseLipschitz;
  throw ValidationError("unknown hat-tau rule '" + name +
                        "' (expected theory or half-inverse-lipschitz)");
}

int backtrack_cap(double tau_bar, double tau_hat, double rho) {
  if (!std::isfinite(tau_hat) || !(tau_hat > 0.0)) return kDefaultMaxBacktracks;
  const double levels = std::ceil(std::log(tau_bar / tau_hat) / std::log(1.0 / rho));
  return 10 * (static_cast<int>(std::max(0.0, levels)) + 1);
}

void AlgorithmConfig::validate(const ProblemInstance& instance) const {
  const int n_nodes = instance.num_nodes();
  const auto sized = [n_nodes](const auto& v) { return static_cast<int>(v.size()) == n_nodes; };
  if (!sized(zeta) || !sized(tau_bar) || !sized(hat_tau) || !sized(max_backtracks)) {
    throw ValidationError("config: per-node vectors must have one entry per node");
  }
  const auto& k = consts;
  if (!(k.delta > 0.0) || !(k.c_alpha > 0.0) || !(k.c_varsigma > 0.0) || k.c_beta < 0.0) {
    throw ValidationError("config: delta, c_alpha, c_varsigma must be positive and c_beta >= 0");
  }
  if (!(k.delta + k.c_alpha + k.c_beta + k.c_varsigma < 1.0)) {
    throw ValidationError("config: need delta + c_alpha + c_beta + c_varsigma < 1");
  }
  if (algorithm == Algorithm::kDapdb0) {
    if (instance.has_constraints()) {
      throw ValidationError("config: dapdb0 requires an instance without constraints (m_i = 0)");
    }
    if (k.c_beta != 0.0) throw ValidationError("config: dapdb0 uses c_beta = 0");
  }
  if (algorithm == Algorithm::kDapdb && instance.has_constraints() && !(k.c_beta > 0.0)) {
    throw ValidationError("config: dapdb with constraints needs c_beta > 0");
  }
  const int edges = std::max(1, instance.graph.num_edges());
  const double gamma_cap = 1.0 / (2.0 * edges);
  if (!(c_gamma > 0.0) || c_gamma > gamma_cap * (1.0 + 1e-15)) {
    throw ValidationError("config: need 0 < c_gamma <= 1/(2|E|)");
  }
  if (!(rho > 0.0 && rho < 1.0)) throw ValidationError("config: rho must lie in (0, 1)");
  for (int i = 0; i < n_nodes; ++i) {
    if (!(zeta[i] > 0.0) || !std::isfinite(zeta[i])) {
      throw ValidationError("config: zeta_i must be positive and finite");
    }
    if (!(tau_bar[i] > 0.0) || !std::isfinite(tau_bar[i])) {
      throw ValidationError("config: tau_bar_i must be positive and finite");
    }
    if (max_backtracks[i] < 0) throw ValidationError("config: negative backtrack cap");
  }
}

AlgorithmConfig make_config(const ProblemInstance& instance, Algorithm algo,
                            const ParameterSet& params) {
  instance.validate();
  AlgorithmConfig cfg;
  cfg.algorithm = algo;
  cfg.consts = params.consts;
  if (algo == Algorithm::kDapdb0) {
    if (instance.has_constraints()) {
      throw ValidationError("config: dapdb0 requires an instance without constraints (m_i = 0)");
    }
    cfg.consts.c_beta = 0.0;
  }
  cfg.rho = params.rho;
  cfg.kappa = params.kappa;
  cfg.hat_tau_rule = params.hat_tau_rule;
  cfg.inner_product_test = params.inner_product_test;
  cfg.c_gamma = params.c_gamma.value_or(1.0 / (2.0 * std::max(1, instance.graph.num_edges())));

  const int n_nodes = instance.num_nodes();
  cfg.zeta.assign(static_cast<std::size_t>(n_nodes), params.zeta);
  cfg.hat_tau.assign(static_cast<std::size_t>(n_nodes), kInfinity);
  for (int i = 0; i < n_nodes; ++i) {
    const auto& node = instance.nodes[i];
    if (!node.smoothness()) continue;
    const auto& sm = *node.smoothness();
    if (params.hat_tau_rule == HatTauRule::kHalfInverseLipschitz) {
      if (!(sm.lipschitz_grad_f > 0.0)) {
        throw ValidationError("make_config: 1/(2 L_f) rule needs L_f > 0 at node " +
                              std::to_string(i));
      }
      cfg.hat_tau[i] = 0.5 / sm.lipschitz_grad_f;
    } else {
      cfg.hat_tau[i] = hat_tau(sm, node.dual_bound(), cfg.consts, cfg.zeta[i]);
    }
  }

  if (params.tau_bar) {
    if (static_cast<int>(params.tau_bar->size()) != n_nodes) {
      throw ValidationError("make_config: tau_bar needs one entry per node");
    }
    cfg.tau_bar = *params.tau_bar;
  } else {
    cfg.tau_bar.resize(static_cast<std::size_t>(n_nodes));
    for (int i = 0; i < n_nodes; ++i) {
      if (!std::isfinite(cfg.hat_tau[i])) {
        throw ValidationError("make_config: node " + std::to_string(i) +
                              " has no finite tau_hat; supply tau_bar explicitly");
      }
      const double scale = (algo == Algorithm::kDapd) ? 1.0 : params.kappa;
      cfg.tau_bar[i] = scale * cfg.hat_tau[i];
    }
  }
  if (algo == Algorithm::kDapd) {
    for (int i = 0; i < n_nodes; ++i) {
      if (!instance.nodes[i].smoothness() && !params.tau_bar) {
        throw ValidationError("make_config: dapd needs smoothness constants at every node");
      }
    }
  }

  // The cap is sized from the certified step, which can sit below the
  // configured tau_hat (e.g. 1/(2 L_f) under the dapdb0 test).
  cfg.max_backtracks.resize(static_cast<std::size_t>(n_nodes));
  for (int i = 0; i < n_nodes; ++i) {
    double certified = cfg.hat_tau[i];
    if (const auto& sm = instance.nodes[i].smoothness()) {
      certified = std::min(certified,
                           hat_tau(*sm, instance.nodes[i].dual_bound(), cfg.consts, cfg.zeta[i]));
    }
    cfg.max_backtracks[i] = params.max_backtracks > 0
                                ? params.max_backtracks
                                : backtrack_cap(cfg.tau_bar[i], certified, cfg.rho);
  }
  cfg.validate(instance);
  return cfg;
}

SolverState initialize(const ProblemInstance& instance, const AlgorithmConfig& config,
                       CommLedger& ledger) {
  config.validate(instance);
  SolverState state;
  const int n_nodes = instance.num_nodes();
  const int n = instance.dim();
  state.agents.resize(static_cast<std::size_t>(n_nodes));
  for (int i = 0; i < n_nodes; ++i) {
    const auto& node = instance.nodes[i];
    auto& a = state.agents[i];
    a.x = instance.x0[i];
    a.x_prev = a.x;
    a.theta = Vector::Zero(node.num_constraints());
    a.theta_prev = a.theta;
    a.s = Vector::Zero(n);
    a.f_x = node.f_value(a.x);
    a.grad = node.f_grad(a.x);
    a.grad_calls = 1;
    a.tau = config.tau_bar[i];
    a.sigma = config.zeta[i] * a.tau;
    // s^0 = 0, so the consensus part of r^0 vanishes without communication.
    a.r = node.g_jac_T_apply(a.x, a.theta);
    a.r_prev = a.r;
  }
  state.tau_bar_max = max_consensus(instance.graph, config.tau_bar, ledger);
  state.iteration = 0;
  state.t = 1.0;
  return state;
}

namespace {

struct TestTerms {
  double lambda = 0.0;      // Lambda (or the inner-product surrogate)
  double dx2 = 0.0;         // ||x~ - x||^2
  double dtheta2 = 0.0;     // ||theta~ - theta||^2
  double jg_dtheta2 = 0.0;  // ||Jg(x~)^T (theta~ - theta)||^2
  double djg_theta2 = 0.0;  // ||(Jg(x~) - Jg(x))^T theta||^2
};

TestTerms test_terms(const NodeProblem& node, const Vector& x, const Vector& theta,
                     const Vector& x_cand, const Vector& theta_cand, bool inner_product) {
  TestTerms t;
  t.lambda = inner_product ? node.f_gradient_gap(x, x_cand) : node.f_bregman(x, x_cand);
  t.dx2 = (x_cand - x).squaredNorm();
  if (node.num_constraints() > 0) {
    const Vector dtheta = theta_cand - theta;
    t.dtheta2 = dtheta.squaredNorm();
    t.jg_dtheta2 = node.g_jac_T_apply(x_cand, dtheta).squaredNorm();
    t.djg_theta2 = node.g_jac_diff_T_apply(x_cand, x, theta).squaredNorm();
  }
  return t;
}

// E - threshold, assembled from nonnegative pieces; the test passes when this
// is <= 0. `scale` collects the magnitudes for the rounding allowance.
double test_margin(const TestTerms& t, double tau, double zeta, const StepConstants& k,
                   double& scale) {
  const double c = k.c_alpha + k.c_beta + k.c_varsigma;
  double curvature = 0.0;
  if (t.djg_theta2 > 0.0) curvature = (tau / k.c_beta) * t.djg_theta2;
  const double positive = 2.0 * t.lambda + (2.0 * tau / k.c_alpha) * t.jg_dtheta2 + curvature;
  const double negative =
      (1.0 - c - k.delta) / tau * t.dx2 + (1.0 - k.delta) / (zeta * tau) * t.dtheta2;
  scale = std::abs(positive) + negative;
  return positive - negative;
}

// Lambda - (1/(2 tau))(1 - delta - c_alpha - c_varsigma) ||dx||^2
double smooth_margin(const TestTerms& t, double tau, const StepConstants& k, double& scale) {
  const double rhs = (1.0 - k.delta - k.c_alpha - k.c_varsigma) / (2.0 * tau) * t.dx2;
  scale = std::abs(t.lambda) + rhs;
  return t.lambda - rhs;
}

bool passes(double margin, double scale) { return margin <= kTestRelTol * scale; }

void check_agent(const AgentState& a, const NodeProblem& node, long k, int i) {
  if (!a.x.allFinite() || !a.theta.allFinite() || !a.s.allFinite() || !a.r.allFinite()) {
    throw SolverError("non-finite state at node " + std::to_string(i) + ", iteration " +
                      std::to_string(k));
  }
  if (a.x.norm() > kDivergenceFactor * node.domain_radius()) {
    throw SolverError("divergence at node " + std::to_string(i) + ", iteration " +
                      std::to_string(k) + ": ||x|| exceeds 1e3 * domain radius");
  }
}

}  // namespace

double test_function_E(const NodeProblem& node, const Vector& x, const Vector& theta,
                       const Vector& x_cand, const Vector& theta_cand, double tau_tilde,
                       double zeta, const StepConstants& consts, bool inner_product) {
  const TestTerms t = test_terms(node, x, theta, x_cand, theta_cand, inner_product);
  const double c = consts.c_alpha + consts.c_beta + consts.c_varsigma;
  double e = 2.0 * t.lambda - (1.0 - c) / tau_tilde * t.dx2 - t.dtheta2 / (zeta * tau_tilde) +
             (2.0 * tau_tilde / consts.c_alpha) * t.jg_dtheta2;
  if (t.djg_theta2 > 0.0) e += (tau_tilde / consts.c_beta) * t.djg_theta2;
  return e;
}

double test_threshold(const Vector& x, const Vector& theta, const Vector& x_cand,
                      const Vector& theta_cand, double tau_tilde, double zeta, double delta) {
  double out = -(delta / tau_tilde) * (x_cand - x).squaredNorm();
  if (theta.size() > 0) out -= delta / (zeta * tau_tilde) * (theta_cand - theta).squaredNorm();
  return out;
}

Candidate primal_dual_step(const NodeProblem& node, const AgentState& agent, double tau,
                           double eta, double zeta) {
  const Vector p = agent.r + eta * (agent.r - agent.r_prev);
  Candidate c;
  c.x = node.prox_phi(agent.x - tau * (agent.grad + p), tau);
  if (node.num_constraints() > 0) {
    c.theta = node.project_dual(agent.theta + (zeta * tau) * node.g_value(c.x));
  } else {
    c.theta = agent.theta;
  }
  return c;
}

BacktrackResult backtrack_node(const NodeProblem& node, const AgentState& agent,
                               const AlgorithmConfig& config, int node_index) {
  const double zeta = config.zeta[node_index];
  const int cap = config.max_backtracks[node_index];
  const bool smooth_only = config.algorithm == Algorithm::kDapdb0;
  BacktrackResult res;
  double tau_tilde = agent.tau;
  for (int j = 0;; ++j) {
    const double eta_i = agent.tau / tau_tilde;
    Candidate cand = primal_dual_step(node, agent, tau_tilde, eta_i, zeta);
    ++res.oracle_calls;
    const TestTerms t =
        test_terms(node, agent.x, agent.theta, cand.x, cand.theta, config.inner_product_test);
    double scale = 0.0;
    const double margin = smooth_only ? smooth_margin(t, tau_tilde, config.consts, scale)
                                      : test_margin(t, tau_tilde, zeta, config.consts, scale);
    if (passes(margin, scale)) {
      res.tau_tilde = tau_tilde;
      res.eta = eta_i;
      res.candidate = std::move(cand);
      res.num_contractions = j;
      return res;
    }
    if (j >= cap) {
      std::ostringstream msg;
      msg << "backtracking at node " << node_index << " exceeded " << cap
          << " contractions (tau~ = " << tau_tilde << ")";
      throw SolverError(msg.str());
    }
    tau_tilde *= config.rho;
  }
}

double gamma_update(double eta, double tau_bar_max, double c_gamma, const StepConstants& consts) {
  return (c_gamma / tau_bar_max) / (2.0 / consts.c_alpha + eta / consts.c_varsigma);
}

IterationReport iterate(const ProblemInstance& instance, SolverState& state,
                        const AlgorithmConfig& config, CommLedger& ledger) {
  const int n_nodes = instance.num_nodes();
  const long k = state.iteration;
  const bool fixed_step = config.algorithm == Algorithm::kDapd;

  IterationReport rep;
  rep.k = k;
  rep.per_node_backtracks.assign(static_cast<std::size_t>(n_nodes), 0);
  rep.per_node_eta.assign(static_cast<std::size_t>(n_nodes), 1.0);

  std::vector<Candidate> cands(static_cast<std::size_t>(n_nodes));
  for (int i = 0; i < n_nodes; ++i) {
    auto& a = state.agents[i];
    if (fixed_step) {
      cands[i] = primal_dual_step(instance.nodes[i], a, a.tau, 1.0, config.zeta[i]);
      a.grad_calls += 1;
      a.backtracks_this_iter = 0;
    } else {
      BacktrackResult bt = backtrack_node(instance.nodes[i], a, config, i);
      cands[i] = std::move(bt.candidate);
      rep.per_node_eta[i] = bt.eta;
      rep.per_node_backtracks[i] = bt.num_contractions;
      a.grad_calls += bt.oracle_calls;
      a.backtracks_this_iter = bt.num_contractions;
      a.total_backtracks += bt.num_contractions;
    }
  }

  const double eta = fixed_step ? 1.0 : max_consensus(instance.graph, rep.per_node_eta, ledger);
  const double gamma = gamma_update(eta, state.tau_bar_max, config.c_gamma, config.consts);
  rep.eta = eta;
  rep.gamma = gamma;
  rep.did_contract = eta > 1.0;

  std::vector<double> tau_prev(static_cast<std::size_t>(n_nodes));
  NodeVectors s_next(static_cast<std::size_t>(n_nodes));
  for (int i = 0; i < n_nodes; ++i) {
    auto& a = state.agents[i];
    const auto& node = instance.nodes[i];
    tau_prev[i] = a.tau;
    const double tau = a.tau / eta;
    s_next[i] = a.s + gamma * ((1.0 + eta) * a.x - eta * a.x_prev);
    if (eta > 1.0) {
      cands[i] = primal_dual_step(node, a, tau, eta, config.zeta[i]);
      a.grad_calls += 1;
    }
    a.tau = tau;
    a.sigma = config.zeta[i] * tau;
    a.x_prev = std::move(a.x);
    a.x = std::move(cands[i].x);
    a.theta_prev = std::move(a.theta);
    a.theta = std::move(cands[i].theta);
    a.f_x = node.f_value(a.x);
    a.grad = node.f_grad(a.x);
  }

  const NodeVectors consensus = neighbor_diff(instance.graph, s_next, ledger);
  for (int i = 0; i < n_nodes; ++i) {
    auto& a = state.agents[i];
    a.s = std::move(s_next[i]);
    a.r_prev = std::move(a.r);
    a.r = instance.nodes[i].g_jac_T_apply(a.x, a.theta) + consensus[i];
    check_agent(a, instance.nodes[i], k, i);
  }

  if (k == 0) {
    state.t = 1.0;
    state.tau0.resize(static_cast<std::size_t>(n_nodes));
    for (int i = 0; i < n_nodes; ++i) state.tau0[i] = state.agents[i].tau;
  } else {
    state.t /= eta;
  }
  rep.t = state.t;

  double denom = 0.0;
  double ratio_err = 0.0;
  for (int i = 0; i < n_nodes; ++i) {
    const double tau = state.agents[i].tau;
    denom += instance.graph.degree(i) *
             (2.0 * tau / config.consts.c_alpha + eta * tau_prev[i] / config.consts.c_varsigma);
    ratio_err = std::max(ratio_err, std::abs(tau / state.tau0[i] - state.t));
  }
  rep.gamma_bound = denom > 0.0 ? 1.0 / denom : kInfinity;
  rep.step_ratio_error = ratio_err;
  ++state.iteration;
  return rep;
}

IterationReport dapdb_iterate(const ProblemInstance& instance, SolverState& state,
                              const AlgorithmConfig& config, CommLedger& ledger) {
  if (config.algorithm != Algorithm::kDapdb) {
    throw ValidationError("dapdb_iterate: config is for " + to_string(config.algorithm));
  }
  return iterate(instance, state, config, ledger);
}

IterationReport dapdb0_iterate(const ProblemInstance& instance, SolverState& state,
                               const AlgorithmConfig& config, CommLedger& ledger) {
  if (config.algorithm != Algorithm::kDapdb0) {
    throw ValidationError("dapdb0_iterate: config is for " + to_string(config.algorithm));
  }
  if (instance.has_constraints()) {
    throw ValidationError("dapdb0_iterate: instance has constraints");
  }
  return iterate(instance, state, config, ledger);
}

IterationReport dapd_iterate(const ProblemInstance& instance, SolverState& state,
                             const AlgorithmConfig& config, CommLedger& ledger) {
  if (config.algorithm != Algorithm::kDapd) {
    throw ValidationError("dapd_iterate: config is for " + to_string(config.algorithm));
  }
  return iterate(instance, state, config, ledger);
}

std::vector<double> t_weights(const std::vector<double>& eta) {
  std::vector<double> t(eta.size());
  if (eta.empty()) return t;
  t[0] = 1.0;
  for (std::size_t k = 1; k < eta.size(); ++k) {
    if (!(eta[k] >= 1.0)) throw ValidationError("t_weights: eta must be >= 1");
    t[k] = t[k - 1] / eta[k];
  }
  return t;
}

void ErgodicAccumulator::add(double weight, const NodeVectors& x, const NodeVectors& theta) {
  if (!(weight > 0.0)) throw ValidationError("ergodic average: weights must be positive");
  if (x_sum_.empty()) {
    x_sum_.reserve(x.size());
    for (const auto& v : x) x_sum_.push_back(Vector::Zero(v.size()));
    theta_sum_.reserve(theta.size());
    for (const auto& v : theta) theta_sum_.push_back(Vector::Zero(v.size()));
  }
  if (x.size() != x_sum_.size() || theta.size() != theta_sum_.size()) {
    throw ValidationError("ergodic average: node count changed");
  }
  for (std::size_t i = 0; i < x.size(); ++i) x_sum_[i] += weight * x[i];
  for (std::size_t i = 0; i < theta.size(); ++i) theta_sum_[i] += weight * theta[i];
  total_weight_ += weight;
}

NodeVectors ErgodicAccumulator::x() const {
  if (empty()) throw ValidationError("ergodic average: empty trajectory");
  NodeVectors out;
  out.reserve(x_sum_.size());
  for (const auto& v : x_sum_) out.push_back(v / total_weight_);
  return out;
}

NodeVectors ErgodicAccumulator::theta() const {
  if (empty()) throw ValidationError("ergodic average: empty trajectory");
  NodeVectors out;
  out.reserve(theta_sum_.size());
  for (const auto& v : theta_sum_) out.push_back(v / total_weight_);
  return out;
}

NodeVectors ergodic_average(const std::vector<NodeVectors>& trajectory,
                            const std::vector<double>& weights, std::size_t K) {
  if (K == 0 || trajectory.size() < K || weights.size() < K) {
    throw ValidationError("ergodic_average: need K >= 1 iterates and weights");
  }
  ErgodicAccumulator acc;
  for (std::size_t k = 0; k < K; ++k) acc.add(weights[k], trajectory[k], {});
  return acc.x();
}

NodeVectors primal_iterates(const SolverState& state) {
  NodeVectors out;
  out.reserve(state.agents.size());
  for (const auto& a : state.agents) out.push_back(a.x);
  return out;
}

NodeVectors dual_iterates(const SolverState& state) {
  NodeVectors out;
  out.reserve(state.agents.size());
  for (const auto& a : state.agents) out.push_back(a.theta);
  return out;
}

}  // namespace dapdb
