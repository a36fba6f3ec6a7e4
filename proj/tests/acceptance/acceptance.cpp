// Acceptance checks. Prints one PASS/FAIL line per criterion; `--only N` runs a
// single criterion. Exit status is 1 if any selected criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dapdb/algorithm.hpp"
#include "dapdb/experiment.hpp"
#include "dapdb/generators.hpp"
#include "dapdb/kernels.hpp"
#include "dapdb/metrics.hpp"
#include "dapdb/oracle.hpp"
#include "dapdb/run.hpp"

using namespace dapdb;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

ParameterSet family_params(const std::string& family, Algorithm algo) {
  for (const auto& a : default_spec(family).algorithms) {
    if (a.algorithm == algo) return a.params;
  }
  throw std::logic_error("no default parameters");
}

ProblemInstance qcqp_instance(std::uint64_t seed) {
  return make_instance(default_spec("qcqp"), seed);
}

// Small QCQP used by the rate and convergence checks.
ProblemInstance small_qcqp() {
  ExperimentSpec spec = default_spec("qcqp");
  spec.n = 5;
  spec.num_nodes = 4;
  spec.num_edges = 0;
  ProblemInstance inst = make_instance(spec, 1);
  inst.reference = solve_centralized(inst, 1e-10);
  return inst;
}

// 1. tau_bar = tau_hat: no backtracking, identical to the constant-step method.
Outcome criterion_1() {
  long backtracks = 0;
  int mismatched = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const ProblemInstance inst = qcqp_instance(seed);
    ParameterSet p = family_params("qcqp", Algorithm::kDapdb);
    p.kappa = 1.0;
    const AlgorithmConfig cb = make_config(inst, Algorithm::kDapdb, p);
    const AlgorithmConfig cd = make_config(inst, Algorithm::kDapd, p);
    CommLedger lb, ld;
    SolverState sb = initialize(inst, cb, lb), sd = initialize(inst, cd, ld);
    bool same = true;
    for (int k = 0; k < 500; ++k) {
      const IterationReport rep = iterate(inst, sb, cb, lb);
      iterate(inst, sd, cd, ld);
      for (int b : rep.per_node_backtracks) backtracks += b;
      for (int i = 0; i < inst.num_nodes(); ++i) {
        const auto& a = sb.agents[i];
        const auto& d = sd.agents[i];
        same = same && a.x == d.x && a.theta == d.theta && a.s == d.s && a.tau == d.tau;
      }
    }
    mismatched += same ? 0 : 1;
  }
  return {backtracks == 0 && mismatched == 0,
          "20 seeds x 500 iterations: total backtracks " + std::to_string(backtracks) +
              ", seeds whose trajectory differs from dapd " + std::to_string(mismatched)};
}

struct BacktrackStats {
  long worst_i = 0;        // largest |I| over the runs
  long bound_i = 0;        // floor(log_{1/rho} max_i tau_bar_i / tau_hat_i) + 1
  long runs_over_i = 0;    // runs with |I| above their bound
  long worst_call = 0;     // most contractions in one backtracking call
  long calls_over = 0;     // calls above ceil(log_{1/rho} tau_bar_i / tau_hat_i) + 1
  long late = 0;           // backtracks in the second half of the runs
};

BacktrackStats backtrack_stats(double kappa, long K) {
  BacktrackStats out;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const ProblemInstance inst = qcqp_instance(seed);
    ParameterSet p = family_params("qcqp", Algorithm::kDapdb);
    p.kappa = kappa;
    const AlgorithmConfig cfg = make_config(inst, Algorithm::kDapdb, p);
    const double levels = std::log(1 / cfg.rho);
    double max_ratio = 0.0;
    std::vector<long> node_cap;
    for (int i = 0; i < inst.num_nodes(); ++i) {
      const double ratio = cfg.tau_bar[i] / cfg.hat_tau[i];
      max_ratio = std::max(max_ratio, ratio);
      node_cap.push_back(static_cast<long>(std::ceil(std::log(ratio) / levels)) + 1);
    }
    const long cap_i = static_cast<long>(std::floor(std::log(max_ratio) / levels)) + 1;
    out.bound_i = std::max(out.bound_i, cap_i);
    CommLedger ledger;
    SolverState st = initialize(inst, cfg, ledger);
    long contractions = 0;
    for (long k = 0; k < K; ++k) {
      const IterationReport rep = iterate(inst, st, cfg, ledger);
      contractions += rep.eta > 1.0;
      for (int i = 0; i < inst.num_nodes(); ++i) {
        const long b = rep.per_node_backtracks[i];
        out.worst_call = std::max(out.worst_call, b);
        out.calls_over += b > node_cap[i];
        if (k >= K / 2) out.late += b;
      }
    }
    out.worst_i = std::max(out.worst_i, contractions);
    out.runs_over_i += contractions > cap_i;
  }
  return out;
}

std::string describe_stats(const BacktrackStats& s) {
  return "max |I| " + std::to_string(s.worst_i) + " (bound " + std::to_string(s.bound_i) +
         "), max contractions in one call " + std::to_string(s.worst_call) +
         ", calls over the per-node bound " + std::to_string(s.calls_over) +
         ", backtracks in the second half " + std::to_string(s.late);
}

// 2. |I| and per-call contraction bounds with kappa = 20, rho = 0.9. The
// theory step is conservative enough that kappa = 20 rarely contracts, so a
// kappa = 1000 sweep exercises the same bounds with real backtracking.
Outcome criterion_2() {
  const long K = 2000;
  const BacktrackStats a = backtrack_stats(20.0, K);
  const BacktrackStats b = backtrack_stats(1000.0, K);
  const bool pass = a.worst_i <= 29 && a.runs_over_i == 0 && a.calls_over == 0 && a.late == 0 &&
                    b.runs_over_i == 0 && b.calls_over == 0 && b.late == 0;
  return {pass, "20 seeds x " + std::to_string(K) + " iterations; kappa 20: " + describe_stats(a) +
                    "; kappa 1000: " + describe_stats(b)};
}

// 3. Step-ratio synchrony and the gamma condition along every iteration.
Outcome criterion_3() {
  double worst_ratio = 0.0, worst_gamma = 0.0;
  long iterations = 0;
  const auto check = [&](const ProblemInstance& inst, Algorithm algo, const std::string& family,
                         long K, double kappa) {
    ParameterSet p = family_params(family, algo);
    if (kappa > 0) p.kappa = kappa;
    const AlgorithmConfig cfg = make_config(inst, algo, p);
    CommLedger ledger;
    SolverState st = initialize(inst, cfg, ledger);
    for (long k = 0; k < K; ++k) {
      const IterationReport rep = iterate(inst, st, cfg, ledger);
      worst_ratio = std::max(worst_ratio, rep.step_ratio_error);
      worst_gamma = std::max(worst_gamma, rep.gamma / rep.gamma_bound - 1.0);
      ++iterations;
    }
  };
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const ProblemInstance q = qcqp_instance(seed);
    check(q, Algorithm::kDapdb, "qcqp", 1000, 0);
    check(q, Algorithm::kDapdb, "qcqp", 1000, 1000);
    check(q, Algorithm::kDapd, "qcqp", 200, 0);
    const ProblemInstance p = make_instance(default_spec("qp"), seed);
    check(p, Algorithm::kDapdb0, "qp", 1000, 0);
  }
  const bool pass = worst_ratio <= 1e-12 && worst_gamma <= 1e-12;
  return {pass, std::to_string(iterations) + " iterations: max |tau_i^k/tau_i^0 - t_k| " +
                    fmt(worst_ratio) + ", max gamma/bound - 1 " + fmt(worst_gamma)};
}

// 4. O(1/K) decay of the ergodic gap, infeasibility and consensus violation.
Outcome criterion_4() {
  const ProblemInstance inst = small_qcqp();
  const double phi_star = inst.reference->phi_star;
  const AlgorithmConfig cfg =
      make_config(inst, Algorithm::kDapdb, family_params("qcqp", Algorithm::kDapdb));
  const std::vector<long> grid{500, 1000, 2000, 4000, 8000};
  const int N = inst.num_nodes();

  CommLedger ledger;
  SolverState st = initialize(inst, cfg, ledger);
  NodeVectors sum(static_cast<std::size_t>(N), Vector::Zero(inst.dim()));
  double total = 0.0;
  std::vector<double> gap, infeas, cons;
  std::size_t next = 0;
  for (long k = 0; next < grid.size(); ++k) {
    const NodeVectors x_k = primal_iterates(st);
    const IterationReport rep = iterate(inst, st, cfg, ledger);
    for (int i = 0; i < N; ++i) sum[i] += rep.t * x_k[i];
    total += rep.t;
    if (k + 1 == grid[next]) {
      NodeVectors avg;
      for (const auto& s : sum) avg.push_back(s / total);
      double phi = 0.0, viol = 0.0;
      for (int i = 0; i < N; ++i) {
        phi += inst.nodes[i].local_objective(avg[i]);
        viol = std::max(viol, inst.nodes[i].g_value(avg[i]).cwiseMax(0.0).maxCoeff());
      }
      double edge2 = 0.0;
      for (const auto& e : inst.graph.edges()) edge2 += (avg[e.i] - avg[e.j]).squaredNorm();
      gap.push_back(std::abs(phi - phi_star));
      infeas.push_back(viol);
      cons.push_back(std::sqrt(edge2));
      ++next;
    }
  }

  std::ostringstream os;
  bool pass = true;
  const auto judge = [&](const std::string& name, const std::vector<double>& v) {
    os << name << " [";
    for (std::size_t j = 0; j < v.size(); ++j) os << (j ? " " : "") << fmt(v[j]);
    os << "] ratios [";
    bool ok = true;
    for (std::size_t j = 1; j + 1 < v.size(); ++j) {
      // Exact zeros (a feasible average) count as decayed.
      const double r = v[j] == 0.0 ? 0.0 : v[j + 1] / v[j];
      os << (j > 1 ? " " : "") << fmt(r);
      ok = ok && r <= 0.75;
    }
    double lo = INFINITY, hi = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] == 0.0) continue;
      lo = std::min(lo, grid[j] * v[j]);
      hi = std::max(hi, grid[j] * v[j]);
    }
    const double spread = hi > 0.0 ? hi / lo : 1.0;
    os << "] K*v max/min " << fmt(spread) << "; ";
    ok = ok && spread <= 10.0;
    pass = pass && ok;
  };
  judge("gap", gap);
  judge("infeasibility", infeas);
  judge("||A xbar||", cons);
  return {pass, os.str()};
}

// 5. Convergence of the actual iterates on the small instance.
Outcome criterion_5() {
  const ProblemInstance inst = small_qcqp();
  const Vector& x_star = inst.reference->x_star;
  const AlgorithmConfig cfg =
      make_config(inst, Algorithm::kDapdb, family_params("qcqp", Algorithm::kDapdb));
  CommLedger ledger;
  SolverState st = initialize(inst, cfg, ledger);
  const long K = 100000;
  long reached = -1;
  double cons = 0.0, dist = 0.0;
  for (long k = 1; k <= K; ++k) {
    iterate(inst, st, cfg, ledger);
    if (k % 100 != 0 && k != K) continue;
    const NodeVectors x = primal_iterates(st);
    cons = rel_consensus_error(x).value;
    dist = 0.0;
    for (const auto& xi : x) dist = std::max(dist, (xi - x_star).norm());
    if (cons < 1e-8 && dist < 1e-4) {
      reached = k;
      break;
    }
  }
  return {reached > 0, "relative consensus error " + fmt(cons) + ", max_i ||x_i - x*|| " +
                           fmt(dist) + (reached > 0 ? " at k = " + std::to_string(reached)
                                                    : " after " + std::to_string(K) +
                                                          " iterations")};
}

// 6. Centralized solver against exhaustive lattice search.
Outcome criterion_6() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const ProblemInstance inst = gen_qcqp_lowdim(2, 3, seed);
    const double phi = solve_centralized(inst, 1e-10).phi_star;
    worst = std::max(worst, std::abs(phi - brute_force_grid(inst, 1e-3)));
  }
  return {worst <= 5e-3, "10 instances (n=2, N=3): max |phi* - grid min| " + fmt(worst)};
}

// Fractions of the common budget reported alongside the verdict.
const std::vector<double> kBudgetFractions{0.1, 0.25, 0.5};

struct FamilyComparison {
  std::vector<double> fast, slow;            // log-relative suboptimality at the common budget
  std::vector<double> fast_cons, slow_cons;  // final relative consensus error
  std::vector<std::vector<double>> fast_at, slow_at;  // same at kBudgetFractions
};

FamilyComparison compare_family(const std::string& family, AggregateAxis axis) {
  const ExperimentSpec spec = default_spec(family);
  FamilyComparison out;
  out.fast_at.resize(kBudgetFractions.size());
  out.slow_at.resize(kBudgetFractions.size());
  for (std::uint64_t seed : spec.seeds) {
    ProblemInstance inst = make_instance(spec, seed);
    inst.reference = solve_centralized(inst, spec.reference_tol);
    std::vector<RunTrace> traces;
    for (const auto& a : spec.algorithms) {
      RunOptions opts;
      opts.iterations = spec.iterations;
      opts.metric_stride = spec.metric_stride;
      traces.push_back(run_algorithm(inst, make_config(inst, a.algorithm, a.params), opts).trace);
    }
    const double budget = common_budget(traces, axis);
    out.fast.push_back(row_at(trace_points(traces[0]), axis, budget).log_rel_subopt);
    out.slow.push_back(row_at(trace_points(traces[1]), axis, budget).log_rel_subopt);
    for (std::size_t f = 0; f < kBudgetFractions.size(); ++f) {
      const double x = kBudgetFractions[f] * budget;
      out.fast_at[f].push_back(row_at(trace_points(traces[0]), axis, x).log_rel_subopt);
      out.slow_at[f].push_back(row_at(trace_points(traces[1]), axis, x).log_rel_subopt);
    }
    out.fast_cons.push_back(traces[0].final_row.rel_consensus_err);
    out.slow_cons.push_back(traces[1].final_row.rel_consensus_err);
  }
  return out;
}

std::string partial_budgets(const FamilyComparison& c) {
  std::string out = "; medians at";
  for (std::size_t f = 0; f < kBudgetFractions.size(); ++f) {
    out += (f ? ", " : " ") + fmt(kBudgetFractions[f]) + " budget " + fmt(median(c.fast_at[f])) +
           " vs " + fmt(median(c.slow_at[f]));
  }
  return out;
}

// 7. Backtracking beats the constant step at equal gradient budget (QCQP).
Outcome criterion_7() {
  const FamilyComparison c = compare_family("qcqp", AggregateAxis::kGradCalls);
  int strictly = 0;
  for (std::size_t j = 0; j < c.fast.size(); ++j) strictly += c.fast[j] < c.slow[j];
  const double mf = median(c.fast), ms = median(c.slow);
  return {mf <= ms && strictly >= 15,
          "median log-rel-subopt dapdb " + fmt(mf) + " vs dapd " + fmt(ms) +
              ", dapdb strictly lower in " + std::to_string(strictly) + "/20 seeds" +
              partial_budgets(c)};
}

// 8. Backtracking without constraints at equal communication budget (QP).
Outcome criterion_8() {
  const FamilyComparison c = compare_family("qp", AggregateAxis::kCommRounds);
  int strictly = 0;
  for (std::size_t j = 0; j < c.fast.size(); ++j) strictly += c.fast[j] < c.slow[j];
  const double mf = median(c.fast), ms = median(c.slow);
  const double worst_cons =
      std::max(*std::max_element(c.fast_cons.begin(), c.fast_cons.end()),
               *std::max_element(c.slow_cons.begin(), c.slow_cons.end()));
  return {mf <= ms && worst_cons < 1e-4,
          "median log-rel-subopt dapdb0 " + fmt(mf) + " vs dapd " + fmt(ms) +
              " (dapdb0 lower in " + std::to_string(strictly) +
              "/20 seeds), worst final consensus error " + fmt(worst_cons) + partial_budgets(c)};
}

double grid_prox(double v, double weight, double radius, double step) {
  const auto obj = [&](double w) { return weight * std::abs(w) + 0.5 * (w - v) * (w - v); };
  double best = radius, best_val = obj(radius);
  if (obj(-radius) < best_val) {
    best = -radius;
    best_val = obj(-radius);
  }
  const double lo = std::max(-radius, std::min(0.0, v) - 1.0);
  const double hi = std::min(radius, std::max(0.0, v) + 1.0);
  for (double w = std::ceil(lo / step) * step; w <= hi; w += step) {
    if (obj(w) < best_val) {
      best_val = obj(w);
      best = w;
    }
  }
  return best;
}

double fd_order(const std::function<double(double)>& err) {
  const std::vector<double> hs{1e-3, 1e-4, 1e-5, 1e-6};
  double mx = 0, my = 0;
  for (double h : hs) {
    mx += std::log(h) / 4;
    my += std::log(err(h)) / 4;
  }
  double sxy = 0, sxx = 0;
  for (double h : hs) {
    sxy += (std::log(h) - mx) * (std::log(err(h)) - my);
    sxx += (std::log(h) - mx) * (std::log(h) - mx);
  }
  return sxy / sxx;
}

// 9. Kernel property suites.
Outcome criterion_9() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> uv(-15, 15), uw(0, 3), ur(0.5, 12), u01(0, 1);
  std::normal_distribution<double> nd(0, 3);

  double prox_err = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double v = uv(rng), w = uw(rng), r = ur(rng);
    prox_err = std::max(prox_err, std::abs(prox_l1_box(Vector::Constant(1, v), w, r)[0] -
                                           grid_prox(v, w, r, 1e-5)));
  }

  double vi = -INFINITY;
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = 1 + trial % 5;
    const double B = trial % 10 == 0 ? INFINITY : 0.1 + 5 * u01(rng);
    Vector v(m);
    for (int j = 0; j < m; ++j) v[j] = nd(rng);
    const Vector p = project_cone_ball(v, B);
    for (int probe = 0; probe < 100; ++probe) {
      Vector th(m);
      for (int j = 0; j < m; ++j) th[j] = std::abs(nd(rng));
      if (std::isfinite(B) && th.norm() > B) th *= B * u01(rng) / th.norm();
      vi = std::max(vi, (v - p).dot(th - p));
    }
  }

  double min_order = INFINITY;
  const ProblemInstance q = gen_qcqp(8, 4, 5);
  const ProblemInstance qp = gen_qp(8, 4, 5);
  for (const ProblemInstance* inst : {&q, &qp}) {
    for (const auto& node : inst->nodes) {
      for (int trial = 0; trial < 5; ++trial) {
        Vector x(8), d(8);
        for (int j = 0; j < 8; ++j) {
          x[j] = 10 * (2 * u01(rng) - 1);
          d[j] = nd(rng);
        }
        d.normalize();
        const double slope = node.f_grad(x).dot(d);
        const auto ef = [&](double h) {
          return std::abs((node.f_value(x + h * d) - node.f_value(x)) / h - slope);
        };
        if (ef(1e-3) > 1e-9) min_order = std::min(min_order, fd_order(ef));
        if (node.num_constraints() > 0) {
          const double jd = node.g_jac_T_apply(x, Vector::Ones(1)).dot(d);
          const auto eg = [&](double h) {
            return std::abs((node.g_value(x + h * d)[0] - node.g_value(x)[0]) / h - jd);
          };
          if (eg(1e-3) > 1e-9) min_order = std::min(min_order, fd_order(eg));
        }
      }
    }
  }

  double lambda_err = 0.0;
  {
    const ProblemInstance inst = gen_qcqp(5, 6, 8);
    const AlgorithmConfig cfg =
        make_config(inst, Algorithm::kDapdb, family_params("qcqp", Algorithm::kDapdb));
    CommLedger ledger;
    SolverState st = initialize(inst, cfg, ledger);
    for (int k = 0; k < 100; ++k) {
      iterate(inst, st, cfg, ledger);
      NodeVectors s;
      for (const auto& a : st.agents) s.push_back(a.s);
      const NodeVectors lambda = reconstruct_lambda(inst.graph, s);
      NodeVectors at(6, Vector::Zero(5));
      for (int e = 0; e < inst.graph.num_edges(); ++e) {
        at[inst.graph.edges()[e].i] += lambda[e];
        at[inst.graph.edges()[e].j] -= lambda[e];
      }
      for (int i = 0; i < 6; ++i) {
        const auto& a = st.agents[i];
        const Vector cons = a.r - inst.nodes[i].g_jac_T_apply(a.x, a.theta);
        lambda_err = std::max(lambda_err, (cons - at[i]).norm() / (1 + at[i].norm()));
      }
    }
  }

  const bool pass = prox_err <= 1e-4 && vi <= 1e-9 && min_order >= 0.9 && lambda_err <= 1e-10;
  return {pass, "prox vs grid " + fmt(prox_err) + ", projection VI max " + fmt(vi) +
                    ", min finite-difference order " + fmt(min_order) +
                    ", lambda identity " + fmt(lambda_err)};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int a = 1; a < argc; ++a) {
    const std::string arg = argv[a];
    if (arg == "--only" && a + 1 < argc) {
      only = std::atoi(argv[++a]);
    } else {
      std::cerr << "usage: dapdb_acceptance [--only N]\n";
      return 2;
    }
  }
  if (only < 0 || only > 9) {
    std::cerr << "criterion must be 1..9\n";
    return 2;
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"no-backtracking certificate", criterion_1},
      {"backtrack bounds", criterion_2},
      {"step synchrony and gamma condition", criterion_3},
      {"O(1/K) ergodic decay", criterion_4},
      {"iterate convergence", criterion_5},
      {"oracle cross-validation", criterion_6},
      {"QCQP comparison at equal gradient budget", criterion_7},
      {"QP comparison at equal communication budget", criterion_8},
      {"kernel property suites", criterion_9},
  };
  bool all = true;
  for (int c = 1; c <= 9; ++c) {
    if (only != 0 && c != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[c - 1].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "criterion " << c << " " << (o.pass ? "PASS" : "FAIL") << " ("
              << criteria[c - 1].first << ", " << fmt(secs) << " s): " << o.detail << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
