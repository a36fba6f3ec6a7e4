#include "dapdb/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dapdb/generators.hpp"
#include "dapdb/instance_io.hpp"
#include "dapdb/oracle.hpp"
#include "dapdb/run.hpp"

namespace dapdb {

using nlohmann::json;

namespace {

json params_to_json(const ParameterSet& p) {
  json j{{"delta", p.consts.delta},
         {"c_alpha", p.consts.c_alpha},
         {"c_beta", p.consts.c_beta},
         {"c_varsigma", p.consts.c_varsigma},
         {"rho", p.rho},
         {"zeta", p.zeta},
         {"kappa", p.kappa},
         {"hat_tau_rule", to_string(p.hat_tau_rule)},
         {"inner_product_test", p.inner_product_test},
         {"max_backtracks", p.max_backtracks}};
  if (p.c_gamma) j["c_gamma"] = *p.c_gamma;
  return j;
}

ParameterSet params_from_json(const json& j, ParameterSet p) {
  p.consts.delta = j.value("delta", p.consts.delta);
  p.consts.c_alpha = j.value("c_alpha", p.consts.c_alpha);
  p.consts.c_beta = j.value("c_beta", p.consts.c_beta);
  p.consts.c_varsigma = j.value("c_varsigma", p.consts.c_varsigma);
  p.rho = j.value("rho", p.rho);
  p.zeta = j.value("zeta", p.zeta);
  p.kappa = j.value("kappa", p.kappa);
  if (j.contains("hat_tau_rule")) {
    p.hat_tau_rule = parse_hat_tau_rule(j.at("hat_tau_rule").get<std::string>());
  }
  p.inner_product_test = j.value("inner_product_test", p.inner_product_test);
  p.max_backtracks = j.value("max_backtracks", p.max_backtracks);
  if (j.contains("c_gamma")) {
    if (j.at("c_gamma").is_null()) {
      p.c_gamma.reset();
    } else {
      p.c_gamma = j.at("c_gamma").get<double>();
    }
  }
  return p;
}

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::uint64_t count) {
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = first; s < first + count; ++s) seeds.push_back(s);
  return seeds;
}

std::string fmt(double v) { return format_double(v); }

std::string brief(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  if (v.empty()) return m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.stddev = std::sqrt(ss / static_cast<double>(v.size()));
  return m;
}

SeedOutcome run_seed(const ExperimentSpec& spec, std::uint64_t seed, const std::string& dir,
                     std::ostream* log, std::mutex& log_mutex) {
  SeedOutcome out;
  out.seed = seed;
  const auto say = [&](const std::string& line) {
    if (!log) return;
    std::lock_guard<std::mutex> lock(log_mutex);
    *log << line << '\n';
  };
  try {
    const std::string seed_dir = dir + "/seed_" + std::to_string(seed);
    std::filesystem::create_directories(seed_dir);
    ProblemInstance inst = make_instance(spec, seed);
    inst.reference = solve_centralized(inst, spec.reference_tol);
    save_instance(inst, seed_dir + "/instance.json");
    say("seed " + std::to_string(seed) + ": phi* = " + fmt(inst.reference->phi_star));

    RunOptions opts;
    opts.iterations = spec.iterations;
    opts.metric_stride = spec.metric_stride;
    for (const auto& entry : spec.algorithms) {
      const AlgorithmConfig cfg = make_config(inst, entry.algorithm, entry.params);
      RunResult res = run_algorithm(inst, cfg, opts);
      csv_export(res.trace, seed_dir + "/" + entry.label + ".csv");
      say("seed " + std::to_string(seed) + " " + entry.label + ": K=" +
          std::to_string(spec.iterations) + " log_rel_subopt=" +
          fmt(res.trace.final_row.log_rel_subopt) +
          " backtracks=" + std::to_string(res.trace.final_row.total_backtracks));
      out.traces.push_back(std::move(res.trace));
    }
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
    out.traces.clear();
    say("seed " + std::to_string(seed) + " failed: " + out.error);
  }
  return out;
}

}  // namespace

void ExperimentSpec::validate() const {
  if (family != "qcqp" && family != "qp") {
    throw ValidationError("experiment: unknown family '" + family + "'");
  }
  if (n < 1) throw ValidationError("experiment: n must be >= 1");
  if (family == "qcqp" && n < 2) throw ValidationError("experiment: qcqp needs n >= 2");
  if (num_nodes < 2) throw ValidationError("experiment: need at least 2 nodes");
  if (num_edges > 0 && (num_edges < num_nodes || num_edges > num_nodes * (num_nodes - 1) / 2)) {
    throw ValidationError("experiment: edge count must lie in [N, N(N-1)/2]");
  }
  if (seeds.empty()) throw ValidationError("experiment: seed list is empty");
  if (algorithms.empty()) throw ValidationError("experiment: algorithm list is empty");
  if (iterations < 1) throw ValidationError("experiment: iterations must be >= 1");
  if (metric_stride < 1) throw ValidationError("experiment: metric_stride must be >= 1");
  if (jobs < 1) throw ValidationError("experiment: jobs must be >= 1");
  if (!(reference_tol > 0.0)) throw ValidationError("experiment: reference_tol must be > 0");
  std::vector<std::string> labels;
  for (const auto& a : algorithms) {
    if (a.label.empty() || a.label.find_first_of("/\\") != std::string::npos) {
      throw ValidationError("experiment: bad algorithm label '" + a.label + "'");
    }
    if (std::find(labels.begin(), labels.end(), a.label) != labels.end()) {
      throw ValidationError("experiment: duplicate algorithm label '" + a.label + "'");
    }
    labels.push_back(a.label);
    if (a.algorithm == Algorithm::kDapdb0 && family != "qp") {
      throw ValidationError("experiment: dapdb0 needs a family without constraints");
    }
  }
}

ExperimentSpec default_spec(const std::string& family) {
  ExperimentSpec spec;
  spec.family = family;
  spec.seeds = seed_range(1, 20);
  if (family == "qcqp") {
    ParameterSet p;
    p.consts = {0.1, 0.1, 0.1, 0.1};
    p.rho = 0.9;
    p.zeta = 1.0;
    ParameterSet backtracking = p;
    backtracking.kappa = 20.0;
    spec.algorithms = {{"dapdb", Algorithm::kDapdb, backtracking}, {"dapd", Algorithm::kDapd, p}};
    spec.iterations = 5000;
    spec.metric_stride = 10;
  } else if (family == "qp") {
    ParameterSet p;
    p.consts = {0.1, 0.4, 0.0, 0.4};
    p.rho = 0.9;
    p.zeta = 1.0;
    p.hat_tau_rule = HatTauRule::kHalfInverseLipschitz;
    ParameterSet backtracking = p;
    backtracking.kappa = 5.0;
    spec.algorithms = {{"dapdb0", Algorithm::kDapdb0, backtracking},
                       {"dapd", Algorithm::kDapd, p}};
    spec.iterations = 20000;
    spec.metric_stride = 20;
  } else {
    throw ValidationError("experiment: unknown family '" + family + "'");
  }
  return spec;
}

ExperimentSpec spec_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("spec file: ") + e.what());
  }
  try {
    ExperimentSpec spec = default_spec(j.value("family", std::string("qcqp")));
    spec.n = j.value("n", spec.n);
    spec.num_nodes = j.value("num_nodes", spec.num_nodes);
    spec.num_edges = j.value("num_edges", spec.num_edges);
    if (j.contains("seeds")) {
      const auto& s = j.at("seeds");
      if (s.is_object()) {
        spec.seeds = seed_range(s.value("first", std::uint64_t{1}), s.at("count").get<std::uint64_t>());
      } else {
        spec.seeds = s.get<std::vector<std::uint64_t>>();
      }
    }
    spec.iterations = j.value("iterations", spec.iterations);
    spec.metric_stride = j.value("metric_stride", spec.metric_stride);
    spec.output_dir = j.value("output_dir", spec.output_dir);
    spec.jobs = j.value("jobs", spec.jobs);
    spec.reference_tol = j.value("reference_tol", spec.reference_tol);
    if (j.contains("algorithms")) {
      // Overrides start from the family's defaults for the same algorithm.
      const ExperimentSpec base = spec;
      spec.algorithms.clear();
      for (const auto& ja : j.at("algorithms")) {
        AlgorithmEntry entry;
        entry.algorithm = parse_algorithm(ja.at("algorithm").get<std::string>());
        for (const auto& d : base.algorithms) {
          if (d.algorithm == entry.algorithm) entry.params = d.params;
        }
        entry.label = ja.value("label", to_string(entry.algorithm));
        if (ja.contains("params")) entry.params = params_from_json(ja.at("params"), entry.params);
        spec.algorithms.push_back(entry);
      }
    }
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("spec file: ") + e.what());
  }
}

std::string spec_to_json(const ExperimentSpec& spec) {
  json algos = json::array();
  for (const auto& a : spec.algorithms) {
    algos.push_back({{"label", a.label},
                     {"algorithm", to_string(a.algorithm)},
                     {"params", params_to_json(a.params)}});
  }
  json j{{"family", spec.family},
         {"n", spec.n},
         {"num_nodes", spec.num_nodes},
         {"num_edges", spec.num_edges},
         {"seeds", spec.seeds},
         {"algorithms", algos},
         {"iterations", spec.iterations},
         {"metric_stride", spec.metric_stride},
         {"output_dir", spec.output_dir},
         {"jobs", spec.jobs},
         {"reference_tol", spec.reference_tol}};
  return j.dump(2);
}

ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open spec file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return spec_from_json(ss.str());
}

ParameterSet parameter_set_from_json(const std::string& text, ParameterSet base) {
  try {
    return params_from_json(json::parse(text), base);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("parameter file: ") + e.what());
  }
}

std::string resolved_output_dir(const ExperimentSpec& spec) {
  if (!spec.output_dir.empty()) return spec.output_dir;
  if (const char* env = std::getenv("DAPDB_OUTPUT_DIR"); env && *env) return env;
  return "dapdb_out";
}

ProblemInstance make_instance(const ExperimentSpec& spec, std::uint64_t seed) {
  GeneratorOptions opts;
  opts.num_edges = spec.num_edges;
  if (spec.family == "qp") return gen_qp(spec.n, spec.num_nodes, seed, opts);
  if (spec.family == "qcqp") {
    if (spec.n < 4) return gen_qcqp_lowdim(spec.n, spec.num_nodes, seed, opts);
    return gen_qcqp(spec.n, spec.num_nodes, seed, opts);
  }
  throw ValidationError("experiment: unknown family '" + spec.family + "'");
}

std::string to_string(AggregateAxis axis) {
  switch (axis) {
    case AggregateAxis::kIteration: return "iteration";
    case AggregateAxis::kGradCalls: return "grad_calls";
    case AggregateAxis::kCommRounds: return "comm_rounds";
  }
  return "?";
}

double axis_value(const TraceRow& row, AggregateAxis axis) {
  switch (axis) {
    case AggregateAxis::kIteration: return static_cast<double>(row.k);
    case AggregateAxis::kGradCalls: return row.avg_grad_calls_per_node;
    case AggregateAxis::kCommRounds: return static_cast<double>(row.neighbor_rounds);
  }
  return 0.0;
}

std::vector<TraceRow> trace_points(const RunTrace& trace) {
  std::vector<TraceRow> pts = trace.rows;
  pts.push_back(trace.final_row);
  return pts;
}

const TraceRow& row_at(const std::vector<TraceRow>& points, AggregateAxis axis, double x) {
  if (points.empty()) throw ValidationError("row_at: empty trace");
  // Axis values are nondecreasing along a trace.
  auto it = std::upper_bound(points.begin(), points.end(), x,
                             [axis](double v, const TraceRow& r) { return v < axis_value(r, axis); });
  if (it == points.begin()) return points.front();
  return *std::prev(it);
}

double common_budget(const std::vector<RunTrace>& traces, AggregateAxis axis) {
  double budget = kInfinity;
  for (const auto& t : traces) budget = std::min(budget, axis_value(t.final_row, axis));
  return budget;
}

std::vector<AggregateRow> aggregate(const std::string& label,
                                    const std::vector<RunTrace>& traces, AggregateAxis axis,
                                    int grid_points) {
  std::vector<AggregateRow> out;
  if (traces.empty()) return out;
  std::vector<std::vector<TraceRow>> pts;
  for (const auto& t : traces) pts.push_back(trace_points(t));

  std::vector<double> grid;
  if (axis == AggregateAxis::kIteration) {
    for (const auto& r : pts.front()) grid.push_back(static_cast<double>(r.k));
  } else {
    double lo = kInfinity;
    for (const auto& p : pts) lo = std::min(lo, axis_value(p.front(), axis));
    const double hi = common_budget(traces, axis);
    const int m = std::max(2, grid_points);
    for (int j = 0; j < m; ++j) grid.push_back(lo + (hi - lo) * j / (m - 1));
  }

  for (double x : grid) {
    std::vector<double> sub;
    std::vector<double> cons;
    std::vector<double> inf;
    for (const auto& p : pts) {
      const TraceRow& r = row_at(p, axis, x);
      sub.push_back(r.log_rel_subopt);
      cons.push_back(r.rel_consensus_err);
      inf.push_back(r.rel_infeasibility);
    }
    AggregateRow row;
    row.label = label;
    row.axis = axis;
    row.x = x;
    row.count = static_cast<int>(pts.size());
    const Moments ms = moments(sub);
    const Moments mc = moments(cons);
    const Moments mi = moments(inf);
    row.mean_log_rel_subopt = ms.mean;
    row.std_log_rel_subopt = ms.stddev;
    row.mean_rel_consensus_err = mc.mean;
    row.std_rel_consensus_err = mc.stddev;
    row.mean_rel_infeasibility = mi.mean;
    row.std_rel_infeasibility = mi.stddev;
    out.push_back(row);
  }
  return out;
}

void aggregate_csv_export(const std::vector<AggregateRow>& rows, std::ostream& out) {
  out << "algorithm,axis,x,count,mean_log_rel_subopt,std_log_rel_subopt,"
         "mean_rel_consensus_err,std_rel_consensus_err,mean_rel_infeasibility,"
         "std_rel_infeasibility\n";
  for (const auto& r : rows) {
    out << r.label << ',' << to_string(r.axis) << ',' << fmt(r.x) << ',' << r.count << ','
        << fmt(r.mean_log_rel_subopt) << ',' << fmt(r.std_log_rel_subopt) << ','
        << fmt(r.mean_rel_consensus_err) << ',' << fmt(r.std_rel_consensus_err) << ','
        << fmt(r.mean_rel_infeasibility) << ',' << fmt(r.std_rel_infeasibility) << '\n';
  }
}

int ExperimentResult::failed_seeds() const {
  int failed = 0;
  for (const auto& s : seeds) failed += s.ok ? 0 : 1;
  return failed;
}

int ExperimentResult::exit_code() const {
  const int failed = failed_seeds();
  if (failed == 0) return 0;
  return failed == static_cast<int>(seeds.size()) ? 2 : 3;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, std::ostream* log) {
  spec.validate();
  ExperimentResult result;
  result.output_dir = resolved_output_dir(spec);
  std::filesystem::create_directories(result.output_dir);

  result.seeds.resize(spec.seeds.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  const auto worker = [&] {
    for (std::size_t i = next++; i < spec.seeds.size(); i = next++) {
      result.seeds[i] = run_seed(spec, spec.seeds[i], result.output_dir, log, log_mutex);
    }
  };
  const int jobs = std::min<int>(spec.jobs, static_cast<int>(spec.seeds.size()));
  std::vector<std::thread> pool;
  for (int w = 1; w < jobs; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t a = 0; a < spec.algorithms.size(); ++a) {
    std::vector<RunTrace> traces;
    for (const auto& s : result.seeds) {
      if (s.ok) traces.push_back(s.traces[a]);
    }
    for (AggregateAxis axis :
         {AggregateAxis::kIteration, AggregateAxis::kGradCalls, AggregateAxis::kCommRounds}) {
      auto rows = aggregate(spec.algorithms[a].label, traces, axis);
      result.aggregate.insert(result.aggregate.end(), rows.begin(), rows.end());
    }
  }

  {
    const std::string path = result.output_dir + "/aggregate.csv";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    aggregate_csv_export(result.aggregate, out);
  }
  json failures = json::array();
  for (const auto& s : result.seeds) {
    if (!s.ok) failures.push_back({{"seed", s.seed}, {"error", s.error}});
  }
  json summary{{"spec", json::parse(spec_to_json(spec))},
               {"seeds_ok", static_cast<int>(spec.seeds.size()) - result.failed_seeds()},
               {"failures", failures}};
  std::ofstream out(result.output_dir + "/summary.json");
  out << summary.dump(2) << '\n';
  return result;
}

std::string describe(const ExperimentSpec& spec) {
  spec.validate();
  std::ostringstream os;
  os << "family        " << spec.family << '\n'
     << "n             " << spec.n << '\n'
     << "nodes         " << spec.num_nodes << '\n'
     << "edges         " << spec.num_edges << '\n'
     << "seeds         " << spec.seeds.size() << " (";
  for (std::size_t i = 0; i < spec.seeds.size(); ++i) os << (i ? " " : "") << spec.seeds[i];
  os << ")\n"
     << "iterations    " << spec.iterations << '\n'
     << "metric stride " << spec.metric_stride << '\n'
     << "reference tol " << brief(spec.reference_tol) << '\n'
     << "output dir    " << resolved_output_dir(spec) << '\n'
     << "jobs          " << spec.jobs << '\n';

  std::vector<ProblemInstance> instances;
  for (auto s : spec.seeds) instances.push_back(make_instance(spec, s));
  const int edges = instances.front().graph.num_edges();

  for (const auto& a : spec.algorithms) {
    const auto& p = a.params;
    double hat_lo = kInfinity, hat_hi = 0.0, bar_lo = kInfinity, bar_hi = 0.0;
    AlgorithmConfig cfg;
    for (const auto& inst : instances) {
      cfg = make_config(inst, a.algorithm, p);
      for (std::size_t i = 0; i < cfg.hat_tau.size(); ++i) {
        hat_lo = std::min(hat_lo, cfg.hat_tau[i]);
        hat_hi = std::max(hat_hi, cfg.hat_tau[i]);
        bar_lo = std::min(bar_lo, cfg.tau_bar[i]);
        bar_hi = std::max(bar_hi, cfg.tau_bar[i]);
      }
    }
    os << "\n[" << a.label << "] " << to_string(a.algorithm) << '\n'
       << "  delta " << brief(cfg.consts.delta) << "  c_alpha " << brief(cfg.consts.c_alpha)
       << "  c_beta " << brief(cfg.consts.c_beta) << "  c_varsigma " << brief(cfg.consts.c_varsigma)
       << '\n'
       << "  rho " << brief(cfg.rho) << "  zeta " << brief(p.zeta)
       << "  kappa " << brief(a.algorithm == Algorithm::kDapd ? 1.0 : cfg.kappa) << '\n'
       << "  c_gamma " << brief(cfg.c_gamma);
    if (!p.c_gamma) os << " (default 1/(2|E|) = 1/" << 2 * edges << ")";
    os << '\n'
       << "  tau_hat rule " << to_string(cfg.hat_tau_rule) << "  range [" << brief(hat_lo) << ", "
       << brief(hat_hi) << "]\n"
       << "  tau_bar range [" << brief(bar_lo) << ", " << brief(bar_hi) << "]\n"
       << "  inner product test " << (cfg.inner_product_test ? "yes" : "no") << '\n';
  }
  return os.str();
}

}  // namespace dapdb
