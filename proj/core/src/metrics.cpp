#include "dapdb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace dapdb {

Vector node_mean(const NodeVectors& x) {
  if (x.empty()) throw ValidationError("node_mean: no nodes");
  Vector mean = Vector::Zero(x.front().size());
  for (const auto& v : x) mean += v;
  return mean / static_cast<double>(x.size());
}

GuardedValue log_rel_suboptimality(const NodeVectors& x, const ProblemInstance& instance,
                                   double phi_star) {
  const double gap = std::abs(instance.objective(node_mean(x)) - phi_star);
  if (phi_star == 0.0) return {std::log(gap + 1.0), true};
  return {std::log(gap / std::abs(phi_star) + 1.0), false};
}

GuardedValue rel_consensus_error(const NodeVectors& x) {
  const Vector mean = node_mean(x);
  double spread = 0.0;
  for (const auto& v : x) spread += (v - mean).squaredNorm();
  const double n = static_cast<double>(x.size());
  const double mean_norm = mean.norm();
  if (mean_norm <= kConsensusGuard) return {spread / n, true};
  return {spread / (n * mean_norm * mean_norm), false};
}

double max_violation(const Vector& x, const ProblemInstance& instance) {
  double worst = 0.0;
  for (const auto& node : instance.nodes) worst = std::max(worst, node.violation(x));
  return worst;
}

double max_violation(const NodeVectors& x, const ProblemInstance& instance) {
  double worst = 0.0;
  for (int i = 0; i < instance.num_nodes(); ++i) {
    worst = std::max(worst, instance.nodes[i].violation(x[i]));
  }
  return worst;
}

GuardedValue rel_infeasibility(const Vector& x_bar, const ProblemInstance& instance,
                               double baseline) {
  const double v = max_violation(x_bar, instance);
  if (baseline == 0.0) return {v, true};
  return {v / baseline, false};
}

double consensus_residual(const NetworkGraph& graph, const NodeVectors& x) {
  double total = 0.0;
  for (const auto& e : incidence_apply(graph, x)) total += e.squaredNorm();
  return std::sqrt(total);
}

NodeVectors reconstruct_lambda(const NetworkGraph& graph, const NodeVectors& s) {
  return incidence_apply(graph, s);
}

double separable_objective(const NodeVectors& x, const ProblemInstance& instance) {
  double total = 0.0;
  for (int i = 0; i < instance.num_nodes(); ++i) {
    total += instance.nodes[i].local_objective(x[i]);
  }
  return total;
}

namespace {

bool same_double(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

}  // namespace

bool TraceRow::same_as(const TraceRow& o) const {
  return k == o.k && same_double(t, o.t) && same_double(eta, o.eta) &&
         same_double(gamma, o.gamma) && same_double(log_rel_subopt, o.log_rel_subopt) &&
         same_double(rel_consensus_err, o.rel_consensus_err) &&
         consensus_guarded == o.consensus_guarded &&
         same_double(rel_infeasibility, o.rel_infeasibility) &&
         same_double(avg_grad_calls_per_node, o.avg_grad_calls_per_node) &&
         neighbor_rounds == o.neighbor_rounds && flood_rounds == o.flood_rounds &&
         total_backtracks == o.total_backtracks &&
         same_double(ergodic_subopt_gap, o.ergodic_subopt_gap) &&
         same_double(ergodic_consensus_violation, o.ergodic_consensus_violation) &&
         same_double(ergodic_infeasibility, o.ergodic_infeasibility);
}

const std::vector<std::string>& trace_columns() {
  static const std::vector<std::string> cols = {
      "k",
      "t",
      "eta",
      "gamma",
      "log_rel_subopt",
      "rel_consensus_err",
      "consensus_guarded",
      "rel_infeasibility",
      "avg_grad_calls_per_node",
      "neighbor_rounds",
      "flood_rounds",
      "total_backtracks",
      "ergodic_subopt_gap",
      "ergodic_consensus_violation",
      "ergodic_infeasibility",
  };
  return cols;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void csv_export(const RunTrace& trace, std::ostream& out) {
  const auto& cols = trace_columns();
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
  out << '\n';
  for (const auto& r : trace.rows) {
    out << r.k << ',' << format_double(r.t) << ',' << format_double(r.eta) << ','
        << format_double(r.gamma) << ',' << format_double(r.log_rel_subopt) << ','
        << format_double(r.rel_consensus_err) << ',' << r.consensus_guarded << ','
        << format_double(r.rel_infeasibility) << ','
        << format_double(r.avg_grad_calls_per_node) << ',' << r.neighbor_rounds << ','
        << r.flood_rounds << ',' << r.total_backtracks << ','
        << format_double(r.ergodic_subopt_gap) << ','
        << format_double(r.ergodic_consensus_violation) << ','
        << format_double(r.ergodic_infeasibility) << '\n';
  }
}

void csv_export(const RunTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  csv_export(trace, out);
  out.flush();
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

namespace {

double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return kInfinity;
  if (s == "-inf") return -kInfinity;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw ValidationError("csv: bad number '" + s + "'");
  return v;
}

long long parse_int(const std::string& s) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') throw ValidationError("csv: bad integer '" + s + "'");
  return v;
}

}  // namespace

std::vector<TraceRow> csv_parse(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("csv: missing header");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header != trace_columns()) throw ValidationError("csv: unexpected header");

  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != header.size()) throw ValidationError("csv: wrong field count");
    TraceRow r;
    r.k = static_cast<long>(parse_int(f[0]));
    r.t = parse_double(f[1]);
    r.eta = parse_double(f[2]);
    r.gamma = parse_double(f[3]);
    r.log_rel_subopt = parse_double(f[4]);
    r.rel_consensus_err = parse_double(f[5]);
    r.consensus_guarded = static_cast<int>(parse_int(f[6]));
    r.rel_infeasibility = parse_double(f[7]);
    r.avg_grad_calls_per_node = parse_double(f[8]);
    r.neighbor_rounds = static_cast<std::uint64_t>(parse_int(f[9]));
    r.flood_rounds = static_cast<std::uint64_t>(parse_int(f[10]));
    r.total_backtracks = static_cast<long>(parse_int(f[11]));
    r.ergodic_subopt_gap = parse_double(f[12]);
    r.ergodic_consensus_violation = parse_double(f[13]);
    r.ergodic_infeasibility = parse_double(f[14]);
    rows.push_back(r);
  }
  return rows;
}

std::vector<TraceRow> csv_parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return csv_parse(in);
}

}  // namespace dapdb
