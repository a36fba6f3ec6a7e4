#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "dapdb/generators.hpp"
#include "dapdb/metrics.hpp"
#include "dapdb/oracle.hpp"
#include "dapdb/run.hpp"

using namespace dapdb;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  int j = 0;
  for (double d : v) out[j++] = d;
  return out;
}

// Two isolated-looking nodes on a single edge: f_i = 0.5 ||x||^2, no l1 term,
// optional constraint x_0 - 1 <= 0 at node 0.
ProblemInstance two_nodes(bool constrained) {
  ProblemInstance inst;
  inst.graph = NetworkGraph(2, {{0, 1}});
  for (int i = 0; i < 2; ++i) {
    QuadraticForm f{Matrix::Identity(2, 2), Vector::Zero(2), 0.0, Vector::Zero(2)};
    std::vector<QuadraticForm> g;
    if (constrained && i == 0) g.push_back(QuadraticForm::affine(vec({1, 0}), -1.0));
    inst.nodes.emplace_back(f, g, L1BoxRegularizer{0.0, 10.0}, 5.0,
                            NodeSmoothness{1.0, 0.0, 1.0});
  }
  inst.x0 = {Vector::Zero(2), Vector::Zero(2)};
  return inst;
}

}  // namespace

TEST(Metrics, LogRelSuboptimality) {
  const ProblemInstance inst = two_nodes(false);
  // objective at xbar = (1, 1): 2 * 0.5 * 2 = 2
  const NodeVectors x{vec({0, 2}), vec({2, 0})};
  const GuardedValue v = log_rel_suboptimality(x, inst, 1.0);
  EXPECT_DOUBLE_EQ(v.value, std::log(2.0));
  EXPECT_FALSE(v.guarded);
  const GuardedValue g = log_rel_suboptimality(x, inst, 0.0);
  EXPECT_DOUBLE_EQ(g.value, std::log(3.0));
  EXPECT_TRUE(g.guarded);
  EXPECT_EQ(log_rel_suboptimality(x, inst, 2.0).value, 0.0);
}

TEST(Metrics, RelConsensusError) {
  const GuardedValue a = rel_consensus_error({vec({1.0}), vec({3.0})});
  EXPECT_DOUBLE_EQ(a.value, 0.25);
  EXPECT_FALSE(a.guarded);
  const Vector v = vec({3, -4});
  const GuardedValue b = rel_consensus_error({v, Vector(-v)});
  EXPECT_DOUBLE_EQ(b.value, v.squaredNorm());
  EXPECT_TRUE(b.guarded);
  EXPECT_EQ(rel_consensus_error({v, v, v}).value, 0.0);
  EXPECT_THROW(rel_consensus_error({}), ValidationError);
}

TEST(Metrics, RelInfeasibility) {
  const ProblemInstance inst = two_nodes(true);
  const GuardedValue a = rel_infeasibility(vec({1.5, 0}), inst, 2.0);
  EXPECT_DOUBLE_EQ(a.value, 0.25);
  EXPECT_FALSE(a.guarded);
  const GuardedValue b = rel_infeasibility(vec({2.0, 7}), inst, 0.0);
  EXPECT_DOUBLE_EQ(b.value, 1.0);
  EXPECT_TRUE(b.guarded);
  EXPECT_EQ(rel_infeasibility(vec({0.5, 0}), inst, 3.0).value, 0.0);
  EXPECT_DOUBLE_EQ(max_violation(NodeVectors{vec({4, 0}), vec({9, 9})}, inst), 3.0);
}

TEST(Metrics, ConsensusResidualAndObjective) {
  const ProblemInstance inst = two_nodes(false);
  const NodeVectors x{vec({1, 2}), vec({4, 6})};
  EXPECT_DOUBLE_EQ(consensus_residual(inst.graph, x), 5.0);
  EXPECT_DOUBLE_EQ(separable_objective(x, inst), 0.5 * 5 + 0.5 * 52);
  EXPECT_EQ(node_mean(x), vec({2.5, 4}));
  const NodeVectors lambda = reconstruct_lambda(inst.graph, x);
  ASSERT_EQ(lambda.size(), 1u);
  EXPECT_EQ(lambda[0], vec({-3, -4}));
}

TEST(Metrics, FormatDouble) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(kInfinity), "inf");
  EXPECT_EQ(format_double(std::nan("")), "nan");
  EXPECT_EQ(std::strtod(format_double(1.0 / 3.0).c_str(), nullptr), 1.0 / 3.0);
}

class TraceCsv : public ::testing::Test {
 protected:
  static RunResult run(long K, int stride) {
    ProblemInstance inst = gen_qcqp(5, 4, 2);
    inst.reference = solve_centralized(inst, 1e-9);
    ParameterSet p;
    p.kappa = 20;
    const AlgorithmConfig cfg = make_config(inst, Algorithm::kDapdb, p);
    RunOptions opts;
    opts.iterations = K;
    opts.metric_stride = stride;
    return run_algorithm(inst, cfg, opts);
  }
  static std::string csv(const RunTrace& t) {
    std::ostringstream out;
    csv_export(t, out);
    return out.str();
  }
  static int lines(const std::string& s) {
    return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
  }
};

TEST_F(TraceCsv, HeaderOnly) {
  RunTrace empty;
  const std::string s = csv(empty);
  EXPECT_EQ(lines(s), 1);
  EXPECT_EQ(s.substr(0, 10), "k,t,eta,ga");
  std::istringstream in(s);
  EXPECT_TRUE(csv_parse(in).empty());
}

TEST_F(TraceCsv, RowsAndRoundTrip) {
  const RunResult r = run(3, 1);
  const std::string s = csv(r.trace);
  EXPECT_EQ(lines(s), 4);
  std::istringstream in(s);
  const std::vector<TraceRow> back = csv_parse(in);
  ASSERT_EQ(back.size(), r.trace.rows.size());
  for (std::size_t j = 0; j < back.size(); ++j) {
    EXPECT_TRUE(back[j].same_as(r.trace.rows[j])) << j;
    EXPECT_EQ(back[j].k, static_cast<long>(j));
  }
  EXPECT_EQ(r.trace.final_row.k, 3);
}

TEST_F(TraceCsv, StrideKeepsLastIteration) {
  const RunResult r = run(25, 10);
  std::vector<long> ks;
  for (const auto& row : r.trace.rows) ks.push_back(row.k);
  EXPECT_EQ(ks, (std::vector<long>{0, 10, 20, 24}));
}

TEST_F(TraceCsv, DeterministicBytes) { EXPECT_EQ(csv(run(40, 3).trace), csv(run(40, 3).trace)); }

TEST_F(TraceCsv, CountersNondecreasing) {
  const RunResult r = run(200, 1);
  const auto& rows = r.trace.rows;
  EXPECT_EQ(rows.front().avg_grad_calls_per_node, 1.0);
  EXPECT_EQ(rows.front().flood_rounds, 1u);
  EXPECT_EQ(rows.front().neighbor_rounds, 0u);
  for (std::size_t j = 1; j < rows.size(); ++j) {
    EXPECT_GE(rows[j].avg_grad_calls_per_node, rows[j - 1].avg_grad_calls_per_node);
    EXPECT_GE(rows[j].neighbor_rounds, rows[j - 1].neighbor_rounds);
    EXPECT_GE(rows[j].flood_rounds, rows[j - 1].flood_rounds);
    EXPECT_GE(rows[j].total_backtracks, rows[j - 1].total_backtracks);
    EXPECT_LE(rows[j].t, rows[j - 1].t);
  }
  EXPECT_GE(r.trace.final_row.avg_grad_calls_per_node, rows.back().avg_grad_calls_per_node);
}

TEST_F(TraceCsv, MalformedInput) {
  std::istringstream missing("");
  EXPECT_THROW(csv_parse(missing), ValidationError);
  std::istringstream bad_header("a,b\n1,2\n");
  EXPECT_THROW(csv_parse(bad_header), ValidationError);
  std::string s = csv(run(2, 1).trace);
  s += "1,2,3\n";
  std::istringstream short_row(s);
  EXPECT_THROW(csv_parse(short_row), ValidationError);
}
