#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "dapdb/graph.hpp"

using namespace dapdb;

namespace {

NodeVectors scalars(std::initializer_list<double> v) {
  NodeVectors out;
  for (double x : v) out.push_back(Vector::Constant(1, x));
  return out;
}

NetworkGraph triangle() { return NetworkGraph(3, {{0, 1}, {0, 2}, {1, 2}}); }
NetworkGraph path2() { return NetworkGraph(2, {{0, 1}}); }

}  // namespace

TEST(SmallWorld, PaperScale) {
  for (std::uint64_t seed : {0u, 1u, 17u, 99u}) {
    const NetworkGraph g = build_small_world(12, 24, seed);
    EXPECT_EQ(g.num_nodes(), 12);
    EXPECT_EQ(g.num_edges(), 24);
    EXPECT_TRUE(is_connected(12, g.edges()));
    int deg_sum = 0;
    for (int i = 0; i < 12; ++i) {
      deg_sum += g.degree(i);
      EXPECT_GE(g.degree(i), 2);  // every node sits on the cycle
    }
    EXPECT_EQ(deg_sum, 48);
  }
}

TEST(SmallWorld, ContainsHamiltonianCycle) {
  // Brute force over permutations is too big for N=12; use N=7 where it is cheap.
  const NetworkGraph g = build_small_world(7, 9, 5);
  std::vector<int> perm = {1, 2, 3, 4, 5, 6};
  bool found = false;
  do {
    bool ok = g.has_edge(0, perm.front()) && g.has_edge(perm.back(), 0);
    for (std::size_t i = 0; ok && i + 1 < perm.size(); ++i) ok = g.has_edge(perm[i], perm[i + 1]);
    found = found || ok;
  } while (!found && std::next_permutation(perm.begin(), perm.end()));
  EXPECT_TRUE(found);
}

TEST(SmallWorld, ForcedShapes) {
  const NetworkGraph tri = build_small_world(3, 3, 0);
  EXPECT_EQ(tri, triangle());
  const NetworkGraph k4 = build_small_world(4, 6, 7);
  EXPECT_EQ(k4.num_edges(), 6);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(k4.degree(i), 3);
}

TEST(SmallWorld, RejectsBadSizes) {
  EXPECT_THROW(build_small_world(2, 2, 0), ValidationError);
  EXPECT_THROW(build_small_world(5, 4, 0), ValidationError);
  EXPECT_THROW(build_small_world(5, 11, 0), ValidationError);
}

TEST(SmallWorld, SeedDeterminism) {
  EXPECT_EQ(build_small_world(12, 24, 3).edges(), build_small_world(12, 24, 3).edges());
  EXPECT_NE(build_small_world(12, 24, 3).edges(), build_small_world(12, 24, 4).edges());
}

TEST(Graph, InvariantsOnConstruction) {
  EXPECT_THROW(NetworkGraph(3, {{1, 0}, {1, 2}}), ValidationError);
  EXPECT_THROW(NetworkGraph(3, {{0, 1}, {0, 1}, {1, 2}}), ValidationError);
  EXPECT_THROW(NetworkGraph(4, {{0, 1}, {2, 3}}), ValidationError);
  const NetworkGraph g = build_small_world(9, 14, 2);
  for (int i = 0; i < 9; ++i) {
    for (int j : g.neighbors(i)) EXPECT_TRUE(g.has_edge(j, i));
  }
}

TEST(NeighborDiff, Examples) {
  CommLedger ledger;
  const Vector v = Vector::LinSpaced(4, -1.0, 2.0);
  const NodeVectors flat = neighbor_diff(triangle(), {v, v, v}, ledger);
  for (const auto& o : flat) EXPECT_EQ(o, Vector::Zero(4));

  const NodeVectors p = neighbor_diff(path2(), scalars({1, 0}), ledger);
  EXPECT_DOUBLE_EQ(p[0][0], 1.0);
  EXPECT_DOUBLE_EQ(p[1][0], -1.0);

  const NodeVectors t = neighbor_diff(triangle(), scalars({1, 2, 4}), ledger);
  EXPECT_DOUBLE_EQ(t[0][0], -4.0);
  EXPECT_DOUBLE_EQ(t[1][0], -1.0);
  EXPECT_DOUBLE_EQ(t[2][0], 5.0);
  EXPECT_DOUBLE_EQ(t[0][0] + t[1][0] + t[2][0], 0.0);
}

TEST(NeighborDiff, LedgerAndErrors) {
  CommLedger ledger;
  const NetworkGraph g = build_small_world(6, 8, 1);
  NodeVectors s(6, Vector::Ones(3));
  neighbor_diff(g, s, ledger);
  EXPECT_EQ(ledger.neighbor_rounds, 1u);
  EXPECT_EQ(ledger.vectors_sent, 16u);
  EXPECT_EQ(ledger.flood_rounds, 0u);
  s.pop_back();
  EXPECT_THROW(neighbor_diff(g, s, ledger), ValidationError);
}

TEST(IncidenceApply, Examples) {
  const NodeVectors p = incidence_apply(path2(), scalars({3, 1}));
  ASSERT_EQ(p.size(), 1u);
  EXPECT_DOUBLE_EQ(p[0][0], 2.0);

  const NodeVectors t = incidence_apply(triangle(), scalars({1, 2, 4}));
  ASSERT_EQ(t.size(), 3u);
  EXPECT_DOUBLE_EQ(t[0][0], -1.0);
  EXPECT_DOUBLE_EQ(t[1][0], -3.0);
  EXPECT_DOUBLE_EQ(t[2][0], -2.0);
  double sq = 0.0;
  for (const auto& e : t) sq += e.squaredNorm();
  // x^T Omega x with Omega = [[2,-1,-1],[-1,2,-1],[-1,-1,2]] for the triangle
  const Eigen::Vector3d x(1, 2, 4);
  Eigen::Matrix3d omega;
  omega << 2, -1, -1, -1, 2, -1, -1, -1, 2;
  EXPECT_DOUBLE_EQ(sq, x.dot(omega * x));
  EXPECT_DOUBLE_EQ(sq, 14.0);

  const NetworkGraph g = build_small_world(8, 12, 3);
  for (const auto& e : incidence_apply(g, NodeVectors(8, Vector::Constant(2, 1.5)))) {
    EXPECT_EQ(e, Vector::Zero(2));
  }
  EXPECT_THROW(incidence_apply(g, NodeVectors(7, Vector::Zero(2))), ValidationError);
}

TEST(MaxConsensus, Examples) {
  CommLedger ledger;
  const std::vector<double> ones{1, 1, 1}, mixed{1.0, 2.5, 0.3}, single{7.0};
  EXPECT_EQ(max_consensus(triangle(), ones, ledger), 1.0);
  EXPECT_EQ(max_consensus(triangle(), mixed, ledger), 2.5);
  EXPECT_EQ(max_consensus(NetworkGraph(), single, ledger), 7.0);
  EXPECT_EQ(ledger.flood_rounds, 3u);
  EXPECT_EQ(ledger.neighbor_rounds, 0u);
  const std::vector<double> empty, bad{1.0, std::nan(""), 0.0};
  EXPECT_THROW(max_consensus(NetworkGraph(), empty, ledger), ValidationError);
  EXPECT_THROW(max_consensus(triangle(), bad, ledger), ValidationError);
}

TEST(Graph, LaplacianIdentity) {
  const NetworkGraph g = build_small_world(12, 24, 11);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  CommLedger ledger;
  for (int trial = 0; trial < 100; ++trial) {
    NodeVectors x(12, Vector(4));
    for (auto& v : x) {
      for (int j = 0; j < 4; ++j) v[j] = nd(rng);
    }
    double lhs = 0.0;
    for (const auto& e : incidence_apply(g, x)) lhs += e.squaredNorm();
    const NodeVectors lx = neighbor_diff(g, x, ledger);
    double rhs = 0.0, scale = 0.0;
    for (int i = 0; i < 12; ++i) {
      rhs += x[i].dot(lx[i]);
      scale += x[i].squaredNorm();
    }
    EXPECT_LE(std::abs(lhs - rhs), 1e-10 * scale);
  }
}

TEST(Graph, EdgeListRoundTrip) {
  const NetworkGraph g = build_small_world(10, 17, 8);
  const std::string text = to_edge_list(g);
  EXPECT_EQ(text.substr(0, text.find('\n')), "10 17");
  EXPECT_EQ(parse_edge_list(text), g);
  std::stringstream ss;
  write_edge_list(ss, g);
  EXPECT_EQ(read_edge_list(ss), g);
  EXPECT_THROW(parse_edge_list("3 2\n0 1\n"), ValidationError);
}
