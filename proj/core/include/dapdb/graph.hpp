#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dapdb/types.hpp"

namespace dapdb {

struct Edge {
  int i = 0;
  int j = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Static, connected, undirected communication topology. Edges are stored
// with i < j; neighbor lists are sorted ascending.
class NetworkGraph {
 public:
  // A single isolated node.
  NetworkGraph();

  // Throws ValidationError unless every edge satisfies 0 <= i < j < N, edges
  // are distinct, and the graph is connected.
  NetworkGraph(int num_nodes, std::vector<Edge> edges);

  int num_nodes() const { return num_nodes_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  std::span<const int> neighbors(int node) const { return neighbors_.at(node); }
  int degree(int node) const { return static_cast<int>(neighbors_.at(node).size()); }
  int max_degree() const { return max_degree_; }

  bool has_edge(int a, int b) const;

  friend bool operator==(const NetworkGraph& a, const NetworkGraph& b) {
    return a.num_nodes_ == b.num_nodes_ && a.edges_ == b.edges_;
  }

 private:
  int num_nodes_ = 1;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> neighbors_;
  int max_degree_ = 0;
};

// Counts simulated communication. Neighbor rounds are synchronous exchanges of
// n-vectors over every edge; flood rounds are network-wide max-consensus calls.
struct CommLedger {
  std::uint64_t neighbor_rounds = 0;
  std::uint64_t flood_rounds = 0;
  std::uint64_t vectors_sent = 0;
};

// Random small-world topology: a Hamiltonian cycle over a uniformly random
// node permutation plus (num_edges - num_nodes) chords drawn uniformly without
// replacement from the remaining node pairs.
NetworkGraph build_small_world(int num_nodes, int num_edges, std::uint64_t seed);

// (Omega (x) I) s: output_i = d_i s_i - sum_{j in N_i} s_j. Charges one neighbor
// round and sum_i d_i vectors to the ledger.
NodeVectors neighbor_diff(const NetworkGraph& graph, const NodeVectors& states,
                          CommLedger& ledger);

// A x: one entry x_i - x_j per edge (i, j), in edge order. Diagnostic only.
NodeVectors incidence_apply(const NetworkGraph& graph, const NodeVectors& x);

// Network-wide max of node-local scalars; one flood round.
double max_consensus(const NetworkGraph& graph, std::span<const double> values,
                     CommLedger& ledger);

bool is_connected(int num_nodes, const std::vector<Edge>& edges);

// Plain-text edge list: "N E" followed by E lines "i j".
void write_edge_list(std::ostream& out, const NetworkGraph& graph);
NetworkGraph read_edge_list(std::istream& in);
std::string to_edge_list(const NetworkGraph& graph);
NetworkGraph parse_edge_list(const std::string& text);

}  // namespace dapdb
