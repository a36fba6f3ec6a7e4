#include "dapdb/graph.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace dapdb {

NetworkGraph::NetworkGraph() : neighbors_(1) {}

NetworkGraph::NetworkGraph(int num_nodes, std::vector<Edge> edges)
    : num_nodes_(num_nodes), edges_(std::move(edges)) {
  if (num_nodes_ < 1) {
    throw ValidationError("graph needs at least one node");
  }
  neighbors_.assign(static_cast<std::size_t>(num_nodes_), {});
  for (const Edge& e : edges_) {
    if (e.i < 0 || e.j >= num_nodes_ || e.i >= e.j) {
      throw ValidationError("edge (" + std::to_string(e.i) + "," + std::to_string(e.j) +
                            ") violates 0 <= i < j < N");
    }
    neighbors_[e.i].push_back(e.j);
    neighbors_[e.j].push_back(e.i);
  }
  for (auto& nb : neighbors_) {
    std::sort(nb.begin(), nb.end());
    if (std::adjacent_find(nb.begin(), nb.end()) != nb.end()) {
      throw ValidationError("duplicate edge in graph");
    }
    max_degree_ = std::max(max_degree_, static_cast<int>(nb.size()));
  }
  if (!is_connected(num_nodes_, edges_)) {
    throw ValidationError("graph is not connected");
  }
}

bool NetworkGraph::has_edge(int a, int b) const {
  if (a < 0 || b < 0 || a >= num_nodes_ || b >= num_nodes_) return false;
  const auto& nb = neighbors_[a];
  return std::binary_search(nb.begin(), nb.end(), b);
}

bool is_connected(int num_nodes, const std::vector<Edge>& edges) {
  if (num_nodes <= 0) return false;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(num_nodes));
  for (const Edge& e : edges) {
    if (e.i < 0 || e.j < 0 || e.i >= num_nodes || e.j >= num_nodes) return false;
    adj[e.i].push_back(e.j);
    adj[e.j].push_back(e.i);
  }
  std::vector<char> seen(static_cast<std::size_t>(num_nodes), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int visited = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++visited;
        stack.push_back(v);
      }
    }
  }
  return visited == num_nodes;
}

NetworkGraph build_small_world(int num_nodes, int num_edges, std::uint64_t seed) {
  if (num_nodes < 3) {
    throw ValidationError("small-world graph needs at least 3 nodes");
  }
  const long long max_edges = static_cast<long long>(num_nodes) * (num_nodes - 1) / 2;
  if (num_edges < num_nodes || num_edges > max_edges) {
    throw ValidationError("num_edges must lie in [N, N(N-1)/2], got " +
                          std::to_string(num_edges));
  }
  std::mt19937_64 rng(seed);

  std::vector<int> perm(static_cast<std::size_t>(num_nodes));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);

  auto normalized = [](int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; };
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(num_edges));
  for (int k = 0; k < num_nodes; ++k) {
    edges.push_back(normalized(perm[k], perm[(k + 1) % num_nodes]));
  }
  std::sort(edges.begin(), edges.end());

  std::vector<Edge> candidates;
  for (int a = 0; a < num_nodes; ++a) {
    for (int b = a + 1; b < num_nodes; ++b) {
      if (!std::binary_search(edges.begin(), edges.end(), Edge{a, b})) {
        candidates.push_back({a, b});
      }
    }
  }
  std::shuffle(candidates.begin(), candidates.end(), rng);
  const auto extra = static_cast<std::size_t>(num_edges - num_nodes);
  edges.insert(edges.end(), candidates.begin(), candidates.begin() + extra);
  std::sort(edges.begin(), edges.end());
  return NetworkGraph(num_nodes, std::move(edges));
}

namespace {

void check_node_count(const NetworkGraph& graph, std::size_t count) {
  if (count != static_cast<std::size_t>(graph.num_nodes())) {
    throw ValidationError("expected one entry per node (" + std::to_string(graph.num_nodes()) +
                          "), got " + std::to_string(count));
  }
}

}  // namespace

NodeVectors neighbor_diff(const NetworkGraph& graph, const NodeVectors& states,
                          CommLedger& ledger) {
  check_node_count(graph, states.size());
  NodeVectors out(states.size());
  std::uint64_t sent = 0;
  for (int i = 0; i < graph.num_nodes(); ++i) {
    Vector acc = static_cast<double>(graph.degree(i)) * states[i];
    for (int j : graph.neighbors(i)) {
      if (states[j].size() != states[i].size()) {
        throw ValidationError("neighbor_diff: inconsistent vector sizes");
      }
      acc -= states[j];
    }
    out[i] = std::move(acc);
    sent += static_cast<std::uint64_t>(graph.degree(i));
  }
  ++ledger.neighbor_rounds;
  ledger.vectors_sent += sent;
  return out;
}

NodeVectors incidence_apply(const NetworkGraph& graph, const NodeVectors& x) {
  check_node_count(graph, x.size());
  NodeVectors out;
  out.reserve(graph.edges().size());
  for (const Edge& e : graph.edges()) {
    out.push_back(x[e.i] - x[e.j]);
  }
  return out;
}

double max_consensus(const NetworkGraph& graph, std::span<const double> values,
                     CommLedger& ledger) {
  if (values.empty()) {
    throw ValidationError("max_consensus: empty value list");
  }
  check_node_count(graph, values.size());
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError("max_consensus: non-finite value");
  }
  ++ledger.flood_rounds;
  return *std::max_element(values.begin(), values.end());
}

void write_edge_list(std::ostream& out, const NetworkGraph& graph) {
  out << graph.num_nodes() << ' ' << graph.num_edges() << '\n';
  for (const Edge& e : graph.edges()) {
    out << e.i << ' ' << e.j << '\n';
  }
}

NetworkGraph read_edge_list(std::istream& in) {
  long long n = 0;
  long long m = 0;
  if (!(in >> n >> m) || n < 1 || m < 0) {
    throw ValidationError("edge list: malformed header, expected \"N E\"");
  }
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(m));
  for (long long k = 0; k < m; ++k) {
    int a = 0;
    int b = 0;
    if (!(in >> a >> b)) {
      throw ValidationError("edge list: expected " + std::to_string(m) + " edges, got " +
                            std::to_string(k));
    }
    edges.push_back({a, b});
  }
  return NetworkGraph(static_cast<int>(n), std::move(edges));
}

std::string to_edge_list(const NetworkGraph& graph) {
  std::ostringstream os;
  write_edge_list(os, graph);
  return os.str();
}

NetworkGraph parse_edge_list(const std::string& text) {
  std::istringstream is(text);
  return read_edge_list(is);
}

}  // namespace dapdb
