#include "dapdb/generators.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace dapdb {

int default_num_edges(int num_nodes) {
  const long long full = static_cast<long long>(num_nodes) * (num_nodes - 1) / 2;
  return static_cast<int>(std::min<long long>(2LL * num_nodes, full));
}

Matrix random_orthonormal(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(n, n);
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < n; ++r) g(r, c) = normal(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix& packed = qr.matrixQR();
  for (int c = 0; c < n; ++c) {
    if (packed(c, c) < 0.0) q.col(c) = -q.col(c);
  }
  return q;
}

namespace {

Matrix spectral(const Matrix& basis, Vector eigenvalues) {
  std::sort(eigenvalues.begin(), eigenvalues.end(), std::greater<>());
  Matrix m = basis * eigenvalues.asDiagonal() * basis.transpose();
  return 0.5 * (m + m.transpose());
}

NetworkGraph make_graph(int num_nodes, std::uint64_t seed, const GeneratorOptions& options) {
  const int edges = options.num_edges > 0 ? options.num_edges : default_num_edges(num_nodes);
  return build_small_world(num_nodes, edges, options.graph_seed.value_or(seed));
}

Vector uniform_vector(int n, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (int j = 0; j < n; ++j) v[j] = u(rng);
  return v;
}

// Eigenvalues of Q_i for the QCQP family; node is 1-based.
Vector qcqp_objective_spectrum(int n, int node, bool lowdim, std::mt19937_64& rng) {
  const double top = 5.0 * node;
  std::uniform_real_distribution<double> u(1.0, top);
  Vector gamma(n);
  gamma[0] = top;
  if (!lowdim) {
    for (int j = 1; j < n - 3; ++j) gamma[j] = u(rng);
    gamma[n - 3] = 1.0;
    gamma[n - 2] = 0.0;
    gamma[n - 1] = 0.0;
  } else {
    for (int j = 1; j < n - 1; ++j) gamma[j] = u(rng);
    gamma[n - 1] = 0.0;
  }
  return gamma;
}

Vector qcqp_constraint_spectrum(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(1.0 / 16.0, 0.25);
  Vector r(n);
  r[0] = 0.25;
  for (int j = 1; j < n - 1; ++j) r[j] = u(rng);
  r[n - 1] = 1.0 / 16.0;
  return r;
}

ProblemInstance build_qcqp(int n, const NetworkGraph& graph, std::uint64_t seed, bool lowdim) {
  const int num_nodes = graph.num_nodes();
  std::mt19937_64 rng(seed);
  const double half_width = 1.0 / (2.0 * std::sqrt(static_cast<double>(n)));
  const L1BoxRegularizer reg{1.0 / num_nodes, kQcqpBoxRadius};

  struct Draw {
    Matrix q;
    Matrix a;
    Vector center;
  };
  std::vector<Draw> draws;
  draws.reserve(static_cast<std::size_t>(num_nodes));
  for (int i = 1; i <= num_nodes; ++i) {
    Draw d;
    const Matrix v = random_orthonormal(n, rng);
    d.q = spectral(v, qcqp_objective_spectrum(n, i, lowdim, rng));
    const Matrix u = random_orthonormal(n, rng);
    d.a = spectral(u, qcqp_constraint_spectrum(n, rng));
    d.center = Vector::Constant(n, 2.0) + uniform_vector(n, -half_width, half_width, rng);
    draws.push_back(std::move(d));
  }
  const Vector x0 = uniform_vector(n, -kQcqpBoxRadius, kQcqpBoxRadius, rng);

  // Slater bound at x° = 2*1: every g_i(x°) <= 1/32 - 1 since ||x° - c_i|| <= 1/2
  // and ||A_i|| = 1/4. With varphi >= 0, sum_i theta_i* <= varphi(x°) / min_i(-g_i(x°)).
  const Vector slater = Vector::Constant(n, 2.0);
  double objective_at_slater = 0.0;
  double min_margin = kInfinity;
  for (int i = 0; i < num_nodes; ++i) {
    objective_at_slater += 0.5 * slater.dot(draws[i].q * slater) + reg.value(slater);
    const Vector d = slater - draws[i].center;
    min_margin = std::min(min_margin, 1.0 - 0.5 * d.dot(draws[i].a * d));
  }
  const double dual_bound = 2.0 * objective_at_slater / min_margin;

  ProblemInstance inst;
  inst.family = "qcqp";
  inst.seed = seed;
  inst.graph = graph;
  for (int i = 0; i < num_nodes; ++i) {
    QuadraticForm f{draws[i].q, Vector::Zero(n), 0.0, Vector::Zero(n)};
    QuadraticForm g{draws[i].a, Vector::Zero(n), -1.0, draws[i].center};
    NodeSmoothness smooth;
    smooth.lipschitz_grad_f = 5.0 * (i + 1);
    smooth.lipschitz_jac_g = 0.25;
    smooth.jac_bound = 0.25 * (kQcqpBoxRadius * std::sqrt(static_cast<double>(n)) +
                               draws[i].center.norm());
    inst.nodes.emplace_back(std::move(f), std::vector<QuadraticForm>{std::move(g)}, reg,
                            dual_bound, smooth);
  }
  inst.x0.assign(static_cast<std::size_t>(num_nodes), x0);

  std::ostringstream tag;
  tag.precision(17);
  tag << (lowdim ? "qcqp-lowdim" : "qcqp") << " n=" << n << " N=" << num_nodes
      << " E=" << graph.num_edges() << " seed=" << seed
      << " x0=uniform[-10,10] shared; dual_bound=2*slater(x=2*1)=" << dual_bound;
  inst.generator_tag = tag.str();
  inst.validate();
  return inst;
}

}  // namespace

ProblemInstance gen_qcqp(int n, const NetworkGraph& graph, std::uint64_t seed) {
  if (n < 4) throw ValidationError("gen_qcqp: need n >= 4");
  return build_qcqp(n, graph, seed, false);
}

ProblemInstance gen_qcqp(int n, int num_nodes, std::uint64_t seed,
                         const GeneratorOptions& options) {
  if (n < 4) throw ValidationError("gen_qcqp: need n >= 4");
  return build_qcqp(n, make_graph(num_nodes, seed, options), seed, false);
}

ProblemInstance gen_qcqp_lowdim(int n, int num_nodes, std::uint64_t seed,
                                const GeneratorOptions& options) {
  if (n < 2 || n > 3) throw ValidationError("gen_qcqp_lowdim: need 2 <= n <= 3");
  return build_qcqp(n, make_graph(num_nodes, seed, options), seed, true);
}

ProblemInstance gen_qp(int n, const NetworkGraph& graph, std::uint64_t seed) {
  if (n < 2) throw ValidationError("gen_qp: need n >= 2");
  const int num_nodes = graph.num_nodes();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> lipschitz_dist(1000.0, 100.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const L1BoxRegularizer reg{1.0 / num_nodes, kQpBoxRadius};

  ProblemInstance inst;
  inst.family = "qp";
  inst.seed = seed;
  inst.graph = graph;
  for (int i = 0; i < num_nodes; ++i) {
    double lf = lipschitz_dist(rng);
    while (lf <= 0.0) lf = lipschitz_dist(rng);
    const Matrix v = random_orthonormal(n, rng);
    Vector gamma(n);
    gamma[0] = lf;
    std::uniform_real_distribution<double> u(0.0, std::min(100.0, lf));
    for (int j = 1; j < n - 1; ++j) gamma[j] = u(rng);
    gamma[n - 1] = 0.0;
    Vector q(n);
    for (int j = 0; j < n; ++j) q[j] = normal(rng);
    const double c = unit(rng);
    QuadraticForm f{spectral(v, gamma), q, c, Vector::Zero(n)};
    NodeSmoothness smooth;
    smooth.lipschitz_grad_f = lf;
    inst.nodes.emplace_back(std::move(f), std::vector<QuadraticForm>{}, reg, kInfinity, smooth);
  }
  inst.x0.assign(static_cast<std::size_t>(num_nodes),
                 uniform_vector(n, -10.0, 10.0, rng));

  std::ostringstream tag;
  tag << "qp n=" << n << " N=" << num_nodes << " E=" << graph.num_edges() << " seed=" << seed
      << " x0=uniform[-10,10] shared; box radius 1e6";
  inst.generator_tag = tag.str();
  inst.validate();
  return inst;
}

ProblemInstance gen_qp(int n, int num_nodes, std::uint64_t seed,
                       const GeneratorOptions& options) {
  if (n < 2) throw ValidationError("gen_qp: need n >= 2");
  return gen_qp(n, make_graph(num_nodes, seed, options), seed);
}

}  // namespace dapdb
