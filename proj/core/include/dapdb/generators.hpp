#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "dapdb/problem.hpp"

namespace dapdb {

struct GeneratorOptions {
  // Number of graph edges; <= 0 selects min(2N, N(N-1)/2).
  int num_edges = 0;
  // Seed for the topology; defaults to the instance seed.
  std::optional<std::uint64_t> graph_seed;
};

int default_num_edges(int num_nodes);

// Haar-like random orthogonal matrix: QR of an iid N(0,1) matrix with the
// signs of R's diagonal folded into Q.
Matrix random_orthonormal(int n, std::mt19937_64& rng);

// l1-regularized QCQP family. Node i (1-based) has
//   f_i(x) = 0.5 x^T Q_i x,  Q_i = V diag(5i, U[1,5i]..., 1, 0, 0) V^T,
//   g_i(x) = 0.5 (x - c_i)^T A_i (x - c_i) - 1,  spec(A_i) ⊂ [1/16, 1/4],
//   phi_i = (1/N)||x||_1 + indicator of [-10,10]^n.
// Requires n >= 4. The dual bound B_i is twice the Slater bound computed at
// the point 2*1 (see generator_tag).
ProblemInstance gen_qcqp(int n, int num_nodes, std::uint64_t seed,
                         const GeneratorOptions& options = {});
ProblemInstance gen_qcqp(int n, const NetworkGraph& graph, std::uint64_t seed);

// Same family for 2 <= n <= 3 where the eigenvalue pinning above does not
// fit: spec(Q_i) = {5i, U[1,5i]..., 0}.
ProblemInstance gen_qcqp_lowdim(int n, int num_nodes, std::uint64_t seed,
                                const GeneratorOptions& options = {});

// l1-regularized unconstrained QP family (m_i = 0):
//   f_i(x) = 0.5 x^T Q_i x + q_i^T x + c_i, spec(Q_i) = {L_i, U[0, min(100, L_i)]..., 0},
//   L_i ~ N(1000, 100^2) (redrawn if <= 0), q_i ~ N(0, I), c_i ~ U[0,1],
//   phi_i = (1/N)||x||_1 + indicator of [-1e6, 1e6]^n.
ProblemInstance gen_qp(int n, int num_nodes, std::uint64_t seed,
                       const GeneratorOptions& options = {});
ProblemInstance gen_qp(int n, const NetworkGraph& graph, std::uint64_t seed);

inline constexpr double kQcqpBoxRadius = 10.0;
inline constexpr double kQpBoxRadius = 1e6;

}  // namespace dapdb
