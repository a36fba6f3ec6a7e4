#include "dapdb/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dapdb/metrics.hpp"

namespace dapdb {

namespace {

constexpr long kBalanceEvery = 500;

// Network sum of the smooth parts written as 0.5 x^T P x + b^T x + c.
struct Aggregate {
  Matrix p;
  Vector b;
  double c = 0.0;
  double l1_weight = 0.0;
  double radius = kInfinity;
  std::vector<const QuadraticForm*> constraints;
  std::vector<int> owner;

  explicit Aggregate(const ProblemInstance& inst) {
    const int n = inst.dim();
    p = Matrix::Zero(n, n);
    b = Vector::Zero(n);
    for (int i = 0; i < inst.num_nodes(); ++i) {
      const auto& node = inst.nodes[i];
      const auto& q = node.objective();
      const Vector hc = q.hessian * q.center;
      p += q.hessian;
      b += q.linear - hc;
      c += q.constant + 0.5 * q.center.dot(hc) - q.linear.dot(q.center);
      l1_weight += node.regularizer().weight;
      radius = std::min(radius, node.regularizer().radius);
      for (const auto& g : node.constraints()) {
        constraints.push_back(&g);
        owner.push_back(i);
      }
    }
    p = 0.5 * (p + p.transpose());
  }

  int num_constraints() const { return static_cast<int>(constraints.size()); }
  Vector grad(const Vector& x) const { return p * x + b; }
  Vector prox(const Vector& v, double tau) const { return prox_l1_box(v, tau * l1_weight, radius); }

  Vector g(const Vector& x) const {
    Vector out(num_constraints());
    for (int j = 0; j < num_constraints(); ++j) out[j] = constraints[j]->value(x);
    return out;
  }

  Vector jac_t(const Vector& x, const Vector& theta) const {
    Vector out = Vector::Zero(x.size());
    for (int j = 0; j < num_constraints(); ++j) {
      if (theta[j] != 0.0) out += theta[j] * constraints[j]->gradient(x);
    }
    return out;
  }

  Vector jac_diff_t(const Vector& dx, const Vector& theta) const {
    Vector out = Vector::Zero(dx.size());
    for (int j = 0; j < num_constraints(); ++j) {
      if (theta[j] != 0.0) out += theta[j] * (constraints[j]->hessian * dx);
    }
    return out;
  }

  NodeVectors split(const Vector& theta, const ProblemInstance& inst) const {
    NodeVectors out;
    std::vector<int> fill(static_cast<std::size_t>(inst.num_nodes()), 0);
    for (const auto& node : inst.nodes) out.push_back(Vector::Zero(node.num_constraints()));
    for (int j = 0; j < num_constraints(); ++j) out[owner[j]][fill[owner[j]]++] = theta[j];
    return out;
  }
};

double residual(const Aggregate& agg, const Vector& x, const Vector& theta, const Vector& gx) {
  const Vector v = x - (agg.grad(x) + agg.jac_t(x, theta));
  double r = (x - agg.prox(v, 1.0)).norm();
  for (int j = 0; j < gx.size(); ++j) {
    r = std::max(r, std::max(gx[j], 0.0));
    r = std::max(r, std::abs(theta[j] * gx[j]));
  }
  return r;
}

}  // namespace

double kkt_residual(const ProblemInstance& instance, const Vector& x, const NodeVectors& theta) {
  if (static_cast<int>(theta.size()) != instance.num_nodes()) {
    throw ValidationError("kkt_residual: need one dual vector per node");
  }
  const Aggregate agg(instance);
  Vector stacked(agg.num_constraints());
  int j = 0;
  for (int i = 0; i < instance.num_nodes(); ++i) {
    if (theta[i].size() != instance.nodes[i].num_constraints()) {
      throw ValidationError("kkt_residual: dual size mismatch at node " + std::to_string(i));
    }
    for (int l = 0; l < theta[i].size(); ++l) {
      if (theta[i][l] < 0.0) throw ValidationError("kkt_residual: negative multiplier");
      stacked[j++] = theta[i][l];
    }
  }
  return residual(agg, x, stacked, agg.g(x));
}

ReferenceSolution solve_centralized(const ProblemInstance& instance, double tol) {
  CentralizedOptions opts;
  opts.tol = tol;
  return solve_centralized(instance, opts);
}

ReferenceSolution solve_centralized(const ProblemInstance& instance,
                                    const CentralizedOptions& options) {
  instance.validate();
  if (!(options.tol > 0.0) || options.max_iters < 1 ||
      options.check_every < 1) {
    throw ValidationError("solve_centralized: bad options");
  }
  const Aggregate agg(instance);
  const int m = agg.num_constraints();
  // Single agent, so the consensus share of the constant budget is negligible.
  const double delta = 0.05;
  const double c_alpha = 0.4;
  const double c_beta = 0.4;
  const double c_varsigma = 0.01;
  const double rho = 0.7;
  const double margin = 1.0 - delta - c_alpha - c_beta - c_varsigma;

  Vector x = agg.prox(node_mean(instance.x0), 0.0);
  Vector theta = Vector::Zero(m);
  Vector grad = agg.grad(x);
  Vector jt = agg.jac_t(x, theta);
  Vector jt_prev = jt;
  const double lmax = Eigen::SelfAdjointEigenSolver<Matrix>(agg.p, Eigen::EigenvaluesOnly)
                          .eigenvalues()
                          .cwiseAbs()
                          .maxCoeff();
  double tau = 2.0 / std::max(lmax, 1e-12);

  double best = kInfinity;
  Vector best_x = x;
  Vector best_theta = theta;
  double zeta = options.zeta > 0.0 ? options.zeta : 1e4;
  const double tau_start = tau;
  long k = 0;
  for (; k < options.max_iters; ++k) {
    if (k % options.check_every == 0) {
      const Vector gx = agg.g(x);
      const double r = residual(agg, x, theta, gx);
      if (r < best) {
        best = r;
        best_x = x;
        best_theta = theta;
      }
      if (r <= options.tol) break;
      // Rebalance the dual-to-primal step ratio when one residual dominates.
      if (options.zeta <= 0.0 && m > 0 && k > 0 && k % kBalanceEvery == 0) {
        const double primal = (x - agg.prox(x - (grad + jt), 1.0)).norm();
        double dual = 0.0;
        for (int j = 0; j < m; ++j) {
          dual = std::max({dual, gx[j], std::abs(theta[j] * gx[j])});
        }
        double factor = 1.0;
        if (primal > 100.0 * dual) factor = 0.1;
        if (dual > 100.0 * primal) factor = 10.0;
        if (factor != 1.0) {
          zeta *= factor;
          tau = tau_start;
          jt_prev = jt;
        }
      }
    }
    double tau_t = tau;
    Vector xt;
    Vector tht;
    for (int trial = 0;; ++trial) {
      const double eta = tau / tau_t;
      xt = agg.prox(x - tau_t * (grad + jt + eta * (jt - jt_prev)), tau_t);
      tht = m > 0 ? Vector((theta + zeta * tau_t * agg.g(xt)).cwiseMax(0.0)) : theta;
      const Vector dx = xt - x;
      const Vector dth = tht - theta;
      const double lam = 0.5 * dx.dot(agg.p * dx);
      double pos = 2.0 * lam;
      if (m > 0) {
        pos += (2.0 * tau_t / c_alpha) * agg.jac_t(xt, dth).squaredNorm() +
               (tau_t / c_beta) * agg.jac_diff_t(dx, theta).squaredNorm();
      }
      const double neg =
          margin / tau_t * dx.squaredNorm() + (1.0 - delta) / (zeta * tau_t) * dth.squaredNorm();
      if (pos - neg <= 1e-12 * (std::abs(pos) + neg)) break;
      if (trial > 200) throw SolverError("solve_centralized: backtracking did not terminate");
      tau_t *= rho;
    }
    tau = tau_t;
    x = std::move(xt);
    theta = std::move(tht);
    grad = agg.grad(x);
    jt_prev = std::move(jt);
    jt = agg.jac_t(x, theta);
    if (!x.allFinite() || !theta.allFinite()) {
      throw SolverError("solve_centralized: non-finite iterate at iteration " + std::to_string(k));
    }
  }
  if (best > options.tol) {
    std::ostringstream msg;
    msg << "solve_centralized: KKT residual " << best << " above tolerance " << options.tol
        << " after " << options.max_iters << " iterations";
    throw SolverError(msg.str());
  }

  ReferenceSolution ref;
  ref.x_star = best_x;
  ref.phi_star = instance.objective(best_x);
  ref.theta_star = agg.split(best_theta, instance);
  ref.kkt_residual = best;
  ref.tolerance = options.tol;
  ref.iterations = k;
  ref.method_tag = "centralized primal-dual with backtracking";
  return ref;
}

double objective_lipschitz_bound(const ProblemInstance& instance) {
  const Aggregate agg(instance);
  if (std::isinf(agg.radius)) return kInfinity;
  const double root_n = std::sqrt(static_cast<double>(instance.dim()));
  const double pnorm = Eigen::SelfAdjointEigenSolver<Matrix>(agg.p, Eigen::EigenvaluesOnly)
                           .eigenvalues()
                           .cwiseAbs()
                           .maxCoeff();
  return pnorm * agg.radius * root_n + agg.b.norm() + agg.l1_weight * root_n;
}

double brute_force_grid(const ProblemInstance& instance, double grid_step) {
  instance.validate();
  const int n = instance.dim();
  if (n > 3) throw ValidationError("brute_force_grid: only n <= 3 is supported");
  if (!(grid_step > 0.0)) throw ValidationError("brute_force_grid: step must be positive");
  const Aggregate agg(instance);
  const int m = agg.num_constraints();

  Vector lo = Vector::Constant(n, -agg.radius);
  Vector hi = Vector::Constant(n, agg.radius);
  for (const auto* g : agg.constraints) {
    Eigen::LLT<Matrix> llt(g->hessian);
    if (llt.info() != Eigen::Success) continue;
    const Vector hb = llt.solve(g->linear);
    const Vector xm = g->center - hb;
    const double level = -(g->constant - 0.5 * g->linear.dot(hb));
    if (level < 0.0) return kInfinity;
    const Matrix hinv = llt.solve(Matrix::Identity(n, n));
    for (int d = 0; d < n; ++d) {
      const double half = std::sqrt(2.0 * level * hinv(d, d));
      lo[d] = std::max(lo[d], xm[d] - half);
      hi[d] = std::min(hi[d], xm[d] + half);
    }
  }
  if (!lo.allFinite() || !hi.allFinite()) {
    throw ValidationError("brute_force_grid: search region is unbounded");
  }

  std::vector<long> first(n), last(n);
  for (int d = 0; d < n; ++d) {
    first[d] = static_cast<long>(std::ceil(lo[d] / grid_step));
    last[d] = static_cast<long>(std::floor(hi[d] / grid_step));
    // The box itself is closed; keep lattice points inside it.
    while (first[d] * grid_step < -agg.radius) ++first[d];
    while (last[d] * grid_step > agg.radius) --last[d];
    if (first[d] > last[d]) return kInfinity;
  }

  const int l = n - 1;
  double best = kInfinity;
  std::vector<long> idx(first.begin(), first.end() - 1);
  Vector base = Vector::Zero(n);
  std::vector<double> ga(m), gb(m), gc(m);
  for (;;) {
    for (int d = 0; d < l; ++d) base[d] = idx[d] * grid_step;
    base[l] = 0.0;
    double tlo = first[l] * grid_step;
    double thi = last[l] * grid_step;
    bool empty = false;
    for (int j = 0; j < m && !empty; ++j) {
      const auto* g = agg.constraints[j];
      ga[j] = 0.5 * g->hessian(l, l);
      gb[j] = g->gradient(base)[l];
      gc[j] = g->value(base);
      if (ga[j] > 0.0) {
        const double disc = gb[j] * gb[j] - 4.0 * ga[j] * gc[j];
        if (disc < 0.0) {
          empty = true;
        } else {
          const double sq = std::sqrt(disc);
          tlo = std::max(tlo, (-gb[j] - sq) / (2.0 * ga[j]));
          thi = std::min(thi, (-gb[j] + sq) / (2.0 * ga[j]));
        }
      } else if (gb[j] > 0.0) {
        thi = std::min(thi, -gc[j] / gb[j]);
      } else if (gb[j] < 0.0) {
        tlo = std::max(tlo, -gc[j] / gb[j]);
      } else if (gc[j] > 0.0) {
        empty = true;
      }
    }
    if (!empty && tlo <= thi + grid_step) {
      const double f0 = 0.5 * base.dot(agg.p * base) + agg.b.dot(base) + agg.c;
      const double f1 = (agg.p * base + agg.b)[l];
      const double f2 = 0.5 * agg.p(l, l);
      const double l1_base = base.head(l).lpNorm<1>();
      const long a = std::max(first[l], static_cast<long>(std::floor(tlo / grid_step)) - 1);
      const long b = std::min(last[l], static_cast<long>(std::ceil(thi / grid_step)) + 1);
      for (long t_idx = a; t_idx <= b; ++t_idx) {
        const double t = t_idx * grid_step;
        bool feasible = true;
        for (int j = 0; j < m; ++j) {
          if (gc[j] + t * (gb[j] + t * ga[j]) > 0.0) {
            feasible = false;
            break;
          }
        }
        if (!feasible) continue;
        const double val = f0 + t * (f1 + t * f2) + agg.l1_weight * (l1_base + std::abs(t));
        best = std::min(best, val);
      }
    }
    int d = l - 1;
    while (d >= 0 && idx[d] == last[d]) {
      idx[d] = first[d];
      --d;
    }
    if (d < 0) break;
    ++idx[d];
  }
  return best;
}

}  // namespace dapdb
