#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "dapdb/algorithm.hpp"
#include "dapdb/experiment.hpp"
#include "dapdb/generators.hpp"
#include "dapdb/instance_io.hpp"
#include "dapdb/metrics.hpp"
#include "dapdb/oracle.hpp"
#include "dapdb/run.hpp"

using namespace dapdb;

namespace {

struct ParamFlags {
  std::string config;
  std::optional<double> kappa, rho, delta, c_alpha, c_beta, c_varsigma, c_gamma, zeta;
  std::optional<std::string> hat_tau_rule;
  bool inner_product = false;

  void add_to(CLI::App* app) {
    app->add_option("--params", config, "JSON file with parameter keys")->check(CLI::ExistingFile);
    app->add_option("--kappa", kappa, "tau_bar_i = kappa * tau_hat_i");
    app->add_option("--rho", rho, "contraction factor in (0,1)");
    app->add_option("--delta", delta);
    app->add_option("--c-alpha", c_alpha);
    app->add_option("--c-beta", c_beta);
    app->add_option("--c-varsigma", c_varsigma);
    app->add_option("--c-gamma", c_gamma, "default 1/(2|E|)");
    app->add_option("--zeta", zeta, "dual/primal step ratio");
    app->add_option("--hat-tau-rule", hat_tau_rule, "theory | half-inverse-lipschitz");
    app->add_flag("--inner-product-test", inner_product,
                  "use <grad f(x~) - grad f(x), x~ - x> in place of the Bregman term");
  }

  ParameterSet resolve(ParameterSet p) const {
    if (!config.empty()) {
      std::ifstream in(config);
      std::stringstream ss;
      ss << in.rdbuf();
      p = parameter_set_from_json(ss.str(), p);
    }
    if (kappa) p.kappa = *kappa;
    if (rho) p.rho = *rho;
    if (delta) p.consts.delta = *delta;
    if (c_alpha) p.consts.c_alpha = *c_alpha;
    if (c_beta) p.consts.c_beta = *c_beta;
    if (c_varsigma) p.consts.c_varsigma = *c_varsigma;
    if (c_gamma) p.c_gamma = *c_gamma;
    if (zeta) p.zeta = *zeta;
    if (hat_tau_rule) p.hat_tau_rule = parse_hat_tau_rule(*hat_tau_rule);
    if (inner_product) p.inner_product_test = true;
    return p;
  }
};

// Family defaults for one algorithm, taken from the default experiment.
ParameterSet family_defaults(const std::string& family, Algorithm algo) {
  if (family != "qcqp" && family != "qp") return {};
  for (const auto& a : default_spec(family).algorithms) {
    if (a.algorithm == algo) return a.params;
  }
  ParameterSet p = default_spec(family).algorithms.front().params;
  p.kappa = 1.0;
  return p;
}

struct SpecFlags {
  std::string config;
  std::optional<std::string> family;
  std::optional<int> n, nodes, edges, seeds, jobs, metric_stride;
  std::optional<long> iters;
  std::optional<std::string> out;

  void add_to(CLI::App* app) {
    app->add_option("--config", config, "experiment spec (JSON)")->check(CLI::ExistingFile);
    app->add_option("--problem", family, "qcqp | qp (when no --config)");
    app->add_option("--n", n, "variable dimension");
    app->add_option("--nodes", nodes, "number of agents");
    app->add_option("--edges", edges, "number of edges");
    app->add_option("--seeds", seeds, "use seeds 1..S");
    app->add_option("--iters", iters, "iterations K per run");
    app->add_option("--metric-stride", metric_stride, "record every k-th iteration");
    app->add_option("--jobs", jobs, "worker threads");
    app->add_option("--out", out, "output directory");
  }

  ExperimentSpec resolve() const {
    ExperimentSpec spec = config.empty() ? default_spec(family.value_or("qcqp")) : load_spec(config);
    if (n) spec.n = *n;
    if (nodes) spec.num_nodes = *nodes;
    if (nodes && !edges) spec.num_edges = 0;
    if (edges) spec.num_edges = *edges;
    if (seeds) {
      spec.seeds.clear();
      for (int s = 1; s <= *seeds; ++s) spec.seeds.push_back(static_cast<std::uint64_t>(s));
    }
    if (iters) spec.iterations = *iters;
    if (metric_stride) spec.metric_stride = *metric_stride;
    if (jobs) spec.jobs = *jobs;
    if (out) spec.output_dir = *out;
    spec.validate();
    return spec;
  }
};

struct InstanceFlags {
  std::string family = "qcqp";
  int n = 20, nodes = 12, edges = 0;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> graph_seed;

  void add_to(CLI::App* app) {
    app->add_option("--problem", family, "qcqp | qp")->check(CLI::IsMember({"qcqp", "qp"}));
    app->add_option("--n", n, "variable dimension");
    app->add_option("--nodes", nodes, "number of agents");
    app->add_option("--edges", edges, "number of edges (default min(2N, N(N-1)/2))");
    app->add_option("--seed", seed, "instance seed");
    app->add_option("--graph-seed", graph_seed, "topology seed (default: --seed)");
  }

  ProblemInstance generate() const {
    GeneratorOptions opts;
    opts.num_edges = edges;
    opts.graph_seed = graph_seed;
    if (family == "qp") return gen_qp(n, nodes, seed, opts);
    if (n < 4) return gen_qcqp_lowdim(n, nodes, seed, opts);
    return gen_qcqp(n, nodes, seed, opts);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized primal-dual methods with local backtracking"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen", "generate a random instance");
  InstanceFlags gen_flags;
  std::string gen_out;
  bool gen_ref = false;
  double gen_tol = 1e-10;
  gen_flags.add_to(gen);
  gen->add_option("-o,--out", gen_out, "instance file")->required();
  gen->add_flag("--with-ref", gen_ref, "solve and embed the reference solution");
  gen->add_option("--tol", gen_tol, "reference KKT tolerance");

  auto* ref = app.add_subcommand("solve-ref", "solve the centralized reference problem");
  std::string ref_in, ref_out;
  double ref_tol = 1e-10;
  ref->add_option("instance", ref_in, "instance file")->required()->check(CLI::ExistingFile);
  ref->add_option("--tol", ref_tol, "KKT tolerance");
  ref->add_option("-o,--out", ref_out, "output instance file (default: in place)");

  auto* run = app.add_subcommand("run", "run one algorithm on one instance");
  std::string run_in, run_out, run_algo = "dapdb", ckpt_dir = "checkpoints";
  long run_iters = 1000, ckpt_every = 0;
  int run_stride = 1;
  ParamFlags run_params;
  InstanceFlags run_gen;
  run->add_option("instance", run_in, "instance file (default: generate from the flags below)")
      ->check(CLI::ExistingFile);
  run_gen.add_to(run);
  run->add_option("--algo", run_algo, "dapdb | dapdb0 | dapd")
      ->check(CLI::IsMember({"dapdb", "dapdb0", "dapd"}));
  run->add_option("--iters", run_iters, "iterations K");
  run->add_option("--metric-stride", run_stride, "record every k-th iteration");
  run->add_option("--checkpoint-every", ckpt_every, "dump state every M iterations");
  run->add_option("--checkpoint-dir", ckpt_dir, "checkpoint directory");
  run->add_option("-o,--out", run_out, "trace CSV (default: stdout)");
  run_params.add_to(run);

  auto* compare = app.add_subcommand("compare", "multi-seed experiment with aggregation");
  SpecFlags cmp_flags;
  bool quiet = false;
  cmp_flags.add_to(compare);
  compare->add_flag("-q,--quiet", quiet, "no progress lines");

  auto* desc = app.add_subcommand("describe", "print the resolved experiment plan");
  SpecFlags desc_flags;
  bool desc_json = false;
  desc_flags.add_to(desc);
  desc->add_flag("--json", desc_json, "print the resolved spec as JSON instead");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      ProblemInstance inst = gen_flags.generate();
      if (gen_ref) inst.reference = solve_centralized(inst, gen_tol);
      save_instance(inst, gen_out);
      std::cout << "wrote " << gen_out << " (" << inst.generator_tag << ")\n";
    } else if (*ref) {
      ProblemInstance inst = load_instance(ref_in);
      inst.reference = solve_centralized(inst, ref_tol);
      const auto& r = *inst.reference;
      save_instance(inst, ref_out.empty() ? ref_in : ref_out);
      std::cout << "phi* " << format_double(r.phi_star) << "\nkkt " << format_double(r.kkt_residual)
                << "\niterations " << r.iterations << "\nmethod " << r.method_tag << '\n';
    } else if (*run) {
      ProblemInstance inst = run_in.empty() ? run_gen.generate() : load_instance(run_in);
      const Algorithm algo = parse_algorithm(run_algo);
      if (!inst.reference) {
        std::cerr << "no cached reference; solving it first\n";
        inst.reference = solve_centralized(inst, 1e-10);
      }
      const ParameterSet params = run_params.resolve(family_defaults(inst.family, algo));
      const AlgorithmConfig cfg = make_config(inst, algo, params);
      RunOptions opts;
      opts.iterations = run_iters;
      opts.metric_stride = run_stride;
      opts.checkpoint_every = ckpt_every;
      opts.checkpoint_dir = ckpt_dir;
      const RunResult res = run_algorithm(inst, cfg, opts);
      if (run_out.empty()) {
        csv_export(res.trace, std::cout);
      } else {
        csv_export(res.trace, run_out);
      }
      const auto& f = res.trace.final_row;
      std::cerr << to_string(algo) << ": K=" << run_iters
                << " log_rel_subopt=" << format_double(f.log_rel_subopt)
                << " rel_consensus_err=" << format_double(f.rel_consensus_err)
                << " backtracks=" << f.total_backtracks
                << " contraction_iterations=" << res.contraction_iterations << '\n';
    } else if (*compare) {
      const ExperimentSpec spec = cmp_flags.resolve();
      const ExperimentResult res = run_experiment(spec, quiet ? nullptr : &std::cerr);
      std::cout << "output " << res.output_dir << "\nseeds ok "
                << spec.seeds.size() - static_cast<std::size_t>(res.failed_seeds()) << "/"
                << spec.seeds.size() << '\n';
      return res.exit_code();
    } else if (*desc) {
      const ExperimentSpec spec = desc_flags.resolve();
      std::cout << (desc_json ? spec_to_json(spec) + "\n" : describe(spec));
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
