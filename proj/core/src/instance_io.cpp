#include "dapdb/instance_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dapdb {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json num(double v) { return std::isinf(v) ? json(nullptr) : json(v); }

double get_num(const json& j) {
  if (j.is_null()) return kInfinity;
  return j.get<double>();
}

json vec(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector get_vec(const json& j) {
  const auto raw = j.get<std::vector<double>>();
  Vector v(static_cast<Eigen::Index>(raw.size()));
  for (std::size_t i = 0; i < raw.size(); ++i) v[static_cast<Eigen::Index>(i)] = raw[i];
  return v;
}

json mat(const Matrix& m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", flat}};
}

Matrix get_mat(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto flat = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(flat.size()) != rows * cols) {
    throw ValidationError("instance file: matrix data has wrong length");
  }
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

json quad(const QuadraticForm& q) {
  return {{"hessian", mat(q.hessian)},
          {"linear", vec(q.linear)},
          {"constant", q.constant},
          {"center", vec(q.center)}};
}

QuadraticForm get_quad(const json& j) {
  return QuadraticForm{get_mat(j.at("hessian")), get_vec(j.at("linear")),
                       j.at("constant").get<double>(), get_vec(j.at("center"))};
}

}  // namespace

std::string instance_to_json(const ProblemInstance& inst) {
  json j;
  j["format_version"] = kFormatVersion;
  j["family"] = inst.family;
  j["seed"] = inst.seed;
  j["generator_tag"] = inst.generator_tag;
  json edges = json::array();
  for (const auto& e : inst.graph.edges()) edges.push_back({e.i, e.j});
  j["graph"] = {{"num_nodes", inst.graph.num_nodes()}, {"edges", edges}};

  json nodes = json::array();
  for (const auto& node : inst.nodes) {
    json jn;
    jn["objective"] = quad(node.objective());
    json cons = json::array();
    for (const auto& g : node.constraints()) cons.push_back(quad(g));
    jn["constraints"] = cons;
    jn["regularizer"] = {{"weight", node.regularizer().weight},
                         {"radius", num(node.regularizer().radius)}};
    jn["dual_bound"] = num(node.dual_bound());
    if (node.smoothness()) {
      const auto& s = *node.smoothness();
      jn["smoothness"] = {{"lipschitz_grad_f", s.lipschitz_grad_f},
                          {"lipschitz_jac_g", s.lipschitz_jac_g},
                          {"jac_bound", s.jac_bound}};
    }
    nodes.push_back(jn);
  }
  j["nodes"] = nodes;

  json x0 = json::array();
  for (const auto& v : inst.x0) x0.push_back(vec(v));
  j["x0"] = x0;

  if (inst.reference) {
    const auto& r = *inst.reference;
    json th = json::array();
    for (const auto& v : r.theta_star) th.push_back(vec(v));
    j["reference"] = {{"x_star", vec(r.x_star)},
                      {"phi_star", r.phi_star},
                      {"theta_star", th},
                      {"kkt_residual", r.kkt_residual},
                      {"method_tag", r.method_tag},
                      {"tolerance", r.tolerance},
                      {"iterations", r.iterations}};
  }
  return j.dump(1);
}

ProblemInstance instance_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("instance file: ") + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != kFormatVersion) {
      throw ValidationError("instance file: unsupported format version");
    }
    ProblemInstance inst;
    inst.family = j.at("family").get<std::string>();
    inst.seed = j.at("seed").get<std::uint64_t>();
    inst.generator_tag = j.value("generator_tag", std::string());
    std::vector<Edge> edges;
    for (const auto& e : j.at("graph").at("edges")) edges.push_back({e.at(0), e.at(1)});
    inst.graph = NetworkGraph(j.at("graph").at("num_nodes").get<int>(), std::move(edges));

    for (const auto& jn : j.at("nodes")) {
      std::vector<QuadraticForm> cons;
      for (const auto& g : jn.at("constraints")) cons.push_back(get_quad(g));
      const auto& jr = jn.at("regularizer");
      L1BoxRegularizer reg{jr.at("weight").get<double>(), get_num(jr.at("radius"))};
      std::optional<NodeSmoothness> smooth;
      if (jn.contains("smoothness")) {
        const auto& s = jn.at("smoothness");
        smooth = NodeSmoothness{s.at("lipschitz_grad_f").get<double>(),
                                s.at("lipschitz_jac_g").get<double>(),
                                s.at("jac_bound").get<double>()};
      }
      inst.nodes.emplace_back(get_quad(jn.at("objective")), std::move(cons), reg,
                              get_num(jn.at("dual_bound")), smooth);
    }
    for (const auto& v : j.at("x0")) inst.x0.push_back(get_vec(v));

    if (j.contains("reference")) {
      const auto& r = j.at("reference");
      ReferenceSolution ref;
      ref.x_star = get_vec(r.at("x_star"));
      ref.phi_star = r.at("phi_star").get<double>();
      for (const auto& v : r.at("theta_star")) ref.theta_star.push_back(get_vec(v));
      ref.kkt_residual = r.at("kkt_residual").get<double>();
      ref.method_tag = r.at("method_tag").get<std::string>();
      ref.tolerance = r.at("tolerance").get<double>();
      ref.iterations = r.at("iterations").get<long>();
      inst.reference = std::move(ref);
    }
    inst.validate();
    return inst;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("instance file: ") + e.what());
  }
}

void save_instance(const ProblemInstance& instance, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << instance_to_json(instance) << '\n';
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

ProblemInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return instance_from_json(ss.str());
}

}  // namespace dapdb
