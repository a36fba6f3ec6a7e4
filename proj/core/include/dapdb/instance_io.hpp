#pragma once

#include <string>

#include "dapdb/problem.hpp"

namespace dapdb {

// Instances are stored as JSON: graph, per-node quadratic data (row-major
// matrices), regularizer, dual bound, smoothness constants, x0, provenance and
// an optional cached reference solution. Doubles round-trip exactly; +inf is
// written as null.
std::string instance_to_json(const ProblemInstance& instance);
ProblemInstance instance_from_json(const std::string& text);

void save_instance(const ProblemInstance& instance, const std::string& path);
ProblemInstance load_instance(const std::string& path);

}  // namespace dapdb
