#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "clusterguard/model.hpp"

namespace clusterguard {

// CSV with one row per sample and d numeric columns; transposed internally to
// d x n. header skips the first line.
Dataset load_dataset(const std::string& path, bool header = false);

// Perturbation files share the dataset layout and must match its shape.
Perturbation load_perturbation(const std::string& path, const Dataset& data, bool header = false);

struct WeightSpec {
    enum class Kind { uniform, file, gaussian_knn };
    Kind kind = Kind::uniform;
    std::string path;  // file mode
    int k = 0;         // gaussian_knn: neighbours per point
    double phi = 0.0;  // gaussian_knn: w_ij = exp(-phi ||x_i - x_j||^2)

    // "uniform", "gaussian-knn", or anything else as a csv path
    static WeightSpec parse(const std::string& text, int k, double phi);
};

WeightMatrix build_weights(const WeightSpec& spec, const Dataset& data);

using Json = nlohmann::ordered_json;

// {"n": int, "blocks": [[int, ...], ...]} with 1-based indices.
Json partition_to_json(const Partition& partition);
Partition partition_from_json(const Json& j);
Partition load_partition(const std::string& path);

// Dispatches one CLI invocation (argv without the program name) and writes a
// JSON report to stdout or the --out path. Returns the process exit code:
// 0 success, 1 validation/usage error, 2 solver non-convergence,
// 3 unreachable attack target.
int run_command(const std::vector<std::string>& args);

}  // namespace clusterguard
