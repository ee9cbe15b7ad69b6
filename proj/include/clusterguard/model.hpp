#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace clusterguard {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Norm used in the fusion penalty. Conjugate pairs: l1 <-> linf, l2 <-> l2.
enum class Norm { l1, l2, linf };

Norm conjugate_norm(Norm p);
double norm_value(const Vector& v, Norm p);
std::string norm_name(Norm p);

// d x n real matrix; columns are samples.
struct Dataset {
    Matrix values;

    Dataset() = default;
    explicit Dataset(Matrix v);  // validates: d >= 1, n >= 2, finite entries

    Eigen::Index dim() const { return values.rows(); }
    Eigen::Index n_samples() const { return values.cols(); }

    // max entry minus min entry; used for default search scales.
    double range() const;
};

// Symmetric nonnegative n x n pairwise weights, zero diagonal.
struct WeightMatrix {
    Matrix w;

    WeightMatrix() = default;
    explicit WeightMatrix(Matrix m);  // validates symmetry, nonnegativity, zero diagonal

    Eigen::Index size() const { return w.rows(); }
    bool any_positive() const;

    // all off-diagonal weights equal to one
    static WeightMatrix uniform(Eigen::Index n);
};

// Disjoint index blocks covering {0..n-1}, held in canonical form:
// blocks sorted by smallest member, members ascending.
struct Partition {
    int n = 0;
    std::vector<std::vector<int>> blocks;

    // validates disjointness/coverage and canonicalizes
    static Partition from_blocks(std::vector<std::vector<int>> blocks, int n);

    int k() const { return static_cast<int>(blocks.size()); }
    // block index of each point
    std::vector<int> block_of() const;

    bool operator==(const Partition& other) const = default;
};

// Re-derive the canonical form (sorting only; validates coverage).
Partition canonicalize(const Partition& p);

struct SolverConfig {
    double gamma = 1.0;           // fusion penalty weight, >= 0 (0 disables the penalty)
    Norm norm = Norm::l2;
    double kkt_tol = 1e-8;
    double fusion_tol = 1e-6;     // relative threshold for declaring centroids equal
    int max_iter = 100000;
    double admm_rho = 1.0;

    void validate() const;
};

// Additive data perturbation, same shape as the dataset it applies to.
struct Perturbation {
    Matrix eps;

    Perturbation() = default;
    explicit Perturbation(Matrix e);  // validates finiteness

    static Perturbation zero(Eigen::Index d, Eigen::Index n);
    // sparse construction: all-zero except the listed (row, col, value) entries
    static Perturbation from_entries(Eigen::Index d, Eigen::Index n,
                                     const std::vector<std::tuple<int, int, double>>& entries);

    double frobenius_norm() const { return eps.norm(); }
};

struct ClusterSolution {
    Matrix y;                           // d x n centroid variables
    Partition partition;                // extracted from y under fusion_tol
    std::vector<Vector> cluster_means;  // data means over each extracted block
    double kkt_residual = 0.0;
    int iterations = 0;
};

// X + eps, entrywise. Throws on shape mismatch.
Dataset apply_perturbation(const Dataset& data, const Perturbation& eps);

}  // namespace clusterguard
