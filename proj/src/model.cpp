#include "clusterguard/model.hpp"

#include <algorithm>
#include <cmath>

#include "clusterguard/errors.hpp"

namespace clusterguard {

Norm conjugate_norm(Norm p) {
    switch (p) {
        case Norm::l1: return Norm::linf;
        case Norm::linf: return Norm::l1;
        case Norm::l2: return Norm::l2;
    }
    return Norm::l2;
}

double norm_value(const Vector& v, Norm p) {
    switch (p) {
        case Norm::l1: return v.lpNorm<1>();
        case Norm::l2: return v.norm();
        case Norm::linf: return v.lpNorm<Eigen::Infinity>();
    }
    return v.norm();
}

std::string norm_name(Norm p) {
    switch (p) {
        case Norm::l1: return "1";
        case Norm::l2: return "2";
        case Norm::linf: return "inf";
    }
    return "2";
}

Dataset::Dataset(Matrix v) : values(std::move(v)) {
    if (values.rows() < 1) throw ValidationError("dataset: need at least one feature row");
    if (values.cols() < 2) throw ValidationError("dataset: need at least two samples");
    if (!values.allFinite()) throw ValidationError("dataset: entries must be finite");
}

double Dataset::range() const {
    return values.maxCoeff() - values.minCoeff();
}

WeightMatrix::WeightMatrix(Matrix m) : w(std::move(m)) {
    if (w.rows() != w.cols()) throw ValidationError("weights: matrix must be square");
    if (!w.allFinite()) throw ValidationError("weights: entries must be finite");
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        if (w(i, i) != 0.0) throw ValidationError("weights: diagonal must be zero");
        for (Eigen::Index j = i + 1; j < w.cols(); ++j) {
            if (w(i, j) != w(j, i)) throw ValidationError("weights: matrix must be symmetric");
            if (w(i, j) < 0.0) throw ValidationError("weights: entries must be nonnegative");
        }
    }
}

bool WeightMatrix::any_positive() const {
    return w.maxCoeff() > 0.0;
}

WeightMatrix WeightMatrix::uniform(Eigen::Index n) {
    Matrix m = Matrix::Ones(n, n);
    m.diagonal().setZero();
    return WeightMatrix(std::move(m));
}

Partition Partition::from_blocks(std::vector<std::vector<int>> blocks, int n) {
    if (n < 1) throw ValidationError("partition: n must be positive");
    std::vector<char> seen(static_cast<size_t>(n), 0);
    size_t covered = 0;
    for (auto& block : blocks) {
        if (block.empty()) throw ValidationError("partition: blocks must be nonempty");
        std::sort(block.begin(), block.end());
        for (int idx : block) {
            if (idx < 0 || idx >= n) throw ValidationError("partition: index out of range");
            if (seen[static_cast<size_t>(idx)]) throw ValidationError("partition: blocks overlap");
            seen[static_cast<size_t>(idx)] = 1;
            ++covered;
        }
    }
    if (covered != static_cast<size_t>(n)) throw ValidationError("partition: blocks do not cover all indices");
    std::sort(blocks.begin(), blocks.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    Partition p;
    p.n = n;
    p.blocks = std::move(blocks);
    return p;
}

std::vector<int> Partition::block_of() const {
    std::vector<int> owner(static_cast<size_t>(n), -1);
    for (int b = 0; b < k(); ++b)
        for (int idx : blocks[static_cast<size_t>(b)]) owner[static_cast<size_t>(idx)] = b;
    return owner;
}

Partition canonicalize(const Partition& p) {
    return Partition::from_blocks(p.blocks, p.n);
}

void SolverConfig::validate() const {
    if (gamma < 0.0 || !std::isfinite(gamma)) throw ValidationError("config: gamma must be nonnegative");
    if (kkt_tol <= 0.0) throw ValidationError("config: kkt_tol must be positive");
    if (fusion_tol <= 0.0) throw ValidationError("config: fusion_tol must be positive");
    if (max_iter < 1) throw ValidationError("config: max_iter must be positive");
    if (admm_rho <= 0.0) throw ValidationError("config: admm_rho must be positive");
}

Perturbation::Perturbation(Matrix e) : eps(std::move(e)) {
    if (!eps.allFinite()) throw ValidationError("perturbation: entries must be finite");
}

Perturbation Perturbation::zero(Eigen::Index d, Eigen::Index n) {
    return Perturbation(Matrix::Zero(d, n));
}

Perturbation Perturbation::from_entries(Eigen::Index d, Eigen::Index n,
                                        const std::vector<std::tuple<int, int, double>>& entries) {
    Matrix e = Matrix::Zero(d, n);
    for (const auto& [row, col, value] : entries) {
        if (row < 0 || row >= d || col < 0 || col >= n)
            throw ValidationError("perturbation: entry index out of range");
        e(row, col) = value;
    }
    return Perturbation(std::move(e));
}

Dataset apply_perturbation(const Dataset& data, const Perturbation& eps) {
    if (data.values.rows() != eps.eps.rows() || data.values.cols() != eps.eps.cols())
        throw ValidationError("apply_perturbation: shape mismatch");
    return Dataset(data.values + eps.eps);
}

}  // namespace clusterguard
