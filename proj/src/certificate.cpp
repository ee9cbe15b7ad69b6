#include "clusterguard/certificate.hpp"

#include <cmath>

#include "clusterguard/errors.hpp"

namespace clusterguard {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_shapes(const Dataset& data, const WeightMatrix& weights, const Partition& partition) {
    if (weights.size() != data.n_samples())
        throw ValidationError("certificate: weight matrix size mismatch");
    if (partition.n != static_cast<int>(data.n_samples()))
        throw ValidationError("certificate: partition size mismatch");
}

struct BoundsResult {
    bool c1 = true;
    double gamma_min = 0.0;
    double gamma_max = kInf;
    bool centroids_distinct = true;
};

// Shared evaluation for gamma_min / gamma_max / check_conditions.
BoundsResult evaluate_bounds(const Dataset& data, const WeightMatrix& weights,
                             const Partition& partition, Norm p, const ClassAggregates& agg,
                             const std::vector<Matrix>& mus) {
    const Norm q = conjugate_norm(p);
    BoundsResult out;

    for (size_t a = 0; a < partition.blocks.size(); ++a) {
        const auto& block = partition.blocks[a];
        const double n_alpha = static_cast<double>(block.size());
        for (size_t bi = 0; bi < block.size(); ++bi) {
            for (size_t bj = bi + 1; bj < block.size(); ++bj) {
                const int i = block[bi];
                const int j = block[bj];
                const double w_ij = weights.w(i, j);
                const double denom = n_alpha * w_ij - mus[a](static_cast<Eigen::Index>(bi),
                                                             static_cast<Eigen::Index>(bj));
                if (w_ij <= 0.0 || denom <= 0.0) {
                    out.c1 = false;
                    out.gamma_min = kInf;
                    continue;
                }
                if (out.c1) {
                    const double gap = norm_value(data.values.col(i) - data.values.col(j), q);
                    out.gamma_min = std::max(out.gamma_min, gap / denom);
                }
            }
        }
    }

    const int k = partition.k();
    for (int a = 0; a < k; ++a) {
        double row_a = 0.0;
        for (int l = 0; l < k; ++l)
            if (l != a) row_a += agg.w_between(a, l);
        for (int b = a + 1; b < k; ++b) {
            const Vector gap = agg.centroids.col(a) - agg.centroids.col(b);
            if (gap.norm() == 0.0) {
                out.centroids_distinct = false;
                continue;
            }
            double row_b = 0.0;
            for (int l = 0; l < k; ++l)
                if (l != b) row_b += agg.w_between(b, l);
            const double denom = row_a / static_cast<double>(agg.block_sizes[static_cast<size_t>(a)]) +
                                 row_b / static_cast<double>(agg.block_sizes[static_cast<size_t>(b)]);
            if (denom > 0.0) out.gamma_max = std::min(out.gamma_max, norm_value(gap, q) / denom);
        }
    }
    return out;
}

}  // namespace

ClassAggregates class_aggregates(const Dataset& data, const WeightMatrix& weights,
                                 const Partition& partition) {
    check_shapes(data, weights, partition);
    const int k = partition.k();
    const int n = partition.n;

    ClassAggregates agg;
    agg.block_sizes.reserve(static_cast<size_t>(k));
    agg.centroids = Matrix::Zero(data.dim(), k);
    agg.w_between = Matrix::Zero(k, k);
    agg.w_point = Matrix::Zero(n, k);

    for (int b = 0; b < k; ++b) {
        const auto& block = partition.blocks[static_cast<size_t>(b)];
        agg.block_sizes.push_back(static_cast<int>(block.size()));
        for (int idx : block) agg.centroids.col(b) += data.values.col(idx);
        agg.centroids.col(b) /= static_cast<double>(block.size());
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j : block) s += weights.w(i, j);
            agg.w_point(i, b) = s;
        }
    }
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) {
            double s = 0.0;
            for (int i : partition.blocks[static_cast<size_t>(a)]) s += agg.w_point(i, b);
            agg.w_between(a, b) = s;
        }
    return agg;
}

std::vector<Matrix> mu(const WeightMatrix& weights, const Partition& partition) {
    if (partition.n != static_cast<int>(weights.size()))
        throw ValidationError("mu: partition size mismatch");
    const int k = partition.k();

    // w_point without needing the data
    Matrix w_point = Matrix::Zero(partition.n, k);
    for (int b = 0; b < k; ++b)
        for (int i = 0; i < partition.n; ++i) {
            double s = 0.0;
            for (int j : partition.blocks[static_cast<size_t>(b)]) s += weights.w(i, j);
            w_point(i, b) = s;
        }

    std::vector<Matrix> out;
    out.reserve(static_cast<size_t>(k));
    for (int a = 0; a < k; ++a) {
        const auto& block = partition.blocks[static_cast<size_t>(a)];
        const int m = static_cast<int>(block.size());
        Matrix mu_block = Matrix::Zero(m, m);
        for (int bi = 0; bi < m; ++bi)
            for (int bj = bi + 1; bj < m; ++bj) {
                double s = 0.0;
                for (int b = 0; b < k; ++b) {
                    if (b == a) continue;
                    s += std::abs(w_point(block[static_cast<size_t>(bi)], b) -
                                  w_point(block[static_cast<size_t>(bj)], b));
                }
                mu_block(bi, bj) = mu_block(bj, bi) = s;
            }
        out.push_back(std::move(mu_block));
    }
    return out;
}

double gamma_min(const Dataset& data, const WeightMatrix& weights, const Partition& partition,
                 Norm p) {
    check_shapes(data, weights, partition);
    const auto agg = class_aggregates(data, weights, partition);
    const auto mus = mu(weights, partition);
    const auto bounds = evaluate_bounds(data, weights, partition, p, agg, mus);
    if (!bounds.c1) throw CertificateError("gamma_min: condition C1 fails, bound not defined");
    return bounds.gamma_min;
}

double gamma_max(const Dataset& data, const WeightMatrix& weights, const Partition& partition,
                 Norm p) {
    check_shapes(data, weights, partition);
    const auto agg = class_aggregates(data, weights, partition);
    const auto mus = mu(weights, partition);
    const auto bounds = evaluate_bounds(data, weights, partition, p, agg, mus);
    if (!bounds.centroids_distinct)
        throw CertificateError("gamma_max: coincident centroids, bound not defined");
    return bounds.gamma_max;
}

RecoveryCertificate check_conditions(const Dataset& data, const WeightMatrix& weights,
                                     const Partition& partition, Norm p) {
    check_shapes(data, weights, partition);
    const auto agg = class_aggregates(data, weights, partition);
    auto mus = mu(weights, partition);
    const auto bounds = evaluate_bounds(data, weights, partition, p, agg, mus);

    RecoveryCertificate cert;
    cert.c1 = bounds.c1;
    cert.gamma_min = bounds.gamma_min;
    cert.gamma_max = bounds.gamma_max;
    cert.c2 = bounds.gamma_min < bounds.gamma_max;
    cert.centroids_distinct = bounds.centroids_distinct;
    cert.mu = std::move(mus);
    if (cert.c1 && cert.c2 && cert.centroids_distinct)
        cert.admissible = {cert.gamma_min, cert.gamma_max, false};
    return cert;
}

CertifyResult certify_unchanged(const Dataset& data, const Perturbation& eps,
                                const WeightMatrix& weights, const Partition& reference,
                                double gamma, Norm p) {
    const Dataset perturbed = apply_perturbation(data, eps);
    CertifyResult result;
    result.cert = check_conditions(perturbed, weights, reference, p);
    result.guaranteed = !result.cert.admissible.empty && gamma >= result.cert.gamma_min &&
                        gamma < result.cert.gamma_max;
    return result;
}

ScalarInterval robust_interval(const Dataset& data, const WeightMatrix& weights,
                               const Partition& reference, int row, int col, RobustMode mode,
                               Norm p, RobustSearch search) {
    if (row < 0 || row >= data.dim() || col < 0 || col >= data.n_samples())
        throw ValidationError("robust_interval: coordinate out of range");
    if (search.tol <= 0.0) throw ValidationError("robust_interval: tol must be positive");
    const double default_bound = 10.0 * std::max(data.range(), 1.0);
    const double lo_bound = search.lo != 0.0 ? search.lo : -default_bound;
    const double hi_bound = search.hi != 0.0 ? search.hi : default_bound;
    if (lo_bound >= 0.0 || hi_bound <= 0.0)
        throw ValidationError("robust_interval: search bounds must bracket zero");

    auto predicate = [&](double t) {
        Matrix shifted = data.values;
        shifted(row, col) += t;
        const auto cert = check_conditions(Dataset(shifted), weights, reference, p);
        if (cert.admissible.empty) return false;
        if (mode.fixed_gamma)
            return mode.gamma >= cert.gamma_min && mode.gamma < cert.gamma_max;
        return true;
    };

    if (!predicate(0.0)) return {0.0, 0.0, true};

    // The certified set need not be an interval (the predicate can fail on a
    // hole and hold again further out), so march outward from zero to bracket
    // the first failure, then bisect the crossing. The interval is truncated
    // at the search bound when no failure is seen.
    auto locate = [&](double bound) {
        constexpr int kScanSteps = 256;
        const double step = bound / kScanSteps;
        double inside = 0.0;
        double outside = 0.0;
        bool bracketed = false;
        for (int k = 1; k <= kScanSteps; ++k) {
            const double t = k == kScanSteps ? bound : k * step;
            if (!predicate(t)) {
                outside = t;
                bracketed = true;
                break;
            }
            inside = t;
        }
        if (!bracketed) return bound;
        while (std::abs(outside - inside) > search.tol) {
            const double mid = 0.5 * (inside + outside);
            if (predicate(mid))
                inside = mid;
            else
                outside = mid;
        }
        return 0.5 * (inside + outside);
    };

    ScalarInterval out;
    out.empty = false;
    out.hi = locate(hi_bound);
    out.lo = locate(lo_bound);
    return out;
}

}  // namespace clusterguard
