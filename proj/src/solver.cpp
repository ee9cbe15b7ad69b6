#include "clusterguard/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "clusterguard/errors.hpp"

namespace clusterguard {

namespace {

struct Edge {
    int i;
    int j;
    double w;
};

std::vector<Edge> build_edges(const WeightMatrix& weights) {
    std::vector<Edge> edges;
    const Eigen::Index n = weights.size();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            if (weights.w(i, j) > 0.0)
                edges.push_back({static_cast<int>(i), static_cast<int>(j), weights.w(i, j)});
    return edges;
}

class UnionFind {
public:
    explicit UnionFind(int n) : parent_(static_cast<size_t>(n)), rank_(static_cast<size_t>(n), 0) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }
    int find(int a) {
        while (parent_[static_cast<size_t>(a)] != a) {
            parent_[static_cast<size_t>(a)] = parent_[static_cast<size_t>(parent_[static_cast<size_t>(a)])];
            a = parent_[static_cast<size_t>(a)];
        }
        return a;
    }
    void merge(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (rank_[static_cast<size_t>(a)] < rank_[static_cast<size_t>(b)]) std::swap(a, b);
        parent_[static_cast<size_t>(b)] = a;
        if (rank_[static_cast<size_t>(a)] == rank_[static_cast<size_t>(b)]) ++rank_[static_cast<size_t>(a)];
    }

private:
    std::vector<int> parent_;
    std::vector<int> rank_;
};

std::vector<Vector> block_means(const Dataset& data, const Partition& partition) {
    std::vector<Vector> means;
    means.reserve(partition.blocks.size());
    for (const auto& block : partition.blocks) {
        Vector m = Vector::Zero(data.dim());
        for (int idx : block) m += data.values.col(idx);
        means.push_back(m / static_cast<double>(block.size()));
    }
    return means;
}

ClusterSolution trivial_solution(const Dataset& data, const SolverConfig& config) {
    ClusterSolution sol;
    sol.y = data.values;
    sol.partition = extract_partition(sol.y, config.fusion_tol);
    sol.cluster_means = block_means(data, sol.partition);
    sol.kkt_residual = 0.0;
    sol.iterations = 0;
    return sol;
}

// Projection of |v| (descending) onto the simplex boundary, returning the clamp
// level tau with sum_i max(|v_i| - tau, 0) = radius. Assumes ||v||_1 > radius.
double l1_ball_clamp_level(const Vector& v, double radius) {
    std::vector<double> mags(static_cast<size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) mags[static_cast<size_t>(i)] = std::abs(v(i));
    std::sort(mags.begin(), mags.end(), std::greater<double>());
    double cumsum = 0.0;
    double tau = 0.0;
    for (size_t k = 0; k < mags.size(); ++k) {
        cumsum += mags[k];
        const double candidate = (cumsum - radius) / static_cast<double>(k + 1);
        if (k + 1 == mags.size() || candidate >= mags[k + 1]) {
            tau = candidate;
            break;
        }
    }
    return tau;
}

}  // namespace

double objective(const Dataset& data, const WeightMatrix& weights, const SolverConfig& config,
                 const Matrix& y) {
    if (y.rows() != data.values.rows() || y.cols() != data.values.cols())
        throw ValidationError("objective: y shape mismatch");
    if (weights.size() != data.n_samples())
        throw ValidationError("objective: weight matrix size mismatch");
    double fidelity = 0.5 * (y - data.values).squaredNorm();
    double penalty = 0.0;
    for (Eigen::Index i = 0; i < y.cols(); ++i)
        for (Eigen::Index j = i + 1; j < y.cols(); ++j)
            if (weights.w(i, j) > 0.0)
                penalty += weights.w(i, j) * norm_value(y.col(i) - y.col(j), config.norm);
    return fidelity + config.gamma * penalty;
}

Vector prox_pairwise(const ProxBlock& block, Norm p) {
    if (block.lambda < 0.0) throw ValidationError("prox_pairwise: lambda must be nonnegative");
    const Vector& v = block.v;
    const double lambda = block.lambda;
    if (lambda == 0.0) return v;
    switch (p) {
        case Norm::l2: {
            const double nv = v.norm();
            if (nv <= lambda) return Vector::Zero(v.size());
            return (1.0 - lambda / nv) * v;
        }
        case Norm::l1: {
            Vector out(v.size());
            for (Eigen::Index i = 0; i < v.size(); ++i) {
                const double a = std::abs(v(i)) - lambda;
                out(i) = a > 0.0 ? (v(i) > 0.0 ? a : -a) : 0.0;
            }
            return out;
        }
        case Norm::linf: {
            // Moreau: prox of lambda||.||_inf is v minus the projection of v
            // onto the l1 ball of radius lambda, i.e. entrywise clamping.
            if (v.lpNorm<1>() <= lambda) return Vector::Zero(v.size());
            const double tau = l1_ball_clamp_level(v, lambda);
            Vector out(v.size());
            for (Eigen::Index i = 0; i < v.size(); ++i) {
                const double mag = std::min(std::abs(v(i)), tau);
                out(i) = v(i) >= 0.0 ? mag : -mag;
            }
            return out;
        }
    }
    return v;
}

Partition extract_partition(const Matrix& y, double fusion_tol) {
    if (fusion_tol <= 0.0) throw ValidationError("extract_partition: fusion_tol must be positive");
    const int n = static_cast<int>(y.cols());
    double max_norm = 0.0;
    for (int i = 0; i < n; ++i) max_norm = std::max(max_norm, y.col(i).norm());
    const double threshold = fusion_tol * (1.0 + max_norm);
    UnionFind uf(n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if ((y.col(i) - y.col(j)).norm() <= threshold) uf.merge(i, j);
    std::vector<std::vector<int>> groups(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) groups[static_cast<size_t>(uf.find(i))].push_back(i);
    std::vector<std::vector<int>> blocks;
    for (auto& g : groups)
        if (!g.empty()) blocks.push_back(std::move(g));
    return Partition::from_blocks(std::move(blocks), n);
}

ClusterSolution solve(const Dataset& data, const WeightMatrix& weights, const SolverConfig& config) {
    return solve(data, weights, config, data.values);
}

ClusterSolution solve(const Dataset& data, const WeightMatrix& weights, const SolverConfig& config,
                      const Matrix& y0) {
    config.validate();
    if (weights.size() != data.n_samples())
        throw ValidationError("solve: weight matrix size mismatch");
    if (y0.rows() != data.values.rows() || y0.cols() != data.values.cols())
        throw ValidationError("solve: initial y shape mismatch");

    const auto edges = build_edges(weights);
    if (config.gamma == 0.0 || edges.empty()) return trivial_solution(data, config);

    const Eigen::Index d = data.dim();
    const Eigen::Index n = data.n_samples();
    const int m = static_cast<int>(edges.size());
    double rho = config.admm_rho;

    // ADMM on the splitting  t_e = y_i - y_j  per edge, with the fusion term
    // handled through its proximal map. The y-step solves a fixed SPD system
    //   y (I + rho L) = x + sum_e (rho t_e - lam_e)(delta_i - delta_j)^T
    // with L the unit-weight graph Laplacian over the edge set.
    Matrix laplacian = Matrix::Zero(n, n);
    for (const Edge& e : edges) {
        laplacian(e.i, e.i) += 1.0;
        laplacian(e.j, e.j) += 1.0;
        laplacian(e.i, e.j) -= 1.0;
        laplacian(e.j, e.i) -= 1.0;
    }
    Eigen::LLT<Matrix> factor;
    auto refactor = [&] {
        factor.compute(Matrix::Identity(n, n) + rho * laplacian);
        if (factor.info() != Eigen::Success)
            throw InternalError("solve: failed to factor the ADMM system");
    };
    refactor();

    Matrix y = y0;
    Matrix t(d, m);
    for (int e = 0; e < m; ++e) t.col(e) = y.col(edges[static_cast<size_t>(e)].i) - y.col(edges[static_cast<size_t>(e)].j);
    Matrix lam = Matrix::Zero(d, m);

    constexpr int check_interval = 10;
    constexpr int kAdaptWindow = 20000;
    constexpr double kRelax = 1.7;
    double primal_res = 0.0;
    double kkt_res = 0.0;
    for (int iter = 1; iter <= config.max_iter; ++iter) {
        Matrix rhs = data.values;
        for (int e = 0; e < m; ++e) {
            const Edge& ed = edges[static_cast<size_t>(e)];
            const Vector v = rho * t.col(e) - lam.col(e);
            rhs.col(ed.i) += v;
            rhs.col(ed.j) -= v;
        }
        y = factor.solve(rhs.transpose()).transpose();

        // over-relaxed splitting step; the multiplier update below still lands
        // exactly in the subdifferential of the fusion term at the new t
        for (int e = 0; e < m; ++e) {
            const Edge& ed = edges[static_cast<size_t>(e)];
            const Vector relaxed =
                kRelax * (y.col(ed.i) - y.col(ed.j)) + (1.0 - kRelax) * t.col(e);
            ProxBlock block{relaxed + lam.col(e) / rho, config.gamma * ed.w / rho};
            const Vector t_new = prox_pairwise(block, config.norm);
            lam.col(e) += rho * (relaxed - t_new);
            t.col(e) = t_new;
        }

        if (iter % check_interval == 0 || iter == config.max_iter) {
            // After the multiplier update, lam_e is an exact subgradient of
            // gamma w_e ||.||_p at t_e, so the stationarity residual can be
            // evaluated directly against the original optimality condition.
            primal_res = 0.0;
            for (int e = 0; e < m; ++e) {
                const Edge& ed = edges[static_cast<size_t>(e)];
                primal_res = std::max(primal_res, (y.col(ed.i) - y.col(ed.j) - t.col(e)).norm());
            }
            Matrix grad = y - data.values;
            for (int e = 0; e < m; ++e) {
                const Edge& ed = edges[static_cast<size_t>(e)];
                grad.col(ed.i) += lam.col(e);
                grad.col(ed.j) -= lam.col(e);
            }
            kkt_res = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) kkt_res = std::max(kkt_res, grad.col(i).norm());
            if (kkt_res <= config.kkt_tol && primal_res <= config.kkt_tol) {
                ClusterSolution sol;
                sol.y = std::move(y);
                sol.partition = extract_partition(sol.y, config.fusion_tol);
                sol.cluster_means = block_means(data, sol.partition);
                sol.kkt_residual = std::max(kkt_res, primal_res);
                sol.iterations = iter;
                return sol;
            }

            // Residual balancing: when one residual dominates, shift the step
            // toward it. Both residuals scale linearly under data scaling, so
            // the adaptation schedule, and with it every equivariance, is
            // unaffected. Adaptation stops after the window so the tail runs
            // with the fixed-step convergence behaviour; the multipliers are
            // unscaled and need no adjustment when rho changes.
            if (iter <= kAdaptWindow) {
                if (primal_res > 10.0 * kkt_res && rho < 1e4 * config.admm_rho) {
                    rho *= 2.0;
                    refactor();
                } else if (kkt_res > 10.0 * primal_res && rho > 1e-4 * config.admm_rho) {
                    rho *= 0.5;
                    refactor();
                }
            }
        }
    }
    throw ConvergenceError("solve: ADMM did not converge within max_iter", primal_res, kkt_res,
                           config.max_iter);
}

namespace {

// --- exact 1-D oracle -------------------------------------------------------
//
// Enumerates every partition of the points into fused groups together with
// every strict ordering of the group values. For each candidate the group
// stationarity system is diagonal, and within-group optimality reduces to the
// existence of a bounded antisymmetric flow with prescribed divergences, which
// on <= 6 points is checked exactly by subset enumeration.

// All set partitions of {0..n-1}, via restricted growth strings.
void enumerate_set_partitions(int n, std::vector<std::vector<std::vector<int>>>& out) {
    std::vector<int> assignment(static_cast<size_t>(n), 0);
    auto rec = [&](auto&& self, int pos, int groups_used) -> void {
        if (pos == n) {
            std::vector<std::vector<int>> part(static_cast<size_t>(groups_used));
            for (int i = 0; i < n; ++i)
                part[static_cast<size_t>(assignment[static_cast<size_t>(i)])].push_back(i);
            out.push_back(std::move(part));
            return;
        }
        for (int g = 0; g <= groups_used && g < n; ++g) {
            assignment[static_cast<size_t>(pos)] = g;
            self(self, pos + 1, std::max(groups_used, g + 1));
        }
    };
    rec(rec, 0, 0);
}

bool group_flow_feasible(const std::vector<int>& group, const std::vector<double>& c,
                         const Matrix& w) {
    const int g = static_cast<int>(group.size());
    if (g <= 1) return true;
    // Gale-Hoffman cut condition over all proper subsets.
    for (unsigned mask = 1; mask + 1 < (1u << g); ++mask) {
        double supply = 0.0;
        double capacity = 0.0;
        for (int a = 0; a < g; ++a) {
            if (!(mask >> a & 1u)) continue;
            supply += c[static_cast<size_t>(a)];
            for (int b = 0; b < g; ++b)
                if (!(mask >> b & 1u)) capacity += w(group[static_cast<size_t>(a)], group[static_cast<size_t>(b)]);
        }
        if (supply > capacity + 1e-9) return false;
    }
    return true;
}

}  // namespace

Matrix oracle_solve_1d(const Dataset& data, const WeightMatrix& weights, double gamma) {
    if (data.dim() != 1) throw ValidationError("oracle_solve_1d: requires one-dimensional data");
    const int n = static_cast<int>(data.n_samples());
    if (n > 6) throw ValidationError("oracle_solve_1d: requires n <= 6");
    if (weights.size() != n) throw ValidationError("oracle_solve_1d: weight matrix size mismatch");
    if (gamma < 0.0) throw ValidationError("oracle_solve_1d: gamma must be nonnegative");
    if (gamma == 0.0) return data.values;

    const auto& x = data.values;
    const auto& w = weights.w;

    std::vector<std::vector<std::vector<int>>> partitions;
    enumerate_set_partitions(n, partitions);

    Matrix best;
    bool found = false;
    for (const auto& groups : partitions) {
        const int k = static_cast<int>(groups.size());
        std::vector<double> group_sum(static_cast<size_t>(k), 0.0);
        Matrix wg = Matrix::Zero(k, k);  // aggregated weights between groups
        for (int a = 0; a < k; ++a) {
            for (int idx : groups[static_cast<size_t>(a)]) group_sum[static_cast<size_t>(a)] += x(0, idx);
            for (int b = a + 1; b < k; ++b) {
                double s = 0.0;
                for (int i : groups[static_cast<size_t>(a)])
                    for (int j : groups[static_cast<size_t>(b)]) s += w(i, j);
                wg(a, b) = wg(b, a) = s;
            }
        }

        std::vector<int> order(static_cast<size_t>(k));
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end());
        do {
            // rank in ascending value order
            std::vector<int> rank(static_cast<size_t>(k));
            for (int pos = 0; pos < k; ++pos) rank[static_cast<size_t>(order[static_cast<size_t>(pos)])] = pos;

            std::vector<double> u(static_cast<size_t>(k));
            for (int a = 0; a < k; ++a) {
                double pull = 0.0;
                for (int b = 0; b < k; ++b) {
                    if (b == a) continue;
                    pull += wg(a, b) * (rank[static_cast<size_t>(a)] > rank[static_cast<size_t>(b)] ? 1.0 : -1.0);
                }
                u[static_cast<size_t>(a)] =
                    (group_sum[static_cast<size_t>(a)] - gamma * pull) / static_cast<double>(groups[static_cast<size_t>(a)].size());
            }

            bool consistent = true;
            for (int pos = 0; pos + 1 < k && consistent; ++pos)
                if (!(u[static_cast<size_t>(order[static_cast<size_t>(pos)])] <
                      u[static_cast<size_t>(order[static_cast<size_t>(pos + 1)])] - 1e-12))
                    consistent = false;
            if (!consistent) continue;

            bool feasible = true;
            for (int a = 0; a < k && feasible; ++a) {
                const auto& group = groups[static_cast<size_t>(a)];
                if (group.size() <= 1) continue;
                std::vector<double> c(group.size());
                for (size_t gi = 0; gi < group.size(); ++gi) {
                    const int i = group[gi];
                    double out = 0.0;
                    for (int b = 0; b < k; ++b) {
                        if (b == a) continue;
                        const double sgn = rank[static_cast<size_t>(a)] > rank[static_cast<size_t>(b)] ? 1.0 : -1.0;
                        double wsum = 0.0;
                        for (int j : groups[static_cast<size_t>(b)]) wsum += w(i, j);
                        out += wsum * sgn;
                    }
                    c[gi] = (x(0, i) - u[static_cast<size_t>(a)]) / gamma - out;
                }
                feasible = group_flow_feasible(group, c, w);
            }
            if (!feasible) continue;

            Matrix y(1, n);
            for (int a = 0; a < k; ++a)
                for (int idx : groups[static_cast<size_t>(a)]) y(0, idx) = u[static_cast<size_t>(a)];
            if (found && (best - y).cwiseAbs().maxCoeff() > 1e-7)
                throw InternalError("oracle_solve_1d: two distinct certified candidates");
            best = y;
            found = true;
        } while (std::next_permutation(order.begin(), order.end()));
    }
    if (!found) throw InternalError("oracle_solve_1d: no candidate passed certification");
    return best;
}

}  // namespace clusterguard
