#pragma once

#include <cstdint>
#include <vector>

#include "clusterguard/model.hpp"

namespace clusterguard {

struct AttackConfig {
    double budget = 0.0;        // Frobenius cap on the perturbation (budget mode)
    double target_delta = 0.0;  // required deviation (min-norm mode)
    double penalty_rho = 0.0;   // trade-off weight (penalized mode)
    // entries of eps allowed to be nonzero; empty means all of them
    std::vector<std::pair<int, int>> support;
    int n_candidates = 64;
    int n_rounds = 20;
    double shrink = 0.7;
    std::uint64_t seed = 0;
    double budget_hi = 0.0;     // search ceiling for min-norm/penalized; 0 selects 10 * data range
};

struct AttackReport {
    Perturbation eps;
    double eps_norm = 0.0;
    long long delta_achieved = 0;
    Partition partition_before;
    Partition partition_after;
    long long evaluations = 0;  // lower-level solves attempted
    long long discarded = 0;    // candidates dropped for non-convergence
    bool success = false;
};

// Budget-constrained deviation maximization: random search over the allowed
// support, recentered on the incumbent with a geometrically shrinking radius.
// Deterministic given the seed. success means some candidate changed the
// partition (delta > 0).
AttackReport attack_max_deviation(const Dataset& data, const WeightMatrix& weights,
                                  const SolverConfig& config, const AttackConfig& atk);

// Smallest perturbation reaching target_delta, found by bisection on the
// budget with attack_max_deviation as the inner search. success=false with the
// best deviation attained when the ceiling budget cannot reach the target.
AttackReport attack_min_norm(const Dataset& data, const WeightMatrix& weights,
                             const SolverConfig& config, const AttackConfig& atk);

// Unconstrained search scoring candidates by delta - rho * ||eps||_F.
AttackReport attack_penalized(const Dataset& data, const WeightMatrix& weights,
                              const SolverConfig& config, const AttackConfig& atk);

struct CalmnessEstimate {
    std::vector<double> radii;
    std::vector<double> ratios;  // per-radius max of ||Y*(eps) - Y*||_F / ||eps||_F
    double modulus_estimate = 0.0;
    long long samples_skipped = 0;  // non-convergent lower-level solves
};

// Samples perturbations on Frobenius spheres of the given radii and records
// solution drift per unit perturbation. A lower bound on any calmness modulus,
// never an upper bound.
CalmnessEstimate calmness_probe(const Dataset& data, const WeightMatrix& weights,
                                const SolverConfig& config, const std::vector<double>& radii,
                                int samples_per_radius, std::uint64_t seed);

}  // namespace clusterguard
