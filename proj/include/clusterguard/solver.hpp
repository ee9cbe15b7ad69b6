#pragma once

#include "clusterguard/model.hpp"

namespace clusterguard {

// The clustering objective:
//   1/2 sum_i ||y_i - x_i||^2 + gamma * sum_{i<j} w_ij ||y_i - y_j||_p
double objective(const Dataset& data, const WeightMatrix& weights, const SolverConfig& config,
                 const Matrix& y);

// Input to the pairwise proximal map: argmin_z 1/2 ||z - v||^2 + lambda ||z||_p.
struct ProxBlock {
    Vector v;
    double lambda = 0.0;  // >= 0
};

Vector prox_pairwise(const ProxBlock& block, Norm p);

// Connected components of the fusion graph: edge (i,j) iff
// ||y_i - y_j||_2 <= fusion_tol * (1 + max_i ||y_i||_2).
Partition extract_partition(const Matrix& y, double fusion_tol);

// Solves the clustering problem by ADMM on the edge-splitting formulation and
// extracts the induced partition. Throws ConvergenceError past max_iter.
ClusterSolution solve(const Dataset& data, const WeightMatrix& weights, const SolverConfig& config);

// Same, starting the splitting iteration from y0 instead of the data.
ClusterSolution solve(const Dataset& data, const WeightMatrix& weights, const SolverConfig& config,
                      const Matrix& y0);

// Exact optimum for one-dimensional instances with n <= 6, found by enumerating
// fused-group candidates and certifying first-order optimality. Independent of
// the ADMM path; serves as its correctness oracle. Returns a 1 x n matrix.
Matrix oracle_solve_1d(const Dataset& data, const WeightMatrix& weights, double gamma);

}  // namespace clusterguard
