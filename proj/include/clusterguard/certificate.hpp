#pragma once

#include <limits>
#include <vector>

#include "clusterguard/model.hpp"

namespace clusterguard {

// Per-class sums used by the recovery conditions.
struct ClassAggregates {
    std::vector<int> block_sizes;  // n_alpha
    Matrix centroids;              // d x K block means
    Matrix w_between;              // K x K, sum of w_ij over (i in I_alpha, j in I_beta)
    Matrix w_point;                // n x K, sum of w_ij over j in I_beta
};

ClassAggregates class_aggregates(const Dataset& data, const WeightMatrix& weights,
                                 const Partition& partition);

// mu_ij = sum over other blocks of |w_i - w_j| aggregated weight differences;
// one symmetric zero-diagonal matrix per block, indexed by block-local position.
std::vector<Matrix> mu(const WeightMatrix& weights, const Partition& partition);

struct GammaInterval {
    double lo = 0.0;
    double hi = 0.0;
    bool empty = true;
};

struct RecoveryCertificate {
    bool c1 = false;                // positive adjusted weights within every block
    bool c2 = false;                // gamma_min < gamma_max
    double gamma_min = 0.0;         // +inf when c1 fails
    double gamma_max = std::numeric_limits<double>::infinity();
    std::vector<Matrix> mu;         // per-block matrices
    bool centroids_distinct = false;
    GammaInterval admissible;       // [gamma_min, gamma_max) when applicable
};

// Largest ratio ||x_i - x_j||_q / (n_alpha w_ij - mu_ij) over within-block pairs.
// Zero when no block has two members. Throws CertificateError if C1 fails.
// The q-norm is the conjugate of the penalty norm p.
double gamma_min(const Dataset& data, const WeightMatrix& weights, const Partition& partition,
                 Norm p);

// Smallest centroid-separation ratio over block pairs; +inf when K = 1 or all
// cross-block weights vanish. Throws CertificateError on coincident centroids.
double gamma_max(const Dataset& data, const WeightMatrix& weights, const Partition& partition,
                 Norm p);

// Full certificate; never throws, inapplicability is encoded in the flags.
RecoveryCertificate check_conditions(const Dataset& data, const WeightMatrix& weights,
                                     const Partition& partition, Norm p);

struct CertifyResult {
    bool guaranteed = false;  // false means "no certificate", not "attack succeeds"
    RecoveryCertificate cert;
};

// Evaluates the certificate on X + eps under the reference partition and the
// given gamma. The reference must be the solver partition of the unperturbed
// data at this gamma for the guarantee to carry its intended meaning.
CertifyResult certify_unchanged(const Dataset& data, const Perturbation& eps,
                                const WeightMatrix& weights, const Partition& reference,
                                double gamma, Norm p);

struct RobustMode {
    bool fixed_gamma = false;
    double gamma = 0.0;  // used only when fixed_gamma

    static RobustMode exists_gamma() { return {false, 0.0}; }
    static RobustMode fixed(double gamma) { return {true, gamma}; }
};

struct RobustSearch {
    double lo = 0.0;   // bracket below zero; 0 selects -10 * data range
    double hi = 0.0;   // bracket above zero; 0 selects +10 * data range
    double tol = 1e-6;
};

struct ScalarInterval {
    double lo = 0.0;
    double hi = 0.0;
    bool empty = true;
};

// Maximal open interval of scalar shifts t around 0, applied to the single
// entry (row, col), over which the certificate predicate stays valid.
// Endpoints are located by bisection; an endpoint equal to the search bound
// means the certified region extends at least that far.
ScalarInterval robust_interval(const Dataset& data, const WeightMatrix& weights,
                               const Partition& reference, int row, int col, RobustMode mode,
                               Norm p, RobustSearch search = {});

}  // namespace clusterguard
