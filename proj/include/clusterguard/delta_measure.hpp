#pragma once

#include <Eigen/Dense>
#include <utility>

#include "clusterguard/model.hpp"

namespace clusterguard {

// n x K block-membership indicator, blocks in canonical order.
Eigen::MatrixXi membership_matrix(const Partition& partition, int n);

// D * D^T: entry (i,j) is 1 iff i and j share a block.
Eigen::MatrixXi coassignment(const Partition& partition, int n);

// Squared Frobenius distance between the two co-assignment matrices, i.e. the
// number of ordered pairs whose same-block status differs. Block labels never
// matter and the two partitions may have different block counts.
long long delta(const Partition& ref, const Partition& pert, int n);

// Two-way spill: s points move from the first block (size n1) to the second.
struct SpillSpec2Way {
    int n1 = 0;
    int n2 = 0;
    int s = 0;

    void validate() const;
    int n() const { return n1 + n2; }
};

// Three-way spill out of the first block: s1 points to the second block,
// s2 points to the third.
struct SpillSpec3Way {
    int n1 = 0;
    int n2 = 0;
    int n3 = 0;
    int s1 = 0;
    int s2 = 0;

    void validate() const;
    int n() const { return n1 + n2 + n3; }
};

// Closed forms for the spill scenarios; agree with delta() on any concrete
// realization of the spec.
long long delta_2way_closed(const SpillSpec2Way& spec);
long long delta_3way_closed(const SpillSpec3Way& spec);

// Concrete (reference, perturbed) partition pair realizing a spill spec;
// emptied blocks are dropped.
std::pair<Partition, Partition> realize_spill(const SpillSpec2Way& spec);
std::pair<Partition, Partition> realize_spill(const SpillSpec3Way& spec);

enum class SpillRange {
    in_range,      // delta is nondecreasing in the spill count here
    out_of_range,  // provably outside the monotone range
    unclassified,  // shape not covered by the analysed cases
};

SpillRange classify_spill_range(const SpillSpec2Way& spec);
SpillRange classify_spill_range(const SpillSpec3Way& spec);

// True only for in_range.
bool deviation_valid_range(const SpillSpec2Way& spec);
bool deviation_valid_range(const SpillSpec3Way& spec);

}  // namespace clusterguard
