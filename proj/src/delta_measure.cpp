#include "clusterguard/delta_measure.hpp"

#include <numeric>

#include "clusterguard/errors.hpp"

namespace clusterguard {

namespace {

int ceil_div(int a, int b) {
    return (a + b - 1) / b;
}

std::vector<int> owner_checked(const Partition& p, int n, const char* role) {
    if (p.n != n) throw ValidationError(std::string("delta: ") + role + " partition does not cover n points");
    return p.block_of();
}

// Append {first..first+count-1} to dst if nonempty.
void push_range(std::vector<std::vector<int>>& dst, int first, int count) {
    if (count <= 0) return;
    std::vector<int> block(static_cast<size_t>(count));
    std::iota(block.begin(), block.end(), first);
    dst.push_back(std::move(block));
}

}  // namespace

Eigen::MatrixXi membership_matrix(const Partition& partition, int n) {
    const Partition canon = canonicalize(partition);
    if (canon.n != n) throw ValidationError("membership_matrix: partition does not cover n points");
    Eigen::MatrixXi d = Eigen::MatrixXi::Zero(n, canon.k());
    for (int b = 0; b < canon.k(); ++b)
        for (int idx : canon.blocks[static_cast<size_t>(b)]) d(idx, b) = 1;
    return d;
}

Eigen::MatrixXi coassignment(const Partition& partition, int n) {
    const Eigen::MatrixXi d = membership_matrix(partition, n);
    return d * d.transpose();
}

long long delta(const Partition& ref, const Partition& pert, int n) {
    const auto ref_owner = owner_checked(ref, n, "reference");
    const auto pert_owner = owner_checked(pert, n, "perturbed");
    long long count = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const bool same_ref = ref_owner[static_cast<size_t>(i)] == ref_owner[static_cast<size_t>(j)];
            const bool same_pert = pert_owner[static_cast<size_t>(i)] == pert_owner[static_cast<size_t>(j)];
            if (same_ref != same_pert) ++count;
        }
    return count;
}

void SpillSpec2Way::validate() const {
    if (n1 < 1 || n2 < 1) throw ValidationError("spill spec: blocks must be nonempty");
    if (s < 0 || s > n1) throw ValidationError("spill spec: s must lie in [0, n1]");
}

void SpillSpec3Way::validate() const {
    if (n1 < 1 || n2 < 1 || n3 < 1) throw ValidationError("spill spec: blocks must be nonempty");
    if (s1 < 0 || s2 < 0 || s1 + s2 > n1)
        throw ValidationError("spill spec: need s1, s2 >= 0 and s1 + s2 <= n1");
}

long long delta_2way_closed(const SpillSpec2Way& spec) {
    spec.validate();
    const long long s = spec.s;
    const long long n = spec.n();
    return 2 * s * (n - s);
}

long long delta_3way_closed(const SpillSpec3Way& spec) {
    spec.validate();
    const long long s1 = spec.s1;
    const long long s2 = spec.s2;
    const long long n1 = spec.n1;
    const long long n2 = spec.n2;
    const long long n3 = spec.n3;
    return (s1 + s2) * (2 * n1 - (s1 + s2)) + s1 * (2 * n2 - s1) + s2 * (2 * n3 - s2);
}

std::pair<Partition, Partition> realize_spill(const SpillSpec2Way& spec) {
    spec.validate();
    const int n = spec.n();
    std::vector<std::vector<int>> ref_blocks;
    push_range(ref_blocks, 0, spec.n1);
    push_range(ref_blocks, spec.n1, spec.n2);
    std::vector<std::vector<int>> pert_blocks;
    push_range(pert_blocks, 0, spec.n1 - spec.s);
    push_range(pert_blocks, spec.n1 - spec.s, spec.s + spec.n2);
    return {Partition::from_blocks(std::move(ref_blocks), n),
            Partition::from_blocks(std::move(pert_blocks), n)};
}

std::pair<Partition, Partition> realize_spill(const SpillSpec3Way& spec) {
    spec.validate();
    const int n = spec.n();
    std::vector<std::vector<int>> ref_blocks;
    push_range(ref_blocks, 0, spec.n1);
    push_range(ref_blocks, spec.n1, spec.n2);
    push_range(ref_blocks, spec.n1 + spec.n2, spec.n3);

    // moved points are the tail of the first block: s1 of them join the second
    // block, the last s2 join the third
    const int keep = spec.n1 - spec.s1 - spec.s2;
    std::vector<std::vector<int>> pert_blocks;
    push_range(pert_blocks, 0, keep);
    std::vector<int> second;
    for (int i = keep; i < keep + spec.s1; ++i) second.push_back(i);
    for (int i = spec.n1; i < spec.n1 + spec.n2; ++i) second.push_back(i);
    pert_blocks.push_back(std::move(second));
    std::vector<int> third;
    for (int i = keep + spec.s1; i < spec.n1; ++i) third.push_back(i);
    for (int i = spec.n1 + spec.n2; i < n; ++i) third.push_back(i);
    pert_blocks.push_back(std::move(third));
    return {Partition::from_blocks(std::move(ref_blocks), n),
            Partition::from_blocks(std::move(pert_blocks), n)};
}

SpillRange classify_spill_range(const SpillSpec2Way& spec) {
    spec.validate();
    if (spec.s <= 0) return SpillRange::out_of_range;
    return spec.s < std::min(spec.n1, ceil_div(spec.n(), 2)) ? SpillRange::in_range
                                                             : SpillRange::out_of_range;
}

SpillRange classify_spill_range(const SpillSpec3Way& spec) {
    spec.validate();
    if (spec.s1 == 0 && spec.s2 == 0) return SpillRange::out_of_range;
    // one empty spill set: the untouched block is a spectator and the two-way
    // rule applies (symmetrically when the roles of the targets swap)
    if (spec.s2 == 0) return classify_spill_range(SpillSpec2Way{spec.n1, spec.n2, spec.s1});
    if (spec.s1 == 0) return classify_spill_range(SpillSpec2Way{spec.n1, spec.n3, spec.s2});
    if (spec.s1 == spec.s2) {
        const int bound = std::min(ceil_div(2 * spec.n1 + spec.n2 + spec.n3, 6), ceil_div(spec.n1, 2));
        return spec.s1 < bound ? SpillRange::in_range : SpillRange::out_of_range;
    }
    // uneven spills with both sets nonempty are not covered by the analysis
    return SpillRange::unclassified;
}

bool deviation_valid_range(const SpillSpec2Way& spec) {
    return classify_spill_range(spec) == SpillRange::in_range;
}

bool deviation_valid_range(const SpillSpec3Way& spec) {
    return classify_spill_range(spec) == SpillRange::in_range;
}

}  // namespace clusterguard
