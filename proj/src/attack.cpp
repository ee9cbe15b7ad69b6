#include "clusterguard/attack.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "clusterguard/delta_measure.hpp"
#include "clusterguard/errors.hpp"
#include "clusterguard/solver.hpp"

namespace clusterguard {

namespace {

std::vector<std::pair<int, int>> resolve_support(const AttackConfig& atk, const Dataset& data) {
    if (!atk.support.empty()) {
        for (const auto& [row, col] : atk.support)
            if (row < 0 || row >= data.dim() || col < 0 || col >= data.n_samples())
                throw ValidationError("attack: support entry out of range");
        return atk.support;
    }
    std::vector<std::pair<int, int>> all;
    all.reserve(static_cast<size_t>(data.dim() * data.n_samples()));
    for (int r = 0; r < data.dim(); ++r)
        for (int c = 0; c < data.n_samples(); ++c) all.emplace_back(r, c);
    return all;
}

void validate_search_params(const AttackConfig& atk) {
    if (atk.n_candidates < 1) throw ValidationError("attack: n_candidates must be positive");
    if (atk.n_rounds < 1) throw ValidationError("attack: n_rounds must be positive");
    if (!(atk.shrink > 0.0 && atk.shrink < 1.0))
        throw ValidationError("attack: shrink must lie in (0, 1)");
}

double default_ceiling(const AttackConfig& atk, const Dataset& data) {
    return atk.budget_hi > 0.0 ? atk.budget_hi : 10.0 * std::max(data.range(), 1.0);
}

struct SearchOutcome {
    Matrix eps;
    long long delta = 0;
    Partition partition_after;
    long long evaluations = 0;
    long long discarded = 0;
    double score = 0.0;
};

// Shared random-search engine. Candidates are drawn per round around the
// incumbent within the current radius on the allowed support, clipped to the
// Frobenius budget when one is given, and scored by the caller. The per-round
// incumbent update is a strict-improvement fold in candidate index order.
template <typename ScoreFn>
SearchOutcome random_search(const Dataset& data, const WeightMatrix& weights,
                            const SolverConfig& config, const AttackConfig& atk,
                            const Partition& before, double radius0, double budget,
                            ScoreFn&& score_fn) {
    const auto support = resolve_support(atk, data);
    std::mt19937_64 rng(atk.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    SearchOutcome out;
    out.eps = Matrix::Zero(data.dim(), data.n_samples());
    out.partition_after = before;
    out.delta = 0;
    out.score = score_fn(0, 0.0);

    double radius = radius0;
    for (int round = 0; round < atk.n_rounds; ++round) {
        // all draws of a round sample around the incumbent the round started
        // with; improvements only take effect at the next round
        const Matrix center = out.eps;
        for (int c = 0; c < atk.n_candidates; ++c) {
            Matrix candidate = center;
            for (const auto& [row, col] : support) candidate(row, col) += radius * unit(rng);
            if (budget >= 0.0) {
                const double nrm = candidate.norm();
                if (nrm > budget) candidate *= (budget == 0.0 ? 0.0 : budget / nrm);
            }
            ++out.evaluations;
            ClusterSolution lower;
            try {
                lower = solve(Dataset(data.values + candidate), weights, config);
            } catch (const ConvergenceError&) {
                ++out.discarded;
                continue;
            }
            const long long d = delta(before, lower.partition, static_cast<int>(data.n_samples()));
            const double nrm = candidate.norm();
            const double s = score_fn(d, nrm);
            // among equally scoring flips, ties go to the larger perturbation so
            // the incumbent drifts toward the budget boundary, where clipped
            // candidates can reach partition flips sitting exactly on the sphere
            if (s > out.score || (s == out.score && d > 0 && nrm > out.eps.norm())) {
                out.score = s;
                out.delta = d;
                out.eps = std::move(candidate);
                out.partition_after = lower.partition;
            }
        }
        radius *= atk.shrink;
    }
    return out;
}

AttackReport to_report(SearchOutcome&& outcome, const Partition& before,
                       bool success) {
    AttackReport report;
    report.eps = Perturbation(std::move(outcome.eps));
    report.eps_norm = report.eps.frobenius_norm();
    report.delta_achieved = outcome.delta;
    report.partition_before = before;
    report.partition_after = std::move(outcome.partition_after);
    report.evaluations = outcome.evaluations;
    report.discarded = outcome.discarded;
    report.success = success;
    return report;
}

}  // namespace

AttackReport attack_max_deviation(const Dataset& data, const WeightMatrix& weights,
                                  const SolverConfig& config, const AttackConfig& atk) {
    validate_search_params(atk);
    if (atk.budget < 0.0) throw ValidationError("attack: budget must be nonnegative");
    const Partition before = solve(data, weights, config).partition;

    if (atk.budget == 0.0) {
        SearchOutcome empty;
        empty.eps = Matrix::Zero(data.dim(), data.n_samples());
        empty.partition_after = before;
        return to_report(std::move(empty), before, false);
    }

    auto outcome = random_search(data, weights, config, atk, before, atk.budget, atk.budget,
                                 [](long long d, double) { return static_cast<double>(d); });
    const bool success = outcome.delta > 0;
    return to_report(std::move(outcome), before, success);
}

AttackReport attack_min_norm(const Dataset& data, const WeightMatrix& weights,
                             const SolverConfig& config, const AttackConfig& atk) {
    validate_search_params(atk);
    if (atk.target_delta <= 0.0) throw ValidationError("attack: target_delta must be positive");

    const long long n = data.n_samples();
    const double ceiling = default_ceiling(atk, data);

    auto run_budget = [&](double budget) {
        AttackConfig trial = atk;
        trial.budget = budget;
        return attack_max_deviation(data, weights, config, trial);
    };

    // delta never exceeds the ordered-pair count, so some targets are hopeless
    if (atk.target_delta > static_cast<double>(n * n - n)) {
        AttackReport report = run_budget(0.0);
        report.success = false;
        return report;
    }

    AttackReport best = run_budget(ceiling);
    if (static_cast<double>(best.delta_achieved) < atk.target_delta) {
        best.success = false;
        return best;
    }

    double lo = 0.0;
    double hi = ceiling;
    while (hi - lo > 1e-3 * hi) {
        const double mid = 0.5 * (lo + hi);
        AttackReport trial = run_budget(mid);
        best.evaluations += trial.evaluations;
        best.discarded += trial.discarded;
        if (static_cast<double>(trial.delta_achieved) >= atk.target_delta) {
            hi = mid;
            trial.evaluations = best.evaluations;
            trial.discarded = best.discarded;
            best = std::move(trial);
        } else {
            lo = mid;
        }
    }
    best.success = true;
    return best;
}

AttackReport attack_penalized(const Dataset& data, const WeightMatrix& weights,
                              const SolverConfig& config, const AttackConfig& atk) {
    validate_search_params(atk);
    if (atk.penalty_rho <= 0.0) throw ValidationError("attack: penalty_rho must be positive");
    const Partition before = solve(data, weights, config).partition;
    const double rho = atk.penalty_rho;
    auto outcome = random_search(
        data, weights, config, atk, before, default_ceiling(atk, data), -1.0,
        [rho](long long d, double nrm) { return static_cast<double>(d) - rho * nrm; });
    const bool success = outcome.delta > 0;
    return to_report(std::move(outcome), before, success);
}

CalmnessEstimate calmness_probe(const Dataset& data, const WeightMatrix& weights,
                                const SolverConfig& config, const std::vector<double>& radii,
                                int samples_per_radius, std::uint64_t seed) {
    if (radii.empty()) throw ValidationError("calmness_probe: need at least one radius");
    for (size_t i = 0; i < radii.size(); ++i) {
        if (radii[i] <= 0.0) throw ValidationError("calmness_probe: radii must be positive");
        if (i > 0 && radii[i] <= radii[i - 1])
            throw ValidationError("calmness_probe: radii must be strictly ascending");
    }
    if (samples_per_radius < 1) throw ValidationError("calmness_probe: need at least one sample");

    const Matrix y_base = solve(data, weights, config).y;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    CalmnessEstimate est;
    est.radii = radii;
    est.ratios.assign(radii.size(), 0.0);
    for (size_t ri = 0; ri < radii.size(); ++ri) {
        const double r = radii[ri];
        for (int s = 0; s < samples_per_radius; ++s) {
            Matrix direction(data.dim(), data.n_samples());
            for (Eigen::Index a = 0; a < direction.rows(); ++a)
                for (Eigen::Index b = 0; b < direction.cols(); ++b) direction(a, b) = gauss(rng);
            const double nrm = direction.norm();
            if (nrm == 0.0) continue;  // essentially impossible; skip rather than divide
            const Matrix eps = (r / nrm) * direction;
            try {
                const Matrix y = solve(Dataset(data.values + eps), weights, config).y;
                est.ratios[ri] = std::max(est.ratios[ri], (y - y_base).norm() / eps.norm());
            } catch (const ConvergenceError&) {
                ++est.samples_skipped;
            }
        }
        est.modulus_estimate = std::max(est.modulus_estimate, est.ratios[ri]);
    }
    return est;
}

}  // namespace clusterguard
