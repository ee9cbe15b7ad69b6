#include "clusterguard/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>

#include "clusterguard/attack.hpp"
#include "clusterguard/certificate.hpp"
#include "clusterguard/delta_measure.hpp"
#include "clusterguard/errors.hpp"
#include "clusterguard/solver.hpp"

namespace clusterguard {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

// Rows of doubles from a CSV file; remembers source line numbers for messages.
std::vector<std::vector<double>> read_csv(const std::string& path, bool header) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (header && line_no == 1) continue;
        if (trim(line).empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            const std::string text = trim(cell);
            try {
                size_t used = 0;
                const double value = std::stod(text, &used);
                if (used != text.size()) throw std::invalid_argument(text);
                row.push_back(value);
            } catch (const std::exception&) {
                throw ValidationError(path + ": line " + std::to_string(line_no) +
                                      ": non-numeric cell '" + text + "'");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ValidationError(path + ": line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(rows.front().size()) + " fields, got " +
                                  std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ValidationError(path + ": file contains no data rows");
    return rows;
}

Matrix rows_to_matrix(const std::vector<std::vector<double>>& rows) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < rows.front().size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

}  // namespace

Dataset load_dataset(const std::string& path, bool header) {
    const auto rows = read_csv(path, header);
    if (rows.size() < 2)
        throw ValidationError(path + ": need at least two samples, got " +
                              std::to_string(rows.size()));
    return Dataset(rows_to_matrix(rows).transpose());
}

Perturbation load_perturbation(const std::string& path, const Dataset& data, bool header) {
    const Matrix m = rows_to_matrix(read_csv(path, header)).transpose();
    if (m.rows() != data.dim() || m.cols() != data.n_samples())
        throw ValidationError(path + ": perturbation shape does not match the dataset");
    return Perturbation(m);
}

WeightSpec WeightSpec::parse(const std::string& text, int k, double phi) {
    WeightSpec spec;
    if (text == "uniform") {
        spec.kind = Kind::uniform;
    } else if (text == "gaussian-knn") {
        spec.kind = Kind::gaussian_knn;
        spec.k = k;
        spec.phi = phi;
    } else {
        spec.kind = Kind::file;
        spec.path = text;
    }
    return spec;
}

WeightMatrix build_weights(const WeightSpec& spec, const Dataset& data) {
    const Eigen::Index n = data.n_samples();
    switch (spec.kind) {
        case WeightSpec::Kind::uniform:
            return WeightMatrix::uniform(n);
        case WeightSpec::Kind::file: {
            const Matrix m = rows_to_matrix(read_csv(spec.path, false));
            if (m.rows() != n || m.cols() != n)
                throw ValidationError(spec.path + ": weight matrix must be " + std::to_string(n) +
                                      "x" + std::to_string(n));
            return WeightMatrix(m);
        }
        case WeightSpec::Kind::gaussian_knn: {
            if (spec.k < 1 || spec.k > n - 1)
                throw ValidationError("gaussian-knn: k must lie in [1, n-1]");
            if (spec.phi < 0.0) throw ValidationError("gaussian-knn: phi must be nonnegative");
            Matrix sq_dist(n, n);
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j)
                    sq_dist(i, j) = (data.values.col(i) - data.values.col(j)).squaredNorm();
            Matrix w = Matrix::Zero(n, n);
            for (Eigen::Index i = 0; i < n; ++i) {
                std::vector<Eigen::Index> order;
                for (Eigen::Index j = 0; j < n; ++j)
                    if (j != i) order.push_back(j);
                std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
                    return sq_dist(i, a) < sq_dist(i, b);
                });
                for (int t = 0; t < spec.k; ++t) {
                    const Eigen::Index j = order[static_cast<size_t>(t)];
                    const double value = std::exp(-spec.phi * sq_dist(i, j));
                    w(i, j) = w(j, i) = value;  // symmetrized neighbourhood graph
                }
            }
            return WeightMatrix(std::move(w));
        }
    }
    throw ValidationError("build_weights: unknown weight spec");
}

Json partition_to_json(const Partition& partition) {
    Json j;
    j["n"] = partition.n;
    Json blocks = Json::array();
    for (const auto& block : partition.blocks) {
        Json b = Json::array();
        for (int idx : block) b.push_back(idx + 1);
        blocks.push_back(std::move(b));
    }
    j["blocks"] = std::move(blocks);
    return j;
}

Partition partition_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("n") || !j.contains("blocks"))
        throw ValidationError("partition json: expected object with 'n' and 'blocks'");
    if (!j["n"].is_number_integer()) throw ValidationError("partition json: 'n' must be an integer");
    const int n = j["n"].get<int>();
    if (!j["blocks"].is_array()) throw ValidationError("partition json: 'blocks' must be an array");
    std::vector<std::vector<int>> blocks;
    for (const auto& jb : j["blocks"]) {
        if (!jb.is_array()) throw ValidationError("partition json: each block must be an array");
        std::vector<int> block;
        for (const auto& idx : jb) {
            if (!idx.is_number_integer())
                throw ValidationError("partition json: indices must be integers");
            block.push_back(idx.get<int>() - 1);  // file format is 1-based
        }
        blocks.push_back(std::move(block));
    }
    return Partition::from_blocks(std::move(blocks), n);
}

Partition load_partition(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file: " + path);
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ValidationError(path + ": invalid json: " + e.what());
    }
    return partition_from_json(j);
}

namespace {

// --- command-line surface ---------------------------------------------------

Json matrix_as_samples(const Matrix& m) {
    // samples as rows, mirroring the CSV layout
    Json rows = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        Json row = Json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Json vectors_as_rows(const std::vector<Vector>& vs) {
    Json rows = Json::array();
    for (const auto& v : vs) {
        Json row = Json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i) row.push_back(v(i));
        rows.push_back(std::move(row));
    }
    return rows;
}

Norm parse_norm(const std::string& text) {
    if (text == "1") return Norm::l1;
    if (text == "2") return Norm::l2;
    if (text == "inf") return Norm::linf;
    throw ValidationError("invalid norm '" + text + "': expected 1, 2 or inf");
}

struct CommonOpts {
    std::string data_path;
    std::string weights_text = "uniform";
    int knn_k = 1;
    double knn_phi = 1.0;
    bool header = false;
    std::string out_path;
    std::string p_text = "2";
    SolverConfig solver;
    std::uint64_t seed = 0;
    bool seed_given = false;

    WeightSpec weight_spec() const { return WeightSpec::parse(weights_text, knn_k, knn_phi); }

    std::uint64_t resolved_seed() const {
        if (seed_given) return seed;
        if (const char* env = std::getenv("CLUSTER_GUARD_SEED")) {
            try {
                return std::stoull(env);
            } catch (const std::exception&) {
                throw ValidationError("CLUSTER_GUARD_SEED is not an integer");
            }
        }
        return 0;
    }

    Json config_json() const {
        Json cfg;
        cfg["data"] = data_path;
        cfg["weights"] = weights_text;
        if (weight_spec().kind == WeightSpec::Kind::gaussian_knn) {
            cfg["knn_k"] = knn_k;
            cfg["knn_phi"] = knn_phi;
        }
        cfg["header"] = header;
        cfg["gamma"] = solver.gamma;
        cfg["p"] = p_text;
        cfg["kkt_tol"] = solver.kkt_tol;
        cfg["fusion_tol"] = solver.fusion_tol;
        cfg["max_iter"] = solver.max_iter;
        cfg["admm_rho"] = solver.admm_rho;
        return cfg;
    }
};

void add_common_options(CLI::App* cmd, CommonOpts& opts, bool needs_gamma) {
    cmd->add_option("--data", opts.data_path, "dataset csv, one row per sample")->required();
    cmd->add_option("--weights", opts.weights_text,
                    "'uniform', 'gaussian-knn', or a csv weight matrix path");
    cmd->add_option("--knn-k", opts.knn_k, "gaussian-knn: neighbours per point");
    cmd->add_option("--knn-phi", opts.knn_phi, "gaussian-knn: kernel width parameter");
    cmd->add_flag("--header", opts.header, "skip the first csv line");
    auto* gamma = cmd->add_option("--gamma", opts.solver.gamma, "fusion penalty weight");
    if (needs_gamma) gamma->required();
    cmd->add_option("--p", opts.p_text, "penalty norm: 1, 2 or inf");
    cmd->add_option("--kkt-tol", opts.solver.kkt_tol, "solver stationarity tolerance");
    cmd->add_option("--fusion-tol", opts.solver.fusion_tol, "relative centroid fusion tolerance");
    cmd->add_option("--max-iter", opts.solver.max_iter, "solver iteration cap");
    cmd->add_option("--admm-rho", opts.solver.admm_rho, "augmented Lagrangian step");
    cmd->add_option("--out", opts.out_path, "write the json report here instead of stdout");
    cmd->add_option("--seed", opts.seed, "rng seed (falls back to CLUSTER_GUARD_SEED)")
        ->each([&opts](const std::string&) { opts.seed_given = true; });
}

void add_attack_options(CLI::App* cmd, AttackConfig& atk, std::vector<std::string>& support_text) {
    cmd->add_option("--support", support_text,
                    "restrict the perturbation to 'row,col' entries (1-based, repeatable)");
    cmd->add_option("--candidates", atk.n_candidates, "candidate draws per round");
    cmd->add_option("--rounds", atk.n_rounds, "search rounds");
    cmd->add_option("--shrink", atk.shrink, "radius shrink factor per round");
}

std::vector<std::pair<int, int>> parse_support(const std::vector<std::string>& entries) {
    std::vector<std::pair<int, int>> support;
    for (const auto& text : entries) {
        const auto comma = text.find(',');
        if (comma == std::string::npos)
            throw ValidationError("invalid --support entry '" + text + "': expected row,col");
        try {
            const int row = std::stoi(trim(text.substr(0, comma)));
            const int col = std::stoi(trim(text.substr(comma + 1)));
            support.emplace_back(row - 1, col - 1);
        } catch (const std::exception&) {
            throw ValidationError("invalid --support entry '" + text + "': expected row,col");
        }
    }
    return support;
}

std::vector<double> parse_radii(const std::string& text) {
    std::vector<double> radii;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            radii.push_back(std::stod(trim(cell)));
        } catch (const std::exception&) {
            throw ValidationError("invalid --radii entry '" + cell + "'");
        }
    }
    return radii;
}

void emit_report(const CommonOpts& opts, Json report) {
    const std::string text = report.dump(2) + "\n";
    if (opts.out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(opts.out_path);
        if (!out) throw ValidationError("cannot open output file: " + opts.out_path);
        out << text;
    }
}

Json attack_result_json(const AttackReport& report) {
    Json result;
    result["success"] = report.success;
    result["delta"] = report.delta_achieved;
    result["eps_norm"] = report.eps_norm;
    result["eps"] = matrix_as_samples(report.eps.eps);
    result["partition_before"] = partition_to_json(report.partition_before);
    result["partition_after"] = partition_to_json(report.partition_after);
    return result;
}

Json interval_json(double lo, double hi, bool empty) {
    Json j;
    j["empty"] = empty;
    if (!empty) {
        j["lo"] = lo;
        j["hi"] = hi;
    }
    return j;
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
    CLI::App app{"convex clustering with perturbation certificates and attack search"};
    app.require_subcommand(1);

    CommonOpts opts;

    auto* cmd_solve = app.add_subcommand("solve", "cluster a dataset");
    add_common_options(cmd_solve, opts, true);

    auto* cmd_certify = app.add_subcommand(
        "certify", "check whether a perturbation provably keeps the clustering unchanged");
    add_common_options(cmd_certify, opts, true);
    std::string eps_path;
    cmd_certify->add_option("--eps", eps_path, "perturbation csv, dataset layout")->required();

    auto* cmd_robust =
        app.add_subcommand("robust-interval", "certified shift interval for one data entry");
    add_common_options(cmd_robust, opts, true);
    int ri_row = 1;
    int ri_col = 0;
    std::string ri_mode = "exists-gamma";
    RobustSearch ri_search;
    cmd_robust->add_option("--row", ri_row, "feature row of the entry (1-based)");
    cmd_robust->add_option("--col", ri_col, "sample column of the entry (1-based)")->required();
    cmd_robust->add_option("--mode", ri_mode, "exists-gamma or fixed-gamma");
    cmd_robust->add_option("--t-lo", ri_search.lo, "lower search bound (default -10x data range)");
    cmd_robust->add_option("--t-hi", ri_search.hi, "upper search bound (default +10x data range)");
    cmd_robust->add_option("--t-tol", ri_search.tol, "bisection tolerance on the shift");

    auto* cmd_delta = app.add_subcommand("delta", "deviation between two stored partitions");
    std::string ref_path;
    std::string pert_path;
    std::string delta_out;
    cmd_delta->add_option("--ref", ref_path, "reference partition json")->required();
    cmd_delta->add_option("--pert", pert_path, "perturbed partition json")->required();
    cmd_delta->add_option("--out", delta_out, "write the json report here instead of stdout");

    AttackConfig atk;
    std::vector<std::string> support_text;

    auto* cmd_bl1 = app.add_subcommand("attack-bl1", "maximize deviation under a budget");
    add_common_options(cmd_bl1, opts, true);
    add_attack_options(cmd_bl1, atk, support_text);
    cmd_bl1->add_option("--budget", atk.budget, "Frobenius budget on the perturbation")->required();

    auto* cmd_bl2 = app.add_subcommand("attack-bl2", "smallest perturbation reaching a deviation");
    add_common_options(cmd_bl2, opts, true);
    add_attack_options(cmd_bl2, atk, support_text);
    cmd_bl2->add_option("--target-delta", atk.target_delta, "required deviation")->required();
    cmd_bl2->add_option("--budget-hi", atk.budget_hi, "budget ceiling (default 10x data range)");

    auto* cmd_pen = app.add_subcommand("attack-pen", "penalized deviation-vs-norm search");
    add_common_options(cmd_pen, opts, true);
    add_attack_options(cmd_pen, atk, support_text);
    cmd_pen->add_option("--rho", atk.penalty_rho, "norm penalty weight")->required();
    cmd_pen->add_option("--budget-hi", atk.budget_hi, "sampling ceiling (default 10x data range)");

    auto* cmd_calm = app.add_subcommand("calmness", "empirical solution-drift probe");
    add_common_options(cmd_calm, opts, true);
    std::string radii_text = "0.001,0.01,0.1";
    int samples = 20;
    cmd_calm->add_option("--radii", radii_text, "comma-separated perturbation radii, ascending");
    cmd_calm->add_option("--samples", samples, "samples per radius");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        opts.solver.norm = parse_norm(opts.p_text);
        atk.seed = opts.resolved_seed();

        if (cmd_solve->parsed()) {
            const Dataset data = load_dataset(opts.data_path, opts.header);
            const WeightMatrix weights = build_weights(opts.weight_spec(), data);
            const ClusterSolution sol = solve(data, weights, opts.solver);
            Json report;
            report["command"] = "solve";
            report["config"] = opts.config_json();
            Json result;
            result["partition"] = partition_to_json(sol.partition);
            result["cluster_means"] = vectors_as_rows(sol.cluster_means);
            result["y"] = matrix_as_samples(sol.y);
            result["objective"] = objective(data, weights, opts.solver, sol.y);
            report["result"] = std::move(result);
            report["diagnostics"] = {{"iterations", sol.iterations},
                                     {"kkt_residual", sol.kkt_residual}};
            emit_report(opts, std::move(report));
            return 0;
        }

        if (cmd_certify->parsed()) {
            const Dataset data = load_dataset(opts.data_path, opts.header);
            const WeightMatrix weights = build_weights(opts.weight_spec(), data);
            const Perturbation eps = load_perturbation(eps_path, data, opts.header);
            const ClusterSolution reference = solve(data, weights, opts.solver);
            const CertifyResult certify = certify_unchanged(data, eps, weights, reference.partition,
                                                            opts.solver.gamma, opts.solver.norm);
            Json report;
            report["command"] = "certify";
            Json cfg = opts.config_json();
            cfg["eps"] = eps_path;
            report["config"] = std::move(cfg);
            Json result;
            result["guaranteed"] = certify.guaranteed;
            result["c1"] = certify.cert.c1;
            result["c2"] = certify.cert.c2;
            result["centroids_distinct"] = certify.cert.centroids_distinct;
            result["gamma_min"] = certify.cert.gamma_min;
            result["gamma_max"] = certify.cert.gamma_max;
            result["admissible"] = interval_json(certify.cert.admissible.lo,
                                                 certify.cert.admissible.hi,
                                                 certify.cert.admissible.empty);
            result["reference_partition"] = partition_to_json(reference.partition);
            report["result"] = std::move(result);
            report["diagnostics"] = {{"reference_iterations", reference.iterations},
                                     {"reference_kkt_residual", reference.kkt_residual}};
            emit_report(opts, std::move(report));
            return 0;
        }

        if (cmd_robust->parsed()) {
            const Dataset data = load_dataset(opts.data_path, opts.header);
            const WeightMatrix weights = build_weights(opts.weight_spec(), data);
            const ClusterSolution reference = solve(data, weights, opts.solver);
            RobustMode mode;
            if (ri_mode == "exists-gamma")
                mode = RobustMode::exists_gamma();
            else if (ri_mode == "fixed-gamma")
                mode = RobustMode::fixed(opts.solver.gamma);
            else
                throw ValidationError("invalid --mode '" + ri_mode + "'");
            const ScalarInterval interval =
                robust_interval(data, weights, reference.partition, ri_row - 1, ri_col - 1, mode,
                                opts.solver.norm, ri_search);
            Json report;
            report["command"] = "robust-interval";
            Json cfg = opts.config_json();
            cfg["row"] = ri_row;
            cfg["col"] = ri_col;
            cfg["mode"] = ri_mode;
            cfg["t_tol"] = ri_search.tol;
            report["config"] = std::move(cfg);
            Json result;
            result["interval"] = interval_json(interval.lo, interval.hi, interval.empty);
            if (!interval.empty) {
                const double base = data.values(ri_row - 1, ri_col - 1);
                result["entry_value"] = base;
                result["entry_interval"] = interval_json(base + interval.lo, base + interval.hi, false);
            }
            result["reference_partition"] = partition_to_json(reference.partition);
            report["result"] = std::move(result);
            report["diagnostics"] = Json::object();
            emit_report(opts, std::move(report));
            return 0;
        }

        if (cmd_delta->parsed()) {
            const Partition ref = load_partition(ref_path);
            const Partition pert = load_partition(pert_path);
            if (ref.n != pert.n)
                throw ValidationError("delta: partitions cover different numbers of points");
            Json report;
            report["command"] = "delta";
            report["config"] = {{"ref", ref_path}, {"pert", pert_path}};
            report["result"] = {{"delta", delta(ref, pert, ref.n)}};
            report["diagnostics"] = Json::object();
            opts.out_path = delta_out;
            emit_report(opts, std::move(report));
            return 0;
        }

        atk.support = parse_support(support_text);

        if (cmd_bl1->parsed() || cmd_bl2->parsed() || cmd_pen->parsed()) {
            const Dataset data = load_dataset(opts.data_path, opts.header);
            const WeightMatrix weights = build_weights(opts.weight_spec(), data);
            AttackReport report;
            std::string name;
            if (cmd_bl1->parsed()) {
                name = "attack-bl1";
                report = attack_max_deviation(data, weights, opts.solver, atk);
            } else if (cmd_bl2->parsed()) {
                name = "attack-bl2";
                report = attack_min_norm(data, weights, opts.solver, atk);
            } else {
                name = "attack-pen";
                report = attack_penalized(data, weights, opts.solver, atk);
            }
            Json out;
            out["command"] = name;
            Json cfg = opts.config_json();
            cfg["seed"] = atk.seed;
            cfg["candidates"] = atk.n_candidates;
            cfg["rounds"] = atk.n_rounds;
            cfg["shrink"] = atk.shrink;
            if (cmd_bl1->parsed()) cfg["budget"] = atk.budget;
            if (cmd_bl2->parsed()) {
                cfg["target_delta"] = atk.target_delta;
                cfg["budget_hi"] = atk.budget_hi;
            }
            if (cmd_pen->parsed()) {
                cfg["rho"] = atk.penalty_rho;
                cfg["budget_hi"] = atk.budget_hi;
            }
            if (!support_text.empty()) cfg["support"] = support_text;
            out["config"] = std::move(cfg);
            Json result = attack_result_json(report);
            if (cmd_pen->parsed())
                result["score"] = static_cast<double>(report.delta_achieved) -
                                  atk.penalty_rho * report.eps_norm;
            out["result"] = std::move(result);
            out["diagnostics"] = {{"evaluations", report.evaluations},
                                  {"discarded", report.discarded}};
            emit_report(opts, std::move(out));
            if (cmd_bl2->parsed() && !report.success) return 3;  // target unreachable
            return 0;
        }

        if (cmd_calm->parsed()) {
            const Dataset data = load_dataset(opts.data_path, opts.header);
            const WeightMatrix weights = build_weights(opts.weight_spec(), data);
            const std::vector<double> radii = parse_radii(radii_text);
            const CalmnessEstimate est =
                calmness_probe(data, weights, opts.solver, radii, samples, atk.seed);
            Json report;
            report["command"] = "calmness";
            Json cfg = opts.config_json();
            cfg["radii"] = radii;
            cfg["samples"] = samples;
            cfg["seed"] = atk.seed;
            report["config"] = std::move(cfg);
            report["result"] = {{"radii", est.radii},
                                {"ratios", est.ratios},
                                {"modulus_estimate", est.modulus_estimate}};
            report["diagnostics"] = {{"samples_skipped", est.samples_skipped}};
            emit_report(opts, std::move(report));
            return 0;
        }
    } catch (const ConvergenceError& e) {
        std::cerr << "error: " << e.what() << " (primal " << e.primal_residual << ", kkt "
                  << e.kkt_residual << ")\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const CertificateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace clusterguard
