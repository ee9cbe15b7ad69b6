#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "clusterguard/errors.hpp"
#include "clusterguard/io.hpp"

using namespace clusterguard;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("clusterguard-test-" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }

    std::string file(const std::string& name, const std::string& content) const {
        const fs::path p = path / name;
        std::ofstream out(p);
        out << content;
        return p.string();
    }
    std::string slot(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Partition random_partition(std::mt19937_64& rng, int n) {
    std::vector<std::vector<int>> blocks;
    for (int i = 0; i < n; ++i) {
        if (blocks.empty() || rng() % 3 == 0)
            blocks.push_back({i});
        else
            blocks[rng() % blocks.size()].push_back(i);
    }
    return Partition::from_blocks(std::move(blocks), n);
}

}  // namespace

TEST_CASE("load_dataset shapes") {
    TempDir tmp;
    const Dataset col = load_dataset(tmp.file("col.csv", "0\n2\n10\n14\n"));
    CHECK(col.dim() == 1);
    CHECK(col.n_samples() == 4);
    CHECK(col.values(0, 2) == 10.0);

    const Dataset wide = load_dataset(tmp.file("wide.csv", "1,2\n3,4\n5,6\n"));
    CHECK(wide.dim() == 2);
    CHECK(wide.n_samples() == 3);
    CHECK(wide.values(1, 2) == 6.0);

    const Dataset headed = load_dataset(tmp.file("h.csv", "x,y\n1,2\n3,4\n"), true);
    CHECK(headed.n_samples() == 2);
}

TEST_CASE("load_dataset parse errors carry line numbers") {
    TempDir tmp;
    CHECK_THROWS_AS(load_dataset(tmp.file("empty.csv", "")), ValidationError);
    CHECK_THROWS_AS(load_dataset(tmp.slot("missing.csv")), ValidationError);
    CHECK_THROWS_AS(load_dataset(tmp.file("one.csv", "1,2\n")), ValidationError);

    try {
        load_dataset(tmp.file("ragged.csv", "1,2\n3\n"));
        FAIL("expected ragged-row error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    try {
        load_dataset(tmp.file("alpha.csv", "1,2\n3,zap\n"));
        FAIL("expected non-numeric error");
    } catch (const ValidationError& e) {
        const std::string what = e.what();
        CHECK(what.find("line 2") != std::string::npos);
        CHECK(what.find("zap") != std::string::npos);
    }
}

TEST_CASE("perturbation files must match the dataset shape") {
    TempDir tmp;
    const Dataset data = load_dataset(tmp.file("d.csv", "0\n2\n10\n14\n"));
    const Perturbation eps = load_perturbation(tmp.file("e.csv", "0\n0\n7\n0\n"), data);
    CHECK(eps.eps(0, 2) == 7.0);
    CHECK_THROWS_AS(load_perturbation(tmp.file("short.csv", "0\n1\n2\n"), data), ValidationError);
}

TEST_CASE("uniform and file weights") {
    TempDir tmp;
    const Dataset data = load_dataset(tmp.file("d.csv", "0\n2\n10\n14\n"));
    const WeightMatrix uniform = build_weights(WeightSpec::parse("uniform", 0, 0), data);
    CHECK(uniform.w == WeightMatrix::uniform(4).w);

    const std::string good = tmp.file("w.csv", "0,1,0,0\n1,0,2,0\n0,2,0,1\n0,0,1,0\n");
    const WeightMatrix from_file = build_weights(WeightSpec::parse(good, 0, 0), data);
    CHECK(from_file.w(1, 2) == 2.0);

    const std::string asym = tmp.file("asym.csv", "0,1,0,0\n2,0,0,0\n0,0,0,0\n0,0,0,0\n");
    CHECK_THROWS_AS(build_weights(WeightSpec::parse(asym, 0, 0), data), ValidationError);
    const std::string wrong_size = tmp.file("sz.csv", "0,1\n1,0\n");
    CHECK_THROWS_AS(build_weights(WeightSpec::parse(wrong_size, 0, 0), data), ValidationError);
}

TEST_CASE("gaussian knn weights") {
    TempDir tmp;
    const Dataset data = load_dataset(tmp.file("d.csv", "0\n2\n10\n14\n"));

    // k = n - 1 with phi = 0 recovers the uniform graph
    const WeightMatrix full = build_weights(WeightSpec::parse("gaussian-knn", 3, 0.0), data);
    CHECK(full.w == WeightMatrix::uniform(4).w);

    const WeightMatrix near = build_weights(WeightSpec::parse("gaussian-knn", 1, 0.1), data);
    CHECK(near.w(0, 1) == doctest::Approx(std::exp(-0.1 * 4.0)));  // 0 and 2 are neighbours
    CHECK(near.w(0, 2) == 0.0);
    CHECK(near.w == near.w.transpose());

    CHECK_THROWS_AS(build_weights(WeightSpec::parse("gaussian-knn", 0, 0.1), data),
                    ValidationError);
    CHECK_THROWS_AS(build_weights(WeightSpec::parse("gaussian-knn", 4, 0.1), data),
                    ValidationError);
}

TEST_CASE("partition json uses one-based indices and round-trips") {
    const Partition p = Partition::from_blocks({{2, 3}, {0, 1}}, 4);
    const Json j = partition_to_json(p);
    CHECK(j["n"] == 4);
    CHECK(j["blocks"][0][0] == 1);  // canonical order, 1-based
    CHECK(j["blocks"][1][0] == 3);
    CHECK(partition_from_json(j) == p);

    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const Partition q = random_partition(rng, 2 + static_cast<int>(rng() % 10));
        CHECK(partition_from_json(partition_to_json(q)) == q);
    }
}

TEST_CASE("partition json rejects malformed input") {
    CHECK_THROWS_AS(partition_from_json(Json::parse(R"({"blocks": []})")), ValidationError);
    CHECK_THROWS_AS(partition_from_json(Json::parse(R"({"n": 2})")), ValidationError);
    CHECK_THROWS_AS(partition_from_json(Json::parse(R"({"n": 2, "blocks": [[1]]})")),
                    ValidationError);
    CHECK_THROWS_AS(partition_from_json(Json::parse(R"({"n": 2, "blocks": [[1, 1], [2]]})")),
                    ValidationError);
    TempDir tmp;
    CHECK_THROWS_AS(load_partition(tmp.file("bad.json", "{nope")), ValidationError);
}

TEST_CASE("solve command writes a full report") {
    TempDir tmp;
    const std::string data = tmp.file("d.csv", "0\n2\n10\n14\n");
    const std::string out = tmp.slot("report.json");
    const int code = run_command({"solve", "--data", data, "--gamma", "2", "--out", out});
    CHECK(code == 0);
    const Json report = Json::parse(slurp(out));
    CHECK(report["command"] == "solve");
    CHECK(report.size() == 4);  // command, config, result, diagnostics
    CHECK(report["config"]["gamma"] == 2.0);
    CHECK(report["result"]["partition"]["blocks"][0] == Json::array({1, 2}));
    CHECK(report["result"]["cluster_means"][0][0] == 1.0);
    CHECK(report["result"]["cluster_means"][1][0] == 12.0);
}

TEST_CASE("certify command reproduces the certificate numbers") {
    TempDir tmp;
    const std::string data = tmp.file("d.csv", "0\n2\n10\n14\n");
    const std::string eps = tmp.file("e.csv", "0\n0\n7\n0\n");
    const std::string out = tmp.slot("certify.json");
    CHECK(run_command({"certify", "--data", data, "--eps", eps, "--gamma", "2", "--out", out}) ==
          0);
    const Json report = Json::parse(slurp(out));
    CHECK(report["result"]["guaranteed"] == true);
    CHECK(report["result"]["gamma_min"] == 1.5);
    CHECK(report["result"]["gamma_max"] == 3.625);
}

TEST_CASE("delta command compares stored partitions") {
    TempDir tmp;
    const std::string ref = tmp.file("ref.json", R"({"n": 5, "blocks": [[1,2,3,4],[5]]})");
    const std::string pert = tmp.file("pert.json", R"({"n": 5, "blocks": [[1,2,3],[4,5]]})");
    const std::string out = tmp.slot("delta.json");
    CHECK(run_command({"delta", "--ref", ref, "--pert", pert, "--out", out}) == 0);
    CHECK(Json::parse(slurp(out))["result"]["delta"] == 8);

    const std::string other = tmp.file("other.json", R"({"n": 3, "blocks": [[1,2,3]]})");
    CHECK(run_command({"delta", "--ref", ref, "--pert", other, "--out", out}) == 1);
}

TEST_CASE("exit codes distinguish failure modes") {
    TempDir tmp;
    const std::string data = tmp.file("d.csv", "0\n2\n10\n14\n");
    CHECK(run_command({"solve", "--data", tmp.slot("nope.csv"), "--gamma", "2"}) == 1);
    CHECK(run_command({"solve", "--data", data, "--gamma", "2", "--wat"}) == 1);
    CHECK(run_command({"nonsense"}) == 1);
    CHECK(run_command({}) == 1);
    CHECK(run_command({"solve", "--data", data, "--gamma", "2", "--max-iter", "5", "--out",
                       tmp.slot("x.json")}) == 2);
    CHECK(run_command({"attack-bl2", "--data", data, "--gamma", "2", "--target-delta", "100",
                       "--candidates", "4", "--rounds", "2", "--out", tmp.slot("y.json")}) == 3);
}

TEST_CASE("reports are byte-for-byte deterministic") {
    TempDir tmp;
    const std::string data = tmp.file("d.csv", "0\n2\n10\n14\n");
    const std::string a = tmp.slot("a.json");
    const std::string b = tmp.slot("b.json");
    const std::vector<std::string> solve_args = {"solve", "--data", data, "--gamma", "2"};

    auto with_out = [](std::vector<std::string> args, const std::string& out) {
        args.push_back("--out");
        args.push_back(out);
        return args;
    };
    CHECK(run_command(with_out(solve_args, a)) == 0);
    CHECK(run_command(with_out(solve_args, b)) == 0);
    CHECK(slurp(a) == slurp(b));

    const std::vector<std::string> attack_args = {
        "attack-bl1", "--data", data,         "--gamma",  "2",   "--budget", "14",
        "--support",  "1,3",    "--candidates", "16",     "--rounds", "6",    "--seed", "9"};
    CHECK(run_command(with_out(attack_args, a)) == 0);
    CHECK(run_command(with_out(attack_args, b)) == 0);
    CHECK(slurp(a) == slurp(b));
    const Json report = Json::parse(slurp(a));
    CHECK(report["result"]["delta"] == 6);
}

TEST_CASE("seed falls back to the environment variable") {
    TempDir tmp;
    const std::string data = tmp.file("d.csv", "0\n2\n10\n14\n");
    const std::string a = tmp.slot("a.json");
    const std::string b = tmp.slot("b.json");
    const std::vector<std::string> base = {"attack-bl1", "--data", data,    "--gamma",
                                           "2",          "--budget", "5",   "--support",
                                           "1,3",        "--candidates", "8", "--rounds", "3"};
    auto with = [&](std::vector<std::string> args, std::initializer_list<std::string> extra,
                    const std::string& out) {
        args.insert(args.end(), extra);
        args.push_back("--out");
        args.push_back(out);
        return args;
    };

    ::setenv("CLUSTER_GUARD_SEED", "31", 1);
    CHECK(run_command(with(base, {}, a)) == 0);
    ::unsetenv("CLUSTER_GUARD_SEED");
    CHECK(run_command(with(base, {"--seed", "31"}, b)) == 0);
    CHECK(slurp(a) == slurp(b));
}

TEST_CASE("attack-pen command reports the penalized score") {
    TempDir tmp;
    const std::string data = tmp.file("d.csv", "0\n2\n10\n14\n");
    const std::string out = tmp.slot("pen.json");
    CHECK(run_command({"attack-pen", "--data", data, "--gamma", "2", "--rho", "0.01", "--support",
                       "1,3", "--budget-hi", "14", "--candidates", "16", "--rounds", "6", "--seed",
                       "4", "--out", out}) == 0);
    const Json report = Json::parse(slurp(out));
    CHECK(report["result"]["delta"] == 6);
    const double score = report["result"]["score"].get<double>();
    const double expected = 6.0 - 0.01 * report["result"]["eps_norm"].get<double>();
    CHECK(score == doctest::Approx(expected));
}

TEST_CASE("robust-interval command reports both endpoint forms") {
    TempDir tmp;
    const std::string data = tmp.file("d.csv", "0\n2\n10\n14\n");
    const std::string out = tmp.slot("ri.json");
    CHECK(run_command({"robust-interval", "--data", data, "--gamma", "2", "--col", "3", "--out",
                       out}) == 0);
    const Json report = Json::parse(slurp(out));
    CHECK(report["result"]["interval"]["lo"].get<double>() == doctest::Approx(-1.2).epsilon(1e-4));
    CHECK(report["result"]["interval"]["hi"].get<double>() ==
          doctest::Approx(38.0 / 3.0).epsilon(1e-4));
    CHECK(report["result"]["entry_interval"]["lo"].get<double>() ==
          doctest::Approx(8.8).epsilon(1e-4));

    // fixed-gamma mode tightens the interval around the chosen gamma
    const std::string out2 = tmp.slot("ri2.json");
    CHECK(run_command({"robust-interval", "--data", data, "--gamma", "2.6", "--col", "3", "--mode",
                       "fixed-gamma", "--out", out2}) == 0);
    const Json fixed = Json::parse(slurp(out2));
    CHECK(fixed["result"]["interval"]["lo"].get<double>() == doctest::Approx(-1.2).epsilon(1e-3));
    CHECK(fixed["result"]["interval"]["hi"].get<double>() == doctest::Approx(9.2).epsilon(1e-3));
}

TEST_CASE("calmness command emits ratios per radius") {
    TempDir tmp;
    const std::string data = tmp.file("d.csv", "0\n2\n10\n14\n");
    const std::string out = tmp.slot("calm.json");
    CHECK(run_command({"calmness", "--data", data, "--gamma", "0", "--radii", "0.5,1.0",
                       "--samples", "5", "--seed", "2", "--out", out}) == 0);
    const Json report = Json::parse(slurp(out));
    REQUIRE(report["result"]["ratios"].size() == 2);
    CHECK(report["result"]["modulus_estimate"].get<double>() == doctest::Approx(1.0));
}
