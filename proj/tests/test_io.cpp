#include <catch2/catch_amalgamated.hpp>

#include "matweight/io.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

using namespace matweight;
namespace fs = std::filesystem;

namespace {

fs::path test_dir() {
    fs::path dir = fs::temp_directory_path() / "matweight_io_tests";
    fs::create_directories(dir);
    return dir;
}

MatrixWeightedGraph sample_network(std::uint64_t seed) {
    return assign_weights(gen_regular_ring(6, 4, 2), WeightPolicy::positive_definite(1.0, seed));
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

}  // namespace

TEST_CASE("network files round-trip bit for bit") {
    MatrixWeightedGraph g = sample_network(61);
    fs::path path = test_dir() / "net_roundtrip.json";
    write_network(path, g, json{{"label", "roundtrip"}});
    json metadata;
    MatrixWeightedGraph back = read_network(path, &metadata);
    REQUIRE(back.n() == g.n());
    REQUIRE(back.d() == g.d());
    REQUIRE(back.edges().size() == g.edges().size());
    for (std::size_t i = 0; i < g.edges().size(); ++i) {
        const Edge& a = g.edges()[i];
        const Edge& b = back.edges()[i];
        REQUIRE(a.from == b.from);
        REQUIRE(a.to == b.to);
        REQUIRE(std::memcmp(a.weight.data.data(), b.weight.data.data(),
                            a.weight.data.size() * sizeof(double)) == 0);
    }
    CHECK(metadata.at("label") == "roundtrip");
    CHECK(network_digest(back) == network_digest(g));
}

TEST_CASE("network digests are stable and content-sensitive") {
    MatrixWeightedGraph g = sample_network(62);
    std::string digest = network_digest(g);
    CHECK(digest == network_digest(g));
    CHECK(digest.size() == 16);
    CHECK(digest != network_digest(sample_network(63)));

    // a one-ulp change in a single weight entry must change the digest
    std::vector<Edge> edges = g.edges();
    edges[0].weight.data[0] = std::nextafter(edges[0].weight.data[0], 2.0);
    MatrixWeightedGraph perturbed(g.n(), g.d(), std::move(edges));
    CHECK(digest != network_digest(perturbed));
}

TEST_CASE("trace files carry the run verbatim") {
    MatrixWeightedGraph g = sample_network(64);
    double tau = default_tau(g);
    SimOptions opts;
    opts.policy_label = "pd";
    opts.net_digest = network_digest(g);
    RunTrace trace = simulate(g, tau, UpdateMode::asynchronous, 64, opts);
    fs::path path = test_dir() / "trace_roundtrip.csv";
    write_trace(path, trace, json{{"note", "roundtrip"}});

    TraceData data = read_trace(path);
    const json& m = data.manifest;
    CHECK(m.at("format") == "matweight-trace");
    CHECK(m.at("version") == 1);
    CHECK(m.at("net_digest") == opts.net_digest);
    CHECK(m.at("policy") == "pd");
    CHECK(m.at("n") == 6);
    CHECK(m.at("d") == 2);
    CHECK(m.at("tau").get<double>() == tau);
    CHECK(m.at("mode") == "async");
    CHECK(m.at("seed") == 64);
    CHECK(m.at("max_steps") == default_max_steps_async);
    CHECK(m.at("record_stride") == default_max_steps_async / 1000);
    CHECK(m.at("stop").at("window") == 6);
    CHECK(m.at("override_tau") == false);
    CHECK(m.at("steps_run") == trace.steps_run);
    CHECK(m.at("stop_reason") == "converged");
    CHECK(m.at("diverged") == false);
    CHECK(m.at("note") == "roundtrip");

    REQUIRE(data.samples.size() == trace.samples.size());
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        REQUIRE(data.samples[i].step == trace.samples[i].step);
        REQUIRE(data.samples[i].selected_agent == trace.samples[i].selected_agent);
        REQUIRE(data.samples[i].state.size() == trace.samples[i].state.size());
        // %.17g output parses back to the identical double
        REQUIRE(std::memcmp(data.samples[i].state.data(), trace.samples[i].state.data(),
                            data.samples[i].state.size() * sizeof(double)) == 0);
    }
    CHECK(data.samples.back().state == trace.final_state.x);

    SECTION("the header names every agent and dimension") {
        std::istringstream in(slurp(path));
        std::string line;
        std::getline(in, line);  // manifest
        std::getline(in, line);
        CHECK(line ==
              "step,selected_agent,agent1_dim1,agent1_dim2,agent2_dim1,agent2_dim2,agent3_dim1,"
              "agent3_dim2,agent4_dim1,agent4_dim2,agent5_dim1,agent5_dim2,agent6_dim1,agent6_dim2");
        long rows = 0;
        while (std::getline(in, line))
            if (!line.empty()) ++rows;
        CHECK(rows == static_cast<long>(trace.samples.size()));
    }
    SECTION("rendering the same trace twice is byte-identical") {
        CHECK(trace_to_string(trace) == trace_to_string(trace));
    }
}

TEST_CASE("malformed files are rejected with clear errors") {
    fs::path dir = test_dir();
    CHECK_THROWS_AS(read_network(dir / "no_such_file.json", nullptr), std::runtime_error);
    CHECK_THROWS_AS(read_trace(dir / "no_such_trace.csv"), std::runtime_error);

    fs::path bad_tag = dir / "bad_tag.json";
    write_file_atomic(bad_tag, "{\"format\": \"something-else\", \"version\": 1}\n");
    CHECK_THROWS_WITH(read_network(bad_tag, nullptr), Catch::Matchers::ContainsSubstring("format"));

    fs::path bad_version = dir / "bad_version.json";
    write_file_atomic(bad_version,
                      "{\"format\": \"matweight-net\", \"version\": 2, \"n\": 1, \"d\": 1, \"edges\": []}\n");
    CHECK_THROWS_WITH(read_network(bad_version, nullptr), Catch::Matchers::ContainsSubstring("version"));

    fs::path bad_weight = dir / "bad_weight.json";
    write_file_atomic(bad_weight,
                      "{\"format\": \"matweight-net\", \"version\": 1, \"n\": 2, \"d\": 2, \"edges\": "
                      "[{\"from\": 1, \"to\": 2, \"weight\": [1.0, 0.0]}]}\n");
    CHECK_THROWS_WITH(read_network(bad_weight, nullptr), Catch::Matchers::ContainsSubstring("weight"));

    fs::path empty_trace = dir / "empty_trace.csv";
    write_file_atomic(empty_trace, "");
    CHECK_THROWS_WITH(read_trace(empty_trace), Catch::Matchers::ContainsSubstring("empty"));

    fs::path no_manifest = dir / "no_manifest.csv";
    write_file_atomic(no_manifest, "step,selected_agent,agent1_dim1\n0,-1,0.5\n");
    CHECK_THROWS_WITH(read_trace(no_manifest), Catch::Matchers::ContainsSubstring("manifest"));

    fs::path short_row = dir / "short_row.csv";
    write_file_atomic(short_row,
                      "# manifest: {\"n\": 2, \"d\": 1}\nstep,selected_agent,agent1_dim1,agent2_dim1\n"
                      "0,-1,0.5\n");
    CHECK_THROWS_WITH(read_trace(short_row), Catch::Matchers::ContainsSubstring("wrong number"));
}

TEST_CASE("atomic writes replace existing content without leftovers") {
    fs::path path = test_dir() / "atomic.txt";
    write_file_atomic(path, "first\n");
    write_file_atomic(path, "second\n");
    CHECK(slurp(path) == "second\n");
    CHECK_FALSE(fs::exists(path.string() + ".tmp"));
}

TEST_CASE("reports and verdicts serialize with their full content") {
    LemmaReport report;
    report.lemma = "lemma7";
    report.pass = true;
    report.measured = {{"q_norm_final", 1.5e-9}};
    report.tolerances = {{"q_norm", 1e-8}};
    json rj = report_to_json(report);
    CHECK(rj.at("lemma") == "lemma7");
    CHECK(rj.at("pass") == true);
    CHECK(rj.at("precondition_met") == true);
    CHECK(rj.at("measured").at("q_norm_final").get<double>() == 1.5e-9);
    CHECK(rj.at("tolerances").at("q_norm").get<double>() == 1e-8);

    ConsensusVerdict verdict;
    verdict.kind = ConsensusKind::bipartite;
    verdict.consensus_vector = std::vector<double>{0.25, -0.5};
    verdict.partition = std::pair(std::vector<int>{1, 3}, std::vector<int>{2, 4});
    verdict.residual = 2e-8;
    verdict.steps_to_converge = 777;
    json vj = verdict_to_json(verdict);
    CHECK(vj.at("kind") == "Bipartite");
    CHECK(vj.at("consensus_vector") == std::vector<double>{0.25, -0.5});
    CHECK(vj.at("partition_v1") == std::vector<int>{1, 3});
    CHECK(vj.at("partition_v2") == std::vector<int>{2, 4});
    CHECK(vj.at("steps_to_converge") == 777);

    ConsensusVerdict bare;
    json bj = verdict_to_json(bare);
    CHECK(bj.at("kind") == "Undecided");
    CHECK_FALSE(bj.contains("consensus_vector"));
    CHECK_FALSE(bj.contains("partition_v1"));

    BalanceVerdict balance = structural_balance(
        assign_weights(gen_regular_ring(6, 4, 1), WeightPolicy::balanced({1, 3, 5}, {2, 4, 6}, 1.0, 65)));
    json balj = balance_to_json(balance);
    CHECK(balj.at("kind") == "Balanced");
    CHECK(balj.contains("v1"));
    CHECK(balj.contains("v2"));
}
