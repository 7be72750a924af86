// Command-line front end: network generation, simulation, trace analysis,
// property-suite verification, and the bundled replication studies.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "matweight/analysis.hpp"
#include "matweight/dynamics.hpp"
#include "matweight/graph.hpp"
#include "matweight/io.hpp"
#include "matweight/suites.hpp"
#include "matweight/weights.hpp"

namespace {

constexpr int exit_gen_fail = 2;
constexpr int exit_diverged = 3;
constexpr int exit_tau_range = 4;
constexpr int exit_inconsistent = 5;
constexpr int exit_suite_fail = 6;

using namespace matweight;
namespace fs = std::filesystem;

std::uint64_t env_default_seed() {
    const char* env = std::getenv("MATWEIGHT_SEED");
    if (!env || !*env) return 0;
    return std::strtoull(env, nullptr, 10);
}

std::vector<int> parse_agent_list(const std::string& text) {
    std::vector<int> out;
    std::istringstream in(text);
    std::string cell;
    while (std::getline(in, cell, ',')) {
        if (!cell.empty()) out.push_back(std::stoi(cell));
    }
    return out;
}

// Pairs are written "a-b,c-d".
std::vector<std::pair<int, int>> parse_pair_list(const std::string& text) {
    std::vector<std::pair<int, int>> out;
    std::istringstream in(text);
    std::string cell;
    while (std::getline(in, cell, ',')) {
        auto dash = cell.find('-');
        if (dash == std::string::npos) throw CLI::ValidationError("--flip", "expected pairs like 1-3,6-8");
        out.emplace_back(std::stoi(cell.substr(0, dash)), std::stoi(cell.substr(dash + 1)));
    }
    return out;
}

std::set<std::pair<int, int>> canonical_pairs(const MatrixWeightedGraph& g) {
    std::set<std::pair<int, int>> pairs;
    for (const Edge& e : g.edges()) {
        auto mm = std::minmax(e.from, e.to);
        pairs.insert({mm.first, mm.second});
    }
    return pairs;
}

struct PolicySpec {
    std::string name = "pd";
    std::vector<int> v1;
    std::vector<std::pair<int, int>> flips;
    double scale = 1.0;
};

// Resolves a named policy (plus optional pair flips) against a skeleton into
// a concrete weight policy.  Flips are applied to the base sign of each
// listed pair, so "balanced + flips" yields an unbalanced pattern.
WeightPolicy resolve_policy(const MatrixWeightedGraph& skeleton, const PolicySpec& spec,
                            std::uint64_t seed, std::vector<int>* v2_out = nullptr) {
    std::vector<int> v2;
    if (spec.name == "balanced") {
        std::set<int> v1_set(spec.v1.begin(), spec.v1.end());
        for (int i = 1; i <= skeleton.n(); ++i)
            if (!v1_set.count(i)) v2.push_back(i);
        if (v2_out) *v2_out = v2;
    }
    if (spec.flips.empty()) {
        if (spec.name == "pd") return WeightPolicy::positive_definite(spec.scale, seed);
        if (spec.name == "nd") return WeightPolicy::negative_definite(spec.scale, seed);
        if (spec.name == "balanced") return WeightPolicy::balanced(spec.v1, v2, spec.scale, seed);
        throw CLI::ValidationError("--policy", "unknown policy: " + spec.name);
    }
    std::set<int> v1_set(spec.v1.begin(), spec.v1.end());
    std::map<std::pair<int, int>, int> signs;
    for (const auto& pair : canonical_pairs(skeleton)) {
        int sign;
        if (spec.name == "pd") {
            sign = 1;
        } else if (spec.name == "nd") {
            sign = -1;
        } else if (spec.name == "balanced") {
            bool same = v1_set.count(pair.first) == v1_set.count(pair.second);
            sign = same ? 1 : -1;
        } else {
            throw CLI::ValidationError("--policy", "unknown policy: " + spec.name);
        }
        signs[pair] = sign;
    }
    for (const auto& flip : spec.flips) {
        auto mm = std::minmax(flip.first, flip.second);
        auto it = signs.find({mm.first, mm.second});
        if (it == signs.end())
            throw std::runtime_error("flip pair (" + std::to_string(flip.first) + "," +
                                     std::to_string(flip.second) + ") is not an edge");
        it->second = -it->second;
    }
    return WeightPolicy::pattern(signs, spec.scale, seed);
}

json policy_metadata(const PolicySpec& spec, std::uint64_t seed, const std::vector<int>& v2) {
    json meta{{"policy", spec.name}, {"weight_seed", seed}, {"scale", spec.scale}};
    if (!spec.v1.empty()) {
        meta["v1"] = spec.v1;
        meta["v2"] = v2;
    }
    if (!spec.flips.empty()) {
        json flips = json::array();
        for (const auto& f : spec.flips) flips.push_back({f.first, f.second});
        meta["flips"] = flips;
    }
    return meta;
}

int cmd_gen(const std::string& kind, int n, int k, int d, double radius, const fs::path& in_path,
            const PolicySpec& policy_spec, std::uint64_t seed, const fs::path& out) {
    try {
        MatrixWeightedGraph skeleton = [&] {
            if (kind == "ring") return gen_regular_ring(n, k, d);
            if (kind == "rgg") return gen_rgg(n, radius, d, mix_seed(seed, "rgg"));
            if (kind == "file") return read_network(in_path);
            throw std::runtime_error("unknown kind: " + kind);
        }();
        std::uint64_t weight_seed = mix_seed(seed, "weights");
        std::vector<int> v2;
        WeightPolicy policy = resolve_policy(skeleton, policy_spec, weight_seed, &v2);
        MatrixWeightedGraph g = assign_weights(skeleton, policy);
        if (!has_spanning_tree(g.skeleton()))
            throw std::runtime_error("generated network has no spanning tree");
        json meta = policy_metadata(policy_spec, weight_seed, v2);
        meta["generator"] = kind;
        meta["seed"] = seed;
        write_network(out, g, meta);
        StepSizeRange range = step_size_upper(g);
        std::cout << "wrote " << out.string() << "\n"
                  << "digest " << network_digest(g) << "\n"
                  << "step_size_upper " << format_double(range.upper) << "\n"
                  << "default_tau " << format_double(default_tau(range)) << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "gen failed: " << e.what() << "\n";
        return exit_gen_fail;
    }
}

StateEnsemble read_initial_state(const fs::path& path, int n, int d) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open initial-state file: " + path.string());
    std::vector<double> values;
    std::string token;
    while (in >> token) {
        std::istringstream cells(token);
        std::string cell;
        while (std::getline(cells, cell, ','))
            if (!cell.empty()) values.push_back(std::stod(cell));
    }
    return StateEnsemble(n, d, std::move(values));
}

int cmd_sim(const fs::path& net_path, const std::string& mode_name, std::optional<double> tau_opt,
            double tau_factor, bool override_tau, std::uint64_t seed, long max_steps, long stride,
            double delta_tol, long window, bool track, const fs::path& init_path,
            const fs::path& out) {
    json meta;
    MatrixWeightedGraph g = read_network(net_path, &meta);
    UpdateMode mode = mode_name == "sync" ? UpdateMode::synchronous : UpdateMode::asynchronous;
    StepSizeRange range = step_size_upper(g);
    double tau = tau_opt ? *tau_opt : tau_factor * range.upper;
    if (!(tau > 0.0 && tau < range.upper) && !override_tau) {
        std::cerr << "tau " << format_double(tau) << " outside the admissible range (0, "
                  << format_double(range.upper) << "); pass --override-tau to run anyway\n";
        return exit_tau_range;
    }
    SimOptions opts;
    opts.max_steps = max_steps;
    opts.record_stride = stride;
    opts.stop.delta_tol = delta_tol;
    opts.stop.window = window;
    opts.override_tau = override_tau;
    opts.policy_label = meta.value("policy", "");
    opts.net_digest = network_digest(g);
    if (!init_path.empty()) opts.initial = read_initial_state(init_path, g.n(), g.d());
    RunTrace trace = simulate(g, tau, mode, seed, opts);
    // The tracking flag rides in the manifest so analysis knows to replay
    // the per-step factors.
    json extra = track ? json{{"track_products", true}} : json::object();
    write_file_atomic(out, trace_to_string(trace, extra));
    std::cout << "wrote " << out.string() << "\n"
              << "steps " << trace.steps_run << "\n"
              << "stop_reason "
              << (trace.stop_reason == StopReason::converged   ? "converged"
                  : trace.stop_reason == StopReason::max_steps ? "max_steps"
                                                               : "diverged")
              << "\n";
    if (trace.diverged && !override_tau) return exit_diverged;
    return 0;
}

SimOptions options_from_manifest(const json& manifest) {
    SimOptions opts;
    opts.max_steps = manifest.value("max_steps", 0L);
    opts.record_stride = manifest.value("record_stride", 0L);
    opts.stop.delta_tol = manifest.at("stop").value("delta_tol", 1e-10);
    opts.stop.window = manifest.at("stop").value("window", 0L);
    opts.stop.overflow = manifest.at("stop").value("overflow", overflow_bound);
    opts.override_tau = manifest.value("override_tau", false);
    opts.policy_label = manifest.value("policy", "");
    opts.net_digest = manifest.value("net_digest", "");
    return opts;
}

int cmd_analyze(const fs::path& trace_path, const fs::path& net_path, const fs::path& out) {
    MatrixWeightedGraph g = read_network(net_path);
    TraceData data = read_trace(trace_path);
    std::string digest = network_digest(g);
    if (data.manifest.value("net_digest", "") != digest) {
        std::cerr << "network digest " << digest << " does not match the trace manifest\n";
        return exit_inconsistent;
    }
    if (data.samples.empty()) {
        std::cerr << "trace has no samples\n";
        return exit_inconsistent;
    }
    UpdateMode mode =
        data.manifest.value("mode", "async") == "sync" ? UpdateMode::synchronous : UpdateMode::asynchronous;
    double tau = data.manifest.at("tau").get<double>();
    std::uint64_t seed = data.manifest.at("seed").get<std::uint64_t>();

    // The trace stores strided samples only, so the run is replayed from its
    // manifest; determinism makes this exact and doubles as a consistency
    // check against the recorded final row.
    SimOptions opts = options_from_manifest(data.manifest);
    RunTrace trace = simulate(g, tau, mode, seed, opts);
    const std::vector<double>& recorded = data.samples.back().state;
    if (recorded != trace.final_state.x) {
        std::cerr << "replayed final state does not match the recorded trace\n";
        return exit_inconsistent;
    }

    ConsensusVerdict verdict = classify(trace);
    json report{{"command", "analyze"},
                {"net_digest", digest},
                {"manifest", data.manifest},
                {"verdict", verdict_to_json(verdict)},
                {"balance", balance_to_json(structural_balance(g))}};
    if (data.manifest.value("track_products", false) && mode == UpdateMode::asynchronous) {
        UpdateOperators ops = build_sync_operator(g, tau, !opts.override_tau);
        ProductTracker tracker = track_products(trace, ops);
        json lemmas = json::array();
        lemmas.push_back(report_to_json(verify_lemma6(tracker)));
        lemmas.push_back(report_to_json(verify_lemma7(tracker)));
        lemmas.push_back(report_to_json(verify_lemma8(tracker)));
        lemmas.push_back(report_to_json(verify_lemma9_10(tracker)));
        report["lemma_reports"] = lemmas;
        report["spanning_tree_time"] =
            tracker.spanning_tree_time ? json(*tracker.spanning_tree_time) : json(nullptr);
    }
    write_file_atomic(out, report.dump(2) + "\n");
    std::cout << "verdict " << to_string(verdict.kind) << "\n"
              << "wrote " << out.string() << "\n";
    return 0;
}

int cmd_verify(const std::string& suite, std::uint64_t seed, int trials, const fs::path& out) {
    std::vector<SuiteResult> results;
    if (suite == "lemma3" || suite == "all") results.push_back(run_lemma3_suite(trials > 0 ? trials : 100, seed));
    if (suite == "lemma4" || suite == "all") results.push_back(run_lemma4_suite(trials > 0 ? trials : 100, seed));
    if (suite == "spectra" || suite == "all") results.push_back(run_spectra_suite(trials > 0 ? trials : 20, seed));
    if (suite == "sync-zero" || suite == "all")
        results.push_back(run_sync_zero_suite(trials > 0 ? trials : 10, seed));
    if (results.empty()) {
        std::cerr << "unknown suite: " << suite << "\n";
        return 1;
    }
    bool all_pass = true;
    json entries = json::array();
    for (const SuiteResult& r : results) {
        all_pass = all_pass && r.ok();
        std::cout << r.suite << " " << r.passed << "/" << r.total << (r.ok() ? " pass" : " FAIL")
                  << "\n";
        entries.push_back(json{{"suite", r.suite},
                               {"total", r.total},
                               {"passed", r.passed},
                               {"failures", r.failures}});
    }
    if (!out.empty())
        write_file_atomic(out, json{{"command", "verify"}, {"seed", seed}, {"suites", entries}, {"all_pass", all_pass}}
                                       .dump(2) +
                                   "\n");
    return all_pass ? 0 : exit_suite_fail;
}

// Five-agent directed network: edges carry state from lower-numbered agents
// outward, so the graph is not strongly connected but keeps a spanning tree.
MatrixWeightedGraph five_agent_directed(std::uint64_t weight_seed) {
    const int d = 2;
    std::vector<std::pair<int, int>> pairs = {{2, 1}, {3, 1}, {3, 2}, {4, 2}, {4, 3}, {5, 3}, {5, 4}};
    std::vector<Edge> edges;
    for (const auto& p : pairs) {
        auto mm = std::minmax(p.first, p.second);
        DenseMatrix w = gen_definite(d, +1, 1.0, mix_seed(weight_seed, mm.first, mm.second));
        edges.push_back(Edge{p.first, p.second, std::move(w)});
    }
    return MatrixWeightedGraph(5, d, std::move(edges));
}

void write_dimension_csvs(const fs::path& dir, const std::string& stem, const RunTrace& trace,
                          const std::vector<int>& agents) {
    for (int k = 1; k <= trace.config.d; ++k) {
        std::ostringstream out;
        out << "step";
        for (int a : agents) out << ",agent" << a;
        out << "\n";
        for (const TraceSample& s : trace.samples) {
            out << s.step;
            for (int a : agents)
                out << "," << format_double(s.state[static_cast<std::size_t>(a - 1) * trace.config.d + (k - 1)]);
            out << "\n";
        }
        write_file_atomic(dir / (stem + "_dim" + std::to_string(k) + ".csv"), out.str());
    }
}

int cmd_replicate(int example, std::uint64_t seed, const fs::path& dir) {
    fs::create_directories(dir);
    std::string stem = "example" + std::to_string(example);
    json report{{"command", "replicate"}, {"example", example}, {"seed", seed}};
    std::vector<int> all_agents;

    auto run_and_report = [&](const MatrixWeightedGraph& g, double tau, UpdateMode mode,
                              std::uint64_t run_seed, SimOptions opts,
                              const std::vector<int>& csv_agents) {
        opts.net_digest = network_digest(g);
        RunTrace trace = simulate(g, tau, mode, run_seed, opts);
        write_trace(dir / (stem + ".trace.csv"), trace);
        write_dimension_csvs(dir, stem, trace, csv_agents);
        ConsensusVerdict verdict = classify(trace);
        report["verdict"] = verdict_to_json(verdict);
        report["steps"] = trace.steps_run;
        return verdict;
    };

    MatrixWeightedGraph ring = gen_regular_ring(10, 4, 3);
    std::uint64_t wseed = mix_seed(seed, "weights");
    all_agents.resize(10);
    for (int i = 0; i < 10; ++i) all_agents[static_cast<std::size_t>(i)] = i + 1;
    std::vector<int> odds = {1, 3, 5, 7, 9}, evens = {2, 4, 6, 8, 10};

    switch (example) {
        case 1: {
            MatrixWeightedGraph g = assign_weights(ring, WeightPolicy::positive_definite(1.0, wseed));
            write_network(dir / (stem + ".net.json"), g, {{"generator", "ring"}, {"policy", "pd"}});
            run_and_report(g, default_tau(g), UpdateMode::asynchronous, seed, {}, all_agents);
            report["expected"] = "Global";
            break;
        }
        case 2: {
            MatrixWeightedGraph g =
                assign_weights(ring, WeightPolicy::balanced(odds, evens, 1.0, wseed));
            write_network(dir / (stem + ".net.json"), g,
                          {{"generator", "ring"}, {"policy", "balanced"}, {"v1", odds}, {"v2", evens}});
            ConsensusVerdict v =
                run_and_report(g, default_tau(g), UpdateMode::asynchronous, seed, {}, all_agents);
            report["expected"] = "Bipartite";
            report["partition_recovered"] = verify_partition(v, odds, evens);
            break;
        }
        case 3: {
            MatrixWeightedGraph g = assign_weights(ring, WeightPolicy::negative_definite(1.0, wseed));
            write_network(dir / (stem + ".net.json"), g, {{"generator", "ring"}, {"policy", "nd"}});
            run_and_report(g, default_tau(g), UpdateMode::asynchronous, seed, {}, all_agents);
            report["expected"] = "Zero";
            break;
        }
        case 4: {
            MatrixWeightedGraph skeleton = gen_rgg(200, 0.4, 3, mix_seed(seed, "rgg"));
            MatrixWeightedGraph g = assign_weights(skeleton, WeightPolicy::positive_definite(1.0, wseed));
            write_network(dir / (stem + ".net.json"), g,
                          {{"generator", "rgg"}, {"policy", "pd"}, {"radius", 0.4}});
            run_and_report(g, default_tau(g), UpdateMode::asynchronous, seed, {}, {2, 97, 160, 198});
            report["expected"] = "Global";
            break;
        }
        case 5: {
            PolicySpec spec;
            spec.name = "balanced";
            spec.v1 = odds;
            spec.flips = {{1, 3}, {6, 8}};
            MatrixWeightedGraph g = assign_weights(ring, resolve_policy(ring, spec, wseed));
            write_network(dir / (stem + ".net.json"), g,
                          {{"generator", "ring"}, {"policy", "balanced+flips"}, {"flips", {{1, 3}, {6, 8}}}});
            run_and_report(g, default_tau(g), UpdateMode::asynchronous, seed, {}, all_agents);
            report["expected"] = "Zero";
            report["balance"] = balance_to_json(structural_balance(g));
            break;
        }
        case 6: {
            MatrixWeightedGraph g = assign_weights(ring, WeightPolicy::positive_definite(1.0, wseed));
            write_network(dir / (stem + ".net.json"), g, {{"generator", "ring"}, {"policy", "pd"}});
            double tau = default_tau(g);
            RunTrace first = simulate(g, tau, UpdateMode::asynchronous, seed);
            SimOptions opts;
            opts.initial = StateEnsemble(g.n(), g.d(), first.samples.front().state);
            opts.net_digest = network_digest(g);
            RunTrace second =
                simulate(g, tau, UpdateMode::asynchronous, mix_seed(seed, "second-path"), opts);
            write_trace(dir / (stem + "_pathA.trace.csv"), first);
            write_trace(dir / (stem + "_pathB.trace.csv"), second);
            write_dimension_csvs(dir, stem + "_pathA", first, all_agents);
            write_dimension_csvs(dir, stem + "_pathB", second, all_agents);
            ConsensusVerdict va = classify(first), vb = classify(second);
            double gap = 0.0;
            if (va.consensus_vector && vb.consensus_vector)
                for (std::size_t i = 0; i < va.consensus_vector->size(); ++i)
                    gap = std::max(gap, std::abs((*va.consensus_vector)[i] - (*vb.consensus_vector)[i]));
            report["verdict"] = verdict_to_json(va);
            report["verdict_second_path"] = verdict_to_json(vb);
            report["consensus_gap"] = gap;
            report["expected"] = "Global (both paths, different limits)";
            break;
        }
        case 7: {
            MatrixWeightedGraph g = assign_weights(ring, WeightPolicy::positive_definite(1.0, wseed));
            write_network(dir / (stem + ".net.json"), g, {{"generator", "ring"}, {"policy", "pd"}});
            SimOptions opts;
            opts.override_tau = true;
            opts.max_steps = 10000;
            run_and_report(g, 2.0 * step_size_upper(g).upper, UpdateMode::asynchronous, seed, opts,
                           all_agents);
            report["expected"] = "Diverged";
            break;
        }
        case 8: {
            MatrixWeightedGraph g = five_agent_directed(wseed);
            write_network(dir / (stem + ".net.json"), g,
                          {{"generator", "five-agent-directed"}, {"policy", "pd"}});
            std::vector<int> agents = {1, 2, 3, 4, 5};
            run_and_report(g, default_tau(g), UpdateMode::asynchronous, seed, {}, agents);
            report["expected"] = "Global";
            report["spanning_tree_root"] = *has_spanning_tree(g.skeleton());
            break;
        }
        default:
            std::cerr << "example id must be 1..8\n";
            return 1;
    }
    write_file_atomic(dir / (stem + ".report.json"), report.dump(2) + "\n");
    std::cout << "example " << example << " verdict "
              << report["verdict"]["kind"].get<std::string>() << "\n"
              << "wrote " << (dir / (stem + ".report.json")).string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"matrix-weighted vector consensus toolkit"};
    app.require_subcommand(1);
    std::uint64_t seed = env_default_seed();

    // gen
    auto* gen = app.add_subcommand("gen", "generate a weighted network file");
    std::string gen_kind;
    int gen_n = 10, gen_k = 4, gen_d = 3;
    double gen_radius = 0.4;
    std::string gen_in, gen_out = "network.json", gen_policy = "pd", gen_v1, gen_flip;
    double gen_scale = 1.0;
    gen->add_option("kind", gen_kind, "ring | rgg | file")->required();
    gen->add_option("--n", gen_n, "number of agents");
    gen->add_option("--k", gen_k, "ring degree (even)");
    gen->add_option("--d", gen_d, "state dimension");
    gen->add_option("--radius", gen_radius, "geometric threshold");
    gen->add_option("--in", gen_in, "skeleton network file (kind=file)");
    gen->add_option("--policy", gen_policy, "pd | nd | balanced");
    gen->add_option("--v1", gen_v1, "comma list of first-part agents (balanced)");
    gen->add_option("--flip", gen_flip, "pair list a-b,c-d whose sign is flipped");
    gen->add_option("--scale", gen_scale, "weight magnitude scale");
    gen->add_option("--seed", seed, "seed (default MATWEIGHT_SEED or 0)");
    gen->add_option("--out", gen_out, "output network path");

    // sim
    auto* sim = app.add_subcommand("sim", "simulate a run and write its trace");
    std::string sim_net, sim_mode = "async", sim_out = "trace.csv", sim_init;
    double sim_tau = 0.0, sim_tau_factor = 0.5, sim_delta_tol = 1e-10;
    long sim_steps = 0, sim_stride = 0, sim_window = 0;
    bool sim_override = false, sim_track = false;
    sim->add_option("--net", sim_net, "network file")->required();
    sim->add_option("--mode", sim_mode, "async | sync");
    auto* tau_opt = sim->add_option("--tau", sim_tau, "explicit step size");
    sim->add_option("--tau-factor", sim_tau_factor, "step size as a fraction of the upper bound");
    sim->add_flag("--override-tau", sim_override, "run even when tau is out of range");
    sim->add_option("--seed", seed, "seed (default MATWEIGHT_SEED or 0)");
    sim->add_option("--steps", sim_steps, "max steps (0 = default)");
    sim->add_option("--stride", sim_stride, "record stride (0 = auto)");
    sim->add_option("--delta-tol", sim_delta_tol, "stop tolerance on step deltas");
    sim->add_option("--window", sim_window, "quiet-step window (0 = auto)");
    sim->add_flag("--track-products", sim_track, "mark the trace for product-tracking analysis");
    sim->add_option("--init", sim_init, "initial-state file (n*d values)");
    sim->add_option("--out", sim_out, "output trace path");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "classify a trace and verify lemma properties");
    std::string an_trace, an_net, an_out = "report.json";
    analyze->add_option("--trace", an_trace, "trace file")->required();
    analyze->add_option("--net", an_net, "network file")->required();
    analyze->add_option("--out", an_out, "output report path");

    // verify
    auto* verify = app.add_subcommand("verify", "run a property suite");
    std::string ver_suite, ver_out;
    int ver_trials = 0;
    verify->add_option("suite", ver_suite, "lemma3 | lemma4 | spectra | sync-zero | all")->required();
    verify->add_option("--seed", seed, "seed (default MATWEIGHT_SEED or 0)");
    verify->add_option("--trials", ver_trials, "trial count (0 = suite default)");
    verify->add_option("--out", ver_out, "output report path");

    // replicate
    auto* replicate = app.add_subcommand("replicate", "rebuild a bundled study (1..8)");
    int rep_id = 0;
    std::string rep_out = "replication";
    replicate->add_option("id", rep_id, "study id, 1..8")->required();
    replicate->add_option("--seed", seed, "seed (default MATWEIGHT_SEED or 0)");
    replicate->add_option("--out", rep_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            PolicySpec spec;
            spec.name = gen_policy;
            spec.scale = gen_scale;
            if (!gen_v1.empty()) spec.v1 = parse_agent_list(gen_v1);
            if (!gen_flip.empty()) spec.flips = parse_pair_list(gen_flip);
            return cmd_gen(gen_kind, gen_n, gen_k, gen_d, gen_radius, gen_in, spec, seed, gen_out);
        }
        if (sim->parsed()) {
            std::optional<double> tau;
            if (tau_opt->count()) tau = sim_tau;
            return cmd_sim(sim_net, sim_mode, tau, sim_tau_factor, sim_override, seed, sim_steps,
                           sim_stride, sim_delta_tol, sim_window, sim_track, sim_init, sim_out);
        }
        if (analyze->parsed()) return cmd_analyze(an_trace, an_net, an_out);
        if (verify->parsed()) return cmd_verify(ver_suite, seed, ver_trials, ver_out);
        if (replicate->parsed()) return cmd_replicate(rep_id, seed, rep_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
