#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "matweight/analysis.hpp"
#include "matweight/dynamics.hpp"
#include "matweight/graph.hpp"

namespace matweight {

using json = nlohmann::json;

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Canonical textual form of a network: fixed key order, weights rendered
/// with %.17g so the digest survives re-serialization.
inline std::string canonical_network_string(const MatrixWeightedGraph& g) {
    std::ostringstream out;
    out << "matweight-net/1;n=" << g.n() << ";d=" << g.d() << ";edges=";
    for (const Edge& e : g.edges()) {
        out << e.from << "," << e.to << ":";
        for (std::size_t i = 0; i < e.weight.data.size(); ++i) {
            if (i) out << " ";
            out << format_double(e.weight.data[i]);
        }
        out << ";";
    }
    return out.str();
}

inline std::string network_digest(const MatrixWeightedGraph& g) {
    return hex64(fnv1a64(canonical_network_string(g)));
}

inline json network_to_json(const MatrixWeightedGraph& g, const json& metadata = json::object()) {
    json edges = json::array();
    for (const Edge& e : g.edges())
        edges.push_back({{"from", e.from}, {"to", e.to}, {"weight", e.weight.data}});
    return json{{"format", "matweight-net"}, {"version", 1},     {"n", g.n()},
                {"d", g.d()},               {"directed", true},  {"edges", std::move(edges)},
                {"metadata", metadata}};
}

inline MatrixWeightedGraph network_from_json(const json& j, json* metadata_out = nullptr) {
    if (!j.is_object() || j.value("format", "") != "matweight-net")
        throw std::runtime_error("network file: missing or wrong format tag");
    if (j.value("version", 0) != 1) throw std::runtime_error("network file: unsupported version");
    int n = j.at("n").get<int>();
    int d = j.at("d").get<int>();
    std::vector<Edge> edges;
    for (const json& je : j.at("edges")) {
        std::vector<double> w = je.at("weight").get<std::vector<double>>();
        if (w.size() != static_cast<std::size_t>(d) * d)
            throw std::runtime_error("network file: weight entry count does not match d*d");
        DenseMatrix m(d, d, std::move(w));
        edges.push_back(Edge{je.at("from").get<int>(), je.at("to").get<int>(), std::move(m)});
    }
    if (metadata_out) *metadata_out = j.value("metadata", json::object());
    return MatrixWeightedGraph(n, d, std::move(edges));
}

/// Writes content to a temporary sibling, then renames over the target.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
        out << content;
        if (!out.flush()) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline void write_network(const std::filesystem::path& path, const MatrixWeightedGraph& g,
                          const json& metadata = json::object()) {
    write_file_atomic(path, network_to_json(g, metadata).dump(2) + "\n");
}

inline MatrixWeightedGraph read_network(const std::filesystem::path& path,
                                        json* metadata_out = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open network file: " + path.string());
    json j;
    in >> j;
    return network_from_json(j, metadata_out);
}

inline json trace_manifest(const RunTrace& trace) {
    const TraceConfig& c = trace.config;
    return json{{"format", "matweight-trace"},
                {"version", 1},
                {"net_digest", c.net_digest},
                {"policy", c.policy},
                {"n", c.n},
                {"d", c.d},
                {"tau", c.tau},
                {"mode", c.mode == UpdateMode::asynchronous ? "async" : "sync"},
                {"seed", c.seed},
                {"max_steps", c.max_steps},
                {"record_stride", c.record_stride},
                {"stop", {{"delta_tol", c.stop.delta_tol}, {"window", c.stop.window}, {"overflow", c.stop.overflow}}},
                {"override_tau", c.override_tau},
                {"steps_run", trace.steps_run},
                {"stop_reason", trace.stop_reason == StopReason::converged   ? "converged"
                                : trace.stop_reason == StopReason::max_steps ? "max_steps"
                                                                             : "diverged"},
                {"diverged", trace.diverged}};
}

/// Trace file layout: one manifest line ("# manifest: {json}"), a CSV header,
/// then one row per recorded sample with full-precision state values.
inline std::string trace_to_string(const RunTrace& trace, const json& extra = json::object()) {
    std::ostringstream out;
    json manifest = trace_manifest(trace);
    for (const auto& item : extra.items()) manifest[item.key()] = item.value();
    out << "# manifest: " << manifest.dump() << "\n";
    out << "step,selected_agent";
    for (int i = 1; i <= trace.config.n; ++i)
        for (int k = 1; k <= trace.config.d; ++k) out << ",agent" << i << "_dim" << k;
    out << "\n";
    for (const TraceSample& s : trace.samples) {
        out << s.step << "," << s.selected_agent;
        for (double v : s.state) out << "," << format_double(v);
        out << "\n";
    }
    return out.str();
}

inline void write_trace(const std::filesystem::path& path, const RunTrace& trace,
                        const json& extra = json::object()) {
    write_file_atomic(path, trace_to_string(trace, extra));
}

struct TraceData {
    json manifest;
    std::vector<TraceSample> samples;
};

inline TraceData read_trace(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open trace file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("trace file is empty: " + path.string());
    const std::string prefix = "# manifest: ";
    if (line.rfind(prefix, 0) != 0)
        throw std::runtime_error("trace file: missing manifest line: " + path.string());
    TraceData data;
    data.manifest = json::parse(line.substr(prefix.size()));
    int n = data.manifest.at("n").get<int>();
    int d = data.manifest.at("d").get<int>();
    if (!std::getline(in, line)) throw std::runtime_error("trace file: missing header: " + path.string());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        TraceSample sample;
        sample.state.reserve(static_cast<std::size_t>(n) * d);
        std::istringstream row(line);
        std::string cell;
        if (!std::getline(row, cell, ',')) throw std::runtime_error("trace file: bad row");
        sample.step = std::stol(cell);
        if (!std::getline(row, cell, ',')) throw std::runtime_error("trace file: bad row");
        sample.selected_agent = std::stoi(cell);
        while (std::getline(row, cell, ',')) sample.state.push_back(std::stod(cell));
        if (sample.state.size() != static_cast<std::size_t>(n) * d)
            throw std::runtime_error("trace file: row has wrong number of state values");
        data.samples.push_back(std::move(sample));
    }
    return data;
}

inline json report_to_json(const LemmaReport& report) {
    return json{{"lemma", report.lemma},
                {"pass", report.pass},
                {"precondition_met", report.precondition_met},
                {"measured", report.measured},
                {"tolerances", report.tolerances},
                {"notes", report.notes}};
}

inline json verdict_to_json(const ConsensusVerdict& verdict) {
    json j{{"kind", to_string(verdict.kind)}, {"residual", verdict.residual}};
    if (verdict.consensus_vector) j["consensus_vector"] = *verdict.consensus_vector;
    if (verdict.partition) {
        j["partition_v1"] = verdict.partition->first;
        j["partition_v2"] = verdict.partition->second;
    }
    if (verdict.steps_to_converge) j["steps_to_converge"] = *verdict.steps_to_converge;
    return j;
}

inline json balance_to_json(const BalanceVerdict& verdict) {
    const char* kind = nullptr;
    switch (verdict.kind) {
        case BalanceKind::all_positive: kind = "AllPositive"; break;
        case BalanceKind::balanced: kind = "Balanced"; break;
        case BalanceKind::unbalanced: kind = "Unbalanced"; break;
        case BalanceKind::all_negative: kind = "AllNegative"; break;
        case BalanceKind::contains_indefinite: kind = "ContainsIndefinite"; break;
    }
    json j{{"kind", kind}};
    if (verdict.partition) {
        j["v1"] = verdict.partition->first;
        j["v2"] = verdict.partition->second;
    }
    return j;
}

}  // namespace matweight
