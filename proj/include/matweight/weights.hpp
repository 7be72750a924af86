#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "matweight/graph.hpp"
#include "matweight/linalg.hpp"
#include "matweight/rng.hpp"

namespace matweight {

enum class WeightMode {
    all_positive_definite,
    all_negative_definite,
    balanced_from_partition,
    sign_pattern,
};

/// Recipe for turning a topology into a matrix-weighted network.  The two
/// directions of every bidirectional pair always receive the same matrix.
struct WeightPolicy {
    WeightMode mode = WeightMode::all_positive_definite;
    double magnitude_scale = 1.0;
    std::uint64_t seed = 0;
    std::vector<int> v1, v2;                       // balanced_from_partition
    std::map<std::pair<int, int>, int> pair_signs; // sign_pattern, canonical (min,max) -> +-1

    static WeightPolicy positive_definite(double scale, std::uint64_t seed) {
        return {WeightMode::all_positive_definite, scale, seed, {}, {}, {}};
    }
    static WeightPolicy negative_definite(double scale, std::uint64_t seed) {
        return {WeightMode::all_negative_definite, scale, seed, {}, {}, {}};
    }
    static WeightPolicy balanced(std::vector<int> v1, std::vector<int> v2, double scale, std::uint64_t seed) {
        return {WeightMode::balanced_from_partition, scale, seed, std::move(v1), std::move(v2), {}};
    }
    static WeightPolicy pattern(std::map<std::pair<int, int>, int> signs, double scale, std::uint64_t seed) {
        return {WeightMode::sign_pattern, scale, seed, {}, {}, std::move(signs)};
    }
};

/// Random strictly definite symmetric matrix: sign * (G G^T + 0.1 * scale * I)
/// with G entries uniform in (-scale, scale).  The Gram construction makes the
/// output exactly symmetric and bounds it away from singularity.
inline DenseMatrix gen_definite(int d, int sign, double scale, std::uint64_t seed) {
    if (d < 1) throw std::invalid_argument("gen_definite: dimension must be positive");
    if (sign != 1 && sign != -1) throw std::invalid_argument("gen_definite: sign must be +1 or -1");
    if (!(scale > 0.0)) throw std::invalid_argument("gen_definite: scale must be positive");
    Rng rng(seed);
    DenseMatrix g(d, d);
    for (double& v : g.data) v = rng.uniform(-scale, scale);
    DenseMatrix m(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            double acc = 0.0;
            for (int k = 0; k < d; ++k) acc += g(i, k) * g(j, k);
            m(i, j) = acc;
        }
    }
    double ridge = 0.1 * scale;
    for (int i = 0; i < d; ++i) m(i, i) += ridge;
    if (sign < 0)
        for (double& v : m.data) v = -v;
    return m;
}

namespace detail {

inline bool partition_covers(int n, const std::vector<int>& v1, const std::vector<int>& v2) {
    std::set<int> seen;
    for (int a : v1) {
        if (a < 1 || a > n || !seen.insert(a).second) return false;
    }
    for (int a : v2) {
        if (a < 1 || a > n || !seen.insert(a).second) return false;
    }
    return static_cast<int>(seen.size()) == n;
}

}  // namespace detail

/// Replaces every edge weight according to the policy.  Each unordered pair
/// draws its matrix from a sub-seed keyed on the pair alone, so edge listing
/// order and direction never change the assignment.
inline MatrixWeightedGraph assign_weights(const MatrixWeightedGraph& g, const WeightPolicy& policy) {
    if (!(policy.magnitude_scale > 0.0))
        throw std::invalid_argument("assign_weights: magnitude scale must be positive");
    std::set<int> v1_set(policy.v1.begin(), policy.v1.end());
    if (policy.mode == WeightMode::balanced_from_partition) {
        if (!detail::partition_covers(g.n(), policy.v1, policy.v2))
            throw std::invalid_argument("assign_weights: partition must cover all agents exactly once");
        if (policy.v1.empty()) throw std::invalid_argument("assign_weights: first part must be non-empty");
    }
    std::vector<Edge> edges;
    edges.reserve(g.edges().size());
    for (const Edge& e : g.edges()) {
        auto [a, b] = std::minmax(e.from, e.to);
        int sign = 1;
        switch (policy.mode) {
            case WeightMode::all_positive_definite:
                sign = 1;
                break;
            case WeightMode::all_negative_definite:
                sign = -1;
                break;
            case WeightMode::balanced_from_partition:
                sign = (v1_set.count(a) == v1_set.count(b)) ? 1 : -1;
                break;
            case WeightMode::sign_pattern: {
                auto it = policy.pair_signs.find({a, b});
                if (it == policy.pair_signs.end())
                    throw std::invalid_argument("assign_weights: sign pattern misses pair (" +
                                                std::to_string(a) + "," + std::to_string(b) + ")");
                if (it->second != 1 && it->second != -1)
                    throw std::invalid_argument("assign_weights: pattern signs must be +1 or -1");
                sign = it->second;
                break;
            }
        }
        std::uint64_t sub = mix_seed(policy.seed, static_cast<std::uint64_t>(a), static_cast<std::uint64_t>(b));
        edges.push_back({e.from, e.to, gen_definite(g.d(), sign, policy.magnitude_scale, sub)});
    }
    return MatrixWeightedGraph(g.n(), g.d(), std::move(edges));
}

struct StepSizeWitness {
    int agent = 0;
    int row = 0;  // 1-based entry indices of sgn-weighted neighbor sum
    int col = 0;
};

struct StepSizeRange {
    double upper = 0.0;  // admissible step sizes are (0, upper)
    StepSizeWitness denominator_witness;
};

/// Upper end of the admissible step-size interval:
///   1 / max_{i,k,m} 2 * sum_{j in N_i} sgn(W_ij) * W_ij^(k,m)
/// taken over the raw signed entries of each agent's neighbor sum.  The
/// witness records where the maximum is attained.
inline StepSizeRange step_size_upper(const MatrixWeightedGraph& g) {
    double best = 0.0;
    StepSizeWitness witness;
    bool any = false;
    for (int i = 1; i <= g.n(); ++i) {
        const auto& nbrs = g.in_neighbors(i);
        if (nbrs.empty()) continue;
        DenseMatrix sum(g.d(), g.d());
        for (int j : nbrs) {
            const DenseMatrix& w = g.weight(i, j);
            MatrixSign s = matrix_sign(w);
            if (s != MatrixSign::positive && s != MatrixSign::negative)
                throw std::invalid_argument("step_size_upper: weight (" + std::to_string(i) + "," +
                                            std::to_string(j) + ") is not strictly definite");
            double sv = sign_value(s);
            for (std::size_t t = 0; t < sum.data.size(); ++t) sum.data[t] += sv * w.data[t];
        }
        for (int k = 0; k < g.d(); ++k) {
            for (int m = 0; m < g.d(); ++m) {
                double cand = 2.0 * sum(k, m);
                if (!any || cand > best) {
                    best = cand;
                    witness = {i, k + 1, m + 1};
                    any = true;
                }
            }
        }
    }
    if (!any) throw std::domain_error("step_size_upper: graph has no edges");
    if (!(best > 0.0)) throw std::domain_error("step_size_upper: non-positive denominator, weights corrupted");
    return {1.0 / best, witness};
}

inline double default_tau(const StepSizeRange& range) { return 0.5 * range.upper; }

inline double default_tau(const MatrixWeightedGraph& g) { return default_tau(step_size_upper(g)); }

}  // namespace matweight
