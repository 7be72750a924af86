#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "matweight/linalg.hpp"
#include "matweight/rng.hpp"

namespace matweight {

inline constexpr int rgg_retry_cap = 100;

/// Directed edge: `from` receives information from `to`, carrying a symmetric
/// d x d coupling matrix.  Agent ids are 1-based throughout the public API.
struct Edge {
    int from = 0;
    int to = 0;
    DenseMatrix weight;
};

/// Plain directed graph on agents 1..n, used for reachability questions and
/// for graphs induced by matrices.  Self-pairs may appear in the adjacency;
/// spanning-tree logic ignores them.
struct DirectedGraph {
    int n = 0;
    std::set<std::pair<int, int>> adjacency;
};

class MatrixWeightedGraph {
public:
    MatrixWeightedGraph(int n, int d, std::vector<Edge> edges) : n_(n), d_(d), edges_(std::move(edges)) {
        if (n < 1) throw std::invalid_argument("graph: need at least one agent");
        if (d < 1) throw std::invalid_argument("graph: state dimension must be positive");
        std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
            return std::pair(a.from, a.to) < std::pair(b.from, b.to);
        });
        in_nbrs_.assign(static_cast<std::size_t>(n) + 1, {});
        edge_index_.assign(static_cast<std::size_t>(n) + 1, {});
        int prev_from = -1, prev_to = -1;
        for (std::size_t idx = 0; idx < edges_.size(); ++idx) {
            const Edge& e = edges_[idx];
            if (e.from < 1 || e.from > n || e.to < 1 || e.to > n)
                throw std::invalid_argument("graph: agent id out of range");
            if (e.from == e.to) throw std::invalid_argument("graph: self-loops are not allowed");
            if (e.from == prev_from && e.to == prev_to)
                throw std::invalid_argument("graph: duplicate edge");
            if (e.weight.rows != d || e.weight.cols != d)
                throw std::invalid_argument("graph: weight must be d x d");
            if (!is_symmetric(e.weight))
                throw std::invalid_argument("graph: weight must be symmetric within tolerance");
            prev_from = e.from;
            prev_to = e.to;
            in_nbrs_[static_cast<std::size_t>(e.from)].push_back(e.to);
            edge_index_[static_cast<std::size_t>(e.from)].emplace_back(e.to, static_cast<int>(idx));
        }
    }

    int n() const { return n_; }
    int d() const { return d_; }
    const std::vector<Edge>& edges() const { return edges_; }

    /// Agents j with an edge (i, j), ascending.
    const std::vector<int>& in_neighbors(int i) const {
        check_agent(i);
        return in_nbrs_[static_cast<std::size_t>(i)];
    }

    bool has_edge(int i, int j) const { return find_edge(i, j) >= 0; }

    const DenseMatrix& weight(int i, int j) const {
        int idx = find_edge(i, j);
        if (idx < 0) throw std::invalid_argument("graph: no such edge");
        return edges_[static_cast<std::size_t>(idx)].weight;
    }

    DirectedGraph skeleton() const {
        DirectedGraph g{n_, {}};
        for (const Edge& e : edges_) g.adjacency.insert({e.from, e.to});
        return g;
    }

    void check_agent(int i) const {
        if (i < 1 || i > n_) throw std::invalid_argument("graph: agent id out of range");
    }

private:
    int find_edge(int i, int j) const {
        check_agent(i);
        check_agent(j);
        for (const auto& [to, idx] : edge_index_[static_cast<std::size_t>(i)])
            if (to == j) return idx;
        return -1;
    }

    int n_;
    int d_;
    std::vector<Edge> edges_;
    std::vector<std::vector<int>> in_nbrs_;
    std::vector<std::vector<std::pair<int, int>>> edge_index_;
};

/// Smallest agent from which every agent is reachable along stored pairs,
/// or nullopt when no such root exists.  Self-pairs never affect the answer.
inline std::optional<int> has_spanning_tree(const DirectedGraph& g) {
    if (g.n < 1) return std::nullopt;
    std::vector<std::vector<int>> out(static_cast<std::size_t>(g.n) + 1);
    for (const auto& [u, v] : g.adjacency) {
        if (u < 1 || u > g.n || v < 1 || v > g.n)
            throw std::invalid_argument("has_spanning_tree: agent id out of range");
        if (u != v) out[static_cast<std::size_t>(u)].push_back(v);
    }
    std::vector<int> seen(static_cast<std::size_t>(g.n) + 1, 0);
    std::vector<int> stack;
    for (int root = 1; root <= g.n; ++root) {
        std::fill(seen.begin(), seen.end(), 0);
        stack.assign(1, root);
        seen[static_cast<std::size_t>(root)] = 1;
        int count = 1;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int v : out[static_cast<std::size_t>(u)]) {
                if (!seen[static_cast<std::size_t>(v)]) {
                    seen[static_cast<std::size_t>(v)] = 1;
                    ++count;
                    stack.push_back(v);
                }
            }
        }
        if (count == g.n) return root;
    }
    return std::nullopt;
}

/// Graph induced by a square matrix: pair (i, j) present iff entry (i, j)
/// exceeds tol_pos.  Diagonal entries produce self-pairs.
inline DirectedGraph induced_graph(const DenseMatrix& m, double tol = tol_pos) {
    if (!m.is_square()) throw std::invalid_argument("induced_graph: not square");
    DirectedGraph g{m.rows, {}};
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j)
            if (m(i, j) > tol) g.adjacency.insert({i + 1, j + 1});
    return g;
}

inline DirectedGraph union_graphs(const std::vector<DirectedGraph>& graphs) {
    if (graphs.empty()) throw std::invalid_argument("union_graphs: empty input");
    DirectedGraph out{graphs.front().n, {}};
    for (const DirectedGraph& g : graphs) {
        if (g.n != out.n) throw std::invalid_argument("union_graphs: vertex counts differ");
        out.adjacency.insert(g.adjacency.begin(), g.adjacency.end());
    }
    return out;
}

inline bool contains_graph(const DirectedGraph& big, const DirectedGraph& small) {
    if (big.n != small.n) return false;
    return std::includes(big.adjacency.begin(), big.adjacency.end(),
                         small.adjacency.begin(), small.adjacency.end());
}

enum class BalanceKind { all_positive, balanced, unbalanced, all_negative, contains_indefinite };

struct BalanceVerdict {
    BalanceKind kind = BalanceKind::contains_indefinite;
    // Present iff kind == balanced: disjoint cover of 1..n, both parts
    // non-empty, positive couplings inside parts and negative across.
    std::optional<std::pair<std::vector<int>, std::vector<int>>> partition;
};

/// Classifies the sign structure of the network.  Every weight must be
/// strictly definite for a verdict other than contains_indefinite; a pair
/// whose two directions disagree in sign is reported unbalanced outright.
inline BalanceVerdict structural_balance(const MatrixWeightedGraph& g, double tol = tol_def) {
    std::map<std::pair<int, int>, int> pair_sign;
    bool conflict = false;
    for (const Edge& e : g.edges()) {
        MatrixSign s = matrix_sign(e.weight, tol);
        if (s != MatrixSign::positive && s != MatrixSign::negative)
            return {BalanceKind::contains_indefinite, std::nullopt};
        int sv = sign_value(s);
        auto key = std::minmax(e.from, e.to);
        auto [it, inserted] = pair_sign.emplace(std::pair(key.first, key.second), sv);
        if (!inserted && it->second != sv) conflict = true;
    }
    if (conflict) return {BalanceKind::unbalanced, std::nullopt};
    bool any_pos = false, any_neg = false;
    for (const auto& kv : pair_sign) (kv.second > 0 ? any_pos : any_neg) = true;
    if (!any_neg) return {BalanceKind::all_positive, std::nullopt};
    if (!any_pos) return {BalanceKind::all_negative, std::nullopt};

    // Parity two-coloring over the undirected skeleton: positive pairs keep
    // the color, negative pairs flip it.
    std::vector<std::vector<std::pair<int, int>>> adj(static_cast<std::size_t>(g.n()) + 1);
    for (const auto& kv : pair_sign) {
        adj[static_cast<std::size_t>(kv.first.first)].emplace_back(kv.first.second, kv.second);
        adj[static_cast<std::size_t>(kv.first.second)].emplace_back(kv.first.first, kv.second);
    }
    std::vector<int> color(static_cast<std::size_t>(g.n()) + 1, -1);
    std::vector<int> stack;
    for (int start = 1; start <= g.n(); ++start) {
        if (color[static_cast<std::size_t>(start)] != -1) continue;
        color[static_cast<std::size_t>(start)] = 0;
        stack.assign(1, start);
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (const auto& [v, sv] : adj[static_cast<std::size_t>(u)]) {
                int want = sv > 0 ? color[static_cast<std::size_t>(u)] : 1 - color[static_cast<std::size_t>(u)];
                if (color[static_cast<std::size_t>(v)] == -1) {
                    color[static_cast<std::size_t>(v)] = want;
                    stack.push_back(v);
                } else if (color[static_cast<std::size_t>(v)] != want) {
                    return {BalanceKind::unbalanced, std::nullopt};
                }
            }
        }
    }
    std::vector<int> v1, v2;
    for (int i = 1; i <= g.n(); ++i) (color[static_cast<std::size_t>(i)] == 0 ? v1 : v2).push_back(i);
    return {BalanceKind::balanced, std::pair(std::move(v1), std::move(v2))};
}

/// k-regular circulant ring: agent i is coupled bidirectionally with the k/2
/// nearest agents on each side.  Weights are identity placeholders until a
/// policy assigns real couplings.
inline MatrixWeightedGraph gen_regular_ring(int n, int k, int d, std::uint64_t /*seed*/ = 0) {
    if (n < 3) throw std::invalid_argument("gen_regular_ring: need at least three agents");
    if (k < 2 || k % 2 != 0 || k >= n)
        throw std::invalid_argument("gen_regular_ring: k must be even with 2 <= k < n");
    std::set<std::pair<int, int>> pairs;
    for (int i = 1; i <= n; ++i) {
        for (int s = 1; s <= k / 2; ++s) {
            int j = (i - 1 + s) % n + 1;
            pairs.insert({i, j});
            pairs.insert({j, i});
        }
    }
    std::vector<Edge> edges;
    edges.reserve(pairs.size());
    for (const auto& [from, to] : pairs) edges.push_back({from, to, DenseMatrix::identity(d)});
    return MatrixWeightedGraph(n, d, std::move(edges));
}

/// Random geometric graph: n points uniform in the unit square, agents within
/// `radius` coupled bidirectionally.  Redraws until the skeleton has a
/// spanning tree, giving up after rgg_retry_cap attempts.
inline MatrixWeightedGraph gen_rgg(int n, double radius, int d, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("gen_rgg: need at least one agent");
    if (!(radius >= 0.0) || radius > std::sqrt(2.0))
        throw std::invalid_argument("gen_rgg: radius must lie in [0, sqrt(2)]");
    Rng rng(mix_seed(seed, "rgg-points"));
    for (int attempt = 0; attempt < rgg_retry_cap; ++attempt) {
        std::vector<std::pair<double, double>> pts(static_cast<std::size_t>(n));
        for (auto& [x, y] : pts) {
            x = rng.next_unit();
            y = rng.next_unit();
        }
        std::vector<Edge> edges;
        for (int i = 1; i <= n; ++i) {
            for (int j = i + 1; j <= n; ++j) {
                double dx = pts[static_cast<std::size_t>(i) - 1].first - pts[static_cast<std::size_t>(j) - 1].first;
                double dy = pts[static_cast<std::size_t>(i) - 1].second - pts[static_cast<std::size_t>(j) - 1].second;
                if (std::sqrt(dx * dx + dy * dy) <= radius) {
                    edges.push_back({i, j, DenseMatrix::identity(d)});
                    edges.push_back({j, i, DenseMatrix::identity(d)});
                }
            }
        }
        MatrixWeightedGraph g(n, d, std::move(edges));
        if (has_spanning_tree(g.skeleton())) return g;
    }
    throw std::runtime_error("gen_rgg: no spanning tree after " + std::to_string(rgg_retry_cap) + " draws");
}

}  // namespace matweight
