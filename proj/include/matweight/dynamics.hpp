#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "matweight/graph.hpp"
#include "matweight/linalg.hpp"
#include "matweight/rng.hpp"
#include "matweight/weights.hpp"

namespace matweight {

/// Stacked agent states, agent-major: entry (i-1)*d + (k-1) holds dimension k
/// of agent i.
struct StateEnsemble {
    int n = 0;
    int d = 0;
    std::vector<double> x;

    StateEnsemble() = default;

    StateEnsemble(int n_, int d_, std::vector<double> values) : n(n_), d(d_), x(std::move(values)) {
        if (n < 1 || d < 1) throw std::invalid_argument("StateEnsemble: shape must be positive");
        if (x.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(d))
            throw std::invalid_argument("StateEnsemble: length must equal n*d");
    }

    double* agent(int i) { return x.data() + static_cast<std::size_t>(i - 1) * d; }
    const double* agent(int i) const { return x.data() + static_cast<std::size_t>(i - 1) * d; }
};

inline double inf_norm(const std::vector<double>& v) {
    double best = 0.0;
    for (double e : v) best = std::max(best, std::abs(e));
    return best;
}

/// Update operators for one network and step size.  p_full is the agent-major
/// nd x nd operator; p_blocks / q_blocks are the dimension-major n x n pieces
/// (q_blocks has d x d grid cells with zero matrices on the diagonal).  Both
/// assemblies are computed from shared neighbor sums so they agree exactly
/// under the agent-to-dimension permutation.
struct UpdateOperators {
    int n = 0;
    int d = 0;
    double tau = 0.0;
    DenseMatrix p_full;
    std::vector<DenseMatrix> p_blocks;
    std::vector<std::vector<DenseMatrix>> q_blocks;
};

namespace detail {

/// sgn(W_kj) * W_kj summed over in-neighbors j of k in ascending order.
inline DenseMatrix signed_neighbor_sum(const MatrixWeightedGraph& g, int k) {
    DenseMatrix sum(g.d(), g.d());
    for (int j : g.in_neighbors(k)) {
        const DenseMatrix& w = g.weight(k, j);
        MatrixSign s = matrix_sign(w);
        if (s != MatrixSign::positive && s != MatrixSign::negative)
            throw std::invalid_argument("dynamics: weight (" + std::to_string(k) + "," +
                                        std::to_string(j) + ") is not strictly definite");
        double sv = sign_value(s);
        for (std::size_t t = 0; t < sum.data.size(); ++t) sum.data[t] += sv * w.data[t];
    }
    return sum;
}

}  // namespace detail

/// Agent-major update operator plus its dimension-major rearrangement.
/// tau must lie in the admissible open interval unless enforce_range is
/// cleared (divergence experiments run deliberately out of range).
inline UpdateOperators build_sync_operator(const MatrixWeightedGraph& g, double tau,
                                           bool enforce_range = true) {
    if (!std::isfinite(tau) || tau <= 0.0) throw std::domain_error("build_sync_operator: tau must be positive");
    if (enforce_range && !g.edges().empty()) {
        StepSizeRange range = step_size_upper(g);
        if (!(tau < range.upper))
            throw std::domain_error("build_sync_operator: tau outside admissible range (0, " +
                                    std::to_string(range.upper) + ")");
    }
    const int n = g.n(), d = g.d();
    UpdateOperators ops;
    ops.n = n;
    ops.d = d;
    ops.tau = tau;
    ops.p_full = DenseMatrix(n * d, n * d);
    ops.p_blocks.assign(static_cast<std::size_t>(d), DenseMatrix(n, n));
    ops.q_blocks.assign(static_cast<std::size_t>(d),
                        std::vector<DenseMatrix>(static_cast<std::size_t>(d), DenseMatrix(n, n)));

    for (int k = 1; k <= n; ++k) {
        DenseMatrix mk = detail::signed_neighbor_sum(g, k);
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                double entry = (i == j) ? 1.0 - tau * mk(i, j) : -(tau * mk(i, j));
                ops.p_full((k - 1) * d + i, (k - 1) * d + j) = entry;
                if (i == j)
                    ops.p_blocks[static_cast<std::size_t>(i)](k - 1, k - 1) = entry;
                else
                    ops.q_blocks[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)](k - 1, k - 1) = entry;
            }
        }
        for (int m : g.in_neighbors(k)) {
            const DenseMatrix& w = g.weight(k, m);
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j < d; ++j) {
                    double entry = tau * w(i, j);
                    ops.p_full((k - 1) * d + i, (m - 1) * d + j) = entry;
                    if (i == j)
                        ops.p_blocks[static_cast<std::size_t>(i)](k - 1, m - 1) = entry;
                    else
                        ops.q_blocks[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)](k - 1, m - 1) = entry;
                }
            }
        }
    }
    return ops;
}

/// Permutation sending agent-major index (i-1)*d + k to dimension-major index
/// (k-1)*n + i (1-based agents i, dimensions k); returned 0-based.
inline std::vector<int> agent_to_dim_permutation(int n, int d) {
    if (n < 1 || d < 1) throw std::invalid_argument("agent_to_dim_permutation: shape must be positive");
    std::vector<int> perm(static_cast<std::size_t>(n) * d);
    for (int a = 0; a < n; ++a)
        for (int k = 0; k < d; ++k) perm[static_cast<std::size_t>(a) * d + k] = k * n + a;
    return perm;
}

inline std::vector<double> apply_permutation(const std::vector<int>& perm, const std::vector<double>& x) {
    if (perm.size() != x.size()) throw std::invalid_argument("apply_permutation: length mismatch");
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[static_cast<std::size_t>(perm[i])] = x[i];
    return y;
}

inline DenseMatrix conjugate_by_permutation(const std::vector<int>& perm, const DenseMatrix& a) {
    if (!a.is_square() || static_cast<std::size_t>(a.rows) != perm.size())
        throw std::invalid_argument("conjugate_by_permutation: shape mismatch");
    DenseMatrix b(a.rows, a.cols);
    for (int r = 0; r < a.rows; ++r)
        for (int c = 0; c < a.cols; ++c)
            b(perm[static_cast<std::size_t>(r)], perm[static_cast<std::size_t>(c)]) = a(r, c);
    return b;
}

/// Dimension-major operator assembled from the blocks (the P + Q sum).
inline DenseMatrix assemble_dimension_major(const UpdateOperators& ops) {
    const int n = ops.n, d = ops.d;
    DenseMatrix f(n * d, n * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            const DenseMatrix& cell = (i == j) ? ops.p_blocks[static_cast<std::size_t>(i)]
                                               : ops.q_blocks[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            for (int k = 0; k < n; ++k)
                for (int m = 0; m < n; ++m) f(i * n + k, j * n + m) = cell(k, m);
        }
    return f;
}

inline DenseMatrix assemble_p(const UpdateOperators& ops) {
    const int n = ops.n, d = ops.d;
    DenseMatrix p(n * d, n * d);
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < n; ++k)
            for (int m = 0; m < n; ++m) p(i * n + k, i * n + m) = ops.p_blocks[static_cast<std::size_t>(i)](k, m);
    return p;
}

inline DenseMatrix assemble_q(const UpdateOperators& ops) {
    const int n = ops.n, d = ops.d;
    DenseMatrix q(n * d, n * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            if (i == j) continue;
            for (int k = 0; k < n; ++k)
                for (int m = 0; m < n; ++m)
                    q(i * n + k, j * n + m) = ops.q_blocks[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)](k, m);
        }
    return q;
}

/// Agent-major one-agent update operator: agent l's block rows taken from
/// p_full, identity rows elsewhere.
inline DenseMatrix build_async_operator(const UpdateOperators& ops, int l) {
    if (l < 1 || l > ops.n) throw std::invalid_argument("build_async_operator: agent out of range");
    DenseMatrix u = DenseMatrix::identity(ops.n * ops.d);
    for (int i = 0; i < ops.d; ++i) {
        int row = (l - 1) * ops.d + i;
        for (int c = 0; c < ops.n * ops.d; ++c) u(row, c) = ops.p_full(row, c);
    }
    return u;
}

/// Dimension-major blocks of the one-agent update: each P_i keeps only row l
/// non-trivial (identity rows elsewhere), each Q_ij keeps only row l (zero
/// rows elsewhere).
struct AsyncBlocks {
    std::vector<DenseMatrix> p_blocks;
    std::vector<std::vector<DenseMatrix>> q_blocks;
};

inline AsyncBlocks async_blocks(const UpdateOperators& ops, int l) {
    if (l < 1 || l > ops.n) throw std::invalid_argument("async_blocks: agent out of range");
    AsyncBlocks out;
    out.p_blocks.assign(static_cast<std::size_t>(ops.d), DenseMatrix::identity(ops.n));
    out.q_blocks.assign(static_cast<std::size_t>(ops.d),
                        std::vector<DenseMatrix>(static_cast<std::size_t>(ops.d), DenseMatrix(ops.n, ops.n)));
    for (int i = 0; i < ops.d; ++i) {
        for (int m = 0; m < ops.n; ++m)
            out.p_blocks[static_cast<std::size_t>(i)](l - 1, m) = ops.p_blocks[static_cast<std::size_t>(i)](l - 1, m);
        for (int j = 0; j < ops.d; ++j) {
            if (i == j) continue;
            for (int m = 0; m < ops.n; ++m)
                out.q_blocks[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)](l - 1, m) =
                    ops.q_blocks[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)](l - 1, m);
        }
    }
    return out;
}

inline StateEnsemble step_sync(const UpdateOperators& ops, const StateEnsemble& state) {
    if (state.n != ops.n || state.d != ops.d) throw std::invalid_argument("step_sync: shape mismatch");
    return StateEnsemble(ops.n, ops.d, multiply(ops.p_full, state.x));
}

namespace detail {

/// Agent l's local update pieces: self matrix I - tau * M_l and the scaled
/// neighbor couplings tau * W_lj in ascending neighbor order.
struct AgentUpdate {
    DenseMatrix self;
    std::vector<std::pair<int, DenseMatrix>> neighbors;
};

inline AgentUpdate agent_update(const MatrixWeightedGraph& g, double tau, int l) {
    const int d = g.d();
    DenseMatrix ml = signed_neighbor_sum(g, l);
    AgentUpdate up;
    up.self = DenseMatrix(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            up.self(i, j) = (i == j) ? 1.0 - tau * ml(i, j) : -(tau * ml(i, j));
    for (int j : g.in_neighbors(l)) {
        const DenseMatrix& w = g.weight(l, j);
        DenseMatrix tw(d, d);
        for (std::size_t t = 0; t < tw.data.size(); ++t) tw.data[t] = tau * w.data[t];
        up.neighbors.emplace_back(j, std::move(tw));
    }
    return up;
}

inline void apply_agent_update(const AgentUpdate& up, StateEnsemble& state, int l, double* out) {
    const int d = state.d;
    const double* xl = state.agent(l);
    for (int i = 0; i < d; ++i) {
        double acc = 0.0;
        for (int j = 0; j < d; ++j) acc += up.self(i, j) * xl[j];
        out[i] = acc;
    }
    for (const auto& [j, tw] : up.neighbors) {
        const double* xj = state.agent(j);
        for (int i = 0; i < d; ++i) {
            double acc = 0.0;
            for (int m = 0; m < d; ++m) acc += tw(i, m) * xj[m];
            out[i] += acc;
        }
    }
}

}  // namespace detail

/// Recomputes agent l's entries in place from its own block row; all other
/// agents are untouched.  Work is O(d^2 * (deg + 1)) independent of n.
inline StateEnsemble step_async_local(const MatrixWeightedGraph& g, double tau,
                                      const StateEnsemble& state, int l) {
    if (state.n != g.n() || state.d != g.d()) throw std::invalid_argument("step_async_local: shape mismatch");
    g.check_agent(l);
    StateEnsemble next = state;
    std::vector<double> fresh(static_cast<std::size_t>(g.d()));
    detail::AgentUpdate up = detail::agent_update(g, tau, l);
    detail::apply_agent_update(up, next, l, fresh.data());
    std::copy(fresh.begin(), fresh.end(), next.agent(l));
    return next;
}

enum class UpdateMode { synchronous, asynchronous };

enum class StopReason { converged, max_steps, diverged };

/// Convergence/divergence rule for simulate: stop when the step delta stays
/// below delta_tol for `window` consecutive steps (0 picks n for asynchronous
/// runs, 1 for synchronous), flag divergence when the state inf-norm passes
/// `overflow` or leaves the finite range.
struct StopRule {
    double delta_tol = 1e-10;
    int window = 0;
    double overflow = overflow_bound;
};

struct TraceSample {
    long step = 0;
    int selected_agent = -1;  // -1 for synchronous steps and the initial row
    std::vector<double> state;
};

struct TraceConfig {
    std::string net_digest;
    std::string policy;
    double tau = 0.0;
    UpdateMode mode = UpdateMode::asynchronous;
    std::uint64_t seed = 0;
    long max_steps = 0;
    long record_stride = 1;
    StopRule stop;
    bool override_tau = false;
    int n = 0;
    int d = 0;
};

struct RunTrace {
    TraceConfig config;
    std::vector<int> agent_sequence;  // empty for synchronous runs
    std::vector<TraceSample> samples;
    std::vector<double> step_deltas;
    StateEnsemble final_state;
    long steps_run = 0;
    StopReason stop_reason = StopReason::max_steps;
    bool diverged = false;
    double max_state_norm = 0.0;
};

struct SimOptions {
    long max_steps = 0;       // 0 picks the mode default (2e5 async, 1e4 sync)
    long record_stride = 0;   // 0 picks max(1, max_steps / 1000)
    StopRule stop;
    bool override_tau = false;
    std::optional<StateEnsemble> initial;
    std::string policy_label;
    std::string net_digest;
};

inline constexpr long default_max_steps_async = 200000;
inline constexpr long default_max_steps_sync = 10000;

/// Runs the consensus iteration.  Asynchronous runs draw one uniformly random
/// agent per step from a sub-stream of `seed`; initial states are uniform in
/// (-1, 1) from another sub-stream unless supplied.  Divergence flags the
/// trace and stops; it never throws and never propagates NaN silently.
inline RunTrace simulate(const MatrixWeightedGraph& g, double tau, UpdateMode mode,
                         std::uint64_t seed, const SimOptions& opts = {}) {
    const int n = g.n(), d = g.d();
    if (!std::isfinite(tau) || tau <= 0.0) throw std::domain_error("simulate: tau must be positive");
    if (!opts.override_tau && !g.edges().empty()) {
        StepSizeRange range = step_size_upper(g);
        if (!(tau < range.upper))
            throw std::domain_error("simulate: tau outside admissible range (0, " +
                                    std::to_string(range.upper) + "); pass the override to force it");
    }

    RunTrace trace;
    trace.config.net_digest = opts.net_digest;
    trace.config.policy = opts.policy_label;
    trace.config.tau = tau;
    trace.config.mode = mode;
    trace.config.seed = seed;
    trace.config.max_steps = opts.max_steps > 0
                                 ? opts.max_steps
                                 : (mode == UpdateMode::asynchronous ? default_max_steps_async
                                                                     : default_max_steps_sync);
    trace.config.record_stride =
        opts.record_stride > 0 ? opts.record_stride : std::max<long>(1, trace.config.max_steps / 1000);
    trace.config.stop = opts.stop;
    if (trace.config.stop.window <= 0)
        trace.config.stop.window = mode == UpdateMode::asynchronous ? n : 1;
    trace.config.override_tau = opts.override_tau;
    trace.config.n = n;
    trace.config.d = d;

    StateEnsemble state;
    if (opts.initial) {
        if (opts.initial->n != n || opts.initial->d != d)
            throw std::invalid_argument("simulate: initial state shape mismatch");
        state = *opts.initial;
    } else {
        Rng init_rng(mix_seed(seed, "init"));
        std::vector<double> x(static_cast<std::size_t>(n) * d);
        for (double& v : x) v = init_rng.uniform(-1.0, 1.0);
        state = StateEnsemble(n, d, std::move(x));
    }

    std::optional<UpdateOperators> ops;
    std::vector<detail::AgentUpdate> updates;
    if (mode == UpdateMode::synchronous) {
        ops = build_sync_operator(g, tau, /*enforce_range=*/false);
    } else {
        updates.reserve(static_cast<std::size_t>(n));
        for (int l = 1; l <= n; ++l) updates.push_back(detail::agent_update(g, tau, l));
    }

    Rng agent_rng(mix_seed(seed, "agents"));
    trace.max_state_norm = inf_norm(state.x);
    trace.samples.push_back({0, -1, state.x});

    const long max_steps = trace.config.max_steps;
    const StopRule& stop = trace.config.stop;
    long quiet_run = 0;
    std::vector<double> fresh(static_cast<std::size_t>(d));
    long t = 0;
    while (t < max_steps) {
        ++t;
        int selected = -1;
        double delta = 0.0;
        bool bad = false;
        if (mode == UpdateMode::asynchronous) {
            selected = agent_rng.next_agent(n);
            trace.agent_sequence.push_back(selected);
            detail::apply_agent_update(updates[static_cast<std::size_t>(selected - 1)], state, selected,
                                       fresh.data());
            double* xl = state.agent(selected);
            double block_norm = 0.0;
            for (int i = 0; i < d; ++i) {
                double diff = std::abs(fresh[static_cast<std::size_t>(i)] - xl[i]);
                delta = std::max(delta, diff);
                xl[i] = fresh[static_cast<std::size_t>(i)];
                double mag = std::abs(xl[i]);
                block_norm = std::max(block_norm, mag);
                if (!std::isfinite(xl[i])) bad = true;
            }
            trace.max_state_norm = std::max(trace.max_state_norm, block_norm);
            if (block_norm > stop.overflow) bad = true;
        } else {
            std::vector<double> next = multiply(ops->p_full, state.x);
            double norm = 0.0;
            for (std::size_t i = 0; i < next.size(); ++i) {
                delta = std::max(delta, std::abs(next[i] - state.x[i]));
                norm = std::max(norm, std::abs(next[i]));
                if (!std::isfinite(next[i])) bad = true;
            }
            state.x = std::move(next);
            trace.max_state_norm = std::max(trace.max_state_norm, norm);
            if (norm > stop.overflow) bad = true;
        }
        trace.step_deltas.push_back(delta);
        if (bad) {
            trace.diverged = true;
            trace.stop_reason = StopReason::diverged;
            trace.steps_run = t;
            trace.samples.push_back({t, selected, state.x});
            trace.final_state = std::move(state);
            return trace;
        }
        if (t % trace.config.record_stride == 0) trace.samples.push_back({t, selected, state.x});
        quiet_run = delta < stop.delta_tol ? quiet_run + 1 : 0;
        if (quiet_run >= stop.window) {
            trace.stop_reason = StopReason::converged;
            trace.steps_run = t;
            if (trace.samples.back().step != t) trace.samples.push_back({t, selected, state.x});
            trace.final_state = std::move(state);
            return trace;
        }
    }
    trace.stop_reason = StopReason::max_steps;
    trace.steps_run = max_steps;
    if (trace.samples.back().step != max_steps)
        trace.samples.push_back({max_steps, trace.agent_sequence.empty() ? -1 : trace.agent_sequence.back(),
                                 state.x});
    trace.final_state = std::move(state);
    return trace;
}

/// Sign-flip gauge: delta is block-diagonal with +I_d on the first part and
/// -I_d on the second, d_full = delta * p_full * delta (delta is its own
/// inverse), and s/t blocks are the dimension-major rearrangement of d_full.
struct GaugeOperators {
    DenseMatrix delta;
    DenseMatrix d_full;
    std::vector<DenseMatrix> s_blocks;
    std::vector<std::vector<DenseMatrix>> t_blocks;
    std::vector<int> v1, v2;
};

inline GaugeOperators gauge_build(const UpdateOperators& ops, const std::vector<int>& v1,
                                  const std::vector<int>& v2) {
    const int n = ops.n, d = ops.d;
    if (!detail::partition_covers(n, v1, v2))
        throw std::invalid_argument("gauge_build: parts must cover all agents exactly once");
    if (v1.empty()) throw std::invalid_argument("gauge_build: first part must be non-empty");
    std::set<int> v1_set(v1.begin(), v1.end());
    std::vector<double> sigma(static_cast<std::size_t>(n) + 1, 1.0);
    for (int a = 1; a <= n; ++a) sigma[static_cast<std::size_t>(a)] = v1_set.count(a) ? 1.0 : -1.0;

    GaugeOperators out;
    out.v1 = v1;
    out.v2 = v2;
    out.delta = DenseMatrix(n * d, n * d);
    for (int a = 1; a <= n; ++a)
        for (int i = 0; i < d; ++i)
            out.delta((a - 1) * d + i, (a - 1) * d + i) = sigma[static_cast<std::size_t>(a)];

    out.d_full = DenseMatrix(n * d, n * d);
    for (int r = 0; r < n * d; ++r) {
        double sr = sigma[static_cast<std::size_t>(r / d) + 1];
        for (int c = 0; c < n * d; ++c) {
            double sc = sigma[static_cast<std::size_t>(c / d) + 1];
            out.d_full(r, c) = sr * sc * ops.p_full(r, c);
        }
    }

    out.s_blocks.assign(static_cast<std::size_t>(d), DenseMatrix(n, n));
    out.t_blocks.assign(static_cast<std::size_t>(d),
                        std::vector<DenseMatrix>(static_cast<std::size_t>(d), DenseMatrix(n, n)));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < n; ++k)
                for (int m = 0; m < n; ++m) {
                    double entry = out.d_full(k * d + i, m * d + j);
                    if (i == j)
                        out.s_blocks[static_cast<std::size_t>(i)](k, m) = entry;
                    else
                        out.t_blocks[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)](k, m) = entry;
                }
    return out;
}

}  // namespace matweight
