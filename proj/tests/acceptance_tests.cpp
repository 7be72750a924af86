// Acceptance gate: every release-level behaviour claim, one line of output
// per criterion.  Tolerances are pinned here on purpose; loosening one to
// make a red line green defeats the point of the gate.

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "matweight/analysis.hpp"
#include "matweight/dynamics.hpp"
#include "matweight/graph.hpp"
#include "matweight/io.hpp"
#include "matweight/rng.hpp"
#include "matweight/suites.hpp"
#include "matweight/weights.hpp"

using namespace matweight;

namespace {

constexpr double acc_tol_consensus = 1e-6;    // pairwise / antisymmetry agreement
constexpr double acc_tol_zero = 1e-6;         // final norm of a vanished state
constexpr double acc_tol_nonzero = 1e-3;      // smallest consensus level counted as non-zero
constexpr double acc_tol_local = 1e-12;       // local vs one-agent matrix stepping
constexpr double acc_tol_row_sum = 1e-12;     // P product row sums
constexpr double acc_tol_row_spread = 1e-8;   // P product rank-one row spread
constexpr double acc_tol_q_norm = 1e-8;       // Q product norm
constexpr double acc_tol_near_one = 1e-6;     // eigenvalue distance to one
constexpr double acc_tol_modulus = 1e-9;      // allowed excess over the unit circle
constexpr double acc_divergence_level = 1e6;  // state norm counted as blown up
constexpr long acc_divergence_budget = 10000;

const int kN = 10, kK = 4, kD = 3;

MatrixWeightedGraph pd_instance(std::uint64_t seed) {
    return assign_weights(gen_regular_ring(kN, kK, kD),
                          WeightPolicy::positive_definite(1.0, mix_seed(seed, "w")));
}

MatrixWeightedGraph nd_instance(std::uint64_t seed) {
    return assign_weights(gen_regular_ring(kN, kK, kD),
                          WeightPolicy::negative_definite(1.0, mix_seed(seed, "w")));
}

MatrixWeightedGraph balanced_instance(std::uint64_t seed, const std::vector<int>& v1,
                                      const std::vector<int>& v2) {
    return assign_weights(gen_regular_ring(kN, kK, kD),
                          WeightPolicy::balanced(v1, v2, 1.0, mix_seed(seed, "w")));
}

// Balanced odds/evens pattern with two within-part couplings flipped, which
// plants odd sign cycles and destroys two-colorability.
MatrixWeightedGraph unbalanced_instance(std::uint64_t seed) {
    auto ring = gen_regular_ring(kN, kK, kD);
    std::vector<int> odds{1, 3, 5, 7, 9}, evens{2, 4, 6, 8, 10};
    auto balanced = assign_weights(ring, WeightPolicy::balanced(odds, evens, 1.0, mix_seed(seed, "w")));
    std::map<std::pair<int, int>, int> signs;
    for (const Edge& e : balanced.edges()) {
        auto key = std::minmax(e.from, e.to);
        signs[{key.first, key.second}] = matrix_sign(e.weight) == MatrixSign::positive ? 1 : -1;
    }
    signs[{1, 3}] = -1;
    signs[{6, 8}] = -1;
    return assign_weights(ring, WeightPolicy::pattern(signs, 1.0, mix_seed(seed, "w")));
}

double max_pairwise(const StateEnsemble& s) {
    double best = 0.0;
    for (int i = 1; i <= s.n; ++i)
        for (int j = i + 1; j <= s.n; ++j)
            for (int k = 0; k < s.d; ++k)
                best = std::max(best, std::abs(s.agent(i)[k] - s.agent(j)[k]));
    return best;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

int failures = 0;

void report(int idx, bool pass, const std::string& detail) {
    std::string line = "criterion " + std::to_string(idx) + ": " + (pass ? "PASS" : "FAIL");
    if (!detail.empty()) line += " (" + detail + ")";
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

void info(int idx, const std::string& text) {
    std::printf("[info] criterion %d: %s\n", idx, text.c_str());
    std::fflush(stdout);
}

void criterion_1() {
    int ok = 0;
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        MatrixWeightedGraph g = pd_instance(s);
        RunTrace trace = simulate(g, default_tau(g), UpdateMode::asynchronous, s);
        double pair = max_pairwise(trace.final_state);
        worst = std::max(worst, pair);
        if (trace.stop_reason == StopReason::converged && pair < acc_tol_consensus) ++ok;
    }
    report(1, ok == 100, std::to_string(ok) + "/100 runs agreed pairwise, worst spread " + fmt(worst));
}

void criterion_2() {
    int ok = 0;
    long worst_steps = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        MatrixWeightedGraph g = pd_instance(s);
        RunTrace trace = simulate(g, default_tau(g), UpdateMode::synchronous, s);
        ConsensusVerdict v = classify(trace);
        worst_steps = std::max(worst_steps, trace.steps_run);
        if (v.kind == ConsensusKind::global && trace.stop_reason == StopReason::converged) ++ok;
    }
    report(2, ok == 20,
           std::to_string(ok) + "/20 global within budget, slowest " + std::to_string(worst_steps) +
               " steps");
}

void criterion_3() {
    int bipartite_ok = 0, near_zero = 0;
    double worst_antisym = 0.0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        Rng part_rng(mix_seed(s, "partition"));
        std::vector<int> v1, v2;
        do {
            v1.clear();
            v2.clear();
            for (int a = 1; a <= kN; ++a) (part_rng.next_unit() < 0.5 ? v1 : v2).push_back(a);
        } while (v1.empty() || v2.empty());
        MatrixWeightedGraph g = balanced_instance(s, v1, v2);
        RunTrace trace = simulate(g, default_tau(g), UpdateMode::asynchronous, s);
        ConsensusVerdict v = classify(trace);
        if (v.kind == ConsensusKind::bipartite && verify_partition(v, v1, v2)) {
            std::set<int> v1_set(v1.begin(), v1.end());
            const StateEnsemble& st = trace.final_state;
            double antisym = 0.0;
            for (int i = 1; i <= kN; ++i) {
                double si = v1_set.count(i) ? 1.0 : -1.0;
                for (int j = i + 1; j <= kN; ++j) {
                    double sj = v1_set.count(j) ? 1.0 : -1.0;
                    for (int k = 0; k < kD; ++k)
                        antisym = std::max(antisym, std::abs(si * st.agent(i)[k] - sj * st.agent(j)[k]));
                }
            }
            worst_antisym = std::max(worst_antisym, antisym);
            double level = v.consensus_vector ? inf_norm(*v.consensus_vector) : 0.0;
            if (antisym < acc_tol_consensus && level > acc_tol_nonzero) ++bipartite_ok;
        } else if (inf_norm(trace.final_state.x) < acc_tol_nonzero) {
            ++near_zero;
        }
    }
    bool pass = bipartite_ok >= 48 && bipartite_ok + near_zero == 50;
    report(3, pass,
           std::to_string(bipartite_ok) + "/50 sign-split with partition recovered, worst antisymmetry " +
               fmt(worst_antisym) + ", " + std::to_string(near_zero) + " near-zero");
    if (near_zero > 0)
        info(3, std::to_string(near_zero) + " runs collapsed below " + fmt(acc_tol_nonzero) +
                    "; counted separately, not as failures");
}

void criterion_4() {
    int ok = 0, total = 0;
    double worst = 0.0;
    for (int regime = 0; regime < 2; ++regime) {
        for (std::uint64_t s = 0; s < 50; ++s) {
            MatrixWeightedGraph g = regime == 0 ? nd_instance(s) : unbalanced_instance(s);
            ++total;
            BalanceKind kind = structural_balance(g).kind;
            if ((regime == 0 && kind != BalanceKind::all_negative) ||
                (regime == 1 && kind != BalanceKind::unbalanced))
                continue;
            RunTrace trace = simulate(g, default_tau(g), UpdateMode::asynchronous, s);
            ConsensusVerdict v = classify(trace);
            double norm = inf_norm(trace.final_state.x);
            worst = std::max(worst, norm);
            if (v.kind == ConsensusKind::zero && norm < acc_tol_zero) ++ok;
        }
    }
    report(4, ok == total,
           std::to_string(ok) + "/" + std::to_string(total) + " vanished, worst final norm " + fmt(worst));
}

void criterion_5() {
    auto count_blowups = [&](double factor) {
        int blown = 0;
        for (std::uint64_t s = 0; s < 20; ++s) {
            MatrixWeightedGraph g = pd_instance(s);
            SimOptions opts;
            opts.override_tau = true;
            opts.max_steps = acc_divergence_budget;
            opts.stop.overflow = acc_divergence_level;
            RunTrace trace = simulate(g, factor * step_size_upper(g).upper,
                                      UpdateMode::asynchronous, s, opts);
            if (trace.diverged) ++blown;
        }
        return blown;
    };
    int at_two = count_blowups(2.0);
    bool pass = at_two >= 18;
    report(5, pass,
           std::to_string(at_two) + "/20 runs exceeded " + fmt(acc_divergence_level) + " within " +
               std::to_string(acc_divergence_budget) + " steps at twice the bound; 18 required");
    if (!pass) {
        int at_four = count_blowups(4.0);
        int sync_unstable = 0;
        for (std::uint64_t s = 0; s < 20; ++s) {
            MatrixWeightedGraph g = pd_instance(s);
            double tau = 2.0 * step_size_upper(g).upper;
            UpdateOperators ops = build_sync_operator(g, tau, /*enforce_range=*/false);
            if (spectrum(ops.p_full).max_modulus > 1.0) ++sync_unstable;
        }
        info(5, "one-agent updates damp the step by the selection rate, so twice the bound stays "
                "inside the stable region for these instances");
        info(5, "measured blow-up onset: " + std::to_string(at_four) +
                    "/20 at four times the bound under the same budget");
        info(5, "even the all-at-once operator at twice the bound has spectral radius above one in "
                "only " +
                    std::to_string(sync_unstable) + "/20 instances");
    }
}

void criterion_6() {
    Rng rng(mix_seed(6, "local"));
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        int n = 4 + static_cast<int>(rng.next_below(5));
        int d = 1 + static_cast<int>(rng.next_below(3));
        MatrixWeightedGraph g = assign_weights(gen_regular_ring(n, 2, d),
                                               WeightPolicy::positive_definite(1.0, rng.next_u64()));
        double tau = default_tau(g);
        UpdateOperators ops = build_sync_operator(g, tau);
        std::vector<double> x(static_cast<std::size_t>(n) * d);
        for (double& v : x) v = rng.uniform(-1.0, 1.0);
        StateEnsemble state(n, d, x);
        for (int step = 0; step < 1000; ++step) {
            int l = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
            StateEnsemble local = step_async_local(g, tau, state, l);
            std::vector<double> matrix_form = multiply(build_async_operator(ops, l), state.x);
            for (std::size_t i = 0; i < matrix_form.size(); ++i)
                worst = std::max(worst, std::abs(local.x[i] - matrix_form[i]));
            state = local;
        }
    }
    report(6, worst <= acc_tol_local,
           "largest local-vs-matrix gap " + fmt(worst) + " over 20 instances x 1000 steps");
}

void criteria_7_and_8() {
    int ok7 = 0, ok8 = 0;
    double worst_spread = 0.0, worst_sum = 0.0, worst_q = 0.0;
    for (std::uint64_t s = 100; s < 110; ++s) {
        MatrixWeightedGraph g = pd_instance(s);
        double tau = default_tau(g);
        UpdateOperators ops = build_sync_operator(g, tau);
        SimOptions opts;
        opts.stop.delta_tol = 1e-12;  // let the factor products settle well below their tolerances
        RunTrace trace = simulate(g, tau, UpdateMode::asynchronous, s, opts);
        ProductTracker tracker = track_products(trace, ops);

        LemmaReport six = verify_lemma6(tracker, acc_tol_row_spread, acc_tol_row_sum);
        LemmaReport seven = verify_lemma7(tracker, acc_tol_q_norm);
        worst_spread = std::max(worst_spread, six.measured.at("max_row_spread"));
        worst_sum = std::max(worst_sum, six.measured.at("max_row_sum_dev"));
        worst_q = std::max(worst_q, seven.measured.at("q_norm_final"));
        if (six.pass && seven.pass) ++ok7;

        LemmaReport product_spec =
            verify_lemma9_10(tracker.f_product, kD, acc_tol_near_one, acc_tol_modulus);
        LemmaReport op_spec = verify_lemma9_10(assemble_dimension_major(ops), kD, acc_tol_near_one,
                                               acc_tol_modulus);
        if (tracker.spanning_tree_time && product_spec.pass && op_spec.pass) ++ok8;
    }
    report(7, ok7 == 10,
           std::to_string(ok7) + "/10 tracked products rank-one and vanished: worst spread " +
               fmt(worst_spread) + ", row-sum dev " + fmt(worst_sum) + ", Q norm " + fmt(worst_q));
    report(8, ok8 == 10,
           std::to_string(ok8) +
               "/10 spectra with exactly one near-one eigenvalue per dimension, product and operator");
}

void criterion_9() {
    SuiteResult r = run_lemma3_suite(100, 1);
    report(9, r.ok() && r.total == 100,
           std::to_string(r.passed) + "/" + std::to_string(r.total) + " convex-combination limits");
}

void criterion_10() {
    SuiteResult r = run_lemma4_suite(100, 2);
    report(10, r.ok() && r.total == 100,
           std::to_string(r.passed) + "/" + std::to_string(r.total) + " reachability unions preserved");
}

void criterion_11() {
    SuiteResult r = run_spectra_suite(20, 3);
    report(11, r.ok() && r.total == 40,
           std::to_string(r.passed) + "/" + std::to_string(r.total) + " spectral certificates");
}

void criterion_12() {
    int ok = 0;
    for (std::uint64_t s = 200; s < 210; ++s) {
        MatrixWeightedGraph g = pd_instance(s);
        double tau = default_tau(g);
        SimOptions opts;
        opts.net_digest = network_digest(g);
        RunTrace a = simulate(g, tau, UpdateMode::asynchronous, s, opts);
        RunTrace b = simulate(g, tau, UpdateMode::asynchronous, s, opts);
        if (trace_to_string(a) == trace_to_string(b)) ++ok;
    }
    report(12, ok == 10, std::to_string(ok) + "/10 repeated runs serialized byte-identically");
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criteria_7_and_8();
    criterion_9();
    criterion_10();
    criterion_11();
    criterion_12();
    std::printf("%d/12 criteria passed\n", 12 - failures);
    return failures == 0 ? 0 : 1;
}
