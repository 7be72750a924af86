#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "matweight/analysis.hpp"
#include "matweight/graph.hpp"
#include "matweight/io.hpp"
#include "matweight/linalg.hpp"
#include "matweight/rng.hpp"
#include "matweight/weights.hpp"

namespace matweight {

struct SuiteResult {
    std::string suite;
    int total = 0;
    int passed = 0;
    std::vector<json> failures;

    bool ok() const { return total > 0 && passed == total; }
};

namespace detail {

/// Random row-stochastic matrix with all entries strictly positive.
inline DenseMatrix random_positive_stochastic(int m, Rng& rng) {
    DenseMatrix t(m, m);
    for (int r = 0; r < m; ++r) {
        double sum = 0.0;
        for (int c = 0; c < m; ++c) {
            t(r, c) = rng.uniform(0.05, 1.0);
            sum += t(r, c);
        }
        for (int c = 0; c < m; ++c) t(r, c) /= sum;
    }
    return t;
}

/// Random row-stochastic matrix with strictly positive diagonal and a sparse
/// off-diagonal support pattern.
inline DenseMatrix random_stochastic_positive_diagonal(int m, Rng& rng) {
    DenseMatrix t(m, m);
    double edge_prob = rng.uniform(0.2, 0.6);
    for (int r = 0; r < m; ++r) {
        t(r, r) = rng.uniform(0.2, 1.0);
        double sum = t(r, r);
        for (int c = 0; c < m; ++c) {
            if (c == r) continue;
            if (rng.next_unit() < edge_prob) {
                t(r, c) = rng.uniform(0.05, 1.0);
                sum += t(r, c);
            }
        }
        for (int c = 0; c < m; ++c) t(r, c) /= sum;
    }
    return t;
}

inline json matrix_to_json(const DenseMatrix& m) {
    return json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

}  // namespace detail

/// Randomized check of the split-limit rule: A row-stochastic and positive,
/// B a small zero-row-sum perturbation keeping A + B entrywise positive, so
/// both hypotheses hold and (A + B)^t must converge.  A 100-step lookahead
/// past the detected limit guards against premature stopping.
inline SuiteResult run_lemma3_suite(int count = 100, std::uint64_t seed = 0) {
    SuiteResult result;
    result.suite = "lemma3";
    Rng rng(mix_seed(seed, "lemma3"));
    for (int idx = 0; idx < count; ++idx) {
        ++result.total;
        int m = 2 + static_cast<int>(rng.next_below(5));
        double alpha = rng.uniform(0.2, 0.8);
        DenseMatrix t = detail::random_positive_stochastic(m, rng);
        DenseMatrix a = DenseMatrix::identity(m);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c) a(r, c) = (r == c ? 1.0 - alpha : 0.0) + alpha * t(r, c);

        DenseMatrix z(m, m);
        double max_abs_z = 0.0;
        for (int r = 0; r < m; ++r) {
            double mean = 0.0;
            for (int c = 0; c < m; ++c) {
                z(r, c) = rng.uniform(-1.0, 1.0);
                mean += z(r, c);
            }
            mean /= m;
            for (int c = 0; c < m; ++c) {
                z(r, c) -= mean;
                max_abs_z = std::max(max_abs_z, std::abs(z(r, c)));
            }
        }
        double min_a = a.data[0];
        for (double v : a.data) min_a = std::min(min_a, v);
        double beta = max_abs_z > 0.0 ? 0.4 * min_a / max_abs_z : 0.0;
        DenseMatrix b = scale(z, beta);

        SumProductReport report = sum_product_limit(a, b);
        bool pass = report.hypotheses_hold && report.product.status == LimitStatus::converged_to_matrix;
        std::string detail_msg;
        if (pass) {
            DenseMatrix c = add(a, b);
            DenseMatrix rolled = *report.product.limit;
            for (int extra = 0; extra < 100; ++extra) rolled = multiply(rolled, c);
            double resurge = max_abs_diff(rolled, *report.product.limit);
            if (resurge > 1e-8) {
                pass = false;
                detail_msg = "limit drifted after lookahead, max diff " + format_double(resurge);
            }
        } else {
            detail_msg = report.hypotheses_hold ? "sum power did not converge to a matrix"
                                                : "constructed pair failed its own hypotheses";
        }
        if (pass) {
            ++result.passed;
        } else {
            result.failures.push_back(json{{"suite", result.suite},
                                           {"index", idx},
                                           {"detail", detail_msg},
                                           {"a", detail::matrix_to_json(a)},
                                           {"b", detail::matrix_to_json(b)}});
        }
    }
    return result;
}

/// Randomized check of support growth under products: for row-stochastic
/// factors with positive diagonals, the product's induced graph contains the
/// union of the factors' induced graphs.
inline SuiteResult run_lemma4_suite(int count = 100, std::uint64_t seed = 0) {
    SuiteResult result;
    result.suite = "lemma4";
    Rng rng(mix_seed(seed, "lemma4"));
    for (int idx = 0; idx < count; ++idx) {
        ++result.total;
        int m = 2 + static_cast<int>(rng.next_below(5));
        DenseMatrix a = detail::random_stochastic_positive_diagonal(m, rng);
        DenseMatrix b = detail::random_stochastic_positive_diagonal(m, rng);
        DirectedGraph combined = union_graphs({induced_graph(a), induced_graph(b)});
        DirectedGraph product = induced_graph(multiply(a, b));
        if (contains_graph(product, combined)) {
            ++result.passed;
        } else {
            result.failures.push_back(json{{"suite", result.suite},
                                           {"index", idx},
                                           {"detail", "product support lost an edge of the union"},
                                           {"a", detail::matrix_to_json(a)},
                                           {"b", detail::matrix_to_json(b)}});
        }
    }
    return result;
}

namespace detail {

inline MatrixWeightedGraph random_ring_instance(Rng& rng, std::uint64_t weight_seed, int sign) {
    // Chord edges (k = 4) put triangles in the skeleton, so with all-negative
    // weights the signed graph is never two-colorable and the zero-consensus
    // regime genuinely applies; an all-negative even cycle would instead be
    // balanced and reach a sign-split pattern.
    int n = 6 + static_cast<int>(rng.next_below(5));  // 6..10
    int d = 2 + static_cast<int>(rng.next_below(2));  // 2..3
    MatrixWeightedGraph skeleton = gen_regular_ring(n, 4, d);
    WeightPolicy policy = sign > 0 ? WeightPolicy::positive_definite(1.0, weight_seed)
                                   : WeightPolicy::negative_definite(1.0, weight_seed);
    return assign_weights(skeleton, policy);
}

inline MatrixWeightedGraph random_unbalanced_instance(Rng& rng, std::uint64_t weight_seed) {
    for (int attempt = 0; attempt < 50; ++attempt) {
        int n = 4 + static_cast<int>(rng.next_below(7));
        int k = (n > 5 && rng.next_unit() < 0.5) ? 4 : 2;
        int d = 2 + static_cast<int>(rng.next_below(2));
        MatrixWeightedGraph skeleton = gen_regular_ring(n, k, d);
        std::map<std::pair<int, int>, int> signs;
        for (const Edge& e : skeleton.edges()) {
            auto key = std::minmax(e.from, e.to);
            if (!signs.count({key.first, key.second}))
                signs[{key.first, key.second}] = rng.next_unit() < 0.5 ? 1 : -1;
        }
        MatrixWeightedGraph g =
            assign_weights(skeleton, WeightPolicy::pattern(signs, 1.0, weight_seed + static_cast<std::uint64_t>(attempt)));
        if (structural_balance(g).kind == BalanceKind::unbalanced) return g;
    }
    throw std::runtime_error("random_unbalanced_instance: no unbalanced pattern found");
}

}  // namespace detail

/// Spectral certificates over random all-negative-definite and unbalanced
/// ring networks at the default step size.
inline SuiteResult run_spectra_suite(int count_each = 20, std::uint64_t seed = 0) {
    SuiteResult result;
    result.suite = "spectra";
    Rng rng(mix_seed(seed, "spectra"));
    for (int idx = 0; idx < 2 * count_each; ++idx) {
        ++result.total;
        bool negative = idx < count_each;
        std::uint64_t sub = mix_seed(mix_seed(seed, "spectra-w"), static_cast<std::uint64_t>(idx), 0);
        MatrixWeightedGraph g = negative ? detail::random_ring_instance(rng, sub, -1)
                                         : detail::random_unbalanced_instance(rng, sub);
        double tau = default_tau(g);
        LemmaReport report = verify_appendix_spectra(g, tau);
        if (report.pass) {
            ++result.passed;
        } else {
            result.failures.push_back(json{{"suite", result.suite},
                                           {"index", idx},
                                           {"regime", negative ? "all_nd" : "unbalanced"},
                                           {"report", report_to_json(report)},
                                           {"network", network_to_json(g)}});
        }
    }
    return result;
}

/// Synchronous limit checks: all-negative-definite and unbalanced networks
/// must drive the operator powers to zero; all-positive-definite controls
/// must not.
inline SuiteResult run_sync_zero_suite(int count_each = 10, std::uint64_t seed = 0) {
    SuiteResult result;
    result.suite = "sync_zero";
    Rng rng(mix_seed(seed, "sync-zero"));
    for (int idx = 0; idx < 3 * count_each; ++idx) {
        ++result.total;
        int regime_idx = idx / count_each;
        std::uint64_t sub = mix_seed(mix_seed(seed, "sync-zero-w"), static_cast<std::uint64_t>(idx), 0);
        MatrixWeightedGraph g = regime_idx == 0   ? detail::random_ring_instance(rng, sub, -1)
                                : regime_idx == 1 ? detail::random_unbalanced_instance(rng, sub)
                                                  : detail::random_ring_instance(rng, sub, +1);
        ZeroRegime regime = regime_idx == 0   ? ZeroRegime::all_nd
                            : regime_idx == 1 ? ZeroRegime::unbalanced
                                              : ZeroRegime::pd_control;
        LemmaReport report = verify_sync_zero(g, default_tau(g), regime);
        if (report.pass) {
            ++result.passed;
        } else {
            result.failures.push_back(json{{"suite", result.suite},
                                           {"index", idx},
                                           {"regime", report.lemma},
                                           {"report", report_to_json(report)},
                                           {"network", network_to_json(g)}});
        }
    }
    return result;
}

}  // namespace matweight
