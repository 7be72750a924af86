#include <catch2/catch_amalgamated.hpp>

#include "matweight/dynamics.hpp"
#include "matweight/rng.hpp"
#include "matweight/weights.hpp"

#include <cstring>

using namespace matweight;

TEST_CASE("generated definite matrices have the requested sign and exact symmetry") {
    SECTION("scalar case") {
        DenseMatrix m = gen_definite(1, +1, 1.0, 3);
        CHECK(m(0, 0) > 0.0);
    }
    SECTION("negative three-dimensional case") {
        DenseMatrix m = gen_definite(3, -1, 1.0, 3);
        for (double ev : symmetric_eigenvalues(m)) CHECK(ev < 0.0);
    }
    SECTION("output equals its transpose bit for bit") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            DenseMatrix m = gen_definite(4, +1, 2.0, seed);
            DenseMatrix t = transpose(m);
            CHECK(std::memcmp(m.data.data(), t.data.data(), m.data.size() * sizeof(double)) == 0);
        }
    }
    SECTION("definiteness holds across dimensions and seeds") {
        for (int d = 1; d <= 6; ++d) {
            for (std::uint64_t seed = 0; seed < 40; ++seed) {
                CHECK(is_positive_definite(gen_definite(d, +1, 1.0, mix_seed(seed, "pd-batch"))));
                CHECK(is_negative_definite(gen_definite(d, -1, 0.5, mix_seed(seed, "nd-batch"))));
            }
        }
    }
}

TEST_CASE("weight assignment mirrors one matrix across each pair") {
    MatrixWeightedGraph ring = gen_regular_ring(10, 4, 3);

    SECTION("positive-definite policy") {
        auto g = assign_weights(ring, WeightPolicy::positive_definite(1.0, 11));
        for (const Edge& e : g.edges()) {
            CHECK(matrix_sign(e.weight) == MatrixSign::positive);
            const DenseMatrix& mirror = g.weight(e.to, e.from);
            CHECK(std::memcmp(e.weight.data.data(), mirror.data.data(),
                              e.weight.data.size() * sizeof(double)) == 0);
        }
    }
    SECTION("partition policy places signs by group membership") {
        std::vector<int> v1{1, 3, 5, 7, 9}, v2{2, 4, 6, 8, 10};
        auto g = assign_weights(ring, WeightPolicy::balanced(v1, v2, 1.0, 11));
        BalanceVerdict verdict = structural_balance(g);
        REQUIRE(verdict.kind == BalanceKind::balanced);
        std::set<int> odd{1, 3, 5, 7, 9};
        for (const Edge& e : g.edges()) {
            bool same_part = odd.count(e.from) == odd.count(e.to);
            CHECK(matrix_sign(e.weight) == (same_part ? MatrixSign::positive : MatrixSign::negative));
        }
    }
    SECTION("negative-definite policy") {
        auto g = assign_weights(ring, WeightPolicy::negative_definite(1.0, 11));
        CHECK(structural_balance(g).kind == BalanceKind::all_negative);
    }
    SECTION("partition must cover the agents exactly") {
        CHECK_THROWS_AS(assign_weights(ring, WeightPolicy::balanced({1, 2, 3}, {4, 5}, 1.0, 0)),
                        std::invalid_argument);
        CHECK_THROWS_AS(
            assign_weights(ring, WeightPolicy::balanced({1, 2, 3, 4, 5, 6}, {6, 7, 8, 9, 10}, 1.0, 0)),
            std::invalid_argument);
        CHECK_THROWS_AS(
            assign_weights(ring, WeightPolicy::balanced({0, 1, 2, 3, 4}, {5, 6, 7, 8, 9}, 1.0, 0)),
            std::invalid_argument);
    }
    SECTION("sign patterns must mention every pair") {
        CHECK_THROWS_AS(assign_weights(ring, WeightPolicy::pattern({{{1, 2}, 1}}, 1.0, 0)),
                        std::invalid_argument);
    }
}

TEST_CASE("step range bound evaluates the signed neighbor sums") {
    SECTION("two agents with scalar weight two") {
        DenseMatrix w(1, 1, std::vector<double>{2.0});
        MatrixWeightedGraph g(2, 1, {{1, 2, w}, {2, 1, w}});
        StepSizeRange range = step_size_upper(g);
        CHECK(range.upper == 0.25);  // 1 / (2 * 2), exact in binary
        CHECK(range.denominator_witness.row == 1);
        CHECK(range.denominator_witness.col == 1);
    }
    SECTION("doubling the weights halves the bound") {
        MatrixWeightedGraph ring = gen_regular_ring(8, 2, 2);
        auto g1 = assign_weights(ring, WeightPolicy::positive_definite(1.0, 17));
        std::vector<Edge> doubled;
        for (const Edge& e : g1.edges()) doubled.push_back({e.from, e.to, scale(e.weight, 2.0)});
        MatrixWeightedGraph g2(g1.n(), g1.d(), std::move(doubled));
        CHECK(step_size_upper(g2).upper ==
              Catch::Approx(0.5 * step_size_upper(g1).upper).epsilon(1e-14));
    }
    SECTION("relabeling agents leaves the bound unchanged") {
        MatrixWeightedGraph ring = gen_regular_ring(7, 2, 2);
        auto g = assign_weights(ring, WeightPolicy::positive_definite(1.0, 19));
        // rotate ids by three
        auto relabel = [&](int a) { return (a + 2) % 7 + 1; };
        std::vector<Edge> moved;
        for (const Edge& e : g.edges()) moved.push_back({relabel(e.from), relabel(e.to), e.weight});
        MatrixWeightedGraph h(7, 2, std::move(moved));
        CHECK(std::abs(step_size_upper(h).upper - step_size_upper(g).upper) <= 1e-12);
    }
    SECTION("adding an in-edge at the witness agent never widens the range") {
        Rng rng(mix_seed(23, "augment"));
        int checked = 0;
        while (checked < 50) {
            int n = 6 + static_cast<int>(rng.next_below(4));
            auto g = assign_weights(gen_regular_ring(n, 2, 2),
                                    WeightPolicy::positive_definite(1.0, rng.next_u64()));
            StepSizeRange before = step_size_upper(g);
            int target = before.denominator_witness.agent;
            int extra = 0;
            for (int cand = 1; cand <= n; ++cand)
                if (cand != target && !g.has_edge(target, cand)) extra = cand;
            if (extra == 0) continue;
            std::vector<Edge> edges = g.edges();
            edges.push_back({target, extra, gen_definite(2, +1, 1.0, rng.next_u64())});
            MatrixWeightedGraph augmented(n, 2, std::move(edges));
            REQUIRE(step_size_upper(augmented).upper <= before.upper + 1e-15);
            ++checked;
        }
    }
    SECTION("error cases") {
        MatrixWeightedGraph edgeless(3, 1, {});
        CHECK_THROWS_AS(step_size_upper(edgeless), std::domain_error);
        DenseMatrix indef = DenseMatrix::from_rows({{1, 0}, {0, -1}});
        MatrixWeightedGraph g(2, 2, {{1, 2, indef}, {2, 1, indef}});
        CHECK_THROWS_AS(step_size_upper(g), std::invalid_argument);
    }
}

TEST_CASE("default step size sits at the midpoint of the admissible interval") {
    CHECK(default_tau(StepSizeRange{0.25, {}}) == 0.125);
    CHECK(default_tau(StepSizeRange{0.5, {}}) > default_tau(StepSizeRange{0.25, {}}));
    MatrixWeightedGraph ring = gen_regular_ring(6, 2, 2);
    auto g = assign_weights(ring, WeightPolicy::positive_definite(1.0, 29));
    StepSizeRange range = step_size_upper(g);
    double tau = default_tau(g);
    CHECK(tau > 0.0);
    CHECK(tau < range.upper);
}

TEST_CASE("inside the admissible range the diagonal update blocks stay positive and stochastic") {
    Rng rng(mix_seed(24, "range-structure"));
    for (int trial = 0; trial < 10; ++trial) {
        int n = 5 + static_cast<int>(rng.next_below(4));
        auto g = assign_weights(gen_regular_ring(n, 4, 2),
                                WeightPolicy::positive_definite(1.0, rng.next_u64()));
        double upper = step_size_upper(g).upper;
        for (double frac : {0.1, 0.5, 0.999}) {
            UpdateOperators ops = build_sync_operator(g, frac * upper);
            for (const DenseMatrix& p : ops.p_blocks) {
                for (int r = 0; r < n; ++r) {
                    REQUIRE(p(r, r) > 0.0);
                    double sum = 0.0;
                    for (int c = 0; c < n; ++c) sum += p(r, c);
                    REQUIRE(std::abs(sum - 1.0) <= 1e-12);
                }
            }
        }
    }
}
