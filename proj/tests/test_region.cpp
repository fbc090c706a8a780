#include <doctest.h>

#include <cmath>
#include <vector>

#include "pcsc/errors.hpp"
#include "pcsc/model.hpp"
#include "pcsc/region.hpp"

using namespace pcsc;
using model::EncodedSet;
using model::SourceModel;

namespace {

double h2(double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

// Uniform binary attribute pair with a correlated hidden bit.
SourceModel correlated_binary() {
    return model::make_source({{2, 2}}, {{0}, {1}},
                              prob::JointPmf({2, 2}, {0.35, 0.15, 0.15, 0.35}));
}

SourceModel demo_source() {
    return model::make_source(
        {{2, 2, 2}}, {{0}, {1, 2}},
        prob::JointPmf({2, 2, 2}, {0.16, 0.04, 0.06, 0.10, 0.05, 0.09, 0.12, 0.38}));
}

}  // namespace

TEST_CASE("min_feasible and zero-rate distortion extremes") {
    auto src = demo_source();
    CHECK(region::min_feasible_distortion(src) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(region::zero_rate_distortion(src) == doctest::Approx(0.36).epsilon(1e-12));
}

TEST_CASE("binary uniform rate-distortion matches 1 - h(D)") {
    auto src = correlated_binary();
    EncodedSet e{{0}};
    std::vector<double> grid{0.0, 0.05, 0.1, 0.2, 0.3, 0.45, 0.5};
    auto curve = region::rd_curve(src, e, grid);
    REQUIRE(curve.size() == grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double expect = grid[i] < 0.5 ? 1.0 - h2(grid[i]) : 0.0;
        CHECK(std::abs(curve[i].r - expect) <= 1e-5);
    }
}

TEST_CASE("rd_curve monotone and convex on the demo source") {
    auto src = demo_source();
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) grid.push_back(0.025 * i);
    auto curve = region::rd_curve(src, EncodedSet{{0}}, grid);
    for (std::size_t i = 1; i < curve.size(); ++i) {
        CHECK(curve[i].r <= curve[i - 1].r + 1e-9);
    }
    for (std::size_t i = 1; i + 1 < curve.size(); ++i) {
        // Midpoint below the chord.
        CHECK(2.0 * curve[i].r <= curve[i - 1].r + curve[i + 1].r + 1e-6);
    }
    // Endpoints: R(0) = H(X_R), R(D >= zero-rate point) = 0.
    CHECK(curve.front().r == doctest::Approx(0.9426831892554922).epsilon(1e-6));
    CHECK(curve.back().r == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("rd_curve identical across encoded sets") {
    auto src = demo_source();
    std::vector<double> grid{0.0, 0.1, 0.2, 0.3, 0.4};
    auto base = region::rd_curve(src, EncodedSet{{0}}, grid);
    for (auto& enc : {std::vector<std::size_t>{0, 1}, {0, 1, 2}}) {
        auto other = region::rd_curve(src, EncodedSet{enc}, grid);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            CHECK(std::abs(other[i].r - base[i].r) <= 1e-4);
        }
    }
}

TEST_CASE("min_leakage basics") {
    region::SolverParams params;
    SUBCASE("independent hidden attribute leaks nothing") {
        auto src = model::make_source(
            {{2, 2}}, {{0}, {1}},
            prob::JointPmf({2, 2}, {0.4 * 0.3, 0.4 * 0.7, 0.6 * 0.3, 0.6 * 0.7}));
        for (double d : {0.0, 0.1, 0.3}) {
            auto res = region::min_leakage(src, EncodedSet{{0}}, d, params);
            CHECK(res.value <= 1e-7);
        }
    }
    SUBCASE("zero-rate distortion gives zero leakage") {
        auto src = correlated_binary();
        auto res = region::min_leakage(src, EncodedSet{{0}}, 0.5, params);
        CHECK(res.value <= 1e-9);
    }
    SUBCASE("nonincreasing in D with converged status") {
        auto src = correlated_binary();
        double prev = 1e9;
        for (double d : {0.0, 0.1, 0.2, 0.3, 0.4}) {
            auto res = region::min_leakage(src, EncodedSet{{0}}, d, params);
            CHECK(res.converged);
            CHECK(res.value <= prev + 1e-9);
            prev = res.value;
            // Witness actually attains the reported point.
            auto pt = model::eval_point(src, EncodedSet{{0}}, res.witness);
            CHECK(pt.distortion <= d + 1e-8);
            CHECK(pt.leakage == doctest::Approx(res.value).epsilon(1e-6));
        }
    }
    SUBCASE("infeasible distortion refused") {
        auto src = correlated_binary();
        CHECK_THROWS_AS(region::min_leakage(src, EncodedSet{{0}}, -0.5, params),
                        UsageError);
    }
}

TEST_CASE("solver matches the grid oracle on small instances") {
    region::SolverParams params;
    auto src = correlated_binary();
    EncodedSet e{{0}};
    for (double d : {0.05, 0.15, 0.25}) {
        auto oracle = region::grid_oracle(src, e, d, 0.02);
        auto sol = region::min_leakage(src, e, d, params);
        CHECK(sol.value <= oracle.leakage + 1e-9);  // oracle channels are feasible
        CHECK(std::abs(sol.value - oracle.leakage) <= oracle.resolution_bound);
    }
}

TEST_CASE("grid oracle at step 1 is the deterministic-map brute force") {
    auto src = correlated_binary();
    auto res = region::grid_oracle(src, EncodedSet{{0}}, 0.0, 1.0);
    // Rows on the step-1 simplex are point masses: 2^2 maps.
    CHECK(res.channels_scanned == 4);
    // D = 0 forces the identity map; leakage is I(X_H; X_R).
    double expect = 1.0 - h2(0.3);
    CHECK(res.leakage == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("grid oracle refuses over budget") {
    auto demo = demo_source();
    CHECK_THROWS_AS(
        region::grid_oracle(demo, EncodedSet{{0, 1, 2}}, 0.1, 0.001),
        BudgetError);
}

TEST_CASE("rate_at_min_leakage stays above the rate-distortion curve") {
    region::SolverParams params;
    auto src = demo_source();
    EncodedSet e{{0, 1}};
    std::vector<double> grid{0.05, 0.15, 0.25};
    auto rd = region::rd_curve(src, e, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        auto stage1 = region::min_leakage(src, e, grid[i], params);
        auto stage2 =
            region::rate_at_min_leakage(src, e, grid[i], stage1.value, params,
                                        {stage1.witness});
        CHECK(stage2.converged);
        CHECK(stage2.value >= rd[i].r - 1e-6);
        auto pt = model::eval_point(src, e, stage2.witness);
        CHECK(pt.distortion <= grid[i] + 1e-8);
        CHECK(pt.leakage <= stage1.value + params.lex_slack + 1e-8);
    }
}

TEST_CASE("membership basics") {
    region::SolverParams params;
    auto src = correlated_binary();
    EncodedSet e{{0}};
    SUBCASE("any evaluated channel point is a member") {
        prob::Channel w(2, 2, {0.7, 0.3, 0.2, 0.8});
        auto pt = model::eval_point(src, e, w);
        auto res = region::membership(
            src, e, {pt.rate, pt.distortion, pt.leakage}, 1e-9, params, {w});
        CHECK(res.member);
    }
    SUBCASE("corner point via the constant channel") {
        auto res = region::membership(src, e, {0.0, 1.0, 0.0}, 1e-9, params);
        CHECK(res.member);
    }
    SUBCASE("zero rate cannot reach zero distortion") {
        auto res = region::membership(src, e, {0.0, 0.0, 1.0}, 1e-6, params);
        CHECK(!res.member);
        CHECK(res.max_violation > 1e-3);
    }
}

TEST_CASE("inclusion ordering over nested encoded sets") {
    region::SolverParams params;
    auto src = demo_source();
    std::vector<double> grid{0.0, 0.1, 0.2, 0.3};
    auto rep = region::inclusion_check(src, EncodedSet{{0}}, EncodedSet{{0, 1, 2}},
                                       grid, 1e-6, params);
    CHECK(rep.all_ordered);
    for (const auto& row : rep.rows) {
        CHECK(row.leakage_large_set <= row.leakage_small_set + 1e-6);
    }
}

TEST_CASE("convexity certificate passes") {
    region::SolverParams params;
    auto src = demo_source();
    auto rep = region::convexity_certificate(src, EncodedSet{{0, 1}}, 10, params);
    CHECK(rep.all_passed);
    CHECK(rep.trials.size() == 10);
}

TEST_CASE("random_channel is row-stochastic and seed-stable") {
    auto w1 = region::random_channel(3, 4, 7, 2);
    auto w2 = region::random_channel(3, 4, 7, 2);
    auto w3 = region::random_channel(3, 4, 8, 2);
    CHECK(w1.probs() == w2.probs());
    CHECK(w1.probs() != w3.probs());
    for (std::size_t r = 0; r < 3; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < 4; ++c) s += w1(r, c);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}
