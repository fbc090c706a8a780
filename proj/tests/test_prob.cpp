#include <doctest.h>

#include <cmath>
#include <vector>

#include "pcsc/errors.hpp"
#include "pcsc/prob.hpp"
#include "pcsc/rng.hpp"

using namespace pcsc;
using prob::Channel;
using prob::JointPmf;
using prob::Pmf;

namespace {

// Random pmf on the simplex interior, deterministic per (seed, stream).
std::vector<double> random_pmf(std::size_t m, std::uint64_t stream) {
    CounterRng rng(99, stream);
    std::vector<double> p(m);
    double s = 0.0;
    for (auto& x : p) {
        x = -std::log(std::max(rng.next_double(), 1e-300));
        s += x;
    }
    for (auto& x : p) x /= s;
    return p;
}

}  // namespace

TEST_CASE("pmf validation") {
    CHECK_NOTHROW(Pmf({0.5, 0.5}));
    CHECK_THROWS_AS(Pmf({0.5, 0.6}), ValidationError);
    CHECK_THROWS_AS(Pmf({0.5, -0.1, 0.6}), ValidationError);
    CHECK_THROWS_AS(Pmf({}), ValidationError);
}

TEST_CASE("entropy oracle values") {
    CHECK(prob::entropy(Pmf({1.0, 0.0})) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(prob::entropy(Pmf({0.5, 0.5})) == doctest::Approx(1.0).epsilon(1e-12));
    // Frozen reference: -0.25 log2 0.25 - 0.75 log2 0.75.
    CHECK(prob::entropy(Pmf({0.25, 0.75})) ==
          doctest::Approx(0.8112781244591328).epsilon(1e-12));
    CHECK(prob::entropy(Pmf({0.25, 0.25, 0.25, 0.25})) ==
          doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("conditional entropy oracle value") {
    JointPmf j({2, 2}, {0.4, 0.1, 0.1, 0.4});
    // H(A,B) = 1.721928..., H(B) = 1, so H(A|B) = 0.721928...
    CHECK(prob::conditional_entropy(j, {0}, {1}) ==
          doctest::Approx(0.7219280948873621).epsilon(1e-12));
}

TEST_CASE("mutual information") {
    SUBCASE("product distribution is independent") {
        JointPmf j({2, 3}, {0.3 * 0.2, 0.3 * 0.5, 0.3 * 0.3,
                            0.7 * 0.2, 0.7 * 0.5, 0.7 * 0.3});
        CHECK(prob::mutual_information(j, {0}, {1}) ==
              doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("identity channel on alphabet 4") {
        JointPmf j({4, 4}, {0.25, 0, 0, 0, 0, 0.25, 0, 0,
                            0, 0, 0.25, 0, 0, 0, 0, 0.25});
        CHECK(prob::mutual_information(j, {0}, {1}) ==
              doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("uniform bit through BSC(0.1)") {
        JointPmf j = prob::compose(Pmf({0.5, 0.5}),
                                   Channel(2, 2, {0.9, 0.1, 0.1, 0.9}));
        // Frozen reference: 1 - h(0.1).
        CHECK(prob::mutual_information(j, {0}, {1}) ==
              doctest::Approx(0.5310044064107188).epsilon(1e-9));
    }
    SUBCASE("overlapping axes rejected") {
        JointPmf j({2, 2}, {0.25, 0.25, 0.25, 0.25});
        CHECK_THROWS_AS(prob::mutual_information(j, {0}, {0}), UsageError);
    }
}

TEST_CASE("variational distance") {
    Pmf p({0.6, 0.4});
    CHECK(prob::variational_distance(p, p) == doctest::Approx(0.0));
    CHECK(prob::variational_distance(Pmf({1, 0}), Pmf({0, 1})) == doctest::Approx(2.0));
    CHECK(prob::variational_distance(p, Pmf({0.5, 0.5})) ==
          doctest::Approx(0.2).epsilon(1e-12));
    CHECK_THROWS_AS(prob::variational_distance(p, Pmf({1.0, 0.0, 0.0})), UsageError);
}

TEST_CASE("marginalize") {
    JointPmf j({2, 3}, {0.1, 0.2, 0.05, 0.15, 0.3, 0.2});
    auto m = prob::marginalize(j, {1});
    REQUIRE(m.cells() == 3);
    CHECK(m.probs()[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(m.probs()[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(m.probs()[2] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK_THROWS_AS(prob::marginalize(j, {}), UsageError);
}

TEST_CASE("compose oracle value") {
    auto j = prob::compose(Pmf({0.3, 0.7}), Channel(2, 2, {0.9, 0.1, 0.2, 0.8}));
    CHECK(j.probs()[0] == doctest::Approx(0.27).epsilon(1e-12));
    CHECK(j.probs()[1] == doctest::Approx(0.03).epsilon(1e-12));
    CHECK(j.probs()[2] == doctest::Approx(0.14).epsilon(1e-12));
    CHECK(j.probs()[3] == doctest::Approx(0.56).epsilon(1e-12));
}

TEST_CASE("chain rule and information bounds on random joints") {
    for (std::uint64_t t = 0; t < 50; ++t) {
        auto flat = random_pmf(6, t);
        JointPmf j({2, 3}, flat);
        double hab = prob::entropy_bits(flat);
        double ha = prob::entropy_bits(prob::marginalize(j, {0}).probs());
        double hb = prob::entropy_bits(prob::marginalize(j, {1}).probs());
        double hb_a = prob::conditional_entropy(j, {1}, {0});
        CHECK(hab == doctest::Approx(ha + hb_a).epsilon(1e-9));
        double mi = prob::mutual_information(j, {0}, {1});
        CHECK(mi >= 0.0);
        CHECK(mi <= std::min(ha, hb) + 1e-9);
    }
}

TEST_CASE("entropy continuity bound for close distributions") {
    // |H(P) - H(Q)| <= -d log2(d / |X|) whenever d = d_v(P, Q) < 1/2.
    std::size_t checked = 0;
    for (std::uint64_t t = 0; t < 2000; ++t) {
        auto p = random_pmf(4, 2 * t);
        auto q = random_pmf(4, 2 * t + 1);
        double d = prob::variational_distance(Pmf(p), Pmf(q));
        if (d >= 0.5 || d == 0.0) continue;
        ++checked;
        double lhs = std::abs(prob::entropy_bits(p) - prob::entropy_bits(q));
        CHECK(lhs <= -d * std::log2(d / 4.0) + 1e-12);
    }
    CHECK(checked > 100);
}

TEST_CASE("entropy invariant under permutation") {
    Pmf p({0.1, 0.2, 0.3, 0.4});
    Pmf q({0.4, 0.1, 0.3, 0.2});
    CHECK(prob::entropy(p) == doctest::Approx(prob::entropy(q)).epsilon(1e-12));
}
