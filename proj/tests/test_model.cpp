#include <doctest.h>

#include <vector>

#include "pcsc/errors.hpp"
#include "pcsc/model.hpp"

using namespace pcsc;
using model::EncodedSet;
using model::SourceModel;

namespace {

// Three binary attributes, revealed {0}, hidden {1,2}; same joint as the
// shipped example config.
SourceModel demo_source() {
    return model::make_source(
        {{2, 2, 2}}, {{0}, {1, 2}},
        prob::JointPmf({2, 2, 2}, {0.16, 0.04, 0.06, 0.10, 0.05, 0.09, 0.12, 0.38}));
}

}  // namespace

TEST_CASE("make_source fills Hamming distortion on X_R") {
    auto src = demo_source();
    CHECK(src.recon_size == 2);
    CHECK(src.distortion_at(0, 0) == 0.0);
    CHECK(src.distortion_at(0, 1) == 1.0);
    CHECK(src.distortion_at(1, 0) == 1.0);
    CHECK(src.distortion_at(1, 1) == 0.0);
    CHECK(src.d_max == 1.0);
    CHECK(src.revealed_cells() == 2);
    CHECK(src.hidden_cells() == 4);
    CHECK(src.encoded_cells(EncodedSet{{0, 1}}) == 4);
}

TEST_CASE("project_index follows mixed-radix attribute order") {
    auto src = demo_source();
    // Flat index 6 = (1,1,0): attr0=1, attr1=1, attr2=0.
    CHECK(model::project_index(src, 6, {0}) == 1);
    CHECK(model::project_index(src, 6, {1, 2}) == 2);  // (1,0) base 2
    CHECK(model::project_index(src, 6, {0, 1, 2}) == 6);
    // Exhaustive against a direct mixed-radix oracle on the pair {0,2}.
    for (std::size_t x = 0; x < 8; ++x) {
        std::size_t a0 = x >> 2, a2 = x & 1;
        CHECK(model::project_index(src, x, {0, 2}) == a0 * 2 + a2);
    }
}

TEST_CASE("subset_marginal sums the joint") {
    auto src = demo_source();
    auto pr = model::subset_marginal(src, {0});
    CHECK(pr[0] == doctest::Approx(0.36).epsilon(1e-12));
    CHECK(pr[1] == doctest::Approx(0.64).epsilon(1e-12));
    // H(X_R) frozen: h(0.36).
    CHECK(model::hidden_entropy(src) > 0.0);
}

TEST_CASE("validate flags bad encoded sets") {
    auto src = demo_source();
    CHECK(model::validate(src, EncodedSet{{0}}).empty());
    CHECK(model::validate(src, EncodedSet{{0, 2}}).empty());
    CHECK(!model::validate(src, EncodedSet{{1}}).empty());   // missing R
    CHECK(!model::validate(src, EncodedSet{{0, 3}}).empty());  // out of range
}

TEST_CASE("eval_point coordinates for a deterministic identity channel") {
    auto src = demo_source();
    EncodedSet e{{0}};
    prob::Channel ident(2, 2, {1, 0, 0, 1});
    auto pt = model::eval_point(src, e, ident);
    // X_hat = X_R exactly: zero distortion, rate H(X_R), leakage I(X_H;X_R).
    CHECK(pt.distortion == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(pt.rate == doctest::Approx(0.9426831892554922).epsilon(1e-9));
    CHECK(pt.equivocation + pt.leakage ==
          doctest::Approx(model::hidden_entropy(src)).epsilon(1e-9));
    CHECK(pt.leakage >= 0.0);
}

TEST_CASE("constant channel leaks nothing") {
    auto src = demo_source();
    for (auto& enc : {std::vector<std::size_t>{0}, {0, 1}, {0, 1, 2}}) {
        EncodedSet e{enc};
        std::size_t rows = src.encoded_cells(e);
        std::vector<double> w(rows * 2, 0.0);
        for (std::size_t r = 0; r < rows; ++r) w[r * 2] = 1.0;
        auto pt = model::eval_point(src, e, prob::Channel(rows, 2, std::move(w)));
        CHECK(pt.rate == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(pt.leakage == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(pt.distortion == doctest::Approx(0.64).epsilon(1e-12));  // P(X_R=1)
    }
}

TEST_CASE("lift_channel preserves the evaluated point") {
    auto src = demo_source();
    prob::Channel w(2, 2, {0.8, 0.2, 0.3, 0.7});
    auto base = model::eval_point(src, EncodedSet{{0}}, w);
    for (auto& enc : {std::vector<std::size_t>{0, 1}, {0, 1, 2}}) {
        EncodedSet e{enc};
        auto lifted = model::lift_channel(src, w, e);
        CHECK(lifted.rows() == src.encoded_cells(e));
        auto pt = model::eval_point(src, e, lifted);
        CHECK(pt.rate == doctest::Approx(base.rate).epsilon(1e-9));
        CHECK(pt.distortion == doctest::Approx(base.distortion).epsilon(1e-12));
        CHECK(pt.leakage == doctest::Approx(base.leakage).epsilon(1e-9));
    }
}

TEST_CASE("lift_channel_between composes with direct lift") {
    auto src = demo_source();
    prob::Channel w(4, 2, {0.9, 0.1, 0.6, 0.4, 0.2, 0.8, 0.5, 0.5});
    EncodedSet mid{{0, 1}}, full{{0, 1, 2}};
    auto lifted = model::lift_channel_between(src, w, mid, full);
    REQUIRE(lifted.rows() == 8);
    auto pm = model::eval_point(src, mid, w);
    auto pf = model::eval_point(src, full, lifted);
    CHECK(pf.rate == doctest::Approx(pm.rate).epsilon(1e-9));
    CHECK(pf.distortion == doctest::Approx(pm.distortion).epsilon(1e-12));
    CHECK(pf.leakage == doctest::Approx(pm.leakage).epsilon(1e-9));
}

TEST_CASE("induced_joint enforces the Markov chain") {
    auto src = demo_source();
    EncodedSet e{{0}};
    prob::Channel w(2, 2, {0.8, 0.2, 0.3, 0.7});
    auto j = model::induced_joint(src, e, w);
    REQUIRE(j.rank() == 4);  // three attributes + reproduction
    // Conditioned on X_E = attr 0, the reproduction is independent of the rest:
    // I(X_hat; X_{1,2} | X_0) = H(X_hat|X_0) - H(X_hat|X_0,X_1,X_2) = 0.
    double h_given_e = prob::conditional_entropy(j, {3}, {0});
    double h_given_all = prob::conditional_entropy(j, {3}, {0, 1, 2});
    CHECK(h_given_e == doctest::Approx(h_given_all).epsilon(1e-9));
}
