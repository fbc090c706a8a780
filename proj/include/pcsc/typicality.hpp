#pragma once

#include <cstddef>
#include <vector>

#include "pcsc/prob.hpp"

namespace pcsc::mtypes {

using Sequence = std::vector<std::size_t>;

inline constexpr double kEnumBudget = 1e8;

// Empirical symbol counts of one sequence.
struct TypeStats {
    std::size_t n;
    std::vector<std::size_t> counts;

    std::vector<double> freq() const;
};

// Empirical pair counts of a sequence pair, with the conditional matrix
// V(b|a) = N(a,b)/N(a) on rows where N(a) > 0.
struct CondTypeStats {
    std::size_t n;
    std::size_t rows;
    std::size_t cols;
    std::vector<std::size_t> pair_counts;  // rows x cols, row-major
    std::vector<std::size_t> row_counts;

    bool defined(std::size_t a) const { return row_counts[a] > 0; }
    double v(std::size_t a, std::size_t b) const;
};

// The deviation constants of the block-coding analysis, kept as explicit
// formulas. Note the two distinct "delta2" conventions in circulation: one
// from the typicality implication lemma, one from the codebook-existence
// argument. They are different numbers and are never interchangeable.
struct TypicalityParams {
    double delta = 0.1;
    double tau = 0.05;
    double c = 1.0;

    static double delta1(double delta, std::size_t xe_size, std::size_t xr_size) {
        return static_cast<double>(xe_size - xr_size) * delta;
    }
    static double delta2_lemma(double delta, std::size_t y_size) {
        return static_cast<double>(y_size + 1) * delta;
    }
    static double delta2_app(double delta, std::size_t xec_size) {
        return delta / static_cast<double>(xec_size);
    }
    static double delta3(double delta, std::size_t xh_size) {
        return static_cast<double>(xh_size + 1) * 2.0 * delta;
    }
    // tau * (log|X_H| + 5) + 4 tau log2(|X_H| 2^R / (2 tau)) < eps.
    static bool tau_small_enough(double tau, double eps, double rate, std::size_t xh_size);
};

TypeStats type_of(const Sequence& x, std::size_t alphabet);
CondTypeStats cond_type_of(const Sequence& x, std::size_t ax, const Sequence& y,
                           std::size_t ay);

/// Deviation |N(a)/n - P(a)| <= delta for all a, and no out-of-support symbol.
bool is_typical(const Sequence& x, const std::vector<double>& p, double delta);

/// |N(a,b)/n - (N(a)/n) W(b|a)| <= delta for all (a,b), and N(a,b) = 0
/// wherever W(b|a) = 0.
bool is_cond_typical(const Sequence& y, const Sequence& x, const prob::Channel& w,
                     double delta);

/// Pair typicality against a joint pmf over ax x ay (row-major).
bool is_jointly_typical(const Sequence& x, const Sequence& y,
                        const std::vector<double>& pxy, std::size_t ay, double delta);

/// Exhaustive scan of all |X|^n sequences; refuses past the budget.
std::vector<Sequence> enumerate_typical(const std::vector<double>& p, double delta,
                                        std::size_t n);

/// All y^n conditionally typical with x under w; same budget rule.
std::vector<Sequence> enumerate_cond_typical(const prob::Channel& w, const Sequence& x,
                                             double delta);

// ---- Executable lemma checks ------------------------------------------------

struct CardinalityPoint {
    std::size_t n;
    double delta;
    std::size_t count;
    double eps;  // |1/n log2|T| - H|
};

struct CardinalityReport {
    std::vector<CardinalityPoint> points;
    bool trending_down;  // last eps <= first eps among nonempty points
    bool any_empty;
};

/// Realized gap between (1/n) log2 |T_delta(n)^n(P)| and H(P) along the
/// schedule delta(n) = (c/sqrt(n)) log2 n.
CardinalityReport check_lemma_cardinality(const std::vector<double>& p,
                                          const std::vector<std::size_t>& n_list, double c);

/// Conditional variant: |T_delta^n(W|x^n)| vs H(W|P), with x^n a
/// deterministic sequence whose type rounds P.
CardinalityReport check_lemma_cardinality_cond(const prob::Channel& w,
                                               const std::vector<double>& p,
                                               const std::vector<std::size_t>& n_list,
                                               double c);

struct ImplicationReport {
    std::size_t pairs_checked;
    std::size_t chain_applicable;      // x typical and y cond-typical
    std::size_t chain_counterexamples; // ... but pair not jointly typical
    std::size_t project_applicable;      // pair jointly typical
    std::size_t project_counterexamples; // ... but a projection fails
    std::size_t exclusion_applicable;      // y typical, pair not 2delta-typical
    std::size_t exclusion_counterexamples; // ... but x still cond-typical given y
    bool all_pass;
};

/// Exhaustive pair scan verifying the three typicality implications
/// (chaining, projection with delta1 = |Y| delta / delta2 = (|Y|+1) delta,
/// and the exclusion contrapositive) against a full-support joint pmf.
ImplicationReport check_lemma_implications(const std::vector<double>& pxy, std::size_t ax,
                                           std::size_t ay, std::size_t n, double delta);

struct ProbabilityReport {
    double prob;        // Pr{X^n in T_delta^n(P)}, exact
    double bound;       // 1 - 2|X| e^{-2 delta^2 n}
    bool holds;
    double cond_min_prob;  // min over x^n types of Pr{Y^n in T_delta(W|x^n)}
    double cond_bound;     // 1 - 2|X||Y| e^{-2 delta^2 n}
    bool cond_holds;
};

/// Exact enumeration of the typical-set probability and its per-x^n
/// conditional counterpart (w may be null to skip the conditional part).
ProbabilityReport check_lemma_probability(const std::vector<double>& p,
                                          const prob::Channel* w, std::size_t n,
                                          double delta);

struct ScheduleReport {
    bool delta_to_zero;        // delta strictly decreasing over the tail
    bool sqrt_n_delta_grows;   // sqrt(n) delta(n) strictly increasing
};

/// Numeric check of the two schedule limits on an increasing n list.
ScheduleReport check_delta_schedule(double c, const std::vector<std::size_t>& n_list);

}  // namespace pcsc::mtypes
