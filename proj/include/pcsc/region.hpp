#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pcsc/model.hpp"
#include "pcsc/prob.hpp"

namespace pcsc::region {

// One point of the (rate, distortion, leakage) region; equivocation is
// H(X_H) - leakage and is not stored.
struct TradeoffPoint {
    double rate;
    double distortion;
    double leakage;
};

struct SolverParams {
    double objective_tol = 1e-9;
    std::size_t max_iters = 2000;
    std::size_t restarts = 16;
    double grid_step = 0.02;
    double lex_slack = 1e-5;
    std::uint64_t seed = 1;
};

struct SolveResult {
    double value;
    prob::Channel witness;
    bool converged;
    double gap;  // final Frank-Wolfe duality gap
};

struct RdPoint {
    double d;
    double r;
    prob::Channel witness;
};

struct MembershipResult {
    bool member;
    double max_violation;
    prob::Channel witness;
};

struct MixtureWitness {
    double lambda;
    TradeoffPoint mixture;
    prob::Channel channel;
    bool member;
};

struct ConvexityReport {
    std::vector<MixtureWitness> trials;
    bool all_passed;
};

struct InclusionRow {
    double d;
    double leakage_small_set;  // L* for e1
    double leakage_large_set;  // L* for e2
    bool ordered;
};

struct InclusionReport {
    std::vector<InclusionRow> rows;
    bool all_ordered;
};

struct OracleResult {
    double leakage;            // minimum over the discretized channel polytope
    double rate;               // minimum rate among leakage-optimal grid channels
    double resolution_bound;   // guaranteed |grid optimum - true optimum| bound
    prob::Channel witness;
    std::size_t channels_scanned;
};

/// Smallest achievable expected distortion (per-row argmin channel).
double min_feasible_distortion(const model::SourceModel& src);

/// Expected distortion of the best constant-output channel; rate is 0 there.
double zero_rate_distortion(const model::SourceModel& src);

/// R(D) for each grid distortion, via Blahut-Arimoto on the Lagrangian family
/// with a slope search per grid point. Monotone nonincreasing and convex.
std::vector<RdPoint> rd_curve(const model::SourceModel& src, const model::EncodedSet& e,
                              const std::vector<double>& d_grid,
                              const SolverParams& params = {});

/// Minimum I(X_H; X_hat_R) subject to expected distortion <= D.
/// warm_starts are extra feasible candidates (e.g. lifted witnesses); the
/// result is never worse than the best repaired start.
SolveResult min_leakage(const model::SourceModel& src, const model::EncodedSet& e, double d,
                        const SolverParams& params,
                        const std::vector<prob::Channel>& warm_starts = {});

/// Second lexicographic stage: minimum rate with distortion <= D and leakage
/// <= l_star + lex_slack.
SolveResult rate_at_min_leakage(const model::SourceModel& src, const model::EncodedSet& e,
                                double d, double l_star, const SolverParams& params,
                                const std::vector<prob::Channel>& warm_starts = {});

/// Is (R, D, L) dominated by some test channel, up to tol per coordinate?
MembershipResult membership(const model::SourceModel& src, const model::EncodedSet& e,
                            const TradeoffPoint& point, double tol,
                            const SolverParams& params,
                            const std::vector<prob::Channel>& hints = {});

/// Pointwise check that the larger encoded set never leaks more: for each
/// grid D, L*(e2, D) <= L*(e1, D) + tol, witnesses lifted from e1 into e2.
InclusionReport inclusion_check(const model::SourceModel& src, const model::EncodedSet& e1,
                                const model::EncodedSet& e2,
                                const std::vector<double>& d_grid, double tol,
                                const SolverParams& params);

/// Random mixture-membership trials certifying convexity of the region.
ConvexityReport convexity_certificate(const model::SourceModel& src, const model::EncodedSet& e,
                                      std::size_t trials, const SolverParams& params);

/// Exhaustive search over channels whose rows lie on the step-discretized
/// simplex. Independent reference for the iterative solvers.
OracleResult grid_oracle(const model::SourceModel& src, const model::EncodedSet& e,
                         double d, double step, double lex_slack = 1e-12);

/// Uniformly random channel (rows i.i.d. on the simplex interior).
prob::Channel random_channel(std::size_t rows, std::size_t cols, std::uint64_t seed,
                             std::uint64_t stream = 0);

}  // namespace pcsc::region
