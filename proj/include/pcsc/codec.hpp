#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcsc/model.hpp"
#include "pcsc/typicality.hpp"

namespace pcsc::codec {

// Random codebook over the reproduction alphabet. Index m doubles as the
// fallback: when no word is conditionally typical with the source block, the
// encoder emits m and the decoder still outputs word m.
struct Codebook {
    std::size_t n;
    double rate_target;
    std::size_t m;  // ceil(2^{n R})
    std::vector<mtypes::Sequence> words;
    double delta;
    std::uint64_t seed;
};

struct EmpiricalMeasures {
    double r_n;  // (1/n) log2 m
    double u_n;  // expected per-symbol distortion
    double e_n;  // (1/n) H(X_H^n | J)
    double l_n;  // H(X_H) - e_n
    bool exact;
    double u_std_err;  // Monte-Carlo only; 0 in exact mode
};

// Probability masses of the encoder-induced partitions, plus the refined
// typicality partition. Index j is 0-based here; slot m-1 is the fallback.
struct PartitionSets {
    std::size_t m;
    std::vector<double> pr_a;       // Pr{X_E^n in A(j)} == Pr{J = j}
    std::vector<double> pr_b;      // Pr{X_K^n in B(j)}, summed independently
    std::vector<double> pr_atilde;  // Pr{X_K^n in Atilde(j)}
    std::vector<std::size_t> size_b;
    std::vector<std::size_t> size_atilde;
    bool atilde_subset_of_b;  // Atilde(j) subseteq B(j) for j < m
    bool partitions_cover;    // A and Atilde masses each sum to 1
    double eq_identity_gap;   // max_j |Pr A(j) - Pr B(j)|
    bool evaluated;           // partition pass ran (skipped past the budget)
};

struct BoundCheck {
    std::string name;
    double lhs;
    double rhs;
    bool satisfied;
    bool exact;  // identities that must hold at every n, not just asymptotically
};

struct BoundsReport {
    std::vector<BoundCheck> checks;
    bool exact_all_hold;
};

/// (c / sqrt(n)) * log2 n.
double delta_schedule(std::size_t n, double c);

/// m = ceil(2^{n R}) words drawn i.i.d. uniform (with replacement) from the
/// delta-typical set of the reproduction marginal q = p_E W. One RNG
/// substream per word keeps generation order-independent.
Codebook generate_codebook(const model::SourceModel& src, const model::EncodedSet& e,
                           const prob::Channel& w, std::size_t n, double rate,
                           double delta, std::uint64_t seed);

/// Smallest j whose word is jointly typical with x_e under the reverse
/// channel p(x_E | x_hat); fallback m when none qualifies. 1-based.
std::size_t encode(const Codebook& cb, const mtypes::Sequence& x_e,
                   const model::SourceModel& src, const model::EncodedSet& e,
                   const prob::Channel& w);

/// Word j (1-based).
const mtypes::Sequence& decode(const Codebook& cb, std::size_t j);

/// Exact measurement by full enumeration: u_n and e_n from the X_E^n / X_H^n
/// scan, partition masses from the X_K^n scan. The partition pass is skipped
/// (sets.evaluated = false) when |X_K|^n exceeds the budget and
/// require_partitions is false; with require_partitions it refuses instead.
std::pair<EmpiricalMeasures, PartitionSets> measure_exact(const model::SourceModel& src,
                                                          const model::EncodedSet& e,
                                                          const prob::Channel& w,
                                                          const Codebook& cb,
                                                          bool require_partitions = false);

/// Monte-Carlo utility estimate (distortion only; equivocation needs the
/// exact pass). Deterministic given seed; one substream per trial.
EmpiricalMeasures measure_mc(const model::SourceModel& src, const model::EncodedSet& e,
                             const prob::Channel& w, const Codebook& cb,
                             std::size_t trials, std::uint64_t seed);

/// Evaluates both sides of the single-code existence bounds plus the exact
/// partition identities. Asymptotic bounds are reported, not asserted.
BoundsReport check_achievability_bounds(const model::SourceModel& src,
                                        const model::EncodedSet& e, const prob::Channel& w,
                                        const Codebook& cb, double tau);

}  // namespace pcsc::codec
