#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pcsc/prob.hpp"

namespace pcsc::model {

struct AttributeSchema {
    std::vector<std::size_t> sizes;  // alphabet size per attribute

    std::size_t k() const { return sizes.size(); }
};

struct PartitionSpec {
    std::vector<std::size_t> revealed;  // R, ascending
    std::vector<std::size_t> hidden;    // H, ascending
};

struct EncodedSet {
    std::vector<std::size_t> encoded;  // E, ascending; must satisfy R <= E <= K
};

// Finite memoryless source over K attributes plus the reproduction alphabet
// and per-symbol distortion d(x_R, x_hat).
struct SourceModel {
    AttributeSchema schema;
    PartitionSpec partition;
    prob::JointPmf joint;              // over X_K, axes in attribute order
    std::size_t recon_size;            // |X_hat_R|
    std::vector<double> distortion;    // row-major |X_R| x recon_size
    double d_max;

    std::size_t revealed_cells() const;
    std::size_t hidden_cells() const;
    std::size_t encoded_cells(const EncodedSet& e) const;

    double distortion_at(std::size_t x_r, std::size_t x_hat) const {
        return distortion[x_r * recon_size + x_hat];
    }
};

// The four coordinates of Eq.-style single-channel evaluation. Equivocation
// and leakage always split H(X_H) between them.
struct PointEval {
    double rate;
    double distortion;
    double equivocation;
    double leakage;
};

/// Binary Hamming-style source builder: all attributes binary by default is
/// the caller's job; this fills reproduction alphabet = X_R with Hamming
/// distortion when none is supplied.
SourceModel make_source(AttributeSchema schema, PartitionSpec partition,
                        prob::JointPmf joint, std::size_t recon_size = 0,
                        std::vector<double> distortion = {});

/// Mixed-radix index of the projection of the full-attribute tuple x_K onto
/// the attribute subset (ascending index order inside the subset).
std::size_t project_index(const SourceModel& src, std::size_t x_k_flat,
                          const std::vector<std::size_t>& subset);

/// Joint over (X_1..X_K, X_hat_R): p(x_K) * W(x_hat | x_E). The construction
/// enforces the Markov chain X_{E^c} - X_E - X_hat_R.
prob::JointPmf induced_joint(const SourceModel& src, const EncodedSet& e,
                             const prob::Channel& w);

/// Rate, distortion, equivocation, and leakage of one test channel.
PointEval eval_point(const SourceModel& src, const EncodedSet& e, const prob::Channel& w);

/// Extends a channel defined on X_R to X_E by ignoring the extra attributes:
/// W'(x_hat | x_E) = w(x_hat | proj_R(x_E)).
prob::Channel lift_channel(const SourceModel& src, const prob::Channel& w,
                           const EncodedSet& e);

/// Lifts a channel from a smaller encoded set to a larger one (E1 <= E2).
prob::Channel lift_channel_between(const SourceModel& src, const prob::Channel& w,
                                   const EncodedSet& from, const EncodedSet& to);

/// Invariant findings for a (source, encoded set) pair; empty means valid.
std::vector<std::string> validate(const SourceModel& src, const EncodedSet& e);

/// Marginal pmf of X over the attribute subset.
prob::Pmf subset_marginal(const SourceModel& src, const std::vector<std::size_t>& subset);

/// H(X_H) of the source, in bits.
double hidden_entropy(const SourceModel& src);

}  // namespace pcsc::model
