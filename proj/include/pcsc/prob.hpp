#pragma once

#include <cstddef>
#include <vector>

#include "pcsc/errors.hpp"

namespace pcsc::prob {

inline constexpr double kSumTolerance = 1e-9;
inline constexpr double kMiClamp = 1e-12;

// Probability vector over a finite alphabet {0..m-1}. Validated on
// construction; never renormalized silently.
class Pmf {
public:
    explicit Pmf(std::vector<double> probs);

    std::size_t size() const { return probs_.size(); }
    double operator[](std::size_t i) const { return probs_[i]; }
    const std::vector<double>& probs() const { return probs_; }

private:
    std::vector<double> probs_;
};

// Joint distribution over several finite axes, stored flat in row-major
// order (last axis fastest).
class JointPmf {
public:
    JointPmf(std::vector<std::size_t> shape, std::vector<double> probs);

    const std::vector<std::size_t>& shape() const { return shape_; }
    const std::vector<double>& probs() const { return probs_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t cells() const { return probs_.size(); }

    std::size_t flat_index(const std::vector<std::size_t>& coords) const;
    std::vector<std::size_t> coords(std::size_t flat) const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> probs_;
};

// Row-stochastic matrix W(col | row).
class Channel {
public:
    Channel(std::size_t rows, std::size_t cols, std::vector<double> probs);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double operator()(std::size_t r, std::size_t c) const { return probs_[r * cols_ + c]; }
    const std::vector<double>& probs() const { return probs_; }

    Pmf row(std::size_t r) const;

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> probs_;
};

/// H(p) in bits, with 0 log 0 = 0.
double entropy(const Pmf& p);

/// Entropy of an unvalidated nonnegative vector summing to at most 1 + tol.
/// Shared by the joint-axis helpers below.
double entropy_bits(const std::vector<double>& probs);

/// H(target | given) = H(target, given) - H(given), in bits.
double conditional_entropy(const JointPmf& j,
                           const std::vector<std::size_t>& target_axes,
                           const std::vector<std::size_t>& given_axes);

/// I(A; B) = H(A) + H(B) - H(A, B), clamped at 0 from below.
double mutual_information(const JointPmf& j,
                          const std::vector<std::size_t>& axes_a,
                          const std::vector<std::size_t>& axes_b);

/// Sum of |p - q| over the shared alphabet; lies in [0, 2].
double variational_distance(const Pmf& p, const Pmf& q);

/// Sums out all axes not in keep_axes; output axes follow keep_axes order.
JointPmf marginalize(const JointPmf& j, const std::vector<std::size_t>& keep_axes);

/// Joint over (input, output) with entry p(x) * W(y|x).
JointPmf compose(const Pmf& input, const Channel& w);

}  // namespace pcsc::prob
