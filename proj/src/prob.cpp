#include "pcsc/prob.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace pcsc::prob {

namespace {

void check_mass(const std::vector<double>& probs, const char* what) {
    double sum = 0.0;
    for (double v : probs) {
        if (!(v >= 0.0)) {
            throw ValidationError(std::string(what) + ": negative or NaN entry");
        }
        sum += v;
    }
    if (std::abs(sum - 1.0) > kSumTolerance) {
        throw ValidationError(std::string(what) + ": entries sum to " + std::to_string(sum));
    }
}

void check_axes(const JointPmf& j, const std::vector<std::size_t>& axes, const char* what) {
    for (std::size_t a : axes) {
        if (a >= j.rank()) throw UsageError(std::string(what) + ": axis out of range");
    }
    for (std::size_t i = 0; i < axes.size(); ++i) {
        for (std::size_t k = i + 1; k < axes.size(); ++k) {
            if (axes[i] == axes[k]) throw UsageError(std::string(what) + ": repeated axis");
        }
    }
}

void check_disjoint(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b,
                    const char* what) {
    for (std::size_t x : a) {
        for (std::size_t y : b) {
            if (x == y) throw UsageError(std::string(what) + ": axis sets overlap");
        }
    }
}

std::vector<std::size_t> concat(std::vector<std::size_t> a, const std::vector<std::size_t>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

}  // namespace

Pmf::Pmf(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw ValidationError("Pmf: empty alphabet");
    check_mass(probs_, "Pmf");
}

JointPmf::JointPmf(std::vector<std::size_t> shape, std::vector<double> probs)
    : shape_(std::move(shape)), probs_(std::move(probs)) {
    if (shape_.empty()) throw ValidationError("JointPmf: empty shape");
    std::size_t cells = 1;
    for (std::size_t s : shape_) {
        if (s == 0) throw ValidationError("JointPmf: zero-size axis");
        cells *= s;
    }
    if (cells != probs_.size()) {
        throw ValidationError("JointPmf: shape/probs length mismatch");
    }
    check_mass(probs_, "JointPmf");
}

std::size_t JointPmf::flat_index(const std::vector<std::size_t>& coords) const {
    std::size_t idx = 0;
    for (std::size_t a = 0; a < shape_.size(); ++a) {
        idx = idx * shape_[a] + coords[a];
    }
    return idx;
}

std::vector<std::size_t> JointPmf::coords(std::size_t flat) const {
    std::vector<std::size_t> c(shape_.size());
    for (std::size_t a = shape_.size(); a-- > 0;) {
        c[a] = flat % shape_[a];
        flat /= shape_[a];
    }
    return c;
}

Channel::Channel(std::size_t rows, std::size_t cols, std::vector<double> probs)
    : rows_(rows), cols_(cols), probs_(std::move(probs)) {
    if (rows_ == 0 || cols_ == 0) throw ValidationError("Channel: empty alphabet");
    if (probs_.size() != rows_ * cols_) {
        throw ValidationError("Channel: rows*cols/probs length mismatch");
    }
    for (std::size_t r = 0; r < rows_; ++r) {
        std::vector<double> row(probs_.begin() + r * cols_, probs_.begin() + (r + 1) * cols_);
        check_mass(row, "Channel row");
    }
}

Pmf Channel::row(std::size_t r) const {
    if (r >= rows_) throw UsageError("Channel::row: index out of range");
    return Pmf(std::vector<double>(probs_.begin() + r * cols_, probs_.begin() + (r + 1) * cols_));
}

double entropy_bits(const std::vector<double>& probs) {
    double h = 0.0;
    for (double v : probs) {
        if (v > 0.0) h -= v * std::log2(v);
    }
    return h;
}

double entropy(const Pmf& p) { return entropy_bits(p.probs()); }

namespace {

// Marginal over the listed axes, as a raw vector indexed row-major by axes order.
std::vector<double> marginal_vector(const JointPmf& j, const std::vector<std::size_t>& axes) {
    std::size_t out_cells = 1;
    for (std::size_t a : axes) out_cells *= j.shape()[a];
    std::vector<double> out(out_cells, 0.0);
    const auto& shape = j.shape();
    std::vector<std::size_t> c(shape.size(), 0);
    for (std::size_t flat = 0; flat < j.cells(); ++flat) {
        std::size_t idx = 0;
        for (std::size_t a : axes) idx = idx * shape[a] + c[a];
        out[idx] += j.probs()[flat];
        for (std::size_t a = shape.size(); a-- > 0;) {
            if (++c[a] < shape[a]) break;
            c[a] = 0;
        }
    }
    return out;
}

}  // namespace

double conditional_entropy(const JointPmf& j,
                           const std::vector<std::size_t>& target_axes,
                           const std::vector<std::size_t>& given_axes) {
    check_axes(j, target_axes, "conditional_entropy");
    check_axes(j, given_axes, "conditional_entropy");
    check_disjoint(target_axes, given_axes, "conditional_entropy");
    if (target_axes.empty()) throw UsageError("conditional_entropy: empty target");
    double h_joint = entropy_bits(marginal_vector(j, concat(target_axes, given_axes)));
    double h_given = given_axes.empty() ? 0.0 : entropy_bits(marginal_vector(j, given_axes));
    return h_joint - h_given;
}

double mutual_information(const JointPmf& j,
                          const std::vector<std::size_t>& axes_a,
                          const std::vector<std::size_t>& axes_b) {
    check_axes(j, axes_a, "mutual_information");
    check_axes(j, axes_b, "mutual_information");
    check_disjoint(axes_a, axes_b, "mutual_information");
    if (axes_a.empty() || axes_b.empty()) throw UsageError("mutual_information: empty axis set");
    double h_a = entropy_bits(marginal_vector(j, axes_a));
    double h_b = entropy_bits(marginal_vector(j, axes_b));
    double h_ab = entropy_bits(marginal_vector(j, concat(axes_a, axes_b)));
    double mi = h_a + h_b - h_ab;
    return mi < kMiClamp ? std::max(mi, 0.0) : mi;
}

double variational_distance(const Pmf& p, const Pmf& q) {
    if (p.size() != q.size()) throw UsageError("variational_distance: alphabet mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(p[i] - q[i]);
    return d;
}

JointPmf marginalize(const JointPmf& j, const std::vector<std::size_t>& keep_axes) {
    check_axes(j, keep_axes, "marginalize");
    if (keep_axes.empty()) throw UsageError("marginalize: empty keep_axes");
    std::vector<std::size_t> shape;
    shape.reserve(keep_axes.size());
    for (std::size_t a : keep_axes) shape.push_back(j.shape()[a]);
    return JointPmf(std::move(shape), marginal_vector(j, keep_axes));
}

JointPmf compose(const Pmf& input, const Channel& w) {
    if (input.size() != w.rows()) throw UsageError("compose: input size != channel rows");
    std::vector<double> probs(input.size() * w.cols());
    for (std::size_t x = 0; x < input.size(); ++x) {
        for (std::size_t y = 0; y < w.cols(); ++y) {
            probs[x * w.cols() + y] = input[x] * w(x, y);
        }
    }
    return JointPmf({input.size(), w.cols()}, std::move(probs));
}

}  // namespace pcsc::prob
