#include "pcsc/model.hpp"

#include <algorithm>
#include <cmath>

namespace pcsc::model {

namespace {

std::size_t subset_cells(const AttributeSchema& schema, const std::vector<std::size_t>& subset) {
    std::size_t n = 1;
    for (std::size_t a : subset) n *= schema.sizes[a];
    return n;
}

bool is_sorted_unique(const std::vector<std::size_t>& v) {
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] <= v[i - 1]) return false;
    }
    return true;
}

bool contains(const std::vector<std::size_t>& v, std::size_t x) {
    return std::binary_search(v.begin(), v.end(), x);
}

}  // namespace

std::size_t SourceModel::revealed_cells() const { return subset_cells(schema, partition.revealed); }
std::size_t SourceModel::hidden_cells() const { return subset_cells(schema, partition.hidden); }
std::size_t SourceModel::encoded_cells(const EncodedSet& e) const {
    return subset_cells(schema, e.encoded);
}

SourceModel make_source(AttributeSchema schema, PartitionSpec partition,
                        prob::JointPmf joint, std::size_t recon_size,
                        std::vector<double> distortion) {
    std::size_t r_cells = subset_cells(schema, partition.revealed);
    if (recon_size == 0) recon_size = r_cells;
    if (distortion.empty()) {
        // Hamming on X_R x X_hat_R (identified alphabets).
        distortion.assign(r_cells * recon_size, 1.0);
        for (std::size_t i = 0; i < std::min(r_cells, recon_size); ++i) {
            distortion[i * recon_size + i] = 0.0;
        }
    }
    double d_max = distortion.empty() ? 0.0 : *std::max_element(distortion.begin(), distortion.end());
    SourceModel src{std::move(schema), std::move(partition), std::move(joint),
                    recon_size, std::move(distortion), d_max};
    auto findings = validate(src, EncodedSet{src.partition.revealed});
    if (!findings.empty()) throw ValidationError("make_source: " + findings.front());
    return src;
}

std::size_t project_index(const SourceModel& src, std::size_t x_k_flat,
                          const std::vector<std::size_t>& subset) {
    const auto& sizes = src.schema.sizes;
    std::size_t k = sizes.size();
    std::vector<std::size_t> coords(k);
    for (std::size_t a = k; a-- > 0;) {
        coords[a] = x_k_flat % sizes[a];
        x_k_flat /= sizes[a];
    }
    std::size_t idx = 0;
    for (std::size_t a : subset) idx = idx * sizes[a] + coords[a];
    return idx;
}

prob::JointPmf induced_joint(const SourceModel& src, const EncodedSet& e,
                             const prob::Channel& w) {
    std::size_t e_cells = src.encoded_cells(e);
    if (w.rows() != e_cells || w.cols() != src.recon_size) {
        throw UsageError("induced_joint: channel shape does not match |X_E| x recon_size");
    }
    std::size_t k_cells = src.joint.cells();
    std::size_t m = src.recon_size;
    std::vector<double> probs(k_cells * m);
    for (std::size_t x = 0; x < k_cells; ++x) {
        std::size_t xe = project_index(src, x, e.encoded);
        double p = src.joint.probs()[x];
        for (std::size_t b = 0; b < m; ++b) {
            probs[x * m + b] = p * w(xe, b);
        }
    }
    std::vector<std::size_t> shape = src.schema.sizes;
    shape.push_back(m);
    return prob::JointPmf(std::move(shape), std::move(probs));
}

PointEval eval_point(const SourceModel& src, const EncodedSet& e, const prob::Channel& w) {
    prob::JointPmf joint = induced_joint(src, e, w);
    std::size_t hat_axis = src.schema.k();

    double rate = prob::mutual_information(joint, e.encoded, {hat_axis});
    double equivocation = prob::conditional_entropy(joint, src.partition.hidden, {hat_axis});
    double h_hidden = prob::entropy_bits(
        prob::marginalize(joint, src.partition.hidden).probs());
    double leakage = std::max(0.0, h_hidden - equivocation);

    double dist = 0.0;
    std::size_t m = src.recon_size;
    std::size_t k_cells = src.joint.cells();
    for (std::size_t x = 0; x < k_cells; ++x) {
        std::size_t xr = project_index(src, x, src.partition.revealed);
        for (std::size_t b = 0; b < m; ++b) {
            dist += joint.probs()[x * m + b] * src.distortion_at(xr, b);
        }
    }
    return PointEval{rate, dist, equivocation, leakage};
}

prob::Channel lift_channel(const SourceModel& src, const prob::Channel& w,
                           const EncodedSet& e) {
    return lift_channel_between(src, w, EncodedSet{src.partition.revealed}, e);
}

prob::Channel lift_channel_between(const SourceModel& src, const prob::Channel& w,
                                   const EncodedSet& from, const EncodedSet& to) {
    for (std::size_t a : from.encoded) {
        if (!contains(to.encoded, a)) {
            throw UsageError("lift_channel: source set not contained in target set");
        }
    }
    if (w.rows() != subset_cells(src.schema, from.encoded)) {
        throw UsageError("lift_channel: channel rows do not match source set alphabet");
    }
    std::size_t to_cells = subset_cells(src.schema, to.encoded);
    std::vector<double> probs(to_cells * w.cols());
    // Walk the target alphabet through the full-attribute index so projection
    // reuses the mixed-radix helper.
    const auto& sizes = src.schema.sizes;
    std::size_t k = sizes.size();
    for (std::size_t xt = 0; xt < to_cells; ++xt) {
        // Expand xt over `to`, embed into a full coordinate (others zero).
        std::vector<std::size_t> coords(k, 0);
        std::size_t rem = xt;
        for (std::size_t i = to.encoded.size(); i-- > 0;) {
            std::size_t a = to.encoded[i];
            coords[a] = rem % sizes[a];
            rem /= sizes[a];
        }
        std::size_t full = 0;
        for (std::size_t a = 0; a < k; ++a) full = full * sizes[a] + coords[a];
        std::size_t xf = project_index(src, full, from.encoded);
        for (std::size_t b = 0; b < w.cols(); ++b) {
            probs[xt * w.cols() + b] = w(xf, b);
        }
    }
    return prob::Channel(to_cells, w.cols(), std::move(probs));
}

std::vector<std::string> validate(const SourceModel& src, const EncodedSet& e) {
    std::vector<std::string> findings;
    const auto& schema = src.schema;
    if (schema.k() < 2) findings.push_back("schema: fewer than 2 attributes");
    for (std::size_t s : schema.sizes) {
        if (s < 2) {
            findings.push_back("schema: attribute alphabet smaller than 2");
            break;
        }
    }

    const auto& part = src.partition;
    if (part.revealed.empty()) findings.push_back("partition: revealed set empty");
    if (part.hidden.empty()) findings.push_back("partition: hidden set empty");
    if (!is_sorted_unique(part.revealed) || !is_sorted_unique(part.hidden)) {
        findings.push_back("partition: index sets must be strictly ascending");
    }
    for (std::size_t a : part.revealed) {
        if (contains(part.hidden, a)) {
            findings.push_back("partition: revealed and hidden sets overlap");
            break;
        }
    }
    std::size_t covered = part.revealed.size() + part.hidden.size();
    bool in_range = true;
    for (std::size_t a : part.revealed) in_range = in_range && a < schema.k();
    for (std::size_t a : part.hidden) in_range = in_range && a < schema.k();
    if (!in_range) findings.push_back("partition: attribute index out of range");
    if (in_range && covered != schema.k()) {
        findings.push_back("partition: revealed and hidden do not cover all attributes");
    }

    if (src.joint.shape() != schema.sizes) {
        findings.push_back("joint: shape does not match schema sizes");
    }

    std::size_t r_cells = subset_cells(schema, part.revealed);
    if (src.distortion.size() != r_cells * src.recon_size) {
        findings.push_back("distortion: matrix is not |X_R| x recon_size");
    } else {
        double max_entry = 0.0;
        for (double v : src.distortion) {
            if (!(v >= 0.0)) {
                findings.push_back("distortion: negative entry");
                break;
            }
            max_entry = std::max(max_entry, v);
        }
        if (std::abs(max_entry - src.d_max) > 0.0) {
            findings.push_back("distortion: d_max does not equal the max entry");
        }
    }

    if (!is_sorted_unique(e.encoded)) {
        findings.push_back("encoded set: indices must be strictly ascending");
    }
    for (std::size_t a : part.revealed) {
        if (!contains(e.encoded, a)) {
            findings.push_back("encoded set: does not contain all revealed attributes");
            break;
        }
    }
    for (std::size_t a : e.encoded) {
        if (a >= schema.k()) {
            findings.push_back("encoded set: attribute index out of range");
            break;
        }
    }
    return findings;
}

prob::Pmf subset_marginal(const SourceModel& src, const std::vector<std::size_t>& subset) {
    return prob::Pmf(prob::marginalize(src.joint, subset).probs());
}

double hidden_entropy(const SourceModel& src) {
    return prob::entropy(subset_marginal(src, src.partition.hidden));
}

}  // namespace pcsc::model
