#include "pcsc/codec.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "pcsc/errors.hpp"
#include "pcsc/rng.hpp"

namespace pcsc::codec {

namespace {

constexpr double kCellBudget = 1e8;
constexpr std::size_t kMaxCodewords = 1000000;

double pow_size(std::size_t base, std::size_t n) {
    return std::pow(static_cast<double>(base), static_cast<double>(n));
}

// Single-letter tables shared by the exact and Monte-Carlo passes.
struct CodecCtx {
    std::size_t xe_n, xh_n, xec_n, xk_n, m_hat;
    std::vector<double> p_e;          // xe_n
    std::vector<double> p_h;          // xh_n
    std::vector<double> h_given_e;    // xe_n * xh_n, p(x_H | x_E)
    std::vector<double> ec_given_e;   // xe_n * xec_n, p(x_Ec | x_E)
    std::vector<std::size_t> xr_of_e; // X_R as a function of X_E
    std::vector<std::size_t> xk_of;   // xe * xec_n + xec -> full-attribute cell
    std::vector<std::size_t> xh_of_k; // full cell -> hidden cell
    std::vector<double> q;            // reproduction marginal
    prob::Channel enc_rev{1, 1, {1.0}};   // p(x_E | x_hat), rows = m_hat
    prob::Channel full_rev{1, 1, {1.0}};  // p(x_K | x_hat), rows = m_hat
    double h_hidden;
    double cond_full_entropy;         // H(X_K | X_hat)
};

CodecCtx make_codec_ctx(const model::SourceModel& src, const model::EncodedSet& e,
                        const prob::Channel& w) {
    auto findings = model::validate(src, e);
    if (!findings.empty()) throw ValidationError("codec: " + findings.front());
    if (w.rows() != src.encoded_cells(e) || w.cols() != src.recon_size) {
        throw UsageError("codec: channel shape does not match (encoded set, reproduction)");
    }
    CodecCtx c;
    c.xe_n = src.encoded_cells(e);
    c.xh_n = src.hidden_cells();
    c.m_hat = src.recon_size;

    std::vector<std::size_t> ec_attrs;
    for (std::size_t a = 0; a < src.schema.k(); ++a) {
        if (!std::binary_search(e.encoded.begin(), e.encoded.end(), a)) ec_attrs.push_back(a);
    }
    c.xec_n = 1;
    for (std::size_t a : ec_attrs) c.xec_n *= src.schema.sizes[a];
    c.xk_n = src.joint.cells();

    c.p_e.assign(c.xe_n, 0.0);
    c.p_h.assign(c.xh_n, 0.0);
    c.h_given_e.assign(c.xe_n * c.xh_n, 0.0);
    c.ec_given_e.assign(c.xe_n * c.xec_n, 0.0);
    c.xr_of_e.assign(c.xe_n, 0);
    c.xk_of.assign(c.xe_n * c.xec_n, 0);
    c.xh_of_k.assign(c.xk_n, 0);

    for (std::size_t xk = 0; xk < c.xk_n; ++xk) {
        double p = src.joint.probs()[xk];
        std::size_t xe = model::project_index(src, xk, e.encoded);
        std::size_t xec = model::project_index(src, xk, ec_attrs);
        std::size_t xh = model::project_index(src, xk, src.partition.hidden);
        c.p_e[xe] += p;
        c.p_h[xh] += p;
        c.h_given_e[xe * c.xh_n + xh] += p;
        c.ec_given_e[xe * c.xec_n + xec] += p;
        c.xr_of_e[xe] = model::project_index(src, xk, src.partition.revealed);
        c.xk_of[xe * c.xec_n + xec] = xk;
        c.xh_of_k[xk] = xh;
    }
    for (std::size_t xe = 0; xe < c.xe_n; ++xe) {
        if (c.p_e[xe] <= 0.0) continue;
        for (std::size_t xh = 0; xh < c.xh_n; ++xh) c.h_given_e[xe * c.xh_n + xh] /= c.p_e[xe];
        for (std::size_t xec = 0; xec < c.xec_n; ++xec) {
            c.ec_given_e[xe * c.xec_n + xec] /= c.p_e[xe];
        }
    }
    c.h_hidden = prob::entropy_bits(c.p_h);

    c.q.assign(c.m_hat, 0.0);
    for (std::size_t xe = 0; xe < c.xe_n; ++xe) {
        for (std::size_t b = 0; b < c.m_hat; ++b) c.q[b] += c.p_e[xe] * w(xe, b);
    }
    // Reverse channels; rows with q(b) = 0 never occur in typical words and
    // are filled uniformly so they stay valid pmfs.
    std::vector<double> rev(c.m_hat * c.xe_n), full(c.m_hat * c.xk_n);
    for (std::size_t b = 0; b < c.m_hat; ++b) {
        if (c.q[b] > 0.0) {
            for (std::size_t xe = 0; xe < c.xe_n; ++xe) {
                rev[b * c.xe_n + xe] = c.p_e[xe] * w(xe, b) / c.q[b];
            }
            for (std::size_t xk = 0; xk < c.xk_n; ++xk) {
                std::size_t xe = model::project_index(src, xk, e.encoded);
                full[b * c.xk_n + xk] = src.joint.probs()[xk] * w(xe, b) / c.q[b];
            }
        } else {
            for (std::size_t xe = 0; xe < c.xe_n; ++xe) {
                rev[b * c.xe_n + xe] = 1.0 / static_cast<double>(c.xe_n);
            }
            for (std::size_t xk = 0; xk < c.xk_n; ++xk) {
                full[b * c.xk_n + xk] = 1.0 / static_cast<double>(c.xk_n);
            }
        }
    }
    c.enc_rev = prob::Channel(c.m_hat, c.xe_n, std::move(rev));
    c.full_rev = prob::Channel(c.m_hat, c.xk_n, std::move(full));

    // H(X_K | X_hat) = sum_b q(b) H(full_rev row b) over occurring b.
    c.cond_full_entropy = 0.0;
    for (std::size_t b = 0; b < c.m_hat; ++b) {
        if (c.q[b] <= 0.0) continue;
        std::vector<double> row(c.xk_n);
        for (std::size_t xk = 0; xk < c.xk_n; ++xk) row[xk] = c.full_rev(b, xk);
        c.cond_full_entropy += c.q[b] * prob::entropy_bits(row);
    }
    return c;
}

std::size_t encode_with(const CodecCtx& c, const Codebook& cb, const mtypes::Sequence& x_e) {
    for (std::size_t j = 0; j < cb.m; ++j) {
        if (mtypes::is_cond_typical(x_e, cb.words[j], c.enc_rev, cb.delta)) return j + 1;
    }
    return cb.m;
}

// Odometer over all sequences of length n (no count tracking needed here).
template <typename Fn>
void each_sequence(std::size_t alphabet, std::size_t n, Fn&& fn) {
    mtypes::Sequence x(n, 0);
    for (;;) {
        fn(x);
        std::size_t i = n;
        bool done = true;
        while (i > 0) {
            --i;
            ++x[i];
            if (x[i] < alphabet) {
                done = false;
                break;
            }
            x[i] = 0;
        }
        if (done) return;
    }
}

}  // namespace

double delta_schedule(std::size_t n, double c) {
    if (n < 2) throw UsageError("delta_schedule: n must be at least 2");
    if (c <= 0.0) throw UsageError("delta_schedule: c must be positive");
    double dn = static_cast<double>(n);
    return c / std::sqrt(dn) * std::log2(dn);
}

Codebook generate_codebook(const model::SourceModel& src, const model::EncodedSet& e,
                           const prob::Channel& w, std::size_t n, double rate,
                           double delta, std::uint64_t seed) {
    CodecCtx c = make_codec_ctx(src, e, w);
    double m_exact = std::exp2(static_cast<double>(n) * rate);
    if (m_exact > static_cast<double>(kMaxCodewords)) {
        throw BudgetError("generate_codebook: codebook size exceeds the cap", m_exact,
                          static_cast<double>(kMaxCodewords));
    }
    std::size_t m = static_cast<std::size_t>(std::ceil(m_exact - 1e-9));
    m = std::max<std::size_t>(m, 1);
    std::vector<mtypes::Sequence> typical = mtypes::enumerate_typical(c.q, delta, n);
    if (typical.empty()) {
        throw ValidationError(
            "generate_codebook: typical set of the reproduction marginal is empty at this "
            "(n, delta); increase n or delta");
    }
    Codebook cb{n, rate, m, {}, delta, seed};
    cb.words.reserve(m);
    for (std::size_t j = 0; j < m; ++j) {
        CounterRng rng(seed, j + 1);
        cb.words.push_back(typical[rng.next_below(typical.size())]);
    }
    return cb;
}

std::size_t encode(const Codebook& cb, const mtypes::Sequence& x_e,
                   const model::SourceModel& src, const model::EncodedSet& e,
                   const prob::Channel& w) {
    if (x_e.size() != cb.n) throw UsageError("encode: sequence length != blocklength");
    CodecCtx c = make_codec_ctx(src, e, w);
    return encode_with(c, cb, x_e);
}

const mtypes::Sequence& decode(const Codebook& cb, std::size_t j) {
    if (j < 1 || j > cb.m) throw UsageError("decode: index out of range");
    return cb.words[j - 1];
}

std::pair<EmpiricalMeasures, PartitionSets> measure_exact(const model::SourceModel& src,
                                                          const model::EncodedSet& e,
                                                          const prob::Channel& w,
                                                          const Codebook& cb,
                                                          bool require_partitions) {
    CodecCtx c = make_codec_ctx(src, e, w);
    const std::size_t n = cb.n;
    double outer_cells = pow_size(c.xe_n * c.xh_n, n);
    if (outer_cells > kCellBudget) {
        throw BudgetError("measure_exact: (X_E x X_H)^n exceeds the budget; use measure_mc",
                          outer_cells, kCellBudget);
    }
    double h_states = pow_size(c.xh_n, n);
    if (static_cast<double>(cb.m) * h_states > kCellBudget) {
        throw BudgetError("measure_exact: equivocation table exceeds the budget",
                          static_cast<double>(cb.m) * h_states, kCellBudget);
    }
    const std::size_t h_cells = static_cast<std::size_t>(h_states);

    // Joint mass of (J, X_H^n); X_H^n given X_E^n factorizes per position.
    std::vector<double> mass(cb.m * h_cells, 0.0);
    std::vector<double> pr_a(cb.m, 0.0);
    std::vector<std::size_t> enc_of;  // encode result per x_E^n, reused below
    double u_n = 0.0;

    std::function<void(const mtypes::Sequence&, std::size_t, std::size_t, std::size_t,
                       double)>
        spread = [&](const mtypes::Sequence& xe, std::size_t jj, std::size_t pos,
                     std::size_t h_idx, double p) {
            if (p <= 0.0) return;
            if (pos == n) {
                mass[jj * h_cells + h_idx] += p;
                return;
            }
            for (std::size_t xh = 0; xh < c.xh_n; ++xh) {
                spread(xe, jj, pos + 1, h_idx * c.xh_n + xh,
                       p * c.h_given_e[xe[pos] * c.xh_n + xh]);
            }
        };

    each_sequence(c.xe_n, n, [&](const mtypes::Sequence& xe) {
        std::size_t j = encode_with(c, cb, xe);
        enc_of.push_back(j);
        double p = 1.0;
        for (std::size_t i = 0; i < n; ++i) p *= c.p_e[xe[i]];
        if (p <= 0.0) return;
        std::size_t jj = j - 1;
        pr_a[jj] += p;
        const auto& word = cb.words[jj];
        double dsum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            dsum += src.distortion_at(c.xr_of_e[xe[i]], word[i]);
        }
        u_n += p * dsum / static_cast<double>(n);
        spread(xe, jj, 0, 0, p);
    });

    double e_n = 0.0;
    for (std::size_t jj = 0; jj < cb.m; ++jj) {
        if (pr_a[jj] <= 0.0) continue;
        for (std::size_t h = 0; h < h_cells; ++h) {
            double v = mass[jj * h_cells + h];
            if (v > 0.0) e_n += v * std::log2(pr_a[jj] / v);
        }
    }
    e_n /= static_cast<double>(n);

    EmpiricalMeasures meas{std::log2(static_cast<double>(cb.m)) / static_cast<double>(n),
                           u_n, e_n, c.h_hidden - e_n, true, 0.0};

    PartitionSets sets{cb.m, pr_a, {}, {}, {}, {}, true, true, 0.0, false};
    double full_cells = pow_size(c.xe_n, n) * pow_size(c.xec_n, n);
    if (full_cells > kCellBudget) {
        if (require_partitions) {
            throw BudgetError("measure_exact: |X_K|^n exceeds the partition budget",
                              full_cells, kCellBudget);
        }
        return {meas, sets};
    }

    sets.pr_b.assign(cb.m, 0.0);
    sets.pr_atilde.assign(cb.m, 0.0);
    sets.size_b.assign(cb.m, 0);
    sets.size_atilde.assign(cb.m, 0);

    // Walk X_K^n as (X_E^n outer, X_Ec^n inner), keeping the pair counts
    // N(x_hat, x_K) of the block against its codeword incrementally.
    const double two_delta = 2.0 * cb.delta;
    std::vector<std::size_t> pair_counts(c.m_hat * c.xk_n, 0);
    std::size_t xe_index = 0;
    each_sequence(c.xe_n, n, [&](const mtypes::Sequence& xe) {
        std::size_t jj = enc_of[xe_index++] - 1;
        const auto& word = cb.words[jj];
        double p_base = 1.0;
        for (std::size_t i = 0; i < n; ++i) p_base *= c.p_e[xe[i]];

        std::function<void(std::size_t, double)> inner = [&](std::size_t pos, double p) {
            if (pos == n) {
                sets.pr_b[jj] += p;
                ++sets.size_b[jj];
                // Refined set: the whole block must be conditionally typical
                // with the codeword at constant 2 delta.
                bool typical = true;
                std::vector<std::size_t> word_counts(c.m_hat, 0);
                for (std::size_t i = 0; i < n; ++i) ++word_counts[word[i]];
                double nn = static_cast<double>(n);
                for (std::size_t b = 0; b < c.m_hat && typical; ++b) {
                    for (std::size_t xk = 0; xk < c.xk_n; ++xk) {
                        std::size_t nab = pair_counts[b * c.xk_n + xk];
                        if (c.full_rev(b, xk) == 0.0 && nab > 0) {
                            typical = false;
                            break;
                        }
                        double lhs = static_cast<double>(nab) / nn;
                        double rhs = static_cast<double>(word_counts[b]) / nn *
                                     c.full_rev(b, xk);
                        if (std::abs(lhs - rhs) > two_delta) {
                            typical = false;
                            break;
                        }
                    }
                }
                // Fallback slot absorbs everything outside the refined sets
                // of the proper codewords (j = m plus atypical blocks).
                std::size_t slot = (typical && jj + 1 < cb.m) ? jj : cb.m - 1;
                sets.pr_atilde[slot] += p;
                ++sets.size_atilde[slot];
                return;
            }
            for (std::size_t xec = 0; xec < c.xec_n; ++xec) {
                std::size_t xk = c.xk_of[xe[pos] * c.xec_n + xec];
                std::size_t key = word[pos] * c.xk_n + xk;
                ++pair_counts[key];
                inner(pos + 1, p * c.ec_given_e[xe[pos] * c.xec_n + xec]);
                --pair_counts[key];
            }
        };
        inner(0, p_base);
    });

    double total_a = 0.0, total_at = 0.0;
    for (std::size_t jj = 0; jj < cb.m; ++jj) {
        sets.eq_identity_gap =
            std::max(sets.eq_identity_gap, std::abs(sets.pr_a[jj] - sets.pr_b[jj]));
        total_a += sets.pr_a[jj];
        total_at += sets.pr_atilde[jj];
    }
    sets.partitions_cover = std::abs(total_a - 1.0) <= 1e-9 && std::abs(total_at - 1.0) <= 1e-9;
    // Membership in the refined set requires encode = j, so the inclusion in
    // B(j) holds by construction; recorded as an exact check.
    sets.atilde_subset_of_b = true;
    sets.evaluated = true;
    return {meas, sets};
}

EmpiricalMeasures measure_mc(const model::SourceModel& src, const model::EncodedSet& e,
                             const prob::Channel& w, const Codebook& cb,
                             std::size_t trials, std::uint64_t seed) {
    if (trials < 1) throw UsageError("measure_mc: trials must be >= 1");
    CodecCtx c = make_codec_ctx(src, e, w);
    const std::size_t n = cb.n;
    double sum = 0.0, sum_sq = 0.0;
    mtypes::Sequence xe(n);
    for (std::size_t t = 0; t < trials; ++t) {
        CounterRng rng(seed, 1000003 + t);
        for (std::size_t i = 0; i < n; ++i) {
            double u = rng.next_double(), acc = 0.0;
            std::size_t pick = c.xe_n - 1;
            for (std::size_t a = 0; a < c.xe_n; ++a) {
                acc += c.p_e[a];
                if (u < acc) {
                    pick = a;
                    break;
                }
            }
            xe[i] = pick;
        }
        std::size_t jj = encode_with(c, cb, xe) - 1;
        const auto& word = cb.words[jj];
        double dsum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            dsum += src.distortion_at(c.xr_of_e[xe[i]], word[i]);
        }
        double d = dsum / static_cast<double>(n);
        sum += d;
        sum_sq += d * d;
    }
    double mean = sum / static_cast<double>(trials);
    double var = std::max(0.0, sum_sq / static_cast<double>(trials) - mean * mean);
    double se = trials > 1 ? std::sqrt(var / static_cast<double>(trials - 1)) : 0.0;
    double nan = std::numeric_limits<double>::quiet_NaN();
    return EmpiricalMeasures{std::log2(static_cast<double>(cb.m)) / static_cast<double>(n),
                             mean, nan, nan, false, se};
}

BoundsReport check_achievability_bounds(const model::SourceModel& src,
                                        const model::EncodedSet& e, const prob::Channel& w,
                                        const Codebook& cb, double tau) {
    CodecCtx c = make_codec_ctx(src, e, w);
    auto [meas, sets] = measure_exact(src, e, w, cb, /*require_partitions=*/true);
    model::PointEval pt = model::eval_point(src, e, w);
    const double n = static_cast<double>(cb.n);
    const double delta = cb.delta;
    const double exp_term = std::exp(-2.0 * delta * delta * n);
    const std::size_t xr_n = src.revealed_cells();
    const double delta1 = mtypes::TypicalityParams::delta1(delta, c.xe_n, xr_n);

    BoundsReport rep;
    rep.checks.push_back(
        {"rate_le_target", meas.r_n, cb.rate_target,
         meas.r_n <= cb.rate_target + 1e-12, false});
    double util_rhs = pt.distortion + (delta + delta1) * static_cast<double>(xr_n) *
                                          static_cast<double>(c.m_hat) * src.d_max +
                      tau;
    rep.checks.push_back({"utility_vs_single_letter", meas.u_n, util_rhs,
                          meas.u_n <= util_rhs + 1e-12, false});
    double fb = sets.pr_a[cb.m - 1];
    double fb_rhs = (2.0 * static_cast<double>(c.xe_n) + 1.0) * exp_term;
    rep.checks.push_back({"fallback_probability", fb, fb_rhs, fb <= fb_rhs + 1e-12, false});
    double rfb = sets.pr_atilde[cb.m - 1];
    rep.checks.push_back({"refined_fallback_probability", rfb, tau, rfb <= tau + 1e-12,
                          false});
    std::size_t min_size = cb.m > 1 ? *std::min_element(sets.size_atilde.begin(),
                                                        sets.size_atilde.end() - 1)
                                    : 0;
    double size_rhs = std::exp2(n * (c.cond_full_entropy - tau));
    rep.checks.push_back({"refined_set_size", static_cast<double>(min_size), size_rhs,
                          static_cast<double>(min_size) >= size_rhs - 1e-9, false});
    double gap = 0.0;
    for (std::size_t jj = 0; jj + 1 < cb.m; ++jj) {
        gap = std::max(gap, std::abs(sets.pr_b[jj] - sets.pr_atilde[jj]));
    }
    double gap_rhs =
        2.0 * static_cast<double>(c.xk_n) * static_cast<double>(c.m_hat) * exp_term;
    rep.checks.push_back({"refined_probability_gap", gap, gap_rhs, gap <= gap_rhs + 1e-12,
                          false});

    // Identity up to accumulated roundoff; the sums run over |X_K|^n terms.
    double id_tol = 1e-15 * std::max(1.0, std::pow(static_cast<double>(c.xk_n),
                                                   static_cast<double>(n)));
    id_tol = std::clamp(id_tol, 1e-12, 1e-8);
    rep.checks.push_back({"index_partition_identity", sets.eq_identity_gap, id_tol,
                          sets.eq_identity_gap <= id_tol, true});
    rep.checks.push_back({"refined_subset_of_block_partition",
                          sets.atilde_subset_of_b ? 1.0 : 0.0, 1.0,
                          sets.atilde_subset_of_b, true});
    rep.checks.push_back({"partitions_cover", sets.partitions_cover ? 1.0 : 0.0, 1.0,
                          sets.partitions_cover, true});

    rep.exact_all_hold = true;
    for (const auto& chk : rep.checks) {
        if (chk.exact && !chk.satisfied) rep.exact_all_hold = false;
    }
    return rep;
}

}  // namespace pcsc::codec
