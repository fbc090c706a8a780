#include "pcsc/typicality.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

#include "pcsc/errors.hpp"

namespace pcsc::mtypes {

namespace {

void check_symbols(const Sequence& x, std::size_t alphabet) {
    for (std::size_t s : x) {
        if (s >= alphabet) throw UsageError("sequence symbol out of alphabet range");
    }
}

void require_budget(double cells, const char* what) {
    if (cells > kEnumBudget) {
        throw BudgetError(std::string(what) + ": enumeration budget exceeded", cells,
                          kEnumBudget);
    }
}

// Walks all sequences of length n over the alphabet, keeping symbol counts
// incrementally. fn sees (sequence, counts).
void for_each_sequence(std::size_t alphabet, std::size_t n,
                       const std::function<void(const Sequence&, const std::vector<std::size_t>&)>& fn) {
    Sequence x(n, 0);
    std::vector<std::size_t> counts(alphabet, 0);
    counts[0] = n;
    for (;;) {
        fn(x, counts);
        std::size_t i = n;
        bool done = true;
        while (i > 0) {
            --i;
            --counts[x[i]];
            ++x[i];
            if (x[i] < alphabet) {
                ++counts[x[i]];
                done = false;
                break;
            }
            x[i] = 0;
            ++counts[0];
        }
        if (done) return;
    }
}

double pow_size(std::size_t base, std::size_t n) {
    return std::pow(static_cast<double>(base), static_cast<double>(n));
}

// x^n with type equal to the largest-remainder rounding of p to n counts.
Sequence rounded_type_sequence(const std::vector<double>& p, std::size_t n) {
    std::size_t m = p.size();
    std::vector<std::size_t> counts(m, 0);
    std::vector<std::pair<double, std::size_t>> rema(m);
    std::size_t used = 0;
    for (std::size_t a = 0; a < m; ++a) {
        double exact = p[a] * static_cast<double>(n);
        counts[a] = static_cast<std::size_t>(std::floor(exact));
        used += counts[a];
        rema[a] = {exact - std::floor(exact), a};
    }
    std::sort(rema.begin(), rema.end(), std::greater<>());
    for (std::size_t i = 0; used < n; ++i, ++used) ++counts[rema[i % m].second];
    Sequence x;
    x.reserve(n);
    for (std::size_t a = 0; a < m; ++a) x.insert(x.end(), counts[a], a);
    return x;
}

}  // namespace

std::vector<double> TypeStats::freq() const {
    std::vector<double> f(counts.size());
    for (std::size_t a = 0; a < counts.size(); ++a) {
        f[a] = static_cast<double>(counts[a]) / static_cast<double>(n);
    }
    return f;
}

double CondTypeStats::v(std::size_t a, std::size_t b) const {
    if (row_counts[a] == 0) throw UsageError("conditional type row undefined: symbol absent");
    return static_cast<double>(pair_counts[a * cols + b]) /
           static_cast<double>(row_counts[a]);
}

bool TypicalityParams::tau_small_enough(double tau, double eps, double rate,
                                        std::size_t xh_size) {
    if (tau <= 0.0 || tau >= 0.5) return false;
    double lhs = tau * (std::log2(static_cast<double>(xh_size)) + 5.0) +
                 4.0 * tau * std::log2(static_cast<double>(xh_size) * std::exp2(rate) /
                                       (2.0 * tau));
    return lhs < eps;
}

TypeStats type_of(const Sequence& x, std::size_t alphabet) {
    if (x.empty()) throw UsageError("type_of: empty sequence");
    check_symbols(x, alphabet);
    TypeStats t{x.size(), std::vector<std::size_t>(alphabet, 0)};
    for (std::size_t s : x) ++t.counts[s];
    return t;
}

CondTypeStats cond_type_of(const Sequence& x, std::size_t ax, const Sequence& y,
                           std::size_t ay) {
    if (x.size() != y.size()) throw UsageError("cond_type_of: length mismatch");
    if (x.empty()) throw UsageError("cond_type_of: empty sequences");
    check_symbols(x, ax);
    check_symbols(y, ay);
    CondTypeStats t{x.size(), ax, ay, std::vector<std::size_t>(ax * ay, 0),
                    std::vector<std::size_t>(ax, 0)};
    for (std::size_t i = 0; i < x.size(); ++i) {
        ++t.pair_counts[x[i] * ay + y[i]];
        ++t.row_counts[x[i]];
    }
    return t;
}

bool is_typical(const Sequence& x, const std::vector<double>& p, double delta) {
    check_symbols(x, p.size());
    std::vector<std::size_t> counts(p.size(), 0);
    for (std::size_t s : x) ++counts[s];
    double n = static_cast<double>(x.size());
    for (std::size_t a = 0; a < p.size(); ++a) {
        if (p[a] == 0.0 && counts[a] > 0) return false;
        if (std::abs(static_cast<double>(counts[a]) / n - p[a]) > delta) return false;
    }
    return true;
}

bool is_cond_typical(const Sequence& y, const Sequence& x, const prob::Channel& w,
                     double delta) {
    if (x.size() != y.size()) throw UsageError("is_cond_typical: length mismatch");
    check_symbols(x, w.rows());
    check_symbols(y, w.cols());
    std::vector<std::size_t> pair(w.rows() * w.cols(), 0);
    std::vector<std::size_t> row(w.rows(), 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        ++pair[x[i] * w.cols() + y[i]];
        ++row[x[i]];
    }
    double n = static_cast<double>(x.size());
    for (std::size_t a = 0; a < w.rows(); ++a) {
        for (std::size_t b = 0; b < w.cols(); ++b) {
            std::size_t nab = pair[a * w.cols() + b];
            if (w(a, b) == 0.0 && nab > 0) return false;
            double lhs = static_cast<double>(nab) / n;
            double rhs = static_cast<double>(row[a]) / n * w(a, b);
            if (std::abs(lhs - rhs) > delta) return false;
        }
    }
    return true;
}

bool is_jointly_typical(const Sequence& x, const Sequence& y,
                        const std::vector<double>& pxy, std::size_t ay, double delta) {
    if (x.size() != y.size()) throw UsageError("is_jointly_typical: length mismatch");
    std::size_t ax = pxy.size() / ay;
    check_symbols(x, ax);
    check_symbols(y, ay);
    std::vector<std::size_t> pair(pxy.size(), 0);
    for (std::size_t i = 0; i < x.size(); ++i) ++pair[x[i] * ay + y[i]];
    double n = static_cast<double>(x.size());
    for (std::size_t ab = 0; ab < pxy.size(); ++ab) {
        if (pxy[ab] == 0.0 && pair[ab] > 0) return false;
        if (std::abs(static_cast<double>(pair[ab]) / n - pxy[ab]) > delta) return false;
    }
    return true;
}

std::vector<Sequence> enumerate_typical(const std::vector<double>& p, double delta,
                                        std::size_t n) {
    if (n == 0) throw UsageError("enumerate_typical: n must be positive");
    require_budget(pow_size(p.size(), n), "enumerate_typical");
    std::vector<Sequence> out;
    for_each_sequence(p.size(), n, [&](const Sequence& x, const std::vector<std::size_t>& counts) {
        double nn = static_cast<double>(n);
        for (std::size_t a = 0; a < p.size(); ++a) {
            if (p[a] == 0.0 && counts[a] > 0) return;
            if (std::abs(static_cast<double>(counts[a]) / nn - p[a]) > delta) return;
        }
        out.push_back(x);
    });
    return out;
}

std::vector<Sequence> enumerate_cond_typical(const prob::Channel& w, const Sequence& x,
                                             double delta) {
    if (x.empty()) throw UsageError("enumerate_cond_typical: empty conditioning sequence");
    require_budget(pow_size(w.cols(), x.size()), "enumerate_cond_typical");
    std::vector<Sequence> out;
    for_each_sequence(w.cols(), x.size(),
                      [&](const Sequence& y, const std::vector<std::size_t>&) {
                          if (is_cond_typical(y, x, w, delta)) out.push_back(y);
                      });
    return out;
}

CardinalityReport check_lemma_cardinality(const std::vector<double>& p,
                                          const std::vector<std::size_t>& n_list, double c) {
    double h = prob::entropy_bits(p);
    CardinalityReport rep{{}, true, false};
    for (std::size_t n : n_list) {
        double delta = (c / std::sqrt(static_cast<double>(n))) *
                       std::log2(static_cast<double>(n));
        std::size_t count = enumerate_typical(p, delta, n).size();
        if (count == 0) {
            rep.any_empty = true;
            rep.points.push_back(CardinalityPoint{n, delta, 0, std::numeric_limits<double>::infinity()});
            continue;
        }
        double eps = std::abs(std::log2(static_cast<double>(count)) /
                                  static_cast<double>(n) -
                              h);
        rep.points.push_back(CardinalityPoint{n, delta, count, eps});
    }
    std::vector<const CardinalityPoint*> nonempty;
    for (const auto& pt : rep.points) {
        if (pt.count > 0) nonempty.push_back(&pt);
    }
    if (nonempty.size() >= 2) {
        rep.trending_down = nonempty.back()->eps <= nonempty.front()->eps + 1e-12;
    }
    return rep;
}

CardinalityReport check_lemma_cardinality_cond(const prob::Channel& w,
                                               const std::vector<double>& p,
                                               const std::vector<std::size_t>& n_list,
                                               double c) {
    // H(W|P) = sum_a P(a) H(W(.|a)).
    double hwp = 0.0;
    for (std::size_t a = 0; a < w.rows(); ++a) {
        std::vector<double> row(w.cols());
        for (std::size_t b = 0; b < w.cols(); ++b) row[b] = w(a, b);
        hwp += p[a] * prob::entropy_bits(row);
    }
    CardinalityReport rep{{}, true, false};
    for (std::size_t n : n_list) {
        double delta = (c / std::sqrt(static_cast<double>(n))) *
                       std::log2(static_cast<double>(n));
        Sequence x = rounded_type_sequence(p, n);
        std::size_t count = enumerate_cond_typical(w, x, delta).size();
        if (count == 0) {
            rep.any_empty = true;
            rep.points.push_back(CardinalityPoint{n, delta, 0, std::numeric_limits<double>::infinity()});
            continue;
        }
        double eps = std::abs(std::log2(static_cast<double>(count)) /
                                  static_cast<double>(n) -
                              hwp);
        rep.points.push_back(CardinalityPoint{n, delta, count, eps});
    }
    std::vector<const CardinalityPoint*> nonempty;
    for (const auto& pt : rep.points) {
        if (pt.count > 0) nonempty.push_back(&pt);
    }
    if (nonempty.size() >= 2) {
        rep.trending_down = nonempty.back()->eps <= nonempty.front()->eps + 1e-12;
    }
    return rep;
}

ImplicationReport check_lemma_implications(const std::vector<double>& pxy, std::size_t ax,
                                           std::size_t ay, std::size_t n, double delta) {
    if (pxy.size() != ax * ay) throw UsageError("check_lemma_implications: pmf shape mismatch");
    require_budget(pow_size(ax, n) * pow_size(ay, n), "check_lemma_implications");

    std::vector<double> px(ax, 0.0), py(ay, 0.0);
    for (std::size_t a = 0; a < ax; ++a) {
        for (std::size_t b = 0; b < ay; ++b) {
            px[a] += pxy[a * ay + b];
            py[b] += pxy[a * ay + b];
        }
    }
    // Forward and reverse conditionals; full-support joints keep both defined.
    std::vector<double> wfwd(ax * ay), wrev(ay * ax);
    for (std::size_t a = 0; a < ax; ++a) {
        for (std::size_t b = 0; b < ay; ++b) {
            wfwd[a * ay + b] = px[a] > 0.0 ? pxy[a * ay + b] / px[a] : 0.0;
            wrev[b * ax + a] = py[b] > 0.0 ? pxy[a * ay + b] / py[b] : 0.0;
        }
    }
    prob::Channel w(ax, ay, wfwd);
    prob::Channel v(ay, ax, wrev);

    const double d1 = static_cast<double>(ay) * delta;
    const double d2 = static_cast<double>(ay + 1) * delta;
    const double d_marg = 2.0 * delta * static_cast<double>(ax);  // (delta+delta')|X|

    ImplicationReport rep{};
    for_each_sequence(ax, n, [&](const Sequence& x, const std::vector<std::size_t>&) {
        for_each_sequence(ay, n, [&](const Sequence& y, const std::vector<std::size_t>&) {
            ++rep.pairs_checked;
            bool joint_d = is_jointly_typical(x, y, pxy, ay, delta);
            bool joint_2d = is_jointly_typical(x, y, pxy, ay, 2.0 * delta);

            // Chaining: x typical, y cond-typical => pair (2 delta)-typical
            // and y marginally typical with constant 2 delta |X|.
            if (is_typical(x, px, delta) && is_cond_typical(y, x, w, delta)) {
                ++rep.chain_applicable;
                if (!joint_2d || !is_typical(y, py, d_marg)) ++rep.chain_counterexamples;
            }
            // Projection: pair typical => x typical at |Y| delta and y
            // cond-typical at (|Y|+1) delta.
            if (joint_d) {
                ++rep.project_applicable;
                if (!is_typical(x, px, d1) || !is_cond_typical(y, x, w, d2)) {
                    ++rep.project_counterexamples;
                }
            }
            // Exclusion: y typical but pair not (2 delta)-typical => x cannot
            // be cond-typical given y.
            if (is_typical(y, py, delta) && !joint_2d) {
                ++rep.exclusion_applicable;
                if (is_cond_typical(x, y, v, delta)) ++rep.exclusion_counterexamples;
            }
        });
    });
    rep.all_pass = rep.chain_counterexamples == 0 && rep.project_counterexamples == 0 &&
                   rep.exclusion_counterexamples == 0;
    return rep;
}

ProbabilityReport check_lemma_probability(const std::vector<double>& p,
                                          const prob::Channel* w, std::size_t n,
                                          double delta) {
    require_budget(pow_size(p.size(), n), "check_lemma_probability");
    double nn = static_cast<double>(n);
    double prob = 0.0;
    for_each_sequence(p.size(), n, [&](const Sequence& x, const std::vector<std::size_t>& counts) {
        double mass = 1.0;
        bool typical = true;
        for (std::size_t a = 0; a < p.size(); ++a) {
            if (counts[a] > 0) {
                if (p[a] == 0.0) {
                    typical = false;
                    mass = 0.0;
                    break;
                }
                mass *= std::pow(p[a], static_cast<double>(counts[a]));
            }
            if (std::abs(static_cast<double>(counts[a]) / nn - p[a]) > delta) typical = false;
        }
        if (typical) prob += mass;
    });
    double bound = 1.0 - 2.0 * static_cast<double>(p.size()) *
                             std::exp(-2.0 * delta * delta * nn);

    ProbabilityReport rep{prob, bound, prob >= bound - 1e-12, 1.0, 0.0, true};
    if (w == nullptr) return rep;

    require_budget(pow_size(p.size(), n) + pow_size(w->cols(), n), "check_lemma_probability");
    rep.cond_bound = 1.0 - 2.0 * static_cast<double>(w->rows() * w->cols()) *
                               std::exp(-2.0 * delta * delta * nn);
    // The conditional probability depends on x^n only through its type, so
    // one representative per composition of n covers every x^n.
    rep.cond_min_prob = 1.0;
    std::size_t ax = w->rows();
    std::vector<std::size_t> comp(ax, 0);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos,
                                                            std::size_t left) {
        if (pos + 1 == ax) {
            comp[pos] = left;
            Sequence x;
            x.reserve(n);
            for (std::size_t a = 0; a < ax; ++a) x.insert(x.end(), comp[a], a);
            double cp = 0.0;
            for_each_sequence(w->cols(), n,
                              [&](const Sequence& y, const std::vector<std::size_t>&) {
                                  double mass = 1.0;
                                  for (std::size_t i = 0; i < n; ++i) {
                                      mass *= (*w)(x[i], y[i]);
                                  }
                                  if (mass > 0.0 && is_cond_typical(y, x, *w, delta)) {
                                      cp += mass;
                                  }
                              });
            rep.cond_min_prob = std::min(rep.cond_min_prob, cp);
            return;
        }
        for (std::size_t k = 0; k <= left; ++k) {
            comp[pos] = k;
            rec(pos + 1, left - k);
        }
    };
    rec(0, n);
    rep.cond_holds = rep.cond_min_prob >= rep.cond_bound - 1e-12;
    return rep;
}

ScheduleReport check_delta_schedule(double c, const std::vector<std::size_t>& n_list) {
    if (c <= 0.0) throw UsageError("check_delta_schedule: c must be positive");
    ScheduleReport rep{true, true};
    double prev_delta = std::numeric_limits<double>::infinity();
    double prev_grow = 0.0;
    for (std::size_t n : n_list) {
        if (n < 3) throw UsageError("check_delta_schedule: n values must be >= 3");
        double sn = std::sqrt(static_cast<double>(n));
        double delta = c / sn * std::log2(static_cast<double>(n));
        if (delta >= prev_delta) rep.delta_to_zero = false;
        if (sn * delta <= prev_grow) rep.sqrt_n_delta_grows = false;
        prev_delta = delta;
        prev_grow = sn * delta;
    }
    return rep;
}

}  // namespace pcsc::mtypes
