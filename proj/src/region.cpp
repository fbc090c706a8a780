#include "pcsc/region.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <limits>
#include <map>
#include <optional>

#include "pcsc/rng.hpp"

namespace pcsc::region {

namespace {

constexpr double kLogFloor = 1e-300;
constexpr double kSlopeCap = 512.0;
// Certified suboptimality accepted for the secondary (rate) stage of the
// lexicographic solve; the leakage cap itself is enforced to lex_slack.
constexpr double kLexRateTol = 1e-3;

inline double log2_safe(double x) { return std::log2(std::max(x, kLogFloor)); }

// Precomputed single-letter quantities for one (source, encoded set) pair.
struct Ctx {
    const model::SourceModel* src;
    model::EncodedSet e;
    std::size_t a_n;  // |X_E|
    std::size_t m;    // |X_hat_R|
    std::size_t h_n;  // |X_H|
    std::vector<double> p_e;   // a_n
    std::vector<double> p_eh;  // a_n * h_n
    std::vector<double> p_h;   // h_n
    std::vector<double> dt;    // a_n * m, distortion lifted to X_E
    double h_hidden;
    double d_min;   // min achievable expected distortion
    double d_zero;  // distortion of the best constant channel
};

Ctx make_ctx(const model::SourceModel& src, const model::EncodedSet& e) {
    auto findings = model::validate(src, e);
    if (!findings.empty()) throw ValidationError("region: " + findings.front());
    Ctx c;
    c.src = &src;
    c.e = e;
    c.a_n = src.encoded_cells(e);
    c.m = src.recon_size;
    c.h_n = src.hidden_cells();
    c.p_e.assign(c.a_n, 0.0);
    c.p_eh.assign(c.a_n * c.h_n, 0.0);
    c.p_h.assign(c.h_n, 0.0);
    c.dt.assign(c.a_n * c.m, 0.0);

    std::vector<char> dt_set(c.a_n, 0);
    for (std::size_t x = 0; x < src.joint.cells(); ++x) {
        double p = src.joint.probs()[x];
        std::size_t xe = model::project_index(src, x, e.encoded);
        std::size_t xh = model::project_index(src, x, src.partition.hidden);
        std::size_t xr = model::project_index(src, x, src.partition.revealed);
        c.p_e[xe] += p;
        c.p_eh[xe * c.h_n + xh] += p;
        c.p_h[xh] += p;
        if (!dt_set[xe]) {  // x_R is a function of x_E, so any preimage works
            for (std::size_t b = 0; b < c.m; ++b) c.dt[xe * c.m + b] = src.distortion_at(xr, b);
            dt_set[xe] = 1;
        }
    }
    c.h_hidden = prob::entropy_bits(c.p_h);

    c.d_min = 0.0;
    for (std::size_t a = 0; a < c.a_n; ++a) {
        double best = c.dt[a * c.m];
        for (std::size_t b = 1; b < c.m; ++b) best = std::min(best, c.dt[a * c.m + b]);
        c.d_min += c.p_e[a] * best;
    }
    c.d_zero = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < c.m; ++b) {
        double ed = 0.0;
        for (std::size_t a = 0; a < c.a_n; ++a) ed += c.p_e[a] * c.dt[a * c.m + b];
        c.d_zero = std::min(c.d_zero, ed);
    }
    return c;
}

double eval_dist(const Ctx& c, const std::vector<double>& w) {
    double d = 0.0;
    for (std::size_t a = 0; a < c.a_n; ++a) {
        for (std::size_t b = 0; b < c.m; ++b) d += c.p_e[a] * w[a * c.m + b] * c.dt[a * c.m + b];
    }
    return d;
}

void eval_q(const Ctx& c, const std::vector<double>& w, std::vector<double>& q) {
    q.assign(c.m, 0.0);
    for (std::size_t a = 0; a < c.a_n; ++a) {
        for (std::size_t b = 0; b < c.m; ++b) q[b] += c.p_e[a] * w[a * c.m + b];
    }
}

double eval_rate(const Ctx& c, const std::vector<double>& w) {
    std::vector<double> q;
    eval_q(c, w, q);
    double r = 0.0;
    for (std::size_t a = 0; a < c.a_n; ++a) {
        if (c.p_e[a] <= 0.0) continue;
        for (std::size_t b = 0; b < c.m; ++b) {
            double wab = w[a * c.m + b];
            if (wab > 0.0 && q[b] > 0.0) {
                r += c.p_e[a] * wab * std::log2(wab / q[b]);
            }
        }
    }
    return std::max(0.0, r);
}

void eval_phb(const Ctx& c, const std::vector<double>& w, std::vector<double>& phb) {
    phb.assign(c.h_n * c.m, 0.0);
    for (std::size_t a = 0; a < c.a_n; ++a) {
        for (std::size_t h = 0; h < c.h_n; ++h) {
            double peh = c.p_eh[a * c.h_n + h];
            if (peh <= 0.0) continue;
            for (std::size_t b = 0; b < c.m; ++b) {
                phb[h * c.m + b] += peh * w[a * c.m + b];
            }
        }
    }
}

double leak_from_phb(const Ctx& c, const std::vector<double>& phb) {
    std::vector<double> q(c.m, 0.0);
    for (std::size_t h = 0; h < c.h_n; ++h) {
        for (std::size_t b = 0; b < c.m; ++b) q[b] += phb[h * c.m + b];
    }
    double l = 0.0;
    for (std::size_t h = 0; h < c.h_n; ++h) {
        for (std::size_t b = 0; b < c.m; ++b) {
            double v = phb[h * c.m + b];
            if (v > 0.0) l += v * std::log2(v / (c.p_h[h] * q[b]));
        }
    }
    return std::max(0.0, l);
}

double eval_leak(const Ctx& c, const std::vector<double>& w) {
    std::vector<double> phb;
    eval_phb(c, w, phb);
    return leak_from_phb(c, phb);
}

// d/dW(b|a) of I(X_H; X_hat) = sum_h p(a,h) log2( p(h|b) / p(h) ).
void grad_leak(const Ctx& c, const std::vector<double>& w, std::vector<double>& g) {
    std::vector<double> phb, q(c.m, 0.0);
    eval_phb(c, w, phb);
    for (std::size_t h = 0; h < c.h_n; ++h) {
        for (std::size_t b = 0; b < c.m; ++b) q[b] += phb[h * c.m + b];
    }
    g.assign(c.a_n * c.m, 0.0);
    for (std::size_t b = 0; b < c.m; ++b) {
        if (q[b] <= 0.0) continue;  // limit contribution is 0
        for (std::size_t a = 0; a < c.a_n; ++a) {
            double acc = 0.0;
            for (std::size_t h = 0; h < c.h_n; ++h) {
                double peh = c.p_eh[a * c.h_n + h];
                if (peh <= 0.0 || c.p_h[h] <= 0.0) continue;
                acc += peh * log2_safe(phb[h * c.m + b] / (q[b] * c.p_h[h]));
            }
            g[a * c.m + b] = acc;
        }
    }
}

// d/dW(b|a) of I(X_E; X_hat) = p(a) log2( W(b|a) / q(b) ).
void grad_rate(const Ctx& c, const std::vector<double>& w, std::vector<double>& g) {
    std::vector<double> q;
    eval_q(c, w, q);
    g.assign(c.a_n * c.m, 0.0);
    for (std::size_t a = 0; a < c.a_n; ++a) {
        if (c.p_e[a] <= 0.0) continue;
        for (std::size_t b = 0; b < c.m; ++b) {
            if (q[b] <= 0.0) continue;
            g[a * c.m + b] = c.p_e[a] * log2_safe(w[a * c.m + b] / q[b]);
        }
    }
}

using VertexKey = std::vector<std::uint16_t>;  // per-row column choice

std::vector<double> vertex_point(const Ctx& c, const VertexKey& v) {
    std::vector<double> w(c.a_n * c.m, 0.0);
    for (std::size_t a = 0; a < c.a_n; ++a) w[a * c.m + v[a]] = 1.0;
    return w;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

using Point = std::vector<double>;

// Smooth objective plugged into the solver below.
struct ObjFns {
    std::function<double(const Point&)> value;
    std::function<void(const Point&, Point&)> grad;
};

// Exact linear minimization over {row-stochastic W : E[d] <= d_cap}: an LP
// with one coupling constraint. Parametric in the multiplier lambda, each
// row independently picks argmin_b (g(a,b) + lambda p(a) d(a,b)); the
// optimum is a vertex or a blend of the two vertices bracketing the
// distortion breakpoint.
Point lmo_distortion(const Ctx& c, const Point& g, double d_cap) {
    auto pick = [&](double lambda, Point& w, double& dist) {
        w.assign(c.a_n * c.m, 0.0);
        dist = 0.0;
        for (std::size_t a = 0; a < c.a_n; ++a) {
            std::size_t best = 0;
            double best_v = g[a * c.m] + lambda * c.p_e[a] * c.dt[a * c.m];
            for (std::size_t b = 1; b < c.m; ++b) {
                double v = g[a * c.m + b] + lambda * c.p_e[a] * c.dt[a * c.m + b];
                if (v < best_v) {
                    best_v = v;
                    best = b;
                }
            }
            w[a * c.m + best] = 1.0;
            dist += c.p_e[a] * c.dt[a * c.m + best];
        }
    };
    Point w_lo, w_hi;
    double d_lo, d_hi;
    pick(0.0, w_lo, d_lo);
    if (d_lo <= d_cap + 1e-15) return w_lo;
    double lam_lo = 0.0, lam_hi = 1.0;
    pick(lam_hi, w_hi, d_hi);
    while (d_hi > d_cap && lam_hi < 1e15) {
        lam_lo = lam_hi;
        lam_hi *= 8.0;
        pick(lam_hi, w_hi, d_hi);
    }
    if (d_hi > d_cap) return w_hi;  // d_cap at (or below) the minimum distortion
    for (int it = 0; it < 80 && lam_hi - lam_lo > 1e-14 * (1.0 + lam_hi); ++it) {
        double mid = 0.5 * (lam_lo + lam_hi);
        Point wm;
        double dm;
        pick(mid, wm, dm);
        if (dm <= d_cap) {
            lam_hi = mid;
            w_hi = std::move(wm);
            d_hi = dm;
        } else {
            lam_lo = mid;
            w_lo = std::move(wm);
            d_lo = dm;
        }
    }
    if (d_lo <= d_cap) return w_lo;
    // Blend across the breakpoint so the distortion constraint is tight.
    double mu = (d_cap - d_hi) / std::max(d_lo - d_hi, 1e-300);
    mu = std::clamp(mu, 0.0, 1.0);
    Point out(w_hi.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = mu * w_lo[i] + (1.0 - mu) * w_hi[i];
    }
    return out;
}

// Iterate of away-step Frank-Wolfe kept as an explicit convex combination of
// feasible atoms (vertices or LMO blends), so it never leaves the polytope.
struct GaState {
    Point x;
    std::vector<Point> atoms;
    std::vector<double> wts;
};

GaState ga_start(Point p) {
    GaState st;
    st.x = p;
    st.atoms.push_back(std::move(p));
    st.wts.push_back(1.0);
    return st;
}

// Bisection on the directional derivative of a convex slice.
double line_search(const ObjFns& f, const Point& x, const Point& dir, double gamma_max) {
    Point probe(x.size()), g;
    auto slope = [&](double t) {
        for (std::size_t i = 0; i < x.size(); ++i) probe[i] = x[i] + t * dir[i];
        f.grad(probe, g);
        return dot(g, dir);
    };
    if (slope(gamma_max) <= 0.0) return gamma_max;
    double lo = 0.0, hi = gamma_max;
    for (int it = 0; it < 26; ++it) {
        double mid = 0.5 * (lo + hi);
        (slope(mid) <= 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Away-step FW with a pluggable LMO; returns the last duality gap, which
// certifies optimality of the constrained problem when the LMO is exact.
double afw_run(const ObjFns& f, const std::function<Point(const Point&)>& lmo, GaState& st,
               std::size_t max_iters, double gap_tol) {
    Point g;
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < max_iters; ++it) {
        f.grad(st.x, g);
        Point s = lmo(g);
        gap = dot(g, st.x) - dot(g, s);
        if (gap <= gap_tol) return gap;

        std::size_t away = 0;
        double away_val = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < st.atoms.size(); ++k) {
            double v = dot(g, st.atoms[k]);
            if (v > away_val) {
                away_val = v;
                away = k;
            }
        }
        double away_score = away_val - dot(g, st.x);

        Point dir(st.x.size());
        if (gap >= away_score || st.atoms.size() <= 1) {
            for (std::size_t i = 0; i < dir.size(); ++i) dir[i] = s[i] - st.x[i];
            double gamma = line_search(f, st.x, dir, 1.0);
            if (gamma <= 0.0) return gap;
            for (double& wgt : st.wts) wgt *= (1.0 - gamma);
            if (gamma >= 1.0 - 1e-15) {
                st.atoms.assign(1, s);
                st.wts.assign(1, 1.0);
            } else {
                std::size_t slot = st.atoms.size();
                for (std::size_t k = 0; k < st.atoms.size(); ++k) {
                    if (st.atoms[k] == s) {
                        slot = k;
                        break;
                    }
                }
                if (slot == st.atoms.size()) {
                    st.atoms.push_back(s);
                    st.wts.push_back(0.0);
                }
                st.wts[slot] += gamma;
            }
            for (std::size_t i = 0; i < st.x.size(); ++i) st.x[i] += gamma * dir[i];
        } else {
            double alpha = st.wts[away];
            if (alpha >= 1.0 - 1e-15) return gap;
            for (std::size_t i = 0; i < dir.size(); ++i) {
                dir[i] = st.x[i] - st.atoms[away][i];
            }
            double gamma = line_search(f, st.x, dir, alpha / (1.0 - alpha));
            if (gamma <= 0.0) return gap;
            for (double& wgt : st.wts) wgt *= (1.0 + gamma);
            st.wts[away] -= gamma;
            for (std::size_t i = 0; i < st.x.size(); ++i) st.x[i] += gamma * dir[i];
        }
        for (std::size_t k = st.atoms.size(); k > 0;) {
            --k;
            if (st.wts[k] <= 1e-14) {
                st.atoms.erase(st.atoms.begin() + static_cast<std::ptrdiff_t>(k));
                st.wts.erase(st.wts.begin() + static_cast<std::ptrdiff_t>(k));
            }
        }
    }
    return gap;
}

VertexKey min_dist_vertex(const Ctx& c) {
    VertexKey v(c.a_n, 0);
    for (std::size_t a = 0; a < c.a_n; ++a) {
        std::size_t best = 0;
        for (std::size_t b = 1; b < c.m; ++b) {
            if (c.dt[a * c.m + b] < c.dt[a * c.m + best]) best = b;
        }
        v[a] = static_cast<std::uint16_t>(best);
    }
    return v;
}

VertexKey random_vertex(const Ctx& c, CounterRng& rng) {
    VertexKey v(c.a_n);
    for (std::size_t a = 0; a < c.a_n; ++a) {
        v[a] = static_cast<std::uint16_t>(rng.next_below(c.m));
    }
    return v;
}

// Mixes w toward the anchor until the distortion constraint holds.
void repair_distortion(const Ctx& c, std::vector<double>& w, const std::vector<double>& anchor,
                       double d_cap) {
    double d = eval_dist(c, w);
    if (d <= d_cap) return;
    double da = eval_dist(c, anchor);
    if (da > d_cap) return;  // anchor itself infeasible; nothing to do
    double t = (d - d_cap) / std::max(d - da, 1e-300);
    t = std::min(1.0, t + 1e-12);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = (1.0 - t) * w[i] + t * anchor[i];
}

// Two-constraint repair via bisection along the segment to a feasible anchor.
bool repair_both(const Ctx& c, std::vector<double>& w, const std::vector<double>& anchor,
                 double d_cap, double l_cap) {
    auto feasible = [&](const std::vector<double>& p) {
        return eval_dist(c, p) <= d_cap && eval_leak(c, p) <= l_cap;
    };
    if (feasible(w)) return true;
    if (!feasible(anchor)) return false;
    double lo = 0.0, hi = 1.0;
    std::vector<double> probe(w.size());
    for (int it = 0; it < 50; ++it) {
        double mid = 0.5 * (lo + hi);
        for (std::size_t i = 0; i < w.size(); ++i) {
            probe[i] = (1.0 - mid) * w[i] + mid * anchor[i];
        }
        (feasible(probe) ? hi : lo) = mid;
    }
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = (1.0 - hi) * w[i] + hi * anchor[i];
    return true;
}

prob::Channel to_channel(const Ctx& c, const std::vector<double>& w) {
    // Clean tiny negative noise before validation.
    std::vector<double> p = w;
    for (std::size_t a = 0; a < c.a_n; ++a) {
        double sum = 0.0;
        for (std::size_t b = 0; b < c.m; ++b) {
            p[a * c.m + b] = std::max(0.0, p[a * c.m + b]);
            sum += p[a * c.m + b];
        }
        for (std::size_t b = 0; b < c.m; ++b) p[a * c.m + b] /= sum;
    }
    return prob::Channel(c.a_n, c.m, std::move(p));
}

// ---- Blahut-Arimoto ---------------------------------------------------------

struct BaPoint {
    std::vector<double> w;
    double dist;
    double rate;
};

BaPoint ba_solve(const Ctx& c, double slope, const std::vector<double>* warm) {
    std::size_t A = c.a_n, M = c.m;
    std::vector<double> kern(A * M);
    for (std::size_t i = 0; i < A * M; ++i) kern[i] = std::exp2(-slope * c.dt[i]);
    std::vector<double> w;
    if (warm && warm->size() == A * M) {
        w = *warm;
        // Keep strictly positive so no output symbol dies from the warm start.
        for (double& v : w) v = std::max(v, 1e-12);
    } else {
        w.assign(A * M, 1.0 / static_cast<double>(M));
    }
    std::vector<double> q(M);
    for (std::size_t it = 0; it < 20000; ++it) {
        eval_q(c, w, q);
        double change = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
            double z = 0.0;
            for (std::size_t b = 0; b < M; ++b) z += q[b] * kern[a * M + b];
            if (z <= 0.0) continue;
            for (std::size_t b = 0; b < M; ++b) {
                double nv = q[b] * kern[a * M + b] / z;
                change = std::max(change, std::abs(nv - w[a * M + b]));
                w[a * M + b] = nv;
            }
        }
        if (change < 1e-14) break;
    }
    return BaPoint{w, eval_dist(c, w), eval_rate(c, w)};
}

struct RdSolveState {
    double prev_slope = 1.0;
    std::vector<double> warm;
};

RdPoint rd_value(const Ctx& c, double d, RdSolveState& state) {
    if (d < c.d_min - 1e-12) {
        // Below the minimum achievable distortion: no channel qualifies.
        VertexKey v = min_dist_vertex(c);
        return RdPoint{d, std::numeric_limits<double>::quiet_NaN(),
                       to_channel(c, vertex_point(c, v))};
    }
    if (d >= c.d_zero - 1e-15) {
        // Constant channel on the best output reaches zero rate.
        std::size_t best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t b = 0; b < c.m; ++b) {
            double ed = 0.0;
            for (std::size_t a = 0; a < c.a_n; ++a) ed += c.p_e[a] * c.dt[a * c.m + b];
            if (ed < bd) {
                bd = ed;
                best = b;
            }
        }
        std::vector<double> w(c.a_n * c.m, 0.0);
        for (std::size_t a = 0; a < c.a_n; ++a) w[a * c.m + best] = 1.0;
        return RdPoint{d, 0.0, to_channel(c, w)};
    }

    // Bracket the slope: D(s) is nonincreasing in s.
    double lo = 0.0;
    double hi = std::max(1e-3, state.prev_slope);
    BaPoint at_hi = ba_solve(c, hi, state.warm.empty() ? nullptr : &state.warm);
    while (at_hi.dist > d && hi < kSlopeCap) {
        lo = hi;
        hi = std::min(kSlopeCap, hi * 4.0);
        at_hi = ba_solve(c, hi, &at_hi.w);
    }
    if (at_hi.dist > d) {
        // Distortion plateau at the slope cap; as exact as the float model allows.
        state.prev_slope = hi;
        state.warm = at_hi.w;
        return RdPoint{d, at_hi.rate, to_channel(c, at_hi.w)};
    }
    BaPoint at_lo = ba_solve(c, lo, &at_hi.w);
    if (at_lo.dist < d) {
        // lo == 0 can land below d when d >= d_zero-ish; treat as zero rate.
        state.prev_slope = std::max(1e-3, lo);
        state.warm = at_lo.w;
        return RdPoint{d, std::max(0.0, at_lo.rate - lo * (d - at_lo.dist)),
                       to_channel(c, at_lo.w)};
    }

    BaPoint best = at_hi;
    double best_slope = hi;
    for (int it = 0; it < 80; ++it) {
        if (std::abs(best.dist - d) <= 1e-12) break;
        if (hi - lo <= 1e-10 * (1.0 + hi)) break;
        double mid = 0.5 * (lo + hi);
        BaPoint at_mid = ba_solve(c, mid, &best.w);
        if (at_mid.dist > d) {
            lo = mid;
            at_lo = at_mid;
        } else {
            hi = mid;
            at_hi = at_mid;
        }
        if (std::abs(at_mid.dist - d) < std::abs(best.dist - d)) {
            best = at_mid;
            best_slope = mid;
        }
    }
    state.prev_slope = best_slope;
    state.warm = best.w;

    double r;
    if (std::abs(best.dist - d) <= 1e-9) {
        // Tangent-line value at the bisected slope.
        r = best.rate - best_slope * (d - best.dist);
    } else {
        // The curve is linear across this slope; chord between the brackets.
        double span = at_lo.dist - at_hi.dist;
        double t = span > 0.0 ? (at_lo.dist - d) / span : 0.0;
        r = at_lo.rate + t * (at_hi.rate - at_lo.rate);
    }
    return RdPoint{d, std::max(0.0, r), to_channel(c, best.w)};
}

}  // namespace

double min_feasible_distortion(const model::SourceModel& src) {
    return make_ctx(src, model::EncodedSet{src.partition.revealed}).d_min;
}

double zero_rate_distortion(const model::SourceModel& src) {
    return make_ctx(src, model::EncodedSet{src.partition.revealed}).d_zero;
}

std::vector<RdPoint> rd_curve(const model::SourceModel& src, const model::EncodedSet& e,
                              const std::vector<double>& d_grid, const SolverParams&) {
    Ctx c = make_ctx(src, e);
    for (double d : d_grid) {
        if (d < 0.0 || d > src.d_max + 1e-12) {
            throw UsageError("rd_curve: grid distortion outside [0, d_max]");
        }
    }
    // Ascending processing lets the slope bracket shrink monotonically.
    std::vector<std::size_t> order(d_grid.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t k) { return d_grid[i] > d_grid[k]; });
    std::vector<RdPoint> out;
    out.reserve(d_grid.size());
    RdSolveState state;
    std::vector<std::optional<RdPoint>> slots(d_grid.size());
    for (std::size_t i : order) slots[i] = rd_value(c, d_grid[i], state);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

prob::Channel random_channel(std::size_t rows, std::size_t cols, std::uint64_t seed,
                             std::uint64_t stream) {
    CounterRng rng(seed, stream);
    std::vector<double> p(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        double sum = 0.0;
        for (std::size_t ccol = 0; ccol < cols; ++ccol) {
            double u = std::max(rng.next_double(), 1e-12);
            p[r * cols + ccol] = -std::log(u);
            sum += p[r * cols + ccol];
        }
        for (std::size_t ccol = 0; ccol < cols; ++ccol) p[r * cols + ccol] /= sum;
    }
    return prob::Channel(rows, cols, std::move(p));
}

SolveResult min_leakage(const model::SourceModel& src, const model::EncodedSet& e, double d,
                        const SolverParams& params,
                        const std::vector<prob::Channel>& warm_starts) {
    Ctx c = make_ctx(src, e);
    if (d < c.d_min - 1e-12) {
        throw UsageError("min_leakage: distortion below the minimum achievable value");
    }
    Point anchor = vertex_point(c, min_dist_vertex(c));

    // Feasible initial points: the min-distortion vertex, repaired warm
    // starts, and seeded random vertices (cheap insurance on a convex
    // problem whose line search can stall at the simplex boundary).
    std::vector<Point> starts;
    starts.push_back(anchor);
    for (const auto& w : warm_starts) {
        if (w.rows() != c.a_n || w.cols() != c.m) continue;
        Point p = w.probs();
        repair_distortion(c, p, anchor, d);
        starts.push_back(std::move(p));
    }
    CounterRng rng(params.seed, 17);
    for (std::size_t r = 0; r < params.restarts; ++r) {
        Point p = vertex_point(c, random_vertex(c, rng));
        repair_distortion(c, p, anchor, d);
        starts.push_back(std::move(p));
    }

    ObjFns f{[&](const Point& w) { return eval_leak(c, w); },
             [&](const Point& w, Point& g) { grad_leak(c, w, g); }};
    auto lmo = [&](const Point& g) { return lmo_distortion(c, g, d); };

    double best_val = std::numeric_limits<double>::infinity();
    Point best_w = anchor;
    double best_gap = 0.0;
    bool converged = false;

    auto consider = [&](Point w, double gap, bool conv) {
        repair_distortion(c, w, anchor, d);
        if (eval_dist(c, w) > d + 1e-9) return;
        double val = eval_leak(c, w);
        if (val < best_val - 1e-15) {
            best_val = val;
            best_w = std::move(w);
            best_gap = gap;
            converged = conv;
        }
    };

    // Warm starts count as candidates in their own right.
    for (const auto& w : warm_starts) {
        if (w.rows() == c.a_n && w.cols() == c.m) consider(w.probs(), 0.0, true);
    }

    const double gap_tol = std::max(params.objective_tol, 1e-10);
    for (const auto& p0 : starts) {
        GaState st = ga_start(p0);
        double gap = afw_run(f, lmo, st, params.max_iters, gap_tol);
        consider(st.x, gap, gap <= 1e-7);
    }
    return SolveResult{best_val, to_channel(c, best_w), converged, best_gap};
}

SolveResult rate_at_min_leakage(const model::SourceModel& src, const model::EncodedSet& e,
                                double d, double l_star, const SolverParams& params,
                                const std::vector<prob::Channel>& warm_starts) {
    Ctx c = make_ctx(src, e);
    double l_cap = l_star + params.lex_slack;

    // Feasibility anchor: a channel meeting both constraints.
    std::vector<double> anchor;
    for (const auto& w : warm_starts) {
        if (w.rows() != c.a_n || w.cols() != c.m) continue;
        const auto& p = w.probs();
        if (eval_dist(c, p) <= d + 1e-12 && eval_leak(c, p) <= l_cap + 1e-12) {
            anchor = p;
            break;
        }
    }
    if (anchor.empty()) {
        SolveResult stage1 = min_leakage(src, e, d, params, warm_starts);
        anchor = stage1.witness.probs();
        if (eval_leak(c, anchor) > l_cap + 1e-9) {
            return SolveResult{std::numeric_limits<double>::quiet_NaN(),
                               to_channel(c, anchor), false,
                               eval_leak(c, anchor) - l_cap};
        }
    }

    double best_val = std::numeric_limits<double>::infinity();
    Point best_w = anchor;
    double lb_best = -std::numeric_limits<double>::infinity();

    auto consider = [&](Point w) {
        if (!repair_both(c, w, anchor, d + 1e-12, l_cap + 1e-12)) return;
        double val = eval_rate(c, w);
        if (val < best_val - 1e-15) {
            best_val = val;
            best_w = std::move(w);
        }
    };

    consider(anchor);
    for (const auto& w : warm_starts) {
        if (w.rows() == c.a_n && w.cols() == c.m) consider(w.probs());
    }

    // Scalarization rate + beta * leak over the distortion polytope.  The
    // leakage of the scalarized minimizer is nonincreasing in beta, so a
    // bisection on beta brackets the leakage cap.  Each solve at multiplier
    // beta yields a Lagrangian lower bound on the constrained rate minimum,
    //     f(x) - gap - beta * l_cap,
    // valid whether or not x is feasible; the best such bound certifies
    // the suboptimality of the best repaired candidate.
    auto lmo = [&](const Point& g) { return lmo_distortion(c, g, d); };
    const double gap_tol = std::max(params.objective_tol, 1e-10);
    auto solve_beta = [&](double beta, const Point& p0) {
        Point grad_buf;
        ObjFns f{[&c, beta](const Point& w) {
                     return eval_rate(c, w) + beta * eval_leak(c, w);
                 },
                 [&c, beta, &grad_buf](const Point& w, Point& g) {
                     grad_rate(c, w, g);
                     grad_leak(c, w, grad_buf);
                     for (std::size_t i = 0; i < g.size(); ++i) g[i] += beta * grad_buf[i];
                 }};
        GaState st = ga_start(p0);
        double tol = gap_tol * (1.0 + beta);
        double gap = afw_run(f, lmo, st, params.max_iters, tol);
        // A stalled run usually carries a degenerate active set; restarting
        // from the same point with a fresh atom set often recovers.
        for (int r = 0; r < 3 && gap > tol; ++r) {
            double prev = gap;
            st = ga_start(st.x);
            gap = afw_run(f, lmo, st, params.max_iters, tol);
            if (gap > 0.5 * prev) break;
        }
        lb_best = std::max(lb_best, f.value(st.x) - gap - beta * l_cap);
        if (std::getenv("PCSC_DEBUG")) {
            std::fprintf(stderr, "beta=%g gap=%g leak=%g rate=%g lb=%g\n", beta, gap,
                         eval_leak(c, st.x), eval_rate(c, st.x), lb_best);
        }
        consider(st.x);
        return st.x;
    };

    Point sol = solve_beta(0.0, anchor);
    if (eval_leak(c, sol) > l_cap) {
        double beta_lo = 0.0;
        double beta_hi = 1.0;
        bool bracketed = false;
        for (int it = 0; it < 16; ++it) {
            sol = solve_beta(beta_hi, anchor);
            if (eval_leak(c, sol) <= l_cap) {
                bracketed = true;
                break;
            }
            beta_lo = beta_hi;
            beta_hi *= 4.0;
        }
        if (bracketed) {
            Point warm = sol;
            for (int it = 0; it < 25; ++it) {
                double beta = 0.5 * (beta_lo + beta_hi);
                sol = solve_beta(beta, warm);
                if (eval_leak(c, sol) <= l_cap) {
                    beta_hi = beta;
                    warm = sol;
                } else {
                    beta_lo = beta;
                }
            }
        }
    }
    double cert = best_val - lb_best;
    return SolveResult{best_val, to_channel(c, best_w), cert <= kLexRateTol, cert};
}

namespace {

void project_row_simplex(double* row, std::size_t m) {
    std::vector<double> u(row, row + m);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double css = 0.0, theta = 0.0;
    std::size_t rho = 0;
    for (std::size_t i = 0; i < m; ++i) {
        css += u[i];
        double t = (css - 1.0) / static_cast<double>(i + 1);
        if (u[i] - t > 0.0) {
            rho = i + 1;
            theta = t;
        }
    }
    (void)rho;
    for (std::size_t i = 0; i < m; ++i) row[i] = std::max(0.0, row[i] - theta);
}

}  // namespace

MembershipResult membership(const model::SourceModel& src, const model::EncodedSet& e,
                            const TradeoffPoint& point, double tol,
                            const SolverParams& params,
                            const std::vector<prob::Channel>& hints) {
    Ctx c = make_ctx(src, e);
    auto violation = [&](const std::vector<double>& w) {
        double v = eval_rate(c, w) - point.rate;
        v = std::max(v, eval_dist(c, w) - point.distortion);
        v = std::max(v, eval_leak(c, w) - point.leakage);
        return v;
    };

    std::vector<std::vector<double>> candidates;
    for (const auto& h : hints) {
        if (h.rows() == c.a_n && h.cols() == c.m) candidates.push_back(h.probs());
    }
    // Constant channels reach the all-slack corner; min-distortion vertex the other.
    for (std::size_t b = 0; b < c.m; ++b) {
        std::vector<double> w(c.a_n * c.m, 0.0);
        for (std::size_t a = 0; a < c.a_n; ++a) w[a * c.m + b] = 1.0;
        candidates.push_back(std::move(w));
    }
    candidates.push_back(vertex_point(c, min_dist_vertex(c)));
    // Lagrangian rate-distortion channels cover the rate-limited corners.
    RdSolveState tmp_state;
    for (double s : {0.5, 2.0, 8.0, 32.0}) {
        candidates.push_back(ba_solve(c, s, nullptr).w);
    }
    (void)tmp_state;
    CounterRng rng(params.seed, 31);
    for (std::size_t r = 0; r < std::max<std::size_t>(4, params.restarts / 2); ++r) {
        candidates.push_back(random_channel(c.a_n, c.m, params.seed, 100 + r).probs());
    }

    double best_v = std::numeric_limits<double>::infinity();
    std::vector<double> best_w;
    for (const auto& w : candidates) {
        double v = violation(w);
        if (v < best_v) {
            best_v = v;
            best_w = w;
        }
        if (best_v <= tol) return MembershipResult{true, best_v, to_channel(c, best_w)};
    }

    // Projected subgradient descent on the max violation.
    std::vector<double> x = best_w, g, gl, gr;
    double step0 = std::max(0.05, best_v);
    for (std::size_t it = 0; it < std::max<std::size_t>(params.max_iters, 400); ++it) {
        double vr = eval_rate(c, x) - point.rate;
        double vd = eval_dist(c, x) - point.distortion;
        double vl = eval_leak(c, x) - point.leakage;
        double v = std::max({vr, vd, vl});
        if (v < best_v) {
            best_v = v;
            best_w = x;
            if (best_v <= tol) break;
        }
        if (v == vr) {
            grad_rate(c, x, g);
        } else if (v == vl) {
            grad_leak(c, x, g);
        } else {
            g.assign(c.a_n * c.m, 0.0);
            for (std::size_t a = 0; a < c.a_n; ++a) {
                for (std::size_t b = 0; b < c.m; ++b) {
                    g[a * c.m + b] = c.p_e[a] * c.dt[a * c.m + b];
                }
            }
        }
        double norm = std::sqrt(std::max(dot(g, g), 1e-30));
        double step = step0 / (norm * std::sqrt(static_cast<double>(it + 1)));
        for (std::size_t i = 0; i < x.size(); ++i) x[i] -= step * g[i];
        for (std::size_t a = 0; a < c.a_n; ++a) project_row_simplex(&x[a * c.m], c.m);
    }
    (void)gl;
    (void)gr;
    (void)rng;
    return MembershipResult{best_v <= tol, best_v, to_channel(c, best_w)};
}

InclusionReport inclusion_check(const model::SourceModel& src, const model::EncodedSet& e1,
                                const model::EncodedSet& e2,
                                const std::vector<double>& d_grid, double tol,
                                const SolverParams& params) {
    for (std::size_t a : e1.encoded) {
        if (!std::binary_search(e2.encoded.begin(), e2.encoded.end(), a)) {
            throw UsageError("inclusion_check: e1 must be contained in e2");
        }
    }
    InclusionReport rep{{}, true};
    std::vector<prob::Channel> prev1, prev2;
    for (double d : d_grid) {
        SolveResult r1 = min_leakage(src, e1, d, params, prev1);
        prob::Channel lifted = model::lift_channel_between(src, r1.witness, e1, e2);
        std::vector<prob::Channel> starts2 = prev2;
        starts2.push_back(lifted);
        SolveResult r2 = min_leakage(src, e2, d, params, starts2);
        bool ok = r2.value <= r1.value + tol;
        rep.rows.push_back(InclusionRow{d, r1.value, r2.value, ok});
        rep.all_ordered = rep.all_ordered && ok;
        prev1 = {r1.witness};
        prev2 = {r2.witness, lifted};
    }
    return rep;
}

ConvexityReport convexity_certificate(const model::SourceModel& src, const model::EncodedSet& e,
                                      std::size_t trials, const SolverParams& params) {
    if (trials < 1) throw UsageError("convexity_certificate: trials must be >= 1");
    Ctx c = make_ctx(src, e);
    ConvexityReport rep{{}, true};
    rep.trials.reserve(trials);
    CounterRng rng(params.seed, 41);
    for (std::size_t t = 0; t < trials; ++t) {
        prob::Channel w1 = random_channel(c.a_n, c.m, params.seed, 1000 + 2 * t);
        prob::Channel w2 = random_channel(c.a_n, c.m, params.seed, 1001 + 2 * t);
        double lambda = 0.01 + 0.98 * rng.next_double();
        model::PointEval p1 = model::eval_point(src, e, w1);
        model::PointEval p2 = model::eval_point(src, e, w2);
        TradeoffPoint mix{lambda * p1.rate + (1.0 - lambda) * p2.rate,
                          lambda * p1.distortion + (1.0 - lambda) * p2.distortion,
                          lambda * p1.leakage + (1.0 - lambda) * p2.leakage};
        std::vector<double> wm(c.a_n * c.m);
        for (std::size_t i = 0; i < wm.size(); ++i) {
            wm[i] = lambda * w1.probs()[i] + (1.0 - lambda) * w2.probs()[i];
        }
        MembershipResult mr =
            membership(src, e, mix, 1e-9, params, {to_channel(c, wm)});
        rep.trials.push_back(MixtureWitness{lambda, mix, mr.witness, mr.member});
        rep.all_passed = rep.all_passed && mr.member;
    }
    return rep;
}

OracleResult grid_oracle(const model::SourceModel& src, const model::EncodedSet& e, double d,
                         double step, double lex_slack) {
    // step = 1 degenerates to the deterministic-map brute force.
    if (step <= 0.0 || step > 1.0) throw UsageError("grid_oracle: step must be in (0, 1]");
    Ctx c = make_ctx(src, e);
    const std::size_t S = static_cast<std::size_t>(std::llround(1.0 / step));
    const double g = 1.0 / static_cast<double>(S);

    // All pmfs with entries that are multiples of g.
    std::vector<std::vector<double>> rows_grid;
    {
        std::vector<std::size_t> counts(c.m, 0);
        std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos,
                                                                std::size_t left) {
            if (pos + 1 == c.m) {
                counts[pos] = left;
                std::vector<double> row(c.m);
                for (std::size_t b = 0; b < c.m; ++b) {
                    row[b] = static_cast<double>(counts[b]) * g;
                }
                rows_grid.push_back(std::move(row));
                return;
            }
            for (std::size_t k = 0; k <= left; ++k) {
                counts[pos] = k;
                rec(pos + 1, left - k);
            }
        };
        rec(0, S);
    }

    double total = std::pow(static_cast<double>(rows_grid.size()),
                            static_cast<double>(c.a_n));
    if (total > 1e8) {
        throw BudgetError("grid_oracle: channel count exceeds the enumeration budget",
                          total, 1e8);
    }

    // Guaranteed rounding slack: any simplex point is within L1 distance t_row
    // of a grid point, which perturbs distortion by at most t_row * d_max.
    const double t_row = 2.0 * static_cast<double>(c.m - 1) * g;
    const double d_relaxed = d + t_row * src.d_max;

    // Per-level partial accumulators; copied down the recursion so no
    // subtraction noise accumulates.
    struct Partial {
        std::vector<double> q;
        std::vector<double> phb;
        double dist;
    };
    std::vector<Partial> stack(c.a_n + 1);
    for (auto& p : stack) {
        p.q.assign(c.m, 0.0);
        p.phb.assign(c.h_n * c.m, 0.0);
        p.dist = 0.0;
    }

    double best_leak = std::numeric_limits<double>::infinity();
    double best_relaxed = std::numeric_limits<double>::infinity();
    std::vector<std::vector<std::size_t>> cand;  // row indices of near-optimal channels
    std::vector<std::size_t> choice(c.a_n, 0);
    std::size_t scanned = 0;

    std::function<void(std::size_t)> scan = [&](std::size_t a) {
        const Partial& in = stack[a];
        Partial& out = stack[a + 1];
        for (std::size_t ri = 0; ri < rows_grid.size(); ++ri) {
            const auto& row = rows_grid[ri];
            choice[a] = ri;
            out.dist = in.dist;
            for (std::size_t b = 0; b < c.m; ++b) {
                out.q[b] = in.q[b] + c.p_e[a] * row[b];
                out.dist += c.p_e[a] * row[b] * c.dt[a * c.m + b];
            }
            for (std::size_t h = 0; h < c.h_n; ++h) {
                double peh = c.p_eh[a * c.h_n + h];
                for (std::size_t b = 0; b < c.m; ++b) {
                    out.phb[h * c.m + b] = in.phb[h * c.m + b] + peh * row[b];
                }
            }
            if (a + 1 < c.a_n) {
                scan(a + 1);
                continue;
            }
            ++scanned;
            if (out.dist > d_relaxed + 1e-12) continue;
            double leak = leak_from_phb(c, out.phb);
            if (leak < best_relaxed) best_relaxed = leak;
            if (out.dist > d + 1e-12) continue;
            if (leak < best_leak - 2e-12) {
                best_leak = leak;
                cand.clear();
            }
            if (leak <= best_leak + 2e-12 && cand.size() < 4096) {
                cand.push_back(choice);
            }
        }
    };
    scan(0);

    if (!std::isfinite(best_leak)) {
        throw UsageError("grid_oracle: no grid channel satisfies the distortion bound");
    }

    // Lexicographic pick: lowest rate, then smallest channel matrix.
    double best_rate = std::numeric_limits<double>::infinity();
    std::vector<double> best_w;
    std::vector<double> w(c.a_n * c.m);
    for (const auto& ch : cand) {
        for (std::size_t a = 0; a < c.a_n; ++a) {
            for (std::size_t b = 0; b < c.m; ++b) w[a * c.m + b] = rows_grid[ch[a]][b];
        }
        double leak = eval_leak(c, w);
        if (leak > best_leak + lex_slack + 1e-12) continue;
        double rate = eval_rate(c, w);
        if (rate < best_rate - 1e-12 ||
            (rate < best_rate + 1e-12 &&
             (best_w.empty() || std::lexicographical_compare(w.begin(), w.end(),
                                                             best_w.begin(), best_w.end())))) {
            best_rate = rate;
            best_w = w;
        }
    }

    // Entropy-continuity bound on how far the grid optimum can sit from the
    // true one: rounding the true argmin moves the induced joint by at most
    // t_row in variational distance.
    auto phi = [](double t, double alphabet) {
        if (t <= 0.0) return 0.0;
        if (t >= 0.5) return std::log2(alphabet);
        return -t * std::log2(t / alphabet);
    };
    double delta_i = phi(t_row, static_cast<double>(c.m)) +
                     phi(t_row, static_cast<double>(c.h_n * c.m));
    double bound = std::max(0.0, best_leak - best_relaxed) + delta_i + 1e-9;

    return OracleResult{best_leak, best_rate, bound,
                        prob::Channel(c.a_n, c.m, std::move(best_w)), scanned};
}

}  // namespace pcsc::region
