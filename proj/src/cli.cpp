#include "pcsc/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "pcsc/codec.hpp"
#include "pcsc/errors.hpp"
#include "pcsc/parallel.hpp"
#include "pcsc/typicality.hpp"

namespace pcsc::cli {

using nlohmann::json;

namespace {

std::vector<std::size_t> to_index_list(const json& j, const char* field) {
    if (!j.is_array()) throw UsageError(std::string("config: ") + field + " must be an array");
    std::vector<std::size_t> out;
    for (const auto& v : j) out.push_back(v.get<std::size_t>());
    return out;
}

std::vector<double> to_double_list(const json& j, const char* field) {
    if (!j.is_array()) throw UsageError(std::string("config: ") + field + " must be an array");
    std::vector<double> out;
    for (const auto& v : j) out.push_back(v.get<double>());
    return out;
}

model::SourceModel parse_source(const json& j) {
    if (!j.contains("attributes") || !j.contains("revealed") || !j.contains("hidden") ||
        !j.contains("joint")) {
        throw UsageError("config: source requires attributes, revealed, hidden, joint");
    }
    model::AttributeSchema schema{to_index_list(j.at("attributes"), "source.attributes")};
    model::PartitionSpec part{to_index_list(j.at("revealed"), "source.revealed"),
                              to_index_list(j.at("hidden"), "source.hidden")};
    std::vector<double> flat = to_double_list(j.at("joint"), "source.joint");
    prob::JointPmf joint(schema.sizes, std::move(flat));
    std::size_t recon = j.value("recon_size", std::size_t{0});
    std::vector<double> dist;
    if (j.contains("distortion")) dist = to_double_list(j.at("distortion"), "source.distortion");
    return model::make_source(std::move(schema), std::move(part), std::move(joint), recon,
                              std::move(dist));
}

std::vector<double> parse_grid(const json& j) {
    if (j.is_array()) return to_double_list(j, "d_grid");
    double start = j.at("start").get<double>();
    double stop = j.at("stop").get<double>();
    std::size_t points = j.at("points").get<std::size_t>();
    if (points < 2 || stop < start) throw UsageError("config: bad d_grid range");
    std::vector<double> g(points);
    for (std::size_t i = 0; i < points; ++i) {
        g[i] = start + (stop - start) * static_cast<double>(i) /
                           static_cast<double>(points - 1);
    }
    return g;
}

std::string solver_status(const region::SolveResult& r) {
    if (std::isnan(r.value)) return "infeasible";
    return r.converged ? "ok" : "max-iters";
}

// Cases ordered smallest encoded set first, so subset witnesses lift forward.
std::vector<std::size_t> case_order(const std::vector<model::EncodedSet>& cases) {
    std::vector<std::size_t> order(cases.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return cases[a].encoded.size() < cases[b].encoded.size();
    });
    return order;
}

bool is_subset(const model::EncodedSet& a, const model::EncodedSet& b) {
    for (std::size_t x : a.encoded) {
        if (!std::binary_search(b.encoded.begin(), b.encoded.end(), x)) return false;
    }
    return true;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& ex) {
        throw UsageError(std::string("config: JSON parse failure: ") + ex.what());
    }
    try {
        ExperimentConfig cfg{parse_source(j.at("source")), {}, {}, {}, {}, {}, {}};

        if (!j.contains("cases") || !j.at("cases").is_array() || j.at("cases").empty()) {
            throw UsageError("config: at least one encoded-set case is required");
        }
        for (const auto& cj : j.at("cases")) {
            cfg.case_labels.push_back(cj.at("label").get<std::string>());
            cfg.cases.push_back(
                model::EncodedSet{to_index_list(cj.at("encoded"), "case.encoded")});
        }
        cfg.d_grid = parse_grid(j.at("d_grid"));

        if (j.contains("solver")) {
            const auto& s = j.at("solver");
            cfg.solver.objective_tol = s.value("objective_tol", cfg.solver.objective_tol);
            cfg.solver.max_iters = s.value("max_iters", cfg.solver.max_iters);
            cfg.solver.restarts = s.value("restarts", cfg.solver.restarts);
            cfg.solver.grid_step = s.value("grid_step", cfg.solver.grid_step);
            cfg.solver.lex_slack = s.value("lex_slack", cfg.solver.lex_slack);
            cfg.solver.seed = s.value("seed", cfg.solver.seed);
        }
        if (j.contains("simulation")) {
            const auto& s = j.at("simulation");
            if (s.contains("n_list")) cfg.sim.n_list = to_index_list(s.at("n_list"), "n_list");
            cfg.sim.rate = s.value("rate", cfg.sim.rate);
            cfg.sim.c = s.value("c", cfg.sim.c);
            cfg.sim.tau = s.value("tau", cfg.sim.tau);
            cfg.sim.d_target = s.value("d_target", cfg.sim.d_target);
            cfg.sim.trials = s.value("trials", cfg.sim.trials);
            if (s.contains("channel")) {
                std::vector<double> flat =
                    to_double_list(s.at("channel"), "simulation.channel");
                std::size_t rows = flat.size() / cfg.source.recon_size;
                cfg.sim.channel = prob::Channel(rows, cfg.source.recon_size, std::move(flat));
            }
        }
        if (j.contains("verify")) {
            cfg.verify.convexity_trials =
                j.at("verify").value("convexity_trials", cfg.verify.convexity_trials);
        }

        for (const auto& e : cfg.cases) {
            auto findings = model::validate(cfg.source, e);
            if (!findings.empty()) throw ValidationError("config: " + findings.front());
        }
        return cfg;
    } catch (const json::exception& ex) {
        throw UsageError(std::string("config: ") + ex.what());
    }
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::uint64_t witness_hash(const prob::Channel& w) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto feed = [&h](const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ull;
        }
    };
    std::uint64_t rows = w.rows(), cols = w.cols();
    feed(&rows, sizeof rows);
    feed(&cols, sizeof cols);
    feed(w.probs().data(), w.probs().size() * sizeof(double));
    return h;
}

std::string format_value(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

int run_curve(const ExperimentConfig& cfg, const std::string& kind, std::ostream& out,
              unsigned threads) {
    if (kind != "rd" && kind != "ld") throw UsageError("curve kind must be rd or ld");
    struct Row {
        double value;
        std::uint64_t hash;
        std::string status;
    };
    std::vector<Row> rows(cfg.cases.size() * cfg.d_grid.size());
    bool any_unconverged = false;

    if (kind == "rd") {
        parallel_for(cfg.cases.size(), threads, [&](std::size_t ci) {
            auto pts = region::rd_curve(cfg.source, cfg.cases[ci], cfg.d_grid, cfg.solver);
            for (std::size_t di = 0; di < pts.size(); ++di) {
                rows[ci * cfg.d_grid.size() + di] =
                    Row{pts[di].r, witness_hash(pts[di].witness),
                        std::isnan(pts[di].r) ? "infeasible" : "ok"};
            }
        });
    } else {
        // Leakage curves: one task per grid D; inside, cases run smallest
        // set first so lifted witnesses seed the supersets.
        auto order = case_order(cfg.cases);
        parallel_for(cfg.d_grid.size(), threads, [&](std::size_t di) {
            std::vector<std::pair<model::EncodedSet, prob::Channel>> seen;
            for (std::size_t oi : order) {
                const auto& e = cfg.cases[oi];
                std::vector<prob::Channel> warm;
                for (const auto& [prev_e, prev_w] : seen) {
                    if (is_subset(prev_e, e)) {
                        warm.push_back(
                            model::lift_channel_between(cfg.source, prev_w, prev_e, e));
                    }
                }
                Row row;
                try {
                    auto r = region::min_leakage(cfg.source, e, cfg.d_grid[di], cfg.solver,
                                                 warm);
                    row = Row{r.value, witness_hash(r.witness), solver_status(r)};
                    seen.emplace_back(e, r.witness);
                } catch (const UsageError&) {
                    row = Row{std::numeric_limits<double>::quiet_NaN(), 0, "infeasible"};
                }
                rows[oi * cfg.d_grid.size() + di] = std::move(row);
            }
        });
    }

    out << "case,D,value,status,witness_hash\n";
    char hash_buf[24];
    for (std::size_t ci = 0; ci < cfg.cases.size(); ++ci) {
        for (std::size_t di = 0; di < cfg.d_grid.size(); ++di) {
            const Row& r = rows[ci * cfg.d_grid.size() + di];
            std::snprintf(hash_buf, sizeof hash_buf, "%016llx",
                          static_cast<unsigned long long>(r.hash));
            out << cfg.case_labels[ci] << ',' << format_value(cfg.d_grid[di]) << ','
                << format_value(r.value) << ',' << r.status << ',' << hash_buf << '\n';
            if (r.status == "max-iters") any_unconverged = true;
        }
    }
    return any_unconverged ? 4 : 0;
}

int run_table(const ExperimentConfig& cfg, std::ostream& out, unsigned threads) {
    struct Row {
        double leak, rate;
        std::uint64_t hash;
        std::string status;
    };
    std::vector<Row> rows(cfg.cases.size() * cfg.d_grid.size());
    auto order = case_order(cfg.cases);

    parallel_for(cfg.d_grid.size(), threads, [&](std::size_t di) {
        std::vector<std::pair<model::EncodedSet, prob::Channel>> seen;
        for (std::size_t oi : order) {
            const auto& e = cfg.cases[oi];
            std::vector<prob::Channel> warm;
            for (const auto& [prev_e, prev_w] : seen) {
                if (is_subset(prev_e, e)) {
                    warm.push_back(model::lift_channel_between(cfg.source, prev_w, prev_e, e));
                }
            }
            Row row;
            try {
                auto stage1 =
                    region::min_leakage(cfg.source, e, cfg.d_grid[di], cfg.solver, warm);
                std::vector<prob::Channel> warm2 = warm;
                warm2.insert(warm2.begin(), stage1.witness);
                auto stage2 = region::rate_at_min_leakage(cfg.source, e, cfg.d_grid[di],
                                                          stage1.value, cfg.solver, warm2);
                bool conv = stage1.converged && stage2.converged;
                row = Row{stage1.value, stage2.value, witness_hash(stage2.witness),
                          conv ? "ok" : "max-iters"};
                seen.emplace_back(e, stage1.witness);
            } catch (const UsageError&) {
                double nan = std::numeric_limits<double>::quiet_NaN();
                row = Row{nan, nan, 0, "infeasible"};
            }
            rows[oi * cfg.d_grid.size() + di] = std::move(row);
        }
    });

    out << "case,D,L,R,status,witness_hash\n";
    bool any_unconverged = false;
    char hash_buf[24];
    for (std::size_t ci = 0; ci < cfg.cases.size(); ++ci) {
        for (std::size_t di = 0; di < cfg.d_grid.size(); ++di) {
            const Row& r = rows[ci * cfg.d_grid.size() + di];
            std::snprintf(hash_buf, sizeof hash_buf, "%016llx",
                          static_cast<unsigned long long>(r.hash));
            out << cfg.case_labels[ci] << ',' << format_value(cfg.d_grid[di]) << ','
                << format_value(r.leak) << ',' << format_value(r.rate) << ',' << r.status
                << ',' << hash_buf << '\n';
            if (r.status == "max-iters") any_unconverged = true;
        }
    }
    return any_unconverged ? 4 : 0;
}

int run_simulate(const ExperimentConfig& cfg, std::ostream& out, unsigned threads) {
    (void)threads;
    json report;
    report["cases"] = json::array();
    for (std::size_t ci = 0; ci < cfg.cases.size(); ++ci) {
        const auto& e = cfg.cases[ci];
        prob::Channel w = cfg.sim.channel && cfg.sim.channel->rows() == cfg.source.encoded_cells(e)
                              ? *cfg.sim.channel
                              : region::min_leakage(cfg.source, e, cfg.sim.d_target,
                                                    cfg.solver)
                                    .witness;
        json case_report;
        case_report["label"] = cfg.case_labels[ci];
        case_report["channel_hash"] = witness_hash(w);
        case_report["runs"] = json::array();
        for (std::size_t n : cfg.sim.n_list) {
            double delta = codec::delta_schedule(n, cfg.sim.c);
            auto cb = codec::generate_codebook(cfg.source, e, w, n, cfg.sim.rate, delta,
                                               cfg.solver.seed);
            json run;
            run["n"] = n;
            run["delta"] = delta;
            run["codewords"] = cb.m;
            bool have_exact = true;
            try {
                auto [meas, sets] = codec::measure_exact(cfg.source, e, w, cb);
                run["measures"] = {{"r_n", meas.r_n}, {"u_n", meas.u_n},
                                   {"e_n", meas.e_n}, {"l_n", meas.l_n}};
                if (sets.evaluated) {
                    auto bounds = codec::check_achievability_bounds(cfg.source, e, w, cb,
                                                                    cfg.sim.tau);
                    json checks = json::array();
                    for (const auto& chk : bounds.checks) {
                        checks.push_back({{"name", chk.name}, {"lhs", chk.lhs},
                                          {"rhs", chk.rhs}, {"satisfied", chk.satisfied},
                                          {"exact", chk.exact}});
                    }
                    run["bounds"] = checks;
                    run["exact_identities_hold"] = bounds.exact_all_hold;
                } else {
                    run["bounds"] = "skipped-over-budget";
                }
            } catch (const BudgetError&) {
                have_exact = false;
                run["measures"] = "skipped-over-budget";
                run["bounds"] = "skipped-over-budget";
            }
            if (!have_exact && cfg.sim.trials == 0) {
                throw BudgetError(
                    "simulate: exact measurement over budget and simulation.trials is 0",
                    0, 0);
            }
            if (cfg.sim.trials > 0) {
                auto mc = codec::measure_mc(cfg.source, e, w, cb, cfg.sim.trials,
                                            cfg.solver.seed);
                run["mc"] = {{"u_n", mc.u_n}, {"std_err", mc.u_std_err},
                             {"trials", cfg.sim.trials}};
            }
            case_report["runs"].push_back(std::move(run));
        }
        report["cases"].push_back(std::move(case_report));
    }
    out << report.dump(2) << '\n';
    return 0;
}

int run_verify(const ExperimentConfig& cfg, std::ostream& out, unsigned threads) {
    (void)threads;
    json report;
    bool exact_pass = true;

    // Typicality implication lemmas on small exhaustive alphabets.
    {
        json lem = json::array();
        struct Inst {
            std::vector<double> pxy;
            std::size_t ax, ay, n;
            double delta;
        };
        std::vector<Inst> insts = {
            {{0.4, 0.1, 0.15, 0.35}, 2, 2, 6, 0.1},
            {{0.2, 0.1, 0.15, 0.2, 0.05, 0.3}, 3, 2, 4, 0.15},
        };
        for (const auto& inst : insts) {
            auto rep = mtypes::check_lemma_implications(inst.pxy, inst.ax, inst.ay, inst.n,
                                                        inst.delta);
            lem.push_back({{"ax", inst.ax}, {"ay", inst.ay}, {"n", inst.n},
                           {"delta", inst.delta}, {"pairs", rep.pairs_checked},
                           {"chain_cex", rep.chain_counterexamples},
                           {"project_cex", rep.project_counterexamples},
                           {"exclusion_cex", rep.exclusion_counterexamples},
                           {"pass", rep.all_pass}});
            exact_pass = exact_pass && rep.all_pass;
        }
        report["implication_lemmas"] = std::move(lem);
    }

    // Typical-set probability lower bounds and the cardinality trend.
    {
        std::vector<double> p{0.5, 0.5};
        prob::Channel w(2, 2, {0.9, 0.1, 0.2, 0.8});
        auto pr = mtypes::check_lemma_probability(p, &w, 10, 0.2);
        report["probability_lemma"] = {{"prob", pr.prob}, {"bound", pr.bound},
                                       {"holds", pr.holds},
                                       {"cond_min_prob", pr.cond_min_prob},
                                       {"cond_bound", pr.cond_bound},
                                       {"cond_holds", pr.cond_holds}};
        exact_pass = exact_pass && pr.holds && pr.cond_holds;

        auto card = mtypes::check_lemma_cardinality({0.3, 0.7}, {6, 10, 14}, 1.0);
        json pts = json::array();
        for (const auto& pt : card.points) {
            pts.push_back({{"n", pt.n}, {"delta", pt.delta}, {"count", pt.count},
                           {"eps", pt.eps}});
        }
        report["cardinality_lemma"] = {{"points", std::move(pts)},
                                       {"trending_down", card.trending_down}};

        // log2(n)/sqrt(n) only decays monotonically past n = 8.
        auto sched = mtypes::check_delta_schedule(1.0, {16, 64, 256, 1024, 4096});
        report["delta_schedule"] = {{"delta_to_zero", sched.delta_to_zero},
                                    {"sqrt_n_delta_grows", sched.sqrt_n_delta_grows}};
        exact_pass = exact_pass && sched.delta_to_zero && sched.sqrt_n_delta_grows;
    }

    // Region convexity via random mixture membership.
    {
        auto conv = region::convexity_certificate(cfg.source, cfg.cases.front(),
                                                  cfg.verify.convexity_trials, cfg.solver);
        report["convexity"] = {{"trials", conv.trials.size()},
                               {"all_passed", conv.all_passed}};
        exact_pass = exact_pass && conv.all_passed;
    }

    // Leakage ordering between every subset-ordered case pair.
    {
        json incl = json::array();
        std::vector<double> sub_grid;
        for (std::size_t i = 0; i < cfg.d_grid.size();
             i += std::max<std::size_t>(1, cfg.d_grid.size() / 5)) {
            sub_grid.push_back(cfg.d_grid[i]);
        }
        for (std::size_t i = 0; i < cfg.cases.size(); ++i) {
            for (std::size_t k = 0; k < cfg.cases.size(); ++k) {
                if (i == k || !is_subset(cfg.cases[i], cfg.cases[k])) continue;
                auto rep = region::inclusion_check(cfg.source, cfg.cases[i], cfg.cases[k],
                                                  sub_grid, 1e-6, cfg.solver);
                incl.push_back({{"small", cfg.case_labels[i]}, {"large", cfg.case_labels[k]},
                                {"all_ordered", rep.all_ordered}});
                exact_pass = exact_pass && rep.all_ordered;
            }
        }
        report["inclusion"] = std::move(incl);
    }

    report["pass"] = exact_pass;
    out << report.dump(2) << '\n';
    return 0;
}

}  // namespace pcsc::cli
