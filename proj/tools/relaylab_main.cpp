#include <cmath>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "relaylab/io.hpp"
#include "relaylab/optimize.hpp"
#include "relaylab/simulate.hpp"

namespace rl = relaylab;

namespace {

struct CommonOpts {
    std::string units = "nats";
    std::string csv;
    double unit_scale() const { return units == "bits" ? 1.0 / std::log(2.0) : 1.0; }
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--units", opts.units, "Output units (nats|bits)")
        ->check(CLI::IsMember({"nats", "bits"}))
        ->default_val("nats");
    cmd->add_option("--csv", opts.csv, "Append a CSV row to this path");
}

std::string gaps_field(const rl::CafReport& r, double s) {
    std::ostringstream os;
    for (size_t i = 0; i < r.condition_gaps.size(); ++i) {
        if (i) os << ';';
        os << r.condition_gaps[i].first << '=' << rl::format_double(r.condition_gaps[i].second * s);
    }
    return os.str();
}

void emit(rl::JsonValue root) { std::cout << root.dump(2) << "\n"; }

std::vector<rl::ManifestInput> hash_inputs(const std::vector<std::string>& paths) {
    std::vector<rl::ManifestInput> ins;
    for (const auto& p : paths) {
        if (!p.empty()) ins.push_back({p, rl::hash_file(p)});
    }
    return ins;
}

rl::RelayChannel random_binary_channel(rl::Rng& rng) {
    std::vector<double> probs;
    for (int s = 0; s < 4; ++s) {
        auto row = rng.dirichlet_row(4);
        probs.insert(probs.end(), row.begin(), row.end());
    }
    return rl::make_relay_channel(2, 2, 2, 2, std::move(probs));
}

rl::CafParams random_caf_params(const rl::RelayChannel& ch, rl::Rng& rng) {
    std::vector<double> comp;
    for (int r = 0; r < ch.y1_alpha.size * ch.x1_alpha.size; ++r) {
        auto row = rng.dirichlet_row(2);
        comp.insert(comp.end(), row.begin(), row.end());
    }
    return rl::make_caf_params(ch, 2, rng.dirichlet_row(ch.x_alpha.size),
                               rng.dirichlet_row(ch.x1_alpha.size), std::move(comp));
}

rl::NewSchemeParams random_new_params(const rl::RelayChannel& ch, rl::Rng& rng) {
    std::vector<double> ic, rm, cp;
    for (int r = 0; r < ch.x_alpha.size; ++r) {
        auto row = rng.dirichlet_row(ch.x_alpha.size);
        ic.insert(ic.end(), row.begin(), row.end());
    }
    for (int r = 0; r < 2; ++r) {
        auto row = rng.dirichlet_row(ch.x1_alpha.size);
        rm.insert(rm.end(), row.begin(), row.end());
    }
    for (int r = 0; r < ch.y1_alpha.size * ch.x1_alpha.size; ++r) {
        auto row = rng.dirichlet_row(2);
        cp.insert(cp.end(), row.begin(), row.end());
    }
    return rl::make_new_scheme_params(ch, 2, std::move(ic), std::move(rm), std::move(cp));
}

rl::JsonValue rows_json(std::span<const double> v, size_t ncols) {
    rl::JsonValue rows = rl::JsonValue::array();
    for (size_t r = 0; r * ncols < v.size(); ++r) {
        rl::JsonValue row = rl::JsonValue::array();
        for (size_t c = 0; c < ncols; ++c) row.push(v[r * ncols + c]);
        rows.push(std::move(row));
    }
    return rows;
}

rl::JsonValue compressor_json(std::span<const double> v, size_t nx1, size_t nyh) {
    rl::JsonValue planes = rl::JsonValue::array();
    const size_t plane = nx1 * nyh;
    for (size_t y1 = 0; y1 * plane < v.size(); ++y1) {
        rl::JsonValue px = rl::JsonValue::array();
        for (size_t x1 = 0; x1 < nx1; ++x1) {
            rl::JsonValue row = rl::JsonValue::array();
            for (size_t yh = 0; yh < nyh; ++yh) row.push(v[y1 * plane + x1 * nyh + yh]);
            px.push(std::move(row));
        }
        planes.push(std::move(px));
    }
    return planes;
}

rl::JsonValue params_json(const rl::NewSchemeParams& p) {
    rl::JsonValue j = rl::JsonValue::object();
    j.set("yhat_size", p.yhat.size);
    j.set("input_chain", rows_json(p.input_chain.probs(), static_cast<size_t>(p.input_chain.out()[0].alpha.size)));
    j.set("relay_map", rows_json(p.relay_map.probs(), static_cast<size_t>(p.relay_map.out()[0].alpha.size)));
    j.set("compressor", compressor_json(p.compressor.probs(),
                                        static_cast<size_t>(p.compressor.given()[1].alpha.size),
                                        static_cast<size_t>(p.yhat.size)));
    return j;
}

rl::JsonValue params_json_caf(const rl::CafParams& p) {
    rl::JsonValue j = rl::JsonValue::object();
    j.set("yhat_size", p.yhat.size);
    rl::JsonValue il = rl::JsonValue::array();
    for (double v : p.input_law) il.push(v);
    j.set("input_law", std::move(il));
    rl::JsonValue rlw = rl::JsonValue::array();
    for (double v : p.relay_law) rlw.push(v);
    j.set("relay_law", std::move(rlw));
    j.set("compressor", compressor_json(p.compressor.probs(),
                                        static_cast<size_t>(p.compressor.given()[1].alpha.size),
                                        static_cast<size_t>(p.yhat.size)));
    return j;
}

int run_evaluate(const std::string& scheme, const std::string& channel_path, const std::string& params_path,
                 const CommonOpts& opts) {
    const rl::RelayChannel ch = rl::load_channel_file(channel_path);
    const double s = opts.unit_scale();
    rl::JsonValue root = rl::report_envelope("evaluate", opts.units);

    if (scheme == "new") {
        const rl::NewSchemeParams p = rl::load_scheme_params_file(ch, params_path);
        const rl::BlockProcess bp = rl::make_block_process(ch, p);
        const rl::RateReport r = rl::evaluate_new_scheme(bp);
        rl::JsonValue rep = rl::rate_report_json(r, s);
        rep.set("stationary_residual", bp.residual);
        rep.set("non_unique_warning", bp.non_unique_warning);
        root.set("report", std::move(rep));
        if (!opts.csv.empty()) {
            std::ostringstream line;
            line << "new,theorem1," << rl::format_double(r.achievable_rate) << ','
                 << (r.feasible ? "true" : "false") << ",gap_b=" << rl::format_double(r.feasibility_gap_b);
            rl::append_csv_line(opts.csv, "scheme,form,rate_nats,feasible,gaps", line.str());
        }
    } else {
        if (scheme.rfind("caf:", 0) != 0) throw rl::ArgumentError("scheme must be new or caf:<form>");
        const rl::CafForm form = rl::parse_caf_form(scheme.substr(4));
        const rl::CafParams p = rl::load_caf_params_file(ch, params_path);
        const rl::CafReport r = rl::evaluate_caf(ch, p, form);
        root.set("report", rl::caf_report_json(r, s));
        if (!opts.csv.empty()) {
            std::ostringstream line;
            line << "caf," << rl::caf_form_name(r.form) << ',' << rl::format_double(r.achievable_rate) << ','
                 << (r.feasible ? "true" : "false") << ',' << gaps_field(r, 1.0);
            rl::append_csv_line(opts.csv, "scheme,form,rate_nats,feasible,gaps", line.str());
        }
    }
    root.set("manifest", rl::manifest_json("evaluate", hash_inputs({channel_path, params_path}), 0,
                                           opts.csv.empty() ? std::vector<std::string>{}
                                                            : std::vector<std::string>{opts.csv}));
    emit(std::move(root));
    return 0;
}

int run_optimize(const std::string& scheme, const std::string& channel_path, const rl::SearchBudget& budget,
                 bool grid, int yhat_size, const std::string& lifted_path, const CommonOpts& opts) {
    const rl::RelayChannel ch = rl::load_channel_file(channel_path);
    const double s = opts.unit_scale();
    const rl::Scheme sc = scheme == "new" ? rl::Scheme::new_scheme : rl::Scheme::caf;
    std::optional<rl::CafParams> lifted;
    if (!lifted_path.empty()) lifted = rl::load_caf_params_file(ch, lifted_path);

    const rl::SearchResult res = grid ? rl::optimize_grid(ch, sc, budget.grid_points, yhat_size)
                                      : rl::optimize(ch, sc, budget, lifted, yhat_size);

    rl::JsonValue root = rl::report_envelope("optimize", opts.units);
    rl::JsonValue rep = rl::JsonValue::object();
    rep.set("scheme", scheme);
    rep.set("mode", res.mode);
    rep.set("best_rate", res.best_rate * s);
    rl::JsonValue trace = rl::JsonValue::array();
    for (const auto& [r, rrate] : res.trace) {
        rl::JsonValue e = rl::JsonValue::array();
        e.push(r);
        e.push(rrate * s);
        trace.push(std::move(e));
    }
    rep.set("trace", std::move(trace));
    if (sc == rl::Scheme::new_scheme)
        rep.set("best_params", params_json(std::get<rl::NewSchemeParams>(res.best_params)));
    else
        rep.set("best_params", params_json_caf(std::get<rl::CafParams>(res.best_params)));
    root.set("report", std::move(rep));
    root.set("manifest", rl::manifest_json("optimize", hash_inputs({channel_path, lifted_path}), budget.seed,
                                           opts.csv.empty() ? std::vector<std::string>{}
                                                            : std::vector<std::string>{opts.csv}));
    if (!opts.csv.empty()) {
        std::ostringstream line;
        line << scheme << ',' << res.mode << ',' << rl::format_double(res.best_rate) << ',' << budget.restarts
             << ',' << budget.sweeps << ',' << budget.seed;
        rl::append_csv_line(opts.csv, "scheme,mode,best_rate_nats,restarts,sweeps,seed", line.str());
    }
    emit(std::move(root));
    return 0;
}

int run_verify(const std::string& check, const std::string& channel_path, const std::string& params_path,
               int trials, uint64_t seed, int blocks, int grid_points, int channels, const CommonOpts& opts) {
    rl::JsonValue root = rl::report_envelope("verify", opts.units);
    rl::JsonValue rep = rl::JsonValue::object();
    rep.set("check", check);
    bool pass = false;
    std::string metric_name;
    double metric = 0;

    if (check == "degeneration") {
        std::optional<rl::RelayChannel> fixed;
        if (!channel_path.empty()) fixed = rl::load_channel_file(channel_path);
        double worst = 0;
        for (int t = 0; t < trials; ++t) {
            rl::Rng rng(rl::mix_seed(seed, static_cast<uint64_t>(t), 0xD36));
            const rl::RelayChannel ch = fixed ? *fixed : random_binary_channel(rng);
            const rl::CafParams p = random_caf_params(ch, rng);
            worst = std::max(worst, rl::check_degeneration(ch, p).max_abs_gap);
        }
        metric_name = "max_abs_gap";
        metric = worst;
        pass = worst <= 1e-9;
        rep.set("cases", trials);
        rep.set("max_abs_gap", worst);
        rep.set("tolerance", 1e-9);
    } else if (check == "appendix-b") {
        std::optional<rl::RelayChannel> fixed_ch;
        if (!channel_path.empty()) fixed_ch = rl::load_channel_file(channel_path);
        double min_res = 1e300;
        int rows_total = 0;
        rl::JsonValue rows = rl::JsonValue::array();
        const bool single = fixed_ch.has_value() && !params_path.empty();
        const int cases = single ? 1 : trials;
        for (int t = 0; t < cases; ++t) {
            rl::Rng rng(rl::mix_seed(seed, static_cast<uint64_t>(t), 0xAB));
            const rl::RelayChannel ch = fixed_ch ? *fixed_ch : random_binary_channel(rng);
            const rl::NewSchemeParams p =
                single ? rl::load_scheme_params_file(ch, params_path) : random_new_params(ch, rng);
            for (int B : blocks == 0 ? std::vector<int>{3, 4} : std::vector<int>{blocks}) {
                for (const auto& row : rl::verify_appendix_b_bounds(ch, p, B)) {
                    min_res = std::min(min_res, row.residual);
                    ++rows_total;
                    if (single) {
                        rl::JsonValue rj = rl::JsonValue::object();
                        rj.set("B", B);
                        rj.set("j", row.j);
                        rj.set("k", row.k);
                        rj.set("lhs_exact", row.lhs_exact);
                        rj.set("rhs_lower_bound", row.rhs_lower_bound);
                        rj.set("residual", row.residual);
                        rows.push(std::move(rj));
                    }
                }
            }
        }
        metric_name = "min_residual";
        metric = min_res;
        pass = min_res >= -1e-9;
        rep.set("cases", cases);
        rep.set("rows_evaluated", rows_total);
        rep.set("min_residual", min_res);
        rep.set("tolerance", -1e-9);
        if (single) rep.set("rows", std::move(rows));
    } else if (check == "equivalence") {
        std::optional<rl::RelayChannel> fixed;
        if (!channel_path.empty()) fixed = rl::load_channel_file(channel_path);
        const int n_ch = fixed ? 1 : channels;
        double worst_spread = 0, worst_pointwise = 0;
        rl::JsonValue per = rl::JsonValue::array();
        rl::Rng rng(seed);
        for (int c = 0; c < n_ch; ++c) {
            const rl::RelayChannel ch = fixed ? *fixed : random_binary_channel(rng);
            const rl::GridEquivalence g = rl::grid_caf_equivalence(ch, grid_points);
            worst_spread = std::max(worst_spread, g.max_rate_spread_f123c);
            worst_pointwise = std::max(worst_pointwise, g.max_pointwise_form3_compact_gap);
            rl::JsonValue e = rl::JsonValue::object();
            e.set("max_rate_form1", g.max_rate_form1);
            e.set("max_rate_form2", g.max_rate_form2);
            e.set("max_rate_form3", g.max_rate_form3);
            e.set("max_rate_compact", g.max_rate_compact);
            e.set("spread", g.max_rate_spread_f123c);
            e.set("pointwise_form3_compact_gap", g.max_pointwise_form3_compact_gap);
            per.push(std::move(e));
        }
        metric_name = "max_rate_spread";
        metric = worst_spread;
        pass = worst_spread <= 2e-2 && worst_pointwise <= 1e-9;
        rep.set("channels", n_ch);
        rep.set("grid_points", grid_points);
        rep.set("max_rate_spread", worst_spread);
        rep.set("max_pointwise_form3_compact_gap", worst_pointwise);
        rep.set("spread_tolerance", 2e-2);
        rep.set("pointwise_tolerance", 1e-9);
        rep.set("per_channel", std::move(per));
    } else {
        throw rl::ArgumentError("unknown verify check: " + check);
    }

    rep.set("pass", pass);
    root.set("report", std::move(rep));
    root.set("manifest", rl::manifest_json("verify", hash_inputs({channel_path, params_path}), seed,
                                           opts.csv.empty() ? std::vector<std::string>{}
                                                            : std::vector<std::string>{opts.csv}));
    if (!opts.csv.empty()) {
        std::ostringstream line;
        line << check << ',' << trials << ',' << metric_name << ',' << rl::format_double(metric) << ','
             << (pass ? "true" : "false");
        rl::append_csv_line(opts.csv, "check,cases,metric,value,pass", line.str());
    }
    emit(std::move(root));
    return pass ? 0 : 1;
}

int run_simulate(const std::string& channel_path, const std::string& params_path, const rl::SimConfig& cfg,
                 const CommonOpts& opts) {
    const rl::RelayChannel ch = rl::load_channel_file(channel_path);
    const rl::NewSchemeParams p = rl::load_scheme_params_file(ch, params_path);
    const rl::SimResult r = rl::estimate_error_probability(cfg, ch, p);

    rl::JsonValue root = rl::report_envelope("simulate", opts.units);
    rl::JsonValue rep = rl::sim_result_json(r, opts.unit_scale());
    rep.set("n", cfg.n);
    rep.set("blocks", cfg.B);
    rep.set("messages", cfg.M);
    rep.set("quantizers", cfg.L);
    rep.set("delta", cfg.delta);
    root.set("report", std::move(rep));
    root.set("manifest", rl::manifest_json("simulate", hash_inputs({channel_path, params_path}), cfg.seed,
                                           opts.csv.empty() ? std::vector<std::string>{}
                                                            : std::vector<std::string>{opts.csv}));
    if (!opts.csv.empty()) {
        std::ostringstream line;
        line << cfg.n << ',' << cfg.B << ',' << cfg.M << ',' << cfg.L << ',' << rl::format_double(cfg.delta)
             << ',' << cfg.trials << ',' << cfg.seed << ',' << r.error_count << ','
             << rl::format_double(r.p_e_hat) << ',' << rl::format_double(r.wilson_lo) << ','
             << rl::format_double(r.wilson_hi) << ',' << rl::format_double(r.effective_rate);
        rl::append_csv_line(opts.csv,
                            "n,B,M,L,delta,trials,seed,errors,p_e_hat,wilson_lo,wilson_hi,effective_rate_nats",
                            line.str());
    }
    emit(std::move(root));
    return 0;
}

int run_repair(const std::string& channel_path, const std::string& params_path, double rate,
               const CommonOpts& opts) {
    const rl::RelayChannel ch = rl::load_channel_file(channel_path);
    const rl::CafParams p = rl::load_caf_params_file(ch, params_path);
    const rl::RepairResult rr = rl::repair_auxiliary(ch, p, rate / opts.unit_scale());

    rl::JsonValue root = rl::report_envelope("repair", opts.units);
    rl::JsonValue rep = rl::JsonValue::object();
    rep.set("branch", rr.branch);
    rep.set("lambda", rr.lambda);
    rep.set("params", params_json_caf(rr.params));
    const rl::CafReport check = rl::evaluate_caf(ch, rr.params, rl::CafForm::form1);
    rep.set("form1_rate", check.achievable_rate * opts.unit_scale());
    rep.set("form1_feasible", check.feasible);
    root.set("report", std::move(rep));
    root.set("manifest", rl::manifest_json("repair", hash_inputs({channel_path, params_path}), 0, {}));
    emit(std::move(root));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"relaylab: achievable rates and desk-scale simulation for discrete memoryless relay channels"};
    app.require_subcommand(1);

    std::string scheme, channel_path, params_path, check, lifted_path;
    CommonOpts opts;
    rl::SearchBudget budget;
    bool grid = false;
    int yhat_size = 0;
    int trials = 100, blocks = 0, grid_points = 5, channels = 5;
    uint64_t seed = 0;
    rl::SimConfig sim;
    double rate = 0;

    auto* ev = app.add_subcommand("evaluate", "Evaluate a scheme's achievable-rate conditions");
    ev->add_option("--scheme", scheme, "new | caf:<theorem2|form1|form2|form3|compact>")->required();
    ev->add_option("--channel", channel_path, "Channel spec JSON")->required();
    ev->add_option("--params", params_path, "Scheme parameter JSON")->required();
    add_common(ev, opts);

    auto* op = app.add_subcommand("optimize", "Search parameter space for the best rate");
    op->add_option("--scheme", scheme, "new | caf")->check(CLI::IsMember({"new", "caf"}))->required();
    op->add_option("--channel", channel_path, "Channel spec JSON")->required();
    op->add_option("--restarts", budget.restarts, "Random restarts")->default_val(8);
    op->add_option("--sweeps", budget.sweeps, "Coordinate-ascent sweeps per restart")->default_val(20);
    op->add_option("--seed", budget.seed, "Search seed")->default_val(0);
    op->add_flag("--grid", grid, "Exhaustive grid instead of random ascent");
    op->add_option("--grid-points", budget.grid_points, "Grid points per simplex dimension")->default_val(5);
    op->add_option("--yhat-size", yhat_size, "Compressed-view alphabet size (default |Y1|)")->default_val(0);
    op->add_option("--lifted-caf", lifted_path, "CAF params JSON used as an extra start (scheme=new)");
    add_common(op, opts);

    auto* ve = app.add_subcommand("verify", "Run a numerical verification suite");
    ve->add_option("--check", check, "degeneration | appendix-b | equivalence")->required();
    ve->add_option("--channel", channel_path, "Fixed channel (random channels when omitted)");
    ve->add_option("--params", params_path, "Fixed scheme params (appendix-b single-instance mode)");
    ve->add_option("--trials", trials, "Random cases")->default_val(100);
    ve->add_option("--seed", seed, "Base seed")->default_val(0);
    ve->add_option("--blocks", blocks, "appendix-b: B (3 or 4; 0 = both)")->default_val(0);
    ve->add_option("--grid-points", grid_points, "equivalence: grid points per dimension")->default_val(5);
    ve->add_option("--channels", channels, "equivalence: number of random channels")->default_val(5);
    add_common(ve, opts);

    auto* si = app.add_subcommand("simulate", "Monte Carlo simulation of the coding scheme");
    si->add_option("--channel", channel_path, "Channel spec JSON")->required();
    si->add_option("--params", params_path, "New-scheme parameter JSON")->required();
    si->add_option("--n", sim.n, "Block length")->required();
    si->add_option("--blocks", sim.B, "Number of blocks B")->required();
    si->add_option("--messages", sim.M, "Messages per block")->required();
    si->add_option("--quantizers", sim.L, "Quantizer codewords per context")->default_val(1);
    si->add_option("--delta", sim.delta, "Typicality slack")->required();
    si->add_option("--trials", sim.trials, "Monte Carlo trials")->required();
    si->add_option("--seed", sim.seed, "Simulation seed")->default_val(0);
    add_common(si, opts);

    auto* re = app.add_subcommand("repair", "Degrade a CAF compressor until the two-condition form holds");
    re->add_option("--channel", channel_path, "Channel spec JSON")->required();
    re->add_option("--params", params_path, "CAF parameter JSON")->required();
    re->add_option("--rate", rate, "Target rate")->required();
    add_common(re, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        app.exit(e);
        return 2;
    }

    try {
        if (ev->parsed()) return run_evaluate(scheme, channel_path, params_path, opts);
        if (op->parsed()) return run_optimize(scheme, channel_path, budget, grid, yhat_size, lifted_path, opts);
        if (ve->parsed())
            return run_verify(check, channel_path, params_path, trials, seed, blocks, grid_points, channels, opts);
        if (si->parsed()) return run_simulate(channel_path, params_path, sim, opts);
        if (re->parsed()) return run_repair(channel_path, params_path, rate, opts);
    } catch (const rl::ConvergenceError& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    } catch (const rl::ConstructionError& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    } catch (const rl::RepairError& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    } catch (const rl::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
