#include "relaylab/rates.hpp"

#include <algorithm>
#include <cmath>

namespace relaylab {

namespace {

using Names = std::vector<std::string>;

double clamp_rate(double r) { return r > 0.0 ? r : 0.0; }

}  // namespace

RateTerms compute_rate_terms(const JointDistribution& eleven) {
    RateTerms t;
    // Current block is [3], previous [2]; x[1] is the transmitter input from
    // two blocks back. Conditioning sets follow the three conditions exactly.
    t.c3 = eleven.conditional_mutual_information({"yh[3]"}, {"y1[3]"}, {"x1[3]", "x[3]"});
    t.c1 = t.c3;  // information part only; the rate unknown is solved for later
    t.c2 = 0.0;
    t.d1 = eleven.conditional_mutual_information({"y[3]"}, {"x[3]", "yh[3]", "x1[3]"},
                                                 {"x[1]", "x1[2]", "y[2]"});
    t.d2 = eleven.conditional_mutual_information({"x[3]"}, {"y[3]", "yh[3]"},
                                                 {"x1[3]", "y[2]", "yh[2]", "x1[2]", "x[1]"});
    t.d3 = eleven.conditional_mutual_information({"y[3]"}, {"yh[3]", "x1[3]"},
                                                 {"x[3]", "x[2]", "x1[2]", "y[2]"});
    return t;
}

RateReport evaluate_new_scheme(const BlockProcess& bp) {
    const RateTerms t = compute_rate_terms(eleven_variable_joint(bp));
    RateReport r;
    r.rate_bound_a = t.d2;
    r.feasibility_gap_b = t.d3 - t.c3;
    r.rate_bound_c = t.d1 - t.c3;
    r.feasible = r.feasibility_gap_b > kStrictSlack;
    r.achievable_rate = r.feasible ? clamp_rate(std::min(r.rate_bound_a, r.rate_bound_c)) : 0.0;
    return r;
}

RateReport evaluate_new_scheme(const RelayChannel& ch, const NewSchemeParams& p) {
    return evaluate_new_scheme(make_block_process(ch, p, /*probe_uniqueness=*/false));
}

CafParams make_caf_params(const RelayChannel& ch, int yhat_size, std::vector<double> input_law,
                          std::vector<double> relay_law, std::vector<double> compressor) {
    if (yhat_size < 1) throw ValidationError("yhat alphabet size must be >= 1");
    Alphabet yh{"yh", yhat_size};
    CafParams p{yh, std::move(input_law), std::move(relay_law),
                ConditionalKernel({{"y1", ch.y1_alpha}, {"x1", ch.x1_alpha}}, {{"yh", yh}}, std::move(compressor))};
    check_caf_params_match(ch, p);
    return p;
}

void check_caf_params_match(const RelayChannel& ch, const CafParams& p) {
    auto check_law = [](const std::vector<double>& law, int size, const char* what) {
        if (static_cast<int>(law.size()) != size) throw ShapeError(std::string(what) + " has wrong length");
        double s = 0.0;
        for (double v : law) {
            if (v < 0.0 || !std::isfinite(v)) throw ValidationError(std::string(what) + " has a negative entry");
            s += v;
        }
        if (std::fabs(s - 1.0) > kNormTol) throw ValidationError(std::string(what) + " is not normalized");
    };
    check_law(p.input_law, ch.x_alpha.size, "input_law");
    check_law(p.relay_law, ch.x1_alpha.size, "relay_law");
    if (p.compressor.given().size() != 2 || p.compressor.out().size() != 1 ||
        p.compressor.given()[0].alpha.size != ch.y1_alpha.size ||
        p.compressor.given()[1].alpha.size != ch.x1_alpha.size ||
        p.compressor.out()[0].alpha.size != p.yhat.size)
        throw ShapeError("compressor alphabets do not match");
}

JointDistribution caf_joint(const RelayChannel& ch, const CafParams& p) {
    check_caf_params_match(ch, p);
    const JointDistribution roots = product_joint(vector_joint({"x", ch.x_alpha}, p.input_law),
                                                  vector_joint({"x1", ch.x1_alpha}, p.relay_law));
    return compose({ch.kernel, p.compressor}, roots);
}

const char* caf_form_name(CafForm f) {
    switch (f) {
        case CafForm::theorem2: return "theorem2";
        case CafForm::form1: return "form1";
        case CafForm::form2: return "form2";
        case CafForm::form3: return "form3";
        case CafForm::compact: return "compact";
    }
    return "?";
}

CafForm parse_caf_form(const std::string& name) {
    for (CafForm f : {CafForm::theorem2, CafForm::form1, CafForm::form2, CafForm::form3, CafForm::compact}) {
        if (name == caf_form_name(f)) return f;
    }
    throw ArgumentError("unknown CAF form: " + name);
}

CafTerms compute_caf_terms(const JointDistribution& j) {
    auto mi = [&](const Names& a, const Names& b, const Names& c) {
        return j.conditional_mutual_information(a, b, c);
    };
    CafTerms t;
    t.t2_bound = mi({"x"}, {"y", "yh"}, {"x1"});
    t.t2_strict = mi({"x1"}, {"y"}, {}) - mi({"y1"}, {"yh"}, {"x1", "y"});
    const double i_x_yh_given_x1 = mi({"x"}, {"yh"}, {"x1"});
    t.chain_bound1 = i_x_yh_given_x1 + mi({"x"}, {"y"}, {"yh", "x1"});
    t.chain_bound2 = i_x_yh_given_x1 - mi({"y1"}, {"yh"}, {"x1"}) + mi({"x", "yh"}, {"y"}, {"x1"}) +
                     mi({"x1"}, {"y"}, {});
    t.form1_strict = mi({"yh"}, {"y"}, {"x1"}) + mi({"x1"}, {"y"}, {}) - mi({"y1"}, {"yh"}, {"x1"});
    t.form3_strict = mi({"yh"}, {"y"}, {"x1", "x"}) + mi({"x1"}, {"y"}, {"x"}) - mi({"yh"}, {"y1"}, {"x1", "x"});
    t.compact_bound1 = mi({"x"}, {"y", "yh"}, {"x1"});
    t.compact_strict = mi({"yh", "x1"}, {"y"}, {"x"}) - mi({"yh"}, {"y1"}, {"x1", "x"});
    t.compact_bound2 = mi({"x", "yh", "x1"}, {"y"}, {}) - mi({"y1"}, {"yh"}, {"x1", "x"});
    return t;
}

CafReport report_for_form(const CafTerms& t, CafForm form) {
    CafReport r;
    r.form = form;
    double bound = 0.0;
    bool strict_ok = true;
    switch (form) {
        case CafForm::theorem2:
            bound = t.t2_bound;
            strict_ok = t.t2_strict > kStrictSlack;
            r.condition_gaps = {{"rate_bound", 0.0}, {"strict", t.t2_strict}};
            break;
        case CafForm::form1:
            bound = t.chain_bound1;
            strict_ok = t.form1_strict > kStrictSlack;
            r.condition_gaps = {{"rate_bound", 0.0}, {"strict", t.form1_strict}};
            break;
        case CafForm::form2:
            bound = std::min(t.chain_bound1, t.chain_bound2);
            r.condition_gaps = {{"rate_bound_1", 0.0}, {"rate_bound_2", 0.0}};
            break;
        case CafForm::form3:
            bound = std::min(t.chain_bound1, t.chain_bound2);
            strict_ok = t.form3_strict > kStrictSlack;
            r.condition_gaps = {{"rate_bound_1", 0.0}, {"strict", t.form3_strict}, {"rate_bound_2", 0.0}};
            break;
        case CafForm::compact:
            bound = std::min(t.compact_bound1, t.compact_bound2);
            strict_ok = t.compact_strict > kStrictSlack;
            r.condition_gaps = {{"rate_bound_1", 0.0}, {"strict", t.compact_strict}, {"rate_bound_2", 0.0}};
            break;
    }
    r.feasible = strict_ok;
    r.achievable_rate = strict_ok ? clamp_rate(bound) : 0.0;
    // Rate-bound slacks at the reported rate.
    for (auto& [id, slack] : r.condition_gaps) {
        if (id == "rate_bound" || id == "rate_bound_1")
            slack = (form == CafForm::compact ? t.compact_bound1
                     : form == CafForm::theorem2 ? t.t2_bound
                                                 : t.chain_bound1) -
                    r.achievable_rate;
        else if (id == "rate_bound_2")
            slack = (form == CafForm::compact ? t.compact_bound2 : t.chain_bound2) - r.achievable_rate;
    }
    return r;
}

CafReport evaluate_caf(const RelayChannel& ch, const CafParams& p, CafForm form) {
    return report_for_form(compute_caf_terms(caf_joint(ch, p)), form);
}

NewSchemeParams lift_caf_params(const RelayChannel& ch, const CafParams& p) {
    const int nx = ch.x_alpha.size, nx1 = ch.x1_alpha.size, nyh = p.yhat.size;
    std::vector<double> chain;
    chain.reserve(static_cast<size_t>(nx) * nx);
    for (int r = 0; r < nx; ++r) chain.insert(chain.end(), p.input_law.begin(), p.input_law.end());
    std::vector<double> relay;
    relay.reserve(static_cast<size_t>(nyh) * nx1);
    for (int r = 0; r < nyh; ++r) relay.insert(relay.end(), p.relay_law.begin(), p.relay_law.end());
    std::vector<double> comp(p.compressor.probs().begin(), p.compressor.probs().end());
    return make_new_scheme_params(ch, nyh, std::move(chain), std::move(relay), std::move(comp));
}

DegenerationResult check_degeneration(const RelayChannel& ch, const CafParams& p) {
    DegenerationResult res;
    const NewSchemeParams lifted = lift_caf_params(ch, p);
    res.new_report = evaluate_new_scheme(ch, lifted);
    const CafTerms t = compute_caf_terms(caf_joint(ch, p));
    res.caf_report = report_for_form(t, CafForm::compact);
    const double ga = std::fabs(res.new_report.rate_bound_a - t.compact_bound1);
    const double gb = std::fabs(res.new_report.feasibility_gap_b - t.compact_strict);
    const double gc = std::fabs(res.new_report.rate_bound_c - t.compact_bound2);
    res.max_abs_gap = std::max({ga, gb, gc});
    return res;
}

namespace {

// State-variable indices inside a block.
enum : int { vX = 0, vYH = 1, vX1 = 2, vY = 3, vY1 = 4 };

struct VarRef {
    int block;  // original block number (s0-based window applied later)
    int var;
};

Names window_names(const std::vector<VarRef>& refs, int s0) {
    Names out;
    out.reserve(refs.size());
    for (const auto& r : refs) {
        out.push_back(std::string(kStateVarNames[static_cast<size_t>(r.var)]) + "[" +
                      std::to_string(r.block - s0 + 1) + "]");
    }
    return out;
}

void add_range(std::vector<VarRef>& refs, int var, int from, int to) {
    for (int b = from; b <= to; ++b) refs.push_back({b, var});
}

}  // namespace

std::vector<AppendixBRow> verify_appendix_b_bounds(const RelayChannel& ch, const NewSchemeParams& p, int B) {
    if (B != 3 && B != 4) throw SizeError("exact multi-block verification supports B in {3, 4}");
    const BlockProcess bp = make_block_process(ch, p, /*probe_uniqueness=*/false);
    const RateTerms t = compute_rate_terms(eleven_variable_joint(bp));

    std::vector<AppendixBRow> rows;
    for (int j = 1; j <= B - 1; ++j) {
        for (int k = 1; k <= B - 1; ++k) {
            std::vector<VarRef> left, right, cond;
            double rhs = 0.0;
            if (j == k) {
                add_range(left, vX, j, B - 1);
                add_range(left, vYH, j, B - 1);
                add_range(left, vX1, j + 1, B);
                add_range(right, vY, j, B);
                right.push_back({B, vYH});
                right.push_back({B, vX});
                cond.push_back({j - 1, vX});
                cond.push_back({j, vX1});
                rhs = (B - j) * t.d1;
            } else if (j < k) {
                add_range(left, vX, j, B - 1);
                add_range(left, vYH, k, B - 1);
                add_range(left, vX1, k + 1, B);
                add_range(right, vY, j, B);
                right.push_back({B, vYH});
                right.push_back({B, vX});
                add_range(right, vYH, j, k - 1);
                add_range(right, vX1, j + 1, k);
                cond.push_back({j - 1, vX});
                cond.push_back({j, vX1});
                rhs = (k - j) * t.d2 + (B - k) * t.d1;
            } else {  // j > k
                add_range(left, vX, j, B - 1);
                add_range(left, vYH, k, B - 1);
                add_range(left, vX1, k + 1, B);
                add_range(right, vY, k, B);
                right.push_back({B, vYH});
                right.push_back({B, vX});
                add_range(cond, vX, k, j - 1);
                cond.push_back({k, vX1});
                rhs = (j - k) * t.d3 + (B - j) * t.d1;
            }

            const int s0 = std::min({left.front().block, right.front().block, cond.front().block,
                                     j <= k ? j - 1 : k});
            const int W = B - s0 + 1;
            std::vector<std::vector<int>> needed(static_cast<size_t>(W));
            for (const auto* group : {&left, &right, &cond}) {
                for (const auto& r : *group) needed[static_cast<size_t>(r.block - s0)].push_back(r.var);
            }
            const JointDistribution joint = window_joint(bp, needed);
            const double lhs = joint.conditional_mutual_information(window_names(left, s0),
                                                                    window_names(right, s0),
                                                                    window_names(cond, s0));
            rows.push_back({j, k, lhs, rhs, lhs - rhs});
        }
    }
    return rows;
}

namespace {

CafParams with_eroded_compressor(const RelayChannel& ch, const CafParams& p, double lambda) {
    const auto src = p.compressor.probs();
    const int nyh = p.yhat.size;
    std::vector<double> comp(src.begin(), src.end());
    const size_t rows = comp.size() / static_cast<size_t>(nyh);
    for (size_t r = 0; r < rows; ++r) {
        double* row = comp.data() + r * static_cast<size_t>(nyh);
        for (int o = 0; o < nyh; ++o) row[o] *= lambda;
        row[0] += 1.0 - lambda;
    }
    return make_caf_params(ch, nyh, p.input_law, p.relay_law, std::move(comp));
}

}  // namespace

RepairResult repair_auxiliary(const RelayChannel& ch, const CafParams& p, double rate) {
    if (rate < 0.0 || !std::isfinite(rate)) throw ArgumentError("repair rate must be a nonnegative real");
    const JointDistribution j = caf_joint(ch, p);
    const CafTerms t = compute_caf_terms(j);
    if (rate > std::min(t.chain_bound1, t.chain_bound2) + 1e-9)
        throw ArgumentError("rate does not satisfy the two-bound form under the given parameters");

    // Already strictly feasible for the two-condition form: nothing to do.
    if (rate <= t.chain_bound1 + kStrictSlack && t.form1_strict > kStrictSlack)
        return {p, 1.0, "unchanged"};

    const double direct = j.conditional_mutual_information({"x"}, {"y"}, {"x1"});
    if (rate <= direct + kStrictSlack) {
        // Constant compressed view: strictly less informative than needed is
        // fine, the direct link already carries the rate.
        return {with_eroded_compressor(ch, p, 0.0), 0.0, "independent"};
    }

    // bound1(lambda) grows monotonically from I(X;Y|X1) at 0 to bound1(p) at
    // 1; bisect for the smallest lambda whose bound reaches the rate, which
    // also maximizes the strict slack.
    auto bound1_at = [&](double lambda) {
        return compute_caf_terms(caf_joint(ch, with_eroded_compressor(ch, p, lambda))).chain_bound1;
    };
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 30; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (bound1_at(mid) >= rate)
            hi = mid;
        else
            lo = mid;
    }
    CafParams repaired = with_eroded_compressor(ch, p, hi);
    const CafTerms rt = compute_caf_terms(caf_joint(ch, repaired));
    if (rt.form1_strict <= kStrictSlack || rt.chain_bound1 < rate - 1e-9)
        throw RepairError("bisection could not reach a strictly feasible point (numerical tightness)");
    return {std::move(repaired), hi, "bisection"};
}

}  // namespace relaylab
