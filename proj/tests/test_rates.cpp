#include <doctest.h>

#include <cmath>

#include "relaylab/rates.hpp"
#include "test_util.hpp"

using namespace relaylab;
namespace tu = relaylab::testutil;

namespace {

// Receiver hears nothing: p(y=0) = 1; relay sees x through a flip.
RelayChannel deaf_receiver_channel() {
    std::vector<double> probs(16, 0.0);
    for (int x = 0; x < 2; ++x)
        for (int x1 = 0; x1 < 2; ++x1)
            for (int y1 = 0; y1 < 2; ++y1)
                probs[((static_cast<size_t>(x) * 2 + x1) * 2 + 0) * 2 + y1] = (y1 == x) ? 0.8 : 0.2;
    return make_relay_channel(2, 2, 2, 2, std::move(probs));
}

// Relay hears nothing: y1 constant; y = x xor x1 through a flip.
RelayChannel deaf_relay_channel() {
    std::vector<double> probs(16, 0.0);
    for (int x = 0; x < 2; ++x)
        for (int x1 = 0; x1 < 2; ++x1)
            for (int y = 0; y < 2; ++y) {
                const double py = (y == (x ^ x1)) ? 0.9 : 0.1;
                probs[((static_cast<size_t>(x) * 2 + x1) * 2 + y) * 2 + 0] = py;
            }
    return make_relay_channel(2, 2, 2, 2, std::move(probs));
}

CafParams const_compressor_caf(const RelayChannel& ch, std::vector<double> px, std::vector<double> px1) {
    std::vector<double> comp;
    for (int r = 0; r < ch.y1_alpha.size * ch.x1_alpha.size; ++r) {
        comp.push_back(1.0);
        comp.push_back(0.0);
    }
    return make_caf_params(ch, 2, std::move(px), std::move(px1), std::move(comp));
}

}  // namespace

TEST_SUITE("rates") {

TEST_CASE("rate terms collapse to single-block quantities under block-independent params") {
    Rng rng(21);
    for (int t = 0; t < 5; ++t) {
        const RelayChannel ch = tu::random_binary_channel(rng);
        const CafParams cp = tu::random_caf_params(ch, rng);
        const JointDistribution j = caf_joint(ch, cp);

        const auto bp = make_block_process(ch, lift_caf_params(ch, cp), false);
        const RateTerms terms = compute_rate_terms(eleven_variable_joint(bp));

        CHECK(terms.d1 ==
              doctest::Approx(j.conditional_mutual_information({"y"}, {"x", "yh", "x1"}, {})).epsilon(1e-10));
        CHECK(terms.d2 ==
              doctest::Approx(j.conditional_mutual_information({"x"}, {"y", "yh"}, {"x1"})).epsilon(1e-10));
        CHECK(terms.d3 ==
              doctest::Approx(j.conditional_mutual_information({"y"}, {"yh", "x1"}, {"x"})).epsilon(1e-10));
        CHECK(terms.c3 ==
              doctest::Approx(j.conditional_mutual_information({"yh"}, {"y1"}, {"x1", "x"})).epsilon(1e-10));
        CHECK(terms.c1 == terms.c2 + terms.c3);
    }
}

TEST_CASE("constant compressed view zeroes c3; constant receiver output zeroes d1 and d3") {
    Rng rng(22);
    const RelayChannel ch = tu::random_binary_channel(rng);
    const auto bp = make_block_process(ch, tu::uniform_const_params(ch), false);
    const RateTerms t = compute_rate_terms(eleven_variable_joint(bp));
    CHECK(std::fabs(t.c3) <= 1e-12);

    const RelayChannel deaf = deaf_receiver_channel();
    const auto bp2 = make_block_process(deaf, tu::random_new_params(deaf, rng), false);
    const RateTerms t2 = compute_rate_terms(eleven_variable_joint(bp2));
    CHECK(std::fabs(t2.d1) <= 1e-10);
    CHECK(std::fabs(t2.d3) <= 1e-10);
    CHECK(t2.d2 >= -1e-12);
}

TEST_CASE("new scheme: deaf relay stays feasible, deaf receiver reports zero") {
    const RelayChannel relay_deaf = deaf_relay_channel();
    // Skewed input chain so x carries information; constant compressed view.
    auto p = make_new_scheme_params(relay_deaf, 2, {0.8, 0.2, 0.2, 0.8}, {0.5, 0.5, 0.5, 0.5},
                                    {1, 0, 1, 0, 1, 0, 1, 0});
    const RateReport r = evaluate_new_scheme(relay_deaf, p);
    CHECK(r.feasible);
    CHECK(r.achievable_rate ==
          doctest::Approx(std::max(0.0, std::min(r.rate_bound_a, r.rate_bound_c))).epsilon(1e-12));
    CHECK(r.achievable_rate > 0.0);

    Rng rng(23);
    const RelayChannel rx_deaf = deaf_receiver_channel();
    const RateReport r2 = evaluate_new_scheme(rx_deaf, tu::random_new_params(rx_deaf, rng));
    CHECK_FALSE(r2.feasible);
    CHECK(r2.achievable_rate == 0.0);
}

TEST_CASE("degeneration: lifted parameters reproduce the compact conditions exactly") {
    Rng rng(24);
    double worst = 0;
    for (int t = 0; t < 10; ++t) {
        const RelayChannel ch = tu::random_binary_channel(rng);
        const CafParams p = tu::random_caf_params(ch, rng);
        const DegenerationResult res = check_degeneration(ch, p);
        worst = std::max(worst, res.max_abs_gap);
        CHECK(res.new_report.feasible == res.caf_report.feasible);
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("degeneration: constant compressed view reduces both sides to the direct link") {
    Rng rng(25);
    const RelayChannel ch = tu::random_binary_channel(rng);
    const CafParams p = const_compressor_caf(ch, rng.dirichlet_row(2), rng.dirichlet_row(2));
    const DegenerationResult res = check_degeneration(ch, p);
    CHECK(res.max_abs_gap <= 1e-9);
    const double direct = caf_joint(ch, p).conditional_mutual_information({"x"}, {"y"}, {"x1"});
    if (res.caf_report.feasible) {
        CHECK(res.caf_report.achievable_rate == doctest::Approx(direct).epsilon(1e-9));
        CHECK(res.new_report.achievable_rate == doctest::Approx(direct).epsilon(1e-9));
    }
}

TEST_CASE("caf: constant compressed view gives the direct-transmission rate") {
    // Skewed input so the relay input is informative about y.
    const RelayChannel ch = [] {
        std::vector<double> probs(16, 0.0);
        for (int x = 0; x < 2; ++x)
            for (int x1 = 0; x1 < 2; ++x1)
                for (int y = 0; y < 2; ++y) {
                    const double py = (y == (x ^ x1)) ? 0.95 : 0.05;
                    probs[((static_cast<size_t>(x) * 2 + x1) * 2 + y) * 2 + 0] = py;
                }
        return make_relay_channel(2, 2, 2, 2, std::move(probs));
    }();
    const CafParams p = const_compressor_caf(ch, {0.8, 0.2}, {0.5, 0.5});
    const JointDistribution j = caf_joint(ch, p);
    const double i_x1_y = j.conditional_mutual_information({"x1"}, {"y"}, {});
    REQUIRE(i_x1_y > 1e-6);
    const CafReport r = evaluate_caf(ch, p, CafForm::theorem2);
    CHECK(r.feasible);
    CHECK(r.achievable_rate ==
          doctest::Approx(j.conditional_mutual_information({"x"}, {"y"}, {"x1"})).epsilon(1e-10));
}

TEST_CASE("caf: perfect channel sits on the strictness boundary; only the two-bound form reports ln 2") {
    // y = y1 = x: every strict feasibility condition holds with equality.
    std::vector<double> probs(16, 0.0);
    for (int x = 0; x < 2; ++x)
        for (int x1 = 0; x1 < 2; ++x1)
            probs[((static_cast<size_t>(x) * 2 + x1) * 2 + x) * 2 + x] = 1.0;
    const RelayChannel ch = make_relay_channel(2, 2, 2, 2, std::move(probs));
    const CafParams p = const_compressor_caf(ch, {0.5, 0.5}, {0.5, 0.5});
    const CafTerms t = compute_caf_terms(caf_joint(ch, p));
    CHECK(std::fabs(t.t2_strict) <= 1e-12);
    CHECK_FALSE(report_for_form(t, CafForm::theorem2).feasible);
    CHECK_FALSE(report_for_form(t, CafForm::compact).feasible);
    const CafReport f2 = report_for_form(t, CafForm::form2);
    CHECK(f2.feasible);
    CHECK(f2.achievable_rate == doctest::Approx(std::log(2.0)).epsilon(1e-10));
}

TEST_CASE("property: pairwise form identities and containments") {
    Rng rng(26);
    for (int t = 0; t < 100; ++t) {
        const RelayChannel ch = tu::random_binary_channel(rng);
        const CafParams p = tu::random_caf_params(ch, rng);
        const CafTerms terms = compute_caf_terms(caf_joint(ch, p));
        const auto t2 = report_for_form(terms, CafForm::theorem2);
        const auto f1 = report_for_form(terms, CafForm::form1);
        const auto f2 = report_for_form(terms, CafForm::form2);
        const auto f3 = report_for_form(terms, CafForm::form3);
        const auto co = report_for_form(terms, CafForm::compact);
        // Same conditions rearranged, computed along different routes.
        CHECK(std::fabs(t2.achievable_rate - f1.achievable_rate) <= 1e-9);
        CHECK(std::fabs(f3.achievable_rate - co.achievable_rate) <= 1e-9);
        // Dropping conditions can only widen the region.
        CHECK(f2.achievable_rate >= f1.achievable_rate - 1e-12);
        CHECK(f2.achievable_rate >= f3.achievable_rate - 1e-12);
    }
}

TEST_CASE("appendix bounds: exact multi-block values dominate the three-block bound") {
    Rng rng(27);
    double min_res = 1e300;
    for (int t = 0; t < 3; ++t) {
        const RelayChannel ch = tu::random_binary_channel(rng);
        const auto rows = verify_appendix_b_bounds(ch, tu::random_new_params(ch, rng), 3);
        CHECK(rows.size() == 4);
        for (const auto& row : rows) min_res = std::min(min_res, row.residual);
    }
    CHECK(min_res >= -1e-9);

    const RelayChannel ch = tu::noiseless_pipe_channel();
    CHECK_THROWS_AS((void)verify_appendix_b_bounds(ch, tu::uniform_const_params(ch), 5), SizeError);
}

TEST_CASE("appendix bounds: degenerate processes make every quantity vanish") {
    // Receiver deaf and compressed view constant: all sides are zero.
    const RelayChannel ch = deaf_receiver_channel();
    const auto rows = verify_appendix_b_bounds(ch, tu::uniform_const_params(ch), 3);
    for (const auto& row : rows) {
        CHECK(std::fabs(row.lhs_exact) <= 1e-9);
        CHECK(std::fabs(row.rhs_lower_bound) <= 1e-9);
    }
}

TEST_CASE("appendix bounds: revealing output with a constant view is tight on the diagonal") {
    // y reveals (x,x1) and the compressed view carries nothing, so the merge
    // step of the diagonal bound drops an exactly-zero term.
    const RelayChannel ch = tu::noiseless_pipe_channel();
    const auto rows = verify_appendix_b_bounds(ch, tu::uniform_const_params(ch), 3);
    for (const auto& row : rows) {
        if (row.j == row.k) CHECK(std::fabs(row.residual) <= 1e-9);
        CHECK(row.residual >= -1e-9);
    }
}

TEST_CASE("repair: no-op branch returns the parameters unchanged") {
    Rng rng(28);
    for (int t = 0; t < 50; ++t) {
        const RelayChannel ch = tu::random_binary_channel(rng);
        const CafParams p = tu::random_caf_params(ch, rng);
        const CafTerms terms = compute_caf_terms(caf_joint(ch, p));
        const auto f1 = report_for_form(terms, CafForm::form1);
        if (!f1.feasible || f1.achievable_rate <= 1e-6) continue;
        const RepairResult rr = repair_auxiliary(ch, p, f1.achievable_rate * 0.9);
        CHECK(rr.branch == "unchanged");
        for (size_t i = 0; i < p.compressor.probs().size(); ++i)
            CHECK(rr.params.compressor.probs()[i] == p.compressor.probs()[i]);
    }
}

TEST_CASE("repair: independent branch yields a constant view with zero leakage") {
    Rng rng(29);
    int exercised = 0;
    for (int t = 0; t < 500 && exercised < 10; ++t) {
        const RelayChannel ch = tu::random_binary_channel(rng);
        const CafParams p = tu::random_caf_params(ch, rng);
        const CafTerms terms = compute_caf_terms(caf_joint(ch, p));
        const auto f2 = report_for_form(terms, CafForm::form2);
        if (terms.form1_strict > kStrictSlack) continue;  // need the strict condition to fail
        if (f2.achievable_rate <= 1e-6) continue;
        const JointDistribution j = caf_joint(ch, p);
        const double direct = j.conditional_mutual_information({"x"}, {"y"}, {"x1"});
        if (f2.achievable_rate > direct) continue;  // that's the bisection branch
        const RepairResult rr = repair_auxiliary(ch, p, f2.achievable_rate);
        CHECK(rr.branch == "independent");
        for (size_t r = 0; r < rr.params.compressor.rows(); ++r) {
            CHECK(rr.params.compressor.row(r)[0] == doctest::Approx(1.0));
        }
        const double leak = caf_joint(ch, rr.params).conditional_mutual_information({"y1"}, {"yh"}, {"x1"});
        CHECK(std::fabs(leak) <= 1e-12);
        ++exercised;
    }
    CHECK(exercised == 10);
}

TEST_CASE("repair: bisection branch restores strict feasibility at the requested rate") {
    Rng rng(30);
    int exercised = 0;
    for (int t = 0; t < 20000 && exercised < 3; ++t) {
        const RelayChannel ch = tu::random_binary_channel(rng);
        const CafParams p = tu::random_caf_params(ch, rng);
        const CafTerms terms = compute_caf_terms(caf_joint(ch, p));
        const auto f2 = report_for_form(terms, CafForm::form2);
        if (terms.form1_strict > kStrictSlack || f2.achievable_rate <= 1e-6) continue;
        const double direct =
            caf_joint(ch, p).conditional_mutual_information({"x"}, {"y"}, {"x1"});
        if (f2.achievable_rate <= direct + 1e-6) continue;
        const RepairResult rr = repair_auxiliary(ch, p, f2.achievable_rate);
        CHECK(rr.branch == "bisection");
        CHECK(rr.lambda < 1.0);
        const CafReport f1r = evaluate_caf(ch, rr.params, CafForm::form1);
        CHECK(f1r.feasible);
        CHECK(f1r.achievable_rate >= f2.achievable_rate - 1e-6);
        ++exercised;
    }
    CHECK(exercised == 3);
}

TEST_CASE("repair: argument guards") {
    Rng rng(33);
    const RelayChannel ch = tu::random_binary_channel(rng);
    const CafParams p = tu::random_caf_params(ch, rng);
    CHECK_THROWS_AS((void)repair_auxiliary(ch, p, -0.5), ArgumentError);
    CHECK_THROWS_AS((void)repair_auxiliary(ch, p, 100.0), ArgumentError);
    CHECK_THROWS_AS((void)parse_caf_form("nonsense"), ArgumentError);
}



TEST_CASE("degeneration on the revealing pipe: both sides give one bit") {
    const RelayChannel ch = tu::noiseless_pipe_channel();
    const CafParams p = const_compressor_caf(ch, {0.5, 0.5}, {0.5, 0.5});
    const DegenerationResult res = check_degeneration(ch, p);
    CHECK(res.max_abs_gap <= 1e-9);
    CHECK(res.caf_report.feasible);
    CHECK(res.caf_report.achievable_rate == doctest::Approx(std::log(2.0)).epsilon(1e-10));
    CHECK(res.new_report.achievable_rate == doctest::Approx(std::log(2.0)).epsilon(1e-10));
}

TEST_CASE("evaluators handle non-binary alphabets") {
    Rng rng(71);
    std::vector<double> probs;
    for (int s = 0; s < 3 * 2; ++s) {
        auto row = rng.dirichlet_row(3 * 2);
        probs.insert(probs.end(), row.begin(), row.end());
    }
    const RelayChannel ch = make_relay_channel(3, 2, 3, 2, std::move(probs));
    std::vector<double> ic, rm, cp;
    for (int r = 0; r < 3; ++r) {
        auto row = rng.dirichlet_row(3);
        ic.insert(ic.end(), row.begin(), row.end());
    }
    for (int r = 0; r < 3; ++r) {
        auto row = rng.dirichlet_row(2);
        rm.insert(rm.end(), row.begin(), row.end());
    }
    for (int r = 0; r < 2 * 2; ++r) {
        auto row = rng.dirichlet_row(3);
        cp.insert(cp.end(), row.begin(), row.end());
    }
    const NewSchemeParams p = make_new_scheme_params(ch, 3, std::move(ic), std::move(rm), std::move(cp));
    const RateReport r = evaluate_new_scheme(ch, p);
    CHECK(r.rate_bound_a >= -1e-12);
    CHECK(r.achievable_rate >= 0.0);

    std::vector<double> comp;
    for (int q = 0; q < 4; ++q) {
        auto row = rng.dirichlet_row(3);
        comp.insert(comp.end(), row.begin(), row.end());
    }
    const CafParams cafp = make_caf_params(ch, 3, rng.dirichlet_row(3), rng.dirichlet_row(2), std::move(comp));
    CHECK(check_degeneration(ch, cafp).max_abs_gap <= 1e-9);
}

}  // TEST_SUITE
