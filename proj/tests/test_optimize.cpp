#include <doctest.h>

#include <cmath>

#include "relaylab/optimize.hpp"
#include "test_util.hpp"

using namespace relaylab;
namespace tu = relaylab::testutil;

TEST_SUITE("optimize") {

TEST_CASE("identical budgets reproduce identical results") {
    Rng rng(41);
    const RelayChannel ch = tu::random_binary_channel(rng);
    const SearchBudget budget{3, 6, 5, 99};
    const SearchResult a = optimize(ch, Scheme::caf, budget);
    const SearchResult b = optimize(ch, Scheme::caf, budget);
    CHECK(a.best_rate == b.best_rate);
    REQUIRE(a.trace.size() == b.trace.size());
    for (size_t i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].first == b.trace[i].first);
        CHECK(a.trace[i].second == b.trace[i].second);
    }
    const auto& pa = std::get<CafParams>(a.best_params);
    const auto& pb = std::get<CafParams>(b.best_params);
    for (size_t i = 0; i < pa.input_law.size(); ++i) CHECK(pa.input_law[i] == pb.input_law[i]);
}

TEST_CASE("trace is nondecreasing and the best rate re-evaluates exactly") {
    Rng rng(42);
    const RelayChannel ch = tu::random_binary_channel(rng);
    const SearchBudget budget{4, 8, 5, 7};
    const SearchResult res = optimize(ch, Scheme::new_scheme, budget);
    for (size_t i = 1; i < res.trace.size(); ++i) CHECK(res.trace[i].second >= res.trace[i - 1].second);
    const auto& p = std::get<NewSchemeParams>(res.best_params);
    CHECK(std::fabs(evaluate_new_scheme(ch, p).achievable_rate - res.best_rate) <= 1e-12);
}

TEST_CASE("deaf receiver: both schemes report zero") {
    // p(y = 0) = 1 regardless of inputs.
    std::vector<double> probs(16, 0.0);
    for (int x = 0; x < 2; ++x)
        for (int x1 = 0; x1 < 2; ++x1)
            for (int y1 = 0; y1 < 2; ++y1)
                probs[((static_cast<size_t>(x) * 2 + x1) * 2 + 0) * 2 + y1] = (y1 == x) ? 0.7 : 0.3;
    const RelayChannel ch = make_relay_channel(2, 2, 2, 2, std::move(probs));
    const SearchBudget budget{2, 4, 5, 1};
    CHECK(optimize(ch, Scheme::caf, budget).best_rate == 0.0);
    CHECK(optimize(ch, Scheme::new_scheme, budget).best_rate == 0.0);
}

TEST_CASE("noiseless pipe: the CAF search finds the one-bit direct rate") {
    // y reveals (x, x1), so the strictly feasible compact conditions allow
    // exactly the direct-link bit.
    const RelayChannel ch = tu::noiseless_pipe_channel();
    const SearchBudget budget{2, 6, 5, 3};
    const SearchResult res = optimize(ch, Scheme::caf, budget);
    CHECK(res.best_rate >= std::log(2.0) - 1e-3);
    CHECK(res.best_rate <= std::log(2.0) + 1e-9);
}

TEST_CASE("containment: lifted CAF start keeps the new scheme at or above CAF") {
    Rng rng(43);
    for (int t = 0; t < 3; ++t) {
        const RelayChannel ch = tu::random_binary_channel(rng);
        const SearchBudget budget{2, 5, 5, 17 + static_cast<uint64_t>(t)};
        const SearchResult caf = optimize(ch, Scheme::caf, budget);
        const SearchResult ns =
            optimize(ch, Scheme::new_scheme, budget, std::get<CafParams>(caf.best_params));
        CHECK(ns.best_rate >= caf.best_rate - 1e-9);
    }
}

TEST_CASE("grid mode: guards and exhaustive coverage") {
    Rng rng(44);
    const RelayChannel ch = tu::random_binary_channel(rng);
    CHECK_THROWS_AS((void)optimize_grid(ch, Scheme::caf, 1), ArgumentError);
    CHECK_THROWS_AS((void)optimize_grid(ch, Scheme::caf, 12), ArgumentError);

    const RelayChannel wide = make_relay_channel(3, 2, 2, 2, [] {
        std::vector<double> p;
        Rng r(1);
        for (int s = 0; s < 6; ++s) {
            auto row = r.dirichlet_row(4);
            p.insert(p.end(), row.begin(), row.end());
        }
        return p;
    }());
    CHECK_THROWS_AS((void)optimize_grid(wide, Scheme::caf, 3), SizeError);

    // The grid at 3 points contains the uniform point, so its best cannot be
    // worse than the uniform evaluation.
    const SearchResult g = optimize_grid(ch, Scheme::caf, 3);
    const CafParams uniform = make_caf_params(ch, 2, {0.5, 0.5}, {0.5, 0.5},
                                              {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
    CHECK(g.best_rate >= evaluate_caf(ch, uniform, CafForm::compact).achievable_rate - 1e-12);
    CHECK(g.mode == "grid");
}

TEST_CASE("grid equivalence sweep agrees across forms at coarse resolution") {
    Rng rng(45);
    const RelayChannel ch = tu::random_binary_channel(rng);
    const GridEquivalence g = grid_caf_equivalence(ch, 4);
    CHECK(g.points == 4096);  // 4^6 assignments
    CHECK(g.max_pointwise_form3_compact_gap <= 1e-9);
    CHECK(std::fabs(g.max_rate_theorem2 - g.max_rate_form1) <= 1e-9);
    CHECK(g.max_rate_form2 >= g.max_rate_form1 - 1e-12);
}


TEST_CASE("grid mode covers the block scheme's free rows too") {
    Rng rng(46);
    const RelayChannel ch = tu::random_binary_channel(rng);
    const SearchResult g = optimize_grid(ch, Scheme::new_scheme, 2);
    CHECK(g.mode == "grid");
    CHECK(g.best_rate >= 0.0);
    const auto& p = std::get<NewSchemeParams>(g.best_params);
    CHECK(std::fabs(evaluate_new_scheme(ch, p).achievable_rate - g.best_rate) <= 1e-12);
}

}  // TEST_SUITE
