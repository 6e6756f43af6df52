#include <doctest.h>

#include <cmath>

#include "relaylab/markov.hpp"
#include "test_util.hpp"

using namespace relaylab;
namespace tu = relaylab::testutil;

namespace {

// Deterministic everything: copy input chain, copy compressor, copy relay map.
NewSchemeParams deterministic_params(const RelayChannel& ch) {
    return make_new_scheme_params(ch, 2, {1, 0, 0, 1}, {1, 0, 0, 1}, {1, 0, 1, 0, 0, 1, 0, 1});
}

}  // namespace

TEST_SUITE("markov") {

TEST_CASE("deterministic params give a permutation-like transition") {
    const RelayChannel ch = tu::noiseless_pipe_channel();
    const auto t = build_block_transition(ch, deterministic_params(ch));
    for (size_t r = 0; r < t.rows(); ++r) {
        int ones = 0;
        double sum = 0;
        for (double v : t.row(r)) {
            ones += (v == 1.0);
            sum += v;
        }
        CHECK(ones == 1);
        CHECK(sum == doctest::Approx(1.0));
    }
}

TEST_CASE("block-independent params make all transition rows identical") {
    Rng rng(3);
    const RelayChannel ch = tu::random_binary_channel(rng);
    const auto p = tu::uniform_const_params(ch);
    const auto t = build_block_transition(ch, p);
    for (size_t r = 1; r < t.rows(); ++r)
        for (size_t c = 0; c < t.out_size(); ++c) CHECK(t.row(r)[c] == doctest::Approx(t.row(0)[c]).epsilon(1e-15));

    // Rank-one kernel: stationary in one step with zero residual.
    const auto [pi, res] = stationary_distribution(t);
    CHECK(res <= 1e-15);
    for (size_t c = 0; c < t.out_size(); ++c) CHECK(pi.probs()[c] == doctest::Approx(t.row(0)[c]).epsilon(1e-12));
}

TEST_CASE("transition rows reconstruct from the four factors") {
    Rng rng(4);
    const RelayChannel ch = tu::random_binary_channel(rng);
    const auto p = tu::random_new_params(ch, rng);
    const auto t = build_block_transition(ch, p);
    // Direct product oracle over all 32x32 entries.
    double worst_row_sum = 0;
    for (int px = 0; px < 2; ++px)
        for (int pyh = 0; pyh < 2; ++pyh)
            for (int px1 = 0; px1 < 2; ++px1)
                for (int py = 0; py < 2; ++py)
                    for (int py1 = 0; py1 < 2; ++py1) {
                        const size_t row = static_cast<size_t>(
                            (((px * 2 + pyh) * 2 + px1) * 2 + py) * 2 + py1);
                        double sum = 0;
                        size_t col = 0;
                        for (int x = 0; x < 2; ++x)
                            for (int yh = 0; yh < 2; ++yh)
                                for (int x1 = 0; x1 < 2; ++x1)
                                    for (int y = 0; y < 2; ++y)
                                        for (int y1 = 0; y1 < 2; ++y1) {
                                            const double expect =
                                                p.input_chain.row(static_cast<size_t>(px))[static_cast<size_t>(x)] *
                                                p.relay_map.row(static_cast<size_t>(pyh))[static_cast<size_t>(x1)] *
                                                ch.kernel.row(static_cast<size_t>(x) * 2 +
                                                              x1)[static_cast<size_t>(y) * 2 + y1] *
                                                p.compressor.row(static_cast<size_t>(y1) * 2 +
                                                                 x1)[static_cast<size_t>(yh)];
                                            CHECK(t.row(row)[col] == doctest::Approx(expect).epsilon(1e-12));
                                            sum += t.row(row)[col];
                                            ++col;
                                        }
                        worst_row_sum = std::max(worst_row_sum, std::fabs(sum - 1.0));
                    }
    CHECK(worst_row_sum <= 1e-12);
}

TEST_CASE("stationary law: symmetric flip chain stays uniform on x") {
    // Input chain flips x with probability 0.3; everything else degenerate.
    const RelayChannel ch = tu::noiseless_pipe_channel();
    auto p = make_new_scheme_params(ch, 2, {0.7, 0.3, 0.3, 0.7}, {1, 0, 1, 0}, {1, 0, 1, 0, 1, 0, 1, 0});
    const auto bp = make_block_process(ch, p);
    const auto mx = bp.stationary.marginalize({"x"});
    CHECK(mx.probs()[0] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(bp.residual <= 1e-12);
}

TEST_CASE("stationary law: random params satisfy the fixed-point residual contract") {
    Rng rng(6);
    for (int t = 0; t < 10; ++t) {
        const RelayChannel ch = tu::random_binary_channel(rng);
        const auto bp = make_block_process(ch, tu::random_new_params(ch, rng));
        CHECK(bp.residual <= 1e-12);
        CHECK_FALSE(bp.non_unique_warning);
    }
}

TEST_CASE("k-block joints: guards, identity, independence, stationarity") {
    Rng rng(8);
    const RelayChannel ch = tu::random_binary_channel(rng);
    const auto bp = make_block_process(ch, tu::random_new_params(ch, rng));
    CHECK_THROWS_AS((void)k_block_joint(bp, 0), SizeError);
    CHECK_THROWS_AS((void)k_block_joint(bp, 5), SizeError);

    const auto k1 = k_block_joint(bp, 1);
    for (size_t i = 0; i < k1.size(); ++i)
        CHECK(k1.probs()[i] == doctest::Approx(bp.stationary.probs()[i]).epsilon(1e-14));

    // Independent blocks: the two-block joint is a product law.
    const auto bp_ind = make_block_process(ch, tu::uniform_const_params(ch));
    const auto k2 = k_block_joint(bp_ind, 2);
    const size_t n = bp_ind.stationary.size();
    for (size_t a = 0; a < n; ++a)
        for (size_t b = 0; b < n; ++b)
            CHECK(k2.probs()[a * n + b] ==
                  doctest::Approx(bp_ind.stationary.probs()[a] * bp_ind.stationary.probs()[b]).epsilon(1e-12));

    // Middle-block marginal of the three-block joint equals the stationary law.
    const auto k3 = k_block_joint(bp, 3);
    const auto mid = k3.marginalize(block_names(2));
    double dev = 0;
    for (size_t i = 0; i < n; ++i) dev = std::max(dev, std::fabs(mid.probs()[i] - bp.stationary.probs()[i]));
    CHECK(dev <= 1e-10);
}

TEST_CASE("eleven-variable joint: structure under special and random params") {
    Rng rng(9);
    const RelayChannel ch = tu::random_binary_channel(rng);

    // Block-independent params: the old x is independent of everything else.
    {
        const auto bp = make_block_process(ch, tu::uniform_const_params(ch));
        const auto e11 = eleven_variable_joint(bp);
        CHECK(e11.vars().size() == 11);
        const double mi = e11.conditional_mutual_information(
            {"x[1]"},
            {"x[2]", "yh[2]", "x1[2]", "y[2]", "y1[2]", "x[3]", "yh[3]", "x1[3]", "y[3]", "y1[3]"}, {});
        CHECK(std::fabs(mi) <= 1e-10);
    }

    // Copy input chain: x repeats across blocks with probability one.
    {
        auto p = make_new_scheme_params(ch, 2, {1, 0, 0, 1}, {0.5, 0.5, 0.5, 0.5},
                                        {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
        const auto bp = make_block_process(ch, p);
        const auto m = eleven_variable_joint(bp).marginalize({"x[1]", "x[2]", "x[3]"});
        double off_diag = 0;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                for (int c = 0; c < 2; ++c)
                    if (!(a == b && b == c)) off_diag += m.prob_at(std::vector<int>{a, b, c});
        CHECK(off_diag <= 1e-10);
    }

    // Random params: conditional independence of the current block from the
    // oldest x given the middle block.
    {
        const auto bp = make_block_process(ch, tu::random_new_params(ch, rng));
        const auto e11 = eleven_variable_joint(bp);
        const double ci = e11.conditional_mutual_information(
            {"x[3]", "yh[3]", "x1[3]", "y[3]", "y1[3]"}, {"x[1]"},
            {"x[2]", "yh[2]", "x1[2]", "y[2]", "y1[2]"});
        CHECK(ci <= 1e-10);
        // Both five-variable block marginals equal the stationary law.
        for (int b : {2, 3}) {
            const auto m = e11.marginalize(block_names(b));
            for (size_t i = 0; i < m.size(); ++i)
                CHECK(std::fabs(m.probs()[i] - bp.stationary.probs()[i]) <= 1e-10);
        }
    }
}

TEST_CASE("property: conditional-independence structure of multi-block joints") {
    Rng rng(10);
    const RelayChannel ch = tu::random_binary_channel(rng);
    const auto bp = make_block_process(ch, tu::random_new_params(ch, rng));
    const auto k3 = k_block_joint(bp, 3);

    // Given (yh, x, x1) of block 2, its y tells nothing about other blocks.
    const double mp1 = k3.conditional_mutual_information(
        {"y[2]"},
        {"x[1]", "yh[1]", "x1[1]", "y[1]", "y1[1]", "x[3]", "yh[3]", "x1[3]", "y[3]", "y1[3]"},
        {"yh[2]", "x[2]", "x1[2]"});
    CHECK(mp1 <= 1e-10);

    // Given (x, yh) of block 2, block 3 tells nothing about block 1.
    const double mp2 = k3.conditional_mutual_information(
        {"x[3]", "yh[3]", "x1[3]", "y[3]", "y1[3]"},
        {"x[1]", "yh[1]", "x1[1]", "y[1]", "y1[1]"}, {"x[2]", "yh[2]"});
    CHECK(mp2 <= 1e-10);

    // Time-shift invariance of adjacent pairs.
    const auto p12 = k3.marginalize({"x[1]", "yh[1]", "x1[1]", "y[1]", "y1[1]",
                                     "x[2]", "yh[2]", "x1[2]", "y[2]", "y1[2]"});
    const auto p23 = k3.marginalize({"x[2]", "yh[2]", "x1[2]", "y[2]", "y1[2]",
                                     "x[3]", "yh[3]", "x1[3]", "y[3]", "y1[3]"});
    double dev = 0;
    for (size_t i = 0; i < p12.size(); ++i) dev = std::max(dev, std::fabs(p12.probs()[i] - p23.probs()[i]));
    CHECK(dev <= 1e-10);
}

TEST_CASE("window joints agree with full k-block joints") {
    Rng rng(12);
    const RelayChannel ch = tu::random_binary_channel(rng);
    const auto bp = make_block_process(ch, tu::random_new_params(ch, rng));
    const auto full = k_block_joint(bp, 3).marginalize({"x[1]", "y[2]", "x1[3]", "y[3]"});
    const auto windowed = window_joint(bp, {{0}, {3}, {2, 3}});
    REQUIRE(windowed.size() == full.size());
    for (size_t i = 0; i < full.size(); ++i)
        CHECK(windowed.probs()[i] == doctest::Approx(full.probs()[i]).epsilon(1e-12));
}


TEST_CASE("three-block joint matches a brute-force enumeration oracle") {
    Rng rng(14);
    const RelayChannel ch = tu::random_binary_channel(rng);
    const auto p = tu::random_new_params(ch, rng);
    const auto bp = make_block_process(ch, p);
    const auto k3 = k_block_joint(bp, 3);

    // Independent route: raw loops over state indices, reading the factor
    // tables directly. State order is (x, yh, x1, y, y1), binary throughout.
    const auto pi = bp.stationary.probs();
    const auto ic = p.input_chain.probs();
    const auto rm = p.relay_map.probs();
    const auto cp = p.compressor.probs();
    const auto chk = ch.kernel.probs();
    auto unpack = [](int s, int* v) {
        for (int i = 4; i >= 0; --i) {
            v[i] = s & 1;
            s >>= 1;
        }
    };
    auto step_prob = [&](const int* a, const int* b) {
        // p(b | a) = p(x'|x) p(y',y1'|x',x1') p(x1'|yh) p(yh'|y1',x1')
        return ic[a[0] * 2 + b[0]] * rm[a[1] * 2 + b[2]] *
               chk[((b[0] * 2 + b[2]) * 2 + b[3]) * 2 + b[4]] * cp[(b[4] * 2 + b[2]) * 2 + b[1]];
    };
    double worst = 0;
    int va[5], vb[5], vc[5];
    for (int s1 = 0; s1 < 32; ++s1) {
        unpack(s1, va);
        for (int s2 = 0; s2 < 32; ++s2) {
            unpack(s2, vb);
            const double p12 = pi[static_cast<size_t>(s1)] * step_prob(va, vb);
            for (int s3 = 0; s3 < 32; ++s3) {
                unpack(s3, vc);
                const double expect = p12 * step_prob(vb, vc);
                const double got = k3.probs()[(static_cast<size_t>(s1) * 32 + s2) * 32 + s3];
                worst = std::max(worst, std::fabs(got - expect));
            }
        }
    }
    CHECK(worst <= 1e-14);
}

TEST_CASE("stationary law matches direct Markov-chain sampling") {
    Rng rng(15);
    const RelayChannel ch = tu::random_binary_channel(rng);
    const auto p = tu::random_new_params(ch, rng);
    const auto bp = make_block_process(ch, p);

    // Walk the chain by sampling transition rows and compare visit
    // frequencies with the fixed point: an independent stochastic route.
    Rng walker(99);
    int state = 0;
    const int burn = 2000, draws = 400000;
    std::vector<long> counts(32, 0);
    for (int t = 0; t < burn + draws; ++t) {
        state = walker.categorical(bp.transition.row(static_cast<size_t>(state)));
        if (t >= burn) counts[static_cast<size_t>(state)]++;
    }
    for (int s = 0; s < 32; ++s) {
        const double pi_s = bp.stationary.probs()[static_cast<size_t>(s)];
        const double freq = counts[static_cast<size_t>(s)] / static_cast<double>(draws);
        // Loose band: correlated samples, so allow several standard errors.
        CHECK(std::fabs(freq - pi_s) < 8.0 * std::sqrt(std::max(pi_s, 1e-4) / draws) + 1e-3);
    }
}

}  // TEST_SUITE
