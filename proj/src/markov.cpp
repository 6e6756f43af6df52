#include "relaylab/markov.hpp"

#include <algorithm>
#include <cmath>

#include "relaylab/kernels.hpp"
#include "relaylab/rng.hpp"

namespace relaylab {

namespace {

constexpr long kMaxIters = 1000000;
constexpr double kTargetResidual = 1e-15;  // aim well below the 1e-12 contract
constexpr size_t kDenseCap = size_t{1} << 24;

double tv_distance(std::span<const double> a, std::span<const double> b) {
    return 0.5 * kernels::l1_diff(a.data(), b.data(), a.size());
}

// One power-iteration step: out = pi T.
void step(const ConditionalKernel& t, std::span<const double> pi, std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    const size_t n = out.size();
    for (size_t s = 0; s < n; ++s) {
        if (pi[s] == 0.0) continue;
        kernels::axpy(out.data(), pi[s], t.probs().data() + s * n, n);
    }
}

std::vector<double> iterate_to_fixed_point(const ConditionalKernel& t, std::vector<double> pi,
                                           double& residual) {
    const size_t n = pi.size();
    std::vector<double> next(n);
    double prev_res = 1e300, prev_res2 = 1e300;
    bool damped = false;
    for (long it = 0; it < kMaxIters; ++it) {
        step(t, pi, next);
        if (damped) {
            for (size_t i = 0; i < n; ++i) next[i] = 0.5 * (next[i] + pi[i]);
        }
        residual = tv_distance(pi, next);
        pi.swap(next);
        if (residual <= kTargetResidual) break;
        // Residual no longer contracting: average the map. Fixed points are
        // preserved and period-2 oscillation dies.
        if (!damped && it > 32 && residual > 0.9 * prev_res2) damped = true;
        prev_res2 = prev_res;
        prev_res = residual;
    }
    // Report the residual of the undamped map at the returned point.
    step(t, pi, next);
    residual = tv_distance(pi, next);
    return pi;
}

}  // namespace

std::vector<Var> state_vars(const RelayChannel& ch, const Alphabet& yhat) {
    return {{"x", ch.x_alpha}, {"yh", yhat}, {"x1", ch.x1_alpha}, {"y", ch.y_alpha}, {"y1", ch.y1_alpha}};
}

std::vector<std::string> block_names(int block) {
    std::vector<std::string> out;
    out.reserve(5);
    for (const char* base : kStateVarNames) out.push_back(std::string(base) + "[" + std::to_string(block) + "]");
    return out;
}

NewSchemeParams make_new_scheme_params(const RelayChannel& ch, int yhat_size,
                                       std::vector<double> input_chain,
                                       std::vector<double> relay_map,
                                       std::vector<double> compressor) {
    if (yhat_size < 1) throw ValidationError("yhat alphabet size must be >= 1");
    Alphabet yh{"yh", yhat_size};
    return NewSchemeParams{
        yh,
        ConditionalKernel({{"x~", ch.x_alpha}}, {{"x", ch.x_alpha}}, std::move(input_chain)),
        ConditionalKernel({{"yh~", yh}}, {{"x1", ch.x1_alpha}}, std::move(relay_map)),
        ConditionalKernel({{"y1", ch.y1_alpha}, {"x1", ch.x1_alpha}}, {{"yh", yh}}, std::move(compressor)),
    };
}

void check_params_match(const RelayChannel& ch, const NewSchemeParams& p) {
    if (p.input_chain.given().size() != 1 || p.input_chain.out().size() != 1 ||
        p.input_chain.given()[0].alpha.size != ch.x_alpha.size ||
        p.input_chain.out()[0].alpha.size != ch.x_alpha.size)
        throw ShapeError("input_chain alphabet does not match channel X");
    if (p.relay_map.given().size() != 1 || p.relay_map.out().size() != 1 ||
        p.relay_map.given()[0].alpha.size != p.yhat.size ||
        p.relay_map.out()[0].alpha.size != ch.x1_alpha.size)
        throw ShapeError("relay_map alphabets do not match");
    if (p.compressor.given().size() != 2 || p.compressor.out().size() != 1 ||
        p.compressor.given()[0].alpha.size != ch.y1_alpha.size ||
        p.compressor.given()[1].alpha.size != ch.x1_alpha.size ||
        p.compressor.out()[0].alpha.size != p.yhat.size)
        throw ShapeError("compressor alphabets do not match");
}

namespace {

// Rows of the block transition for one (x~, yh~) context.
std::vector<double> transition_row(const RelayChannel& ch, const NewSchemeParams& p, int px, int pyh) {
    const int nx = ch.x_alpha.size, nyh = p.yhat.size, nx1 = ch.x1_alpha.size;
    const int ny = ch.y_alpha.size, ny1 = ch.y1_alpha.size;
    const auto ic = p.input_chain.probs();
    const auto rm = p.relay_map.probs();
    const auto cp = p.compressor.probs();
    const auto chp = ch.kernel.probs();
    std::vector<double> row(static_cast<size_t>(nx) * nyh * nx1 * ny * ny1);
    size_t col = 0;
    for (int x = 0; x < nx; ++x) {
        const double w_x = ic[static_cast<size_t>(px) * nx + x];
        for (int yh = 0; yh < nyh; ++yh)
            for (int x1 = 0; x1 < nx1; ++x1) {
                const double w_x1 = rm[static_cast<size_t>(pyh) * nx1 + x1];
                const double w = w_x * w_x1;
                for (int y = 0; y < ny; ++y)
                    for (int y1 = 0; y1 < ny1; ++y1) {
                        const double w_ch = chp[((static_cast<size_t>(x) * nx1 + x1) * ny + y) * ny1 + y1];
                        const double w_yh = cp[(static_cast<size_t>(y1) * nx1 + x1) * nyh + yh];
                        row[col++] = w * w_ch * w_yh;
                    }
            }
    }
    return row;
}

ConditionalKernel build_reduced_transition(const RelayChannel& ch, const NewSchemeParams& p) {
    const int nx = ch.x_alpha.size, nyh = p.yhat.size;
    const size_t state = static_cast<size_t>(nx) * nyh * ch.x1_alpha.size * ch.y_alpha.size * ch.y1_alpha.size;
    std::vector<double> probs;
    probs.reserve(static_cast<size_t>(nx) * nyh * state);
    for (int px = 0; px < nx; ++px)
        for (int pyh = 0; pyh < nyh; ++pyh) {
            auto row = transition_row(ch, p, px, pyh);
            probs.insert(probs.end(), row.begin(), row.end());
        }
    return ConditionalKernel({{"x~", ch.x_alpha}, {"yh~", p.yhat}}, state_vars(ch, p.yhat), std::move(probs));
}

}  // namespace

ConditionalKernel build_block_transition(const RelayChannel& ch, const NewSchemeParams& p) {
    check_params_match(ch, p);
    const int nx = ch.x_alpha.size, nyh = p.yhat.size, nx1 = ch.x1_alpha.size;
    const int ny = ch.y_alpha.size, ny1 = ch.y1_alpha.size;
    const size_t state = static_cast<size_t>(nx) * nyh * nx1 * ny * ny1;
    if (state * state > kDenseCap) throw SizeError("state space too large for a dense transition");

    std::vector<double> probs;
    probs.reserve(state * state);
    for (int px = 0; px < nx; ++px)
        for (int pyh = 0; pyh < nyh; ++pyh) {
            auto row = transition_row(ch, p, px, pyh);
            // The next block depends on the previous only through (x~, yh~):
            // the row repeats across (x1~, y~, y1~).
            for (int rep = 0; rep < nx1 * ny * ny1; ++rep) probs.insert(probs.end(), row.begin(), row.end());
        }

    // Storage above is (x~, yh~) slow / repeats fast, i.e. exactly row-major
    // over the 5-tuple (x~, yh~, x1~, y~, y1~).
    auto prev = state_vars(ch, p.yhat);
    for (auto& v : prev) v.name += "~";
    return ConditionalKernel(std::move(prev), state_vars(ch, p.yhat), std::move(probs));
}

std::pair<JointDistribution, double> stationary_distribution(const ConditionalKernel& transition) {
    const size_t n = transition.out_size();
    if (transition.rows() != n) throw ShapeError("transition kernel is not square");

    double residual = 1.0;
    std::vector<double> pi =
        iterate_to_fixed_point(transition, std::vector<double>(n, 1.0 / static_cast<double>(n)), residual);
    if (residual > 1e-12)
        throw ConvergenceError("stationary law did not converge; TV residual " + std::to_string(residual),
                               residual);
    const double mass = kernels::sum(pi.data(), pi.size());
    for (auto& v : pi) v /= mass;
    return {JointDistribution(transition.out(), std::move(pi)), residual};
}

BlockProcess make_block_process(const RelayChannel& ch, const NewSchemeParams& p, bool probe_uniqueness) {
    BlockProcess bp;
    bp.state = state_vars(ch, p.yhat);
    bp.transition = build_block_transition(ch, p);
    bp.reduced_transition = build_reduced_transition(ch, p);
    auto [law, residual] = stationary_distribution(bp.transition);
    bp.stationary = std::move(law);
    bp.residual = residual;

    if (probe_uniqueness) {
        const size_t n = bp.transition.out_size();
        Rng rng(0x5eedu);
        double res2 = 1.0;
        std::vector<double> pi2 =
            iterate_to_fixed_point(bp.transition, rng.dirichlet_row(static_cast<int>(n)), res2);
        bp.non_unique_warning = res2 <= 1e-12 && tv_distance(bp.stationary.probs(), pi2) > 1e-6;
    }
    return bp;
}

JointDistribution k_block_joint(const BlockProcess& bp, int K) {
    if (K < 1 || K > 4) throw SizeError("K-block joints are supported for 1 <= K <= 4");
    const size_t n = bp.stationary.size();
    size_t total = 1;
    for (int k = 0; k < K; ++k) {
        total *= n;
        if (total > kDenseCap) throw SizeError("K-block joint exceeds the dense size guard");
    }
    JointDistribution cur = bp.stationary.renamed(block_names(1));
    for (int k = 2; k <= K; ++k) {
        ConditionalKernel ext = bp.transition.renamed(block_names(k - 1), block_names(k));
        cur = compose({ext}, cur);
    }
    return cur;
}

JointDistribution eleven_variable_joint(const BlockProcess& bp) {
    return window_joint(bp, {{0}, {0, 1, 2, 3, 4}, {0, 1, 2, 3, 4}});
}

JointDistribution window_joint(const BlockProcess& bp, const std::vector<std::vector<int>>& needed) {
    const int W = static_cast<int>(needed.size());
    if (W < 1) throw ArgumentError("window must span at least one block");
    for (const auto& blockset : needed) {
        for (int i : blockset) {
            if (i < 0 || i > 4) throw ArgumentError("state variable index out of range");
        }
    }

    auto names_for = [](int block, std::vector<int> idxs) {
        std::sort(idxs.begin(), idxs.end());
        idxs.erase(std::unique(idxs.begin(), idxs.end()), idxs.end());
        std::vector<std::string> ns;
        for (int i : idxs)
            ns.push_back(std::string(kStateVarNames[static_cast<size_t>(i)]) + "[" + std::to_string(block) + "]");
        return ns;
    };

    JointDistribution cur = bp.stationary.renamed(block_names(1));
    for (int b = 2; b <= W; ++b) {
        // Keep: requested vars of completed blocks, plus the (x, yh) frontier
        // of block b-1 that the extension conditions on.
        std::vector<std::string> keep;
        for (int t = 1; t <= b - 2; ++t)
            for (auto& n : names_for(t, needed[static_cast<size_t>(t - 1)])) keep.push_back(std::move(n));
        std::vector<int> prev_keep = needed[static_cast<size_t>(b - 2)];
        prev_keep.push_back(0);
        prev_keep.push_back(1);
        for (auto& n : names_for(b - 1, prev_keep)) keep.push_back(std::move(n));
        cur = cur.marginalize(keep);

        const std::string xp = "x[" + std::to_string(b - 1) + "]";
        const std::string yhp = "yh[" + std::to_string(b - 1) + "]";
        ConditionalKernel ext = bp.reduced_transition.renamed({xp, yhp}, block_names(b));
        cur = compose({ext}, cur);
    }

    std::vector<std::string> final_keep;
    for (int b = 1; b <= W; ++b)
        for (auto& n : names_for(b, needed[static_cast<size_t>(b - 1)])) final_keep.push_back(std::move(n));
    return cur.marginalize(final_keep);
}

}  // namespace relaylab
