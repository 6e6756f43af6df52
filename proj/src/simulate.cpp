#include "relaylab/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "relaylab/optimize.hpp"

namespace relaylab {

namespace {

constexpr int kRejectionCap = 100000;
// Inclusive "within delta" needs a guard at exact float boundaries.
constexpr double kFreqEps = 1e-12;

// Per-entry strong typicality: |count/total - law| <= delta, and cells with
// (numerically) zero law must not occur at all.
bool strong_typical(std::span<const int> counts, int total, std::span<const double> law, double delta) {
    const double inv = 1.0 / total;
    for (size_t i = 0; i < law.size(); ++i) {
        if (law[i] < kZeroProb) {
            if (counts[i] != 0) return false;
        } else if (std::fabs(counts[i] * inv - law[i]) > delta + kFreqEps) {
            return false;
        }
    }
    return true;
}

// Conditional strong typicality of (context, output) against rows q(out|ctx).
bool conditionally_typical(const Seq& ctx, const Seq& out, int nctx, int nout,
                           std::span<const double> cond_rows, double delta) {
    const int n = static_cast<int>(ctx.size());
    std::vector<int> joint(static_cast<size_t>(nctx) * nout, 0);
    std::vector<int> marg(static_cast<size_t>(nctx), 0);
    for (int i = 0; i < n; ++i) {
        joint[static_cast<size_t>(ctx[i]) * nout + out[i]]++;
        marg[ctx[i]]++;
    }
    const double inv = 1.0 / n;
    for (int a = 0; a < nctx; ++a) {
        for (int b = 0; b < nout; ++b) {
            const double q = cond_rows[static_cast<size_t>(a) * nout + b];
            const int c = joint[static_cast<size_t>(a) * nout + b];
            if (q < kZeroProb) {
                if (c != 0) return false;
            } else if (std::fabs(c * inv - marg[a] * inv * q) > delta + kFreqEps) {
                return false;
            }
        }
    }
    return true;
}

bool relay_triple_typical(const SimTables& t, const Seq& y1, const Seq& yh, const Seq& x1, double delta) {
    const int nyh = t.visible_dims[1], nx1 = t.visible_dims[2];
    const int ny1 = t.params.compressor.given()[0].alpha.size;
    const int n = static_cast<int>(y1.size());
    std::vector<int> counts(static_cast<size_t>(ny1) * nyh * nx1, 0);
    for (int i = 0; i < n; ++i) counts[(static_cast<size_t>(y1[i]) * nyh + yh[i]) * nx1 + x1[i]]++;
    return strong_typical(counts, n, t.relay_triple, delta);
}

}  // namespace

void check_sim_config(const SimConfig& cfg) {
    if (cfg.n < 1) throw ValidationError("block length n must be >= 1");
    if (cfg.B < 2) throw ValidationError("block count B must be >= 2");
    if (cfg.M < 1 || cfg.L < 1) throw ValidationError("M and L must be >= 1");
    if (!(cfg.delta > 0.0)) throw ValidationError("delta must be positive");
    const double space = std::pow(static_cast<double>(cfg.M), cfg.B - 1) *
                         std::pow(static_cast<double>(cfg.L), cfg.B - 1);
    if (space > 1e7) throw SizeError("decoder search space M^(B-1) L^(B-1) exceeds 1e7");
}

SimTables make_sim_tables(const RelayChannel& ch, const NewSchemeParams& p) {
    check_params_match(ch, p);
    SimTables t{p, make_block_process(ch, p), {}, {}, {}, {}};
    t.visible_dims = {ch.x_alpha.size, p.yhat.size, ch.x1_alpha.size, ch.y_alpha.size};

    const JointDistribution pair = k_block_joint(t.bp, 2).marginalize(
        {"x[1]", "yh[1]", "x1[1]", "y[1]", "x[2]", "yh[2]", "x1[2]", "y[2]"});
    t.pair_law.assign(pair.probs().begin(), pair.probs().end());

    const JointDistribution m_x1yh = t.bp.stationary.marginalize({"x1", "yh"});
    const JointDistribution m_x1 = t.bp.stationary.marginalize({"x1"});
    const int nx1 = ch.x1_alpha.size, nyh = p.yhat.size;
    t.quant_cond.assign(static_cast<size_t>(nx1) * nyh, 0.0);
    for (int a = 0; a < nx1; ++a) {
        const double mass = m_x1.probs()[static_cast<size_t>(a)];
        for (int b = 0; b < nyh; ++b) {
            t.quant_cond[static_cast<size_t>(a) * nyh + b] =
                mass < kZeroProb ? 1.0 / nyh : m_x1yh.probs()[static_cast<size_t>(a) * nyh + b] / mass;
        }
    }

    const JointDistribution triple = t.bp.stationary.marginalize({"y1", "yh", "x1"});
    t.relay_triple.assign(triple.probs().begin(), triple.probs().end());
    return t;
}

CodebookTree build_codebooks(const SimConfig& cfg, const RelayChannel& ch, const SimTables& tables, Rng& rng) {
    check_sim_config(cfg);
    const NewSchemeParams& p = tables.params;
    const int n = cfg.n, B = cfg.B, M = cfg.M, L = cfg.L;
    const int nyh = p.yhat.size, nx1 = ch.x1_alpha.size;

    CodebookTree tree;

    // Virtual block 0 drawn per-symbol from the stationary law; only its
    // (x, yh) coordinates seed the trees.
    const JointDistribution m_xyh = tables.bp.stationary.marginalize({"x", "yh"});
    Seq yh0(static_cast<size_t>(n));
    tree.x0.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const int s = rng.categorical(m_xyh.probs());
        tree.x0[i] = static_cast<uint8_t>(s / nyh);
        yh0[i] = static_cast<uint8_t>(s % nyh);
    }
    tree.x1_first.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        tree.x1_first[i] = static_cast<uint8_t>(rng.categorical(p.relay_map.row(yh0[i])));

    // Transmitter tree: every block-(l-1) codeword expands into M children.
    tree.tx.resize(static_cast<size_t>(B - 1));
    {
        std::vector<const Seq*> parents{&tree.x0};
        for (int l = 1; l <= B - 1; ++l) {
            auto& level = tree.tx[static_cast<size_t>(l - 1)];
            level.reserve(parents.size() * static_cast<size_t>(M));
            for (const Seq* parent : parents) {
                for (int m = 0; m < M; ++m) {
                    Seq child(static_cast<size_t>(n));
                    for (int i = 0; i < n; ++i)
                        child[i] = static_cast<uint8_t>(rng.categorical(p.input_chain.row((*parent)[i])));
                    level.push_back(std::move(child));
                }
            }
            parents.clear();
            for (const Seq& s : level) parents.push_back(&s);
        }
    }

    // Relay tree: per context, L quantizer sequences rejection-sampled into
    // the conditional typical set of q(yh|x1), each mapped to one next x1.
    tree.quant.resize(static_cast<size_t>(B - 1));
    tree.next_x1.resize(static_cast<size_t>(B - 1));
    std::vector<Seq> contexts{tree.x1_first};
    for (int l = 1; l <= B - 1; ++l) {
        auto& qlevel = tree.quant[static_cast<size_t>(l - 1)];
        auto& xlevel = tree.next_x1[static_cast<size_t>(l - 1)];
        qlevel.resize(contexts.size());
        xlevel.resize(contexts.size());
        std::vector<Seq> next_contexts;
        next_contexts.reserve(contexts.size() * static_cast<size_t>(L));
        for (size_t c = 0; c < contexts.size(); ++c) {
            const Seq& ctx = contexts[c];
            for (int q = 0; q < L; ++q) {
                Seq cand(static_cast<size_t>(n));
                bool ok = false;
                for (int attempt = 0; attempt < kRejectionCap; ++attempt) {
                    for (int i = 0; i < n; ++i) {
                        cand[i] = static_cast<uint8_t>(rng.categorical(
                            {tables.quant_cond.data() + static_cast<size_t>(ctx[i]) * nyh,
                             static_cast<size_t>(nyh)}));
                    }
                    if (conditionally_typical(ctx, cand, nx1, nyh, tables.quant_cond, cfg.delta)) {
                        ok = true;
                        break;
                    }
                }
                if (!ok)
                    throw ConstructionError("empty conditional typical set for block " + std::to_string(l) +
                                            " context " + std::to_string(c));
                Seq nx(static_cast<size_t>(n));
                for (int i = 0; i < n; ++i)
                    nx[i] = static_cast<uint8_t>(rng.categorical(p.relay_map.row(cand[i])));
                qlevel[c].push_back(std::move(cand));
                xlevel[c].push_back(nx);
                next_contexts.push_back(std::move(nx));
            }
        }
        contexts = std::move(next_contexts);
    }
    return tree;
}

CodebookTree build_codebooks(const SimConfig& cfg, const RelayChannel& ch, const NewSchemeParams& p, Rng& rng) {
    return build_codebooks(cfg, ch, make_sim_tables(ch, p), rng);
}

namespace {

struct PairCounter {
    int dim = 0;         // per-block visible cell count
    std::vector<int> counts;
    std::vector<int> touched;

    explicit PairCounter(int d) : dim(d), counts(static_cast<size_t>(d) * d, 0) {}

    void reset() {
        for (int c : touched) counts[static_cast<size_t>(c)] = 0;
        touched.clear();
    }
    void add(int cell_a, int cell_b) {
        const int idx = cell_a * dim + cell_b;
        if (counts[static_cast<size_t>(idx)]++ == 0) touched.push_back(idx);
    }
};

}  // namespace

std::optional<std::vector<int>> run_trial(const SimConfig& cfg, const RelayChannel& ch, const SimTables& tables,
                                          const CodebookTree& tree, const std::vector<int>& messages, Rng& rng) {
    check_sim_config(cfg);
    const NewSchemeParams& p = tables.params;
    const int n = cfg.n, B = cfg.B, M = cfg.M, L = cfg.L;
    if (static_cast<int>(messages.size()) != B - 1) throw ArgumentError("expected B-1 message symbols");
    for (int m : messages) {
        if (m < 0 || m >= M) throw ArgumentError("message symbol out of range");
    }

    // Transmitter path through the tree.
    std::vector<const Seq*> x_sent(static_cast<size_t>(B) + 1, nullptr);
    {
        long node = 0;
        for (int l = 1; l <= B - 1; ++l) {
            node = node * M + messages[static_cast<size_t>(l - 1)];
            x_sent[static_cast<size_t>(l)] = &tree.tx[static_cast<size_t>(l - 1)][static_cast<size_t>(node)];
        }
    }

    std::vector<Seq> y(static_cast<size_t>(B) + 1), y1(static_cast<size_t>(B) + 1);
    std::vector<Seq> x1(static_cast<size_t>(B) + 1), yh(static_cast<size_t>(B) + 1);
    x1[1] = tree.x1_first;
    Seq xB(static_cast<size_t>(n));
    long relay_ctx = 0;

    for (int l = 1; l <= B; ++l) {
        const Seq* xs = x_sent[static_cast<size_t>(l)];
        if (l == B) {
            const Seq& prev = *x_sent[static_cast<size_t>(B - 1)];
            for (int i = 0; i < n; ++i)
                xB[i] = static_cast<uint8_t>(rng.categorical(p.input_chain.row(prev[i])));
            xs = &xB;
        }
        y[static_cast<size_t>(l)].resize(static_cast<size_t>(n));
        y1[static_cast<size_t>(l)].resize(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            auto [yy, yy1] = sample_output(ch, (*xs)[i], x1[static_cast<size_t>(l)][i], rng);
            y[static_cast<size_t>(l)][i] = static_cast<uint8_t>(yy);
            y1[static_cast<size_t>(l)][i] = static_cast<uint8_t>(yy1);
        }
        if (l <= B - 1) {
            // Quantize against the current context: first jointly typical
            // candidate wins; none -> fall back to candidate 0 and let the
            // decoder surface the failure.
            const auto& cands = tree.quant[static_cast<size_t>(l - 1)][static_cast<size_t>(relay_ctx)];
            int pick = 0;
            bool found = false;
            for (int q = 0; q < L; ++q) {
                if (relay_triple_typical(tables, y1[static_cast<size_t>(l)], cands[static_cast<size_t>(q)],
                                         x1[static_cast<size_t>(l)], cfg.delta)) {
                    pick = q;
                    found = true;
                    break;
                }
            }
            if (found &&
                !relay_triple_typical(tables, y1[static_cast<size_t>(l)], cands[static_cast<size_t>(pick)],
                                      x1[static_cast<size_t>(l)], cfg.delta))
                throw Error("quantizer acceptance invariant violated");
            yh[static_cast<size_t>(l)] = cands[static_cast<size_t>(pick)];
            x1[static_cast<size_t>(l + 1)] =
                tree.next_x1[static_cast<size_t>(l - 1)][static_cast<size_t>(relay_ctx)][static_cast<size_t>(pick)];
            relay_ctx = relay_ctx * L + pick;
        } else {
            // Final block: the relay compresses without a codebook and the
            // result is granted to the decoder.
            yh[static_cast<size_t>(B)].resize(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) {
                const size_t row = static_cast<size_t>(y1[static_cast<size_t>(B)][i]) * ch.x1_alpha.size +
                                   x1[static_cast<size_t>(B)][i];
                yh[static_cast<size_t>(B)][i] = static_cast<uint8_t>(rng.categorical(p.compressor.row(row)));
            }
        }
    }

    // Joint decoding over every candidate path pair. Pooled adjacent-pair
    // statistics over n(B-1) samples are tested against the stationary
    // two-block law on the decoder-visible coordinates.
    const int nx = tables.visible_dims[0], nyh = tables.visible_dims[1];
    const int nx1v = tables.visible_dims[2], ny = tables.visible_dims[3];
    const int dim = nx * nyh * nx1v * ny;
    PairCounter counter(dim);
    auto cell_of = [&](uint8_t xv, uint8_t yhv, uint8_t x1v, uint8_t yv) {
        return ((static_cast<int>(xv) * nyh + yhv) * nx1v + x1v) * ny + yv;
    };

    long m_paths = 1, q_paths = 1;
    for (int l = 0; l < B - 1; ++l) {
        m_paths *= M;
        q_paths *= L;
    }

    int matches = 0;
    std::vector<int> decoded;
    std::vector<const Seq*> cx(static_cast<size_t>(B) + 1), cyh(static_cast<size_t>(B) + 1),
        cx1(static_cast<size_t>(B) + 1);
    cx[static_cast<size_t>(B)] = &xB;
    cyh[static_cast<size_t>(B)] = &yh[static_cast<size_t>(B)];
    cx1[1] = &tree.x1_first;

    std::vector<int> mdig(static_cast<size_t>(B - 1), 0), qdig(static_cast<size_t>(B - 1), 0);
    for (long pt = 0; pt < m_paths && matches < 2; ++pt) {
        {
            long rem = pt;
            for (int l = B - 1; l >= 1; --l) {
                mdig[static_cast<size_t>(l - 1)] = static_cast<int>(rem % M);
                rem /= M;
            }
        }
        long node = 0;
        for (int l = 1; l <= B - 1; ++l) {
            node = node * M + mdig[static_cast<size_t>(l - 1)];
            cx[static_cast<size_t>(l)] = &tree.tx[static_cast<size_t>(l - 1)][static_cast<size_t>(node)];
        }
        for (long pq = 0; pq < q_paths && matches < 2; ++pq) {
            {
                long rem = pq;
                for (int l = B - 1; l >= 1; --l) {
                    qdig[static_cast<size_t>(l - 1)] = static_cast<int>(rem % L);
                    rem /= L;
                }
            }
            long ctx = 0;
            for (int l = 1; l <= B - 1; ++l) {
                const int q = qdig[static_cast<size_t>(l - 1)];
                cyh[static_cast<size_t>(l)] =
                    &tree.quant[static_cast<size_t>(l - 1)][static_cast<size_t>(ctx)][static_cast<size_t>(q)];
                cx1[static_cast<size_t>(l + 1)] =
                    &tree.next_x1[static_cast<size_t>(l - 1)][static_cast<size_t>(ctx)][static_cast<size_t>(q)];
                ctx = ctx * L + q;
            }

            counter.reset();
            for (int l = 1; l <= B - 1; ++l) {
                const Seq& xa = *cx[static_cast<size_t>(l)];
                const Seq& yha = *cyh[static_cast<size_t>(l)];
                const Seq& x1a = *cx1[static_cast<size_t>(l)];
                const Seq& ya = y[static_cast<size_t>(l)];
                const Seq& xb = *cx[static_cast<size_t>(l + 1)];
                const Seq& yhb = *cyh[static_cast<size_t>(l + 1)];
                const Seq& x1b = *cx1[static_cast<size_t>(l + 1)];
                const Seq& yb = y[static_cast<size_t>(l + 1)];
                for (int i = 0; i < n; ++i) {
                    counter.add(cell_of(xa[i], yha[i], x1a[i], ya[i]), cell_of(xb[i], yhb[i], x1b[i], yb[i]));
                }
            }
            if (strong_typical(counter.counts, n * (B - 1), tables.pair_law, cfg.delta)) {
                ++matches;
                decoded.assign(mdig.begin(), mdig.end());
            }
        }
    }

    if (matches != 1) return std::nullopt;
    return decoded;
}

std::optional<std::vector<int>> run_trial(const SimConfig& cfg, const RelayChannel& ch, const NewSchemeParams& p,
                                          const CodebookTree& tree, const std::vector<int>& messages, Rng& rng) {
    return run_trial(cfg, ch, make_sim_tables(ch, p), tree, messages, rng);
}

SimResult estimate_error_probability(const SimConfig& cfg, const RelayChannel& ch, const NewSchemeParams& p) {
    check_sim_config(cfg);
    if (cfg.trials < 1) throw ArgumentError("trials must be >= 1");
    const SimTables tables = make_sim_tables(ch, p);

    std::vector<uint8_t> failed(static_cast<size_t>(cfg.trials), 0);
    const int workers = std::min(worker_count(), cfg.trials);
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        try {
            for (int t = next.fetch_add(1); t < cfg.trials; t = next.fetch_add(1)) {
                Rng cb_rng(mix_seed(cfg.seed, static_cast<uint64_t>(t), 0xC0DE));
                Rng tr_rng(mix_seed(cfg.seed, static_cast<uint64_t>(t), 0x7814));
                const CodebookTree tree = build_codebooks(cfg, ch, tables, cb_rng);
                std::vector<int> msgs(static_cast<size_t>(cfg.B - 1));
                for (auto& m : msgs) m = tr_rng.next_below(cfg.M);
                const auto decoded = run_trial(cfg, ch, tables, tree, msgs, tr_rng);
                failed[static_cast<size_t>(t)] = (!decoded.has_value() || *decoded != msgs) ? 1 : 0;
            }
        } catch (...) {
            const std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    SimResult r;
    r.trials = cfg.trials;
    for (uint8_t f : failed) r.error_count += f;
    r.p_e_hat = static_cast<double>(r.error_count) / cfg.trials;
    r.effective_rate = (static_cast<double>(cfg.B - 1) / cfg.B) * std::log(static_cast<double>(cfg.M)) / cfg.n;

    const double z = 1.959963984540054;
    const double t = static_cast<double>(cfg.trials), ph = r.p_e_hat;
    const double denom = 1.0 + z * z / t;
    const double center = (ph + z * z / (2.0 * t)) / denom;
    const double half = z * std::sqrt(ph * (1.0 - ph) / t + z * z / (4.0 * t * t)) / denom;
    r.wilson_lo = std::min(std::max(0.0, center - half), ph);
    r.wilson_hi = std::max(std::min(1.0, center + half), ph);
    return r;
}

}  // namespace relaylab
