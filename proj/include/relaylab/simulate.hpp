#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "relaylab/markov.hpp"

namespace relaylab {

struct SimConfig {
    int n = 8;          // block length
    int B = 3;          // message-carrying blocks are 1..B-1
    int M = 2;          // messages per block
    int L = 1;          // quantizer codewords per context
    double delta = 0.2; // per-entry empirical-frequency slack
    int trials = 100;
    uint64_t seed = 0;
};

// Throws on invalid fields; the decoder search space M^(B-1) L^(B-1) is
// capped at 1e7.
void check_sim_config(const SimConfig& cfg);

using Seq = std::vector<uint8_t>;

// Tree codebooks for transmitter and relay plus the known boundary
// sequences (virtual block 0 and the first relay input).
struct CodebookTree {
    Seq x0;        // transmitter's block-0 sequence (tree root context)
    Seq x1_first;  // relay input of block 1, known to everyone
    // tx[l-1]: block-l codewords, M^l sequences; child id = parent*M + m.
    std::vector<std::vector<Seq>> tx;
    // quant[l-1][ctx][q]: quantizer sequences for block l, context ctx;
    // next_x1[l-1][ctx][q]: the relay input of block l+1 that choice maps to.
    std::vector<std::vector<std::vector<Seq>>> quant;
    std::vector<std::vector<std::vector<Seq>>> next_x1;
};

// Scheme parameters plus the precomputed laws the encoder, relay and
// decoder test against.
struct SimTables {
    NewSchemeParams params;
    BlockProcess bp;
    std::vector<int> visible_dims;    // (|X|, |Yh|, |X1|, |Y|)
    std::vector<double> pair_law;     // adjacent-block law over (x,yh,x1,y) twice
    std::vector<double> quant_cond;   // q(yh|x1) rows by x1
    std::vector<double> relay_triple; // p(y1,yh,x1)
};

SimTables make_sim_tables(const RelayChannel& ch, const NewSchemeParams& p);

// Random tree codebooks per the scheme: transmitter children drawn from the
// input chain, quantizer sequences rejection-sampled uniformly from the
// conditional typical set of q(yh|x1) (cap 1e5 per sequence), one next-block
// relay input per quantizer sequence.
CodebookTree build_codebooks(const SimConfig& cfg, const RelayChannel& ch, const SimTables& tables, Rng& rng);
CodebookTree build_codebooks(const SimConfig& cfg, const RelayChannel& ch, const NewSchemeParams& p, Rng& rng);

// One end-to-end transmission of B blocks: block-Markov encoding, relay
// quantization against its running context, joint decoding over all blocks
// once everything is received (the final block's transmitter codeword and
// compressed relay view are granted to the decoder as side information).
// Returns the decoded message list, or nullopt when no unique jointly
// typical tuple exists. Decode failure is a value, not an error.
std::optional<std::vector<int>> run_trial(const SimConfig& cfg, const RelayChannel& ch, const SimTables& tables,
                                          const CodebookTree& tree, const std::vector<int>& messages, Rng& rng);
std::optional<std::vector<int>> run_trial(const SimConfig& cfg, const RelayChannel& ch, const NewSchemeParams& p,
                                          const CodebookTree& tree, const std::vector<int>& messages, Rng& rng);

struct SimResult {
    int error_count = 0;
    int trials = 0;
    double p_e_hat = 0;
    double effective_rate = 0;  // (B-1)/B * ln(M)/n; tail blocks genie-aided
    double wilson_lo = 0, wilson_hi = 0;
};

// Monte Carlo error estimate over independent trials (fresh codebook and
// uniform messages per trial, per-trial derived seeds). Wilson 95% interval.
SimResult estimate_error_probability(const SimConfig& cfg, const RelayChannel& ch, const NewSchemeParams& p);

}  // namespace relaylab
