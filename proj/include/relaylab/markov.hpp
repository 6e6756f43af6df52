#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "relaylab/channel.hpp"
#include "relaylab/prob.hpp"

namespace relaylab {

// Free conditional laws of the block-Markov scheme: the transmitter's
// input chain p(x|x~), the relay's forwarding map p(x1|yh) and the relay
// compressor p(yh|y1,x1). The yh alphabet is a free modeling choice.
struct NewSchemeParams {
    Alphabet yhat;
    ConditionalKernel input_chain;  // given x~, out x
    ConditionalKernel relay_map;    // given yh, out x1
    ConditionalKernel compressor;   // given (y1,x1), out yh
};

NewSchemeParams make_new_scheme_params(const RelayChannel& ch, int yhat_size,
                                       std::vector<double> input_chain,
                                       std::vector<double> relay_map,
                                       std::vector<double> compressor);

// ShapeError if the parameter alphabets disagree with the channel.
void check_params_match(const RelayChannel& ch, const NewSchemeParams& p);

// Per-block state variable order used everywhere: (x, yh, x1, y, y1).
inline constexpr std::array<const char*, 5> kStateVarNames = {"x", "yh", "x1", "y", "y1"};

std::vector<Var> state_vars(const RelayChannel& ch, const Alphabet& yhat);
std::vector<std::string> block_names(int block);

// Single-block transition kernel of the scheme's stationary process:
// p(next | prev) = p(x|x~) p(y,y1|x,x1) p(x1|yh~) p(yh|y1,x1).
ConditionalKernel build_block_transition(const RelayChannel& ch, const NewSchemeParams& p);

// Power iteration to the fixed point; returns the law and the achieved
// total-variation residual. Dampens when the residual stalls (periodic
// chains); ConvergenceError past the iteration cap.
std::pair<JointDistribution, double> stationary_distribution(const ConditionalKernel& transition);

struct BlockProcess {
    std::vector<Var> state;              // (x, yh, x1, y, y1)
    ConditionalKernel transition;        // full-state to full-state
    ConditionalKernel reduced_transition;  // given (x~, yh~) only; same rows
    JointDistribution stationary;        // over one block
    double residual = 0.0;
    bool non_unique_warning = false;
};

// probe_uniqueness runs a second fixed-point search from a pseudo-random
// start and raises non_unique_warning when the limits disagree (TV > 1e-6).
BlockProcess make_block_process(const RelayChannel& ch, const NewSchemeParams& p,
                                bool probe_uniqueness = true);

// Joint law of K consecutive blocks at stationarity; variables are named
// x[1], yh[1], ..., y1[K]. K is capped at 4 (dense-size guard).
JointDistribution k_block_joint(const BlockProcess& bp, int K);

// Three-block joint reduced to the oldest block's x plus the two newer
// blocks in full: (x[1]; x[2],yh[2],x1[2],y[2],y1[2]; x[3],...,y1[3]).
JointDistribution eleven_variable_joint(const BlockProcess& bp);

// Joint over an explicit window of blocks keeping only per-block variable
// subsets. needed[b] lists state-variable indices (0..4) kept for block b+1.
// Completed blocks are marginalized eagerly, so windows wider than the dense
// cap stay affordable.
JointDistribution window_joint(const BlockProcess& bp, const std::vector<std::vector<int>>& needed);

}  // namespace relaylab
