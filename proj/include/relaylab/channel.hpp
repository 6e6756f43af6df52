#pragma once

#include <string>
#include <utility>

#include "relaylab/prob.hpp"
#include "relaylab/rng.hpp"

namespace relaylab {

// Discrete memoryless relay channel p(y,y1|x,x1). Immutable.
struct RelayChannel {
    Alphabet x_alpha, x1_alpha, y_alpha, y1_alpha;
    ConditionalKernel kernel;  // given (x,x1), out (y,y1)
};

RelayChannel make_relay_channel(int x_size, int x1_size, int y_size, int y1_size,
                                std::vector<double> probs);

// Parse a channel-spec JSON document. Slice sums off by less than 1e-9 are
// renormalized; anything worse is rejected.
RelayChannel load_channel(const std::string& text);
RelayChannel load_channel_file(const std::string& path);

// Full-precision round-trippable JSON form.
std::string serialize_channel(const RelayChannel& ch);

// One memoryless channel use. Deterministic given the rng state.
std::pair<int, int> sample_output(const RelayChannel& ch, int x, int x1, Rng& rng);

}  // namespace relaylab
