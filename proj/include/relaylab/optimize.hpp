#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "relaylab/rates.hpp"

namespace relaylab {

struct SearchBudget {
    int restarts = 8;      // random restarts (uniform / lifted starts are added on top)
    int sweeps = 20;       // coordinate-ascent passes per restart
    int grid_points = 5;   // per simplex dimension, grid mode
    uint64_t seed = 0;
};

enum class Scheme { new_scheme, caf };

const char* scheme_name(Scheme s);

struct SearchResult {
    std::variant<NewSchemeParams, CafParams> best_params;
    double best_rate = 0;
    std::vector<std::pair<int, double>> trace;  // (restart index, best rate so far)
    std::string mode;                           // "random_ascent" | "grid"
};

// Local search over the scheme's free conditional rows: Dirichlet restarts
// plus a deterministic uniform start (and, for the new scheme, a start at
// the lifted CAF point when provided). Ascent moves one row toward/away
// from a vertex with a halving step, accepting only improvements. The CAF
// objective is the compact form. Deterministic given the budget seed;
// restarts run in parallel (RELAYLAB_THREADS caps workers).
SearchResult optimize(const RelayChannel& ch, Scheme scheme, const SearchBudget& budget,
                      const std::optional<CafParams>& lifted_caf = std::nullopt, int yhat_size = 0);

// Exhaustive grid over all free rows; binary alphabets only, at most 11
// points per simplex dimension.
SearchResult optimize_grid(const RelayChannel& ch, Scheme scheme, int grid_points, int yhat_size = 0);

// Grid sweep evaluating every CAF form at every point. Feeds the
// region-level equivalence check.
struct GridEquivalence {
    int grid_points = 0;
    long points = 0;
    double max_rate_theorem2 = 0;
    double max_rate_form1 = 0;
    double max_rate_form2 = 0;
    double max_rate_form3 = 0;
    double max_rate_compact = 0;
    double max_pointwise_form3_compact_gap = 0;
    double max_rate_spread_f123c = 0;  // spread of the four form maxima
};

GridEquivalence grid_caf_equivalence(const RelayChannel& ch, int grid_points, int yhat_size = 0);

// Worker-pool size: RELAYLAB_THREADS when set, else hardware concurrency.
int worker_count();

}  // namespace relaylab
