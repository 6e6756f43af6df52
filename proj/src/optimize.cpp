#include "relaylab/optimize.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>

#include "relaylab/rng.hpp"

namespace relaylab {

namespace {

constexpr double kImproveTol = 1e-12;

// Free parameters as a flat list of simplex rows; shape metadata rebuilds
// the scheme objects.
struct FreeRows {
    std::vector<std::vector<double>> rows;
};

struct RowShape {
    std::vector<int> sizes;  // row lengths in order
};

RowShape new_scheme_shape(const RelayChannel& ch, int yhat_size) {
    RowShape s;
    for (int r = 0; r < ch.x_alpha.size; ++r) s.sizes.push_back(ch.x_alpha.size);
    for (int r = 0; r < yhat_size; ++r) s.sizes.push_back(ch.x1_alpha.size);
    for (int r = 0; r < ch.y1_alpha.size * ch.x1_alpha.size; ++r) s.sizes.push_back(yhat_size);
    return s;
}

RowShape caf_shape(const RelayChannel& ch, int yhat_size) {
    RowShape s;
    s.sizes.push_back(ch.x_alpha.size);
    s.sizes.push_back(ch.x1_alpha.size);
    for (int r = 0; r < ch.y1_alpha.size * ch.x1_alpha.size; ++r) s.sizes.push_back(yhat_size);
    return s;
}

std::vector<double> flatten_range(const FreeRows& f, size_t begin, size_t count) {
    std::vector<double> out;
    for (size_t i = begin; i < begin + count; ++i) out.insert(out.end(), f.rows[i].begin(), f.rows[i].end());
    return out;
}

NewSchemeParams rows_to_new_params(const RelayChannel& ch, int yhat_size, const FreeRows& f) {
    const size_t nx = static_cast<size_t>(ch.x_alpha.size);
    const size_t nyh = static_cast<size_t>(yhat_size);
    const size_t ncomp = static_cast<size_t>(ch.y1_alpha.size) * ch.x1_alpha.size;
    return make_new_scheme_params(ch, yhat_size, flatten_range(f, 0, nx), flatten_range(f, nx, nyh),
                                  flatten_range(f, nx + nyh, ncomp));
}

CafParams rows_to_caf_params(const RelayChannel& ch, int yhat_size, const FreeRows& f) {
    const size_t ncomp = static_cast<size_t>(ch.y1_alpha.size) * ch.x1_alpha.size;
    return make_caf_params(ch, yhat_size, f.rows[0], f.rows[1], flatten_range(f, 2, ncomp));
}

FreeRows uniform_start(const RowShape& shape) {
    FreeRows f;
    for (int n : shape.sizes) f.rows.emplace_back(static_cast<size_t>(n), 1.0 / n);
    return f;
}

FreeRows dirichlet_start(const RowShape& shape, Rng& rng) {
    FreeRows f;
    for (int n : shape.sizes) f.rows.push_back(rng.dirichlet_row(n));
    return f;
}

// Move toward (+) or away from (-) vertex v by step t, projected back onto
// the simplex.
std::vector<double> step_row(const std::vector<double>& row, int v, double t) {
    std::vector<double> out = row;
    double sum = 0.0;
    for (size_t i = 0; i < out.size(); ++i) {
        const double target = (static_cast<int>(i) == v) ? 1.0 : 0.0;
        out[i] += t * (target - row[i]);
        if (out[i] < 0.0) out[i] = 0.0;
        sum += out[i];
    }
    if (sum <= 0.0) return row;
    for (auto& x : out) x /= sum;
    return out;
}

struct AscentState {
    FreeRows point;
    double rate = 0;
};

void coordinate_ascent(AscentState& st, const std::function<double(const FreeRows&)>& eval, int sweeps) {
    for (int pass = 0; pass < sweeps; ++pass) {
        bool improved = false;
        for (size_t r = 0; r < st.point.rows.size(); ++r) {
            const int n = static_cast<int>(st.point.rows[r].size());
            for (int v = 0; v < n; ++v) {
                for (double dir : {1.0, -1.0}) {
                    double t = 0.25;
                    for (int h = 0; h < 8; ++h, t *= 0.5) {
                        std::vector<double> cand = step_row(st.point.rows[r], v, dir * t);
                        if (cand == st.point.rows[r]) continue;
                        FreeRows probe = st.point;
                        probe.rows[r] = std::move(cand);
                        const double rate = eval(probe);
                        if (rate > st.rate + kImproveTol) {
                            st.point = std::move(probe);
                            st.rate = rate;
                            improved = true;
                            break;
                        }
                    }
                }
            }
        }
        if (!improved) break;
    }
}

void parallel_for(int n, const std::function<void(int)>& fn) {
    const int workers = std::min(worker_count(), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            try {
                for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace

int worker_count() {
    if (const char* env = std::getenv("RELAYLAB_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

const char* scheme_name(Scheme s) { return s == Scheme::new_scheme ? "new" : "caf"; }

SearchResult optimize(const RelayChannel& ch, Scheme scheme, const SearchBudget& budget,
                      const std::optional<CafParams>& lifted_caf, int yhat_size) {
    if (budget.restarts < 1 || budget.sweeps < 1) throw ArgumentError("budget fields must be positive");
    if (yhat_size <= 0) yhat_size = ch.y1_alpha.size;

    const RowShape shape = scheme == Scheme::new_scheme ? new_scheme_shape(ch, yhat_size)
                                                        : caf_shape(ch, yhat_size);
    std::function<double(const FreeRows&)> eval;
    if (scheme == Scheme::new_scheme) {
        eval = [&ch, yhat_size](const FreeRows& f) {
            return evaluate_new_scheme(ch, rows_to_new_params(ch, yhat_size, f)).achievable_rate;
        };
    } else {
        eval = [&ch, yhat_size](const FreeRows& f) {
            return evaluate_caf(ch, rows_to_caf_params(ch, yhat_size, f), CafForm::compact).achievable_rate;
        };
    }

    std::vector<FreeRows> starts;
    starts.push_back(uniform_start(shape));
    if (scheme == Scheme::new_scheme && lifted_caf.has_value()) {
        if (lifted_caf->yhat.size != yhat_size) throw ShapeError("lifted CAF point has a different yhat size");
        const NewSchemeParams lifted = lift_caf_params(ch, *lifted_caf);
        FreeRows f;
        const auto push_rows = [&f](const ConditionalKernel& k) {
            for (size_t r = 0; r < k.rows(); ++r) f.rows.emplace_back(k.row(r).begin(), k.row(r).end());
        };
        push_rows(lifted.input_chain);
        push_rows(lifted.relay_map);
        push_rows(lifted.compressor);
        starts.push_back(std::move(f));
    }
    for (int r = 0; r < budget.restarts; ++r) {
        Rng rng(mix_seed(budget.seed, static_cast<uint64_t>(r), 0xA5C3));
        starts.push_back(dirichlet_start(shape, rng));
    }

    std::vector<AscentState> states(starts.size());
    parallel_for(static_cast<int>(starts.size()), [&](int i) {
        AscentState st{starts[static_cast<size_t>(i)], 0.0};
        st.rate = eval(st.point);
        coordinate_ascent(st, eval, budget.sweeps);
        states[static_cast<size_t>(i)] = std::move(st);
    });

    SearchResult res;
    res.mode = "random_ascent";
    size_t best = 0;
    for (size_t i = 1; i < states.size(); ++i) {
        if (states[i].rate > states[best].rate) best = i;  // ties keep the lowest index
    }
    double running = -1.0;
    for (size_t i = 0; i < states.size(); ++i) {
        running = std::max(running, states[i].rate);
        res.trace.emplace_back(static_cast<int>(i), running);
    }
    res.best_rate = states[best].rate;
    if (scheme == Scheme::new_scheme)
        res.best_params = rows_to_new_params(ch, yhat_size, states[best].point);
    else
        res.best_params = rows_to_caf_params(ch, yhat_size, states[best].point);
    return res;
}

namespace {

// Odometer over grid assignments: each row gets one of `g` vertex weights.
bool advance_digits(std::vector<int>& digits, int base) {
    for (size_t i = digits.size(); i-- > 0;) {
        if (++digits[i] < base) return true;
        digits[i] = 0;
    }
    return false;
}

}  // namespace

SearchResult optimize_grid(const RelayChannel& ch, Scheme scheme, int grid_points, int yhat_size) {
    if (yhat_size <= 0) yhat_size = ch.y1_alpha.size;
    if (grid_points < 2 || grid_points > 11) throw ArgumentError("grid mode supports 2..11 points per dimension");
    const RowShape shape = scheme == Scheme::new_scheme ? new_scheme_shape(ch, yhat_size)
                                                        : caf_shape(ch, yhat_size);
    for (int n : shape.sizes) {
        if (n != 2) throw SizeError("grid mode is restricted to binary alphabets");
    }
    double total = 1.0;
    for (size_t i = 0; i < shape.sizes.size(); ++i) total *= grid_points;
    if (total > 5e6) throw SizeError("grid too large");

    std::function<double(const FreeRows&)> eval;
    if (scheme == Scheme::new_scheme) {
        eval = [&ch, yhat_size](const FreeRows& f) {
            return evaluate_new_scheme(ch, rows_to_new_params(ch, yhat_size, f)).achievable_rate;
        };
    } else {
        eval = [&ch, yhat_size](const FreeRows& f) {
            return evaluate_caf(ch, rows_to_caf_params(ch, yhat_size, f), CafForm::compact).achievable_rate;
        };
    }

    std::vector<int> digits(shape.sizes.size(), 0);
    FreeRows point = uniform_start(shape);
    SearchResult res;
    res.mode = "grid";
    res.best_rate = -1.0;
    FreeRows best_point = point;
    do {
        for (size_t r = 0; r < digits.size(); ++r) {
            const double t = static_cast<double>(digits[r]) / (grid_points - 1);
            point.rows[r] = {1.0 - t, t};
        }
        const double rate = eval(point);
        if (rate > res.best_rate) {
            res.best_rate = rate;
            best_point = point;
        }
    } while (advance_digits(digits, grid_points));

    res.trace.emplace_back(0, res.best_rate);
    if (scheme == Scheme::new_scheme)
        res.best_params = rows_to_new_params(ch, yhat_size, best_point);
    else
        res.best_params = rows_to_caf_params(ch, yhat_size, best_point);
    return res;
}

GridEquivalence grid_caf_equivalence(const RelayChannel& ch, int grid_points, int yhat_size) {
    if (yhat_size <= 0) yhat_size = ch.y1_alpha.size;
    if (grid_points < 2 || grid_points > 11) throw ArgumentError("grid mode supports 2..11 points per dimension");
    const RowShape shape = caf_shape(ch, yhat_size);
    for (int n : shape.sizes) {
        if (n != 2) throw SizeError("grid mode is restricted to binary alphabets");
    }

    GridEquivalence g;
    g.grid_points = grid_points;
    std::vector<int> digits(shape.sizes.size(), 0);
    FreeRows point = uniform_start(shape);
    do {
        for (size_t r = 0; r < digits.size(); ++r) {
            const double t = static_cast<double>(digits[r]) / (grid_points - 1);
            point.rows[r] = {1.0 - t, t};
        }
        const CafParams p = rows_to_caf_params(ch, yhat_size, point);
        const CafTerms terms = compute_caf_terms(caf_joint(ch, p));
        const double r_t2 = report_for_form(terms, CafForm::theorem2).achievable_rate;
        const double r_f1 = report_for_form(terms, CafForm::form1).achievable_rate;
        const double r_f2 = report_for_form(terms, CafForm::form2).achievable_rate;
        const double r_f3 = report_for_form(terms, CafForm::form3).achievable_rate;
        const double r_c = report_for_form(terms, CafForm::compact).achievable_rate;
        g.max_rate_theorem2 = std::max(g.max_rate_theorem2, r_t2);
        g.max_rate_form1 = std::max(g.max_rate_form1, r_f1);
        g.max_rate_form2 = std::max(g.max_rate_form2, r_f2);
        g.max_rate_form3 = std::max(g.max_rate_form3, r_f3);
        g.max_rate_compact = std::max(g.max_rate_compact, r_c);
        g.max_pointwise_form3_compact_gap =
            std::max(g.max_pointwise_form3_compact_gap, std::fabs(r_f3 - r_c));
        ++g.points;
    } while (advance_digits(digits, grid_points));

    const double hi = std::max({g.max_rate_form1, g.max_rate_form2, g.max_rate_form3, g.max_rate_compact});
    const double lo = std::min({g.max_rate_form1, g.max_rate_form2, g.max_rate_form3, g.max_rate_compact});
    g.max_rate_spread_f123c = hi - lo;
    return g;
}

}  // namespace relaylab
