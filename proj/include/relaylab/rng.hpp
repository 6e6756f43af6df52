#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace relaylab {

// Deterministic, platform-independent generators. std:: distributions are
// not pinned across standard libraries, so sampling is done by hand.

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Mix a seed with stream labels so parallel workers get disjoint streams.
inline uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b = 0) {
    uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL + a * 0xbf58476d1ce4e5b9ULL + b * 0x94d049bb133111ebULL);
    splitmix64(s);
    return splitmix64(s);
}

class Rng {
  public:
    explicit Rng(uint64_t seed) {
        uint64_t s = seed;
        for (auto& w : state_) w = splitmix64(s);
    }

    // xoshiro256**
    uint64_t next_u64() {
        const uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1).
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n).
    int next_below(int n) { return static_cast<int>(next_u64() % static_cast<uint64_t>(n)); }

    // Draw from a probability vector by CDF walk; weights assumed normalized.
    int categorical(std::span<const double> p) {
        double u = next_unit();
        double acc = 0.0;
        for (size_t i = 0; i + 1 < p.size(); ++i) {
            acc += p[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(p.size()) - 1;
    }

    double exponential() { return -std::log1p(-next_unit()); }

    // Flat Dirichlet point on the (n-1)-simplex.
    std::vector<double> dirichlet_row(int n) {
        std::vector<double> row(n);
        double s = 0.0;
        for (auto& v : row) {
            v = exponential() + 1e-300;
            s += v;
        }
        for (auto& v : row) v /= s;
        return row;
    }

  private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t state_[4];
};

}  // namespace relaylab
