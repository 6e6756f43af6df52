#include <doctest.h>

#include <vector>

#include "relaylab/kernels.hpp"
#include "relaylab/rng.hpp"

using namespace relaylab;

namespace {

std::vector<double> random_vec(Rng& rng, size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.next_unit() * 2.0 - 0.5;
    return v;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("dispatched kernels match the scalar reference") {
    Rng rng(1);
    // Sizes straddling vector-width boundaries.
    for (size_t n : {size_t{1}, size_t{3}, size_t{4}, size_t{7}, size_t{64}, size_t{1001}, size_t{4096}}) {
        const auto a = random_vec(rng, n);
        const auto b = random_vec(rng, n);
        CHECK(kernels::sum(a.data(), n) == doctest::Approx(kernels::ref::sum(a.data(), n)).epsilon(1e-13));
        CHECK(kernels::dot(a.data(), b.data(), n) ==
              doctest::Approx(kernels::ref::dot(a.data(), b.data(), n)).epsilon(1e-13));
        CHECK(kernels::l1_diff(a.data(), b.data(), n) ==
              doctest::Approx(kernels::ref::l1_diff(a.data(), b.data(), n)).epsilon(1e-13));
        CHECK(kernels::max_abs_diff(a.data(), b.data(), n) ==
              doctest::Approx(kernels::ref::max_abs_diff(a.data(), b.data(), n)).epsilon(1e-13));

        auto y1 = b, y2 = b;
        kernels::axpy(y1.data(), 0.37, a.data(), n);
        kernels::ref::axpy(y2.data(), 0.37, a.data(), n);
        for (size_t i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-13));
    }
}

TEST_CASE("block sums match the reference on awkward shapes") {
    Rng rng(2);
    for (auto [nblocks, block] : std::vector<std::pair<size_t, size_t>>{{1, 1}, {5, 3}, {32, 32}, {7, 1024}}) {
        const auto x = random_vec(rng, nblocks * block);
        std::vector<double> o1(nblocks), o2(nblocks);
        kernels::sum_blocks(x.data(), nblocks, block, o1.data());
        kernels::ref::sum_blocks(x.data(), nblocks, block, o2.data());
        for (size_t i = 0; i < nblocks; ++i) CHECK(o1[i] == doctest::Approx(o2[i]).epsilon(1e-13));
    }
}

TEST_CASE("plogp honors the zero convention") {
    const std::vector<double> p{0.0, 1e-16, 0.5, 0.5};
    CHECK(kernels::neg_plogp_sum(p.data(), p.size()) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    const bool known_path = kernels::active_path() == "avx2" || kernels::active_path() == "scalar";
    CHECK(known_path);
}

}  // TEST_SUITE
