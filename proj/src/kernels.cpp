#include "relaylab/kernels.hpp"

#include <cmath>
#include <cstdlib>

#if defined(__x86_64__) || defined(__i386__)
#define RELAYLAB_X86 1
#include <immintrin.h>
#else
#define RELAYLAB_X86 0
#endif

namespace relaylab::kernels {

namespace ref {

double sum(const double* x, size_t n) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += x[i];
    return s;
}

double dot(const double* a, const double* b, size_t n) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double l1_diff(const double* a, const double* b, size_t n) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += std::fabs(a[i] - b[i]);
    return s;
}

double max_abs_diff(const double* a, const double* b, size_t n) {
    double m = 0.0;
    for (size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

void axpy(double* y, double a, const double* x, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void sum_blocks(const double* x, size_t nblocks, size_t block, double* out) {
    for (size_t i = 0; i < nblocks; ++i) {
        const double* p = x + i * block;
        double s = 0.0;
        for (size_t j = 0; j < block; ++j) s += p[j];
        out[i] = s;
    }
}

}  // namespace ref

#if RELAYLAB_X86

namespace avx2 {

__attribute__((target("avx2"))) static double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

__attribute__((target("avx2"))) double sum(const double* x, size_t n) {
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

__attribute__((target("avx2"))) double dot(const double* a, const double* b, size_t n) {
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    double s = hsum(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

__attribute__((target("avx2"))) double l1_diff(const double* a, const double* b, size_t n) {
    const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_add_pd(acc, _mm256_and_pd(d, mask));
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += std::fabs(a[i] - b[i]);
    return s;
}

__attribute__((target("avx2"))) double max_abs_diff(const double* a, const double* b, size_t n) {
    const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_max_pd(acc, _mm256_and_pd(d, mask));
    }
    __m128d lo = _mm256_castpd256_pd128(acc);
    __m128d hi = _mm256_extractf128_pd(acc, 1);
    lo = _mm_max_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    double m = _mm_cvtsd_f64(_mm_max_sd(lo, sh));
    for (; i < n; ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

__attribute__((target("avx2"))) void axpy(double* y, double a, const double* x, size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_add_pd(vy, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

__attribute__((target("avx2"))) void sum_blocks(const double* x, size_t nblocks, size_t block, double* out) {
    for (size_t i = 0; i < nblocks; ++i) out[i] = sum(x + i * block, block);
}

}  // namespace avx2

#endif  // RELAYLAB_X86

namespace {

struct Dispatch {
    double (*sum)(const double*, size_t) = ref::sum;
    double (*dot)(const double*, const double*, size_t) = ref::dot;
    double (*l1_diff)(const double*, const double*, size_t) = ref::l1_diff;
    double (*max_abs_diff)(const double*, const double*, size_t) = ref::max_abs_diff;
    void (*axpy)(double*, double, const double*, size_t) = ref::axpy;
    void (*sum_blocks)(const double*, size_t, size_t, double*) = ref::sum_blocks;
    std::string path = "scalar";
};

Dispatch make_dispatch() {
    Dispatch d;
    const char* force = std::getenv("RELAYLAB_SIMD");
    if (force != nullptr && std::string(force) == "scalar") return d;
#if RELAYLAB_X86
    if (__builtin_cpu_supports("avx2")) {
        d.sum = avx2::sum;
        d.dot = avx2::dot;
        d.l1_diff = avx2::l1_diff;
        d.max_abs_diff = avx2::max_abs_diff;
        d.axpy = avx2::axpy;
        d.sum_blocks = avx2::sum_blocks;
        d.path = "avx2";
    }
#endif
    return d;
}

const Dispatch& dispatch() {
    static const Dispatch d = make_dispatch();
    return d;
}

}  // namespace

double sum(const double* x, size_t n) { return dispatch().sum(x, n); }
double dot(const double* a, const double* b, size_t n) { return dispatch().dot(a, b, n); }
double l1_diff(const double* a, const double* b, size_t n) { return dispatch().l1_diff(a, b, n); }
double max_abs_diff(const double* a, const double* b, size_t n) { return dispatch().max_abs_diff(a, b, n); }
void axpy(double* y, double a, const double* x, size_t n) { dispatch().axpy(y, a, x, n); }
void sum_blocks(const double* x, size_t nblocks, size_t block, double* out) {
    dispatch().sum_blocks(x, nblocks, block, out);
}

double neg_plogp_sum(const double* p, size_t n) {
    double h = 0.0;
    for (size_t i = 0; i < n; ++i) {
        if (p[i] >= 1e-15) h -= p[i] * std::log(p[i]);
    }
    return h;
}

const std::string& active_path() { return dispatch().path; }

}  // namespace relaylab::kernels
