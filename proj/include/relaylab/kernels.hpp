#pragma once

#include <cstddef>
#include <string>

namespace relaylab::kernels {

// Dense reduction kernels behind the probability-tensor machinery.
// Scalar reference implementations are always available under ref::;
// the top-level entry points dispatch to an AVX2 variant at runtime when
// the CPU supports it (set RELAYLAB_SIMD=scalar to force the reference path).

namespace ref {
double sum(const double* x, size_t n);
double dot(const double* a, const double* b, size_t n);
double l1_diff(const double* a, const double* b, size_t n);
double max_abs_diff(const double* a, const double* b, size_t n);
void axpy(double* y, double a, const double* x, size_t n);
// out[i] = sum of x[i*block .. (i+1)*block)
void sum_blocks(const double* x, size_t nblocks, size_t block, double* out);
}  // namespace ref

double sum(const double* x, size_t n);
double dot(const double* a, const double* b, size_t n);
double l1_diff(const double* a, const double* b, size_t n);
double max_abs_diff(const double* a, const double* b, size_t n);
void axpy(double* y, double a, const double* x, size_t n);
void sum_blocks(const double* x, size_t nblocks, size_t block, double* out);

// -sum p ln p with the 0 ln 0 = 0 convention; entries below 1e-15 are
// treated as exact zeros. Scalar on all paths: transcendental accuracy is
// load-bearing for the tolerance gates.
double neg_plogp_sum(const double* p, size_t n);

// Name of the active instruction path ("scalar" or "avx2").
const std::string& active_path();

}  // namespace relaylab::kernels
