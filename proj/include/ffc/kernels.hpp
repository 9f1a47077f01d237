#pragma once

#include <cstddef>

// Numeric inner-loop kernels shared by the clustering, standardization and
// cluster-quality code. Every kernel has a scalar reference implementation
// and an AVX2 variant selected at runtime; both use the same fixed 4-lane
// accumulation order, so results are bit-identical regardless of the
// selected instruction set.

namespace ffc::kern {

enum class Isa { Scalar, Avx2 };

// Instruction set the dispatch table currently points at.
Isa active();

// True if the given ISA can run on this machine.
bool supports(Isa isa);

// Repoint the dispatch table (tests, FFC_KERNELS env override). Throws if
// the ISA is not supported here.
void force(Isa isa);

// Squared Euclidean distance between a[0..n) and b[0..n).
double l2sq(const double* a, const double* b, std::size_t n);

// Manhattan (L1) distance between a[0..n) and b[0..n).
double l1(const double* a, const double* b, std::size_t n);

// Sum of x[0..n).
double sum(const double* x, std::size_t n);

// acc[i] += x[i] for i in [0, n).
void add(double* acc, const double* x, std::size_t n);

// acc[i] += (x[i] - mu[i])^2 for i in [0, n).
void sq_dev(double* acc, const double* x, const double* mu, std::size_t n);

}  // namespace ffc::kern
