#pragma once

#include <cstddef>
#include <span>

namespace arforge::numerics::kernels {

// Dense row-major products. Every output row is produced by the same
// instruction sequence regardless of how many rows are in the call, so
// results for a row never depend on what it was batched with.

/// C[n,m] (+)= A[n,k] * B[k,m]
void gemm_nn(const double *a, const double *b, double *c, std::size_t n, std::size_t k,
             std::size_t m, bool accumulate);

/// C[n,m] (+)= A[n,k] * B[m,k]^T
void gemm_nt(const double *a, const double *b, double *c, std::size_t n, std::size_t k,
             std::size_t m, bool accumulate);

/// C[k,m] (+)= A[n,k]^T * B[n,m]
void gemm_tn(const double *a, const double *b, double *c, std::size_t n, std::size_t k,
             std::size_t m, bool accumulate);

/// In-place softmax of one row; entries at or beyond `valid` are set to zero.
void softmax_row(std::span<double> row, std::size_t valid);

} // namespace arforge::numerics::kernels
