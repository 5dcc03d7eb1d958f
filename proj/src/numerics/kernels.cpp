#include "arforge/numerics/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace arforge::numerics::kernels {

namespace {

constexpr std::size_t kChunk = 32;

// acc[0..W) = sum_p a[p * a_stride] * b[p * m + j0 ..]
template <std::size_t W>
inline void dot_chunk(const double *a, std::size_t a_stride, const double *b, std::size_t m,
                      std::size_t k, std::size_t j0, double *out, bool accumulate) {
    double acc[W] = {};
    for (std::size_t p = 0; p < k; ++p) {
        const double ap = a[p * a_stride];
        const double *brow = b + p * m + j0;
        for (std::size_t jj = 0; jj < W; ++jj) acc[jj] += ap * brow[jj];
    }
    if (accumulate) {
        for (std::size_t jj = 0; jj < W; ++jj) out[jj] += acc[jj];
    } else {
        for (std::size_t jj = 0; jj < W; ++jj) out[jj] = acc[jj];
    }
}

inline void dot_tail(const double *a, std::size_t a_stride, const double *b, std::size_t m,
                     std::size_t k, std::size_t j0, std::size_t width, double *out,
                     bool accumulate) {
    double acc[kChunk] = {};
    for (std::size_t p = 0; p < k; ++p) {
        const double ap = a[p * a_stride];
        const double *brow = b + p * m + j0;
        for (std::size_t jj = 0; jj < width; ++jj) acc[jj] += ap * brow[jj];
    }
    for (std::size_t jj = 0; jj < width; ++jj) out[jj] = accumulate ? out[jj] + acc[jj] : acc[jj];
}

// One output row: out[0..m) (+)= sum_p a[p * a_stride] * b[p, :]
inline void row_product(const double *a, std::size_t a_stride, const double *b, std::size_t k,
                        std::size_t m, double *out, bool accumulate) {
    std::size_t j0 = 0;
    for (; j0 + kChunk <= m; j0 += kChunk)
        dot_chunk<kChunk>(a, a_stride, b, m, k, j0, out + j0, accumulate);
    if (j0 < m) dot_tail(a, a_stride, b, m, k, j0, m - j0, out + j0, accumulate);
}

} // namespace

void gemm_nn(const double *a, const double *b, double *c, std::size_t n, std::size_t k,
             std::size_t m, bool accumulate) {
    for (std::size_t i = 0; i < n; ++i) row_product(a + i * k, 1, b, k, m, c + i * m, accumulate);
}

void gemm_nt(const double *a, const double *b, double *c, std::size_t n, std::size_t k,
             std::size_t m, bool accumulate) {
    std::vector<double> bt(k * m);
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t p = 0; p < k; ++p) bt[p * m + r] = b[r * k + p];
    gemm_nn(a, bt.data(), c, n, k, m, accumulate);
}

void gemm_tn(const double *a, const double *b, double *c, std::size_t n, std::size_t k,
             std::size_t m, bool accumulate) {
    for (std::size_t p = 0; p < k; ++p) row_product(a + p, k, b, n, m, c + p * m, accumulate);
}

void softmax_row(std::span<double> row, std::size_t valid) {
    valid = std::min(valid, row.size());
    if (valid == 0) {
        std::fill(row.begin(), row.end(), 0.0);
        return;
    }
    double mx = row[0];
    for (std::size_t j = 1; j < valid; ++j) mx = std::max(mx, row[j]);
    double total = 0.0;
    for (std::size_t j = 0; j < valid; ++j) {
        row[j] = std::exp(row[j] - mx);
        total += row[j];
    }
    const double inv = 1.0 / total;
    for (std::size_t j = 0; j < valid; ++j) row[j] *= inv;
    for (std::size_t j = valid; j < row.size(); ++j) row[j] = 0.0;
}

} // namespace arforge::numerics::kernels
