#pragma once

#include <cstddef>
#include <functional>

#include "keratoflow/matrix.hpp"

// Dense kernels behind forward/backward. Every kernel has a serial reference
// in `kernels::serial` and an OpenMP version in `kernels`. Both compute each
// output element with the same reduction order, so their results are
// bit-identical; the tests rely on that, and so does run-to-run determinism
// with any thread count.
namespace keratoflow::nn::kernels {

namespace serial {

/// out = a * b^T  (a: m x k, b: n x k, out: m x n)
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out);
/// out = a^T * b  (a: r x m, b: r x n, out: m x n)
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out);
/// out = a * b    (a: m x k, b: k x n, out: m x n)
void matmul_nn(const Matrix& a, const Matrix& b, Matrix& out);
/// out[r][c] += bias[c]
void add_row_vector(Matrix& out, std::span<const double> bias);
/// sums[c] = sum_r m[r][c]
void column_sums(const Matrix& m, std::span<double> sums);

}  // namespace serial

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_nn(const Matrix& a, const Matrix& b, Matrix& out);
void add_row_vector(Matrix& out, std::span<const double> bias);
void column_sums(const Matrix& m, std::span<double> sums);

/// Below this many multiply-adds a kernel stays on the calling thread.
inline constexpr std::size_t kParallelThreshold = 1u << 16;

/// Runs body(i) for i in [0, count). With jobs > 1 the indices are spread
/// over an OpenMP team; the first exception thrown by any index is rethrown
/// after the loop. Callers store results by index, so output never depends
/// on scheduling.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

/// Number of threads OpenMP would use for a parallel region.
int max_threads();

}  // namespace keratoflow::nn::kernels
