#include "keratoflow/nn/kernels.hpp"

#include <omp.h>

#include <exception>
#include <vector>

#include "keratoflow/error.hpp"

namespace keratoflow::nn::kernels {

namespace {

// Four independent accumulators with a fixed combination order.
inline double dot(const double* x, const double* y, std::size_t n) {
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    a0 += x[i] * y[i];
    a1 += x[i + 1] * y[i + 1];
    a2 += x[i + 2] * y[i + 2];
    a3 += x[i + 3] * y[i + 3];
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += x[i] * y[i];
  return ((a0 + a1) + (a2 + a3)) + tail;
}

inline void nt_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
  const std::size_t k = a.cols();
  const double* arow = a.data() + i * k;
  double* orow = out.data() + i * out.cols();
  for (std::size_t j = 0; j < b.rows(); ++j) orow[j] = dot(arow, b.data() + j * k, k);
}

inline void tn_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
  const std::size_t n = b.cols();
  double* orow = out.data() + i * n;
  for (std::size_t j = 0; j < n; ++j) orow[j] = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double scale = a(r, i);
    const double* brow = b.data() + r * n;
    for (std::size_t j = 0; j < n; ++j) orow[j] += scale * brow[j];
  }
}

inline void nn_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
  const std::size_t n = b.cols();
  double* orow = out.data() + i * n;
  for (std::size_t j = 0; j < n; ++j) orow[j] = 0.0;
  for (std::size_t p = 0; p < a.cols(); ++p) {
    const double scale = a(i, p);
    const double* brow = b.data() + p * n;
    for (std::size_t j = 0; j < n; ++j) orow[j] += scale * brow[j];
  }
}

void check_nt(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: inner dimensions differ (" + a.shape_string() + " vs " +
                     b.shape_string() + ")");
  }
  if (out.rows() != a.rows() || out.cols() != b.rows()) out = Matrix(a.rows(), b.rows());
}

void check_tn(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: row counts differ (" + a.shape_string() + " vs " +
                     b.shape_string() + ")");
  }
  if (out.rows() != a.cols() || out.cols() != b.cols()) out = Matrix(a.cols(), b.cols());
}

void check_nn(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul_nn: inner dimensions differ (" + a.shape_string() + " vs " +
                     b.shape_string() + ")");
  }
  if (out.rows() != a.rows() || out.cols() != b.cols()) out = Matrix(a.rows(), b.cols());
}

void check_bias(const Matrix& out, std::span<const double> bias) {
  if (bias.size() != out.cols()) {
    throw ShapeError("bias of length " + std::to_string(bias.size()) + " does not match " +
                     out.shape_string());
  }
}

bool worth_parallel(std::size_t work) { return work >= kParallelThreshold && !omp_in_parallel(); }

}  // namespace

namespace serial {

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
  check_nt(a, b, out);
  for (std::size_t i = 0; i < a.rows(); ++i) nt_row(a, b, out, i);
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
  check_tn(a, b, out);
  for (std::size_t i = 0; i < a.cols(); ++i) tn_row(a, b, out, i);
}

void matmul_nn(const Matrix& a, const Matrix& b, Matrix& out) {
  check_nn(a, b, out);
  for (std::size_t i = 0; i < a.rows(); ++i) nn_row(a, b, out, i);
}

void add_row_vector(Matrix& out, std::span<const double> bias) {
  check_bias(out, bias);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias[c];
  }
}

void column_sums(const Matrix& m, std::span<double> sums) {
  if (sums.size() != m.cols()) throw ShapeError("column_sums: output length mismatch");
  for (std::size_t c = 0; c < m.cols(); ++c) sums[c] = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) sums[c] += row[c];
  }
}

}  // namespace serial

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
  check_nt(a, b, out);
  const auto rows = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static) if (worth_parallel(a.rows() * b.rows() * a.cols()))
  for (std::ptrdiff_t i = 0; i < rows; ++i) nt_row(a, b, out, static_cast<std::size_t>(i));
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
  check_tn(a, b, out);
  const auto rows = static_cast<std::ptrdiff_t>(a.cols());
#pragma omp parallel for schedule(static) if (worth_parallel(a.cols() * b.cols() * a.rows()))
  for (std::ptrdiff_t i = 0; i < rows; ++i) tn_row(a, b, out, static_cast<std::size_t>(i));
}

void matmul_nn(const Matrix& a, const Matrix& b, Matrix& out) {
  check_nn(a, b, out);
  const auto rows = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static) if (worth_parallel(a.rows() * b.cols() * a.cols()))
  for (std::ptrdiff_t i = 0; i < rows; ++i) nn_row(a, b, out, static_cast<std::size_t>(i));
}

void add_row_vector(Matrix& out, std::span<const double> bias) {
  check_bias(out, bias);
  const auto rows = static_cast<std::ptrdiff_t>(out.rows());
#pragma omp parallel for schedule(static) if (worth_parallel(out.size()))
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    auto row = out.row(static_cast<std::size_t>(r));
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias[c];
  }
}

void column_sums(const Matrix& m, std::span<double> sums) {
  if (sums.size() != m.cols()) throw ShapeError("column_sums: output length mismatch");
  const auto cols = static_cast<std::ptrdiff_t>(m.cols());
  // Each column is summed top to bottom, matching the serial order.
#pragma omp parallel for schedule(static) if (worth_parallel(m.size()))
  for (std::ptrdiff_t c = 0; c < cols; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) s += m(r, static_cast<std::size_t>(c));
    sums[static_cast<std::size_t>(c)] = s;
  }
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  // One slot per index so the rethrown failure is the lowest failing index,
  // whatever order the threads ran in.
  std::vector<std::exception_ptr> failures(count);
  const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      failures[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace keratoflow::nn::kernels
