#pragma once

#include <cstddef>

#include "nids/matrix.hpp"

// Data-parallel kernels used by the hot paths (tree training, forest scoring,
// network forward/backward, row encoding). Every kernel has a serial reference
// implementation and an OpenMP one; both produce bitwise-identical results
// because parallelism is only over independent outputs and every floating-point
// reduction keeps a fixed order. The active backend is a process-global switch,
// default openmp (NIDS_BACKEND=serial overrides at startup).

namespace nids::kernels {

enum class Backend { serial, openmp };

Backend backend();
void set_backend(Backend b);
int thread_count();

namespace detail {
void run_indexed(std::size_t n, void* ctx, void (*fn)(void*, std::size_t));
}

// body(i) must only write state owned by index i.
template <class F>
void parallel_for(std::size_t n, F&& body) {
    detail::run_indexed(n, const_cast<void*>(static_cast<const void*>(&body)),
                        [](void* ctx, std::size_t i) { (*static_cast<F*>(ctx))(i); });
}

// Y (nr x no) = X (nr x ni) * W^T (W is no x ni) + b
void linear_forward_serial(const Matrix& X, const Matrix& W, const std::vector<double>& b, Matrix& Y);
void linear_forward_omp(const Matrix& X, const Matrix& W, const std::vector<double>& b, Matrix& Y);
void linear_forward(const Matrix& X, const Matrix& W, const std::vector<double>& b, Matrix& Y);

// dX (nr x ni) = dY (nr x no) * W (no x ni)
void linear_backward_data_serial(const Matrix& dY, const Matrix& W, Matrix& dX);
void linear_backward_data_omp(const Matrix& dY, const Matrix& W, Matrix& dX);
void linear_backward_data(const Matrix& dY, const Matrix& W, Matrix& dX);

// dW (no x ni) = dY^T * X ; db (no) = column sums of dY
void linear_backward_params_serial(const Matrix& dY, const Matrix& X, Matrix& dW, std::vector<double>& db);
void linear_backward_params_omp(const Matrix& dY, const Matrix& X, Matrix& dW, std::vector<double>& db);
void linear_backward_params(const Matrix& dY, const Matrix& X, Matrix& dW, std::vector<double>& db);

// row-wise softmax with max-subtraction
void softmax_rows_serial(const Matrix& margins, Matrix& probs);
void softmax_rows_omp(const Matrix& margins, Matrix& probs);
void softmax_rows(const Matrix& margins, Matrix& probs);

} // namespace nids::kernels
