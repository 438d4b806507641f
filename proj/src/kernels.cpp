#include "nids/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>

#include <omp.h>

namespace nids::kernels {

namespace {

Backend initial_backend() {
    const char* env = std::getenv("NIDS_BACKEND");
    if (env && std::strcmp(env, "serial") == 0) return Backend::serial;
    return Backend::openmp;
}

Backend g_backend = initial_backend();

} // namespace

Backend backend() { return g_backend; }
void set_backend(Backend b) { g_backend = b; }

int thread_count() {
    return g_backend == Backend::serial ? 1 : omp_get_max_threads();
}

namespace detail {

void run_indexed(std::size_t n, void* ctx, void (*fn)(void*, std::size_t)) {
    if (g_backend == Backend::openmp) {
        const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < nn; ++i) fn(ctx, static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < n; ++i) fn(ctx, i);
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// dense layer kernels
// ---------------------------------------------------------------------------

namespace {

inline void linear_forward_row(const Matrix& X, const Matrix& W, const std::vector<double>& b, Matrix& Y,
                               std::size_t r) {
    const std::size_t ni = X.cols, no = W.rows;
    const double* x = X.data.data() + r * ni;
    double* y = Y.data.data() + r * no;
    for (std::size_t o = 0; o < no; ++o) {
        const double* w = W.data.data() + o * ni;
        double acc = b[o];
        for (std::size_t i = 0; i < ni; ++i) acc += x[i] * w[i];
        y[o] = acc;
    }
}

inline void backward_data_row(const Matrix& dY, const Matrix& W, Matrix& dX, std::size_t r) {
    const std::size_t ni = W.cols, no = W.rows;
    const double* dy = dY.data.data() + r * no;
    double* dx = dX.data.data() + r * ni;
    std::fill(dx, dx + ni, 0.0);
    for (std::size_t o = 0; o < no; ++o) {
        const double g = dy[o];
        const double* w = W.data.data() + o * ni;
        for (std::size_t i = 0; i < ni; ++i) dx[i] += g * w[i];
    }
}

// one output unit: row of dW plus db entry; sums over batch rows in index order
inline void backward_params_unit(const Matrix& dY, const Matrix& X, Matrix& dW, std::vector<double>& db,
                                 std::size_t o) {
    const std::size_t nr = X.rows, ni = X.cols, no = dW.rows;
    double* dw = dW.data.data() + o * ni;
    std::fill(dw, dw + ni, 0.0);
    double acc = 0.0;
    for (std::size_t r = 0; r < nr; ++r) {
        const double g = dY.data[r * no + o];
        acc += g;
        const double* x = X.data.data() + r * ni;
        for (std::size_t i = 0; i < ni; ++i) dw[i] += g * x[i];
    }
    db[o] = acc;
}

inline void softmax_row(const Matrix& margins, Matrix& probs, std::size_t r) {
    const std::size_t k = margins.cols;
    const double* m = margins.data.data() + r * k;
    double* p = probs.data.data() + r * k;
    double mx = m[0];
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, m[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        p[j] = std::exp(m[j] - mx);
        sum += p[j];
    }
    for (std::size_t j = 0; j < k; ++j) p[j] /= sum;
}

} // namespace

void linear_forward_serial(const Matrix& X, const Matrix& W, const std::vector<double>& b, Matrix& Y) {
    Y = Matrix(X.rows, W.rows);
    for (std::size_t r = 0; r < X.rows; ++r) linear_forward_row(X, W, b, Y, r);
}

void linear_forward_omp(const Matrix& X, const Matrix& W, const std::vector<double>& b, Matrix& Y) {
    Y = Matrix(X.rows, W.rows);
    const long long nr = static_cast<long long>(X.rows);
#pragma omp parallel for schedule(static)
    for (long long r = 0; r < nr; ++r) linear_forward_row(X, W, b, Y, static_cast<std::size_t>(r));
}

void linear_forward(const Matrix& X, const Matrix& W, const std::vector<double>& b, Matrix& Y) {
    if (g_backend == Backend::openmp)
        linear_forward_omp(X, W, b, Y);
    else
        linear_forward_serial(X, W, b, Y);
}

void linear_backward_data_serial(const Matrix& dY, const Matrix& W, Matrix& dX) {
    dX = Matrix(dY.rows, W.cols);
    for (std::size_t r = 0; r < dY.rows; ++r) backward_data_row(dY, W, dX, r);
}

void linear_backward_data_omp(const Matrix& dY, const Matrix& W, Matrix& dX) {
    dX = Matrix(dY.rows, W.cols);
    const long long nr = static_cast<long long>(dY.rows);
#pragma omp parallel for schedule(static)
    for (long long r = 0; r < nr; ++r) backward_data_row(dY, W, dX, static_cast<std::size_t>(r));
}

void linear_backward_data(const Matrix& dY, const Matrix& W, Matrix& dX) {
    if (g_backend == Backend::openmp)
        linear_backward_data_omp(dY, W, dX);
    else
        linear_backward_data_serial(dY, W, dX);
}

void linear_backward_params_serial(const Matrix& dY, const Matrix& X, Matrix& dW, std::vector<double>& db) {
    dW = Matrix(dY.cols, X.cols);
    db.assign(dY.cols, 0.0);
    for (std::size_t o = 0; o < dY.cols; ++o) backward_params_unit(dY, X, dW, db, o);
}

void linear_backward_params_omp(const Matrix& dY, const Matrix& X, Matrix& dW, std::vector<double>& db) {
    dW = Matrix(dY.cols, X.cols);
    db.assign(dY.cols, 0.0);
    const long long no = static_cast<long long>(dY.cols);
#pragma omp parallel for schedule(static)
    for (long long o = 0; o < no; ++o) backward_params_unit(dY, X, dW, db, static_cast<std::size_t>(o));
}

void linear_backward_params(const Matrix& dY, const Matrix& X, Matrix& dW, std::vector<double>& db) {
    if (g_backend == Backend::openmp)
        linear_backward_params_omp(dY, X, dW, db);
    else
        linear_backward_params_serial(dY, X, dW, db);
}

void softmax_rows_serial(const Matrix& margins, Matrix& probs) {
    probs = Matrix(margins.rows, margins.cols);
    for (std::size_t r = 0; r < margins.rows; ++r) softmax_row(margins, probs, r);
}

void softmax_rows_omp(const Matrix& margins, Matrix& probs) {
    probs = Matrix(margins.rows, margins.cols);
    const long long nr = static_cast<long long>(margins.rows);
#pragma omp parallel for schedule(static)
    for (long long r = 0; r < nr; ++r) softmax_row(margins, probs, static_cast<std::size_t>(r));
}

void softmax_rows(const Matrix& margins, Matrix& probs) {
    if (g_backend == Backend::openmp)
        softmax_rows_omp(margins, probs);
    else
        softmax_rows_serial(margins, probs);
}

} // namespace nids::kernels
