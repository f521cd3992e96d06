#include "cvselect/kernels.hpp"

namespace cvselect::kernels::scalar {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double sum_sq_diff(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void squared_errors(const double* y, const double* yhat, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double d = y[i] - yhat[i];
    out[i] = d * d;
  }
}

void add_sq_offset(const double* column, double q, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double d = column[i] - q;
    out[i] += d * d;
  }
}

}  // namespace

const KernelTable kTable{&dot, &axpy, &sum_sq_diff, &squared_errors, &add_sq_offset};

}  // namespace cvselect::kernels::scalar
