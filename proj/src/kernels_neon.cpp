#include <arm_neon.h>

#include "cvselect/kernels.hpp"

namespace cvselect::kernels::neon {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double sum_sq_diff(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    acc = vfmaq_f64(acc, d, d);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void squared_errors(const double* y, const double* yhat, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(y + i), vld1q_f64(yhat + i));
    vst1q_f64(out + i, vmulq_f64(d, d));
  }
  for (; i < n; ++i) {
    const double d = y[i] - yhat[i];
    out[i] = d * d;
  }
}

void add_sq_offset(const double* column, double q, double* out, std::size_t n) {
  const float64x2_t vq = vdupq_n_f64(q);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(column + i), vq);
    vst1q_f64(out + i, vfmaq_f64(vld1q_f64(out + i), d, d));
  }
  for (; i < n; ++i) {
    const double d = column[i] - q;
    out[i] += d * d;
  }
}

}  // namespace

const KernelTable kTable{&dot, &axpy, &sum_sq_diff, &squared_errors, &add_sq_offset};

}  // namespace cvselect::kernels::neon
