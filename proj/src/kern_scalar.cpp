#include "symphony/kern.hpp"

namespace symphony::kern::detail {

namespace {

void s_matvec(const double* w, const double* x, const double* b, double* y,
              size_t rows, size_t cols) {
  for (size_t r = 0; r < rows; ++r) {
    const double* row = w + r * cols;
    double acc = 0.0;
    for (size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = b ? acc + b[r] : acc;
  }
}

double s_dot(const double* a, const double* b, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void s_axpy(double alpha, const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void s_relu(const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void s_relu_backward(const double* x, const double* gy, double* gx, size_t n) {
  for (size_t i = 0; i < n; ++i)
    if (x[i] > 0.0) gx[i] += gy[i];
}

double s_sum(const double* x, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

size_t s_count_eq_u8(const uint8_t* col, size_t n, uint8_t v) {
  size_t c = 0;
  for (size_t i = 0; i < n; ++i) c += col[i] == v;
  return c;
}

void s_mask_eq_u8(const uint8_t* col, size_t n, uint8_t v, uint8_t* mask) {
  for (size_t i = 0; i < n; ++i) mask[i] = col[i] == v;
}

void s_mask_and_eq_u8(const uint8_t* col, size_t n, uint8_t v, uint8_t* mask) {
  for (size_t i = 0; i < n; ++i) mask[i] &= col[i] == v;
}

size_t s_count_nonzero_u8(const uint8_t* mask, size_t n) {
  size_t c = 0;
  for (size_t i = 0; i < n; ++i) c += mask[i] != 0;
  return c;
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops = {s_matvec, s_dot,          s_axpy,
                          s_relu,   s_relu_backward, s_sum,
                          s_count_eq_u8, s_mask_eq_u8, s_mask_and_eq_u8,
                          s_count_nonzero_u8};
  return ops;
}

}  // namespace symphony::kern::detail
