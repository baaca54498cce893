#include "symphony/kern.hpp"

namespace symphony::kern {

namespace {

Backend g_backend = detect_backend();

const detail::Ops* ops() {
  if (g_backend == Backend::Avx2) {
    if (const detail::Ops* a = detail::avx2_ops()) return a;
  }
  return &detail::scalar_ops();
}

}  // namespace

Backend detect_backend() {
#if defined(__x86_64__) || defined(_M_X64)
  if (__builtin_cpu_supports("avx2") && detail::avx2_ops()) return Backend::Avx2;
#endif
  return Backend::Scalar;
}

Backend active_backend() { return g_backend; }

void set_backend(Backend b) {
  g_backend = (b == Backend::Avx2 && detail::avx2_ops()) ? Backend::Avx2
                                                         : Backend::Scalar;
}

void matvec(const double* w, const double* x, const double* b, double* y,
            size_t rows, size_t cols) {
  ops()->matvec(w, x, b, y, rows, cols);
}

double dot(const double* a, const double* b, size_t n) { return ops()->dot(a, b, n); }

void axpy(double alpha, const double* x, double* y, size_t n) {
  ops()->axpy(alpha, x, y, n);
}

void relu(const double* x, double* y, size_t n) { ops()->relu(x, y, n); }

void relu_backward(const double* x, const double* gy, double* gx, size_t n) {
  ops()->relu_backward(x, gy, gx, n);
}

double sum(const double* x, size_t n) { return ops()->sum(x, n); }

size_t count_eq_u8(const uint8_t* col, size_t n, uint8_t v) {
  return ops()->count_eq_u8(col, n, v);
}

void mask_eq_u8(const uint8_t* col, size_t n, uint8_t v, uint8_t* mask) {
  ops()->mask_eq_u8(col, n, v, mask);
}

void mask_and_eq_u8(const uint8_t* col, size_t n, uint8_t v, uint8_t* mask) {
  ops()->mask_and_eq_u8(col, n, v, mask);
}

size_t count_nonzero_u8(const uint8_t* mask, size_t n) {
  return ops()->count_nonzero_u8(mask, n);
}

}  // namespace symphony::kern
