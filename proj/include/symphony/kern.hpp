#pragma once

#include <cstddef>
#include <cstdint>

// Data-parallel inner loops used by the sampling and neural modules.
// Every routine has a scalar reference implementation and an AVX2 variant;
// the backend is selected once at startup from CPUID and can be pinned to
// the scalar path for deterministic serial runs. Scalar and SIMD variants
// are equivalence-tested against each other.
namespace symphony::kern {

enum class Backend { Scalar, Avx2 };

Backend detect_backend();
Backend active_backend();
void set_backend(Backend b);

// ---- f64 vector ops ----

// y = W x + b, W row-major (rows x cols); b may be null
void matvec(const double* w, const double* x, const double* b, double* y,
            size_t rows, size_t cols);
double dot(const double* a, const double* b, size_t n);
// y += alpha * x
void axpy(double alpha, const double* x, double* y, size_t n);
void relu(const double* x, double* y, size_t n);
// gx += gy where x > 0
void relu_backward(const double* x, const double* gy, double* gx, size_t n);
double sum(const double* x, size_t n);

// ---- u8 column ops (sample-batch counting) ----

// number of i with col[i] == v
size_t count_eq_u8(const uint8_t* col, size_t n, uint8_t v);
// mask[i] = (col[i] == v) ? 1 : 0
void mask_eq_u8(const uint8_t* col, size_t n, uint8_t v, uint8_t* mask);
// mask[i] &= (col[i] == v)
void mask_and_eq_u8(const uint8_t* col, size_t n, uint8_t v, uint8_t* mask);
size_t count_nonzero_u8(const uint8_t* mask, size_t n);

namespace detail {

struct Ops {
  void (*matvec)(const double*, const double*, const double*, double*, size_t, size_t);
  double (*dot)(const double*, const double*, size_t);
  void (*axpy)(double, const double*, double*, size_t);
  void (*relu)(const double*, double*, size_t);
  void (*relu_backward)(const double*, const double*, double*, size_t);
  double (*sum)(const double*, size_t);
  size_t (*count_eq_u8)(const uint8_t*, size_t, uint8_t);
  void (*mask_eq_u8)(const uint8_t*, size_t, uint8_t, uint8_t*);
  void (*mask_and_eq_u8)(const uint8_t*, size_t, uint8_t, uint8_t*);
  size_t (*count_nonzero_u8)(const uint8_t*, size_t);
};

const Ops& scalar_ops();
const Ops* avx2_ops();  // null when unsupported by the build or the CPU

}  // namespace detail

}  // namespace symphony::kern
