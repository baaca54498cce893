// AVX2 variants of the hot loops. Compiled with -mavx2 -mfma; only reached
// after the runtime CPUID check in kern.cpp.
#include "symphony/kern.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define SYMPHONY_HAVE_AVX2_BUILD 1
#include <immintrin.h>
#endif

namespace symphony::kern::detail {

#ifdef SYMPHONY_HAVE_AVX2_BUILD

namespace {

inline double hsum256(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double a_dot(const double* a, const double* b, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  }
  double s = hsum256(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void a_matvec(const double* w, const double* x, const double* b, double* y,
              size_t rows, size_t cols) {
  for (size_t r = 0; r < rows; ++r) {
    y[r] = a_dot(w + r * cols, x, cols) + (b ? b[r] : 0.0);
  }
}

void a_axpy(double alpha, const double* x, double* y, size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void a_relu(const double* x, double* y, size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
  }
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void a_relu_backward(const double* x, const double* gy, double* gx, size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
    const __m256d add = _mm256_and_pd(mask, _mm256_loadu_pd(gy + i));
    _mm256_storeu_pd(gx + i, _mm256_add_pd(_mm256_loadu_pd(gx + i), add));
  }
  for (; i < n; ++i)
    if (x[i] > 0.0) gx[i] += gy[i];
}

double a_sum(const double* x, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hsum256(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

size_t a_count_eq_u8(const uint8_t* col, size_t n, uint8_t v) {
  const __m256i vv = _mm256_set1_epi8(static_cast<char>(v));
  size_t c = 0;
  size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i eq = _mm256_cmpeq_epi8(
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(col + i)), vv);
    c += static_cast<size_t>(_mm_popcnt_u32(
        static_cast<uint32_t>(_mm256_movemask_epi8(eq))));
  }
  for (; i < n; ++i) c += col[i] == v;
  return c;
}

void a_mask_eq_u8(const uint8_t* col, size_t n, uint8_t v, uint8_t* mask) {
  const __m256i vv = _mm256_set1_epi8(static_cast<char>(v));
  const __m256i one = _mm256_set1_epi8(1);
  size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i eq = _mm256_cmpeq_epi8(
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(col + i)), vv);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(mask + i),
                        _mm256_and_si256(eq, one));
  }
  for (; i < n; ++i) mask[i] = col[i] == v;
}

void a_mask_and_eq_u8(const uint8_t* col, size_t n, uint8_t v, uint8_t* mask) {
  const __m256i vv = _mm256_set1_epi8(static_cast<char>(v));
  size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i eq = _mm256_cmpeq_epi8(
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(col + i)), vv);
    const __m256i m =
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(mask + i));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(mask + i),
                        _mm256_and_si256(m, eq));
  }
  for (; i < n; ++i) mask[i] &= col[i] == v;
}

size_t a_count_nonzero_u8(const uint8_t* mask, size_t n) {
  const __m256i zero = _mm256_setzero_si256();
  size_t c = 0;
  size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i eq = _mm256_cmpeq_epi8(
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(mask + i)), zero);
    const uint32_t zeros =
        static_cast<uint32_t>(_mm256_movemask_epi8(eq));
    c += 32 - static_cast<size_t>(_mm_popcnt_u32(zeros));
  }
  for (; i < n; ++i) c += mask[i] != 0;
  return c;
}

}  // namespace

const Ops* avx2_ops() {
  static const Ops ops = {a_matvec, a_dot,          a_axpy,
                          a_relu,   a_relu_backward, a_sum,
                          a_count_eq_u8, a_mask_eq_u8, a_mask_and_eq_u8,
                          a_count_nonzero_u8};
  return &ops;
}

#else

const Ops* avx2_ops() { return nullptr; }

#endif

}  // namespace symphony::kern::detail
