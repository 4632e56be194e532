#include <immintrin.h>

#include "kinetik/simd.hpp"

namespace kinetik::simd::avx2 {

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd(), acc3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
        acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
        acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    __m256d acc = _mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3));
    __m128d lo = _mm256_castpd256_pd128(acc), hi = _mm256_extractf128_pd(acc, 1);
    lo = _mm_add_pd(lo, hi);
    double r = _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
    for (; i < n; ++i) r += a[i] * b[i];
    return r;
}

namespace {
inline void weights(__m256d t, __m256d w[4]) {
    const __m256d sixth = _mm256_set1_pd(1.0 / 6.0);
    const __m256d one = _mm256_set1_pd(1.0), three = _mm256_set1_pd(3.0);
    __m256d t2 = _mm256_mul_pd(t, t), t3 = _mm256_mul_pd(t2, t);
    __m256d omt = _mm256_sub_pd(one, t);
    w[0] = _mm256_mul_pd(_mm256_mul_pd(_mm256_mul_pd(omt, omt), omt), sixth);
    // (3t^3 - 6t^2 + 4)/6
    w[1] = _mm256_mul_pd(_mm256_fmadd_pd(three, t3, _mm256_fmadd_pd(_mm256_set1_pd(-6.0), t2, _mm256_set1_pd(4.0))), sixth);
    // (-3t^3 + 3t^2 + 3t + 1)/6
    w[2] = _mm256_mul_pd(_mm256_fmadd_pd(_mm256_set1_pd(-3.0), t3, _mm256_fmadd_pd(three, t2, _mm256_fmadd_pd(three, t, one))), sixth);
    w[3] = _mm256_mul_pd(t3, sixth);
}
}  // namespace

void spline2_eval(const Spline2View& s, const double* xs, const double* ys, double* out, std::size_t n) {
    std::size_t k = 0;
    const __m256d x0 = _mm256_set1_pd(s.x0), inv_h = _mm256_set1_pd(s.inv_h);
    const __m256d lo = _mm256_setzero_pd(), hi = _mm256_set1_pd(s.n - 2);
    const __m128i stride = _mm_set1_epi32(s.stride);
    for (; k + 4 <= n; k += 4) {
        __m256d ux = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(xs + k), x0), inv_h);
        __m256d uy = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(ys + k), x0), inv_h);
        __m256d fx = _mm256_min_pd(_mm256_max_pd(_mm256_floor_pd(ux), lo), hi);
        __m256d fy = _mm256_min_pd(_mm256_max_pd(_mm256_floor_pd(uy), lo), hi);
        __m256d wx[4], wy[4];
        weights(_mm256_sub_pd(ux, fx), wx);
        weights(_mm256_sub_pd(uy, fy), wy);
        __m128i ix = _mm256_cvtpd_epi32(fx), iy = _mm256_cvtpd_epi32(fy);
        __m128i base = _mm_add_epi32(_mm_mullo_epi32(ix, stride), iy);
        __m256d acc = _mm256_setzero_pd();
        for (int a = 0; a < 4; ++a) {
            __m128i row = _mm_add_epi32(base, _mm_set1_epi32(a * s.stride));
            __m256d r = _mm256_mul_pd(wy[0], _mm256_i32gather_pd(s.coef, row, 8));
            r = _mm256_fmadd_pd(wy[1], _mm256_i32gather_pd(s.coef, _mm_add_epi32(row, _mm_set1_epi32(1)), 8), r);
            r = _mm256_fmadd_pd(wy[2], _mm256_i32gather_pd(s.coef, _mm_add_epi32(row, _mm_set1_epi32(2)), 8), r);
            r = _mm256_fmadd_pd(wy[3], _mm256_i32gather_pd(s.coef, _mm_add_epi32(row, _mm_set1_epi32(3)), 8), r);
            acc = _mm256_fmadd_pd(wx[a], r, acc);
        }
        _mm256_storeu_pd(out + k, _mm256_max_pd(acc, lo));
    }
    if (k < n) scalar::spline2_eval(s, xs + k, ys + k, out + k, n - k);
}

}  // namespace kinetik::simd::avx2
