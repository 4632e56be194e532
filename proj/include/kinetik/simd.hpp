#pragma once

#include <cstddef>
#include <string>

// Hot quadrature loops. Each kernel has a scalar reference implementation and
// an AVX2/FMA variant; the active one is chosen at first use from the CPU
// features (override with KINETIK_SIMD=scalar or force_isa()).
namespace kinetik::simd {

enum class Isa { scalar, avx2 };

Isa active_isa();
bool avx2_available();
void force_isa(Isa isa);  // throws if avx2 requested but unsupported
std::string isa_name(Isa isa);

// Padded coefficient array of a 2-d cubic B-spline. Coefficient for lattice
// index (i, j), i, j in [-1, n], lives at coef[(i + 1) * stride + (j + 1)].
struct Spline2View {
    const double* coef = nullptr;
    int n = 0;        // lattice points per axis
    int stride = 0;   // n + 3
    double x0 = 0.0;  // position of lattice index 0 (both axes)
    double inv_h = 1.0;
};

double dot(const double* a, const double* b, std::size_t n);

// out[k] = max(0, spline(xs[k], ys[k])). Points are clamped into the lattice
// hull; callers deal with points outside it.
void spline2_eval(const Spline2View& s, const double* xs, const double* ys, double* out, std::size_t n);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void spline2_eval(const Spline2View& s, const double* xs, const double* ys, double* out, std::size_t n);
}  // namespace scalar

namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void spline2_eval(const Spline2View& s, const double* xs, const double* ys, double* out, std::size_t n);
}  // namespace avx2

}  // namespace kinetik::simd
