#pragma once

#include <vector>

#include "kinetik/simd.hpp"

namespace kinetik {

// Interpolating cubic B-spline on a uniform lattice x0 + i*h, i in [0, n), in
// d = 1..3 dimensions (row-major samples, last axis fastest). C^2, O(h^4).
class CubicBSpline {
public:
    enum class Boundary { mirror, periodic };

    CubicBSpline() = default;
    CubicBSpline(int d, int n, double x0, double h, const std::vector<double>& samples, Boundary b);

    int dim() const { return d_; }
    int points() const { return n_; }
    bool empty() const { return coef_.empty(); }

    // Unclipped value. Mirror boundary: positions are clamped to the hull;
    // periodic: wrapped with period n*h.
    double operator()(const double* x) const;

    // d = 2, mirror boundary only: batched, clipped at 0 (SIMD dispatched).
    void eval2_clipped(const double* xs, const double* ys, double* out, std::size_t n) const;
    simd::Spline2View view2() const;

private:
    int d_ = 0, n_ = 0, np_ = 0;
    double x0_ = 0.0, h_ = 1.0;
    Boundary boundary_ = Boundary::mirror;
    std::vector<double> coef_;  // padded (n+3)^d
};

}  // namespace kinetik
