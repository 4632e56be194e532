#include <algorithm>
#include <cmath>

#include "kinetik/simd.hpp"

namespace kinetik::simd::scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

namespace {
inline void bspline_weights(double t, double w[4]) {
    double t2 = t * t, t3 = t2 * t;
    double omt = 1.0 - t;
    w[0] = omt * omt * omt / 6.0;
    w[1] = (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0;
    w[2] = (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0;
    w[3] = t3 / 6.0;
}
}  // namespace

void spline2_eval(const Spline2View& s, const double* xs, const double* ys, double* out, std::size_t n) {
    const double hi = s.n - 2;
    for (std::size_t k = 0; k < n; ++k) {
        double ux = (xs[k] - s.x0) * s.inv_h;
        double uy = (ys[k] - s.x0) * s.inv_h;
        double fx = std::clamp(std::floor(ux), 0.0, hi);
        double fy = std::clamp(std::floor(uy), 0.0, hi);
        int ix = static_cast<int>(fx), iy = static_cast<int>(fy);
        double wx[4], wy[4];
        bspline_weights(ux - fx, wx);
        bspline_weights(uy - fy, wy);
        const double* base = s.coef + ix * s.stride + iy;
        double acc = 0.0;
        for (int a = 0; a < 4; ++a) {
            const double* row = base + a * s.stride;
            double r = wy[0] * row[0] + wy[1] * row[1] + wy[2] * row[2] + wy[3] * row[3];
            acc += wx[a] * r;
        }
        out[k] = acc > 0.0 ? acc : 0.0;
    }
}

}  // namespace kinetik::simd::scalar
