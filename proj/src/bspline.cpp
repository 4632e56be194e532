#include "kinetik/bspline.hpp"

#include <algorithm>
#include <cmath>

#include "kinetik/common.hpp"

namespace kinetik {

namespace {

// Solves c[i-1] + 4c[i] + c[i+1] = 6 f[i] with mirror ends (in place).
void prefilter_mirror(std::vector<double>& f) {
    const int n = static_cast<int>(f.size());
    std::vector<double> cp(n), dp(n);
    // Thomas: row 0 is 4c0 + 2c1, last row 2c_{n-2} + 4c_{n-1}.
    double b = 4.0, c = 2.0;
    cp[0] = c / b;
    dp[0] = 6.0 * f[0] / b;
    for (int i = 1; i < n; ++i) {
        double a = (i == n - 1) ? 2.0 : 1.0;
        double ci = (i == n - 1) ? 0.0 : 1.0;
        double m = 4.0 - a * cp[i - 1];
        cp[i] = ci / m;
        dp[i] = (6.0 * f[i] - a * dp[i - 1]) / m;
    }
    f[n - 1] = dp[n - 1];
    for (int i = n - 2; i >= 0; --i) f[i] = dp[i] - cp[i] * f[i + 1];
}

void tridiag_141(const std::vector<double>& bb, const std::vector<double>& r, std::vector<double>& x) {
    const int n = static_cast<int>(r.size());
    std::vector<double> cp(n), dp(n);
    cp[0] = 1.0 / bb[0];
    dp[0] = r[0] / bb[0];
    for (int i = 1; i < n; ++i) {
        double m = bb[i] - cp[i - 1];
        cp[i] = 1.0 / m;
        dp[i] = (r[i] - dp[i - 1]) / m;
    }
    x.assign(n, 0.0);
    x[n - 1] = dp[n - 1];
    for (int i = n - 2; i >= 0; --i) x[i] = dp[i] - cp[i] * x[i + 1];
}

// Cyclic version via Sherman-Morrison (corner entries 1).
void prefilter_periodic(std::vector<double>& f) {
    const int n = static_cast<int>(f.size());
    const double gamma = -4.0;
    std::vector<double> bb(n, 4.0);
    bb[0] = 4.0 - gamma;
    bb[n - 1] = 4.0 - 1.0 / gamma;
    std::vector<double> r(n), x, u(n, 0.0), z;
    for (int i = 0; i < n; ++i) r[i] = 6.0 * f[i];
    tridiag_141(bb, r, x);
    u[0] = gamma;
    u[n - 1] = 1.0;
    tridiag_141(bb, u, z);
    double fact = (x[0] + x[n - 1] / gamma) / (1.0 + z[0] + z[n - 1] / gamma);
    for (int i = 0; i < n; ++i) f[i] = x[i] - fact * z[i];
}

inline void weights(double t, double w[4]) {
    double t2 = t * t, t3 = t2 * t, omt = 1.0 - t;
    w[0] = omt * omt * omt / 6.0;
    w[1] = (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0;
    w[2] = (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0;
    w[3] = t3 / 6.0;
}

}  // namespace

CubicBSpline::CubicBSpline(int d, int n, double x0, double h, const std::vector<double>& samples, Boundary b)
    : d_(d), n_(n), np_(n + 3), x0_(x0), h_(h), boundary_(b) {
    require(d >= 1 && d <= 3, "spline dimension must be 1..3");
    require(n >= 4, "spline needs at least 4 points per axis");
    std::size_t total = 1;
    for (int k = 0; k < d; ++k) total *= static_cast<std::size_t>(n);
    require(samples.size() == total, "spline sample count mismatch");

    std::vector<double> c = samples;
    std::vector<double> line(n);
    // Filter along each axis.
    for (int axis = 0; axis < d; ++axis) {
        std::size_t stride = 1;
        for (int k = axis + 1; k < d; ++k) stride *= n;
        std::size_t outer = total / (stride * n);
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t in = 0; in < stride; ++in) {
                std::size_t base = o * stride * n + in;
                for (int i = 0; i < n; ++i) line[i] = c[base + i * stride];
                if (b == Boundary::mirror)
                    prefilter_mirror(line);
                else
                    prefilter_periodic(line);
                for (int i = 0; i < n; ++i) c[base + i * stride] = line[i];
            }
        }
    }

    // Padded copy: lattice index i in [-1, n+1] stored at i+1.
    auto src_index = [&](int i) {
        if (b == Boundary::periodic) return ((i % n) + n) % n;
        if (i < 0) return -i;
        if (i >= n) return 2 * (n - 1) - i;
        return i;
    };
    std::size_t ptotal = 1;
    for (int k = 0; k < d; ++k) ptotal *= np_;
    coef_.assign(ptotal, 0.0);
    for (std::size_t p = 0; p < ptotal; ++p) {
        std::size_t rem = p, src = 0;
        int idx[3] = {0, 0, 0};
        for (int k = d - 1; k >= 0; --k) {
            idx[k] = static_cast<int>(rem % np_) - 1;
            rem /= np_;
        }
        for (int k = 0; k < d; ++k) src = src * n + src_index(idx[k]);
        coef_[p] = c[src];
    }
}

double CubicBSpline::operator()(const double* x) const {
    int cell[3] = {0, 0, 0};
    double w[3][4] = {};
    for (int k = 0; k < d_; ++k) {
        double u = (x[k] - x0_) / h_;
        double f;
        if (boundary_ == Boundary::periodic) {
            u = u - n_ * std::floor(u / n_);
            f = std::min(std::floor(u), static_cast<double>(n_ - 1));
        } else {
            f = std::clamp(std::floor(u), 0.0, static_cast<double>(n_ - 2));
        }
        cell[k] = static_cast<int>(f);
        weights(u - f, w[k]);
    }
    if (d_ == 1) {
        const double* c = coef_.data() + cell[0];
        return w[0][0] * c[0] + w[0][1] * c[1] + w[0][2] * c[2] + w[0][3] * c[3];
    }
    if (d_ == 2) {
        const double* base = coef_.data() + cell[0] * np_ + cell[1];
        double acc = 0.0;
        for (int a = 0; a < 4; ++a) {
            const double* row = base + a * np_;
            acc += w[0][a] * (w[1][0] * row[0] + w[1][1] * row[1] + w[1][2] * row[2] + w[1][3] * row[3]);
        }
        return acc;
    }
    const double* base = coef_.data() + (static_cast<std::size_t>(cell[0]) * np_ + cell[1]) * np_ + cell[2];
    double acc = 0.0;
    for (int a = 0; a < 4; ++a) {
        double sa = 0.0;
        for (int bb = 0; bb < 4; ++bb) {
            const double* row = base + (static_cast<std::size_t>(a) * np_ + bb) * np_;
            sa += w[1][bb] * (w[2][0] * row[0] + w[2][1] * row[1] + w[2][2] * row[2] + w[2][3] * row[3]);
        }
        acc += w[0][a] * sa;
    }
    return acc;
}

simd::Spline2View CubicBSpline::view2() const {
    simd::Spline2View v;
    v.coef = coef_.data();
    v.n = n_;
    v.stride = np_;
    v.x0 = x0_;
    v.inv_h = 1.0 / h_;
    return v;
}

void CubicBSpline::eval2_clipped(const double* xs, const double* ys, double* out, std::size_t n) const {
    simd::spline2_eval(view2(), xs, ys, out, n);
}

}  // namespace kinetik
