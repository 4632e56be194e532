#include "kinetik/kernel.hpp"

#include <cmath>

namespace kinetik {

void KernelImpl::radial_profile(const Vec& v, const Vec& omega, const double* rho, double* out, std::size_t n) const {
    for (std::size_t j = 0; j < n; ++j) out[j] = eval(v, v + rho[j] * omega);
}

namespace {

class LambdaKernel final : public KernelImpl {
public:
    LambdaKernel(int d, KernelFunction::Eval f, std::string name, double support)
        : d_(d), f_(std::move(f)), name_(std::move(name)), support_(support) {}
    double eval(const Vec& v, const Vec& vp) const override { return f_(v, vp); }
    double support_radius() const override { return support_; }
    int dim() const override { return d_; }
    std::string name() const override { return name_; }

private:
    int d_;
    KernelFunction::Eval f_;
    std::string name_;
    double support_;
};

void check_pair(const Vec& v, const Vec& vp) {
    if (v == vp) throw ValidationError("kernel evaluated on the diagonal v' = v");
}

}  // namespace

KernelFunction::KernelFunction(int d, Eval eval, std::string name, double support)
    : impl_(std::make_shared<LambdaKernel>(d, std::move(eval), std::move(name), support)) {}

namespace synthetic {

KernelFunction zero(int d) {
    return KernelFunction(d, [](const Vec&, const Vec&) { return 0.0; }, "zero", 0.0);
}

KernelFunction isotropic(int d, double s, double R) {
    return KernelFunction(
        d,
        [d, s, R](const Vec& v, const Vec& vp) {
            check_pair(v, vp);
            double r = (vp - v).norm();
            return r < R ? std::pow(r, -d - 2.0 * s) : 0.0;
        },
        "isotropic", R);
}

KernelFunction double_cap(int d, double s, const Vec& axis, double half_angle, double R) {
    Vec e = axis.normalized();
    double cmin = std::cos(half_angle);
    return KernelFunction(
        d,
        [d, s, R, e, cmin](const Vec& v, const Vec& vp) {
            check_pair(v, vp);
            Vec w = vp - v;
            double r = w.norm();
            if (r >= R) return 0.0;
            return std::abs(w.dot(e)) / r >= cmin ? std::pow(r, -d - 2.0 * s) : 0.0;
        },
        "double_cap", R);
}

KernelFunction two_axis(double s, double delta, double R) {
    // Each cap has angular width 2*delta; there are 4 caps; total angular mass 2*pi.
    double scale = 2.0 * kPi / (8.0 * delta);
    return KernelFunction(
        2,
        [s, R, delta, scale](const Vec& v, const Vec& vp) {
            check_pair(v, vp);
            Vec w = vp - v;
            double r = w.norm();
            if (r >= R) return 0.0;
            double sx = std::abs(w[1]) / r, sy = std::abs(w[0]) / r;  // sin of angle to each axis
            bool near = sx <= std::sin(delta) || sy <= std::sin(delta);
            return near ? scale * std::pow(r, -2.0 - 2.0 * s) : 0.0;
        },
        "two_axis", R);
}

KernelFunction sign_asymmetric(int d, double s, double eps, double R) {
    return KernelFunction(
        d,
        [d, s, eps, R](const Vec& v, const Vec& vp) {
            check_pair(v, vp);
            double r = (vp - v).norm();
            if (r >= R) return 0.0;
            double sg = vp[0] > v[0] ? 1.0 : (vp[0] < v[0] ? -1.0 : 0.0);
            return std::pow(r, -d - 2.0 * s) * (1.0 + eps * sg);
        },
        "sign_asymmetric", R);
}

KernelFunction tanh_modulated(int d, double s, double eps, double R) {
    return KernelFunction(
        d,
        [d, s, eps, R](const Vec& v, const Vec& vp) {
            check_pair(v, vp);
            double r = (vp - v).norm();
            if (r >= R) return 0.0;
            return std::pow(r, -d - 2.0 * s) * (1.0 + eps * std::tanh(vp[0]));
        },
        "tanh_modulated", R);
}

}  // namespace synthetic

}  // namespace kinetik
