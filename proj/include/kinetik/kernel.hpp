#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <string>

#include "kinetik/common.hpp"

namespace kinetik {

enum class KernelTag { boltzmann, synthetic };

class KernelImpl {
public:
    virtual ~KernelImpl() = default;
    virtual double eval(const Vec& v, const Vec& vp) const = 0;
    // K(v, v + rho[j] * omega) for all j; default loops over eval.
    virtual void radial_profile(const Vec& v, const Vec& omega, const double* rho, double* out, std::size_t n) const;
    virtual KernelTag tag() const { return KernelTag::synthetic; }
    // K(v, .) vanishes for |v' - v| >= support_radius().
    virtual double support_radius() const { return std::numeric_limits<double>::infinity(); }
    virtual int dim() const = 0;
    virtual std::string name() const { return "synthetic"; }
};

// Evaluatable K(v, v') >= 0 with a provenance tag. Cheap to copy.
class KernelFunction {
public:
    using Eval = std::function<double(const Vec&, const Vec&)>;

    KernelFunction() = default;
    explicit KernelFunction(std::shared_ptr<const KernelImpl> impl) : impl_(std::move(impl)) {}
    KernelFunction(int d, Eval eval, std::string name = "synthetic",
                   double support = std::numeric_limits<double>::infinity());

    double operator()(const Vec& v, const Vec& vp) const { return impl_->eval(v, vp); }
    void radial_profile(const Vec& v, const Vec& omega, const double* rho, double* out, std::size_t n) const {
        impl_->radial_profile(v, omega, rho, out, n);
    }
    KernelTag tag() const { return impl_->tag(); }
    double support_radius() const { return impl_->support_radius(); }
    int dim() const { return impl_->dim(); }
    std::string name() const { return impl_->name(); }
    const KernelImpl* impl() const { return impl_.get(); }
    explicit operator bool() const { return static_cast<bool>(impl_); }

private:
    std::shared_ptr<const KernelImpl> impl_;
};

// Test and reference kernels.
namespace synthetic {
KernelFunction zero(int d);
// |v - v'|^{-d-2s}, optionally truncated to |v - v'| < R.
KernelFunction isotropic(int d, double s, double R = std::numeric_limits<double>::infinity());
// Isotropic profile restricted to directions within half_angle of +-axis.
KernelFunction double_cap(int d, double s, const Vec& axis, double half_angle,
                          double R = std::numeric_limits<double>::infinity());
// Mass near the two coordinate lines (d = 2), narrow caps of half-width delta
// normalized so each cap carries the angular mass of a full circle / 2.
KernelFunction two_axis(double s, double delta, double R = std::numeric_limits<double>::infinity());
// |v - v'|^{-d-2s} (1 + eps sign(v'_1 - v_1)).
KernelFunction sign_asymmetric(int d, double s, double eps, double R = std::numeric_limits<double>::infinity());
// |v - v'|^{-d-2s} (1 + eps tanh(v'_1)): position dependent, non-symmetric.
KernelFunction tanh_modulated(int d, double s, double eps, double R = std::numeric_limits<double>::infinity());
}  // namespace synthetic

}  // namespace kinetik
