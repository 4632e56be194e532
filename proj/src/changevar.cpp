#include "kinetik/changevar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kinetik/csv.hpp"
#include "kinetik/parallel.hpp"
#include "kinetik/quadrature.hpp"

namespace kinetik {

VelocityTransform::VelocityTransform(Vec v0) : v0_(std::move(v0)) {
    norm_ = v0_.norm();
    identity_ = !(norm_ >= 1.0);
    dir_ = identity_ ? Vec::Zero(v0_.size()) : Vec(v0_ / norm_);
}

Vec VelocityTransform::apply(const Vec& v) const {
    require(v.size() == v0_.size(), "dimension mismatch");
    if (identity_) return v;
    const double a = v.dot(dir_);
    return v + (a / norm_ - a) * dir_;
}

Vec VelocityTransform::inverse(const Vec& v) const {
    require(v.size() == v0_.size(), "dimension mismatch");
    if (identity_) return v;
    const double a = v.dot(dir_);
    return v + (a * norm_ - a) * dir_;
}

double VelocityTransform::determinant() const { return identity_ ? 1.0 : 1.0 / norm_; }

Vec apply_T(const Vec& v0, const Vec& v) { return VelocityTransform(v0).apply(v); }

double transform_rate(const Vec& v0, double gamma, double s) {
    const double n = v0.norm();
    return n >= 1.0 ? std::pow(n, -gamma - 2.0 * s) : 1.0;
}

KineticTransform::KineticTransform(KineticPoint z0, double gamma, double s)
    : z0_(std::move(z0)), T_(z0_.v), c_(transform_rate(z0_.v, gamma, s)) {}

KineticPoint KineticTransform::apply(const KineticPoint& z) const {
    return galilean_compose(z0_, KineticPoint(c_ * z.t, c_ * T_.apply(z.x), T_.apply(z.v)));
}

KineticPoint KineticTransform::inverse(const KineticPoint& z) const {
    const KineticPoint w = galilean_compose(galilean_inverse(z0_), z);
    return KineticPoint(w.t / c_, T_.inverse(w.x) / c_, T_.inverse(w.v));
}

namespace {

class TransformedKernel final : public KernelImpl {
public:
    TransformedKernel(KernelFunction K, Vec v0, double pref, bool transform)
        : K_(std::move(K)), v0_(v0), T_(v0), pref_(pref), transform_(transform) {}
    double eval(const Vec& v, const Vec& vp) const override {
        if (pref_ == 0.0) return 0.0;
        if (!transform_) return K_(v0_ + v, v0_ + vp);
        return pref_ * K_(v0_ + T_.apply(v), v0_ + T_.apply(vp));
    }
    KernelTag tag() const override { return K_.tag(); }
    int dim() const override { return K_.dim(); }
    std::string name() const override { return (transform_ ? "transformed:" : "translated:") + K_.name(); }

private:
    KernelFunction K_;
    Vec v0_;
    VelocityTransform T_;
    double pref_;
    bool transform_;
};

double ratio(const std::vector<SweepRow>& rows, double SweepRow::*field) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& r : rows) {
        lo = std::min(lo, r.*field);
        hi = std::max(hi, r.*field);
    }
    if (rows.empty()) return 0.0;
    return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

}  // namespace

KernelFunction transform_kernel(const KernelFunction& K, const KineticPoint& z0, const CollisionModel& model) {
    require(static_cast<bool>(K) && K.dim() == z0.dim(), "dimension mismatch");
    const double n = z0.v.norm();
    require(std::isfinite(n), "|v0| must be finite");
    const double pref = n >= 1.0 ? std::pow(n, -1.0 - model.gamma - 2.0 * model.s) : 1.0;
    return KernelFunction(std::make_shared<TransformedKernel>(K, z0.v, pref, true));
}

KernelFunction translate_kernel(const KernelFunction& K, const Vec& v0) {
    require(static_cast<bool>(K) && K.dim() == v0.size(), "dimension mismatch");
    return KernelFunction(std::make_shared<TransformedKernel>(K, v0, 1.0, false));
}

PhaseFunction transform_source(const PhaseFunction& h, const KineticPoint& z0, double gamma, double s) {
    KineticTransform Z(z0, gamma, s);
    return [h, Z](const KineticPoint& z) { return Z.rate() * h(Z.apply(z)); };
}

SweepResult uniformity_sweep(const DensityField& f, const std::vector<double>& v0_norms, const CollisionModel& model,
                             const SweepOptions& opt) {
    model.validate();
    require(f.dim() == model.d, "dimension mismatch");
    require(model.gamma + 2.0 * model.s >= 0.0 && model.gamma + 2.0 * model.s <= 2.0,
            "uniformity sweep needs gamma + 2s in [0, 2]");
    const int d = model.d;
    Vec dir = opt.direction.size() == d ? Vec(opt.direction.normalized()) : Vec(Vec::Unit(d, 0));
    const Vec perp = perp_basis(dir)[0];
    const KernelFunction K = boltzmann_kernel(f, model);
    const double s = model.s;

    auto measure = [&](const KernelFunction& Kb, double norm) {
        SweepRow row;
        row.v0_norm = norm;
        row.lambda = row.mu = std::numeric_limits<double>::infinity();
        for (const auto& [a, b] : opt.probes) {
            const Vec v = a * dir + b * perp;
            require(v.norm() < 1.0, "sweep probes must lie in B_1");
            row.Lambda = std::max(row.Lambda, avg_upper_bound(Kb, v, opt.upper_radii, s, opt.cone.polar));
            const ConeEstimate ce = cone_estimate(Kb, v, s, opt.cone);
            row.lambda = std::min(row.lambda, ce.lambda);
            row.mu = std::min(row.mu, ce.mu);
            const CancellationResiduals c = cancellation_residuals(Kb, v, opt.cancel_radii, s, opt.cone.polar);
            row.c1 = std::max(row.c1, c.c1);
            row.c2 = std::max(row.c2, c.c2);
        }
        return row;
    };

    SweepResult out;
    const std::size_t n = v0_norms.size();
    out.transformed.resize(n);
    if (opt.with_control) out.control.resize(n);
    const std::size_t jobs = opt.with_control ? 2 * n : n;
    parallel_for(jobs, [&](std::size_t j) {
        const std::size_t i = j % n;
        require(v0_norms[i] >= 0.0, "|v0| must be nonnegative");
        const Vec v0 = v0_norms[i] * dir;
        if (j < n) {
            const KineticPoint z0(0.0, Vec::Zero(d), v0);
            out.transformed[i] = measure(transform_kernel(K, z0, model), v0_norms[i]);
        } else {
            out.control[i] = measure(translate_kernel(K, v0), v0_norms[i]);
        }
    });
    out.transformed_ratio = {ratio(out.transformed, &SweepRow::lambda), ratio(out.transformed, &SweepRow::Lambda),
                             ratio(out.transformed, &SweepRow::mu)};
    if (opt.with_control)
        out.control_ratio = {ratio(out.control, &SweepRow::lambda), ratio(out.control, &SweepRow::Lambda),
                             ratio(out.control, &SweepRow::mu)};
    return out;
}

void write_sweep_csv(const SweepResult& r, const std::string& path) {
    CsvWriter w(path, {"kind", "v0_norm", "lambda", "Lambda", "mu", "c1", "c2"});
    auto dump = [&](const std::vector<SweepRow>& rows, const std::string& kind) {
        for (const auto& row : rows) {
            w << kind << row.v0_norm << row.lambda << row.Lambda << row.mu << row.c1 << row.c2;
            w.end_row();
        }
    };
    dump(r.transformed, "transformed");
    dump(r.control, "control");
}

}  // namespace kinetik
