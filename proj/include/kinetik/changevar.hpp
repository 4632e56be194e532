#pragma once

#include <string>
#include <vector>

#include "kinetik/collision.hpp"
#include "kinetik/ellipticity.hpp"
#include "kinetik/geometry.hpp"
#include "kinetik/holder.hpp"

namespace kinetik {

// T_{v0}(a v0 + w) = (a/|v0|) v0 + w for w perp v0; identity when |v0| < 1.
class VelocityTransform {
public:
    explicit VelocityTransform(Vec v0);
    Vec apply(const Vec& v) const;
    Vec inverse(const Vec& v) const;
    double determinant() const;
    bool identity() const { return identity_; }
    const Vec& v0() const { return v0_; }

private:
    Vec v0_, dir_;
    double norm_ = 0.0;
    bool identity_ = true;
};

Vec apply_T(const Vec& v0, const Vec& v);

// Time/space factor |v0|^{-gamma-2s} (1 on the identity branch).
double transform_rate(const Vec& v0, double gamma, double s);

// Z(t, x, v) = z0 o (c t, c T x, T v) with c = transform_rate.
class KineticTransform {
public:
    KineticTransform(KineticPoint z0, double gamma, double s);
    KineticPoint apply(const KineticPoint& z) const;
    KineticPoint inverse(const KineticPoint& z) const;
    const VelocityTransform& velocity() const { return T_; }
    double rate() const { return c_; }

private:
    KineticPoint z0_;
    VelocityTransform T_;
    double c_ = 1.0;
};

// Kbar(v, v') = |v0|^{-1-gamma-2s} K(v0 + T v, v0 + T v') (prefactor 1 when |v0| < 1).
KernelFunction transform_kernel(const KernelFunction& K, const KineticPoint& z0, const CollisionModel& model);
// Pure Galilean translate K(v0 + v, v0 + v'), the control of the sweep.
KernelFunction translate_kernel(const KernelFunction& K, const Vec& v0);
// hbar(z) = c h(Z z).
PhaseFunction transform_source(const PhaseFunction& h, const KineticPoint& z0, double gamma, double s);

struct SweepRow {
    double v0_norm = 0.0;
    double lambda = 0.0, Lambda = 0.0, mu = 0.0, c1 = 0.0, c2 = 0.0;
};

struct SweepRatios {
    double lambda = 0.0, Lambda = 0.0, mu = 0.0;  // max/min across the sweep
};

struct SweepResult {
    std::vector<SweepRow> transformed;
    std::vector<SweepRow> control;
    SweepRatios transformed_ratio;
    SweepRatios control_ratio;
};

struct SweepOptions {
    Vec direction;  // unit direction of v0; empty -> e1
    // Probe velocities in B_1, as multiples of (v0-hat, a perpendicular unit vector).
    std::vector<std::pair<double, double>> probes = {{0, 0}, {0.5, 0}, {-0.5, 0}, {0, 0.5}, {0, -0.5}};
    std::vector<double> upper_radii = {0.125, 0.25, 0.5, 1.0};
    std::vector<double> cancel_radii = {0.125, 0.25, 0.5, 0.75};
    ConeOptions cone;
    bool with_control = true;
};

SweepResult uniformity_sweep(const DensityField& f, const std::vector<double>& v0_norms, const CollisionModel& model,
                             const SweepOptions& opt = {});

void write_sweep_csv(const SweepResult& r, const std::string& path);

}  // namespace kinetik
