#pragma once

#include <vector>

#include "kinetik/common.hpp"

namespace kinetik {

// Phase point z = (t, x, v).
struct KineticPoint {
    double t = 0.0;
    Vec x;
    Vec v;

    KineticPoint() = default;
    KineticPoint(double t_, Vec x_, Vec v_);
    static KineticPoint origin(int d);
    int dim() const { return static_cast<int>(v.size()); }
};

bool operator==(const KineticPoint& a, const KineticPoint& b);

// z0 o z = (t0 + t, x0 + x + t v0, v0 + v).
KineticPoint galilean_compose(const KineticPoint& z0, const KineticPoint& z);
// (t, x, v)^{-1} = (-t, -x + t v, -v).
KineticPoint galilean_inverse(const KineticPoint& z);
// S_r(t, x, v) = (r^{2s} t, r^{1+2s} x, r v).
KineticPoint kinetic_scale(double r, const KineticPoint& z, double s);

// Q_r(z0): -r^{2s} < t - t0 <= 0, |x - x0 - (t - t0) v0| < r^{1+2s}, |v - v0| < r.
struct Cylinder {
    KineticPoint center;
    double r = 1.0;
    double s = 0.5;

    bool contains(const KineticPoint& z) const;
    double volume() const;
};

bool cylinder_contains(const Cylinder& Q, const KineticPoint& z);
Cylinder make_cylinder(const KineticPoint& center, double r, double s);

// Q^m: 0 < t - t0 < m r^{2s}, |v - v0| < r, |x - x0 - (t - t0) v0| < (m + 2) r^{1+2s}.
struct StackedCylinder {
    Cylinder base;
    int m = 1;

    bool contains(const KineticPoint& z) const;
    double volume() const;
};

StackedCylinder stacked_cylinder(const Cylinder& Q, int m);

// coefficient * t^k0 * prod x_i^{a_i} * prod v_i^{b_i}
struct KineticMonomial {
    double coefficient = 1.0;
    int k0 = 0;
    std::vector<int> a;
    std::vector<int> b;

    double degree(double s) const;
    double operator()(const KineticPoint& z) const;
};

using KineticPolynomial = std::vector<KineticMonomial>;

// Max over nonzero monomials of 2s k0 + (1+2s) sum a + sum b; -inf for p = 0.
double kinetic_degree(const KineticPolynomial& p, double s);
double kinetic_degree(const KineticMonomial& m, double s);

// All unit monomials of kinetic degree strictly below alpha (ties excluded).
std::vector<KineticMonomial> monomial_basis(int d, double s, double alpha);

}  // namespace kinetik
