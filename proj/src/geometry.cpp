#include "kinetik/geometry.hpp"

#include <limits>

namespace kinetik {

KineticPoint::KineticPoint(double t_, Vec x_, Vec v_) : t(t_), x(std::move(x_)), v(std::move(v_)) {
    require(x.size() == v.size(), "x and v must have the same dimension");
    require(x.size() == 2 || x.size() == 3, "phase points live in d = 2 or 3");
}

KineticPoint KineticPoint::origin(int d) { return KineticPoint(0.0, Vec::Zero(d), Vec::Zero(d)); }

bool operator==(const KineticPoint& a, const KineticPoint& b) { return a.t == b.t && a.x == b.x && a.v == b.v; }

KineticPoint galilean_compose(const KineticPoint& z0, const KineticPoint& z) {
    require(z0.dim() == z.dim(), "galilean_compose: dimension mismatch");
    return KineticPoint(z0.t + z.t, z0.x + z.x + z.t * z0.v, z0.v + z.v);
}

KineticPoint galilean_inverse(const KineticPoint& z) { return KineticPoint(-z.t, -z.x + z.t * z.v, -z.v); }

KineticPoint kinetic_scale(double r, const KineticPoint& z, double s) {
    require(r > 0.0, "kinetic_scale: r must be positive");
    return KineticPoint(std::pow(r, 2.0 * s) * z.t, std::pow(r, 1.0 + 2.0 * s) * z.x, r * z.v);
}

bool Cylinder::contains(const KineticPoint& z) const {
    const double dt = z.t - center.t;
    if (!(dt > -std::pow(r, 2.0 * s) && dt <= 0.0)) return false;
    if (!((z.v - center.v).norm() < r)) return false;
    return (z.x - center.x - dt * center.v).norm() < std::pow(r, 1.0 + 2.0 * s);
}

double Cylinder::volume() const {
    const int d = center.dim();
    return std::pow(r, 2.0 * s) * ball_volume(d) * std::pow(r, (1.0 + 2.0 * s) * d) * ball_volume(d) * std::pow(r, d);
}

bool cylinder_contains(const Cylinder& Q, const KineticPoint& z) { return Q.contains(z); }

Cylinder make_cylinder(const KineticPoint& center, double r, double s) {
    require(r > 0.0, "cylinder radius must be positive");
    require(s > 0.0 && s < 1.0, "cylinder order s must lie in (0,1)");
    return Cylinder{center, r, s};
}

bool StackedCylinder::contains(const KineticPoint& z) const {
    const KineticPoint& c = base.center;
    const double dt = z.t - c.t;
    if (!(dt > 0.0 && dt < m * std::pow(base.r, 2.0 * base.s))) return false;
    if (!((z.v - c.v).norm() < base.r)) return false;
    return (z.x - c.x - dt * c.v).norm() < (m + 2) * std::pow(base.r, 1.0 + 2.0 * base.s);
}

double StackedCylinder::volume() const { return base.volume() * m * std::pow(m + 2.0, base.center.dim()); }

StackedCylinder stacked_cylinder(const Cylinder& Q, int m) {
    require(m >= 1, "stacked cylinder needs m >= 1");
    return StackedCylinder{Q, m};
}

double KineticMonomial::degree(double s) const {
    if (coefficient == 0.0) return -std::numeric_limits<double>::infinity();
    int sa = 0, sb = 0;
    for (int e : a) sa += e;
    for (int e : b) sb += e;
    return 2.0 * s * k0 + (1.0 + 2.0 * s) * sa + sb;
}

double KineticMonomial::operator()(const KineticPoint& z) const {
    double val = coefficient;
    for (int i = 0; i < k0; ++i) val *= z.t;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (int e = 0; e < a[i]; ++e) val *= z.x[static_cast<Eigen::Index>(i)];
    for (std::size_t i = 0; i < b.size(); ++i)
        for (int e = 0; e < b[i]; ++e) val *= z.v[static_cast<Eigen::Index>(i)];
    return val;
}

double kinetic_degree(const KineticMonomial& m, double s) { return m.degree(s); }

double kinetic_degree(const KineticPolynomial& p, double s) {
    double deg = -std::numeric_limits<double>::infinity();
    for (const auto& m : p) deg = std::max(deg, m.degree(s));
    return deg;
}

std::vector<KineticMonomial> monomial_basis(int d, double s, double alpha) {
    require(d == 2 || d == 3, "monomial basis needs d = 2 or 3");
    require(s > 0.0 && s < 1.0, "monomial basis needs s in (0,1)");
    std::vector<KineticMonomial> out;
    if (!(alpha > 0.0)) return out;
    const double tol = 1e-12;
    const double dx = 1.0 + 2.0 * s, dt = 2.0 * s;
    const int kmax = static_cast<int>(std::ceil(alpha / dt)) + 1;
    const int amax = static_cast<int>(std::ceil(alpha / dx)) + 1;
    const int bmax = static_cast<int>(std::ceil(alpha)) + 1;
    // Enumerate exponents (k0, a[0..d), b[0..d)) with bounded totals.
    std::vector<int> a(d, 0), b(d, 0);
    std::function<void(int, int, double)> rec_b, rec_a;
    int k0 = 0;
    rec_b = [&](int i, int left, double deg) {
        if (i == d) {
            if (deg < alpha - tol) out.push_back(KineticMonomial{1.0, k0, a, b});
            return;
        }
        for (int e = 0; e <= left; ++e) {
            b[i] = e;
            if (deg + e < alpha - tol) rec_b(i + 1, left - e, deg + e);
        }
        b[i] = 0;
    };
    rec_a = [&](int i, int left, double deg) {
        if (i == d) {
            rec_b(0, bmax, deg);
            return;
        }
        for (int e = 0; e <= left; ++e) {
            a[i] = e;
            if (deg + dx * e < alpha - tol) rec_a(i + 1, left - e, deg + dx * e);
        }
        a[i] = 0;
    };
    for (k0 = 0; k0 <= kmax; ++k0) {
        double deg = dt * k0;
        if (deg < alpha - tol) rec_a(0, amax, deg);
    }
    return out;
}

}  // namespace kinetik
