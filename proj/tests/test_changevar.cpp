#include <cmath>
#include <random>

#include "doctest.h"
#include "kinetik/changevar.hpp"

using namespace kinetik;

namespace {

Vec random_vec(std::mt19937_64& rng, int d, double scale = 1.0) {
    std::normal_distribution<double> N(0.0, scale);
    Vec v(d);
    for (int k = 0; k < d; ++k) v[k] = N(rng);
    return v;
}

// Hand substitution: T u = u + (1/|v0| - 1)(u . e) e with e = v0/|v0|.
Vec hand_T(const Vec& v0, const Vec& u) {
    const double n = v0.norm();
    if (n < 1.0) return u;
    const Vec e = v0 / n;
    return u + (1.0 / n - 1.0) * u.dot(e) * e;
}

CollisionModel model(double gamma, double s) {
    CollisionModel m;
    m.gamma = gamma;
    m.s = s;
    return m;
}

}  // namespace

TEST_CASE("T on v0 and on its complement") {
    const Vec v0 = make_vec({2.0, 0.0});
    CHECK((apply_T(v0, v0) - make_vec({1.0, 0.0})).norm() <= 1e-15);
    CHECK((apply_T(v0, make_vec({0.0, 3.0})) - make_vec({0.0, 3.0})).norm() == 0.0);

    std::mt19937_64 rng(4);
    for (int d : {2, 3})
        for (int i = 0; i < 50; ++i) {
            const Vec w0 = random_vec(rng, d, 5.0);
            const VelocityTransform T(w0);
            const Vec u = random_vec(rng, d), w = random_vec(rng, d);
            const double a = 0.7, b = -1.3;
            CHECK((T.apply(a * u + b * w) - a * T.apply(u) - b * T.apply(w)).norm() <= 1e-12 * (1 + u.norm() + w.norm()));
            CHECK((T.inverse(T.apply(u)) - u).norm() <= 1e-12 * (1 + u.norm()));
            CHECK((T.apply(u) - hand_T(w0, u)).norm() <= 1e-12 * (1 + u.norm()));
            if (w0.norm() >= 1.0) {
                CHECK(T.determinant() == doctest::Approx(1.0 / w0.norm()).epsilon(1e-14));
                const Vec e = w0.normalized();
                CHECK((T.apply(e) - e / w0.norm()).norm() <= 1e-14);
                const Vec p = w - w.dot(e) * e;
                CHECK((T.apply(p) - p).norm() <= 1e-13 * (1 + p.norm()));
            }
        }
}

TEST_CASE("image of the unit ball is the flattened ellipsoid") {
    const Vec v0 = make_vec({1.5, -2.0, 0.5});
    const double n = v0.norm();
    const Vec e = v0 / n;
    std::mt19937_64 rng(8);
    for (int i = 0; i < 1000; ++i) {
        const Vec u = random_vec(rng, 3).normalized();
        const Vec y = apply_T(v0, u);
        // quadratic form of the ellipsoid with semi-axes 1/|v0| along e and 1 across
        const double a = y.dot(e), q = (y - a * e).squaredNorm() + (a * n) * (a * n);
        CHECK(q == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("identity below |v0| = 1 and continuity at the seam") {
    const Vec inside = make_vec({0.6, 0.3});
    const VelocityTransform T(inside);
    CHECK(T.identity());
    CHECK(transform_rate(inside, 0.0, 0.5) == 1.0);
    const Vec u = make_vec({0.4, -2.0});
    CHECK(T.apply(u) == u);

    const Vec below = make_vec({1.0 - 1e-12, 0.0}), at = make_vec({1.0, 0.0});
    CHECK_FALSE(VelocityTransform(at).identity());
    CHECK((apply_T(below, u) - apply_T(at, u)).norm() <= 1e-11);
    CHECK(transform_rate(at, -1.0, 0.75) == doctest::Approx(transform_rate(below, -1.0, 0.75)).epsilon(1e-10));

    // identity branch: the transformed kernel is a Galilean translate
    const KernelFunction K = synthetic::tanh_modulated(2, 0.5, 0.3);
    const KernelFunction Kb = transform_kernel(K, KineticPoint(0.0, zero_vec(2), inside), model(0.0, 0.5));
    const KernelFunction Kt = translate_kernel(K, inside);
    CHECK(Kb(make_vec({0.1, 0.2}), make_vec({-0.3, 0.5})) == Kt(make_vec({0.1, 0.2}), make_vec({-0.3, 0.5})));
}

TEST_CASE("transformed isotropic kernel by substitution") {
    const double gamma = -1.0, s = 0.75;
    const Vec v0 = make_vec({3.0, 4.0});
    const KineticPoint z0(0.0, zero_vec(2), v0);
    const KernelFunction Kb = transform_kernel(synthetic::isotropic(2, s), z0, model(gamma, s));
    std::mt19937_64 rng(2);
    for (int i = 0; i < 10; ++i) {
        const Vec v = random_vec(rng, 2, 0.5), vp = random_vec(rng, 2, 0.5);
        const double hand = std::pow(5.0, -1.0 - gamma - 2 * s) * std::pow(hand_T(v0, v - vp).norm(), -2.0 - 2 * s);
        CHECK(Kb(v, vp) == doctest::Approx(hand).epsilon(1e-12));
    }
    // anisotropy: a step along v0 is shortened by 1/|v0|, so K is larger there
    CHECK(Kb(zero_vec(2), make_vec({0.06, 0.08})) > Kb(zero_vec(2), make_vec({-0.08, 0.06})));

    const KernelFunction Z = transform_kernel(synthetic::zero(2), z0, model(gamma, s));
    CHECK(Z(make_vec({0.1, 0.0}), make_vec({0.0, 0.3})) == 0.0);
}

TEST_CASE("kinetic transform maps Q_1 onto the anisotropic neighbourhood of z0") {
    const double gamma = 0.0, s = 0.5;
    const KineticPoint z0(0.5, make_vec({1.0, -1.0}), make_vec({4.0, 0.0}));
    const KineticTransform Z(z0, gamma, s);
    const double c = std::pow(4.0, -gamma - 2 * s);
    CHECK(Z.rate() == doctest::Approx(c).epsilon(1e-15));
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const Vec e = make_vec({1.0, 0.0});
    for (int i = 0; i < 1000; ++i) {
        Vec x(2), v(2);
        do x = make_vec({U(rng), U(rng)}); while (x.norm() >= 1.0);
        do v = make_vec({U(rng), U(rng)}); while (v.norm() >= 1.0);
        const KineticPoint z(-0.5 * (U(rng) + 1.0), x, v);
        const KineticPoint y = Z.apply(z);
        // time slab of length c, velocity ellipsoid, transported and flattened space ball
        CHECK(y.t <= z0.t);
        CHECK(y.t > z0.t - c);
        const Vec dv = y.v - z0.v;
        CHECK(std::pow(4.0 * dv.dot(e), 2) + std::pow(dv[1], 2) < 1.0 + 1e-12);
        const Vec dx = (y.x - z0.x - (y.t - z0.t) * z0.v) / c;
        CHECK(std::pow(4.0 * dx.dot(e), 2) + std::pow(dx[1], 2) < 1.0 + 1e-12);
        const KineticPoint back = Z.inverse(y);
        CHECK(std::abs(back.t - z.t) <= 1e-12);
        CHECK((back.x - z.x).norm() <= 1e-12);
        CHECK((back.v - z.v).norm() <= 1e-12);
    }

    const PhaseFunction h = [](const KineticPoint& p) { return p.t + p.x[0] + 2.0 * p.v[1]; };
    const PhaseFunction hb = transform_source(h, z0, gamma, s);
    const KineticPoint z(-0.2, make_vec({0.3, 0.1}), make_vec({-0.5, 0.25}));
    CHECK(hb(z) == doctest::Approx(c * h(Z.apply(z))).epsilon(1e-15));
}

TEST_CASE("uniformity sweep on Maxwellian data") {
    const CollisionModel m = model(0.0, 0.5);
    const Grid g{2, 48, 6.0};
    const DensityField f = sample(AnalyticField::maxwellian(2, 1.0, zero_vec(2), 1.0), g);
    SweepOptions opt;
    opt.probes = {{0, 0}, {0.5, 0}, {0, 0.5}};
    opt.cone.polar.direction_pairs = 32;
    opt.cone.polar.radial_nodes = 16;
    const SweepResult r = uniformity_sweep(f, {1.0, 2.0, 4.0, 8.0}, m, opt);
    REQUIRE(r.transformed.size() == 4);
    REQUIRE(r.control.size() == 4);
    MESSAGE("transformed ratios lambda " << r.transformed_ratio.lambda << " Lambda " << r.transformed_ratio.Lambda
                                         << " mu " << r.transformed_ratio.mu << "; control lambda "
                                         << r.control_ratio.lambda);
    for (const SweepRow& row : r.transformed) {
        CHECK(row.lambda > 0.0);
        CHECK(row.mu > 0.0);
        CHECK(std::isfinite(row.c1));
    }
    CHECK(r.transformed_ratio.lambda <= 3.0);
    CHECK(r.transformed_ratio.Lambda <= 3.0);
    CHECK(r.transformed_ratio.mu <= 3.0);
    // without the transform lambda-hat grows like (1+|v0|)^{gamma+2s+1}
    CHECK(r.control_ratio.lambda > 3.0 * r.transformed_ratio.lambda);

    const SweepResult z = uniformity_sweep(DensityField::zeros(g), {1.0, 2.0}, m, opt);
    for (const SweepRow& row : z.transformed) {
        CHECK(row.lambda == 0.0);
        CHECK(row.Lambda == 0.0);
        CHECK(row.mu == 0.0);
    }

    CollisionModel hard = model(1.5, 0.5);
    CHECK_THROWS_AS(uniformity_sweep(f, {1.0}, hard, opt), ValidationError);
}
