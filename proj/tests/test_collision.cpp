#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "doctest.h"
#include "kinetik/collision.hpp"
#include "kinetik/fields.hpp"

using namespace kinetik;

namespace {

CollisionModel model(double gamma = 0.0, double s = 0.25) {
    CollisionModel m;
    m.gamma = gamma;
    m.s = s;
    return m;
}

DensityField maxwellian(const Grid& g) { return sample(AnalyticField::maxwellian(g.d, 1.0, zero_vec(g.d), 1.0), g); }

DensityField two_bump(const Grid& g) {
    return sample(AnalyticField::maxwellian(2, 0.6, make_vec({1.0, 0.0}), 0.5) +
                      AnalyticField::maxwellian(2, 0.4, make_vec({-1.0, 0.5}), 0.7),
                  g);
}

// Adaptive Simpson, test-side.
template <class F>
double simpson(F&& f, double a, double b, double tol, int depth = 40) {
    auto rec = [&](auto&& self, double a, double b, double fa, double fm, double fb, double whole, double tol,
                   int depth) -> double {
        const double m = 0.5 * (a + b), lm = 0.5 * (a + m), rm = 0.5 * (m + b);
        const double flm = f(lm), frm = f(rm);
        const double left = (m - a) / 6 * (fa + 4 * flm + fm), right = (b - m) / 6 * (fm + 4 * frm + fb);
        if (depth <= 0 || std::abs(left + right - whole) <= 15 * tol) return left + right + (left + right - whole) / 15;
        return self(self, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
               self(self, m, b, fm, frm, fb, right, tol / 2, depth - 1);
    };
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    return rec(rec, a, b, fa, fm, fb, (b - a) / 6 * (fa + 4 * fm + fb), tol, depth);
}

// m_R(xi) = 2 pi int_0^R r^{-1-2s} (1 - J0(xi r)) dr, the d = 2 symbol of the
// kernel |u|^{-2-2s} 1{|u| < R}
double truncated_symbol(double xi, double s, double R) {
    auto g = [&](double r) {
        if (r == 0.0) return 0.0;
        return std::pow(r, -1.0 - 2.0 * s) * (1.0 - std::cyl_bessel_j(0.0, xi * r));
    };
    double sum = 0.0;
    const int panels = 64;
    for (int k = 0; k < panels; ++k) sum += simpson(g, R * k / panels, R * (k + 1) / panels, 1e-13);
    return 2.0 * kPi * sum;
}

}  // namespace

TEST_CASE("post-collisional velocities") {
    const Vec v = make_vec({1.0, 2.0}), vs = make_vec({-0.5, 0.25});
    const Vec e = (v - vs).normalized();
    auto [a, b] = post_collisional(v, vs, e);
    CHECK((a - v).norm() < 1e-14);
    CHECK((b - vs).norm() < 1e-14);
    auto [c, d] = post_collisional(v, vs, Vec(-e));
    CHECK((c - vs).norm() < 1e-14);
    CHECK((d - v).norm() < 1e-14);

    std::mt19937_64 rng(1);
    std::normal_distribution<double> N(0.0, 2.0);
    for (int i = 0; i < 1000; ++i) {
        const int dim = 2 + i % 2;
        Vec p(dim), q(dim), sg(dim);
        for (int k = 0; k < dim; ++k) {
            p[k] = N(rng);
            q[k] = N(rng);
            sg[k] = N(rng);
        }
        sg.normalize();
        auto [pp, qq] = post_collisional(p, q, sg);
        CHECK((pp + qq - p - q).norm() <= 1e-13 * (1 + p.norm() + q.norm()));
        CHECK(std::abs(pp.squaredNorm() + qq.squaredNorm() - p.squaredNorm() - q.squaredNorm()) <=
              1e-13 * (1 + p.squaredNorm() + q.squaredNorm()));
    }
    CHECK_THROWS_AS(post_collisional(v, vs, make_vec({1.0, 0.1})), ValidationError);
}

TEST_CASE("collision model validation") {
    CHECK_NOTHROW(model().validate());
    CHECK_THROWS_AS(model(-2.0).validate(), ValidationError);
    CHECK_THROWS_AS(model(1.5).validate(), ValidationError);
    CHECK_THROWS_AS(model(0.0, 1.0).validate(), ValidationError);
    CHECK_THROWS_AS(model(0.0, 0.0).validate(), ValidationError);
    CHECK_FALSE(model(0.0, 0.5).regime_warning());
    CHECK(model(-1.5, 0.25).regime_warning());
    CHECK(model(1.0, 0.75).regime_warning());
}

TEST_CASE("zero field gives zero") {
    const Grid g{2, 32, 6.0};
    const DensityField z = DensityField::zeros(g);
    const CollisionModel m = model();
    const Vec v = make_vec({0.5, -0.25});
    CHECK(q_sigma(z, v, m) == 0.0);
    CHECK(q_carleman(z, v, m) == 0.0);
    CHECK(carleman_kernel(z, v, make_vec({1.0, 0.0}), m) == 0.0);
    CHECK(lower_order_term(z, v, m) == 0.0);
}

TEST_CASE("equilibrium annihilation") {
    const Grid g{2, 64, 6.0};
    const DensityField M = maxwellian(g);
    const CollisionModel m = model();
    const KernelFunction K = boltzmann_kernel(M, m);
    double qs = 0.0, qc = 0.0, lk = 0.0;
    for (const Vec& v : {make_vec({0, 0}), make_vec({1, 0}), make_vec({0.5, -1.5}), make_vec({-2, 1})}) {
        qs = std::max(qs, std::abs(q_sigma(M, v, m)));
        qc = std::max(qc, std::abs(q_carleman(M, v, m)));
        lk = std::max(lk, std::abs(apply_lk(K, M, v, m)));
    }
    MESSAGE("sigma " << qs << " carleman " << qc << " lk " << lk);
    CHECK(qs <= 1e-3 * lk);
    CHECK(qc <= 1e-3 * lk);
}

TEST_CASE("Carleman kernel: linearity, symmetry, positivity") {
    const Grid g{2, 48, 6.0};
    const DensityField f = two_bump(g);
    const DensityField f2 = f.scaled(2.0);
    const CollisionModel m = model(0.0, 0.25);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-2.5, 2.5);
    for (int i = 0; i < 30; ++i) {
        const Vec v = make_vec({U(rng), U(rng)}), vp = make_vec({U(rng), U(rng)});
        const double k = carleman_kernel(f, v, vp, m);
        CHECK(k >= 0.0);
        CHECK(carleman_kernel(f2, v, vp, m) == doctest::Approx(2.0 * k).epsilon(1e-14));
        // mirrored node v' -> 2v - v' sees the same hyperplane
        CHECK(carleman_kernel(f, v, Vec(2.0 * v - vp), m) == doctest::Approx(k).epsilon(1e-13));
    }
    CHECK_THROWS_AS(carleman_kernel(f, make_vec({1, 1}), make_vec({1, 1}), m), ValidationError);
}

TEST_CASE("Carleman kernel sandwich against the hyperplane moment") {
    const Grid g{2, 64, 6.0};
    const DensityField M = maxwellian(g);
    for (double gamma : {0.0, -1.0, 0.5}) {
        const CollisionModel m = model(gamma, 0.25);
        const double a = gamma + 2 * m.s + 1;
        double lo = INFINITY, hi = 0.0;
        for (const Vec& v : {make_vec({0, 0}), make_vec({1, 0.5})}) {
            for (double r : {0.1, 0.2, 0.4}) {
                for (double th : {0.0, 0.7, 1.9}) {
                    const Vec e = make_vec({std::cos(th), std::sin(th)}), ep = make_vec({-e[1], e[0]});
                    const Vec vp = v + r * e;
                    // int over the line w = t e_perp of f(v + w) |t|^a, dense test-side quadrature
                    auto line = [&](double t) {
                        const Vec w = v + t * ep;
                        return std::exp(-0.5 * w.squaredNorm()) / (2 * kPi) * std::pow(std::abs(t), a);
                    };
                    const double mom = simpson(line, -12.0, 0.0, 1e-12) + simpson(line, 0.0, 12.0, 1e-12);
                    const double ratio = carleman_kernel(M, v, vp, m) * std::pow(r, 2 + 2 * m.s) / mom;
                    lo = std::min(lo, ratio);
                    hi = std::max(hi, ratio);
                }
            }
        }
        MESSAGE("gamma " << gamma << " band [" << lo << ", " << hi << "]");
        CHECK(lo > 0.0);
        CHECK(hi / lo < 2.0);
    }
}

TEST_CASE("apply_lk basics") {
    const Grid g{2, 48, 6.0};
    const CollisionModel m = model(0.0, 0.4);
    const DensityField c = sample([](const Vec&) { return 1.0; }, g);
    const KernelFunction K = synthetic::isotropic(2, 0.4, 1.0);
    // zero up to the rounding of the spline reconstruction of a constant
    for (const Vec& v : {make_vec({0, 0}), make_vec({1.5, -2})}) CHECK(std::abs(apply_lk(K, c, v, m)) <= 1e-12);
    // affine f with a centrally symmetric K
    const DensityField aff = sample([](const Vec& v) { return 2.0 + 0.1 * v[0] - 0.1 * v[1]; }, g);
    const DensityField bump = sample(AnalyticField::maxwellian(2, 1.0, zero_vec(2), 1.0), g);
    const double scale = std::abs(apply_lk(K, bump, zero_vec(2), m));
    for (const Vec& v : {make_vec({0, 0}), make_vec({1.5, -2}), make_vec({-3, 0.5})})
        CHECK(std::abs(apply_lk(K, aff, v, m)) <= 1e-6 * scale);
}

TEST_CASE("apply_lk against the spectral multiplier") {
    // f = 1 + cos(xi0.v)/2 and K = |u|^{-2-2s} 1{|u| < R}: L_K f = -m_R(xi0) cos(xi0.v)/2
    // with m_R = |xi0|^{2s}/c_{2,s} - (2 pi int_R^inf r^{-1-2s}(1 - J0(xi0 r)) dr)
    const Grid g{2, 64, 6.0};
    const double dxi = kPi / g.half_width;
    const Vec xi0 = make_vec({2 * dxi, dxi});
    const DensityField f = sample([&](const Vec& v) { return 1.0 + 0.5 * std::cos(xi0.dot(v)); }, g);
    for (double s : {0.25, 0.5, 0.75}) {
        const double R = 2.0;
        const CollisionModel m = model(0.0, s);
        const KernelFunction K = synthetic::isotropic(2, s, R);
        const double c2s = std::pow(4.0, s) * std::tgamma(1.0 + s) / (kPi * std::abs(std::tgamma(-s)));
        const double mR = truncated_symbol(xi0.norm(), s, R);
        const auto frac = fractional_laplacian(g, f.values(), s);
        double err = 0.0, err_frac = 0.0, amp = 0.0;
        for (std::size_t p = 0; p < g.size(); p += 37) {
            const Vec v = g.point(p);
            if (v.cwiseAbs().maxCoeff() > g.half_width - R - 0.5) continue;  // interior nodes
            const double got = apply_lk(K, f, v, m);
            const double want = -mR * 0.5 * std::cos(xi0.dot(v));
            // the same quantity through the fractional Laplacian plus the far-field correction
            const double tail = 2.0 * kPi * [&] {
                double sum = 0.0;
                for (int k = 0; k < 400; ++k) {
                    const double a = R + 0.25 * k, b = a + 0.25;
                    sum += simpson(
                        [&](double r) { return std::pow(r, -1 - 2 * s) * (1 - std::cyl_bessel_j(0.0, xi0.norm() * r)); },
                        a, b, 1e-14);
                }
                return sum + std::pow(R + 100.0, -2 * s) / (2 * s);
            }();
            const double via_frac = -(frac[p] / c2s - tail * 0.5 * std::cos(xi0.dot(v)));
            err = std::max(err, std::abs(got - want));
            err_frac = std::max(err_frac, std::abs(got - via_frac));
            amp = std::max(amp, std::abs(want));
        }
        MESSAGE("s " << s << " rel err " << err / amp << " via frac " << err_frac / amp);
        CHECK(err <= 0.03 * amp);
        CHECK(err_frac <= 0.03 * amp);
    }
}

TEST_CASE("lower order term") {
    const Grid g{2, 64, 6.0};
    const DensityField M = maxwellian(g);
    const CollisionModel m0 = model(0.0, 0.25);
    const Vec v = make_vec({0.5, 0.25});
    // gamma = 0: f(v) times the mass
    CHECK(lower_order_term(M, v, m0) == doctest::Approx(M.evaluate(v, Interp::cubic) * 1.0).epsilon(1e-3));
    // gamma = -1 at v = 0: f(0) int e^{-r^2/2} dr = sqrt(pi/2) / (2 pi)
    CollisionModel m1 = model(-1.0, 0.25);
    const double exact = std::sqrt(kPi / 2) / (2 * kPi);
    const double coarse = lower_order_term(M, zero_vec(2), m1);
    CHECK(coarse == doctest::Approx(exact).epsilon(0.005));
    CollisionModel fine = m1;
    fine.quad.conv_direction_pairs *= 10;
    fine.quad.panel_nodes = 12;
    fine.quad.max_panel = 0.1;
    CHECK(coarse == doctest::Approx(lower_order_term(M, zero_vec(2), fine)).epsilon(0.005));
    CHECK(gamma_convolution(M, zero_vec(2), m1) == doctest::Approx(std::sqrt(kPi / 2)).epsilon(0.005));
}

TEST_CASE("cancellation ratio is a constant of the model") {
    const Grid g{2, 64, 6.0};
    const DensityField M = maxwellian(g);
    const DensityField B = two_bump(g);
    const CollisionModel m = model(0.0, 0.25);
    const double r0 = cancellation_ratio(M, zero_vec(2), m);
    const double r1 = cancellation_ratio(M, make_vec({1, 0}), m);
    const double r2 = cancellation_ratio(B, make_vec({0.5, 0}), m);
    MESSAGE("ratios " << r0 << " " << r1 << " " << r2);
    CHECK(r0 > 0.0);
    CHECK(r1 == doctest::Approx(r0).epsilon(0.01));
    CHECK(r2 == doctest::Approx(r0).epsilon(0.01));
    CHECK(cancellation_ratio(M.scaled(2.0), zero_vec(2), m) == doctest::Approx(r0).epsilon(1e-13));
    CHECK(calibrated_cb(m) == doctest::Approx(r0).epsilon(0.01));
}

TEST_CASE("q_sigma and q_carleman agree") {
    const Grid g{2, 64, 6.0};
    const DensityField f = two_bump(g);
    const CollisionModel m = model(0.0, 0.25);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    std::vector<double> a, b;
    for (int i = 0; i < 20; ++i) {
        const Vec v = make_vec({U(rng), U(rng)});
        a.push_back(q_sigma(f, v, m));
        b.push_back(q_carleman(f, v, m));
    }
    double scale = 0.0, err = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        scale = std::max(scale, std::abs(a[i]));
        err = std::max(err, std::abs(a[i] - b[i]));
    }
    MESSAGE("max |q_sigma - q_carleman| / max |q_sigma| = " << err / scale);
    CHECK(err <= 0.02 * scale);
    // v = 0 pointwise
    const double s0 = q_sigma(f, zero_vec(2), m), c0 = q_carleman(f, zero_vec(2), m);
    CHECK(c0 == doctest::Approx(s0).epsilon(0.02));
}

TEST_CASE("weak-form conservation and entropy sign on the grid") {
    const Grid g{2, 32, 6.0};
    const DensityField f = two_bump(g);
    const CollisionModel m = model(0.0, 0.25);
    const auto Q = q_carleman_grid(f, m);
    double mass = 0.0, px = 0.0, py = 0.0, en = 0.0, ent = 0.0, abs_q = 0.0, abs_v = 0.0, abs_e = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
        const Vec v = g.point(p);
        mass += Q[p];
        px += v[0] * Q[p];
        py += v[1] * Q[p];
        en += v.squaredNorm() * Q[p];
        abs_q += std::abs(Q[p]);
        abs_v += v.norm() * std::abs(Q[p]);
        abs_e += v.squaredNorm() * std::abs(Q[p]);
        if (f.value_at(p) > 0.0) ent += Q[p] * std::log(f.value_at(p));
    }
    MESSAGE("mass " << mass / abs_q << " mom " << px / abs_v << "," << py / abs_v << " energy " << en / abs_e
                    << " entropy " << ent * g.cell());
    // declared budget: 2% of the absolute weighted sums
    CHECK(std::abs(mass) <= 0.02 * abs_q);
    CHECK(std::abs(px) <= 0.02 * abs_v);
    CHECK(std::abs(py) <= 0.02 * abs_v);
    CHECK(std::abs(en) <= 0.02 * abs_e);
    CHECK(ent * g.cell() <= 1e-6);
}

TEST_CASE("kernel CSV dump") {
    const Grid g{2, 32, 6.0};
    const KernelFunction K = boltzmann_kernel(maxwellian(g), model());
    write_kernel_csv(K, {{make_vec({0, 0}), make_vec({0.5, 0})}, {make_vec({1, 0}), make_vec({1, 1})}},
                     "kernel_dump_test.csv");
    std::ifstream is("kernel_dump_test.csv");
    std::string line;
    std::getline(is, line);
    CHECK(line == "v1,v2,vp1,vp2,K");
    int rows = 0;
    while (std::getline(is, line)) rows += !line.empty();
    CHECK(rows == 2);
    is.close();
    std::remove("kernel_dump_test.csv");
}
