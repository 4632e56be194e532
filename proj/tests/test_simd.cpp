#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "kinetik/bspline.hpp"
#include "kinetik/collision.hpp"
#include "kinetik/simd.hpp"

using namespace kinetik;
namespace ks = kinetik::simd;

namespace {

struct IsaGuard {
    ks::Isa saved = ks::active_isa();
    ~IsaGuard() { ks::force_isa(saved); }
};

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> N(0.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = N(rng);
    return v;
}

CubicBSpline test_spline(int n, double L, std::vector<double>* samples = nullptr) {
    const double h = 2 * L / (n - 1);
    std::vector<double> s(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double x = -L + i * h, y = -L + j * h;
            s[static_cast<std::size_t>(i) * n + j] = std::exp(-x * x - 0.5 * y * y) * (1.0 + 0.3 * std::sin(2 * x + y)) - 0.05;
        }
    if (samples) *samples = s;
    return CubicBSpline(2, n, -L, h, s, CubicBSpline::Boundary::mirror);
}

}  // namespace

TEST_CASE("isa selection") {
    IsaGuard guard;
    CHECK(ks::isa_name(ks::Isa::scalar) == "scalar");
    CHECK(ks::isa_name(ks::Isa::avx2) == "avx2");
    ks::force_isa(ks::Isa::scalar);
    CHECK(ks::active_isa() == ks::Isa::scalar);
    if (ks::avx2_available()) {
        ks::force_isa(ks::Isa::avx2);
        CHECK(ks::active_isa() == ks::Isa::avx2);
    } else {
        CHECK_THROWS_AS(ks::force_isa(ks::Isa::avx2), ValidationError);
    }
}

TEST_CASE("dot: scalar reference against a long double sum") {
    std::mt19937_64 rng(1);
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 16u, 33u, 1000u}) {
        const auto a = random_vector(rng, n), b = random_vector(rng, n);
        long double ref = 0.0L, mag = 0.0L;
        for (std::size_t i = 0; i < n; ++i) {
            ref += static_cast<long double>(a[i]) * b[i];
            mag += std::abs(static_cast<long double>(a[i]) * b[i]);
        }
        CHECK(std::abs(ks::scalar::dot(a.data(), b.data(), n) - static_cast<double>(ref)) <= 1e-15 * (1 + static_cast<double>(mag)));
    }
}

TEST_CASE("dot: avx2 matches scalar") {
    if (!ks::avx2_available()) return;
    std::mt19937_64 rng(2);
    for (std::size_t n = 0; n < 70; ++n) {
        const auto a = random_vector(rng, n), b = random_vector(rng, n);
        double mag = 0.0;
        for (std::size_t i = 0; i < n; ++i) mag += std::abs(a[i] * b[i]);
        CHECK(std::abs(ks::avx2::dot(a.data(), b.data(), n) - ks::scalar::dot(a.data(), b.data(), n)) <= 1e-14 * (1 + mag));
    }
    // unaligned starts
    const auto a = random_vector(rng, 101), b = random_vector(rng, 101);
    for (std::size_t off = 1; off < 4; ++off)
        CHECK(ks::avx2::dot(a.data() + off, b.data() + off, 97) ==
              doctest::Approx(ks::scalar::dot(a.data() + off, b.data() + off, 97)).epsilon(1e-13));
}

TEST_CASE("spline2: interpolation and clipping in the scalar reference") {
    std::vector<double> samples;
    const int n = 21;
    const double L = 3.0, h = 2 * L / (n - 1);
    const CubicBSpline sp = test_spline(n, L, &samples);
    std::vector<double> xs, ys;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            xs.push_back(-L + i * h);
            ys.push_back(-L + j * h);
        }
    std::vector<double> out(xs.size());
    ks::scalar::spline2_eval(sp.view2(), xs.data(), ys.data(), out.data(), xs.size());
    for (std::size_t k = 0; k < out.size(); ++k) CHECK(out[k] == doctest::Approx(std::max(0.0, samples[k])).epsilon(1e-11).scale(1.0));

    // off-node points against the unclipped scalar operator()
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-L - 1.0, L + 1.0);
    std::vector<double> px(500), py(500), po(500);
    for (std::size_t k = 0; k < 500; ++k) px[k] = U(rng), py[k] = U(rng);
    ks::scalar::spline2_eval(sp.view2(), px.data(), py.data(), po.data(), 500);
    for (std::size_t k = 0; k < 500; ++k) {
        const double x[2] = {px[k], py[k]};
        CHECK(po[k] == doctest::Approx(std::max(0.0, sp(x))).epsilon(1e-13).scale(1.0));
        CHECK(po[k] >= 0.0);
    }
}

TEST_CASE("spline2: avx2 matches scalar") {
    if (!ks::avx2_available()) return;
    const CubicBSpline sp = test_spline(33, 4.0);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(-5.0, 5.0);
    for (std::size_t n : {1u, 3u, 4u, 5u, 8u, 257u}) {
        std::vector<double> xs(n), ys(n), a(n), b(n);
        for (std::size_t k = 0; k < n; ++k) xs[k] = U(rng), ys[k] = U(rng);
        ks::scalar::spline2_eval(sp.view2(), xs.data(), ys.data(), a.data(), n);
        ks::avx2::spline2_eval(sp.view2(), xs.data(), ys.data(), b.data(), n);
        for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(a[k] - b[k]) <= 1e-14);
    }
}

TEST_CASE("collision operator agrees under both instruction sets") {
    if (!ks::avx2_available()) return;
    IsaGuard guard;
    CollisionModel m;
    m.gamma = 0.0;
    m.s = 0.5;
    const Grid g{2, 32, 6.0};
    const DensityField f = sample(AnalyticField::maxwellian(2, 0.6, make_vec({1.0, 0.0}), 0.5) +
                                      AnalyticField::maxwellian(2, 0.4, make_vec({-1.0, 0.5}), 0.7),
                                  g);
    const KernelFunction K = boltzmann_kernel(f, m);
    for (const Vec& v : {make_vec({0.0, 0.0}), make_vec({1.2, -0.4}), make_vec({-2.0, 1.0})}) {
        ks::force_isa(ks::Isa::scalar);
        const double a = apply_lk(K, f, v, m), qa = q_carleman(f, v, m);
        ks::force_isa(ks::Isa::avx2);
        const double b = apply_lk(K, f, v, m), qb = q_carleman(f, v, m);
        CHECK(b == doctest::Approx(a).epsilon(1e-10));
        CHECK(qb == doctest::Approx(qa).epsilon(1e-10).scale(std::abs(a)));
    }
}
