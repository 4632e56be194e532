#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "kinetik/hydro.hpp"

using namespace kinetik;

namespace {

DensityField maxw(const Grid& g, double rho, const Vec& u, double T) {
    return sample(AnalyticField::maxwellian(g.d, rho, u, T), g);
}

}  // namespace

TEST_CASE("moments of a Maxwellian") {
    const Grid g{2, 64, 6.0};
    const HydroState h = moments(maxw(g, 1.0, zero_vec(2), 1.0));
    CHECK(h.rho == doctest::Approx(1.0).epsilon(0.005));
    CHECK(h.momentum.norm() < 0.005);
    CHECK(h.energy == doctest::Approx(2.0).epsilon(0.005));
    CHECK(h.theta_defined);
    CHECK(h.theta == doctest::Approx(1.0).epsilon(0.005));
    // int f log f for the unit Gaussian in d = 2: -log(2 pi) - 1
    CHECK(h.entropy == doctest::Approx(-std::log(2 * kPi) - 1.0).epsilon(0.005));

    // d = 3: e = 3T, theta = T
    const Grid g3{3, 32, 6.0};
    const HydroState h3 = moments(maxw(g3, 2.0, zero_vec(3), 0.5));
    CHECK(h3.rho == doctest::Approx(2.0).epsilon(0.005));
    CHECK(h3.energy == doctest::Approx(2.0 * 3 * 0.5).epsilon(0.005));
    CHECK(h3.theta == doctest::Approx(0.5).epsilon(0.005));

    // the literal 1/3 factor in d = 2 gives (2/3) theta
    MomentOptions lit;
    lit.theta_literal_3 = true;
    CHECK(moments(maxw(g, 1.0, zero_vec(2), 1.0), lit).theta == doctest::Approx(2.0 / 3.0).epsilon(0.005));
}

TEST_CASE("moments of vacuum") {
    const HydroState h = moments(DensityField::zeros(Grid{2, 16, 4.0}));
    CHECK(h.rho == 0.0);
    CHECK(h.energy == 0.0);
    CHECK(h.entropy == 0.0);
    CHECK_FALSE(h.theta_defined);
    CHECK(std::isnan(h.theta));
}

TEST_CASE("translation shifts momentum and energy") {
    const Grid g{2, 64, 8.0};
    const DensityField f0 = sample(AnalyticField::maxwellian(2, 0.7, zero_vec(2), 0.8) +
                                       AnalyticField::bump(make_vec({0.5, 0.0}), 1.0, 0.3),
                                   g);
    const Vec u0 = make_vec({1.0, -0.5});
    const DensityField f1 = sample(AnalyticField::maxwellian(2, 0.7, u0, 0.8) +
                                       AnalyticField::bump(make_vec({1.5, -0.5}), 1.0, 0.3),
                                   g);
    const HydroState a = moments(f0), b = moments(f1);
    CHECK(b.rho == doctest::Approx(a.rho).epsilon(1e-3));
    CHECK((b.momentum - a.momentum - a.rho * u0).norm() < 2e-3);
    // e(f(. - u0)) = e + 2 u0.(rho u) + rho |u0|^2
    CHECK(b.energy == doctest::Approx(a.energy + 2 * u0.dot(a.momentum) + a.rho * u0.squaredNorm()).epsilon(2e-3));
    CHECK(b.theta == doctest::Approx(a.theta).epsilon(2e-3));
}

TEST_CASE("moments are linear and scale under dilation") {
    const Grid g{2, 48, 6.0};
    const DensityField f = maxw(g, 1.0, make_vec({0.3, 0.1}), 0.9);
    const HydroState a = moments(f), b = moments(f.scaled(3.0));
    CHECK(b.rho == doctest::Approx(3 * a.rho).epsilon(1e-12));
    CHECK(b.energy == doctest::Approx(3 * a.energy).epsilon(1e-12));
    CHECK((b.momentum - 3 * a.momentum).norm() < 1e-12);
    // f(lambda v) on the grid rescaled by 1/lambda: rho by lambda^{-d}, e by lambda^{-d-2}
    const double lam = 2.0;
    const DensityField fl(Grid{2, 48, 6.0 / lam}, f.values());
    const HydroState c = moments(fl);
    CHECK(c.rho == doctest::Approx(a.rho * std::pow(lam, -2.0)).epsilon(1e-3));
    CHECK(c.energy == doctest::Approx(a.energy * std::pow(lam, -4.0)).epsilon(1e-3));
}

TEST_CASE("entropy converges under refinement") {
    const auto f = AnalyticField::maxwellian(2, 1.0, make_vec({0.5, 0}), 0.6) +
                   AnalyticField::maxwellian(2, 0.5, make_vec({-1, 1}), 1.2);
    const double h1 = moments(sample(f, Grid{2, 48, 7.0})).entropy;
    const double h2 = moments(sample(f, Grid{2, 96, 7.0})).entropy;
    CHECK(h1 == doctest::Approx(h2).epsilon(0.005));
}

TEST_CASE("insufficient tail decay is rejected") {
    const Grid g{2, 32, 4.0};
    const DensityField slow = sample(AnalyticField::algebraic(2, 1.0, 3.5), g);
    CHECK(slow.tail().q < 4.0);
    CHECK_THROWS_AS(moments(slow), ValidationError);
}

TEST_CASE("hypothesis (H)") {
    const Grid g{2, 64, 6.0};
    const HydroBounds b{0.5, 2.0, 10.0, 10.0};
    const HReport ok = check_H(moments(maxw(g, 1.0, zero_vec(2), 1.0)), b);
    CHECK(ok.all_pass());
    CHECK(ok.mass_lower.margin == doctest::Approx(0.5).epsilon(0.01));
    CHECK(ok.mass_upper.margin == doctest::Approx(1.0).epsilon(0.01));

    const HReport thin = check_H(moments(maxw(g, 0.3, zero_vec(2), 1.0)), b);
    CHECK_FALSE(thin.mass_lower.pass);
    CHECK(thin.mass_lower.margin < 0.0);
    CHECK(thin.mass_upper.pass);

    const HReport vac = check_H(moments(DensityField::zeros(g)), b);
    CHECK_FALSE(vac.mass_lower.pass);
    CHECK_FALSE(vac.all_pass());

    // margins move by O(eps) under an eps perturbation
    const DensityField f = maxw(g, 1.0, zero_vec(2), 1.0);
    std::vector<double> pv = f.values();
    const double eps = 1e-6;
    for (double& x : pv) x += eps;
    const HReport pert = check_H(moments(DensityField(g, pv, f.tail())), b);
    const double vol = std::pow(2 * g.half_width, 2);
    CHECK(std::abs(pert.mass_lower.margin - ok.mass_lower.margin) <= 2 * eps * vol);
    CHECK(std::abs(pert.energy.margin - ok.energy.margin) <= 2 * eps * vol * 2 * 36.0);

    CHECK_THROWS_AS((HydroBounds{2.0, 1.0, 1.0, 1.0}.validate()), ValidationError);
    CHECK_THROWS_AS((HydroBounds{0.0, 1.0, 1.0, 1.0}.validate()), ValidationError);
}

TEST_CASE("decay profile") {
    const Grid g{2, 64, 6.0};
    const DensityField a = sample(AnalyticField::algebraic(2, 1.0, 5.0), g);
    const DecayProfile p = decay_profile(a, {0.0, 5.0});
    CHECK(p.at(5.0) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(p.at(0.0) == doctest::Approx(a.max_value()).epsilon(1e-12));
    CHECK_THROWS_AS(decay_profile(a, {6.0}), ValidationError);

    // brute force on a dense grid for a Maxwellian, r = 4
    const DensityField M = sample(AnalyticField::maxwellian(2, 1.0, zero_vec(2), 1.0), g);
    double brute = 0.0;
    for (int i = 0; i <= 4000; ++i) {
        const double r = 6.0 * i / 4000;
        brute = std::max(brute, std::pow(1 + r, 4) * std::exp(-r * r / 2) / (2 * kPi));
    }
    CHECK(decay_profile(M, {4.0}).at(4.0) == doctest::Approx(brute).epsilon(0.01));
}

TEST_CASE("envelope fit") {
    const Grid g{2, 32, 6.0};
    const DensityField M = sample(AnalyticField::maxwellian(2, 1.0, zero_vec(2), 1.0), g);
    std::vector<std::pair<double, DensityField>> stat, grow;
    for (double t : {0.0, 0.25, 0.5, 1.0}) {
        stat.emplace_back(t, M);
        grow.emplace_back(t, M.scaled(1.0 + t));
    }
    const EnvelopeFit a = envelope_fit(stat, 6.0);
    for (double n : a.N) CHECK(n == a.N[0]);
    const EnvelopeFit b = envelope_fit(grow, 6.0);
    for (std::size_t i = 0; i < b.N.size(); ++i) CHECK(b.N[i] == doctest::Approx((1.0 + b.t[i]) * a.N[0]).epsilon(1e-14));

    // A(t) = c0 (1 + t^{-beta}) recovered from exact data
    std::vector<std::pair<double, DensityField>> bar;
    for (double t : {0.05, 0.1, 0.2, 0.4, 0.8, 1.6}) bar.emplace_back(t, M.scaled(2.0 * (1 + std::pow(t, -0.7))));
    const EnvelopeFit c = envelope_fit(bar, 6.0);
    REQUIRE(c.fitted);
    CHECK(c.beta == doctest::Approx(0.7).epsilon(1e-3));
    CHECK(c.c0 == doctest::Approx(2.0 * a.N[0]).epsilon(1e-3));
    CHECK(c.residual < 1e-6);
    CHECK_THROWS_AS(envelope_fit(stat, -1.0), ValidationError);
}

TEST_CASE("hydro CSV columns") {
    const Grid g{2, 16, 5.0};
    HydroRecord r;
    r.state = moments(sample(AnalyticField::maxwellian(2, 1.0, zero_vec(2), 1.0), g));
    r.margins = check_H(r.state, {});
    write_hydro_csv({r}, "hydro_test.csv");
    std::ifstream is("hydro_test.csv");
    std::string line;
    std::getline(is, line);
    CHECK(line ==
          "t,rho,ux,uy,e,h,theta,N_q,margin_mass_lower,margin_mass_upper,margin_energy,margin_entropy");
    is.close();
    std::remove("hydro_test.csv");
}
