#include <cmath>
#include <complex>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "kinetik/evolve.hpp"

using namespace kinetik;
using cplx = std::complex<double>;

namespace {

template <class F>
double simpson(F&& f, double a, double b, double tol, int depth = 24) {
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

double truncated_symbol(double xi, double s, double R) {
    auto g = [&](double r) {
        if (r == 0.0) return 0.0;
        const double x = xi * r;
        const double one_minus_j0 = x < 0.1 ? x * x / 4 - std::pow(x, 4) / 64 + std::pow(x, 6) / 2304
                                            : 1.0 - std::cyl_bessel_j(0.0, x);
        return std::pow(r, -1.0 - 2.0 * s) * one_minus_j0;
    };
    double sum = 0.0;
    for (int k = 0; k < 16; ++k) sum += simpson(g, R * k / 16, R * (k + 1) / 16, 1e-12);
    return 2.0 * kPi * sum;
}

// Method of lines for one x-mode: dF/dt = -i kappa.v F - (-Delta)^s F, RK4,
// the fractional Laplacian applied as a Fourier multiplier on the periodic box.
std::vector<cplx> mol_mode(const Grid& g, std::vector<cplx> F, const Vec& kappa, double s, double T, int steps) {
    auto rhs = [&](const std::vector<cplx>& u) {
        SpectralField sf = to_spectral_complex(g, u);
        for (std::size_t p = 0; p < sf.coeffs.size(); ++p) sf.coeffs[p] *= std::pow(sf.frequency(p).squaredNorm(), s);
        std::vector<cplx> lap = from_spectral_complex(sf), out(u.size());
        for (std::size_t p = 0; p < u.size(); ++p) out[p] = cplx(0.0, -kappa.dot(g.point(p))) * u[p] - lap[p];
        return out;
    };
    const double dt = T / steps;
    auto axpy = [](const std::vector<cplx>& a, double c, const std::vector<cplx>& b) {
        std::vector<cplx> r(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + c * b[i];
        return r;
    };
    for (int n = 0; n < steps; ++n) {
        const auto k1 = rhs(F), k2 = rhs(axpy(F, dt / 2, k1)), k3 = rhs(axpy(F, dt / 2, k2)), k4 = rhs(axpy(F, dt, k3));
        for (std::size_t i = 0; i < F.size(); ++i) F[i] += dt / 6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return F;
}

// max over |v| <= window of |library - MOL| relative to max |F0|
double kolmogorov_vs_mol(double s, double L, int n, double T, double window) {
    PhaseGrid pg;
    pg.v = Grid{2, n, L};
    const Grid& g = pg.v;
    std::vector<cplx> F0(g.size());
    for (std::size_t p = 0; p < g.size(); ++p) F0[p] = std::exp(-2.0 * g.point(p).squaredNorm());
    PhaseField f(pg);
    f.add_mode({1, 0, 0}, F0);
    const PhaseField out = kolmogorov_exact(f, T, s);
    const std::vector<cplx> ref = mol_mode(g, F0, f.wavevector({1, 0, 0}), s, T, 400);
    const XMode* m = out.find({1, 0, 0});
    REQUIRE(m != nullptr);
    double err = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p)
        if (g.point(p).norm() <= window) err = std::max(err, std::abs(m->F[p] - ref[p]));
    return err;
}

PhaseField random_state(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const double a = U(rng), b = U(rng), c = U(rng), u1 = U(rng), u2 = U(rng);
    PhaseGrid pg;
    pg.v = Grid{2, 32, 5.0};
    return PhaseField::sample(pg, 4, [=](const Vec& x, const Vec& v) {
        const double w = std::exp(-(std::pow(v[0] - u1, 2) + std::pow(v[1] - u2, 2)));
        return w * (1.5 + a * std::cos(x[0]) + b * std::sin(x[1]) + c * std::cos(x[0] + x[1]));
    });
}

double max_mode_diff(const PhaseField& a, const PhaseField& b) {
    double err = 0.0;
    for (const auto& m : a.modes) {
        const XMode* o = b.find(m.k);
        REQUIRE(o != nullptr);
        for (std::size_t p = 0; p < m.F.size(); ++p) err = std::max(err, std::abs(m.F[p] - o->F[p]));
    }
    return err;
}

CollisionModel model(double gamma, double s) {
    CollisionModel m;
    m.gamma = gamma;
    m.s = s;
    return m;
}

DensityField mixture(const Grid& g) {
    return sample(AnalyticField::maxwellian(2, 0.6, make_vec({1.0, 0.0}), 0.5) +
                      AnalyticField::maxwellian(2, 0.4, make_vec({-1.0, 0.5}), 0.7),
                  g);
}

}  // namespace

TEST_CASE("Kolmogorov exponent against quadrature") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> N(0.0, 2.0);
    for (double s : {0.3, 0.5, 0.8, 1.0})
        for (int i = 0; i < 8; ++i) {
            const Vec xi = make_vec({N(rng), N(rng)});
            Vec kappa = make_vec({N(rng), N(rng)});
            Vec xi_use = xi;
            if (i == 0) xi_use = -0.4 * kappa;  // the path passes through 0 at sigma = 0.4
            const double t = 0.9;
            auto integrand = [&](double sig) { return std::pow((xi_use + sig * kappa).squaredNorm(), s); };
            const double ref = simpson(integrand, 0.0, 0.4, 1e-12) + simpson(integrand, 0.4, t, 1e-12);
            CHECK(kolmogorov_exponent(xi_use, kappa, t, s) == doctest::Approx(ref).epsilon(1e-8));
            CHECK(kolmogorov_exponent(xi_use, kappa, 0.0, 0.3, s) + kolmogorov_exponent(xi_use, kappa, 0.3, t, s) ==
                  doctest::Approx(kolmogorov_exponent(xi_use, kappa, t, s)).epsilon(1e-10));
        }
    CHECK(kolmogorov_exponent(make_vec({3.0, 4.0}), zero_vec(2), 2.0, 0.5) == doctest::Approx(10.0).epsilon(1e-15));
}

TEST_CASE("Kolmogorov flow: trivial cases and invariants") {
    const PhaseField f0 = random_state(1);
    const PhaseField same = kolmogorov_exact(f0, 0.0, 0.5);
    CHECK(max_mode_diff(f0, same) == 0.0);

    // k = 0: pure fractional heat multiplier
    PhaseGrid pg;
    pg.v = Grid{2, 32, 5.0};
    const PhaseField h0 = PhaseField::x_independent(pg, [](const Vec& v) { return std::exp(-v.squaredNorm()); });
    const double s = 0.4, t = 0.7;
    const KolmogorovState a = KolmogorovState::from_field(h0, s), b = kolmogorov_exact(a, t);
    for (std::size_t p = 0; p < a.coeffs[0].coeffs.size(); ++p) {
        const double m = std::exp(-t * std::pow(a.coeffs[0].frequency(p).squaredNorm(), s));
        CHECK(std::abs(b.coeffs[0].coeffs[p] - m * a.coeffs[0].coeffs[p]) <= 1e-14 * std::abs(a.coeffs[0].coeffs[p]) + 1e-300);
    }

    // mass exact, L2 non-increasing
    double prev = f0.l2_squared();
    for (double tt : {0.1, 0.3, 0.9}) {
        const PhaseField f = kolmogorov_exact(f0, tt, 0.5);
        CHECK(f.mass() == doctest::Approx(f0.mass()).epsilon(1e-13));
        CHECK(f.l2_squared() <= prev * (1 + 1e-13));
        prev = f.l2_squared();
    }
    CHECK_THROWS_AS(kolmogorov_exact(f0, -1.0, 0.5), ValidationError);
}

TEST_CASE("Kolmogorov semigroup on random states") {
    for (std::uint64_t seed : {3u, 4u, 5u}) {
        const PhaseField f0 = random_state(seed);
        for (double s : {0.3, 0.5}) {
            const PhaseField two = kolmogorov_exact(kolmogorov_exact(f0, 0.2, s), 0.35, s);
            const PhaseField one = kolmogorov_exact(f0, 0.55, s);
            double scale = 0.0;
            for (const auto& m : f0.modes)
                for (const cplx& c : m.F) scale = std::max(scale, std::abs(c));
            CHECK(max_mode_diff(one, two) <= 1e-9 * scale);
        }
    }
}

TEST_CASE("Kolmogorov flow against a method-of-lines run") {
    // s = 1: Gaussian tails, the periodised problems agree tightly
    const double e1 = kolmogorov_vs_mol(1.0, 6.0, 64, 0.3, 6.0);
    MESSAGE("s = 1 error " << e1);
    CHECK(e1 <= 1e-6);
    // s = 1/2: algebraic tails feel the box; compare on a window, error falls with L
    const double a = kolmogorov_vs_mol(0.5, 6.0, 64, 0.3, 2.0);
    const double b = kolmogorov_vs_mol(0.5, 12.0, 128, 0.3, 2.0);
    MESSAGE("s = 1/2 windowed error: L = 6 " << a << ", L = 12 " << b);
    CHECK(a <= 1e-2);
    CHECK(b < a);
}

TEST_CASE("linear kinetic step: transport, diffusion, source") {
    PhaseGrid pg;
    pg.v = Grid{2, 16, kPi};
    // pure transport of a plane wave: f(x - v dt, v)
    const auto datum = [](const Vec& x, const Vec& v) { return std::exp(-0.5 * v.squaredNorm()) * (1.0 + 0.5 * std::cos(x[0] + 2 * x[1])); };
    const PhaseField f0 = PhaseField::sample(pg, 8, datum);
    const KernelFunction zero = synthetic::zero(2);
    const double dt = 0.37;
    const PhaseField f1 = step_lin_kin(f0, zero, nullptr, dt, 0.5);
    for (const Vec& x : {make_vec({0.3, 1.0}), make_vec({2.0, -0.5})}) {
        const std::vector<double> sl = f1.slice(x);
        for (std::size_t p = 0; p < sl.size(); p += 7) {
            const Vec v = pg.v.point(p);
            CHECK(sl[p] == doctest::Approx(datum(x - dt * v, v)).epsilon(1e-12));
        }
    }

    // x-independent data, truncated isotropic kernel: L_K cos(v1) = -m_R(1) cos(v1)
    const double s = 0.5, R = 2.0;
    const KernelFunction K = synthetic::isotropic(2, s, R);
    const PhaseField c0 = PhaseField::x_independent(pg, [](const Vec& v) { return 2.0 + std::cos(v[0]); });
    const double bound = lin_kin_stability_bound(K, pg.v, s);
    REQUIRE(std::isfinite(bound));
    const PhaseField c1 = step_lin_kin(c0, K, nullptr, 0.9 * bound, s);
    const double m = truncated_symbol(1.0, s, R);
    double err = 0.0, scale = 0.0;
    for (std::size_t p = 0; p < pg.v.size(); ++p) {
        const double rate = (c1.modes[0].F[p].real() - c0.modes[0].F[p].real()) / (0.9 * bound);
        const double expect = -m * std::cos(pg.v.point(p)[0]);
        err = std::max(err, std::abs(rate - expect));
        scale = std::max(scale, std::abs(expect));
    }
    CHECK(err <= 0.03 * scale);
    CHECK_THROWS_AS(step_lin_kin(c0, K, nullptr, 2.0 * bound, s), ValidationError);

    // constant source, no kernel: linear growth
    const PhaseField h = PhaseField::x_independent(pg, [](const Vec&) { return 0.25; });
    PhaseField g = c0;
    for (int i = 0; i < 8; ++i) g = step_lin_kin(g, zero, &h, 0.125, s);
    CHECK(g.t == doctest::Approx(1.0).epsilon(1e-15));
    for (std::size_t p = 0; p < pg.v.size(); ++p)
        CHECK(g.modes[0].F[p].real() == doctest::Approx(c0.modes[0].F[p].real() + 0.25).epsilon(1e-14));
}

TEST_CASE("conservative projection") {
    const Grid g{2, 24, 6.0};
    const DensityField f = mixture(g);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> N(0.0, 1.0);
    std::vector<double> Q(g.size());
    for (double& q : Q) q = N(rng);
    const std::vector<double> P = conservative_projection(f, Q);
    double m = 0, e = 0, scale = 0;
    Vec mom = zero_vec(2);
    for (std::size_t p = 0; p < g.size(); ++p) {
        const Vec v = g.point(p);
        m += P[p];
        mom += P[p] * v;
        e += P[p] * v.squaredNorm();
        scale += std::abs(Q[p]) * (1 + v.squaredNorm());
    }
    CHECK(std::abs(m) <= 1e-12 * scale);
    CHECK(mom.norm() <= 1e-12 * scale);
    CHECK(std::abs(e) <= 1e-12 * scale);
    const DensityField z = DensityField::zeros(g);
    CHECK(conservative_projection(z, Q) == Q);
}

TEST_CASE("homogeneous evolution: Maxwellian, zero, mixture") {
    const Grid g{2, 16, 5.0};
    const CollisionModel m = model(0.0, 0.25);

    const DensityField M = sample(AnalyticField::maxwellian(2, 1.0, zero_vec(2), 1.0), g);
    EvolveOptions opt;
    const StabilityBound sb = homogeneous_stability_bound(M, m, opt);
    REQUIRE(std::isfinite(sb.dt));
    opt.dt = sb.dt;
    opt.T_end = 20 * sb.dt;
    opt.snapshot_every = 5;
    const HomogeneousTrajectory tm = evolve_homogeneous(M, m, opt);
    CHECK(tm.steps.size() == 21);
    double dev = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) dev = std::max(dev, std::abs(tm.snapshots.back().f.value_at(p) - M.value_at(p)));
    MESSAGE("Maxwellian deviation after 20 steps " << dev / M.max_value());
    CHECK(dev <= 1e-3 * M.max_value());

    EvolveOptions zo;
    zo.T_end = 0.5;
    const HomogeneousTrajectory tz = evolve_homogeneous(DensityField::zeros(g), m, zo);
    for (const auto& sn : tz.snapshots) CHECK(sn.f.max_value() == 0.0);

    const DensityField f0 = mixture(g);
    EvolveOptions mo;
    const StabilityBound mb = homogeneous_stability_bound(f0, m, mo);
    mo.dt = mb.dt;
    mo.T_end = 10 * mb.dt;
    mo.snapshot_every = 5;
    const HomogeneousTrajectory tr = evolve_homogeneous(f0, m, mo);
    CHECK(tr.max_mass_drift() < 1e-3);
    CHECK(tr.max_momentum_drift() < 1e-3);
    CHECK(tr.max_energy_drift() < 1e-3);
    // entropy non-increasing up to a per-step quadrature tolerance
    CHECK(tr.max_entropy_increment() <= 1e-6);
    CHECK(tr.steps.back().entropy < tr.steps.front().entropy);
    for (std::size_t i = 1; i < tr.snapshots.size(); ++i) {
        CHECK(tr.snapshots[i].t > tr.snapshots[i - 1].t);
        for (double x : tr.snapshots[i].f.values()) CHECK(x >= 0.0);
    }

    const std::string dir = "evolve_traj_test";
    write_trajectory(tr, dir, "{\"k\": 1}\n");
    CHECK(std::filesystem::exists(dir + "/diagnostics.csv"));
    CHECK(std::filesystem::exists(dir + "/header.json"));
    CHECK(std::filesystem::exists(dir + "/snap_0000.kfld"));
    const DensityField back = read_kfld(dir + "/snap_0000.kfld");
    CHECK(back.values() == f0.values());
    std::filesystem::remove_all(dir);

    // energy probe
    const EnergyReport er = energy_dissipation_probe(tr);
    CHECK(er.pass);
    const EnergyReport em = energy_dissipation_probe(tm);
    const double hs0 = std::pow(hs_seminorm(M, m.s), 2);
    for (const auto& row : em.rows) CHECK(row.hs_integral == doctest::Approx(row.t * hs0).epsilon(1e-3));
    const EnergyReport ez = energy_dissipation_probe(tz);
    for (const auto& row : ez.rows) {
        CHECK(row.l2_squared == 0.0);
        CHECK(row.hs_integral == 0.0);
        CHECK(row.margin == 0.0);
    }
}

TEST_CASE("Hoelder decay probes") {
    const double s = 0.5;
    // time-independent field: identical seminorm once every cylinder fits in the slab
    const PhaseFunction still = [](const KineticPoint& z) { return std::exp(-z.v.squaredNorm()) * std::sin(z.x[0]); };
    HolderProbeOptions po;
    po.center = KineticPoint(0.0, make_vec({0.5, 0.0}), make_vec({0.3, 0.0}));
    po.times = {2.0, 4.0, 8.0};
    po.n_nodes = 48;
    const HolderDecayTable ct = holder_decay_probe(still, s, po);
    CHECK(ct.rows[1].seminorm == ct.rows[0].seminorm);
    CHECK(ct.rows[2].seminorm == ct.rows[0].seminorm);
    CHECK(std::abs(ct.slope) <= 1e-12);

    PhaseGrid pg;
    pg.v = Grid{2, 64, 4.0};
    HolderProbeOptions kp;
    kp.center = KineticPoint(0.0, make_vec({0.5, 0.0}), make_vec({1.0, 0.0}));
    kp.times = {0.02, 0.05, 0.1, 0.2, 0.5};
    kp.n_nodes = 48;
    kp.radii = {0.25, 0.125};

    // rough datum: indicator of a box in v
    const KolmogorovFlow rough(PhaseField::sample(pg, 4, [](const Vec& x, const Vec& v) {
        return (std::abs(v[0]) < 1.0 && std::abs(v[1]) < 1.0 ? 1.0 : 0.0) * (1.0 + 0.5 * std::cos(x[0]));
    }), s);
    const HolderDecayTable rt = holder_decay_probe(rough, kp);
    MESSAGE("rough datum slope " << rt.slope);
    CHECK(rt.all_finite);
    CHECK(rt.slope < -0.1);
    CHECK(rt.rows.front().seminorm > rt.rows.back().seminorm);

    const KolmogorovFlow smooth(PhaseField::sample(pg, 4, [](const Vec& x, const Vec& v) {
        return std::exp(-v.squaredNorm()) * (1.0 + 0.5 * std::cos(x[0]));
    }), s);
    const HolderDecayTable st = holder_decay_probe(smooth, kp);
    // dissipation shrinks the amplitude too, so compare seminorm / sup against log t
    auto relative_slope = [](const HolderDecayTable& tab) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (const auto& r : tab.rows) {
            const double x = std::log(r.t), y = std::log(r.seminorm / r.sup_norm);
            sx += x, sy += y, sxx += x * x, sxy += x * y;
        }
        const double n = static_cast<double>(tab.rows.size());
        return (n * sxy - sx * sy) / (n * sxx - sx * sx);
    };
    const double rs = relative_slope(st), rr = relative_slope(rt);
    MESSAGE("smooth datum slope " << st.slope << ", relative slopes smooth " << rs << " rough " << rr);
    CHECK(st.all_finite);
    CHECK(rs > -0.1);
    CHECK(rr < 2.0 * rs);
    CHECK(st.bounded);
}
