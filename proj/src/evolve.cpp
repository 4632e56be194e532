#include "kinetik/evolve.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "kinetik/csv.hpp"
#include "json.hpp"
#include "kinetik/parallel.hpp"

namespace kinetik {

namespace {

using cplx = std::complex<double>;

std::vector<Vec> v_nodes(const Grid& g) {
    std::vector<Vec> out(g.size());
    for (std::size_t p = 0; p < out.size(); ++p) out[p] = g.point(p);
    return out;
}

// Integer multi-indices in (-n/2, n/2)^d.
std::vector<std::array<int, 3>> mode_box(int d, int n) {
    const int lo = -(n / 2) + 1, hi = n / 2 - 1;
    std::vector<std::array<int, 3>> out;
    std::array<int, 3> k{0, 0, 0};
    for (k[0] = lo; k[0] <= hi; ++k[0])
        for (k[1] = lo; k[1] <= hi; ++k[1]) {
            if (d == 2) {
                out.push_back({k[0], k[1], 0});
                continue;
            }
            for (k[2] = lo; k[2] <= hi; ++k[2]) out.push_back(k);
        }
    return out;
}

double mode_weight(const std::array<int, 3>& k) { return (k[0] == 0 && k[1] == 0 && k[2] == 0) ? 1.0 : 2.0; }

}  // namespace

// ---- PhaseGrid / PhaseField ----

void PhaseGrid::validate() const {
    v.validate();
    require(x_period > 0.0 && std::isfinite(x_period), "x period must be positive");
}

bool in_half_space(const std::array<int, 3>& k, int d) {
    for (int i = d; i < 3; ++i)
        if (k[i] != 0) return false;
    for (int i = 0; i < d; ++i) {
        if (k[i] > 0) return true;
        if (k[i] < 0) return false;
    }
    return true;  // k = 0
}

PhaseField::PhaseField(const PhaseGrid& g) : grid(g) { grid.validate(); }

PhaseField PhaseField::x_independent(const PhaseGrid& g, const std::function<double(const Vec&)>& f) {
    PhaseField out(g);
    std::vector<cplx> F(g.v.size());
    for (std::size_t p = 0; p < F.size(); ++p) F[p] = f(g.v.point(p));
    out.add_mode({0, 0, 0}, F);
    return out;
}

PhaseField PhaseField::sample(const PhaseGrid& g, int nx, const std::function<double(const Vec&, const Vec&)>& f,
                              double drop_tol) {
    require(nx >= 2 && nx % 2 == 0, "x sample count must be even and >= 2");
    PhaseField out(g);
    const int d = g.d();
    const std::size_t nv = g.v.size();
    std::size_t nxd = 1;
    for (int k = 0; k < d; ++k) nxd *= nx;
    const double dx = g.x_period / nx;
    std::vector<Vec> xs(nxd);
    for (std::size_t j = 0; j < nxd; ++j) {
        Vec x(d);
        std::size_t rem = j;
        for (int k = d - 1; k >= 0; --k) {
            x[k] = static_cast<double>(rem % nx) * dx;
            rem /= nx;
        }
        xs[j] = x;
    }
    const std::vector<Vec> vs = v_nodes(g.v);
    std::vector<double> vals(nxd * nv);
    for (std::size_t j = 0; j < nxd; ++j)
        for (std::size_t p = 0; p < nv; ++p) vals[j * nv + p] = f(xs[j], vs[p]);

    std::vector<XMode> kept;
    double ref = 0.0;
    for (const auto& k : mode_box(d, nx)) {
        if (!in_half_space(k, d)) continue;
        const Vec kappa = out.wavevector(k);
        std::vector<cplx> phase(nxd);
        for (std::size_t j = 0; j < nxd; ++j) phase[j] = std::polar(1.0 / nxd, -kappa.dot(xs[j]));
        XMode m;
        m.k = k;
        m.F.assign(nv, cplx(0.0));
        parallel_for(nv, [&](std::size_t p) {
            cplx acc(0.0);
            for (std::size_t j = 0; j < nxd; ++j) acc += vals[j * nv + p] * phase[j];
            m.F[p] = acc;
        });
        double mx = 0.0;
        for (const cplx& c : m.F) mx = std::max(mx, std::abs(c));
        if (k == std::array<int, 3>{0, 0, 0}) ref = mx;
        kept.push_back(std::move(m));
    }
    for (auto& m : kept) {
        double mx = 0.0;
        for (const cplx& c : m.F) mx = std::max(mx, std::abs(c));
        const bool zero_mode = m.k == std::array<int, 3>{0, 0, 0};
        if (zero_mode || mx > drop_tol * std::max(ref, 1e-300)) out.modes.push_back(std::move(m));
    }
    return out;
}

void PhaseField::add_mode(const std::array<int, 3>& k, const std::vector<cplx>& F) {
    require(in_half_space(k, grid.d()), "mode must lie in the stored half space");
    require(F.size() == grid.v.size(), "mode sample count does not match the v grid");
    if (XMode* m = find(k)) {
        for (std::size_t p = 0; p < F.size(); ++p) m->F[p] += F[p];
        return;
    }
    modes.push_back({k, F});
}

XMode* PhaseField::find(const std::array<int, 3>& k) {
    for (auto& m : modes)
        if (m.k == k) return &m;
    return nullptr;
}

const XMode* PhaseField::find(const std::array<int, 3>& k) const {
    for (const auto& m : modes)
        if (m.k == k) return &m;
    return nullptr;
}

Vec PhaseField::wavevector(const std::array<int, 3>& k) const {
    Vec kappa(grid.d());
    for (int i = 0; i < grid.d(); ++i) kappa[i] = 2.0 * kPi * k[i] / grid.x_period;
    return kappa;
}

std::vector<double> PhaseField::slice(const Vec& x) const {
    std::vector<double> out(grid.v.size(), 0.0);
    for (const auto& m : modes) {
        const cplx e = std::polar(mode_weight(m.k), wavevector(m.k).dot(x));
        for (std::size_t p = 0; p < out.size(); ++p) out[p] += (m.F[p] * e).real();
    }
    return out;
}

double PhaseField::mass() const {
    const XMode* m0 = find({0, 0, 0});
    if (!m0) return 0.0;
    double acc = 0.0;
    for (const cplx& c : m0->F) acc += c.real();
    return acc * grid.v.cell() * std::pow(grid.x_period, grid.d());
}

double PhaseField::l2_squared() const {
    double acc = 0.0;
    for (const auto& m : modes) {
        double a = 0.0;
        for (const cplx& c : m.F) a += std::norm(c);
        acc += mode_weight(m.k) * a;
    }
    return acc * grid.v.cell() * std::pow(grid.x_period, grid.d());
}

PhaseEvaluator::PhaseEvaluator(const PhaseField& f) : d_(f.grid.d()), x_period_(f.grid.x_period) {
    const Grid& g = f.grid.v;
    for (const auto& m : f.modes) {
        std::vector<double> re(m.F.size()), im(m.F.size());
        for (std::size_t p = 0; p < m.F.size(); ++p) {
            re[p] = m.F[p].real();
            im[p] = m.F[p].imag();
        }
        kappa_.push_back(f.wavevector(m.k));
        weight_.push_back(mode_weight(m.k));
        re_.emplace_back(g.d, g.n, -g.half_width, g.h(), re, CubicBSpline::Boundary::periodic);
        im_.emplace_back(g.d, g.n, -g.half_width, g.h(), im, CubicBSpline::Boundary::periodic);
    }
}

double PhaseEvaluator::operator()(const Vec& x, const Vec& v) const {
    require(x.size() == d_ && v.size() == d_, "phase point dimension mismatch");
    double acc = 0.0;
    for (std::size_t j = 0; j < kappa_.size(); ++j) {
        const double ph = kappa_[j].dot(x);
        const double a = re_[j](v.data());
        if (kappa_[j].squaredNorm() == 0.0) {
            acc += a;
            continue;
        }
        acc += weight_[j] * (a * std::cos(ph) - im_[j](v.data()) * std::sin(ph));
    }
    return acc;
}

// ---- Kolmogorov ----

namespace {

// F <- F e^{i sign t kappa.v}
void modulate(std::vector<cplx>& F, const Vec& kappa, const Grid& g, double t, double sign) {
    if (kappa.squaredNorm() == 0.0 || t == 0.0) return;
    for (std::size_t p = 0; p < F.size(); ++p) F[p] *= std::polar(1.0, sign * t * kappa.dot(g.point(p)));
}

}  // namespace

KolmogorovState KolmogorovState::from_field(const PhaseField& f, double s) {
    require(s > 0.0 && s <= 1.0, "Kolmogorov order s must lie in (0, 1]");
    KolmogorovState st;
    st.grid = f.grid;
    st.s = s;
    st.t = f.t;
    for (const auto& m : f.modes) {
        std::vector<cplx> H = m.F;
        modulate(H, f.wavevector(m.k), f.grid.v, f.t, 1.0);
        st.k.push_back(m.k);
        st.coeffs.push_back(to_spectral_complex(f.grid.v, H));
    }
    return st;
}

PhaseField KolmogorovState::to_field() const {
    PhaseField f(grid);
    f.t = t;
    for (std::size_t j = 0; j < k.size(); ++j) {
        std::vector<cplx> F = from_spectral_complex(coeffs[j]);
        modulate(F, f.wavevector(k[j]), grid.v, t, -1.0);
        f.modes.push_back({k[j], std::move(F)});
    }
    return f;
}

double kolmogorov_exponent(const Vec& xi, const Vec& kappa, double t0, double t1, double s) {
    if (t1 <= t0) return 0.0;
    const double a = kappa.squaredNorm(), b = xi.dot(kappa), c = xi.squaredNorm();
    if (a == 0.0) return (t1 - t0) * std::pow(c, s);
    if (s == 1.0) {
        auto P = [&](double t) { return t * c + t * t * b + t * t * t * a / 3.0; };
        return P(t1) - P(t0);
    }
    if (s == 0.5) {
        // |xi + sigma kappa| = sqrt(a) sqrt((sigma + b/a)^2 + m)
        const double m = std::max(0.0, (c - b * b / a) / a);
        auto G = [m](double u) {
            if (m == 0.0) return 0.5 * u * std::abs(u);
            return 0.5 * (u * std::sqrt(u * u + m) + m * std::asinh(u / std::sqrt(m)));
        };
        return std::sqrt(a) * (G(t1 + b / a) - G(t0 + b / a));
    }
    auto integrand = [&](double sigma) { return std::pow(std::max(0.0, a * sigma * sigma + 2.0 * b * sigma + c), s); };
    using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
    // split at the closest approach to 0, where the integrand has a cusp
    const double star = -b / a;
    if (star > t0 && star < t1)
        return GK::integrate(integrand, t0, star, 15, 1e-12) + GK::integrate(integrand, star, t1, 15, 1e-12);
    return GK::integrate(integrand, t0, t1, 15, 1e-12);
}

double kolmogorov_exponent(const Vec& xi, const Vec& kappa, double t, double s) {
    return kolmogorov_exponent(xi, kappa, 0.0, t, s);
}

KolmogorovState kolmogorov_exact(const KolmogorovState& f0, double t) {
    require(t >= 0.0 && std::isfinite(t), "Kolmogorov time must be >= 0");
    KolmogorovState out = f0;
    out.t = f0.t + t;
    if (t == 0.0) return out;
    PhaseField probe(f0.grid);
    for (std::size_t j = 0; j < f0.k.size(); ++j) {
        // the co-moving profile sees the symbol |xi - tau kappa|^{2s}
        const Vec kappa = probe.wavevector(f0.k[j]);
        const Vec back = -kappa;
        SpectralField& sf = out.coeffs[j];
        parallel_for(sf.coeffs.size(), [&](std::size_t p) {
            sf.coeffs[p] *= std::exp(-kolmogorov_exponent(sf.frequency(p), back, f0.t, out.t, f0.s));
        });
    }
    return out;
}

PhaseField kolmogorov_exact(const PhaseField& f0, double t, double s) {
    if (t == 0.0) {
        require(s > 0.0 && s <= 1.0, "Kolmogorov order s must lie in (0, 1]");
        return f0;
    }
    return kolmogorov_exact(KolmogorovState::from_field(f0, s), t).to_field();
}

KolmogorovFlow::KolmogorovFlow(const PhaseField& f0, double s) : state0_(KolmogorovState::from_field(f0, s)) {}

std::shared_ptr<const PhaseEvaluator> KolmogorovFlow::at(double t) const {
    require(t >= state0_.t, "Kolmogorov flow is only defined forward in time");
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = cache_.find(t);
        if (it != cache_.end()) return it->second;
    }
    auto ev = std::make_shared<const PhaseEvaluator>(kolmogorov_exact(state0_, t - state0_.t).to_field());
    std::lock_guard<std::mutex> lock(mu_);
    return cache_.emplace(t, ev).first->second;
}

double KolmogorovFlow::operator()(const KineticPoint& z) const { return (*at(z.t))(z.x, z.v); }

// ---- linear kinetic stepping ----

double lin_kin_stability_bound(const KernelFunction& K, const Grid& v, double s, const LinKinOptions& opt) {
    require(static_cast<bool>(K) && K.dim() == v.d, "kernel dimension does not match the v grid");
    require(s > 0.0 && s < 1.0, "s must lie in (0, 1)");
    require(opt.cfl > 0.0, "cfl must be positive");
    std::vector<Vec> probes{zero_vec(v.d)};
    const double edge = v.half_width - v.h();
    for (int c = 0; c < (1 << v.d); ++c) {
        Vec p(v.d);
        for (int k = 0; k < v.d; ++k) p[k] = ((c >> k) & 1) ? edge : -edge;
        probes.push_back(p);
    }
    double lam = 0.0;
    for (const Vec& p : probes) lam = std::max(lam, avg_upper_bound(K, p, opt.upper_radii, s, opt.lattice.polar));
    if (lam <= 0.0) return std::numeric_limits<double>::infinity();
    return opt.cfl * std::pow(v.h(), 2.0 * s) / lam;
}

PhaseField step_lin_kin(const PhaseField& f, const KernelFunction& K, const PhaseField* h, double dt, double s,
                        const LinKinOptions& opt) {
    require(dt > 0.0 && std::isfinite(dt), "dt must be positive");
    const double bound = lin_kin_stability_bound(K, f.grid.v, s, opt);
    if (dt > bound)
        throw ValidationError("stability bound violated: dt = " + fmt(dt) + " > " + fmt(bound));
    const Grid& g = f.grid.v;
    const std::vector<Vec> vs = v_nodes(g);
    PhaseField out = f;
    out.t = f.t + dt;
    for (auto& m : out.modes) {
        const Vec kappa = out.wavevector(m.k);
        if (kappa.squaredNorm() == 0.0) continue;
        for (std::size_t p = 0; p < m.F.size(); ++p) m.F[p] *= std::polar(1.0, -dt * kappa.dot(vs[p]));
    }
    if (std::isfinite(bound) && !out.modes.empty()) {
        std::vector<std::vector<double>> cols;
        for (const auto& m : out.modes) {
            std::vector<double> re(m.F.size()), im(m.F.size());
            for (std::size_t p = 0; p < m.F.size(); ++p) {
                re[p] = m.F[p].real();
                im[p] = m.F[p].imag();
            }
            cols.push_back(std::move(re));
            cols.push_back(std::move(im));
        }
        const auto L = lattice_lk(K, g, cols, s, opt.lattice);
        for (std::size_t j = 0; j < out.modes.size(); ++j)
            for (std::size_t p = 0; p < g.size(); ++p) out.modes[j].F[p] += dt * cplx(L[2 * j][p], L[2 * j + 1][p]);
    }
    if (h) {
        require(h->grid.v.n == g.n && h->grid.v.d == g.d && h->grid.v.half_width == g.half_width &&
                    h->grid.x_period == f.grid.x_period,
                "source must share the phase grid");
        for (const auto& m : h->modes) {
            std::vector<cplx> add(m.F.size());
            for (std::size_t p = 0; p < add.size(); ++p) add[p] = dt * m.F[p];
            out.add_mode(m.k, add);
        }
    }
    return out;
}

// ---- homogeneous Boltzmann ----

std::vector<double> conservative_projection(const DensityField& f, const std::vector<double>& Q) {
    const Grid& g = f.grid();
    require(Q.size() == g.size(), "Q sample count does not match grid");
    const int d = g.d, nb = d + 2;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nb, nb);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nb);
    Eigen::VectorXd phi(nb);
    auto basis = [&](std::size_t p) {
        const Vec v = g.point(p);
        phi[0] = 1.0;
        for (int k = 0; k < d; ++k) phi[1 + k] = v[k];
        phi[d + 1] = v.squaredNorm();
    };
    double mass = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
        const double fp = f.value_at(p);
        basis(p);
        mass += fp;
        M.noalias() += fp * phi * phi.transpose();
        rhs += Q[p] * phi;
    }
    if (!(mass > 0.0)) return Q;
    const Eigen::VectorXd a = M.colPivHouseholderQr().solve(rhs);
    std::vector<double> out(Q);
    for (std::size_t p = 0; p < g.size(); ++p) {
        basis(p);
        out[p] -= f.value_at(p) * phi.dot(a);
    }
    return out;
}

namespace {

struct Conserved {
    double mass = 0.0, energy = 0.0;
    Vec momentum;
};

Conserved grid_moments(const std::vector<double>& vals, const Grid& g) {
    Conserved c;
    c.momentum = zero_vec(g.d);
    for (std::size_t p = 0; p < vals.size(); ++p) {
        const Vec v = g.point(p);
        c.mass += vals[p];
        c.momentum += vals[p] * v;
        c.energy += vals[p] * v.squaredNorm();
    }
    const double cell = g.cell();
    c.mass *= cell;
    c.momentum *= cell;
    c.energy *= cell;
    return c;
}

double rel(double a, double b, double scale) { return scale > 0.0 ? std::abs(a - b) / scale : std::abs(a - b); }

struct StepOutcome {
    std::vector<double> values;
    double clipped = 0.0;
    bool negative = false;
};

}  // namespace

double HomogeneousTrajectory::max_mass_drift() const {
    double m = 0.0;
    for (const auto& s : steps) m = std::max(m, s.mass_drift);
    return m;
}
double HomogeneousTrajectory::max_momentum_drift() const {
    double m = 0.0;
    for (const auto& s : steps) m = std::max(m, s.momentum_drift);
    return m;
}
double HomogeneousTrajectory::max_energy_drift() const {
    double m = 0.0;
    for (const auto& s : steps) m = std::max(m, s.energy_drift);
    return m;
}
double HomogeneousTrajectory::max_entropy_increment() const {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < steps.size(); ++i) m = std::max(m, steps[i].entropy_increment);
    return steps.size() > 1 ? m : 0.0;
}

std::vector<std::pair<double, DensityField>> HomogeneousTrajectory::as_pairs() const {
    std::vector<std::pair<double, DensityField>> out;
    for (const auto& s : snapshots) out.emplace_back(s.t, s.f);
    return out;
}

StabilityBound homogeneous_stability_bound(const DensityField& f0, const CollisionModel& model,
                                          const EvolveOptions& opt) {
    model.validate();
    require(f0.dim() == model.d, "field dimension does not match the model");
    StabilityBound sb;
    if (f0.max_value() == 0.0) return sb;
    const Grid& g = f0.grid();
    const KernelFunction K = boltzmann_kernel(f0, model);
    const Vec u = moments(f0, opt.moments).velocity();
    const double R = std::min(g.half_width - g.h(), f0.support_radius(1e-6));
    Vec e1 = zero_vec(g.d);
    e1[0] = 1.0;
    for (double r : {0.0, 0.5 * R, R})
        sb.lambda_hat = std::max(sb.lambda_hat, avg_upper_bound(K, u + r * e1, opt.upper_radii, model.s, opt.polar));
    if (sb.lambda_hat > 0.0) sb.dt = opt.cfl * std::pow(g.h(), 2.0 * model.s) / sb.lambda_hat;
    return sb;
}

HomogeneousTrajectory evolve_homogeneous(const DensityField& f0, const CollisionModel& model,
                                         const EvolveOptions& opt) {
    model.validate();
    require(f0.dim() == model.d, "field dimension does not match the model");
    require(opt.T_end > 0.0 && std::isfinite(opt.T_end), "T_end must be positive");
    require(opt.cfl > 0.0 && opt.dt >= 0.0, "cfl must be positive and dt nonnegative");
    require(opt.snapshot_every >= 1, "snapshot_every must be >= 1");
    if (model.regime_warning()) warn("gamma + 2s outside [0, 2]: outside the regime the solver is meant for");

    const Grid& g = f0.grid();
    const double cell = g.cell();
    HomogeneousTrajectory traj;
    traj.model = model;
    traj.options = opt;

    const StabilityBound sb = homogeneous_stability_bound(f0, model, opt);
    traj.lambda_hat = sb.lambda_hat;
    traj.dt_bound = sb.dt;
    double dt = opt.dt > 0.0 ? opt.dt : traj.dt_bound;
    if (!std::isfinite(dt)) dt = opt.T_end / 10.0;
    if (opt.dt > traj.dt_bound) warn("dt " + fmt(opt.dt) + " exceeds the stability bound " + fmt(traj.dt_bound));
    const double steps_real = std::ceil(opt.T_end / dt - 1e-9);
    if (steps_real > opt.max_steps)
        throw ValidationError("run needs " + fmt(steps_real) + " steps, above max_steps");
    const int nsteps = std::max(1, static_cast<int>(steps_real));
    dt = opt.T_end / nsteps;
    traj.dt = dt;

    const TailModel tail = f0.tail();
    const double fmax0 = f0.max_value();
    const Conserved c0 = grid_moments(f0.values(), g);
    double vabs = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) vabs += f0.value_at(p) * g.point(p).norm();
    vabs *= cell;

    auto rhs = [&](const DensityField& f) {
        if (f.max_value() == 0.0) return std::vector<double>(g.size(), 0.0);
        std::vector<double> Q = q_carleman_grid(f, model);
        return opt.conservative_projection ? conservative_projection(f, Q) : Q;
    };
    auto clip = [&](std::vector<double> vals, StepOutcome& out) {
        for (double& x : vals)
            if (x < 0.0) {
                out.negative = true;
                out.clipped += -x * cell;
                x = 0.0;
            }
        return vals;
    };
    // RK2 midpoint over `sub` equal substeps.
    auto advance = [&](const DensityField& f, double h, int sub) {
        StepOutcome res;
        DensityField cur = f;
        const double hs = h / sub;
        for (int i = 0; i < sub; ++i) {
            const std::vector<double> k1 = rhs(cur);
            std::vector<double> mid(g.size());
            for (std::size_t p = 0; p < mid.size(); ++p) mid[p] = cur.value_at(p) + 0.5 * hs * k1[p];
            StepOutcome tmp;
            const DensityField fm(g, clip(std::move(mid), tmp), tail);
            const std::vector<double> k2 = rhs(fm);
            std::vector<double> nxt(g.size());
            for (std::size_t p = 0; p < nxt.size(); ++p) nxt[p] = cur.value_at(p) + hs * k2[p];
            cur = DensityField(g, clip(std::move(nxt), res), tail);
        }
        res.values = cur.values();
        return res;
    };
    auto record = [&](int step, double t, double h, const DensityField& f, double clipped, int rejections,
                      const StepDiagnostics* prev) {
        const HydroState hs = moments(f, opt.moments);
        const Conserved c = grid_moments(f.values(), g);
        StepDiagnostics d;
        d.step = step;
        d.t = t;
        d.dt = h;
        d.mass = hs.rho;
        d.momentum = hs.momentum.norm();
        d.energy = hs.energy;
        d.entropy = hs.entropy;
        d.mass_drift = rel(c.mass, c0.mass, c0.mass);
        d.momentum_drift = vabs > 0.0 ? (c.momentum - c0.momentum).norm() / vabs : c.momentum.norm();
        d.energy_drift = rel(c.energy, c0.energy, c0.energy);
        d.entropy_increment = prev ? hs.entropy - prev->entropy : 0.0;
        d.clipped_mass = clipped;
        d.N_q = decay_profile(f, {opt.decay_order}).at(opt.decay_order);
        d.rejections = rejections;
        return d;
    };

    DensityField f = f0;
    traj.steps.push_back(record(0, 0.0, 0.0, f, 0.0, 0, nullptr));
    traj.snapshots.push_back({0.0, f});
    for (int step = 1; step <= nsteps; ++step) {
        const double t = step * dt;
        const Conserved before = grid_moments(f.values(), g);
        int rejections = 0;
        StepOutcome res;
        for (;;) {
            res = advance(f, dt, 1 << rejections);
            const Conserved after = grid_moments(res.values, g);
            const double drift =
                std::max({rel(after.mass, before.mass, c0.mass), rel(after.energy, before.energy, c0.energy),
                          vabs > 0.0 ? (after.momentum - before.momentum).norm() / vabs : 0.0});
            const bool bad = drift > opt.drift_budget || (opt.reject_negative && res.negative);
            if (!bad) break;
            if (++rejections > opt.max_rejections)
                throw NumericalError("step " + std::to_string(step) + " rejected " +
                                     std::to_string(opt.max_rejections) + " times (conservation drift " + fmt(drift) +
                                     ")");
        }
        f = DensityField(g, std::move(res.values), tail);
        if (fmax0 > 0.0 && f.max_value() > opt.safety_factor * fmax0)
            throw NumericalError("divergence: max f exceeds " + fmt(opt.safety_factor) + " x max f0 at t = " + fmt(t));
        traj.steps.push_back(record(step, t, dt, f, res.clipped, rejections, &traj.steps.back()));
        if (step % opt.snapshot_every == 0 || step == nsteps) traj.snapshots.push_back({t, f});
        if (opt.progress) opt.progress(step, t);
    }
    return traj;
}

void write_diagnostics_csv(const HomogeneousTrajectory& traj, const std::string& path) {
    CsvWriter w(path, {"step", "t", "dt", "mass", "momentum", "energy", "entropy", "mass_drift", "momentum_drift",
                       "energy_drift", "entropy_increment", "clipped_mass", "N_q", "rejections"});
    for (const auto& s : traj.steps) {
        w << static_cast<double>(s.step) << s.t << s.dt << s.mass << s.momentum << s.energy << s.entropy
          << s.mass_drift << s.momentum_drift << s.energy_drift << s.entropy_increment << s.clipped_mass << s.N_q
          << static_cast<double>(s.rejections);
        w.end_row();
    }
}

void write_trajectory(const HomogeneousTrajectory& traj, const std::string& dir, const std::string& config_text) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    if (!config_text.empty()) {
        std::ofstream os(fs::path(dir) / "config.json", std::ios::binary);
        os << config_text;
    }
    nlohmann::ordered_json hdr;
    hdr["d"] = traj.model.d;
    hdr["gamma"] = traj.model.gamma;
    hdr["s"] = traj.model.s;
    hdr["dt"] = traj.dt;
    hdr["dt_bound"] = traj.dt_bound;
    hdr["cfl"] = traj.options.cfl;
    hdr["lambda_hat"] = traj.lambda_hat;
    hdr["steps"] = static_cast<int>(traj.steps.size()) - 1;
    hdr["conservative_projection"] = traj.options.conservative_projection;
    nlohmann::ordered_json snaps = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "snap_%04zu.kfld", i);
        write_kfld(traj.snapshots[i].f, (fs::path(dir) / name).string());
        snaps.push_back({{"t", traj.snapshots[i].t}, {"file", name}});
    }
    hdr["snapshots"] = snaps;
    std::ofstream(fs::path(dir) / "header.json") << hdr.dump(2) << '\n';
    write_diagnostics_csv(traj, (fs::path(dir) / "diagnostics.csv").string());
}

// ---- diagnostics ----

namespace {

double fit_slope(const std::vector<HolderRow>& rows) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& r : rows) {
        if (r.t <= 0.0 || !(r.seminorm > 0.0) || !std::isfinite(r.seminorm)) continue;
        const double x = std::log(r.t), y = std::log(r.seminorm);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 2) return 0.0;
    const double den = n * sxx - sx * sx;
    return den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
}

}  // namespace

HolderDecayTable holder_decay_probe(const PhaseFunction& f, double s, const HolderProbeOptions& opt) {
    require(opt.alpha > 0.0 && opt.alpha <= 1.0, "alpha must lie in (0, 1]");
    require(!opt.radii.empty() && !opt.times.empty(), "need probe radii and times");
    const int d = opt.center.dim();
    require(d == 2 || d == 3, "probe centre needs d in {2, 3}");
    HolderDecayTable tab;
    tab.alpha = opt.alpha;
    tab.tau = opt.tau;
    tab.bound_constant = opt.bound_constant;
    tab.all_finite = true;
    for (double t : opt.times) {
        require(t >= 0.0, "probe times must be >= 0");
        KineticPoint c = opt.center;
        c.t = t;
        const ProbePlan plan = centered_plan(c, s, opt.radii, opt.n_nodes, opt.seed, opt.time_levels);
        const double lo = 0.5 * t;
        const PhaseDomain D = [lo, t](const KineticPoint& z) { return z.t >= lo - 1e-15 && z.t <= t + 1e-15; };
        const HolderEstimate est = holder_seminorm(f, D, opt.alpha, plan);
        HolderRow row;
        row.t = t;
        row.seminorm = est.seminorm;
        row.cylinders = est.cylinders_probed;
        for (const auto& Q : plan.cylinders)
            for (const auto& zeta : plan.nodes) {
                const KineticPoint z = galilean_compose(Q.center, kinetic_scale(Q.r, zeta, s));
                if (D(z)) row.sup_norm = std::max(row.sup_norm, std::abs(f(z)));
            }
        if (!std::isfinite(row.seminorm)) tab.all_finite = false;
        tab.rows.push_back(row);
    }
    tab.slope = fit_slope(tab.rows);
    tab.worst_ratio = 0.0;
    for (const auto& r : tab.rows)
        if (r.t >= opt.tau && r.sup_norm > 0.0) tab.worst_ratio = std::max(tab.worst_ratio, r.seminorm / r.sup_norm);
    tab.bounded = tab.all_finite && tab.worst_ratio <= opt.bound_constant;
    return tab;
}

HolderDecayTable holder_decay_probe(const KolmogorovFlow& flow, const HolderProbeOptions& opt) {
    require(opt.center.dim() == flow.grid().d(), "probe centre dimension does not match the flow");
    return holder_decay_probe([&flow](const KineticPoint& z) { return flow(z); }, flow.s(), opt);
}

PhaseFunction trajectory_function(const HomogeneousTrajectory& traj) {
    require(!traj.snapshots.empty(), "trajectory has no snapshots");
    auto snaps = std::make_shared<std::vector<Snapshot>>(traj.snapshots);
    return [snaps](const KineticPoint& z) {
        const auto& S = *snaps;
        const double t = std::clamp(z.t, S.front().t, S.back().t);
        std::size_t i = 0;
        while (i + 1 < S.size() && S[i + 1].t < t) ++i;
        if (i + 1 == S.size()) return S.back().f.evaluate(z.v, Interp::cubic);
        const double a = (S[i + 1].t - S[i].t) > 0.0 ? (t - S[i].t) / (S[i + 1].t - S[i].t) : 0.0;
        return (1.0 - a) * S[i].f.evaluate(z.v, Interp::cubic) + a * S[i + 1].f.evaluate(z.v, Interp::cubic);
    };
}

HolderDecayTable holder_decay_probe(const HomogeneousTrajectory& traj, const HolderProbeOptions& opt) {
    require(traj.snapshots.size() >= 2, "trajectory too short to populate cylinders");
    return holder_decay_probe(trajectory_function(traj), traj.model.s, opt);
}

EnergyReport energy_dissipation_probe(const HomogeneousTrajectory& traj, const EnergyOptions& opt) {
    require(!traj.snapshots.empty(), "trajectory has no snapshots");
    const double s = traj.model.s;
    EnergyReport rep;
    rep.kappa = opt.kappa;
    const DensityField& f0 = traj.snapshots.front().f;
    const Grid& g = f0.grid();
    if (opt.C_lo >= 0.0) {
        rep.C_lo = opt.C_lo;
    } else if (f0.max_value() > 0.0) {
        // growth rate of ||f||^2 allowed by the lower-order term, with slack 3/2
        const double cb = calibrated_cb(traj.model);
        const double floor = 1e-3 * f0.max_value();
        std::vector<std::size_t> nodes;
        for (std::size_t p = 0; p < g.size(); p += 2)
            if (f0.value_at(p) > floor) nodes.push_back(p);
        std::vector<double> conv(nodes.size());
        parallel_for(nodes.size(),
                     [&](std::size_t i) { conv[i] = gamma_convolution(f0, g.point(nodes[i]), traj.model); });
        double mx = 0.0;
        for (double c : conv) mx = std::max(mx, c);
        rep.C_lo = 3.0 * cb * mx;
    }
    double sup = 0.0, hs_int = 0.0, l2_int = 0.0;
    const double cell = g.cell();
    double l2_0 = 0.0;
    for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
        const DensityField& f = traj.snapshots[i].f;
        EnergyRow row;
        row.t = traj.snapshots[i].t;
        for (double x : f.values()) row.l2_squared += x * x;
        row.l2_squared *= cell;
        const double hs = f.max_value() > 0.0 ? hs_seminorm(f.grid(), f.values(), s) : 0.0;
        row.hs_squared = hs * hs;
        if (i == 0) {
            l2_0 = row.l2_squared;
        } else {
            const EnergyRow& prev = rep.rows.back();
            const double dt = row.t - prev.t;
            hs_int += 0.5 * dt * (row.hs_squared + prev.hs_squared);
            l2_int += 0.5 * dt * (row.l2_squared + prev.l2_squared);
        }
        sup = std::max(sup, row.l2_squared);
        row.sup_l2 = sup;
        row.hs_integral = hs_int;
        row.l2_integral = l2_int;
        row.margin = l2_0 + rep.C_lo * l2_int - (sup + rep.kappa * hs_int);
        rep.rows.push_back(row);
    }
    rep.pass = std::all_of(rep.rows.begin(), rep.rows.end(), [](const EnergyRow& r) { return r.margin >= 0.0; });
    return rep;
}

void write_holder_csv(const HolderDecayTable& table, const std::string& path) {
    CsvWriter w(path, {"t", "seminorm", "sup_norm", "cylinders"});
    for (const auto& r : table.rows) {
        w << r.t << r.seminorm << r.sup_norm << static_cast<double>(r.cylinders);
        w.end_row();
    }
}

void write_energy_csv(const EnergyReport& rep, const std::string& path) {
    CsvWriter w(path, {"t", "l2_squared", "hs_squared", "sup_l2", "hs_integral", "l2_integral", "margin"});
    for (const auto& r : rep.rows) {
        w << r.t << r.l2_squared << r.hs_squared << r.sup_l2 << r.hs_integral << r.l2_integral << r.margin;
        w.end_row();
    }
}

}  // namespace kinetik
