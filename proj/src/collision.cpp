#include "kinetik/collision.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include "carleman.hpp"
#include "kinetik/csv.hpp"
#include "kinetik/parallel.hpp"
#include "kinetik/simd.hpp"

namespace kinetik {

void CollisionModel::validate() const {
    require(d == 2 || d == 3, "collision model needs d = 2 or 3");
    require(gamma > -d && gamma <= 1.0, "gamma must lie in (-d, 1]");
    require(s > 0.0 && s < 1.0, "s must lie in (0, 1)");
    const auto& q = quad;
    require(q.lk_direction_pairs >= 1 && q.sigma_direction_pairs >= 1 && q.conv_direction_pairs >= 1,
            "direction counts must be positive");
    require(q.inner_nodes >= 1 && q.panel_nodes >= 1 && q.sigma_theta_inner >= 1 && q.sigma_theta_panels >= 1 &&
                q.sigma_theta_nodes >= 1,
            "node counts must be positive");
    require(q.plane_angles >= 4 && q.sigma_phi >= 2 && q.sigma_phi % 2 == 0, "angle counts too small or odd");
    require(q.h_pv >= 0.0 && q.max_panel > 0.0 && q.line_step > 0.0 && q.line_panel > 0.0,
            "quadrature lengths must be positive");
    require(q.sigma_theta_split > 0.0 && q.sigma_theta_split < kPi, "theta split must lie in (0, pi)");
    require(q.tail_tol > 0.0 && q.tail_tol < 1.0, "tail tolerance must lie in (0, 1)");
}

bool CollisionModel::regime_warning() const { return gamma + 2.0 * s < 0.0 || gamma + 2.0 * s > 2.0; }

double CollisionModel::angular_b(double cos_theta) const {
    const double sin_half = std::sqrt(std::max(0.0, 0.5 * (1.0 - cos_theta)));
    return std::pow(sin_half, -(d - 1) - 2.0 * s);
}

std::pair<Vec, Vec> post_collisional(const Vec& v, const Vec& v_star, const Vec& sigma) {
    require(v.size() == v_star.size() && v.size() == sigma.size(), "dimension mismatch");
    require(std::abs(sigma.norm() - 1.0) <= 1e-12, "sigma must be a unit vector");
    const Vec mid = 0.5 * (v + v_star);
    const double half = 0.5 * (v - v_star).norm();
    return {mid + half * sigma, mid - half * sigma};
}

namespace detail {

void evaluate(const DensityField& f, Interp interp, const PointBatch& pts, std::vector<double>& out) {
    const std::size_t n = pts.size();
    out.resize(n);
    if (interp == Interp::cubic) {
        const double* coords[3] = {pts.c[0].data(), pts.c[1].data(), pts.c[2].data()};
        f.evaluate_cubic(coords, out.data(), n);
        return;
    }
    double v[3];
    for (std::size_t i = 0; i < n; ++i) {
        for (int k = 0; k < pts.d; ++k) v[k] = pts.c[k][i];
        out[i] = f.evaluate(v, interp);
    }
}

double hyperplane_weight(int d, double s, double p, double rho, double tau) {
    const double a = std::pow(rho, -d - 2.0 * s) + std::pow(tau, -(d - 1) - 2.0 * s) / rho;
    const double w = (d == 2 ? 2.0 : 4.0) * a * std::pow(rho * rho + tau * tau, 0.5 * p);
    return d == 3 ? w * tau : w;
}

double kernel_support(const DensityField& f, const CollisionModel& m) {
    return f.support_radius(m.quad.tail_tol, std::max(0.0, m.gamma + 2.0 * m.s + 1.0));
}

namespace {

double power_p(const CollisionModel& m) { return m.gamma + 2.0 * m.s + 1.0; }

double ring_sum(const DensityField& f, Interp interp, const Vec& c, const Vec& a, const Vec& b, double tau,
                int n_phi, PointBatch& pts, std::vector<double>& vals) {
    pts.clear();
    for (int k = 0; k < n_phi; ++k) {
        const double phi = 2.0 * kPi * k / n_phi;
        pts.push(c + tau * (std::cos(phi) * a + std::sin(phi) * b));
    }
    evaluate(f, interp, pts, vals);
    double acc = 0.0;
    for (double x : vals) acc += x;
    return acc * 2.0 * kPi / n_phi;
}

inline void lagrange4(double x, double L[4]) {
    L[0] = -x * (x - 1.0) * (x - 2.0) / 6.0;
    L[1] = (x + 1.0) * (x - 1.0) * (x - 2.0) / 2.0;
    L[2] = -(x + 1.0) * x * (x - 2.0) / 2.0;
    L[3] = (x + 1.0) * x * (x - 1.0) / 6.0;
}

std::shared_ptr<const LineTable> build_table(int d, double s, double p, double delta, const std::vector<double>& rho,
                                             int M, int nodes) {
    auto t = std::make_shared<LineTable>();
    t->d = d;
    t->M = M;
    t->delta = delta;
    t->rho = rho;
    const int cols = t->cols();
    const int off = d == 2 ? M : 0;
    t->W.assign(rho.size() * cols, 0.0);
    t->mmin.assign(rho.size(), M + 1);
    std::vector<double> x, w;
    for (std::size_t j = 0; j < rho.size(); ++j) {
        double* row = &t->W[j * cols];
        const double r = rho[j];
        auto add = [&](double tpos, double weight) {
            double u = tpos / delta;
            int m = static_cast<int>(std::floor(u));
            double xl = u - m;
            double L[4];
            lagrange4(xl, L);
            for (int k = 0; k < 4; ++k) {
                int idx = m - 1 + k;
                if (d == 3 && idx < 0) idx = -idx;
                if (std::abs(idx) > M) continue;
                row[idx + off] += weight * L[k];
            }
        };
        for (int c = 0; c < M; ++c) {
            const double a = std::max(c * delta, r), b = (c + 1) * delta;
            if (!(b > a)) continue;
            x.clear();
            w.clear();
            graded_panels(a, b, a, b - a, nodes, x, w);
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double wt = w[i] * hyperplane_weight(d, s, p, r, x[i]);
                add(x[i], wt);
                if (d == 2) add(-x[i], wt);
            }
        }
        for (int idx = 0; idx <= M; ++idx) {
            bool nz = row[idx + off] != 0.0 || (d == 2 && row[off - idx] != 0.0);
            if (nz) {
                t->mmin[j] = idx;
                break;
            }
        }
    }
    return t;
}

}  // namespace

std::shared_ptr<const LineTable> line_table(const CollisionModel& m, double delta, const std::vector<double>& rho,
                                            int M) {
    using Key = std::tuple<int, double, double, double, int, std::vector<double>>;
    static std::mutex mu;
    static std::map<Key, std::shared_ptr<const LineTable>> cache;
    Key key{m.d, m.s, power_p(m), delta, m.quad.panel_nodes, rho};
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end() && it->second->M >= M) return it->second;
    auto t = build_table(m.d, m.s, power_p(m), delta, rho, M, m.quad.panel_nodes);
    if (cache.size() > 64) cache.clear();
    cache[key] = t;
    return t;
}

double direct_kernel(const DensityField& f, const CollisionModel& m, double support, const Vec& c, const Vec& u) {
    const double rho = u.norm();
    if (!(rho > 0.0)) throw ValidationError("carleman_kernel needs v' != v");
    const int d = m.d;
    const double p = power_p(m);
    const Vec om = canonical_direction(u / rho);
    const auto basis = perp_basis(om);
    const auto& q = m.quad;
    std::vector<double> x, w, vals;
    PointBatch pts(d);
    if (d == 2) {
        const Vec& e = basis[0];
        const double ce = c.dot(e);
        const double dist2 = c.squaredNorm() - ce * ce;
        if (dist2 >= support * support) return 0.0;
        const double a = std::sqrt(support * support - std::max(0.0, dist2));
        double acc = 0.0;
        for (int sgn : {1, -1}) {
            const double lo = std::max(rho, -sgn * ce - a), hi = -sgn * ce + a;
            if (!(hi > lo)) continue;
            x.clear();
            w.clear();
            graded_panels(lo, hi, lo, q.line_panel, q.panel_nodes, x, w);
            pts.clear();
            for (double tau : x) pts.push(c, e, sgn * tau);
            evaluate(f, q.interp, pts, vals);
            for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * vals[i] * hyperplane_weight(d, m.s, p, rho, x[i]);
        }
        return acc;
    }
    const double cpar = c.dot(om);
    if (std::abs(cpar) >= support) return 0.0;
    const double A = std::sqrt(support * support - cpar * cpar);
    const double pc = (c - cpar * om).norm();
    const double lo = std::max(rho, pc - A), hi = pc + A;
    if (!(hi > lo)) return 0.0;
    graded_panels(lo, hi, lo, q.line_panel, q.panel_nodes, x, w);
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double G = ring_sum(f, q.interp, c, basis[0], basis[1], x[i], q.plane_angles, pts, vals);
        acc += w[i] * G * hyperplane_weight(d, m.s, p, rho, x[i]);
    }
    return acc;
}

CarlemanEngine::CarlemanEngine(const DensityField& kf, const CollisionModel& m, double center_max)
    : kf_(kf), m_(m) {
    m_.validate();
    require(kf.dim() == m.d, "field and model dimensions differ");
    Rs_ = kernel_support(kf, m_);
    eps_ = m_.quad.h_pv > 0.0 ? m_.quad.h_pv : kf.grid().h();
    const auto& q = m_.quad;
    const double R = center_max + Rs_;
    rule_ = make_radial_rule(eps_, R, 1.0 / (2.0 - 2.0 * m_.s), q.inner_nodes, q.panel_nodes, q.max_panel);
    pairs_ = direction_pairs(m_.d, pairs_for(m_.d, q.lk_direction_pairs));
    const double delta = q.line_step * kf.grid().h();
    const int M = static_cast<int>(std::ceil(2.0 * (center_max + Rs_) / delta)) + 4;
    table_ = line_table(m_, delta, rule_.rho, M);
}

int CarlemanEngine::rows_upto(double R) const {
    return static_cast<int>(std::upper_bound(rule_.rho.begin(), rule_.rho.end(), R) - rule_.rho.begin());
}

void CarlemanEngine::sample_line(const Vec& c, const Vec& omega, int& m_lo, int& m_hi, std::vector<double>& g) const {
    const LineTable& T = *table_;
    const double delta = T.delta;
    const Vec om = canonical_direction(omega);
    const auto basis = perp_basis(om);
    PointBatch pts(m_.d);
    m_lo = 1;
    m_hi = 0;
    g.clear();
    if (m_.d == 2) {
        const Vec& e = basis[0];
        const double ce = c.dot(e);
        const double dist2 = c.squaredNorm() - ce * ce;
        if (dist2 >= Rs_ * Rs_) return;
        const double a = std::sqrt(Rs_ * Rs_ - std::max(0.0, dist2));
        const double tlo = -ce - a, thi = -ce + a;
        if (tlo < -T.M * delta || thi > T.M * delta) throw NumericalError("line table too short for this center");
        m_lo = std::max(-T.M, static_cast<int>(std::floor(tlo / delta)) - 2);
        m_hi = std::min(T.M, static_cast<int>(std::ceil(thi / delta)) + 2);
        for (int mm = m_lo; mm <= m_hi; ++mm) pts.push(c, e, mm * delta);
        evaluate(kf_, m_.quad.interp, pts, g);
        return;
    }
    const double cpar = c.dot(om);
    if (std::abs(cpar) >= Rs_) return;
    const double A = std::sqrt(Rs_ * Rs_ - cpar * cpar);
    const double pc = (c - cpar * om).norm();
    if (pc + A > T.M * delta) throw NumericalError("line table too short for this center");
    m_lo = std::max(0, static_cast<int>(std::floor((pc - A) / delta)) - 2);
    m_hi = std::min(T.M, static_cast<int>(std::ceil((pc + A) / delta)) + 2);
    const int n_phi = m_.quad.plane_angles;
    for (int mm = m_lo; mm <= m_hi; ++mm) {
        for (int k = 0; k < n_phi; ++k) {
            const double phi = 2.0 * kPi * k / n_phi;
            pts.push(c + mm * delta * (std::cos(phi) * basis[0] + std::sin(phi) * basis[1]));
        }
    }
    std::vector<double> vals;
    evaluate(kf_, m_.quad.interp, pts, vals);
    g.assign(m_hi - m_lo + 1, 0.0);
    for (int mm = m_lo; mm <= m_hi; ++mm) {
        double acc = 0.0;
        for (int k = 0; k < n_phi; ++k) acc += vals[(mm - m_lo) * n_phi + k];
        g[mm - m_lo] = acc * 2.0 * kPi / n_phi;
    }
}

namespace {

double row_dot(const LineTable& T, int j, int m_lo, int m_hi, const std::vector<double>& g) {
    if (m_hi < m_lo) return 0.0;
    const double* row = &T.W[static_cast<std::size_t>(j) * T.cols()];
    const int mmin = T.mmin[j];
    double acc = 0.0;
    if (T.d == 2) {
        const int off = T.M;
        const int e1 = std::min(m_hi, -mmin);
        if (e1 >= m_lo) acc += simd::dot(row + off + m_lo, g.data(), e1 - m_lo + 1);
        const int b2 = std::max({m_lo, mmin, e1 + 1});
        if (m_hi >= b2) acc += simd::dot(row + off + b2, g.data() + (b2 - m_lo), m_hi - b2 + 1);
        return acc;
    }
    const int b = std::max(m_lo, mmin);
    if (m_hi >= b) acc += simd::dot(row + b, g.data() + (b - m_lo), m_hi - b + 1);
    return acc;
}

}  // namespace

void CarlemanEngine::line_profile(const Vec& c, const Vec& omega, double* out, int jmax) const {
    int m_lo, m_hi;
    std::vector<double> g;
    sample_line(c, omega, m_lo, m_hi, g);
    for (int j = 0; j < jmax; ++j) out[j] = row_dot(*table_, j, m_lo, m_hi, g);
}

double CarlemanEngine::line_row(const Vec& c, const Vec& omega, int j) const {
    int m_lo, m_hi;
    std::vector<double> g;
    sample_line(c, omega, m_lo, m_hi, g);
    return row_dot(*table_, j, m_lo, m_hi, g);
}

double CarlemanEngine::lk(const DensityField& f, const Vec& v) const {
    const int d = m_.d;
    const auto& q = m_.quad;
    const double fv = f.evaluate(v, q.interp);
    const int jmax = rows_upto(v.norm() + Rs_);
    const int n_in = std::min(rule_.n_inner, jmax);
    const std::size_t np = pairs_.dirs.size();
    PointBatch pts(d);
    for (std::size_t k = 0; k < np; ++k) {
        const Vec& om = pairs_.dirs[k];
        pts.push(v, om, eps_);
        pts.push(v, om, -eps_);
        for (int j = n_in; j < jmax; ++j) {
            pts.push(v, om, rule_.rho[j]);
            pts.push(v, om, -rule_.rho[j]);
        }
    }
    std::vector<double> vals;
    evaluate(f, q.interp, pts, vals);
    std::vector<double> prof(std::max(jmax, 1));
    const std::size_t per = 2 + 2 * static_cast<std::size_t>(jmax - n_in);
    double total = 0.0;
    for (std::size_t k = 0; k < np; ++k) {
        line_profile(v, pairs_.dirs[k], prof.data(), jmax);
        const double* fk = vals.data() + k * per;
        const double d2 = (fk[0] + fk[1] - 2.0 * fv) / (eps_ * eps_);
        double acc = 0.0;
        for (int j = 0; j < n_in; ++j) {
            const double r = rule_.rho[j];
            acc += rule_.w[j] * std::pow(r, d - 1) * prof[j] * r * r * d2;
        }
        for (int j = n_in; j < jmax; ++j) {
            const double r = rule_.rho[j];
            const double* fp = fk + 2 + 2 * (j - n_in);
            acc += rule_.w[j] * std::pow(r, d - 1) * prof[j] * (fp[0] + fp[1] - 2.0 * fv);
        }
        total += pairs_.w[k] * acc;
    }
    return total;
}

double CarlemanEngine::cancel_lhs(const Vec& v) const {
    const int d = m_.d;
    const int jmax = rows_upto(v.norm() + Rs_);
    const int n_in = std::min(rule_.n_inner, jmax);
    std::vector<double> pv(std::max(jmax, 1)), pp(std::max(n_in, 1)), pm(std::max(n_in, 1));
    double total = 0.0;
    for (std::size_t k = 0; k < pairs_.dirs.size(); ++k) {
        const Vec& om = pairs_.dirs[k];
        line_profile(v, om, pv.data(), jmax);
        line_profile(v + eps_ * om, om, pp.data(), n_in);
        line_profile(v - eps_ * om, om, pm.data(), n_in);
        double acc = 0.0;
        for (int j = 0; j < n_in; ++j) {
            const double r = rule_.rho[j];
            acc += rule_.w[j] * std::pow(r, d - 1) * (r * r) / (eps_ * eps_) * (2.0 * pv[j] - pp[j] - pm[j]);
        }
        for (int j = n_in; j < jmax; ++j) {
            const double r = rule_.rho[j];
            const double kp = line_row(v + r * om, om, j), km = line_row(v - r * om, om, j);
            acc += rule_.w[j] * std::pow(r, d - 1) * (2.0 * pv[j] - kp - km);
        }
        total += pairs_.w[k] * acc;
    }
    return total;
}

double conv_gamma(const DensityField& f, const Vec& v, const CollisionModel& m) {
    m.validate();
    const int d = m.d;
    const auto& q = m.quad;
    const TailModel& tail = f.tail();
    if (tail.C > 0.0 && m.gamma >= tail.q - d)
        throw ValidationError("gamma convolution diverges: gamma >= q_tail - d");
    if (f.max_value() <= 0.0 && tail.C <= 0.0) return 0.0;
    const double Rs = f.support_radius(q.tail_tol, std::max(0.0, m.gamma));
    const double vr = v.norm();
    const double R = vr + Rs;
    const double power = m.gamma + d - 1.0;
    const RadialRule rule =
        make_radial_rule(f.grid().h(), R, 1.0 / (m.gamma + d), q.inner_nodes, q.panel_nodes, q.max_panel);
    const DirectionSet dirs = full_directions(d, pairs_for(d, q.conv_direction_pairs));
    PointBatch pts(d);
    for (const Vec& om : dirs.dirs)
        for (double r : rule.rho) pts.push(v, om, r);
    std::vector<double> vals;
    evaluate(f, q.interp, pts, vals);
    double acc = 0.0;
    const std::size_t nr = rule.rho.size();
    for (std::size_t k = 0; k < dirs.dirs.size(); ++k) {
        double a = 0.0;
        for (std::size_t j = 0; j < nr; ++j) a += rule.w[j] * std::pow(rule.rho[j], power) * vals[k * nr + j];
        acc += dirs.w[k] * a;
    }
    if (tail.C > 0.0) {
        // int_R^inf |S| C (1 + rho - |v|)^{-q} rho^{gamma+d-1} d rho with rho = R/u
        const Rule1D& g = gauss_legendre(24);
        double closure = 0.0;
        for (std::size_t i = 0; i < g.x.size(); ++i) {
            const double u = 0.5 * (g.x[i] + 1.0);
            const double r = R / u;
            closure += 0.5 * g.w[i] * tail(r - vr) * std::pow(r, power) * R / (u * u);
        }
        acc += sphere_measure(d) * closure;
    }
    return acc;
}

}  // namespace detail

namespace {

class BoltzmannKernelImpl final : public KernelImpl {
public:
    BoltzmannKernelImpl(const DensityField& f, const CollisionModel& m)
        : f_(std::make_shared<const DensityField>(f)), m_(m) {
        m_.validate();
        require(f.dim() == m.d, "field and model dimensions differ");
        support_ = detail::kernel_support(*f_, m_);
    }
    double eval(const Vec& v, const Vec& vp) const override {
        return detail::direct_kernel(*f_, m_, support_, v, vp - v);
    }
    KernelTag tag() const override { return KernelTag::boltzmann; }
    int dim() const override { return m_.d; }
    std::string name() const override { return "boltzmann"; }
    const DensityField& field() const { return *f_; }
    const CollisionModel& model() const { return m_; }

private:
    std::shared_ptr<const DensityField> f_;
    CollisionModel m_;
    double support_ = 0.0;
};

double pv_generic(const KernelFunction& K, const DensityField& f, const Vec& v, const CollisionModel& m, double eps) {
    const int d = m.d;
    const auto& q = m.quad;
    const double fv = f.evaluate(v, q.interp);
    const double Rs = f.support_radius(q.tail_tol);
    const double RK = K.support_radius();
    const double R = std::min(RK, v.norm() + Rs);
    const RadialRule rule = make_radial_rule(eps, R, 1.0 / (2.0 - 2.0 * m.s), q.inner_nodes, q.panel_nodes, q.max_panel);
    const DirectionSet pairs = direction_pairs(d, detail::pairs_for(d, q.lk_direction_pairs));
    const int n_in = rule.n_inner;
    const int nr = static_cast<int>(rule.rho.size());
    // far field beyond R where only -f(v) K survives: rho = R u^{-1/(2s)}
    const Rule1D& gf = gauss_legendre(16);
    std::vector<double> far_rho, far_w;
    if (std::isinf(RK)) {
        const double kap = 1.0 / (2.0 * m.s);
        for (std::size_t i = 0; i < gf.x.size(); ++i) {
            const double u = 0.5 * (gf.x[i] + 1.0);
            far_rho.push_back(R * std::pow(u, -kap));
            far_w.push_back(0.5 * gf.w[i] * kap * R * std::pow(u, -kap - 1.0));
        }
    }
    detail::PointBatch pts(d);
    for (const Vec& om : pairs.dirs) {
        pts.push(v, om, eps);
        pts.push(v, om, -eps);
        for (int j = n_in; j < nr; ++j) {
            pts.push(v, om, rule.rho[j]);
            pts.push(v, om, -rule.rho[j]);
        }
    }
    std::vector<double> vals;
    detail::evaluate(f, q.interp, pts, vals);
    const std::size_t per = 2 + 2 * static_cast<std::size_t>(nr - n_in);
    std::vector<double> kp(nr), km(nr), fp(far_rho.size()), fm(far_rho.size());
    double total = 0.0;
    for (std::size_t k = 0; k < pairs.dirs.size(); ++k) {
        const Vec& om = pairs.dirs[k];
        const Vec neg = -om;
        K.radial_profile(v, om, rule.rho.data(), kp.data(), nr);
        K.radial_profile(v, neg, rule.rho.data(), km.data(), nr);
        const double* fk = vals.data() + k * per;
        const double d1 = (fk[0] - fk[1]) / (2.0 * eps);
        const double d2 = (fk[0] + fk[1] - 2.0 * fv) / (eps * eps);
        double acc = 0.0;
        for (int j = 0; j < n_in; ++j) {
            const double r = rule.rho[j];
            acc += rule.w[j] * std::pow(r, d - 1) * (r * d1 * (kp[j] - km[j]) + 0.5 * r * r * d2 * (kp[j] + km[j]));
        }
        for (int j = n_in; j < nr; ++j) {
            const double r = rule.rho[j];
            const double* fj = fk + 2 + 2 * (j - n_in);
            acc += rule.w[j] * std::pow(r, d - 1) * ((fj[0] - fv) * kp[j] + (fj[1] - fv) * km[j]);
        }
        if (!far_rho.empty()) {
            K.radial_profile(v, om, far_rho.data(), fp.data(), far_rho.size());
            K.radial_profile(v, neg, far_rho.data(), fm.data(), far_rho.size());
            for (std::size_t j = 0; j < far_rho.size(); ++j)
                acc -= far_w[j] * std::pow(far_rho[j], d - 1) * fv * (fp[j] + fm[j]);
        }
        total += pairs.w[k] * acc;
    }
    return total;
}

double cb_key_compute(const CollisionModel& model) {
    Grid g = model.d == 2 ? Grid{2, 64, 6.0} : Grid{3, 32, 5.0};
    const DensityField M = sample(AnalyticField::maxwellian(model.d, 1.0, zero_vec(model.d), 1.0), g);
    return cancellation_ratio(M, zero_vec(model.d), model);
}

double center_bound(const DensityField& f, const NodeMask& mask) {
    double r = 0.0;
    const Grid& g = f.grid();
    for (std::size_t p = 0; p < g.size(); ++p) {
        Vec v = g.point(p);
        if (!mask || mask(v)) r = std::max(r, v.norm());
    }
    return r;
}

}  // namespace

double q_sigma(const DensityField& f, const Vec& v, const CollisionModel& model) {
    model.validate();
    require(f.dim() == model.d && v.size() == model.d, "dimension mismatch");
    const int d = model.d;
    const auto& q = model.quad;
    if (f.max_value() <= 0.0 && f.tail().C <= 0.0) return 0.0;

    auto run = [&](int theta_scale) {
        const double fv = f.evaluate(v, q.interp);
        const double Rs = f.support_radius(q.tail_tol, std::max(0.0, model.gamma));
        const double R = std::max(2.0 * Rs, v.norm() + Rs);
        const RadialRule rr = make_radial_rule(f.grid().h(), R, 1.0 / (d + model.gamma + 2.0), q.inner_nodes * theta_scale,
                                               q.panel_nodes, q.max_panel / theta_scale);
        // theta rule: substituted inner part then panels; weights carry b and sin^{d-2}
        std::vector<double> th, tw;
        {
            const double tc = q.sigma_theta_split;
            const double kap = 1.0 / (2.0 - 2.0 * model.s);
            const Rule1D& gi = gauss_legendre(q.sigma_theta_inner * theta_scale);
            for (std::size_t i = 0; i < gi.x.size(); ++i) {
                const double u = 0.5 * (gi.x[i] + 1.0);
                th.push_back(tc * std::pow(u, kap));
                tw.push_back(0.5 * gi.w[i] * tc * kap * std::pow(u, kap - 1.0));
            }
            Rule1D go = gauss_panels(tc, kPi, q.sigma_theta_panels * theta_scale, q.sigma_theta_nodes);
            th.insert(th.end(), go.x.begin(), go.x.end());
            tw.insert(tw.end(), go.w.begin(), go.w.end());
            for (std::size_t i = 0; i < th.size(); ++i)
                tw[i] *= std::pow(std::sin(0.5 * th[i]), -(d - 1) - 2.0 * model.s) * std::pow(std::sin(th[i]), d - 2);
        }
        const int n_phi = d == 2 ? 2 : q.sigma_phi;
        const DirectionSet dirs = full_directions(d, detail::pairs_for(d, q.sigma_direction_pairs) * theta_scale);
        detail::PointBatch pts(d);
        std::vector<double> vals, vstar;
        double total = 0.0;
        const std::size_t nt = th.size(), nr = rr.rho.size();
        for (std::size_t k = 0; k < dirs.dirs.size(); ++k) {
            const Vec& om = dirs.dirs[k];
            const auto basis = perp_basis(om);
            pts.clear();
            for (std::size_t j = 0; j < nr; ++j) {
                const double r = rr.rho[j];
                const Vec mid = v - 0.5 * r * om;
                for (std::size_t i = 0; i < nt; ++i) {
                    const double ct = std::cos(th[i]), st = std::sin(th[i]);
                    for (int a = 0; a < n_phi; ++a) {
                        Vec sig;
                        if (d == 2) {
                            sig = ct * om + (a == 0 ? st : -st) * basis[0];
                        } else {
                            const double phi = 2.0 * kPi * a / n_phi;
                            sig = ct * om + st * (std::cos(phi) * basis[0] + std::sin(phi) * basis[1]);
                        }
                        pts.push(mid, sig, 0.5 * r);
                        pts.push(mid, sig, -0.5 * r);
                    }
                }
            }
            detail::evaluate(f, q.interp, pts, vals);
            pts.clear();
            for (std::size_t j = 0; j < nr; ++j) pts.push(v, om, -rr.rho[j]);
            detail::evaluate(f, q.interp, pts, vstar);
            double acc = 0.0;
            const double phi_w = d == 2 ? 1.0 : 2.0 * kPi / n_phi;
            for (std::size_t j = 0; j < nr; ++j) {
                const double loss = fv * vstar[j];
                const double* vj = vals.data() + j * nt * n_phi * 2;
                double ai = 0.0;
                for (std::size_t i = 0; i < nt; ++i) {
                    double gsum = 0.0;
                    for (int a = 0; a < n_phi; ++a) gsum += vj[(i * n_phi + a) * 2] * vj[(i * n_phi + a) * 2 + 1] - loss;
                    ai += tw[i] * phi_w * gsum;
                }
                acc += rr.w[j] * std::pow(rr.rho[j], d - 1 + model.gamma) * ai;
            }
            total += dirs.w[k] * acc;
        }
        return total;
    };
    const double Q = run(1);
    if (q.check_convergence) {
        const double Q2 = run(2);
        const double scale = std::max({std::abs(Q), std::abs(Q2), 1e-12 * f.max_value() * f.max_value()});
        if (std::abs(Q - Q2) > q.pv_tolerance * scale)
            throw NumericalError("q_sigma quadrature did not converge under refinement");
    }
    return Q;
}

double carleman_kernel(const DensityField& f, const Vec& v, const Vec& vp, const CollisionModel& model) {
    model.validate();
    require(f.dim() == model.d && v.size() == model.d && vp.size() == model.d, "dimension mismatch");
    return detail::direct_kernel(f, model, detail::kernel_support(f, model), v, vp - v);
}

KernelFunction boltzmann_kernel(const DensityField& f, const CollisionModel& model) {
    return KernelFunction(std::make_shared<BoltzmannKernelImpl>(f, model));
}

double apply_lk(const KernelFunction& K, const DensityField& f, const Vec& v, const CollisionModel& model) {
    model.validate();
    require(static_cast<bool>(K), "empty kernel");
    require(f.dim() == model.d && v.size() == model.d && K.dim() == model.d, "dimension mismatch");
    if (K.tag() == KernelTag::boltzmann) {
        const auto* bk = dynamic_cast<const BoltzmannKernelImpl*>(K.impl());
        if (bk) {
            CollisionModel m = bk->model();
            m.quad = model.quad;
            detail::CarlemanEngine eng(bk->field(), m, v.norm());
            return eng.lk(f, v);
        }
    }
    const double eps = model.quad.h_pv > 0.0 ? model.quad.h_pv : f.grid().h();
    const double val = pv_generic(K, f, v, model, eps);
    if (model.quad.check_convergence) {
        const double half = pv_generic(K, f, v, model, 0.5 * eps);
        const double scale = std::max({std::abs(val), std::abs(half), 1e-12 * f.max_value()});
        if (std::abs(val - half) > model.quad.pv_tolerance * scale)
            throw NumericalError("principal value diverges under shell refinement");
    }
    return val;
}

double gamma_convolution(const DensityField& f, const Vec& v, const CollisionModel& model) {
    require(f.dim() == model.d && v.size() == model.d, "dimension mismatch");
    return detail::conv_gamma(f, v, model);
}

double lower_order_term(const DensityField& f, const Vec& v, const CollisionModel& model) {
    const double fv = f.evaluate(v, model.quad.interp);
    if (fv == 0.0) return 0.0;
    return fv * gamma_convolution(f, v, model);
}

double cancellation_lhs(const DensityField& f, const Vec& v, const CollisionModel& model) {
    require(f.dim() == model.d && v.size() == model.d, "dimension mismatch");
    detail::CarlemanEngine eng(f, model, v.norm());
    return eng.cancel_lhs(v);
}

double cancellation_ratio(const DensityField& f, const Vec& v, const CollisionModel& model) {
    const double rhs = gamma_convolution(f, v, model);
    if (!(rhs > 1e-14 * std::max(f.max_value(), 1e-300)) || !(rhs > 1e-300))
        throw NumericalError("cancellation ratio: convolution below floor");
    return cancellation_lhs(f, v, model) / rhs;
}

double calibrated_cb(const CollisionModel& model) {
    model.validate();
    const auto& q = model.quad;
    using Key = std::tuple<int, double, double, int, int, double, int, double, double, int, int, double, int>;
    Key key{model.d,        model.gamma,  model.s,    q.lk_direction_pairs, q.inner_nodes,
            q.h_pv,         q.panel_nodes, q.max_panel, q.line_step,         q.plane_angles,
            q.conv_direction_pairs, q.tail_tol, static_cast<int>(q.interp)};
    static std::mutex mu;
    static std::map<Key, double> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const double cb = cb_key_compute(model);
    cache.emplace(key, cb);
    return cb;
}

double q_carleman(const DensityField& f, const Vec& v, const CollisionModel& model) {
    model.validate();
    require(f.dim() == model.d && v.size() == model.d, "dimension mismatch");
    if (f.max_value() <= 0.0 && f.tail().C <= 0.0) return 0.0;
    const double cb = calibrated_cb(model);
    detail::CarlemanEngine eng(f, model, v.norm());
    return eng.lk(f, v) + cb * lower_order_term(f, v, model);
}

std::vector<double> lk_grid(const DensityField& f, const CollisionModel& model, const NodeMask& mask) {
    model.validate();
    const Grid& g = f.grid();
    std::vector<double> out(g.size(), 0.0);
    if (f.max_value() <= 0.0 && f.tail().C <= 0.0) return out;
    detail::CarlemanEngine eng(f, model, center_bound(f, mask));
    parallel_for(g.size(), [&](std::size_t p) {
        Vec v = g.point(p);
        if (mask && !mask(v)) return;
        out[p] = eng.lk(f, v);
    });
    return out;
}

std::vector<double> q_carleman_grid(const DensityField& f, const CollisionModel& model, const NodeMask& mask) {
    model.validate();
    const Grid& g = f.grid();
    std::vector<double> out(g.size(), 0.0);
    if (f.max_value() <= 0.0 && f.tail().C <= 0.0) return out;
    const double cb = calibrated_cb(model);
    detail::CarlemanEngine eng(f, model, center_bound(f, mask));
    parallel_for(g.size(), [&](std::size_t p) {
        Vec v = g.point(p);
        if (mask && !mask(v)) return;
        out[p] = eng.lk(f, v) + cb * lower_order_term(f, v, model);
    });
    return out;
}

std::vector<double> q_sigma_grid(const DensityField& f, const CollisionModel& model, const NodeMask& mask) {
    model.validate();
    const Grid& g = f.grid();
    std::vector<double> out(g.size(), 0.0);
    parallel_for(g.size(), [&](std::size_t p) {
        Vec v = g.point(p);
        if (mask && !mask(v)) return;
        out[p] = q_sigma(f, v, model);
    });
    return out;
}

void write_kernel_csv(const KernelFunction& K, const std::vector<std::pair<Vec, Vec>>& pairs, const std::string& path) {
    const int d = K.dim();
    std::vector<std::string> header;
    for (int k = 0; k < d; ++k) header.push_back("v" + std::to_string(k + 1));
    for (int k = 0; k < d; ++k) header.push_back("vp" + std::to_string(k + 1));
    header.push_back("K");
    CsvWriter w(path, header);
    for (const auto& [v, vp] : pairs) {
        for (int k = 0; k < d; ++k) w << v[k];
        for (int k = 0; k < d; ++k) w << vp[k];
        w << K(v, vp);
        w.end_row();
    }
}

}  // namespace kinetik
