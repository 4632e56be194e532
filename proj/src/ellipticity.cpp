#include "kinetik/ellipticity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "kinetik/csv.hpp"
#include "kinetik/parallel.hpp"
#include "kinetik/quadrature.hpp"

namespace kinetik {

namespace {

DirectionSet probe_pairs(int d, const PolarOptions& o) {
    return probe_direction_pairs(d, d == 2 ? o.direction_pairs : o.ico_level);
}

// rho = r u^kappa on [0, r]; integrands ~ rho^{1-2s} become smooth.
Rule1D radial_nodes(double r, double s, int n) {
    const Rule1D& g = gauss_legendre(n);
    const double kap = 1.0 / (2.0 - 2.0 * s);
    Rule1D out;
    for (std::size_t i = 0; i < g.x.size(); ++i) {
        const double u = 0.5 * (g.x[i] + 1.0);
        out.x.push_back(r * std::pow(u, kap));
        out.w.push_back(0.5 * g.w[i] * r * kap * std::pow(u, kap - 1.0));
    }
    return out;
}

void check_dims(const KernelFunction& K, const Vec& v) {
    require(static_cast<bool>(K), "empty kernel");
    require(K.dim() == v.size(), "dimension mismatch");
}

// Second moments int_{|w| < hc} w w^T K(v, v + w) dw and first moments.
void diagonal_moments(const KernelFunction& K, const Vec& v, double hc, double s, const PolarOptions& opt,
                      Eigen::MatrixXd& M2, Eigen::VectorXd& M1) {
    const int d = static_cast<int>(v.size());
    const DirectionSet dirs = probe_pairs(d, opt);
    const Rule1D rad = radial_nodes(hc, s, opt.radial_nodes);
    M2 = Eigen::MatrixXd::Zero(d, d);
    M1 = Eigen::VectorXd::Zero(d);
    std::vector<double> kp(rad.x.size()), km(rad.x.size());
    for (std::size_t k = 0; k < dirs.dirs.size(); ++k) {
        const Vec& om = dirs.dirs[k];
        K.radial_profile(v, om, rad.x.data(), kp.data(), rad.x.size());
        K.radial_profile(v, -om, rad.x.data(), km.data(), rad.x.size());
        double a2 = 0.0, a1 = 0.0;
        for (std::size_t i = 0; i < rad.x.size(); ++i) {
            const double r = rad.x[i];
            a2 += rad.w[i] * std::pow(r, d + 1) * (kp[i] + km[i]);
            a1 += rad.w[i] * std::pow(r, d) * (kp[i] - km[i]);
        }
        M2 += dirs.w[k] * a2 * (om * om.transpose());
        M1 += dirs.w[k] * a1 * om;
    }
}

// Minimum-image lattice displacement.
int min_image(int k, int N) {
    k %= N;
    if (k < -N / 2) k += N;
    if (k >= N / 2) k -= N;
    return k;
}

struct LatticeIndex {
    int d, N;
    std::size_t flat(const int* idx) const {
        std::size_t p = 0;
        for (int k = 0; k < d; ++k) p = p * N + static_cast<std::size_t>(((idx[k] % N) + N) % N);
        return p;
    }
    void unflat(std::size_t p, int* idx) const {
        for (int k = d - 1; k >= 0; --k) {
            idx[k] = static_cast<int>(p % N);
            p /= N;
        }
    }
};

void periodic_derivatives(const Grid& g, const std::vector<double>& f, std::size_t p, Eigen::VectorXd& grad,
                          Eigen::MatrixXd& hess) {
    const int d = g.d;
    const double h = g.h();
    LatticeIndex L{d, g.n};
    int idx[3];
    L.unflat(p, idx);
    grad = Eigen::VectorXd::Zero(d);
    hess = Eigen::MatrixXd::Zero(d, d);
    auto at = [&](int a, int da, int b, int db) {
        int j[3] = {idx[0], idx[1], d == 3 ? idx[2] : 0};
        j[a] += da;
        j[b] += db;
        return f[L.flat(j)];
    };
    const double f0 = f[p];
    for (int a = 0; a < d; ++a) {
        grad[a] = (at(a, 1, a, 0) - at(a, -1, a, 0)) / (2.0 * h);
        hess(a, a) = (at(a, 1, a, 0) - 2.0 * f0 + at(a, -1, a, 0)) / (h * h);
        for (int b = a + 1; b < d; ++b) {
            const double v = (at(a, 1, b, 1) - at(a, 1, b, -1) - at(a, -1, b, 1) + at(a, -1, b, -1)) / (4.0 * h * h);
            hess(a, b) = hess(b, a) = v;
        }
    }
}

void check_budget(const Grid& g, const CoercivityOptions& opt) {
    const double n = static_cast<double>(g.size());
    if (n * n > opt.max_pairs) throw ValidationError("lattice double sum exceeds the pair budget");
}

}  // namespace

double avg_upper_bound(const KernelFunction& K, const Vec& v, const std::vector<double>& radii, double s,
                       const PolarOptions& opt) {
    check_dims(K, v);
    require(!radii.empty(), "need at least one radius");
    const int d = static_cast<int>(v.size());
    const DirectionSet dirs = probe_pairs(d, opt);
    double best = 0.0;
    for (double r : radii) {
        require(r > 0.0, "radii must be positive");
        const Rule1D rad = radial_nodes(r, s, opt.radial_nodes);
        std::vector<double> kp(rad.x.size()), km(rad.x.size());
        double acc = 0.0;
        for (std::size_t k = 0; k < dirs.dirs.size(); ++k) {
            K.radial_profile(v, dirs.dirs[k], rad.x.data(), kp.data(), rad.x.size());
            K.radial_profile(v, -dirs.dirs[k], rad.x.data(), km.data(), rad.x.size());
            double a = 0.0;
            for (std::size_t i = 0; i < rad.x.size(); ++i) a += rad.w[i] * std::pow(rad.x[i], d + 1) * (kp[i] + km[i]);
            acc += dirs.w[k] * a;
        }
        best = std::max(best, std::pow(r, 2.0 * s - 2.0) * acc);
    }
    return best;
}

ConeEstimate cone_estimate(const KernelFunction& K, const Vec& v, double s, const ConeOptions& opt) {
    check_dims(K, v);
    require(!opt.probe_radii.empty(), "need probe radii");
    require(opt.threshold_fraction > 0.0 && opt.threshold_fraction <= 1.0, "threshold fraction must lie in (0, 1]");
    const int d = static_cast<int>(v.size());
    const DirectionSet dirs = probe_pairs(d, opt.polar);
    ConeEstimate ce;
    ce.directions = dirs.dirs;
    ce.weights = dirs.w;
    const std::size_t nr = opt.probe_radii.size();
    std::vector<double> kp(nr), km(nr);
    double top = 0.0;
    for (const Vec& om : dirs.dirs) {
        K.radial_profile(v, om, opt.probe_radii.data(), kp.data(), nr);
        K.radial_profile(v, -om, opt.probe_radii.data(), km.data(), nr);
        double lo = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < nr; ++i)
            lo = std::min(lo, std::min(kp[i], km[i]) * std::pow(opt.probe_radii[i], d + 2.0 * s));
        ce.lambda_omega.push_back(lo);
        top = std::max(top, lo);
    }
    ce.threshold = opt.threshold_fraction * top;
    double lam = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < dirs.dirs.size(); ++k) {
        const bool in = top > 0.0 && ce.lambda_omega[k] >= ce.threshold;
        ce.selected.push_back(in);
        if (in) {
            ce.mu += 2.0 * dirs.w[k];
            lam = std::min(lam, ce.lambda_omega[k]);
        }
    }
    ce.lambda = std::isfinite(lam) ? lam : 0.0;
    return ce;
}

CancellationResiduals cancellation_residuals(const KernelFunction& K, const Vec& v, const std::vector<double>& radii,
                                             double s, const PolarOptions& opt) {
    check_dims(K, v);
    const int d = static_cast<int>(v.size());
    const DirectionSet dirs = probe_pairs(d, opt);
    auto eval = [&](double scale, double& c1, double& c2) {
        c1 = c2 = 0.0;
        for (double r0 : radii) {
            require(r0 > 0.0 && r0 < 1.0, "cancellation radii must lie in (0, 1)");
            const double r = r0 * scale;
            const Rule1D rad = radial_nodes(r, s, opt.radial_nodes);
            double i1 = 0.0;
            Vec i2 = Vec::Zero(d);
            for (std::size_t k = 0; k < dirs.dirs.size(); ++k) {
                const Vec& om = dirs.dirs[k];
                double a1 = 0.0, a2 = 0.0;
                for (std::size_t i = 0; i < rad.x.size(); ++i) {
                    const double rho = rad.x[i];
                    const Vec vp = v + rho * om, vm = v - rho * om;
                    const double Ap = K(v, vp) - K(vp, v);
                    const double Am = K(v, vm) - K(vm, v);
                    a1 += rad.w[i] * std::pow(rho, d - 1) * (Ap + Am);
                    a2 += rad.w[i] * std::pow(rho, d) * (Ap - Am);
                }
                i1 += dirs.w[k] * a1;
                i2 -= dirs.w[k] * a2 * om;
            }
            c1 = std::max(c1, std::pow(r, 2.0 * s) * std::abs(i1));
            c2 = std::max(c2, std::pow(r, 2.0 * s - 1.0) * i2.norm());
        }
    };
    CancellationResiduals out;
    eval(1.0, out.c1, out.c2);
    eval(1.0 / (1.0 + v.norm()), out.c1_rescaled, out.c2_rescaled);
    out.c2_enforced = s >= 0.5;
    return out;
}

double nondivergence_residual(const KernelFunction& K, const Vec& v, const std::vector<Vec>& offsets, double floor) {
    check_dims(K, v);
    double worst = 0.0;
    for (const Vec& w : offsets) {
        const double a = K(v, v + w), b = K(v, v - w);
        worst = std::max(worst, std::abs(a - b) / (a + b + floor));
    }
    return worst;
}

CoercivityResult coercivity_check(const KernelFunction& K, const DensityField& f, double s,
                                  const CoercivityOptions& opt) {
    require(static_cast<bool>(K) && K.dim() == f.dim(), "dimension mismatch");
    const Grid& g = f.grid();
    check_budget(g, opt);
    const int d = g.d, N = g.n;
    const double h = g.h(), cell = g.cell();
    const std::size_t n = g.size();
    const std::vector<double>& vals = f.values();
    const double hc = h / std::pow(ball_volume(d), 1.0 / d);
    const LatticeIndex L{d, N};
    std::vector<double> rows(n), corr(n);
    parallel_for(n, [&](std::size_t p) {
        int ip[3], iq[3];
        L.unflat(p, ip);
        const Vec vp = g.point(p);
        double acc = 0.0;
        Vec w(d);
        for (std::size_t q = 0; q < n; ++q) {
            if (q == p) continue;
            L.unflat(q, iq);
            for (int k = 0; k < d; ++k) w[k] = min_image(iq[k] - ip[k], N) * h;
            const double df = vals[q] - vals[p];
            if (df == 0.0) continue;
            acc += df * df * K(vp, vp + w);
        }
        rows[p] = acc * cell * cell;
        Eigen::MatrixXd M2, H;
        Eigen::VectorXd M1, grad;
        diagonal_moments(K, vp, hc, s, opt.polar, M2, M1);
        periodic_derivatives(g, vals, p, grad, H);
        corr[p] = cell * grad.dot(M2 * grad);
    });
    CoercivityResult r;
    for (std::size_t p = 0; p < n; ++p) {
        r.form_uncorrected += rows[p];
        r.form += rows[p] + corr[p];
    }
    const double hs = hs_seminorm(g, vals, s);
    r.hs2 = hs * hs;
    r.ratio = r.hs2 > 0.0 ? r.form / r.hs2 : 0.0;
    r.ratio_uncorrected = r.hs2 > 0.0 ? r.form_uncorrected / r.hs2 : 0.0;
    return r;
}

std::vector<std::vector<double>> lattice_lk(const KernelFunction& K, const Grid& g,
                                            const std::vector<std::vector<double>>& columns, double s,
                                            const CoercivityOptions& opt) {
    require(static_cast<bool>(K) && K.dim() == g.d, "dimension mismatch");
    for (const auto& c : columns) require(c.size() == g.size(), "sample count does not match grid");
    check_budget(g, opt);
    const int d = g.d, N = g.n;
    const double h = g.h(), cell = g.cell();
    const std::size_t n = g.size(), m = columns.size();
    const double hc = h / std::pow(ball_volume(d), 1.0 / d);
    const LatticeIndex L{d, N};
    std::vector<std::vector<double>> out(m, std::vector<double>(n));
    parallel_for(n, [&](std::size_t p) {
        int ip[3], iq[3];
        L.unflat(p, ip);
        const Vec vp = g.point(p);
        Vec w(d);
        std::vector<double> acc(m, 0.0);
        for (std::size_t q = 0; q < n; ++q) {
            if (q == p) continue;
            L.unflat(q, iq);
            for (int k = 0; k < d; ++k) w[k] = min_image(iq[k] - ip[k], N) * h;
            const double kv = K(vp, vp + w);
            if (kv == 0.0) continue;
            for (std::size_t j = 0; j < m; ++j) acc[j] += (columns[j][q] - columns[j][p]) * kv;
        }
        Eigen::MatrixXd M2, H;
        Eigen::VectorXd M1, grad;
        diagonal_moments(K, vp, hc, s, opt.polar, M2, M1);
        for (std::size_t j = 0; j < m; ++j) {
            periodic_derivatives(g, columns[j], p, grad, H);
            out[j][p] = acc[j] * cell + grad.dot(M1) + 0.5 * (H.cwiseProduct(M2)).sum();
        }
    });
    return out;
}

std::vector<double> lattice_lk(const KernelFunction& K, const DensityField& f, double s,
                               const CoercivityOptions& opt) {
    return lattice_lk(K, f.grid(), {f.values()}, s, opt)[0];
}

BilinearResult hs_bilinear_check(const KernelFunction& K, const DensityField& f, const DensityField& g, double s,
                                 const CoercivityOptions& opt) {
    require(f.grid().d == g.grid().d && f.grid().n == g.grid().n && f.grid().half_width == g.grid().half_width,
            "fields must share a grid");
    const std::vector<double> lf = lattice_lk(K, f, s, opt);
    const double cell = f.grid().cell();
    double acc = 0.0;
    for (std::size_t p = 0; p < lf.size(); ++p) acc += lf[p] * g.value_at(p);
    BilinearResult r;
    r.pairing = std::abs(acc * cell);
    r.norms = hs_norm(f.grid(), f.values(), s) * hs_norm(g.grid(), g.values(), s);
    r.ratio = r.norms > 0.0 ? r.pairing / r.norms : 0.0;
    return r;
}

double directional_lower_bound(const KernelFunction& K, const Vec& v, const std::vector<double>& radii,
                               const std::vector<Vec>& directions, double s, const PolarOptions& opt) {
    check_dims(K, v);
    require(!radii.empty() && !directions.empty(), "need radii and directions");
    const int d = static_cast<int>(v.size());
    const DirectionSet dirs = probe_pairs(d, opt);
    double worst = std::numeric_limits<double>::infinity();
    for (double r : radii) {
        require(r > 0.0, "radii must be positive");
        const Rule1D rad = radial_nodes(r, s, opt.radial_nodes);
        std::vector<double> kp(rad.x.size()), km(rad.x.size());
        std::vector<double> ap(dirs.dirs.size()), am(dirs.dirs.size());
        for (std::size_t k = 0; k < dirs.dirs.size(); ++k) {
            K.radial_profile(v, dirs.dirs[k], rad.x.data(), kp.data(), rad.x.size());
            K.radial_profile(v, -dirs.dirs[k], rad.x.data(), km.data(), rad.x.size());
            ap[k] = am[k] = 0.0;
            for (std::size_t i = 0; i < rad.x.size(); ++i) {
                const double wr = rad.w[i] * std::pow(rad.x[i], d + 1);
                ap[k] += wr * kp[i];
                am[k] += wr * km[i];
            }
        }
        for (const Vec& e0 : directions) {
            const Vec e = e0.normalized();
            double acc = 0.0;
            for (std::size_t k = 0; k < dirs.dirs.size(); ++k) {
                const double c = dirs.dirs[k].dot(e);
                acc += dirs.w[k] * (c > 0.0 ? c * c * ap[k] : c * c * am[k]);
            }
            worst = std::min(worst, std::pow(r, 2.0 * s - 2.0) * acc);
        }
    }
    return worst;
}

std::vector<ModulusProbe> modulus_probes(const KineticPoint& center, const std::vector<double>& radii, double s,
                                         int pairs_per_radius, std::uint64_t seed) {
    const int d = center.dim();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    auto unit_ball = [&]() {
        Vec p(d);
        do {
            for (int k = 0; k < d; ++k) p[k] = U(rng);
        } while (p.squaredNorm() >= 1.0);
        return p;
    };
    auto draw = [&](double r) {
        const double t = -0.5 * (U(rng) + 1.0);
        KineticPoint z(t, unit_ball(), unit_ball());
        return galilean_compose(center, kinetic_scale(r, z, s));
    };
    std::vector<ModulusProbe> out;
    for (double r : radii) {
        require(r > 0.0, "probe radii must be positive");
        for (int i = 0; i < pairs_per_radius; ++i) out.push_back({draw(r), draw(r), r});
    }
    return out;
}

double kernel_coefficient_modulus(const PhaseKernel& K, int d, const std::vector<ModulusProbe>& probes,
                                  double alpha_prime, const std::vector<double>& rho_radii, double s,
                                  const PolarOptions& opt) {
    require(alpha_prime > 0.0, "alpha' must be positive");
    const DirectionSet pairs = probe_pairs(d, opt);
    std::vector<Vec> dirs;
    std::vector<double> dw;
    for (std::size_t k = 0; k < pairs.dirs.size(); ++k) {
        dirs.push_back(pairs.dirs[k]);
        dirs.push_back(-pairs.dirs[k]);
        dw.push_back(pairs.w[k]);
        dw.push_back(pairs.w[k]);
    }
    std::vector<double> vals(probes.size() * rho_radii.size(), 0.0);
    parallel_for(vals.size(), [&](std::size_t idx) {
        const ModulusProbe& pr = probes[idx / rho_radii.size()];
        const double rho = rho_radii[idx % rho_radii.size()];
        require(pr.z1.dim() == d && pr.z2.dim() == d, "probe dimension mismatch");
        const Rule1D rad = radial_nodes(rho, s, opt.radial_nodes);
        double acc = 0.0;
        for (std::size_t k = 0; k < dirs.size(); ++k) {
            double a = 0.0;
            for (std::size_t i = 0; i < rad.x.size(); ++i) {
                const Vec w = rad.x[i] * dirs[k];
                const double diff = std::abs(K(pr.z1, pr.z1.v + w) - K(pr.z2, pr.z2.v + w));
                a += rad.w[i] * std::pow(rad.x[i], d + 1) * diff;
            }
            acc += dw[k] * a;
        }
        vals[idx] = acc / (std::pow(rho, 2.0 - 2.0 * s) * std::pow(pr.r, alpha_prime));
    });
    double best = 0.0;
    for (double x : vals) best = std::max(best, x);
    return best;
}

EllipticityReport ellipticity_report(const KernelFunction& K, const std::vector<Vec>& probes, double s,
                                     const ReportOptions& opt) {
    EllipticityReport rep;
    rep.rows.resize(probes.size());
    parallel_for(probes.size(), [&](std::size_t i) {
        const Vec& v = probes[i];
        EllipticityRow row;
        row.v = v;
        row.Lambda = avg_upper_bound(K, v, opt.upper_radii, s, opt.cone.polar);
        const ConeEstimate ce = cone_estimate(K, v, s, opt.cone);
        row.lambda = ce.lambda;
        row.mu = ce.mu;
        row.cancel = cancellation_residuals(K, v, opt.cancel_radii, s, opt.cone.polar);
        std::vector<Vec> offs;
        const DirectionSet dirs = probe_direction_pairs(static_cast<int>(v.size()), v.size() == 2 ? 8 : 0);
        for (const Vec& om : dirs.dirs)
            for (double r : {0.25, 0.5}) offs.push_back(r * om);
        row.nondiv = nondivergence_residual(K, v, offs);
        rep.rows[i] = row;
    });
    const auto& c = opt.constants;
    for (const auto& row : rep.rows) {
        std::string at = "v=(";
        for (Eigen::Index k = 0; k < row.v.size(); ++k) at += (k ? "," : "") + fmt(row.v[k]);
        at += ")";
        if (c.Lambda_max > 0.0 && row.Lambda > c.Lambda_max) rep.failures.push_back("Lambda above bound at " + at);
        if (c.lambda_min > 0.0 && row.lambda < c.lambda_min) rep.failures.push_back("lambda below bound at " + at);
        if (c.mu_min > 0.0 && row.mu < c.mu_min) rep.failures.push_back("mu below bound at " + at);
        if (c.c1_max > 0.0 && row.cancel.c1 > c.c1_max) rep.failures.push_back("c1 above bound at " + at);
        if (c.c2_max > 0.0 && row.cancel.c2_enforced && row.cancel.c2 > c.c2_max)
            rep.failures.push_back("c2 above bound at " + at);
    }
    rep.pass = rep.failures.empty();
    return rep;
}

void write_ellipticity_csv(const EllipticityReport& rep, const std::string& path) {
    const int d = rep.rows.empty() ? 2 : static_cast<int>(rep.rows.front().v.size());
    std::vector<std::string> header;
    for (int k = 0; k < d; ++k) header.push_back("v" + std::to_string(k + 1));
    for (const char* c : {"Lambda", "lambda", "mu", "c1", "c2", "c1_rescaled", "c2_rescaled", "nondiv"})
        header.emplace_back(c);
    CsvWriter w(path, header);
    for (const auto& r : rep.rows) {
        for (int k = 0; k < d; ++k) w << r.v[k];
        w << r.Lambda << r.lambda << r.mu << r.cancel.c1 << r.cancel.c2 << r.cancel.c1_rescaled
          << r.cancel.c2_rescaled << r.nondiv;
        w.end_row();
    }
}

}  // namespace kinetik
