#include "kinetik/quadrature.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <mutex>

namespace kinetik {

const Rule1D& gauss_legendre(int n) {
    static std::mutex mu;
    static std::map<int, Rule1D> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    require(n >= 1 && n <= 200, "Gauss-Legendre order out of range");
    Rule1D r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0, p1 = 0.0;
        for (int k = 1; k <= n; ++k) {
            double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
        }
        dp = n * (x * p0 - p1) / (x * x - 1.0);
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.x[i] = -x;
        r.x[n - 1 - i] = x;
        r.w[i] = r.w[n - 1 - i] = w;
    }
    if (n % 2 == 1) r.x[n / 2] = 0.0;
    return cache.emplace(n, std::move(r)).first->second;
}

Rule1D gauss_panels(double a, double b, int panels, int nodes) {
    const Rule1D& g = gauss_legendre(nodes);
    Rule1D r;
    double w = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        double lo = a + p * w;
        for (int i = 0; i < nodes; ++i) {
            r.x.push_back(lo + 0.5 * w * (g.x[i] + 1.0));
            r.w.push_back(0.5 * w * g.w[i]);
        }
    }
    return r;
}

void graded_panels(double lo, double hi, double w0, double max_panel, int nodes, std::vector<double>& x,
                   std::vector<double>& w) {
    if (!(hi > lo)) return;
    const Rule1D& g = gauss_legendre(nodes);
    double a = lo, width = std::min(std::max(w0, 1e-300), max_panel);
    while (a < hi) {
        double b = std::min(hi, a + width);
        if (hi - b < 0.25 * width) b = hi;  // avoid slivers
        double half = 0.5 * (b - a);
        for (int i = 0; i < nodes; ++i) {
            x.push_back(a + half * (g.x[i] + 1.0));
            w.push_back(half * g.w[i]);
        }
        a = b;
        width = std::min(2.0 * width, max_panel);
    }
}

RadialRule make_radial_rule(double h_inner, double R, double kappa, int inner_nodes, int panel_nodes,
                            double max_panel) {
    require(h_inner > 0.0 && R > 0.0, "radial rule needs positive radii");
    RadialRule r;
    r.h_inner = std::min(h_inner, R);
    r.R = R;
    const Rule1D& g = gauss_legendre(inner_nodes);
    for (int i = 0; i < inner_nodes; ++i) {
        double u = 0.5 * (g.x[i] + 1.0);
        r.rho.push_back(r.h_inner * std::pow(u, kappa));
        r.w.push_back(0.5 * g.w[i] * r.h_inner * kappa * std::pow(u, kappa - 1.0));
    }
    r.n_inner = inner_nodes;
    graded_panels(r.h_inner, R, r.h_inner, max_panel, panel_nodes, r.rho, r.w);
    return r;
}

DirectionSet direction_pairs(int d, int n_pairs) {
    require(n_pairs >= 1, "need at least one direction pair");
    DirectionSet s;
    s.d = d;
    if (d == 2) {
        for (int k = 0; k < n_pairs; ++k) {
            double phi = (k + 0.5) * kPi / n_pairs;
            s.dirs.push_back(make_vec({std::cos(phi), std::sin(phi)}));
            s.w.push_back(kPi / n_pairs);
        }
        return s;
    }
    require(d == 3, "directions need d = 2 or 3");
    // n_z Gauss nodes in cos(theta) (upper half) x n_phi angles.
    int n_z = std::max(1, static_cast<int>(std::lround(std::sqrt(n_pairs / 2.0))));
    int n_phi = std::max(4, (n_pairs + n_z - 1) / n_z);
    const Rule1D& g = gauss_legendre(2 * n_z);
    for (int i = n_z; i < 2 * n_z; ++i) {
        double z = g.x[i], rxy = std::sqrt(std::max(0.0, 1.0 - z * z));
        for (int j = 0; j < n_phi; ++j) {
            double phi = (j + 0.5) * 2.0 * kPi / n_phi;
            s.dirs.push_back(make_vec({rxy * std::cos(phi), rxy * std::sin(phi), z}));
            s.w.push_back(g.w[i] * 2.0 * kPi / n_phi);
        }
    }
    return s;
}

DirectionSet full_directions(int d, int n_pairs) {
    DirectionSet p = direction_pairs(d, n_pairs), s;
    s.d = d;
    for (std::size_t k = 0; k < p.dirs.size(); ++k) {
        s.dirs.push_back(p.dirs[k]);
        s.w.push_back(p.w[k]);
        s.dirs.push_back(-p.dirs[k]);
        s.w.push_back(p.w[k]);
    }
    return s;
}

namespace {

DirectionSet icosahedral_pairs(int level) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec> verts = {
        make_vec({-1, t, 0}), make_vec({1, t, 0}), make_vec({-1, -t, 0}), make_vec({1, -t, 0}),
        make_vec({0, -1, t}), make_vec({0, 1, t}), make_vec({0, -1, -t}), make_vec({0, 1, -t}),
        make_vec({t, 0, -1}), make_vec({t, 0, 1}), make_vec({-t, 0, -1}), make_vec({-t, 0, 1})};
    for (auto& v : verts) v.normalize();
    std::vector<std::array<int, 3>> faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                             {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                             {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                             {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (int l = 0; l < level; ++l) {
        std::map<std::pair<int, int>, int> mid;
        auto midpoint = [&](int a, int b) {
            auto key = std::minmax(a, b);
            auto it = mid.find(key);
            if (it != mid.end()) return it->second;
            Vec m = (verts[a] + verts[b]).normalized();
            verts.push_back(m);
            int id = static_cast<int>(verts.size()) - 1;
            mid.emplace(key, id);
            return id;
        };
        std::vector<std::array<int, 3>> next;
        for (auto f : faces) {
            int a = midpoint(f[0], f[1]), b = midpoint(f[1], f[2]), c = midpoint(f[2], f[0]);
            next.push_back({f[0], a, c});
            next.push_back({f[1], b, a});
            next.push_back({f[2], c, b});
            next.push_back({a, b, c});
        }
        faces.swap(next);
    }
    // The vertex set is antipodally symmetric; keep canonical representatives.
    DirectionSet s;
    s.d = 3;
    for (const auto& v : verts) {
        Vec c = canonical_direction(v);
        if ((c - v).norm() < 1e-12) s.dirs.push_back(v);
    }
    double w = 4.0 * kPi / (2.0 * static_cast<double>(s.dirs.size()));
    s.w.assign(s.dirs.size(), w);
    return s;
}

}  // namespace

DirectionSet probe_direction_pairs(int d, int n) {
    if (d == 2) return direction_pairs(2, n);
    require(d == 3, "directions need d = 2 or 3");
    return icosahedral_pairs(n);
}

std::vector<Vec> perp_basis(const Vec& omega) {
    const int d = static_cast<int>(omega.size());
    if (d == 2) return {make_vec({-omega[1], omega[0]})};
    // Pick the coordinate axis least aligned with omega.
    Eigen::Index k = 0;
    omega.cwiseAbs().minCoeff(&k);
    Vec e = Vec::Zero(3);
    e[k] = 1.0;
    Vec a = (e - e.dot(omega) * omega).normalized();
    Vec b(3);
    b << omega[1] * a[2] - omega[2] * a[1], omega[2] * a[0] - omega[0] * a[2], omega[0] * a[1] - omega[1] * a[0];
    return {a, b};
}

Vec canonical_direction(const Vec& omega) {
    for (Eigen::Index k = 0; k < omega.size(); ++k) {
        if (omega[k] > 0.0) return omega;
        if (omega[k] < 0.0) return -omega;
    }
    return omega;
}

}  // namespace kinetik
