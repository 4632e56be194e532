#include "kinetik/holder.hpp"

#include <algorithm>
#include <cmath>

#include "kinetik/lp.hpp"
#include "kinetik/parallel.hpp"

namespace kinetik {

namespace {

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19};

double radical_inverse(std::uint64_t i, int base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (i > 0) {
        r += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return r;
}

// splitmix64: portable deterministic shifts from the seed.
std::uint64_t splitmix(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<double> shifts(int dims, std::uint64_t seed) {
    std::uint64_t st = seed;
    std::vector<double> out(dims);
    for (auto& x : out) x = static_cast<double>(splitmix(st) >> 11) * 0x1.0p-53;
    return out;
}

double halton(std::uint64_t i, int k, const std::vector<double>& shift) {
    double u = radical_inverse(i, kPrimes[k]) + shift[k];
    return u - std::floor(u);
}

std::vector<double> basis_matrix(const std::vector<KineticMonomial>& basis, const std::vector<KineticPoint>& nodes) {
    std::vector<double> phi(nodes.size() * basis.size());
    for (std::size_t i = 0; i < nodes.size(); ++i)
        for (std::size_t j = 0; j < basis.size(); ++j) phi[i * basis.size() + j] = basis[j](nodes[i]);
    return phi;
}

struct CylinderResult {
    double residual = 0.0;
    int nodes = 0;
    bool used = false;
};

CylinderResult probe(const PhaseFunction& f, const PhaseDomain& D, const Cylinder& Q,
                     const std::vector<KineticPoint>& nodes, const std::vector<double>& phi, int m) {
    CylinderResult res;
    std::vector<double> vals, sub;
    vals.reserve(nodes.size());
    sub.reserve(phi.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        KineticPoint z = galilean_compose(Q.center, kinetic_scale(Q.r, nodes[i], Q.s));
        if (D && !D(z)) continue;
        vals.push_back(f(z));
        sub.insert(sub.end(), phi.begin() + static_cast<std::ptrdiff_t>(i * m),
                   phi.begin() + static_cast<std::ptrdiff_t>((i + 1) * m));
    }
    res.nodes = static_cast<int>(vals.size());
    if (res.nodes == 0 || res.nodes <= m) return res;
    res.used = true;
    res.residual = minimax_fit(sub, vals, m).residual;
    return res;
}

HolderEstimate estimate(const PhaseFunction& f, const PhaseDomain& D, double alpha, const ProbePlan& plan,
                        double q, bool weighted) {
    require(alpha > 0.0, "Holder exponent must be positive");
    require(!plan.cylinders.empty(), "empty probe plan");
    require(!plan.nodes.empty(), "probe plan has no reference nodes");
    auto basis = monomial_basis(plan.d, plan.s, alpha);
    const int m = static_cast<int>(basis.size());
    auto phi = basis_matrix(basis, plan.nodes);

    std::vector<std::size_t> active;
    for (std::size_t c = 0; c < plan.cylinders.size(); ++c)
        if (!weighted || plan.cylinders[c].r <= 1.0) active.push_back(c);
    require(!active.empty(), "probe plan has no admissible cylinders (weighted seminorm needs r <= 1)");

    std::vector<CylinderResult> results(active.size());
    parallel_for(active.size(), [&](std::size_t k) {
        results[k] = probe(f, D, plan.cylinders[active[k]], plan.nodes, phi, m);
    });

    HolderEstimate est;
    est.alpha = alpha;
    est.basis_size = m;
    est.worst_cylinder = plan.cylinders[active.front()];
    int min_nodes = -1;
    for (std::size_t k = 0; k < active.size(); ++k) {
        if (!results[k].used) continue;
        const Cylinder& Q = plan.cylinders[active[k]];
        double val = results[k].residual / std::pow(Q.r, alpha);
        if (weighted) val *= std::pow(1.0 + Q.center.v.norm(), q);
        ++est.cylinders_probed;
        min_nodes = min_nodes < 0 ? results[k].nodes : std::min(min_nodes, results[k].nodes);
        if (est.cylinders_probed == 1 || val > est.seminorm) {
            est.worst_cylinder = Q;
            est.seminorm = val;
        }
    }
    est.nodes_per_cylinder = std::max(0, min_nodes);
    return est;
}

}  // namespace

std::vector<KineticPoint> reference_nodes(int d, int n_nodes, int time_levels, std::uint64_t seed) {
    require(d == 2 || d == 3, "reference nodes need d = 2 or 3");
    require(n_nodes >= 1, "need at least one reference node");
    const int dims = 1 + 2 * d;
    auto sh = shifts(dims, seed);
    std::vector<KineticPoint> out;
    const double edge = 1.0 - 1e-9;
    out.push_back(KineticPoint::origin(d));
    for (int k = 0; k < d; ++k)
        for (double sg : {1.0, -1.0}) {
            Vec e = Vec::Zero(d);
            e[k] = sg * edge;
            out.emplace_back(0.0, Vec::Zero(d), e);
            out.emplace_back(0.0, e, Vec::Zero(d));
        }
    if (time_levels <= 0) out.emplace_back(-edge, Vec::Zero(d), Vec::Zero(d));

    std::uint64_t i = 1;
    int made = 0;
    while (made < n_nodes) {
        double t = -halton(i, 0, sh);
        Vec x(d), v(d);
        for (int k = 0; k < d; ++k) {
            x[k] = 2.0 * halton(i, 1 + k, sh) - 1.0;
            v[k] = 2.0 * halton(i, 1 + d + k, sh) - 1.0;
        }
        ++i;
        if (time_levels > 0) t = -static_cast<double>(made % time_levels) / time_levels;
        if (!(t > -1.0) || x.norm() >= 1.0 || v.norm() >= 1.0) continue;
        out.emplace_back(t, x, v);
        out.emplace_back(t, -x, -v);
        made += 2;
    }
    return out;
}

ProbePlan make_probe_plan(const ProbePlanSpec& spec) {
    require(spec.s > 0.0 && spec.s < 1.0, "probe plan needs s in (0,1)");
    require(spec.center_lo.dim() == spec.d && spec.center_hi.dim() == spec.d, "probe plan center box dimension");
    ProbePlan plan;
    plan.d = spec.d;
    plan.s = spec.s;
    plan.nodes = reference_nodes(spec.d, spec.n_nodes, spec.time_levels, spec.seed);
    const int dims = 1 + 2 * spec.d;
    auto sh = shifts(dims, spec.seed ^ 0x5bd1e995ULL);
    for (int c = 0; c < spec.n_centers; ++c) {
        auto lerp = [&](double lo, double hi, int k) { return lo + (hi - lo) * halton(c + 1, k, sh); };
        Vec x(spec.d), v(spec.d);
        double t = lerp(spec.center_lo.t, spec.center_hi.t, 0);
        for (int k = 0; k < spec.d; ++k) {
            x[k] = lerp(spec.center_lo.x[k], spec.center_hi.x[k], 1 + k);
            v[k] = lerp(spec.center_lo.v[k], spec.center_hi.v[k], 1 + spec.d + k);
        }
        for (double r : spec.radii) plan.cylinders.push_back(make_cylinder(KineticPoint(t, x, v), r, spec.s));
    }
    return plan;
}

ProbePlan centered_plan(const KineticPoint& center, double s, const std::vector<double>& radii, int n_nodes,
                        std::uint64_t seed, int time_levels) {
    ProbePlan plan;
    plan.d = center.dim();
    plan.s = s;
    plan.nodes = reference_nodes(plan.d, n_nodes, time_levels, seed);
    for (double r : radii) plan.cylinders.push_back(make_cylinder(center, r, s));
    return plan;
}

HolderEstimate holder_seminorm(const PhaseFunction& f, const PhaseDomain& D, double alpha, const ProbePlan& plan) {
    return estimate(f, D, alpha, plan, 0.0, false);
}

HolderEstimate weighted_holder_seminorm(const PhaseFunction& f, const PhaseDomain& D, double alpha, double q,
                                        const ProbePlan& plan) {
    require(q >= 0.0, "weight exponent q must be nonnegative");
    return estimate(f, D, alpha, plan, q, true);
}

double cylinder_residual(const PhaseFunction& f, const PhaseDomain& D, double alpha, const Cylinder& Q,
                         const std::vector<KineticPoint>& nodes) {
    auto basis = monomial_basis(Q.center.dim(), Q.s, alpha);
    auto phi = basis_matrix(basis, nodes);
    return probe(f, D, Q, nodes, phi, static_cast<int>(basis.size())).residual;
}

}  // namespace kinetik
