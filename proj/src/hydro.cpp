#include "kinetik/hydro.hpp"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>

#include "kinetik/csv.hpp"
#include "kinetik/quadrature.hpp"

namespace kinetik {

namespace {

// Pairwise summation; fixed order for reproducibility.
double pairwise(const double* x, std::size_t n) {
    if (n <= 16) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t h = n / 2;
    return pairwise(x, h) + pairwise(x + h, n - h);
}

double sum(const std::vector<double>& x) { return pairwise(x.data(), x.size()); }

// int_{R}^{inf} g(r) dr via r = R/u.
template <class G>
double radial_tail(double R, G g) {
    const Rule1D& q = gauss_legendre(40);
    double acc = 0.0;
    for (std::size_t i = 0; i < q.x.size(); ++i) {
        const double u = 0.5 * (q.x[i] + 1.0);
        const double r = R / u;
        acc += 0.5 * q.w[i] * g(r) * R / (u * u);
    }
    return acc;
}

}  // namespace

Vec HydroState::velocity() const {
    if (!(rho > 0.0)) return Vec::Constant(d, std::numeric_limits<double>::quiet_NaN());
    return momentum / rho;
}

HydroState moments(const DensityField& f, const MomentOptions& opt) {
    const Grid& g = f.grid();
    const int d = g.d;
    const TailModel& tail = f.tail();
    if (tail.C > 0.0 && tail.q <= d + 2)
        throw ValidationError("tail decay too slow for the energy moment (need q > d + 2)");
    const std::size_t n = g.size();
    std::vector<double> m0(n), e(n), h(n);
    std::vector<std::vector<double>> mom(d, std::vector<double>(n));
    for (std::size_t p = 0; p < n; ++p) {
        const double fv = f.value_at(p);
        const Vec v = g.point(p);
        m0[p] = fv;
        e[p] = fv * v.squaredNorm();
        h[p] = fv > 0.0 ? fv * std::log(fv) : 0.0;
        for (int k = 0; k < d; ++k) mom[k][p] = fv * v[k];
    }
    const double cell = g.cell();
    HydroState s;
    s.d = d;
    s.rho = sum(m0) * cell;
    s.energy = sum(e) * cell;
    s.entropy = sum(h) * cell;
    s.momentum = Vec::Zero(d);
    for (int k = 0; k < d; ++k) s.momentum[k] = sum(mom[k]) * cell;
    if (tail.C > 0.0) {
        const double Leq = 2.0 * g.half_width / std::pow(ball_volume(d), 1.0 / d);
        const double S = sphere_measure(d);
        s.rho += S * radial_tail(Leq, [&](double r) { return tail(r) * std::pow(r, d - 1); });
        s.energy += S * radial_tail(Leq, [&](double r) { return tail(r) * std::pow(r, d + 1); });
        s.entropy += S * radial_tail(Leq, [&](double r) {
            const double t = tail(r);
            return t > 0.0 ? t * std::log(t) * std::pow(r, d - 1) : 0.0;
        });
    }
    if (s.rho > 0.0) {
        const Vec u = s.momentum / s.rho;
        const double factor = opt.theta_literal_3 ? 1.0 / 3.0 : 1.0 / d;
        s.theta = factor * (s.energy / s.rho - u.squaredNorm());
        s.theta_defined = true;
    } else {
        s.theta = std::numeric_limits<double>::quiet_NaN();
        s.theta_defined = false;
    }
    return s;
}

void HydroBounds::validate() const {
    require(m0 > 0.0 && M0 >= m0, "bounds need 0 < m0 <= M0");
    require(E0 > 0.0 && H0 > 0.0, "bounds need positive E0 and H0");
}

HReport check_H(const HydroState& st, const HydroBounds& b) {
    HReport r;
    r.mass_lower.margin = st.rho - b.m0;
    r.mass_upper.margin = b.M0 - st.rho;
    r.energy.margin = b.E0 - st.energy;
    r.entropy.margin = b.H0 - st.entropy;
    for (Margin* m : {&r.mass_lower, &r.mass_upper, &r.energy, &r.entropy}) m->pass = m->margin >= 0.0;
    return r;
}

double DecayProfile::at(double r) const {
    for (const auto& [order, N] : entries)
        if (order == r) return N;
    throw ValidationError("decay order not in profile");
}

DecayProfile decay_profile(const DensityField& f, const std::vector<double>& orders) {
    const Grid& g = f.grid();
    const TailModel& tail = f.tail();
    DecayProfile out;
    for (double r : orders) {
        require(r >= 0.0, "decay order must be nonnegative");
        // rounding slack: a pure power-law tail fits its exponent only to ~1e-12
        if (tail.C > 0.0 && tail.q < r * (1.0 - 1e-9)) throw ValidationError("decay constant unbounded: tail exponent below order");
        double N = 0.0;
        for (std::size_t p = 0; p < g.size(); ++p) {
            const double fv = f.value_at(p);
            if (fv > 0.0) N = std::max(N, std::pow(1.0 + g.point(p).norm(), r) * fv);
        }
        // tail applies outside the box, where |v| >= L
        if (tail.C > 0.0) N = std::max(N, tail.C * std::pow(1.0 + g.half_width, r - tail.q));
        out.entries.emplace_back(r, N);
    }
    return out;
}

EnvelopeFit envelope_fit(const std::vector<std::pair<double, DensityField>>& traj, double q) {
    require(q >= 0.0, "envelope order must be nonnegative");
    EnvelopeFit fit;
    for (const auto& [t, f] : traj) {
        fit.t.push_back(t);
        fit.N.push_back(decay_profile(f, {q}).entries[0].second);
    }
    std::vector<double> lt, ln;
    for (std::size_t i = 0; i < fit.t.size(); ++i) {
        if (fit.t[i] > 0.0 && fit.N[i] > 0.0) {
            lt.push_back(fit.t[i]);
            ln.push_back(std::log(fit.N[i]));
        }
    }
    if (lt.size() < 2) return fit;
    // For fixed beta the optimal log c0 is a mean; search beta in [0, 10].
    auto sse = [&](double beta, double* logc) {
        double m = 0.0;
        for (std::size_t i = 0; i < lt.size(); ++i) m += ln[i] - std::log1p(std::pow(lt[i], -beta));
        m /= lt.size();
        double e = 0.0;
        for (std::size_t i = 0; i < lt.size(); ++i) {
            const double r = ln[i] - m - std::log1p(std::pow(lt[i], -beta));
            e += r * r;
        }
        if (logc) *logc = m;
        return e;
    };
    double best = 0.0, best_e = sse(0.0, nullptr);
    for (int k = 1; k <= 200; ++k) {
        const double b = 0.05 * k;
        const double e = sse(b, nullptr);
        if (e < best_e) best_e = e, best = b;
    }
    const double lo = std::max(0.0, best - 0.05), hi = std::min(10.0, best + 0.05);
    auto r = boost::math::tools::brent_find_minima([&](double b) { return sse(b, nullptr); }, lo, hi, 40);
    if (r.second < best_e) best = r.first;
    double logc = 0.0;
    const double e = sse(best, &logc);
    fit.beta = best;
    fit.c0 = std::exp(logc);
    fit.residual = std::sqrt(e / lt.size());
    fit.fitted = true;
    return fit;
}

void write_hydro_csv(const std::vector<HydroRecord>& rows, const std::string& path) {
    const int d = rows.empty() ? 2 : rows.front().state.d;
    std::vector<std::string> header = {"t", "rho", "ux", "uy"};
    if (d == 3) header.push_back("uz");
    for (const char* c : {"e", "h", "theta", "N_q", "margin_mass_lower", "margin_mass_upper", "margin_energy",
                          "margin_entropy"})
        header.emplace_back(c);
    CsvWriter w(path, header);
    for (const auto& r : rows) {
        w << r.t << r.state.rho;
        const Vec u = r.state.velocity();
        for (int k = 0; k < d; ++k) w << u[k];
        w << r.state.energy << r.state.entropy << r.state.theta << r.N_q << r.margins.mass_lower.margin
          << r.margins.mass_upper.margin << r.margins.energy.margin << r.margins.entropy.margin;
        w.end_row();
    }
}

}  // namespace kinetik
