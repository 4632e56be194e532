#include "kinetik/fields.hpp"

#include <algorithm>
#include <cmath>

namespace kinetik {

std::size_t Grid::size() const {
    std::size_t s = 1;
    for (int k = 0; k < d; ++k) s *= static_cast<std::size_t>(n);
    return s;
}

Vec Grid::point(std::size_t flat) const {
    Vec v(d);
    for (int k = d - 1; k >= 0; --k) {
        v[k] = node(static_cast<int>(flat % n));
        flat /= n;
    }
    return v;
}

void Grid::validate() const {
    require(d == 2 || d == 3, "grid dimension must be 2 or 3");
    require(n >= 8, "grid needs N >= 8 points per axis");
    require(n % 2 == 0, "grid N must be even");
    require(half_width > 0.0 && std::isfinite(half_width), "grid half-width L must be positive");
}

// ---------------- AnalyticField ----------------

AnalyticField::AnalyticField(int d, std::vector<Component> parts) : d_(d), parts_(std::move(parts)) {
    require(d == 2 || d == 3, "field dimension must be 2 or 3");
    for (const auto& p : parts_) {
        if (auto m = std::get_if<Maxwellian>(&p)) {
            require(m->u.size() == d, "Maxwellian drift dimension mismatch");
            require(m->rho >= 0.0 && m->T > 0.0, "Maxwellian needs rho >= 0 and T > 0");
        } else if (auto a = std::get_if<AlgebraicDecay>(&p)) {
            require(a->C >= 0.0 && a->q >= 0.0, "AlgebraicDecay needs C >= 0 and q >= 0");
        } else if (auto b = std::get_if<SmoothBump>(&p)) {
            require(b->center.size() == d, "bump center dimension mismatch");
            require(b->width > 0.0 && b->height >= 0.0, "bump needs width > 0 and height >= 0");
        }
    }
}

AnalyticField AnalyticField::maxwellian(int d, double rho, const Vec& u, double T) {
    return AnalyticField(d, {Maxwellian{rho, u, T}});
}

AnalyticField AnalyticField::algebraic(int d, double C, double q) { return AnalyticField(d, {AlgebraicDecay{C, q}}); }

AnalyticField AnalyticField::bump(const Vec& center, double width, double height) {
    return AnalyticField(static_cast<int>(center.size()), {SmoothBump{center, width, height}});
}

AnalyticField AnalyticField::operator+(const AnalyticField& other) const {
    require(d_ == other.d_, "cannot add fields of different dimension");
    auto parts = parts_;
    parts.insert(parts.end(), other.parts_.begin(), other.parts_.end());
    return AnalyticField(d_, std::move(parts));
}

double AnalyticField::operator()(const Vec& v) const {
    double acc = 0.0;
    for (const auto& p : parts_) {
        if (auto m = std::get_if<Maxwellian>(&p)) {
            double r2 = (v - m->u).squaredNorm();
            acc += m->rho * std::pow(2.0 * kPi * m->T, -0.5 * d_) * std::exp(-0.5 * r2 / m->T);
        } else if (auto a = std::get_if<AlgebraicDecay>(&p)) {
            acc += a->C * std::pow(1.0 + v.norm(), -a->q);
        } else if (auto b = std::get_if<SmoothBump>(&p)) {
            double x = (v - b->center).squaredNorm() / (b->width * b->width);
            if (x < 1.0) acc += b->height * std::exp(1.0 - 1.0 / (1.0 - x));
        }
    }
    return acc;
}

// ---------------- DensityField ----------------

DensityField::DensityField(Grid grid, std::vector<double> values, TailModel tail)
    : grid_(grid), values_(std::move(values)), tail_(tail) {
    grid_.validate();
    require(values_.size() == grid_.size(), "field sample count does not match grid");
    require(tail_.C >= 0.0 && std::isfinite(tail_.C) && tail_.q >= 0.0, "tail model needs C >= 0, q >= 0");
    for (double x : values_) {
        require(std::isfinite(x), "field samples must be finite");
        require(x >= 0.0, "field samples must be nonnegative");
        max_ = std::max(max_, x);
    }

    const int d = grid_.d, n = grid_.n, ne = n + 2 * ghosts_;
    const double h = grid_.h(), x0 = -grid_.half_width - ghosts_ * h;
    std::size_t total = 1;
    for (int k = 0; k < d; ++k) total *= ne;
    std::vector<double> ext(total);
    for (std::size_t p = 0; p < total; ++p) {
        std::size_t rem = p, src = 0;
        bool interior = true;
        double r2 = 0.0;
        int idx[3];
        for (int k = d - 1; k >= 0; --k) {
            idx[k] = static_cast<int>(rem % ne) - ghosts_;
            rem /= ne;
        }
        for (int k = 0; k < d; ++k) {
            if (idx[k] < 0 || idx[k] >= n) interior = false;
            double x = grid_.node(idx[k]);
            r2 += x * x;
            src = src * n + static_cast<std::size_t>(std::clamp(idx[k], 0, n - 1));
        }
        ext[p] = interior ? values_[src] : tail_(std::sqrt(r2));
    }
    spline_ = CubicBSpline(d, ne, x0, h, ext, CubicBSpline::Boundary::mirror);
}

DensityField DensityField::zeros(const Grid& grid) {
    grid.validate();
    return DensityField(grid, std::vector<double>(grid.size(), 0.0), {});
}

bool DensityField::inside_box(const double* v) const {
    for (int k = 0; k < grid_.d; ++k)
        if (!(std::abs(v[k]) <= grid_.half_width)) return false;
    return true;
}

double DensityField::evaluate(const Vec& v, Interp interp) const { return evaluate(v.data(), interp); }

double DensityField::evaluate(const double* v, Interp interp) const {
    const int d = grid_.d;
    if (!inside_box(v)) {
        double r2 = 0.0;
        for (int k = 0; k < d; ++k) r2 += v[k] * v[k];
        return tail_(std::sqrt(r2));
    }
    if (interp == Interp::cubic) return std::max(0.0, spline_(v));

    // Multilinear on the lattice; the node at +L is a tail ghost.
    const int n = grid_.n;
    const double h = grid_.h();
    int cell[3];
    double frac[3];
    for (int k = 0; k < d; ++k) {
        double u = (v[k] + grid_.half_width) / h;
        double f = std::clamp(std::floor(u), 0.0, static_cast<double>(n - 1));
        cell[k] = static_cast<int>(f);
        frac[k] = u - f;
    }
    double acc = 0.0;
    for (int corner = 0; corner < (1 << d); ++corner) {
        double w = 1.0;
        std::size_t src = 0;
        bool interior = true;
        double r2 = 0.0;
        for (int k = 0; k < d; ++k) {
            int bit = (corner >> k) & 1;
            int i = cell[k] + bit;
            w *= bit ? frac[k] : 1.0 - frac[k];
            if (i >= n) interior = false;
            double x = grid_.node(i);
            r2 += x * x;
            src = src * n + static_cast<std::size_t>(std::min(i, n - 1));
        }
        if (w == 0.0) continue;
        acc += w * (interior ? values_[src] : tail_(std::sqrt(r2)));
    }
    return std::max(0.0, acc);
}

void DensityField::evaluate_cubic(const double* const* coords, double* out, std::size_t n) const {
    const int d = grid_.d;
    if (d == 2) {
        spline_.eval2_clipped(coords[0], coords[1], out, n);
        const double L = grid_.half_width;
        for (std::size_t i = 0; i < n; ++i) {
            double x = coords[0][i], y = coords[1][i];
            if (!(std::abs(x) <= L && std::abs(y) <= L)) out[i] = tail_(std::sqrt(x * x + y * y));
        }
        return;
    }
    double v[3];
    for (std::size_t i = 0; i < n; ++i) {
        for (int k = 0; k < d; ++k) v[k] = coords[k][i];
        out[i] = evaluate(v, Interp::cubic);
    }
}

double DensityField::support_radius(double rel_tol, double extra_power) const {
    const double cap = 8.0 * grid_.half_width;
    if (max_ <= 0.0) return 2.0 * grid_.h();
    const double thr = rel_tol * max_;
    double R = 0.0;
    for (std::size_t p = 0; p < values_.size(); ++p) {
        if (!(values_[p] > 0.0)) continue;
        const double r = grid_.point(p).norm();
        if (r > R && values_[p] * std::pow(1.0 + r, extra_power) >= thr) R = r;
    }
    R += 2.0 * grid_.h();
    const double L = grid_.half_width;
    if (tail_.C > 0.0 && tail_(L) * std::pow(1.0 + L, extra_power) >= thr) {
        if (tail_.q <= extra_power) return cap;
        R = std::max(R, std::pow(tail_.C / thr, 1.0 / (tail_.q - extra_power)) - 1.0);
    }
    return std::min(R, cap);
}

DensityField DensityField::scaled(double c) const {
    require(c >= 0.0, "scale factor must be nonnegative");
    std::vector<double> v(values_);
    for (double& x : v) x *= c;
    TailModel t = tail_;
    t.C *= c;
    return DensityField(grid_, std::move(v), t);
}

TailModel fit_tail(const Grid& grid, const std::vector<double>& values) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    double xmin = 1e300, xmax = -1e300;
    const double cut = 0.9 * grid.half_width;
    for (std::size_t p = 0; p < values.size(); ++p) {
        if (!(values[p] > 0.0)) continue;
        Vec v = grid.point(p);
        if (v.cwiseAbs().maxCoeff() < cut) continue;
        double x = std::log1p(v.norm()), y = std::log(values[p]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ++m;
    }
    if (m < 2 || xmax - xmin < 1e-12) return {};
    double mm = static_cast<double>(m);
    double slope = (mm * sxy - sx * sy) / (mm * sxx - sx * sx);
    double icpt = (sy - slope * sx) / mm;
    if (!(slope <= 0.0)) return {};
    TailModel t{std::exp(icpt), -slope};
    if (!std::isfinite(t.C)) return {};
    return t;
}

DensityField sample(const std::function<double(const Vec&)>& f, const Grid& grid) {
    grid.validate();
    std::vector<double> vals(grid.size());
    for (std::size_t p = 0; p < vals.size(); ++p) {
        double x = f(grid.point(p));
        if (!(x >= 0.0) || !std::isfinite(x)) throw ValidationError("field evaluator returned a negative or non-finite value");
        vals[p] = x;
    }
    TailModel tail = fit_tail(grid, vals);
    return DensityField(grid, std::move(vals), tail);
}

DensityField sample(const AnalyticField& field, const Grid& grid) {
    require(field.dim() == grid.d, "field and grid dimensions differ");
    return sample([&](const Vec& v) { return field(v); }, grid);
}

}  // namespace kinetik
