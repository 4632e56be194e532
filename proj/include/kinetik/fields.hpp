#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "kinetik/bspline.hpp"
#include "kinetik/common.hpp"

namespace kinetik {

// Uniform periodic-style lattice on [-L, L)^d: nodes -L + i*h, h = 2L/N.
struct Grid {
    int d = 2;
    int n = 32;
    double half_width = 6.0;

    double h() const { return 2.0 * half_width / n; }
    double node(int i) const { return -half_width + i * h(); }
    double cell() const { return std::pow(h(), d); }
    std::size_t size() const;
    Vec point(std::size_t flat) const;
    void validate() const;
};

struct TailModel {
    double C = 0.0;
    double q = 0.0;
    double operator()(double r) const { return C > 0.0 ? C * std::pow(1.0 + r, -q) : 0.0; }
};

enum class Interp { multilinear, cubic };

struct Maxwellian {
    double rho = 1.0;
    Vec u;
    double T = 1.0;
};
struct AlgebraicDecay {
    double C = 1.0;
    double q = 8.0;
};
// Compactly supported C-infinity bump: height * exp(1 - 1/(1 - |v-c|^2/width^2)).
struct SmoothBump {
    Vec center;
    double width = 1.0;
    double height = 1.0;
};

// Closed-form nonnegative field: a sum of the component profiles above.
class AnalyticField {
public:
    using Component = std::variant<Maxwellian, AlgebraicDecay, SmoothBump>;

    AnalyticField() = default;
    AnalyticField(int d, std::vector<Component> parts);
    static AnalyticField maxwellian(int d, double rho, const Vec& u, double T);
    static AnalyticField algebraic(int d, double C, double q);
    static AnalyticField bump(const Vec& center, double width, double height);

    AnalyticField operator+(const AnalyticField& other) const;
    int dim() const { return d_; }
    const std::vector<Component>& parts() const { return parts_; }
    double operator()(const Vec& v) const;

private:
    int d_ = 2;
    std::vector<Component> parts_;
};

// Sampled nonnegative f(v) on a Grid plus an algebraic tail outside the box.
// Immutable after construction.
class DensityField {
public:
    DensityField() = default;
    DensityField(Grid grid, std::vector<double> values, TailModel tail = {});
    static DensityField zeros(const Grid& grid);

    const Grid& grid() const { return grid_; }
    int dim() const { return grid_.d; }
    const std::vector<double>& values() const { return values_; }
    const TailModel& tail() const { return tail_; }
    double max_value() const { return max_; }
    double value_at(std::size_t flat) const { return values_[flat]; }

    // Interpolation inside [-L, L]^d, tail model outside; never negative.
    double evaluate(const Vec& v, Interp interp = Interp::multilinear) const;
    double evaluate(const double* v, Interp interp = Interp::multilinear) const;
    // Cubic, batched over points stored as separate coordinate arrays
    // (coords[k] holds component k of every point).
    void evaluate_cubic(const double* const* coords, double* out, std::size_t n) const;

    bool inside_box(const double* v) const;
    // Radius beyond which f (1+r)^{extra} stays below rel_tol * max f (sampled
    // nodes plus the tail model), padded by two cells.
    double support_radius(double rel_tol, double extra_power = 0.0) const;

    DensityField scaled(double c) const;

private:
    Grid grid_;
    std::vector<double> values_;
    TailModel tail_;
    double max_ = 0.0;
    int ghosts_ = 4;
    CubicBSpline spline_;  // on the ghost-extended lattice
};

// Samples an analytic field on the grid and fits the tail on the outer 10% shell.
DensityField sample(const AnalyticField& field, const Grid& grid);
DensityField sample(const std::function<double(const Vec&)>& f, const Grid& grid);
// Least-squares single-power fit of log f on the nodes with max-norm >= 0.9 L.
TailModel fit_tail(const Grid& grid, const std::vector<double>& values);

// ---- spectral operations (periodic extension of the box) ----

// Continuous-FT approximation fhat(xi) = h^d sum_v f(v) e^{-i xi.v} on the
// frequency lattice xi = m*pi/L, m in [-N/2, N/2). Parseval reads
// sum |f|^2 h^d = sum |fhat|^2 (dxi / 2pi)^d.
struct SpectralField {
    Grid grid;
    std::vector<std::complex<double>> coeffs;

    double dxi() const { return kPi / grid.half_width; }
    double cell() const { return std::pow(dxi() / (2.0 * kPi), grid.d); }
    // Signed frequency vector of a flat coefficient index.
    Vec frequency(std::size_t flat) const;
};

SpectralField to_spectral(const Grid& grid, const std::vector<double>& samples);
SpectralField to_spectral_complex(const Grid& grid, const std::vector<std::complex<double>>& samples);
std::vector<std::complex<double>> from_spectral_complex(const SpectralField& sf);
std::vector<double> from_spectral(const SpectralField& sf);

// Warns when boundary values exceed floor_fraction * max f.
bool check_periodization(const DensityField& f, double floor_fraction = 1e-8);

double hs_seminorm(const DensityField& f, double s);
double hs_seminorm(const Grid& grid, const std::vector<double>& samples, double s);
// Inhomogeneous H^s norm (weight (1+|xi|^2)^s).
double hs_norm(const Grid& grid, const std::vector<double>& samples, double s);
// (-Delta)^s via the |xi|^{2s} multiplier; s in (0, 1].
std::vector<double> fractional_laplacian(const DensityField& f, double s);
std::vector<double> fractional_laplacian(const Grid& grid, const std::vector<double>& samples, double s);

// ---- serialization ----
void write_kfld(const DensityField& f, const std::string& path);
void write_kfld(const DensityField& f, std::ostream& os);
DensityField read_kfld(const std::string& path);
DensityField read_kfld(std::istream& is);
void write_field_csv(const DensityField& f, const std::string& path);

}  // namespace kinetik
