#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

#include "kinetik/csv.hpp"
#include "kinetik/fields.hpp"

namespace kinetik {

namespace {

std::mutex g_plan_mutex;  // FFTW planning is not thread safe

void fft(const Grid& grid, std::vector<std::complex<double>>& data, int sign) {
    int dims[3] = {grid.n, grid.n, grid.n};
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(g_plan_mutex);
        plan = fftw_plan_dft(grid.d, dims, p, p, sign, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    fftw_destroy_plan(plan);
}

// (-1)^{sum of indices}: phase of the -L lattice offset.
double offset_sign(const Grid& grid, std::size_t flat) {
    int parity = 0;
    for (int k = 0; k < grid.d; ++k) {
        parity += static_cast<int>(flat % grid.n);
        flat /= grid.n;
    }
    return (parity & 1) ? -1.0 : 1.0;
}

}  // namespace

Vec SpectralField::frequency(std::size_t flat) const {
    Vec xi(grid.d);
    for (int k = grid.d - 1; k >= 0; --k) {
        int j = static_cast<int>(flat % grid.n);
        flat /= grid.n;
        int m = j < grid.n / 2 ? j : j - grid.n;
        xi[k] = m * dxi();
    }
    return xi;
}

SpectralField to_spectral_complex(const Grid& grid, const std::vector<std::complex<double>>& samples) {
    grid.validate();
    require(samples.size() == grid.size(), "spectral input size mismatch");
    SpectralField sf{grid, samples};
    fft(grid, sf.coeffs, FFTW_FORWARD);
    const double cell = grid.cell();
    for (std::size_t p = 0; p < sf.coeffs.size(); ++p) sf.coeffs[p] *= cell * offset_sign(grid, p);
    return sf;
}

SpectralField to_spectral(const Grid& grid, const std::vector<double>& samples) {
    std::vector<std::complex<double>> c(samples.begin(), samples.end());
    return to_spectral_complex(grid, c);
}

std::vector<std::complex<double>> from_spectral_complex(const SpectralField& sf) {
    std::vector<std::complex<double>> c(sf.coeffs);
    for (std::size_t p = 0; p < c.size(); ++p) c[p] *= offset_sign(sf.grid, p);
    fft(sf.grid, c, FFTW_BACKWARD);
    const double norm = sf.cell();
    for (auto& x : c) x *= norm;
    return c;
}

std::vector<double> from_spectral(const SpectralField& sf) {
    auto c = from_spectral_complex(sf);
    std::vector<double> out(c.size());
    for (std::size_t p = 0; p < c.size(); ++p) out[p] = c[p].real();
    return out;
}

bool check_periodization(const DensityField& f, double floor_fraction) {
    const Grid& g = f.grid();
    double bmax = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
        std::size_t rem = p;
        bool boundary = false;
        for (int k = 0; k < g.d; ++k) {
            if (rem % g.n == 0) boundary = true;
            rem /= g.n;
        }
        if (boundary) bmax = std::max(bmax, f.value_at(p));
    }
    bool ok = bmax <= floor_fraction * f.max_value();
    if (!ok)
        warn("field is not negligible on the box boundary (" + fmt(bmax / f.max_value()) +
             " of max); spectral operators see a periodized field");
    return ok;
}

double hs_seminorm(const Grid& grid, const std::vector<double>& samples, double s) {
    require(s > 0.0 && s <= 1.0, "Hs order must lie in (0, 1]");
    SpectralField sf = to_spectral(grid, samples);
    double acc = 0.0;
    for (std::size_t p = 0; p < sf.coeffs.size(); ++p) {
        double k2 = sf.frequency(p).squaredNorm();
        if (k2 == 0.0) continue;
        acc += std::pow(k2, s) * std::norm(sf.coeffs[p]);
    }
    return std::sqrt(acc * sf.cell());
}

double hs_seminorm(const DensityField& f, double s) {
    check_periodization(f);
    return hs_seminorm(f.grid(), f.values(), s);
}

double hs_norm(const Grid& grid, const std::vector<double>& samples, double s) {
    require(s > 0.0 && s <= 1.0, "Hs order must lie in (0, 1]");
    SpectralField sf = to_spectral(grid, samples);
    double acc = 0.0;
    for (std::size_t p = 0; p < sf.coeffs.size(); ++p)
        acc += std::pow(1.0 + sf.frequency(p).squaredNorm(), s) * std::norm(sf.coeffs[p]);
    return std::sqrt(acc * sf.cell());
}

std::vector<double> fractional_laplacian(const Grid& grid, const std::vector<double>& samples, double s) {
    require(s > 0.0 && s <= 1.0, "fractional order must lie in (0, 1]");
    SpectralField sf = to_spectral(grid, samples);
    for (std::size_t p = 0; p < sf.coeffs.size(); ++p) sf.coeffs[p] *= std::pow(sf.frequency(p).squaredNorm(), s);
    return from_spectral(sf);
}

std::vector<double> fractional_laplacian(const DensityField& f, double s) {
    check_periodization(f);
    return fractional_laplacian(f.grid(), f.values(), s);
}

}  // namespace kinetik
