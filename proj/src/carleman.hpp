#pragma once

// Internal machinery shared by collision, ellipticity and changevar.

#include <memory>
#include <vector>

#include "kinetik/collision.hpp"
#include "kinetik/quadrature.hpp"

namespace kinetik::detail {

// Points stored as separate coordinate arrays for batched evaluation.
struct PointBatch {
    int d = 2;
    std::vector<double> c[3];

    explicit PointBatch(int dim = 2) : d(dim) {}
    std::size_t size() const { return c[0].size(); }
    void clear() {
        for (auto& a : c) a.clear();
    }
    void push(const Vec& p) {
        for (int k = 0; k < d; ++k) c[k].push_back(p[k]);
    }
    void push(const Vec& base, const Vec& dir, double t) {
        for (int k = 0; k < d; ++k) c[k].push_back(base[k] + t * dir[k]);
    }
};

inline int pairs_for(int d, int n) { return d == 2 ? n : 4 * n; }

void evaluate(const DensityField& f, Interp interp, const PointBatch& pts, std::vector<double>& out);

// Integrand weight of the hyperplane integral at distance rho = |v' - v| and
// in-plane radius tau (includes the polar Jacobian tau in d = 3).
double hyperplane_weight(int d, double s, double p, double rho, double tau);

double kernel_support(const DensityField& f, const CollisionModel& m);

// K_f(c, c + u) by graded panels along the hyperplane (ring quadrature in d = 3).
double direct_kernel(const DensityField& f, const CollisionModel& m, double support, const Vec& c, const Vec& u);

// Weights turning lattice samples along a line (ring integrals in d = 3) into
// hyperplane integrals H(rho_j) for every radial node rho_j.
struct LineTable {
    int d = 2;
    int M = 0;
    double delta = 0.0;
    std::vector<double> rho;
    std::vector<double> W;    // rows x cols
    std::vector<int> mmin;    // first |m| with a nonzero weight, per row
    int cols() const { return d == 2 ? 2 * M + 1 : M + 1; }
};

std::shared_ptr<const LineTable> line_table(const CollisionModel& m, double delta, const std::vector<double>& rho,
                                            int M);

// Carleman kernel K_f evaluated on radial nodes through lattice tables.
class CarlemanEngine {
public:
    // center_max bounds |c| for every line center the caller will use.
    CarlemanEngine(const DensityField& kf, const CollisionModel& m, double center_max);

    const RadialRule& rule() const { return rule_; }
    double support() const { return Rs_; }
    double eps() const { return eps_; }
    const DirectionSet& pairs() const { return pairs_; }
    // Rows j with rho_j <= R.
    int rows_upto(double R) const;

    // out[j] = K(c, c + rho_j omega) for j < jmax.
    void line_profile(const Vec& c, const Vec& omega, double* out, int jmax) const;
    double line_row(const Vec& c, const Vec& omega, int j) const;

    // L_{K_kf} f at v.
    double lk(const DensityField& f, const Vec& v) const;
    // int (K(v, v') - K(v', v)) dv'.
    double cancel_lhs(const Vec& v) const;

private:
    void sample_line(const Vec& c, const Vec& omega, int& m_lo, int& m_hi, std::vector<double>& g) const;

    const DensityField& kf_;
    CollisionModel m_;
    double Rs_ = 0.0;
    double eps_ = 0.0;
    RadialRule rule_;
    DirectionSet pairs_;
    std::shared_ptr<const LineTable> table_;
};

double conv_gamma(const DensityField& f, const Vec& v, const CollisionModel& m);

}  // namespace kinetik::detail
