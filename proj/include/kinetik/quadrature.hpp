#pragma once

#include <vector>

#include "kinetik/common.hpp"

namespace kinetik {

struct Rule1D {
    std::vector<double> x;
    std::vector<double> w;
};

// Gauss-Legendre on [-1, 1] (cached).
const Rule1D& gauss_legendre(int n);
// Composite rule on [a, b] with a fixed number of equal panels.
Rule1D gauss_panels(double a, double b, int panels, int nodes);

// Radial rule for integrals int_0^R g(rho) d rho where g ~ rho^{1/kappa - 1}
// near 0: an inner shell [0, h] mapped by rho = h u^kappa, then panels
// doubling from h up to max_panel and uniform after that.
struct RadialRule {
    std::vector<double> rho;
    std::vector<double> w;
    int n_inner = 0;
    double h_inner = 0.0;
    double R = 0.0;
};

RadialRule make_radial_rule(double h_inner, double R, double kappa, int inner_nodes, int panel_nodes,
                            double max_panel);

// Graded panels on [lo, hi]: first width w0, doubling up to max_panel.
void graded_panels(double lo, double hi, double w0, double max_panel, int nodes, std::vector<double>& x,
                   std::vector<double>& w);

// Directions on S^{d-1} with weights summing to |S^{d-1}|. The set is closed
// under omega -> -omega; `pairs` keeps one representative of each pair (with
// the weight of a single direction).
struct DirectionSet {
    int d = 2;
    std::vector<Vec> dirs;
    std::vector<double> w;
};

// d = 2: n_pairs uniform angles on the half circle. d = 3: product rule
// (Gauss in cos theta x uniform phi) with about n_pairs pairs.
DirectionSet direction_pairs(int d, int n_pairs);
DirectionSet full_directions(int d, int n_pairs);
// Equal-area probe set: d = 2 uniform angles (n_pairs pairs), d = 3
// icosahedral refinement with `level` subdivisions (pairs only).
DirectionSet probe_direction_pairs(int d, int n_pairs_or_level);

// Orthonormal basis of omega-perp (d-1 vectors), deterministic in omega.
std::vector<Vec> perp_basis(const Vec& omega);
// Representative of {omega, -omega}: first nonzero component positive.
Vec canonical_direction(const Vec& omega);

}  // namespace kinetik
