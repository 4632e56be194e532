#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "kinetik/fields.hpp"
#include "kinetik/kernel.hpp"

namespace kinetik {

struct QuadratureSettings {
    // Direction counts are pairs on the half circle; d = 3 uses four times as many.
    // Carleman route: polar quadrature around v.
    int lk_direction_pairs = 32;
    int inner_nodes = 6;      // innermost shell nodes (substituted Gauss)
    double h_pv = 0.0;        // innermost shell radius; 0 -> one grid cell
    int panel_nodes = 6;      // Gauss nodes per radial panel
    double max_panel = 1.0;   // largest radial panel width
    double line_step = 0.5;   // hyperplane lattice step, in grid cells
    double line_panel = 0.5;  // panel width of direct hyperplane integrals
    int plane_angles = 32;    // d = 3: ring quadrature angles in a hyperplane
    // sigma route.
    int sigma_direction_pairs = 32;
    int sigma_theta_inner = 8;
    double sigma_theta_split = 0.39269908169872414;  // pi/8
    int sigma_theta_panels = 7;
    int sigma_theta_nodes = 6;
    int sigma_phi = 16;  // d = 3
    // Convolution (lower order term).
    int conv_direction_pairs = 32;
    // Truncation and checks.
    double tail_tol = 1e-6;
    bool check_convergence = false;
    double pv_tolerance = 0.05;
    Interp interp = Interp::cubic;
};

struct CollisionModel {
    int d = 2;
    double gamma = 0.0;
    double s = 0.25;
    QuadratureSettings quad;

    void validate() const;
    // gamma + 2s outside [0, 2].
    bool regime_warning() const;
    // b(cos theta) = |sin(theta/2)|^{-(d-1)-2s}
    double angular_b(double cos_theta) const;
};

std::pair<Vec, Vec> post_collisional(const Vec& v, const Vec& v_star, const Vec& sigma);

// sigma representation, grazing singularity handled by +-theta pairing.
double q_sigma(const DensityField& f, const Vec& v, const CollisionModel& model);

// K_f(v, v'): hyperplane integral over w perp (v' - v).
double carleman_kernel(const DensityField& f, const Vec& v, const Vec& vp, const CollisionModel& model);
KernelFunction boltzmann_kernel(const DensityField& f, const CollisionModel& model);

// Principal value int (f(v') - f(v)) K(v, v') dv'.
double apply_lk(const KernelFunction& K, const DensityField& f, const Vec& v, const CollisionModel& model);

// int f(v + w) |w|^gamma dw (with tail closure) and f(v) times it.
double gamma_convolution(const DensityField& f, const Vec& v, const CollisionModel& model);
double lower_order_term(const DensityField& f, const Vec& v, const CollisionModel& model);

// Int (K(v,v') - K(v',v)) dv' / Int f(v+w)|w|^gamma dw: an estimate of c_b.
double cancellation_ratio(const DensityField& f, const Vec& v, const CollisionModel& model);
double cancellation_lhs(const DensityField& f, const Vec& v, const CollisionModel& model);

// c_b calibrated once per model (unit Maxwellian reference, cached).
double calibrated_cb(const CollisionModel& model);

// L_{K_f} f + c_b f (f * |.|^gamma)
double q_carleman(const DensityField& f, const Vec& v, const CollisionModel& model);

// Grid evaluations (parallel over nodes). Nodes rejected by the mask are 0.
using NodeMask = std::function<bool(const Vec&)>;
std::vector<double> q_carleman_grid(const DensityField& f, const CollisionModel& model, const NodeMask& mask = {});
std::vector<double> lk_grid(const DensityField& f, const CollisionModel& model, const NodeMask& mask = {});
std::vector<double> q_sigma_grid(const DensityField& f, const CollisionModel& model, const NodeMask& mask = {});

// Dump K on probe pairs: CSV rows v..., v'..., K.
void write_kernel_csv(const KernelFunction& K, const std::vector<std::pair<Vec, Vec>>& pairs, const std::string& path);

}  // namespace kinetik
