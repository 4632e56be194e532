#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "kinetik/geometry.hpp"

namespace kinetik {

using PhaseFunction = std::function<double(const KineticPoint&)>;
// Domain predicate; an empty function means the whole space.
using PhaseDomain = std::function<bool(const KineticPoint&)>;

struct HolderEstimate {
    double alpha = 0.0;
    double seminorm = 0.0;
    int cylinders_probed = 0;
    Cylinder worst_cylinder;
    int nodes_per_cylinder = 0;
    int basis_size = 0;
};

// A declared finite family of cylinders plus reference nodes in Q_1; nodes of
// Q_r(z0) are z0 o S_r(zeta) for the reference nodes zeta.
struct ProbePlan {
    int d = 2;
    double s = 0.5;
    std::vector<Cylinder> cylinders;
    std::vector<KineticPoint> nodes;
};

struct ProbePlanSpec {
    int d = 2;
    double s = 0.5;
    KineticPoint center_lo;  // box of cylinder centers (componentwise)
    KineticPoint center_hi;
    int n_centers = 8;
    std::vector<double> radii{0.5, 0.25, 0.125};
    int n_nodes = 160;
    int time_levels = 0;  // > 0: reference times restricted to {0, -1/L, ..., -(L-1)/L}
    std::uint64_t seed = 1;
};

// Reference nodes in Q_1: scrambled Halton points, symmetrized under
// (x, v) -> (-x, -v), plus near-boundary points along the axes.
std::vector<KineticPoint> reference_nodes(int d, int n_nodes, int time_levels, std::uint64_t seed);
ProbePlan make_probe_plan(const ProbePlanSpec& spec);
// Cylinders Q_r(center) for each r, sharing the reference nodes.
ProbePlan centered_plan(const KineticPoint& center, double s, const std::vector<double>& radii, int n_nodes,
                        std::uint64_t seed, int time_levels = 0);

// sup over probed cylinders of inf_p sup_{Q cap D} |f - p| / r^alpha over
// polynomials of kinetic degree < alpha. A lower bound of the continuum value.
HolderEstimate holder_seminorm(const PhaseFunction& f, const PhaseDomain& D, double alpha, const ProbePlan& plan);
// Same with weight (1+|v_center|)^q and radii restricted to (0, 1].
HolderEstimate weighted_holder_seminorm(const PhaseFunction& f, const PhaseDomain& D, double alpha, double q,
                                        const ProbePlan& plan);

// Minimax residual of f on a single cylinder (not divided by r^alpha).
double cylinder_residual(const PhaseFunction& f, const PhaseDomain& D, double alpha, const Cylinder& Q,
                         const std::vector<KineticPoint>& nodes);

}  // namespace kinetik
