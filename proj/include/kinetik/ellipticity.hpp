#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kinetik/fields.hpp"
#include "kinetik/geometry.hpp"
#include "kinetik/kernel.hpp"

namespace kinetik {

// Polar quadrature on balls B_r(v): probe directions (both signs) times a
// radial Gauss rule mapped by rho = r u^kappa, kappa = 1/(2-2s).
struct PolarOptions {
    int direction_pairs = 64;  // d = 2; d = 3 uses icosahedral level `ico_level`
    int ico_level = 2;
    int radial_nodes = 24;
};

double avg_upper_bound(const KernelFunction& K, const Vec& v, const std::vector<double>& radii, double s,
                       const PolarOptions& opt = {});

struct ConeOptions {
    std::vector<double> probe_radii = {1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2, 1.0};
    double threshold_fraction = 0.5;  // of the largest directional value
    PolarOptions polar;
};

struct ConeEstimate {
    double lambda = 0.0;  // min of lambda(omega) over the selected set
    double mu = 0.0;      // measure of the selected set
    double threshold = 0.0;
    std::vector<Vec> directions;        // one representative per pair
    std::vector<double> weights;        // per direction (a pair carries twice this)
    std::vector<double> lambda_omega;   // per pair
    std::vector<bool> selected;         // per pair (both signs together)
};

ConeEstimate cone_estimate(const KernelFunction& K, const Vec& v, double s, const ConeOptions& opt = {});

struct CancellationResiduals {
    double c1 = 0.0;
    double c2 = 0.0;
    bool c2_enforced = false;  // only meaningful for s >= 1/2
    // Same quantities over radii scaled by (1+|v|)^{-1}.
    double c1_rescaled = 0.0;
    double c2_rescaled = 0.0;
};

CancellationResiduals cancellation_residuals(const KernelFunction& K, const Vec& v, const std::vector<double>& radii,
                                             double s, const PolarOptions& opt = {});

double nondivergence_residual(const KernelFunction& K, const Vec& v, const std::vector<Vec>& offsets,
                              double floor = 1e-300);

struct CoercivityResult {
    double form = 0.0;             // with the diagonal Taylor correction
    double form_uncorrected = 0.0; // lattice double sum only
    double hs2 = 0.0;              // squared homogeneous H^s seminorm
    double ratio = 0.0;
    double ratio_uncorrected = 0.0;
};

struct CoercivityOptions {
    double max_pairs = 5e7;  // budget for the O(N^{2d}) double sum
    PolarOptions polar;
};

// Periodic lattice double sum of |f(v') - f(v)|^2 K(v, v') (minimum image).
CoercivityResult coercivity_check(const KernelFunction& K, const DensityField& f, double s,
                                  const CoercivityOptions& opt = {});

struct BilinearResult {
    double pairing = 0.0;  // |<L_K f, g>|
    double norms = 0.0;    // ||f||_{H^s} ||g||_{H^s}
    double ratio = 0.0;
};

// Lattice L_K f (periodic double sum plus diagonal correction).
std::vector<double> lattice_lk(const KernelFunction& K, const DensityField& f, double s,
                               const CoercivityOptions& opt = {});
// Same operator on several signed sample vectors sharing one pass over K.
std::vector<std::vector<double>> lattice_lk(const KernelFunction& K, const Grid& g,
                                            const std::vector<std::vector<double>>& columns, double s,
                                            const CoercivityOptions& opt = {});
BilinearResult hs_bilinear_check(const KernelFunction& K, const DensityField& f, const DensityField& g, double s,
                                 const CoercivityOptions& opt = {});

double directional_lower_bound(const KernelFunction& K, const Vec& v, const std::vector<double>& radii,
                               const std::vector<Vec>& directions, double s, const PolarOptions& opt = {});

// K(z, v') for phase points z = (t, x, v).
using PhaseKernel = std::function<double(const KineticPoint&, const Vec&)>;

struct ModulusProbe {
    KineticPoint z1, z2;
    double r = 1.0;  // radius of a cylinder containing both points
};

// Random probe pairs inside Q_r(center) for each r.
std::vector<ModulusProbe> modulus_probes(const KineticPoint& center, const std::vector<double>& radii, double s,
                                         int pairs_per_radius, std::uint64_t seed);

double kernel_coefficient_modulus(const PhaseKernel& K, int d, const std::vector<ModulusProbe>& probes,
                                  double alpha_prime, const std::vector<double>& rho_radii, double s,
                                  const PolarOptions& opt = {});

// ---- reports ----

struct EllipticityRow {
    Vec v;
    double Lambda = 0.0;
    double lambda = 0.0;
    double mu = 0.0;
    CancellationResiduals cancel;
    double nondiv = 0.0;
};

struct EllipticityConstants {
    double Lambda_max = 0.0;  // pass when Lambda <= Lambda_max (0 disables)
    double lambda_min = 0.0;  // pass when lambda >= lambda_min
    double mu_min = 0.0;
    double c1_max = 0.0;
    double c2_max = 0.0;
};

struct EllipticityReport {
    std::vector<EllipticityRow> rows;
    bool pass = true;
    std::vector<std::string> failures;
};

struct ReportOptions {
    std::vector<double> upper_radii = {0.125, 0.25, 0.5, 1.0};
    std::vector<double> cancel_radii = {0.125, 0.25, 0.5, 0.75};
    ConeOptions cone;
    EllipticityConstants constants;
};

EllipticityReport ellipticity_report(const KernelFunction& K, const std::vector<Vec>& probes, double s,
                                     const ReportOptions& opt = {});
void write_ellipticity_csv(const EllipticityReport& rep, const std::string& path);

}  // namespace kinetik
