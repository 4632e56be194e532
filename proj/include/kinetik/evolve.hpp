#pragma once

#include <array>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "kinetik/collision.hpp"
#include "kinetik/ellipticity.hpp"
#include "kinetik/fields.hpp"
#include "kinetik/holder.hpp"
#include "kinetik/hydro.hpp"
#include "kinetik/kernel.hpp"

namespace kinetik {

// ---- phase-space fields f(x, v), x periodic ----

// x in [0, P)^d (periodic), v on a Grid box (periodised for spectral work).
struct PhaseGrid {
    Grid v{2, 64, 6.0};
    double x_period = 2.0 * kPi;

    int d() const { return v.d; }
    void validate() const;
};

struct XMode {
    std::array<int, 3> k{0, 0, 0};
    std::vector<std::complex<double>> F;  // on the v nodes
};

// f(x, v) = sum_k c_k Re(F_k(v) e^{i kappa_k.x}), kappa_k = 2 pi k / P, with
// c_0 = 1 and c_k = 2 otherwise: one mode is stored per +-k pair, which keeps
// the physical field real (the dropped partner is the conjugate).
class PhaseField {
public:
    PhaseGrid grid;
    double t = 0.0;
    std::vector<XMode> modes;

    PhaseField() = default;
    explicit PhaseField(const PhaseGrid& g);

    static PhaseField x_independent(const PhaseGrid& g, const std::function<double(const Vec&)>& f);
    // Samples f on nx^d x-nodes and keeps the half-space modes with
    // max |F_k| > drop_tol * max |F_0|.
    static PhaseField sample(const PhaseGrid& g, int nx, const std::function<double(const Vec&, const Vec&)>& f,
                             double drop_tol = 1e-12);

    // Adds F to the mode k, creating it if needed. k must lie in the stored half space.
    void add_mode(const std::array<int, 3>& k, const std::vector<std::complex<double>>& F);
    XMode* find(const std::array<int, 3>& k);
    const XMode* find(const std::array<int, 3>& k) const;

    Vec wavevector(const std::array<int, 3>& k) const;
    // f(x, .) on the v nodes.
    std::vector<double> slice(const Vec& x) const;
    // int int f dx dv (grid quadrature in v).
    double mass() const;
    // ||f||_{L^2(T^d x box)}^2.
    double l2_squared() const;
};

// True when k is the stored representative of {k, -k}.
bool in_half_space(const std::array<int, 3>& k, int d);

// Cubic periodic splines of every mode; const evaluation is thread-safe.
class PhaseEvaluator {
public:
    explicit PhaseEvaluator(const PhaseField& f);
    double operator()(const Vec& x, const Vec& v) const;

private:
    int d_ = 2;
    double x_period_ = 2.0 * kPi;
    std::vector<Vec> kappa_;
    std::vector<double> weight_;
    std::vector<CubicBSpline> re_, im_;
};

// ---- fractional Kolmogorov flow  d_t f + v.grad_x f = -(-Delta_v)^s f ----

// Per stored x-mode, the v-transform (fields convention) of the co-moving
// profile H_k = e^{i t kappa.v} F_k. Free transport is then a pure phase and
// the dissipation a multiplier on a fixed frequency lattice, so composing
// flows is exact on the periodised box; fhat(k, xi) = Hhat(k, xi + t kappa).
struct KolmogorovState {
    PhaseGrid grid;
    double s = 0.5;
    double t = 0.0;
    std::vector<std::array<int, 3>> k;
    std::vector<SpectralField> coeffs;

    static KolmogorovState from_field(const PhaseField& f, double s);
    PhaseField to_field() const;
};

// E(xi, kappa, t) = int_0^t |xi + sigma kappa|^{2s} d sigma. Closed forms for
// kappa = 0 and s in {1/2, 1}; adaptive Gauss-Kronrod otherwise.
double kolmogorov_exponent(const Vec& xi, const Vec& kappa, double t, double s);
// Same integral over [t0, t1].
double kolmogorov_exponent(const Vec& xi, const Vec& kappa, double t0, double t1, double s);

KolmogorovState kolmogorov_exact(const KolmogorovState& f0, double t);
PhaseField kolmogorov_exact(const PhaseField& f0, double t, double s);

// f(t, x, v) of the flow from a fixed datum; the phase field at each
// requested time is built once and cached. Safe to call concurrently.
class KolmogorovFlow {
public:
    KolmogorovFlow(const PhaseField& f0, double s);
    double operator()(const KineticPoint& z) const;
    double s() const { return state0_.s; }
    const PhaseGrid& grid() const { return state0_.grid; }
    std::shared_ptr<const PhaseEvaluator> at(double t) const;

private:
    KolmogorovState state0_;
    mutable std::mutex mu_;
    mutable std::map<double, std::shared_ptr<const PhaseEvaluator>> cache_;
};

// ---- linear kinetic model  d_t f + v.grad_x f = L_K f + h ----

struct LinKinOptions {
    double cfl = 0.25;
    std::vector<double> upper_radii{0.125, 0.25, 0.5, 1.0};
    CoercivityOptions lattice;
};

// dt_max = cfl h^{2s} / Lambda-hat, Lambda-hat the largest averaged upper bound
// over the centre and the box corners. Infinite for the zero kernel.
double lin_kin_stability_bound(const KernelFunction& K, const Grid& v, double s, const LinKinOptions& opt = {});

// One step: exact transport of each x-mode (F_k <- F_k e^{-i dt kappa.v}),
// then forward Euler with the lattice L_K (per mode) and the source h.
// Throws ValidationError when dt exceeds the stability bound.
PhaseField step_lin_kin(const PhaseField& f, const KernelFunction& K, const PhaseField* h, double dt, double s,
                        const LinKinOptions& opt = {});

// ---- space-homogeneous Boltzmann ----

struct EvolveOptions {
    double T_end = 1.0;
    double dt = 0.0;  // 0: cfl h^{2s} / Lambda-hat
    double cfl = 0.25;
    int max_steps = 100000;
    int snapshot_every = 10;
    bool conservative_projection = true;
    bool reject_negative = false;   // halve dt instead of clipping
    double drift_budget = 1e-4;     // relative conservation drift per step
    int max_rejections = 6;
    double safety_factor = 10.0;    // max f may not exceed this times max f0
    double decay_order = 8.0;       // q of the recorded N_q
    std::vector<double> upper_radii{0.125, 0.25, 0.5, 1.0};
    PolarOptions polar;
    MomentOptions moments;
    std::function<void(int, double)> progress;  // (step, t)
};

struct StepDiagnostics {
    int step = 0;
    double t = 0.0;
    double dt = 0.0;
    double mass = 0.0, momentum = 0.0, energy = 0.0, entropy = 0.0;
    // Relative drifts from the initial state; momentum relative to int |v| f0.
    double mass_drift = 0.0, momentum_drift = 0.0, energy_drift = 0.0;
    double entropy_increment = 0.0;
    double clipped_mass = 0.0;
    double N_q = 0.0;
    int rejections = 0;
};

struct Snapshot {
    double t = 0.0;
    DensityField f;
};

struct HomogeneousTrajectory {
    CollisionModel model;
    EvolveOptions options;
    double dt = 0.0;
    double dt_bound = 0.0;
    double lambda_hat = 0.0;
    std::vector<Snapshot> snapshots;     // includes t = 0 and the final state
    std::vector<StepDiagnostics> steps;  // steps[0] describes the initial state

    double max_mass_drift() const;
    double max_momentum_drift() const;
    double max_energy_drift() const;
    double max_entropy_increment() const;
    std::vector<std::pair<double, DensityField>> as_pairs() const;
};

// Conservative correction: Q - f (a + b.v + c|v|^2) with zero discrete mass,
// momentum and energy. Returns Q unchanged when f carries no mass.
std::vector<double> conservative_projection(const DensityField& f, const std::vector<double>& Q);

struct StabilityBound {
    double lambda_hat = 0.0;
    double dt = std::numeric_limits<double>::infinity();
};

// cfl h^{2s} / Lambda-hat with Lambda-hat the largest averaged upper bound of
// K_{f0} at the bulk velocity and two points along the first axis out to the
// support radius.
StabilityBound homogeneous_stability_bound(const DensityField& f0, const CollisionModel& model,
                                          const EvolveOptions& opt = {});

HomogeneousTrajectory evolve_homogeneous(const DensityField& f0, const CollisionModel& model,
                                         const EvolveOptions& opt = {});

void write_diagnostics_csv(const HomogeneousTrajectory& traj, const std::string& path);
// Directory with config.json (verbatim copy when config_text is nonempty),
// snap_XXXX.kfld per snapshot, diagnostics.csv and header.json.
void write_trajectory(const HomogeneousTrajectory& traj, const std::string& dir, const std::string& config_text);

// ---- diagnostics ----

struct HolderRow {
    double t = 0.0;
    double seminorm = 0.0;
    double sup_norm = 0.0;
    int cylinders = 0;
};

struct HolderDecayTable {
    double alpha = 0.0;
    std::vector<HolderRow> rows;
    double slope = 0.0;  // least-squares d log seminorm / d log t
    double tau = 0.0;
    double bound_constant = 0.0;  // C: seminorm <= C sup|f| for t >= tau
    double worst_ratio = 0.0;     // max over t >= tau of seminorm / sup|f|
    bool bounded = false;
    bool all_finite = false;
};

struct HolderProbeOptions {
    double alpha = 0.5;
    std::vector<double> times{0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0};
    KineticPoint center;             // its t is replaced by each probe time
    std::vector<double> radii{0.5, 0.25, 0.125};
    int n_nodes = 96;
    int time_levels = 4;
    std::uint64_t seed = 1;
    double tau = 0.1;
    double bound_constant = 50.0;
};

// Seminorm on the cylinders Q_r((t, x0, v0)) restricted to the slab
// D_t = {t/2 <= tau <= t}, for each t of the ladder. sup_norm is the largest
// |f| seen at the probe nodes.
HolderDecayTable holder_decay_probe(const PhaseFunction& f, double s, const HolderProbeOptions& opt);
HolderDecayTable holder_decay_probe(const KolmogorovFlow& flow, const HolderProbeOptions& opt);
// Homogeneous trajectory viewed as an x-independent phase function,
// linear in t between snapshots.
HolderDecayTable holder_decay_probe(const HomogeneousTrajectory& traj, const HolderProbeOptions& opt);
PhaseFunction trajectory_function(const HomogeneousTrajectory& traj);

struct EnergyRow {
    double t = 0.0;
    double l2_squared = 0.0;
    double hs_squared = 0.0;
    double sup_l2 = 0.0;       // sup over [0, t] of ||f||^2
    double hs_integral = 0.0;  // int_0^t ||f||_{H^s}^2 (trapezoid)
    double l2_integral = 0.0;  // int_0^t ||f||^2
    double margin = 0.0;       // ||f0||^2 + C_lo int ||f||^2 - (sup + kappa int ||f||_{H^s}^2)
};

struct EnergyReport {
    std::vector<EnergyRow> rows;
    double kappa = 0.0;  // coercivity weight on the H^s integral
    double C_lo = 0.0;   // lower-order allowance rate
    bool pass = false;
};

struct EnergyOptions {
    double kappa = 0.1;   // weight of the H^s integral
    double C_lo = -1.0;   // < 0: 3 c_b max_v |f0 * |.|^gamma|
};

EnergyReport energy_dissipation_probe(const HomogeneousTrajectory& traj, const EnergyOptions& opt = {});

void write_holder_csv(const HolderDecayTable& table, const std::string& path);
void write_energy_csv(const EnergyReport& rep, const std::string& path);

}  // namespace kinetik
