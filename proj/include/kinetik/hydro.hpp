#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kinetik/fields.hpp"

namespace kinetik {

struct HydroState {
    int d = 2;
    double rho = 0.0;
    Vec momentum;  // rho u
    double energy = 0.0;   // int f |v|^2
    double entropy = 0.0;  // int f log f (signed)
    double theta = 0.0;    // NaN when rho = 0
    bool theta_defined = false;

    Vec velocity() const;
};

struct MomentOptions {
    bool theta_literal_3 = false;  // use 1/3 instead of 1/d
};

// Grid quadrature plus the tail model integrated outside the ball with the
// same volume as the box.
HydroState moments(const DensityField& f, const MomentOptions& opt = {});

struct HydroBounds {
    double m0 = 0.5, M0 = 2.0, E0 = 10.0, H0 = 10.0;
    void validate() const;
};

struct Margin {
    bool pass = false;
    double margin = 0.0;  // >= 0 when satisfied
};

struct HReport {
    Margin mass_lower, mass_upper, energy, entropy;
    bool all_pass() const { return mass_lower.pass && mass_upper.pass && energy.pass && entropy.pass; }
};

HReport check_H(const HydroState& state, const HydroBounds& bounds);

struct DecayProfile {
    std::vector<std::pair<double, double>> entries;  // (r, N_r)
    double at(double r) const;
};

// N_r = sup (1+|v|)^r f over grid nodes and the tail model.
DecayProfile decay_profile(const DensityField& f, const std::vector<double>& orders);

struct EnvelopeFit {
    std::vector<double> t;
    std::vector<double> N;
    double c0 = 0.0;
    double beta = 0.0;
    double residual = 0.0;  // RMS of log N - log A over t > 0
    bool fitted = false;
};

// Minimal N(t) with f(t) <= N(t)(1+|v|)^{-q}, and the barrier fit A(t) = c0 (1 + t^{-beta}).
EnvelopeFit envelope_fit(const std::vector<std::pair<double, DensityField>>& trajectory, double q);

struct HydroRecord {
    double t = 0.0;
    HydroState state;
    double N_q = 0.0;
    HReport margins;
};

void write_hydro_csv(const std::vector<HydroRecord>& rows, const std::string& path);

}  // namespace kinetik
