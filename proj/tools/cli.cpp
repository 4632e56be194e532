#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "kinetik/changevar.hpp"
#include "kinetik/csv.hpp"
#include "kinetik/ellipticity.hpp"
#include "kinetik/evolve.hpp"
#include "kinetik/holder.hpp"
#include "kinetik/parallel.hpp"

namespace kinetik::cli {

namespace fs = std::filesystem;

namespace {

template <class T>
T get(const json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config key '") + key + "': " + e.what());
    }
}

Vec to_vec(const json& j, int d, const std::string& what) {
    require(j.is_array() && static_cast<int>(j.size()) == d, what + " must be an array of " + std::to_string(d) +
                                                                 " numbers");
    Vec v(d);
    for (int k = 0; k < d; ++k) {
        require(j[k].is_number(), what + " must hold numbers");
        v[k] = j[k].get<double>();
    }
    return v;
}

Vec get_vec(const json& j, const char* key, int d, const Vec& fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    return to_vec(j.at(key), d, key);
}

std::vector<double> get_list(const json& j, const char* key, std::vector<double> fallback) {
    return get<std::vector<double>>(j, key, std::move(fallback));
}

std::vector<Vec> get_points(const json& j, const char* key, int d) {
    std::vector<Vec> out;
    if (!j.is_object() || !j.contains(key)) return out;
    require(j.at(key).is_array(), std::string(key) + " must be an array");
    for (const auto& e : j.at(key)) out.push_back(to_vec(e, d, key));
    return out;
}

void apply_quadrature(QuadratureSettings& q, const json& j) {
    if (!j.is_object()) return;
    q.lk_direction_pairs = get(j, "lk_direction_pairs", q.lk_direction_pairs);
    q.inner_nodes = get(j, "inner_nodes", q.inner_nodes);
    q.h_pv = get(j, "h_pv", q.h_pv);
    q.panel_nodes = get(j, "panel_nodes", q.panel_nodes);
    q.max_panel = get(j, "max_panel", q.max_panel);
    q.line_step = get(j, "line_step", q.line_step);
    q.line_panel = get(j, "line_panel", q.line_panel);
    q.plane_angles = get(j, "plane_angles", q.plane_angles);
    q.sigma_direction_pairs = get(j, "sigma_direction_pairs", q.sigma_direction_pairs);
    q.sigma_theta_inner = get(j, "sigma_theta_inner", q.sigma_theta_inner);
    q.sigma_theta_split = get(j, "sigma_theta_split", q.sigma_theta_split);
    q.sigma_theta_panels = get(j, "sigma_theta_panels", q.sigma_theta_panels);
    q.sigma_theta_nodes = get(j, "sigma_theta_nodes", q.sigma_theta_nodes);
    q.sigma_phi = get(j, "sigma_phi", q.sigma_phi);
    q.conv_direction_pairs = get(j, "conv_direction_pairs", q.conv_direction_pairs);
    q.tail_tol = get(j, "tail_tol", q.tail_tol);
    q.check_convergence = get(j, "check_convergence", q.check_convergence);
    q.pv_tolerance = get(j, "pv_tolerance", q.pv_tolerance);
    const std::string interp = get<std::string>(j, "interp", q.interp == Interp::cubic ? "cubic" : "multilinear");
    require(interp == "cubic" || interp == "multilinear", "quadrature.interp must be cubic or multilinear");
    q.interp = interp == "cubic" ? Interp::cubic : Interp::multilinear;
}

AnalyticField analytic_from(const json& comps, int d) {
    require(comps.is_array() && !comps.empty(), "field.components must be a nonempty array");
    std::vector<AnalyticField::Component> parts;
    for (const auto& c : comps) {
        const std::string type = get<std::string>(c, "type", "");
        if (type == "maxwellian") {
            parts.emplace_back(Maxwellian{get(c, "rho", 1.0), get_vec(c, "u", d, zero_vec(d)), get(c, "T", 1.0)});
        } else if (type == "algebraic") {
            parts.emplace_back(AlgebraicDecay{get(c, "C", 1.0), get(c, "q", 8.0)});
        } else if (type == "bump") {
            parts.emplace_back(SmoothBump{get_vec(c, "center", d, zero_vec(d)), get(c, "width", 1.0),
                                          get(c, "height", 1.0)});
        } else {
            throw ValidationError("unknown field component type '" + type + "'");
        }
    }
    return AnalyticField(d, std::move(parts));
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    require(static_cast<bool>(os), "cannot write " + p.string());
    os << text;
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

struct Context {
    Scenario sc;
    fs::path out;
    std::ostream& log;
};

fs::path prepare_out(const Context& cx) {
    fs::create_directories(cx.out);
    write_text(cx.out / "config.json", cx.sc.text);
    return cx.out;
}

json vec_json(const Vec& v) {
    json a = json::array();
    for (int k = 0; k < v.size(); ++k) a.push_back(v[k]);
    return a;
}

// ---- subcommands ----

int cmd_hydro(Context& cx) {
    const DensityField f = build_field(cx.sc);
    MomentOptions mo;
    mo.theta_literal_3 = cx.sc.theta_literal_3;
    const json sec = cx.sc.section("hydro");
    const double q = get(sec, "decay_order", 8.0);
    HydroRecord rec;
    rec.state = moments(f, mo);
    rec.margins = check_H(rec.state, cx.sc.bounds);
    rec.N_q = decay_profile(f, {q}).at(q);
    const fs::path out = prepare_out(cx);
    write_hydro_csv({rec}, (out / "hydro.csv").string());
    json s;
    s["rho"] = rec.state.rho;
    s["velocity"] = vec_json(rec.state.velocity());
    s["energy"] = rec.state.energy;
    s["entropy"] = rec.state.entropy;
    s["theta"] = rec.state.theta_defined ? json(rec.state.theta) : json(nullptr);
    s["N_q"] = rec.N_q;
    s["H_pass"] = rec.margins.all_pass();
    write_json(out / "summary.json", s);
    cx.log << "hydro: rho = " << fmt(rec.state.rho) << ", (H) " << (rec.margins.all_pass() ? "holds" : "violated")
           << "\n";
    return Exit::ok;
}

int cmd_kernel(Context& cx) {
    const int d = cx.sc.model.d;
    const json sec = cx.sc.section("kernel");
    std::vector<std::pair<Vec, Vec>> pairs;
    if (sec.contains("probes")) {
        require(sec.at("probes").is_array(), "kernel.probes must be an array of [v, v'] pairs");
        for (const auto& p : sec.at("probes")) {
            require(p.is_array() && p.size() == 2, "kernel.probes entries must be [v, v']");
            pairs.emplace_back(to_vec(p[0], d, "kernel probe v"), to_vec(p[1], d, "kernel probe v'"));
        }
    }
    for (const auto& [v, vp] : pairs) require((v - vp).norm() > 0.0, "kernel probe with v' = v");
    const std::vector<Vec> cancel = get_points(sec, "cancellation_velocities", d);
    const DensityField f = build_field(cx.sc);
    const KernelFunction K = boltzmann_kernel(f, cx.sc.model);
    const fs::path out = prepare_out(cx);
    write_kernel_csv(K, pairs, (out / "kernel.csv").string());

    std::vector<std::string> hdr;
    for (int k = 0; k < d; ++k) hdr.push_back("v" + std::to_string(k + 1));
    for (int k = 0; k < d; ++k) hdr.push_back("vp" + std::to_string(k + 1));
    for (const char* c : {"K_forward", "K_backward", "asymmetry"}) hdr.emplace_back(c);
    {
        CsvWriter w((out / "symmetry.csv").string(), hdr);
        for (const auto& [v, vp] : pairs) {
            const double a = K(v, vp), b = K(vp, v);
            for (int k = 0; k < d; ++k) w << v[k];
            for (int k = 0; k < d; ++k) w << vp[k];
            w << a << b << a - b;
            w.end_row();
        }
    }
    std::vector<double> ratios(cancel.size()), lhs(cancel.size());
    parallel_for(cancel.size(), [&](std::size_t i) {
        lhs[i] = cancellation_lhs(f, cancel[i], cx.sc.model);
        ratios[i] = cancellation_ratio(f, cancel[i], cx.sc.model);
    });
    hdr.resize(d);
    for (const char* c : {"lhs", "ratio"}) hdr.emplace_back(c);
    {
        CsvWriter w((out / "cancellation.csv").string(), hdr);
        for (std::size_t i = 0; i < cancel.size(); ++i) {
            for (int k = 0; k < d; ++k) w << cancel[i][k];
            w << lhs[i] << ratios[i];
            w.end_row();
        }
    }
    json s;
    s["pairs"] = pairs.size();
    s["c_b"] = calibrated_cb(cx.sc.model);
    if (!ratios.empty()) {
        const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
        s["ratio_min"] = *lo;
        s["ratio_max"] = *hi;
        s["ratio_spread"] = *lo != 0.0 ? (*hi - *lo) / std::abs(*lo) : 0.0;
    }
    write_json(out / "summary.json", s);
    cx.log << "kernel: " << pairs.size() << " probes, " << cancel.size() << " cancellation velocities\n";
    return Exit::ok;
}

ConeOptions cone_from(const json& sec) {
    ConeOptions c;
    c.probe_radii = get_list(sec, "probe_radii", c.probe_radii);
    c.threshold_fraction = get(sec, "threshold_fraction", c.threshold_fraction);
    c.polar.direction_pairs = get(sec, "direction_pairs", c.polar.direction_pairs);
    c.polar.ico_level = get(sec, "ico_level", c.polar.ico_level);
    c.polar.radial_nodes = get(sec, "radial_nodes", c.polar.radial_nodes);
    return c;
}

int cmd_ellipticity(Context& cx) {
    const int d = cx.sc.model.d;
    const json sec = cx.sc.section("ellipticity");
    std::vector<Vec> probes = get_points(sec, "velocities", d);
    if (probes.empty()) probes.push_back(zero_vec(d));
    ReportOptions ro;
    ro.upper_radii = get_list(sec, "upper_radii", ro.upper_radii);
    ro.cancel_radii = get_list(sec, "cancel_radii", ro.cancel_radii);
    ro.cone = cone_from(sec);
    if (sec.contains("constants")) {
        const json& c = sec.at("constants");
        ro.constants.Lambda_max = get(c, "Lambda_max", 0.0);
        ro.constants.lambda_min = get(c, "lambda_min", 0.0);
        ro.constants.mu_min = get(c, "mu_min", 0.0);
        ro.constants.c1_max = get(c, "c1_max", 0.0);
        ro.constants.c2_max = get(c, "c2_max", 0.0);
    }
    const DensityField f = build_field(cx.sc);
    const KernelFunction K = boltzmann_kernel(f, cx.sc.model);
    const EllipticityReport rep = ellipticity_report(K, probes, cx.sc.model.s, ro);
    const fs::path out = prepare_out(cx);
    write_ellipticity_csv(rep, (out / "ellipticity.csv").string());
    json s;
    s["pass"] = rep.pass;
    s["failures"] = rep.failures;
    s["probes"] = rep.rows.size();
    write_json(out / "summary.json", s);
    cx.log << "ellipticity: " << rep.rows.size() << " probes, " << (rep.pass ? "pass" : "fail") << "\n";
    return Exit::ok;
}

int cmd_changevar(Context& cx) {
    const int d = cx.sc.model.d;
    const json sec = cx.sc.section("changevar");
    const std::vector<double> norms = get_list(sec, "v0_norms", {1.0, 2.0, 4.0, 8.0, 16.0});
    SweepOptions so;
    so.direction = get_vec(sec, "direction", d, Vec());
    so.upper_radii = get_list(sec, "upper_radii", so.upper_radii);
    so.cancel_radii = get_list(sec, "cancel_radii", so.cancel_radii);
    so.cone = cone_from(sec);
    so.with_control = get(sec, "with_control", true);
    if (sec.contains("probes")) {
        so.probes.clear();
        for (const auto& p : sec.at("probes")) {
            require(p.is_array() && p.size() == 2, "changevar.probes entries must be [a, b]");
            so.probes.emplace_back(p[0].get<double>(), p[1].get<double>());
        }
    }
    const DensityField f = build_field(cx.sc);
    const SweepResult r = uniformity_sweep(f, norms, cx.sc.model, so);
    const fs::path out = prepare_out(cx);
    write_sweep_csv(r, (out / "changevar.csv").string());
    json s;
    s["transformed_ratio"] = {{"lambda", r.transformed_ratio.lambda},
                              {"Lambda", r.transformed_ratio.Lambda},
                              {"mu", r.transformed_ratio.mu}};
    if (so.with_control)
        s["control_ratio"] = {{"lambda", r.control_ratio.lambda},
                              {"Lambda", r.control_ratio.Lambda},
                              {"mu", r.control_ratio.mu}};
    write_json(out / "summary.json", s);
    cx.log << "changevar: transformed lambda ratio " << fmt(r.transformed_ratio.lambda) << "\n";
    return Exit::ok;
}

EvolveOptions evolve_options(const Scenario& sc, const DensityField* f0) {
    const json sec = sc.section("evolve");
    EvolveOptions o;
    o.cfl = get(sec, "cfl", o.cfl);
    o.dt = get(sec, "dt", o.dt);
    o.snapshot_every = get(sec, "snapshot_every", o.snapshot_every);
    o.conservative_projection = get(sec, "conservative_projection", o.conservative_projection);
    o.reject_negative = get(sec, "reject_negative", o.reject_negative);
    o.drift_budget = get(sec, "drift_budget", o.drift_budget);
    o.max_rejections = get(sec, "max_rejections", o.max_rejections);
    o.max_steps = get(sec, "max_steps", o.max_steps);
    o.safety_factor = get(sec, "safety_factor", o.safety_factor);
    o.decay_order = get(sec, "decay_order", o.decay_order);
    o.upper_radii = get_list(sec, "upper_radii", o.upper_radii);
    o.moments.theta_literal_3 = sc.theta_literal_3;
    o.T_end = get(sec, "T_end", 0.0);
    const int steps = get(sec, "steps", 0);
    if (o.T_end <= 0.0 && steps > 0 && f0) {
        const double dt = o.dt > 0.0 ? o.dt : homogeneous_stability_bound(*f0, sc.model, o).dt;
        o.T_end = steps * (std::isfinite(dt) ? dt : 1.0);
    }
    return o;
}

int cmd_evolve(Context& cx) {
    const DensityField f0 = build_field(cx.sc);
    EvolveOptions o = evolve_options(cx.sc, &f0);
    require(o.T_end > 0.0, "evolve needs T_end > 0 or steps > 0");
    const int total = static_cast<int>(std::max(1.0, std::ceil(o.T_end / std::max(o.dt, 1e-300))));
    o.progress = [&cx, total](int step, double t) {
        if (step % 10 == 0) cx.log << "  step " << step << " t = " << fmt(t) << "\n";
        (void)total;
    };
    const HomogeneousTrajectory traj = evolve_homogeneous(f0, cx.sc.model, o);
    const fs::path out = prepare_out(cx);
    write_trajectory(traj, (out / "trajectory").string(), cx.sc.text);

    std::vector<HydroRecord> rows;
    for (const auto& snap : traj.snapshots) {
        HydroRecord r;
        r.t = snap.t;
        r.state = moments(snap.f, o.moments);
        r.margins = check_H(r.state, cx.sc.bounds);
        r.N_q = decay_profile(snap.f, {o.decay_order}).at(o.decay_order);
        rows.push_back(r);
    }
    write_hydro_csv(rows, (out / "hydro.csv").string());

    const json sec = cx.sc.section("evolve");
    EnergyOptions eo;
    eo.kappa = get(sec, "kappa", eo.kappa);
    eo.C_lo = get(sec, "C_lo", eo.C_lo);
    const EnergyReport en = energy_dissipation_probe(traj, eo);
    write_energy_csv(en, (out / "energy.csv").string());
    const EnvelopeFit env = envelope_fit(traj.as_pairs(), o.decay_order);
    {
        CsvWriter w((out / "envelope.csv").string(), {"t", "N"});
        for (std::size_t i = 0; i < env.t.size(); ++i) {
            w << env.t[i] << env.N[i];
            w.end_row();
        }
    }
    double n_ratio = 0.0;
    for (const auto& st : traj.steps) n_ratio = std::max(n_ratio, st.N_q / std::max(traj.steps[0].N_q, 1e-300));
    json s;
    s["steps"] = traj.steps.size() - 1;
    s["dt"] = traj.dt;
    s["dt_bound"] = traj.dt_bound;
    s["lambda_hat"] = traj.lambda_hat;
    s["max_mass_drift"] = traj.max_mass_drift();
    s["max_momentum_drift"] = traj.max_momentum_drift();
    s["max_energy_drift"] = traj.max_energy_drift();
    s["max_entropy_increment"] = traj.max_entropy_increment();
    double clipped = 0.0;
    for (const auto& st : traj.steps) clipped += st.clipped_mass;
    s["clipped_mass"] = clipped;
    s["N_q_max_ratio"] = n_ratio;
    s["envelope"] = {{"c0", env.c0}, {"beta", env.beta}, {"residual", env.residual}, {"fitted", env.fitted}};
    s["energy"] = {{"pass", en.pass}, {"kappa", en.kappa}, {"C_lo", en.C_lo}};
    write_json(out / "summary.json", s);
    cx.log << "evolve: " << traj.steps.size() - 1 << " steps, max entropy increment "
           << fmt(traj.max_entropy_increment()) << "\n";
    return Exit::ok;
}

HolderProbeOptions holder_options(const json& sec, int d, double s, std::uint64_t seed) {
    HolderProbeOptions o;
    o.alpha = get(sec, "alpha", std::min(1.0, 2.0 * s) / 2.0);
    o.times = get_list(sec, "times", o.times);
    o.radii = get_list(sec, "radii", o.radii);
    o.n_nodes = get(sec, "n_nodes", o.n_nodes);
    o.time_levels = get(sec, "time_levels", o.time_levels);
    o.tau = get(sec, "tau", o.tau);
    o.bound_constant = get(sec, "bound_constant", o.bound_constant);
    o.seed = seed;
    Vec x0 = zero_vec(d), v0 = zero_vec(d);
    if (sec.contains("center")) {
        x0 = get_vec(sec.at("center"), "x", d, x0);
        v0 = get_vec(sec.at("center"), "v", d, v0);
    }
    o.center = KineticPoint(0.0, x0, v0);
    return o;
}

PhaseField kolmogorov_datum(const json& sec, const PhaseGrid& pg) {
    const json dat = sec.contains("datum") ? sec.at("datum") : json::object();
    const std::string type = get<std::string>(dat, "type", "box");
    const double amp = get(dat, "x_amplitude", 0.5);
    const int nx = get(sec, "nx", 4);
    const int d = pg.d();
    std::function<double(const Vec&)> prof;
    if (type == "box") {
        const double a = get(dat, "half_side", 1.0);
        const Vec c = get_vec(dat, "center", d, zero_vec(d));
        prof = [a, c](const Vec& v) { return ((v - c).cwiseAbs().maxCoeff() < a) ? 1.0 : 0.0; };
    } else if (type == "gaussian") {
        const double T = get(dat, "T", 1.0);
        require(T > 0.0, "gaussian datum needs T > 0");
        prof = [T](const Vec& v) { return std::exp(-v.squaredNorm() / (2.0 * T)); };
    } else {
        throw ValidationError("unknown kolmogorov datum type '" + type + "'");
    }
    return PhaseField::sample(pg, nx, [prof, amp](const Vec& x, const Vec& v) {
        return prof(v) * (1.0 + amp * std::cos(x[0]));
    });
}

PhaseGrid kolmogorov_grid(const json& sec, int d) {
    PhaseGrid pg;
    pg.v = Grid{d, get(sec, "nv", 128), get(sec, "half_width", 4.0)};
    pg.x_period = get(sec, "x_period", 2.0 * kPi);
    pg.validate();
    return pg;
}

int cmd_kolmogorov(Context& cx) {
    const json sec = cx.sc.section("kolmogorov");
    const int d = get(sec, "d", cx.sc.model.d);
    const double s = get(sec, "s", cx.sc.model.s);
    require(s > 0.0 && s <= 1.0, "kolmogorov.s must lie in (0, 1]");
    const PhaseGrid pg = kolmogorov_grid(sec, d);
    const PhaseField f0 = kolmogorov_datum(sec, pg);
    const KolmogorovFlow flow(f0, s);
    const HolderProbeOptions ho = holder_options(sec, d, s, cx.sc.seed);
    const HolderDecayTable tab = holder_decay_probe(flow, ho);
    const fs::path out = prepare_out(cx);
    write_holder_csv(tab, (out / "holder.csv").string());
    // plot-ready slice f(T, x0, .) at the last probe time
    const double T = ho.times.empty() ? 0.0 : *std::max_element(ho.times.begin(), ho.times.end());
    const PhaseField fT = kolmogorov_exact(f0, T, s);
    const std::vector<double> sl = fT.slice(ho.center.x);
    {
        std::vector<std::string> hdr;
        for (int k = 0; k < d; ++k) hdr.push_back("v" + std::to_string(k + 1));
        hdr.emplace_back("f");
        CsvWriter w((out / "slice.csv").string(), hdr);
        for (std::size_t p = 0; p < sl.size(); ++p) {
            const Vec v = pg.v.point(p);
            for (int k = 0; k < d; ++k) w << v[k];
            w << sl[p];
            w.end_row();
        }
    }
    json s_;
    s_["alpha"] = tab.alpha;
    s_["slope"] = tab.slope;
    s_["all_finite"] = tab.all_finite;
    s_["bounded"] = tab.bounded;
    s_["worst_ratio"] = tab.worst_ratio;
    s_["mass_initial"] = f0.mass();
    s_["mass_final"] = fT.mass();
    write_json(out / "summary.json", s_);
    cx.log << "kolmogorov: fitted slope " << fmt(tab.slope) << "\n";
    return Exit::ok;
}

int cmd_holder(Context& cx) {
    const json sec = cx.sc.section("holder");
    const int d = cx.sc.model.d;
    DensityField f;
    if (sec.contains("file")) {
        fs::path p = sec.at("file").get<std::string>();
        if (p.is_relative()) p = fs::path(cx.sc.base_dir) / p;
        f = read_kfld(p.string());
    } else {
        f = build_field(cx.sc);
    }
    require(f.dim() == d, "stored field dimension does not match the model");
    const double s = get(sec, "s", cx.sc.model.s);
    const double alpha = get(sec, "alpha", std::min(1.0, 2.0 * s) / 2.0);
    ProbePlanSpec spec;
    spec.d = d;
    spec.s = s;
    spec.center_lo = KineticPoint(0.0, zero_vec(d), get_vec(sec, "center_lo", d, Vec::Constant(d, -1.0)));
    spec.center_hi = KineticPoint(0.0, zero_vec(d), get_vec(sec, "center_hi", d, Vec::Constant(d, 1.0)));
    spec.n_centers = get(sec, "n_centers", spec.n_centers);
    spec.radii = get_list(sec, "radii", spec.radii);
    spec.n_nodes = get(sec, "n_nodes", spec.n_nodes);
    spec.seed = cx.sc.seed;
    const ProbePlan plan = make_probe_plan(spec);
    const PhaseFunction F = [&f](const KineticPoint& z) { return f.evaluate(z.v, Interp::cubic); };
    const bool weighted = sec.contains("weight_q");
    const HolderEstimate est = weighted ? weighted_holder_seminorm(F, {}, alpha, sec.at("weight_q").get<double>(), plan)
                                        : holder_seminorm(F, {}, alpha, plan);
    const fs::path out = prepare_out(cx);
    {
        CsvWriter w((out / "holder.csv").string(), {"alpha", "seminorm", "cylinders", "worst_r", "basis_size"});
        w << est.alpha << est.seminorm << static_cast<double>(est.cylinders_probed) << est.worst_cylinder.r
          << static_cast<double>(est.basis_size);
        w.end_row();
    }
    json s_;
    s_["alpha"] = est.alpha;
    s_["seminorm"] = est.seminorm;
    s_["cylinders"] = est.cylinders_probed;
    s_["weighted"] = weighted;
    write_json(out / "summary.json", s_);
    cx.log << "holder: seminorm " << fmt(est.seminorm) << "\n";
    return Exit::ok;
}

int cmd_report(Context& cx) {
    const json sec = cx.sc.section("report");
    std::vector<fs::path> inputs;
    if (sec.contains("inputs")) {
        for (const auto& e : sec.at("inputs")) {
            fs::path p = e.get<std::string>();
            if (p.is_relative()) p = fs::path(cx.sc.base_dir) / p;
            inputs.push_back(p);
        }
    } else {
        inputs.push_back(cx.out);
    }
    std::vector<std::pair<fs::path, fs::path>> csvs;  // (root, file)
    for (const auto& root : inputs) {
        if (!fs::is_directory(root)) continue;
        for (const auto& e : fs::recursive_directory_iterator(root)) {
            if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
            if (e.path().string().find("/report/") != std::string::npos) continue;
            csvs.emplace_back(root, e.path());
        }
    }
    std::sort(csvs.begin(), csvs.end());
    if (csvs.empty()) throw ValidationError("report: no CSV artifacts found in the input directories");
    const fs::path out = cx.out / "report";
    fs::create_directories(out / "tables");
    write_text(out / "config.json", cx.sc.text);
    json files = json::array();
    for (const auto& [root, file] : csvs) {
        std::ifstream is(file);
        std::string header, line;
        std::getline(is, header);
        std::vector<std::string> cols;
        {
            std::stringstream ss(header);
            std::string c;
            while (std::getline(ss, c, ',')) cols.push_back(c);
        }
        std::vector<double> lo(cols.size(), INFINITY), hi(cols.size(), -INFINITY), last(cols.size(), NAN);
        std::size_t rows = 0;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            ++rows;
            std::stringstream ss(line);
            std::string c;
            for (std::size_t k = 0; k < cols.size() && std::getline(ss, c, ','); ++k) {
                char* end = nullptr;
                const double x = std::strtod(c.c_str(), &end);
                if (end == c.c_str()) continue;
                last[k] = x;
                if (std::isfinite(x)) {
                    lo[k] = std::min(lo[k], x);
                    hi[k] = std::max(hi[k], x);
                }
            }
        }
        const std::string rel = fs::relative(file, root).generic_string();
        json cj = json::object();
        for (std::size_t k = 0; k < cols.size(); ++k) {
            auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
            cj[cols[k]] = {{"min", num(lo[k])}, {"max", num(hi[k])}, {"last", num(last[k])}};
        }
        files.push_back({{"file", rel}, {"rows", rows}, {"columns", cj}});
        std::string flat = rel;
        std::replace(flat.begin(), flat.end(), '/', '_');
        fs::copy_file(file, out / "tables" / flat, fs::copy_options::overwrite_existing);
    }
    json s;
    s["files"] = files;
    for (const auto& root : inputs) {
        for (const auto& e : fs::recursive_directory_iterator(root)) {
            if (e.path().filename() != "summary.json" || e.path().string().find("/report/") != std::string::npos)
                continue;
            std::ifstream is(e.path());
            try {
                s["summaries"][fs::relative(e.path(), root).generic_string()] = json::parse(is);
            } catch (const json::exception&) {
            }
        }
    }
    write_json(out / "summary.json", s);
    cx.log << "report: " << csvs.size() << " tables merged\n";
    return Exit::ok;
}

int cmd_bench(Context& cx) {
    const json sec = cx.sc.section("bench");
    const int d = cx.sc.model.d;
    const int pairs = get(sec, "pairs", 1000);
    const int lk_nodes = get(sec, "lk_nodes", 16);
    const int sigma_nodes = get(sec, "q_sigma_nodes", 4);
    const double radius = get(sec, "radius", 3.0);
    require(pairs >= 0 && lk_nodes >= 0 && sigma_nodes >= 0, "bench counts must be >= 0");
    const DensityField f = build_field(cx.sc);
    const KernelFunction K = boltzmann_kernel(f, cx.sc.model);
    std::mt19937_64 rng(cx.sc.seed);
    std::uniform_real_distribution<double> U(-radius, radius);
    auto point = [&]() {
        Vec v(d);
        for (int k = 0; k < d; ++k) v[k] = U(rng);
        return v;
    };
    const fs::path out = prepare_out(cx);
    CsvWriter w((out / "bench.csv").string(), {"kernel", "count", "total_s", "per_item_s", "checksum"});
    using clock = std::chrono::steady_clock;
    auto row = [&](const char* name, int n, const std::function<double(int)>& fn) {
        if (n == 0) return;
        const auto a = clock::now();
        double sum = 0.0;
        for (int i = 0; i < n; ++i) sum += fn(i);
        const double dt = std::chrono::duration<double>(clock::now() - a).count();
        w << std::string(name) << static_cast<double>(n) << dt << dt / n << sum;
        w.end_row();
        cx.log << name << ": " << n << " in " << dt << " s\n";
    };
    std::vector<std::pair<Vec, Vec>> P;
    while (static_cast<int>(P.size()) < pairs) {
        Vec v = point(), vp = point();
        if ((v - vp).norm() > 1e-9) P.emplace_back(v, vp);
    }
    std::vector<Vec> A(lk_nodes), B(sigma_nodes);
    for (auto& v : A) v = point();
    for (auto& v : B) v = point();
    row("kernel_pair", pairs, [&](int i) { return K(P[i].first, P[i].second); });
    row("lk_node", lk_nodes, [&](int i) { return apply_lk(K, f, A[i], cx.sc.model); });
    row("q_carleman_node", lk_nodes, [&](int i) { return q_carleman(f, A[i], cx.sc.model); });
    row("q_sigma_node", sigma_nodes, [&](int i) { return q_sigma(f, B[i], cx.sc.model); });
    return Exit::ok;
}

int cmd_validate(Context& cx) {
    const auto diags = validate_scenario(cx.sc);
    for (const auto& dg : diags) cx.log << "[" << dg.module << "] " << dg.message << "\n";
    if (diags.empty()) {
        const CostEstimate c = estimate_cost(cx.sc);
        cx.log << "ok: " << c.nodes << " grid nodes, " << fmt(c.steps) << " evolve steps, predicted "
               << fmt(c.q_evaluations) << " Q node evaluations, " << fmt(c.kernel_pairs) << " kernel probes\n";
        return Exit::ok;
    }
    return Exit::validation;
}

using Command = int (*)(Context&);

const std::map<std::string, Command>& command_table() {
    static const std::map<std::string, Command> t = {
        {"kernel", cmd_kernel},       {"ellipticity", cmd_ellipticity}, {"changevar", cmd_changevar},
        {"evolve", cmd_evolve},       {"kolmogorov", cmd_kolmogorov},   {"holder", cmd_holder},
        {"hydro", cmd_hydro},         {"report", cmd_report},           {"validate", cmd_validate},
        {"bench", cmd_bench},
    };
    return t;
}

template <class F>
void collect(std::vector<Diagnostic>& out, const std::string& module, F&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        out.push_back({module, e.what()});
    } catch (const json::exception& e) {
        out.push_back({module, e.what()});
    }
}

}  // namespace

json Scenario::section(const std::string& name) const {
    if (sections.is_object() && sections.contains(name)) return sections.at(name);
    return json::object();
}

Scenario parse_scenario(const std::string& text, const std::string& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    require(j.is_object(), "config must be a JSON object");
    Scenario sc;
    sc.text = text;
    sc.base_dir = base_dir;
    sc.schema_version = get(j, "schema_version", 0);
    require(sc.schema_version == kSchemaVersion,
            "unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
    const json model = j.value("model", json::object());
    sc.model.d = get(model, "d", 2);
    sc.model.gamma = get(model, "gamma", 0.0);
    sc.model.s = get(model, "s", 0.25);
    apply_quadrature(sc.model.quad, j.value("quadrature", json::object()));
    const json grid = j.value("grid", json::object());
    sc.grid = Grid{sc.model.d, get(grid, "n", 64), get(grid, "half_width", 6.0)};
    sc.field = j.value("field", json::object());
    const json b = j.value("bounds", json::object());
    sc.bounds.m0 = get(b, "m0", sc.bounds.m0);
    sc.bounds.M0 = get(b, "M0", sc.bounds.M0);
    sc.bounds.E0 = get(b, "E0", sc.bounds.E0);
    sc.bounds.H0 = get(b, "H0", sc.bounds.H0);
    sc.output = get<std::string>(j, "output", sc.output);
    sc.seed = get<std::uint64_t>(j, "seed", sc.seed);
    sc.sections = json::object();
    for (const char* k : {"kernel", "ellipticity", "changevar", "evolve", "kolmogorov", "holder", "hydro", "bench",
                          "report"})
        if (j.contains(k)) sc.sections[k] = j.at(k);
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(static_cast<bool>(is), "cannot read config " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_scenario(ss.str(), fs::path(path).parent_path().string().empty()
                                        ? "."
                                        : fs::path(path).parent_path().string());
}

DensityField build_field(const Scenario& sc) {
    const json& fj = sc.field;
    if (fj.is_object() && fj.contains("file")) {
        fs::path p = fj.at("file").get<std::string>();
        if (p.is_relative()) p = fs::path(sc.base_dir) / p;
        DensityField f = read_kfld(p.string());
        require(f.dim() == sc.model.d, "stored field dimension does not match the model");
        return f;
    }
    require(fj.is_object() && fj.contains("components"), "field needs 'components' or 'file'");
    return sample(analytic_from(fj.at("components"), sc.model.d), sc.grid);
}

std::vector<Diagnostic> validate_scenario(const Scenario& sc, const std::string& sub) {
    std::vector<Diagnostic> out;
    auto wants = [&](const char* name) { return sub.empty() || sub == name; };
    // checked one at a time so every violation is listed
    const CollisionModel& m = sc.model;
    collect(out, "collision", [&] { require(m.d == 2 || m.d == 3, "collision model needs d = 2 or 3"); });
    collect(out, "collision", [&] { require(m.gamma > -m.d && m.gamma <= 1.0, "gamma must lie in (-d, 1]"); });
    collect(out, "collision", [&] { require(m.s > 0.0 && m.s < 1.0, "s must lie in (0, 1)"); });
    if (out.empty()) collect(out, "collision", [&] { m.validate(); });
    collect(out, "fields", [&] { sc.grid.validate(); });
    collect(out, "fields", [&] {
        if (sc.field.is_object() && sc.field.contains("file")) {
            fs::path p = sc.field.at("file").get<std::string>();
            if (p.is_relative()) p = fs::path(sc.base_dir) / p;
            require(fs::exists(p), "field file " + p.string() + " does not exist");
        } else {
            require(sc.field.is_object() && sc.field.contains("components"), "field needs 'components' or 'file'");
            analytic_from(sc.field.at("components"), sc.model.d);
        }
    });
    collect(out, "hydro", [&] { sc.bounds.validate(); });
    const int d = sc.model.d;
    if (wants("kernel")) {
        collect(out, "collision", [&] {
            const json sec = sc.section("kernel");
            if (!sec.contains("probes")) return;
            for (const auto& p : sec.at("probes")) {
                require(p.is_array() && p.size() == 2, "kernel.probes entries must be [v, v']");
                const Vec v = to_vec(p[0], d, "kernel probe v"), vp = to_vec(p[1], d, "kernel probe v'");
                require((v - vp).norm() > 0.0, "kernel probe with v' = v");
            }
        });
    }
    if (wants("changevar")) {
        collect(out, "changevar", [&] {
            const double g2s = sc.model.gamma + 2.0 * sc.model.s;
            require(g2s >= 0.0 && g2s <= 2.0, "uniformity sweep needs gamma + 2s in [0, 2]");
            for (double r : get_list(sc.section("changevar"), "v0_norms", {1.0}))
                require(r > 0.0, "v0_norms must be positive");
        });
    }
    if (wants("evolve") && (sub == "evolve" || sc.sections.contains("evolve"))) {
        collect(out, "evolve", [&] {
            const json sec = sc.section("evolve");
            require(get(sec, "T_end", 0.0) > 0.0 || get(sec, "steps", 0) > 0, "evolve needs T_end > 0 or steps > 0");
            require(get(sec, "cfl", 0.25) > 0.0, "evolve.cfl must be positive");
            require(get(sec, "dt", 0.0) >= 0.0, "evolve.dt must be >= 0");
            require(get(sec, "snapshot_every", 10) >= 1, "evolve.snapshot_every must be >= 1");
        });
    }
    if (wants("kolmogorov") && (sub == "kolmogorov" || sc.sections.contains("kolmogorov"))) {
        collect(out, "evolve", [&] {
            const json sec = sc.section("kolmogorov");
            const double s = get(sec, "s", sc.model.s);
            require(s > 0.0 && s <= 1.0, "kolmogorov.s must lie in (0, 1]");
            kolmogorov_grid(sec, get(sec, "d", d));
            for (double t : get_list(sec, "times", {0.1})) require(t >= 0.0, "kolmogorov.times must be >= 0");
            const double a = get(sec, "alpha", 0.5);
            require(a > 0.0 && a <= 1.0, "kolmogorov.alpha must lie in (0, 1]");
        });
    }
    if (wants("holder") && (sub == "holder" || sc.sections.contains("holder"))) {
        collect(out, "kinetic_geometry", [&] {
            const json sec = sc.section("holder");
            for (double r : get_list(sec, "radii", {0.5})) require(r > 0.0, "holder.radii must be positive");
            const double a = get(sec, "alpha", 0.5);
            require(a > 0.0 && a <= 1.0, "holder.alpha must lie in (0, 1]");
        });
    }
    if (wants("ellipticity")) {
        collect(out, "ellipticity", [&] {
            const json sec = sc.section("ellipticity");
            get_points(sec, "velocities", d);
            for (double r : get_list(sec, "upper_radii", {1.0})) require(r > 0.0, "upper_radii must be positive");
            for (double r : get_list(sec, "cancel_radii", {0.5}))
                require(r > 0.0 && r < 1.0, "cancel_radii must lie in (0, 1)");
        });
    }
    return out;
}

CostEstimate estimate_cost(const Scenario& sc) {
    CostEstimate c;
    c.nodes = sc.grid.size();
    const json ks = sc.section("kernel");
    if (ks.contains("probes")) c.kernel_pairs = static_cast<double>(ks.at("probes").size());
    if (sc.sections.contains("evolve")) {
        const DensityField f0 = build_field(sc);
        const EvolveOptions o = evolve_options(sc, &f0);
        double dt = o.dt > 0.0 ? o.dt : homogeneous_stability_bound(f0, sc.model, o).dt;
        if (!std::isfinite(dt)) dt = o.T_end / 10.0;
        c.steps = o.T_end > 0.0 ? std::ceil(o.T_end / dt - 1e-9) : 0.0;
        c.q_evaluations = 2.0 * c.steps * static_cast<double>(c.nodes);
    }
    return c;
}

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& [k, v] : command_table()) n.push_back(k);
        return n;
    }();
    return names;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    auto usage = [&](std::ostream& os) {
        os << "usage: kinetik <subcommand> --config <path> [--out <dir>] [--seed <u64>] [--threads <n>] "
              "[--theta-literal-3]\nsubcommands:";
        for (const auto& n : subcommands()) os << ' ' << n;
        os << '\n';
    };
    if (args.empty() || args[0] == "-h" || args[0] == "--help") {
        usage(args.empty() ? err : out);
        return args.empty() ? Exit::unknown_subcommand : Exit::ok;
    }
    const auto& table = command_table();
    const auto it = table.find(args[0]);
    if (it == table.end()) {
        err << "kinetik: unknown subcommand '" << args[0] << "'\n";
        usage(err);
        return Exit::unknown_subcommand;
    }

    CLI::App app{"kinetik " + args[0]};
    std::string config, out_dir;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    bool theta3 = false;
    app.add_option("--config", config, "scenario JSON")->required();
    auto* out_opt = app.add_option("--out", out_dir, "artifact directory");
    auto* seed_opt = app.add_option("--seed", seed, "RNG seed");
    app.add_option("--threads", threads, "worker cap (0 = all cores)");
    app.add_flag("--theta-literal-3", theta3, "temperature with 1/3 instead of 1/d");
    std::vector<std::string> rest(args.begin() + 1, args.end());
    std::reverse(rest.begin(), rest.end());
    try {
        app.parse(rest);
    } catch (const CLI::ParseError& e) {
        err << "kinetik: " << e.what() << '\n';
        return Exit::validation;
    }
    set_thread_cap(threads);

    try {
        Scenario sc = load_scenario(config);
        if (*seed_opt) sc.seed = seed;
        sc.theta_literal_3 = theta3;
        Context cx{sc, fs::path(*out_opt ? out_dir : sc.output), out};
        if (args[0] != "validate" && args[0] != "report") {
            const auto diags = validate_scenario(sc, args[0]);
            if (!diags.empty()) {
                for (const auto& dg : diags) err << "[" << dg.module << "] " << dg.message << "\n";
                return Exit::validation;
            }
        }
        return it->second(cx);
    } catch (const ValidationError& e) {
        err << "kinetik: validation failure: " << e.what() << '\n';
        return Exit::validation;
    } catch (const NumericalError& e) {
        err << "kinetik: numerical failure: " << e.what() << '\n';
        return Exit::numerical;
    } catch (const std::exception& e) {
        err << "kinetik: " << e.what() << '\n';
        return Exit::failure;
    }
}

}  // namespace kinetik::cli
