// Command-line laboratory for the focusing inhomogeneous mass-critical
// half-wave equation: ground-state certification, profile construction and
// scans, blowup simulation, modulation tracking, the virial check suite and
// the end-to-end scaling-law experiment.
//
// Exit codes: 0 full pass, 1 acceptance-style check failed, 2 infrastructure
// error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include <CLI11.hpp>

#include "halfwave/experiments.hpp"
#include "halfwave/linearized.hpp"
#include "halfwave/virial.hpp"

namespace fs = std::filesystem;
using namespace hw;

namespace {

struct GridOpt {
    double L = 1024.0;
    int N = 1 << 16;
};

void add_grid_flag(CLI::App* cmd, GridOpt& g) {
    cmd->add_option_function<std::string>(
           "--grid",
           [&g](const std::string& s) {
               if (std::sscanf(s.c_str(), "%lf,%d", &g.L, &g.N) != 2)
                   throw CLI::ValidationError("--grid expects L,N");
           },
           "grid as L,N (half-width, node count)")
        ->default_str("1024,65536");
}

InhomogeneityProfile parse_k(const std::string& spec) {
    if (spec == "homogeneous") return InhomogeneityProfile::homogeneous();
    if (spec == "default") return InhomogeneityProfile::default_profile();
    double k1 = 0.5;
    if (std::sscanf(spec.c_str(), "custom:%lf", &k1) == 1)
        return InhomogeneityProfile::default_profile(k1);
    throw CLI::ValidationError("--k expects default|homogeneous|custom:<k1>");
}

void ensure_dir(const std::string& d) {
    if (!d.empty()) fs::create_directories(d);
}

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config " + path);
    json j;
    is >> j;
    return j;
}

void apply_config(ExperimentConfig& cfg, const json& j) {
    if (j.contains("grid")) {
        cfg.profile_L = j["grid"].value("L", cfg.profile_L);
        cfg.profile_N = j["grid"].value("N", cfg.profile_N);
    }
    if (j.contains("sim_grid")) {
        cfg.sim_L = j["sim_grid"].value("L", cfg.sim_L);
        cfg.sim_N = j["sim_grid"].value("N", cfg.sim_N);
    }
    cfg.k_choice = j.value("k", cfg.k_choice);
    cfg.k1 = j.value("k1", cfg.k1);
    cfg.E0 = j.value("e0", cfg.E0);
    cfg.t1 = j.value("t1", cfg.t1);
    cfg.gamma0 = j.value("gamma0", cfg.gamma0);
    cfg.c_dt = j.value("c_dt", cfg.c_dt);
    cfg.shrink_factor = j.value("shrink_factor", cfg.shrink_factor);
    cfg.snapshot_decrement = j.value("snapshot_decrement", cfg.snapshot_decrement);
    cfg.series_stride = j.value("series_stride", cfg.series_stride);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.match_mass = j.value("match_mass", cfg.match_mass);
}

int cmd_ground_state(const GridOpt& g, const std::string& out) {
    ensure_dir(out);
    const GridPtr grid = make_grid(g.L, g.N);
    GroundState pet = solve_petviashvili(grid);
    GroundState flow = solve_gradient_flow(grid);
    GridFunction diff = pet.Q - flow.Q;
    const double agree = norm2(diff);
    const double lamq = inner(pet.lambda_Q, pet.Q).real();
    const double texp = tail_exponent(pet.Q);
    std::printf("ground state: residual_inf=%.3e mass=%.12f iters=%d\n", pet.residual_norm,
                pet.mass, pet.report.iterations);
    std::printf("oracle:       residual=%.3e iters=%d  |Q_pet - Q_flow|_2=%.3e\n",
                flow.report.final_residual, flow.report.iterations, agree);
    std::printf("(Lambda Q, Q)=%.3e  tail exponent=%.3f  Pohozaev defect=%.3e\n", lamq, texp,
                pet.pohozaev_defect());
    if (!out.empty()) {
        json side{{"residual_norm", pet.residual_norm},
                  {"mass", pet.mass},
                  {"iterations", pet.report.iterations},
                  {"contraction_factor", pet.report.contraction_factor},
                  {"oracle_agreement_l2", agree},
                  {"tail_exponent", texp}};
        save_field(pet.Q, out + "/ground_state.json", side);
        save_field_csv(pet.Q, out + "/ground_state.csv");
        std::ofstream(out + "/ground_state_report.json") << side.dump(2) << "\n";
    }
    return agree < 1e-6 && pet.residual_norm < 1e-9 ? 0 : 1;
}

int cmd_profile(const GridOpt& g, const std::string& kspec, bool coefficients, bool scan,
                const std::string& out) {
    ensure_dir(out);
    const GridPtr grid = make_grid(g.L, g.N);
    InhomogeneityProfile k = parse_k(kspec);
    GroundState gs = solve_petviashvili(grid);
    ProfileCoefficientSet c = build_profile_coefficients(gs, k);
    auto ids = coefficient_identities(c);
    std::printf("e1=%.8f  (2.13) defect=%.3e  (Q,rho1)=%.8f\n", c.e1, ids.relation_213,
                ids.q_rho1);
    for (const auto& [n, r] : c.solvability_residuals) std::printf("  solvability %s: %.3e\n", n.c_str(), r);
    if (coefficients && !out.empty()) {
        json manifest{{"e1", c.e1},
                      {"k", k.tag()},
                      {"k_second_deriv_at_0", c.k_second_deriv_at_0},
                      {"grid_L", g.L},
                      {"grid_N", g.N},
                      {"qt20sq_coefficient", 3.0},
                      {"solvability", c.solvability_residuals},
                      {"solve_residuals", c.solve_residuals}};
        std::ofstream(out + "/coefficients.json") << manifest.dump(2) << "\n";
        save_field(c.S10, out + "/S10.json");
        save_field(c.T20, out + "/T20.json");
        save_field(c.T02, out + "/T02.json");
        save_field(c.S30, out + "/S30.json");
        save_field(c.T40, out + "/T40.json");
        save_field(c.rho1, out + "/rho1.json");
        save_field(c.rho2_hat, out + "/rho2_hat.json");
        save_field(c.Q, out + "/Q.json");
    }
    if (scan) {
        const std::string path = out.empty() ? "profile_scan.csv" : out + "/profile_scan.csv";
        CsvWriter w(path, {"b", "lambda", "phi_l2", "phi_h1", "mass_deviation", "energy"});
        const double massQ = norm2sq(c.Q);
        for (int i = 0; i < 9; ++i) {
            const double b = 0.02 * std::pow(10.0, i / 8.0); // 0.02 .. 0.2
            ProfileParams p{b, b * b};
            ResidualNorms rn = residual_norms(profile_residual(c, p, k));
            w.row({b, p.lambda, rn.l2, rn.h1, profile_mass(c, p) - massQ,
                   profile_energy(c, p, k)});
        }
        std::printf("scan written to %s\n", path.c_str());
    }
    return 0;
}

int cmd_simulate(const ExperimentConfig& cfg) {
    ensure_dir(cfg.out_dir);
    const GridPtr gp = make_grid(cfg.profile_L, cfg.profile_N);
    InhomogeneityProfile k = cfg.make_k();
    GroundState gs = solve_petviashvili(gp);
    ProfileCoefficientSet c = build_profile_coefficients(gs, k);
    const GridPtr gsim = make_grid(cfg.sim_L, cfg.sim_N);
    InitialData id = build_initial_data(c, cfg.E0, cfg.t1, cfg.gamma0, gsim, cfg.match_mass);
    std::printf("A0=%.6f lambda1=%.6f b1=%.6f\n", id.A0, id.lambda1, id.b1);

    RunConfig rc;
    rc.c_dt = cfg.c_dt;
    rc.halfnormQ = std::sqrt(half_energy(c.Q));
    rc.stop.lambda_min = id.lambda1 / cfg.shrink_factor;
    rc.sampling.series_stride = cfg.series_stride;
    rc.sampling.snapshot_decrement = cfg.snapshot_decrement;
    int snap_id = 0;
    if (!cfg.out_dir.empty()) {
        fs::create_directories(cfg.out_dir + "/snapshots");
        rc.snapshot_sink = [&](const FieldState& s, double lam) {
            char name[64];
            std::snprintf(name, sizeof(name), "/snapshots/snap_%04d.json", snap_id++);
            save_field(s.u, cfg.out_dir + name, json{{"t", s.t}, {"lambda_proxy", lam}});
        };
    }
    RunResult rr = run(id.u, cfg.t1, k, rc);
    std::printf("stop: %s after %ld steps, t=%.6f\n", rr.stop_reason.c_str(),
                rr.final_state.step_count, rr.final_state.t);
    if (!cfg.out_dir.empty()) write_series_csv(rr.series, cfg.out_dir + "/series.csv");
    return 0;
}

int cmd_modulate(const std::string& snapdir, const GridOpt& g, const std::string& kspec,
                 const std::string& out) {
    ensure_dir(out);
    std::vector<Snapshot> snaps;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(snapdir))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        json extra;
        GridFunction u = load_field(f.string(), &extra);
        snaps.push_back({extra.value("t", 0.0), std::move(u)});
    }
    if (snaps.empty()) throw std::runtime_error("no snapshots found in " + snapdir);
    const GridPtr gp = make_grid(g.L, g.N);
    InhomogeneityProfile k = parse_k(kspec);
    GroundState gs = solve_petviashvili(gp);
    ProfileCoefficientSet c = build_profile_coefficients(gs, k);
    ProfileCoefficientSet cy = restrict_coefficients(c, make_grid(64.0, 1 << 11));
    ModTrack mt = track(snaps, cy, 0.1, 0.02, 0.0);
    const std::string path = out.empty() ? "modtrack.csv" : out + "/modtrack.csv";
    write_track_csv(mt, path);
    std::printf("tracked %zu snapshots -> %s\n", snaps.size(), path.c_str());
    if (!out.empty()) {
        std::ofstream(out + "/modtrack_manifest.json")
            << json{{"snapshots", snaps.size()}, {"e1", c.e1}}.dump(2) << "\n";
    }
    return 0;
}

int cmd_virial_check(const std::string& out, unsigned seed) {
    ensure_dir(out);
    json report;
    bool pass = true;

    // identity suite on the analysis grid
    {
        const GridPtr g = make_grid(1024.0, 1 << 16);
        GroundState gs = solve_petviashvili(g);
        ResolventQuadrature q = ResolventQuadrature::tan_squared(80);
        json suite = json::array();
        auto add = [&](const std::string& name, const GridFunction& f) {
            IdentityCheck c = halfnorm_identity(f, q);
            suite.push_back({{"function", name}, {"relerr", c.relerr}});
            pass &= c.relerr < 1e-6;
        };
        add("gauss", sample(g, [](double x) { return std::exp(-x * x); }));
        add("lorentz", sample(g, [](double x) { return 1.0 / (1.0 + x * x); }));
        add("wide_gauss", sample(g, [](double x) { return std::exp(-x * x / 25.0); }));
        add("osc_gauss", sample(g, [](double x) { return std::cos(3 * x) * std::exp(-x * x); }));
        add("Q", gs.Q);
        report["halfnorm_identity"] = suite;
    }
    // biharmonic scaling on the wide diagnostic grid
    {
        const GridPtr gw = make_grid(131072.0, 1 << 20);
        GridFunction u = sample(gw, [](double x) { return std::exp(-x * x); });
        const double nu2 = norm2sq(u);
        json rows = json::array();
        double prev = 0.0;
        for (double A : {200.0, 400.0, 800.0}) {
            CutoffPhi phi(A);
            ResolventQuadrature q = ResolventQuadrature::tan_squared(80, 1.0 / (A * A));
            const double ratio = biharmonic_bound(u, phi, q) * A / nu2;
            json row{{"A", A}, {"ratio", ratio}};
            if (prev > 0.0) {
                row["halving"] = ratio / prev;
                pass &= ratio / prev > 0.4 && ratio / prev < 0.6;
            }
            rows.push_back(row);
            prev = ratio;
        }
        report["biharmonic"] = rows;
    }
    // coercivity sample on the dense grid
    {
        const GridPtr g = make_grid(64.0, 1 << 12);
        GroundState gs = solve_petviashvili(g);
        InhomogeneityProfile k = InhomogeneityProfile::default_profile();
        ProfileCoefficientSet c = build_profile_coefficients(
            gs, k, [] { CoefficientConfig cc; cc.taper_relative = true; return cc; }());
        CutoffPhi phi(100.0);
        ResolventQuadrature q = ResolventQuadrature::tan_squared(80);
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> nd;
        double c0p = 1e300, c0m = 1e300;
        for (int trial = 0; trial < 200; ++trial) {
            GridFunction v(g, FieldKind::Real);
            const auto& x = g->nodes();
            const double w = 2.0 + 10.0 * std::abs(nd(rng));
            for (int j = 0; j < g->size(); ++j)
                v[j] = cplx(nd(rng) * std::exp(-x[j] * x[j] / (w * w)), 0.0);
            symmetrize_even(v);
            v = dealias(v);
            auto proj = [&](const GridFunction& dir) {
                const double a = inner(dir, v).real() / norm2sq(dir);
                for (int j = 0; j < g->size(); ++j) v[j] -= a * dir[j];
            };
            proj(c.Q);
            proj(c.S10);
            GridFunction eps1(g, FieldKind::Complex);
            for (int j = 0; j < g->size(); ++j) eps1[j] = v[j];
            auto [lp, lm_unused] = localized_forms(eps1, gs.Q, k, phi, q);
            c0p = std::min(c0p, lp / norm2sq(v));
            // minus form: same direction projected off rho1 instead
            GridFunction vm = v;
            const double a = inner(c.rho1, vm).real() / norm2sq(c.rho1);
            for (int j = 0; j < g->size(); ++j) vm[j] -= a * c.rho1[j];
            GridFunction eps2(g, FieldKind::Complex);
            for (int j = 0; j < g->size(); ++j) eps2[j] = cplx(0.0, vm[j].real());
            auto [lp2_unused, lm] = localized_forms(eps2, gs.Q, k, phi, q);
            c0m = std::min(c0m, lm / norm2sq(vm));
        }
        report["coercivity"] = {{"C0_plus", c0p}, {"C0_minus", c0m}, {"samples", 200}};
        pass &= c0p > 0.0 && c0m > 0.0;
    }
    report["pass"] = pass;
    const std::string path = out.empty() ? "virial_report.json" : out + "/virial_report.json";
    std::ofstream(path) << report.dump(2) << "\n";
    std::printf("virial report -> %s (pass=%d)\n", path.c_str(), pass ? 1 : 0);
    return pass ? 0 : 1;
}

int cmd_experiment(ExperimentConfig cfg) {
    ensure_dir(cfg.out_dir);
    const GridPtr gp = make_grid(cfg.profile_L, cfg.profile_N);
    InhomogeneityProfile k = cfg.make_k();
    GroundState gs = solve_petviashvili(gp);
    ProfileCoefficientSet c = build_profile_coefficients(gs, k);
    ExperimentArtifacts art = run_blowup_experiment(cfg, c);
    const FitReport& r = art.report;
    std::printf("stop=%s  window lambda in [%.3e, %.3e] with %d points\n",
                r.stop_reason.c_str(), r.window_lambda_lo, r.window_lambda_hi, r.window_count);
    std::printf("lambda law: exponent=%.4f (raw %.4f)  lambda*·4A0^2=%.4f  t0=%.5f\n",
                r.lambda_exponent, r.lambda_exponent_raw, r.lambda_star_4A0sq, r.t0);
    std::printf("rate variation=%.2f%%  b/sqrt(lambda) dev=%.2f%%  gamma slope/4A0^2=%.4f\n",
                100 * r.rate_variation, 100 * r.b_ratio_deviation, r.gamma_slope_over_4A0sq);
    std::printf("bound C median=%.3f spread=%.2f  mass drift=%.2e\n", r.bound_C_median,
                r.bound_C_spread, r.mass_drift);
    if (!cfg.out_dir.empty()) {
        json rep = to_json(r);
        rep["config"] = to_json(cfg);
        rep["code_version"] = "halfwave-1.0";
        std::ofstream(cfg.out_dir + "/fit_report.json") << rep.dump(2) << "\n";
        write_series_csv(art.series, cfg.out_dir + "/series.csv");
        write_track_csv(art.tracked, cfg.out_dir + "/modtrack.csv");
    }
    const bool ok = r.complete && r.lambda_exponent > 1.9 && r.lambda_exponent < 2.1 &&
                    r.lambda_star_4A0sq > 0.8 && r.lambda_star_4A0sq < 1.2;
    return ok ? 0 : 1;
}

int cmd_suite(unsigned seed, const std::string& out) {
    ensure_dir(out);
    json rows = json::array();
    bool pass = true;
    auto check = [&](const std::string& name, bool ok, double value) {
        rows.push_back({{"check", name}, {"pass", ok}, {"value", value}});
        pass &= ok;
        std::printf("  %-44s %s  (%.3e)\n", name.c_str(), ok ? "pass" : "FAIL", value);
    };
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    const GridPtr g = make_grid(64.0, 1 << 11);
    auto randf = [&]() {
        GridFunction f(g, FieldKind::Real);
        const auto& x = g->nodes();
        for (int j = 0; j < g->size(); ++j) f[j] = cplx(nd(rng) * std::exp(-x[j] * x[j] / 16.0), 0.0);
        return dealias(f);
    };
    {
        GridFunction f = randf();
        std::vector<cplx> v = f.values();
        fft_forward(v);
        double spec = 0.0;
        for (const auto& z : v) spec += std::norm(z);
        spec *= g->dx() / g->size();
        const double node = norm2sq(f);
        check("parseval", std::abs(spec - node) / node < 1e-12, std::abs(spec - node) / node);
    }
    {
        GridFunction f = randf();
        GridFunction a = apply_multiplier(apply_multiplier(f, Multiplier::fractional(g, 0.5)),
                                          Multiplier::fractional(g, 0.5));
        GridFunction b = halfwave_D(f);
        a -= b;
        const double dev = norm2(a) / norm2(b);
        check("half_power_composition", dev < 1e-12, dev);
    }
    {
        GridFunction f = randf();
        const double lhs = half_energy(f);
        const double rhs = inner(f, halfwave_D(f)).real();
        check("halfnorm_vs_inner", std::abs(lhs - rhs) / rhs < 1e-10, std::abs(lhs - rhs) / rhs);
    }
    {
        GridFunction f = randf(), h = randf();
        const cplx a = inner(scaling_generator(f), h);
        const cplx b = inner(f, scaling_generator(h));
        const double dev = std::abs(a + b) / std::abs(a);
        check("scaling_generator_skew", dev < 1e-8, dev);
    }
    {
        ResolventQuadrature q = ResolventQuadrature::tan_squared(80);
        GridFunction f = sample(g, [](double x) { return std::exp(-x * x); });
        IdentityCheck c = halfnorm_identity(f, q);
        check("halfnorm_identity_gauss", c.relerr < 1e-6, c.relerr);
        bool wpos = true;
        for (double w : q.weights) wpos &= w > 0.0;
        check("quadrature_weights_positive", wpos, 1.0);
    }
    {
        bool ok = true;
        try {
            CutoffPhi phi(25.0);
            ok = phi.ddphi(1.5) >= 0.0;
        } catch (...) {
            ok = false;
        }
        check("cutoff_bridge_convex", ok, 1.0);
    }
    const std::string path = out.empty() ? "suite_report.json" : out + "/suite_report.json";
    std::ofstream(path) << json{{"pass", pass}, {"seed", seed}, {"checks", rows}}.dump(2) << "\n";
    return pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"half-wave blowup laboratory"};
    app.require_subcommand(1);

    GridOpt grid;
    std::string out, kspec = "default", config_path, snapdir;
    unsigned seed = 20240817;
    bool coefficients = false, scan = false;
    ExperimentConfig ecfg;

    auto* gsc = app.add_subcommand("ground-state", "solve and certify the ground state");
    add_grid_flag(gsc, grid);
    gsc->add_option("--out", out, "output directory");

    auto* pc = app.add_subcommand("profile", "build profile coefficients / residual scan");
    add_grid_flag(pc, grid);
    pc->add_option("--k", kspec, "inhomogeneity: default|homogeneous|custom:<k1>");
    pc->add_flag("--coefficients", coefficients, "persist the coefficient bundle");
    pc->add_flag("--scan", scan, "emit the (b, lambda) residual scan CSV");
    pc->add_option("--out", out, "output directory");

    auto* sc = app.add_subcommand("simulate", "run the time integrator");
    sc->add_option("--config", config_path, "JSON config file");
    sc->add_option("--k", ecfg.k_choice, "default|homogeneous");
    sc->add_option("--e0", ecfg.E0, "target energy");
    sc->add_option("--t1", ecfg.t1, "start time (<0)");
    sc->add_option("--out", ecfg.out_dir, "output directory");

    auto* mc = app.add_subcommand("modulate", "decompose a snapshot directory");
    mc->add_option("--in", snapdir, "snapshot directory")->required();
    add_grid_flag(mc, grid);
    mc->add_option("--k", kspec, "inhomogeneity used for the coefficients");
    mc->add_option("--out", out, "output directory");

    auto* vc = app.add_subcommand("virial-check", "identity suite, coercivity, biharmonic study");
    vc->add_option("--out", out, "output directory");
    vc->add_option("--seed", seed, "random seed");

    auto* ec = app.add_subcommand("experiment", "end-to-end blowup experiment with law fits");
    ec->add_option("--config", config_path, "JSON config file");
    ec->add_option("--k", ecfg.k_choice, "default|homogeneous");
    ec->add_option("--e0", ecfg.E0, "target energy");
    ec->add_option("--t1", ecfg.t1, "start time (<0)");
    ec->add_option("--seed", ecfg.seed, "random seed");
    ec->add_option("--out", ecfg.out_dir, "output directory");

    auto* uc = app.add_subcommand("suite", "machine-readable invariant suite");
    uc->add_option("--seed", seed, "random seed");
    uc->add_option("--out", out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gsc->parsed()) return cmd_ground_state(grid, out);
        if (pc->parsed()) return cmd_profile(grid, kspec, coefficients, scan, out);
        if (sc->parsed()) {
            apply_config(ecfg, load_config(config_path));
            return cmd_simulate(ecfg);
        }
        if (mc->parsed()) return cmd_modulate(snapdir, grid, kspec, out);
        if (vc->parsed()) return cmd_virial_check(out, seed);
        if (ec->parsed()) {
            apply_config(ecfg, load_config(config_path));
            return cmd_experiment(ecfg);
        }
        if (uc->parsed()) return cmd_suite(seed, out);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
