#pragma once

// Strang-split time integration of i u_t = D u - k(x) |u|^2 u with adaptive
// stepping toward the concentration regime. The nonlinear substep is the
// exact flow of i u_t = -k|u|^2 u (pointwise modulus preserved), so mass is
// conserved to round-off; the linear substep is the exact multiplier flow.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "halfwave/grid.hpp"
#include "halfwave/inhomogeneity.hpp"
#include "halfwave/spectral.hpp"

namespace hw {

struct EvolutionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FieldState {
    double t = 0.0;
    GridFunction u;
    long step_count = 0;
    double dt_last = 0.0;
};

struct SeriesRecord {
    double t;
    double mass;
    double energy;
    double halfnorm; // ||D^{1/2} u||_2
    double lam_est;  // (||D^{1/2}Q|| / ||D^{1/2}u||)^2, the squared spec proxy
    double dt;
};

struct TimeSeries {
    std::vector<SeriesRecord> records;
};

struct StopCriteria {
    double t_end = -1e-9;          // integrate while t < t_end (< 0)
    double lambda_min = 0.0;       // stop when lam_est drops below
    double halfnorm_max = 1e12;    // stop when ||D^{1/2}u|| exceeds
    long max_steps = 50'000'000;
};

struct SamplingPolicy {
    long series_stride = 100;       // record every n-th step
    double snapshot_decrement = 0.93; // snapshot whenever lam_est falls by this factor
    bool snapshot_initial = true;
};

struct RunResult {
    TimeSeries series;
    FieldState final_state;
    std::string stop_reason;
};

// One Strang step: half linear, exact nonlinear phase rotation, half linear.
inline FieldState step_strang(const FieldState& s, double dt, const InhomogeneityProfile& k) {
    if (dt <= 0.0) throw EvolutionError("dt must be positive");
    const GridPtr g = s.u.grid_ptr();
    Multiplier half = Multiplier::halfwave_flow(g, 0.5 * dt);
    GridFunction u = apply_multiplier(s.u, half);
    const auto& x = g->nodes();
    for (int j = 0; j < u.size(); ++j) {
        const double ph = dt * k(x[j]) * std::norm(u[j]);
        u[j] *= cplx(std::cos(ph), std::sin(ph));
    }
    u = apply_multiplier(u, half);
    for (const auto& z : u.values())
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw EvolutionError("blowup resolution exceeded");
    return FieldState{s.t + dt, std::move(u), s.step_count + 1, dt};
}

// diagnostic-mode step with the nonlinearity disabled (pure multiplier flow)
inline FieldState step_linear(const FieldState& s, double dt) {
    GridFunction u = apply_multiplier(s.u, Multiplier::halfwave_flow(s.u.grid_ptr(), dt));
    return FieldState{s.t + dt, std::move(u), s.step_count + 1, dt};
}

struct RunConfig {
    double c_dt = 0.005;        // dt = c_dt * lam_est_ratio^2
    double halfnormQ = 0.0;     // ||D^{1/2} Q||_2 reference for the proxy; required
    StopCriteria stop;
    SamplingPolicy sampling;
    std::function<void(const FieldState&, double /*lam_est*/)> snapshot_sink;
};

// Adaptive run with the spectral representation carried between steps (the
// trailing and leading linear half-steps are fused). dt = c_dt * r^2 with
// r = ||D^{1/2}Q|| / ||D^{1/2}u||; the squared proxy r^2 tracks the scale.
inline RunResult run(const GridFunction& u0, double t0, const InhomogeneityProfile& k,
                     const RunConfig& cfg) {
    if (cfg.halfnormQ <= 0.0) throw EvolutionError("run config requires ||D^{1/2}Q||");
    if (t0 >= 0.0) throw EvolutionError("start time must be negative");
    k.validate_on(u0.grid());
    const GridPtr g = u0.grid_ptr();
    const int n = g->size();
    const auto& xi = g->wavenumbers();
    const auto& x = g->nodes();
    std::vector<double> kx(n), absxi(n);
    for (int j = 0; j < n; ++j) {
        kx[j] = k(x[j]);
        absxi[j] = std::abs(xi[j]);
    }

    std::vector<cplx> uh = u0.values();
    fft_forward(uh);
    const double wspec = g->dx() / n;

    auto halfnorm_sq = [&]() {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += absxi[j] * std::norm(uh[j]);
        return acc * wspec;
    };
    auto mass_of = [&]() {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += std::norm(uh[j]);
        return acc * wspec;
    };

    RunResult out;
    double t = t0;
    long step = 0;
    double pending_half = 0.0; // un-applied trailing linear half-step
    double next_snapshot_lam = -1.0;
    const double hQ2 = cfg.halfnormQ * cfg.halfnormQ;

    auto flush_field = [&]() {
        std::vector<cplx> v = uh;
        if (pending_half != 0.0)
            for (int j = 0; j < n; ++j) {
                const double ph = -absxi[j] * pending_half;
                v[j] *= cplx(std::cos(ph), std::sin(ph));
            }
        fft_backward(v);
        return GridFunction(g, std::move(v), FieldKind::Complex);
    };
    auto record = [&](double lam_est, double dt) {
        GridFunction u = flush_field();
        out.series.records.push_back(
            {t, mass_of(), energy(u, k), std::sqrt(halfnorm_sq()), lam_est, dt});
    };

    std::string reason;
    while (true) {
        // apply any pending trailing half-step lazily together with the next
        // leading half-step; diagnostics below only need |uh| which the
        // linear phase leaves unchanged
        const double h2 = halfnorm_sq();
        const double lam_est = hQ2 / h2;
        if (step % cfg.sampling.series_stride == 0) record(lam_est, cfg.c_dt * lam_est * lam_est);
        if (cfg.snapshot_sink &&
            (next_snapshot_lam < 0.0 ? cfg.sampling.snapshot_initial
                                     : lam_est <= next_snapshot_lam)) {
            FieldState snap{t, flush_field(), step, 0.0};
            cfg.snapshot_sink(snap, lam_est);
            next_snapshot_lam = lam_est * cfg.sampling.snapshot_decrement;
        }
        if (t >= cfg.stop.t_end) { reason = "t_end"; break; }
        if (lam_est <= cfg.stop.lambda_min) { reason = "lambda_min"; break; }
        if (std::sqrt(h2) >= cfg.stop.halfnorm_max) { reason = "halfnorm_max"; break; }
        if (step >= cfg.stop.max_steps) { reason = "max_steps"; break; }

        double dt = cfg.c_dt * lam_est * lam_est;
        if (t + dt > cfg.stop.t_end) dt = cfg.stop.t_end - t;
        const double lead = pending_half + 0.5 * dt;
        for (int j = 0; j < n; ++j) {
            const double ph = -absxi[j] * lead;
            uh[j] *= cplx(std::cos(ph), std::sin(ph));
        }
        fft_backward(uh);
        bool bad = false;
        for (int j = 0; j < n; ++j) {
            const double ph = dt * kx[j] * std::norm(uh[j]);
            uh[j] *= cplx(std::cos(ph), std::sin(ph));
            bad |= !std::isfinite(uh[j].real());
        }
        fft_forward(uh);
        if (bad) {
            pending_half = 0.5 * dt;
            out.final_state = FieldState{t + dt, flush_field(), step + 1, dt};
            out.stop_reason = "blowup resolution exceeded";
            return out;
        }
        pending_half = 0.5 * dt;
        t += dt;
        ++step;
    }
    out.final_state = FieldState{t, flush_field(), step, 0.0};
    out.stop_reason = reason;
    return out;
}

// critical mass threshold ||Q||_2 / sqrt(max k)
inline double threshold_mass(double norm_Q, double max_k) {
    return norm_Q / std::sqrt(max_k);
}

inline double threshold_mass(double norm_Q, const InhomogeneityProfile& k,
                             const SpectralGrid& g) {
    return threshold_mass(norm_Q, k.max_on(g));
}

} // namespace hw
