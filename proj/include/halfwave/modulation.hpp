#pragma once

// Modulation decomposition u = lambda^{-1/2} (Q_P + eps)(x/lambda) e^{i gamma}
// with the three orthogonality conditions
//   (eps2, Lambda Q1P) - (eps1, Lambda Q2P) = 0
//   (eps2, d_b Q1P)    - (eps1, d_b Q2P)   = 0
//   (eps2, rho1)       - (eps1, rho2)      = 0,   rho2 = b rho2_hat,
// solved by a damped quasi-Newton iteration in (b, lambda, gamma) with the
// analytic parameter derivatives of the profile and of the rescaling.

#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "halfwave/coefficients.hpp"
#include "halfwave/profile.hpp"

namespace hw {

struct ModulationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModulationState {
    double b = 0.0, lambda = 0.0, gamma = 0.0;
    GridFunction eps; // on the y-grid
    std::array<double, 3> ortho_residuals{};
    double eps_l2 = 0.0;
    double eps_h_half = 0.0;
    double eps_d_half_delta = 0.0;
    int newton_iterations = 0;
};

struct DecomposeConfig {
    int max_iterations = 60;
    double tolerance = 1e-11;     // on |G| / ||Q||^2
    double delta = 0.1;           // exponent offset for the D^{1/2+delta} norm
    double min_resolved_lambda = 0.0; // default: 2 dx_u / dx_y-free guard below
};

// Restrict a coefficient set to a (coarser, nested) analysis grid.
inline ProfileCoefficientSet restrict_coefficients(const ProfileCoefficientSet& c,
                                                   const GridPtr& target) {
    ProfileCoefficientSet out;
    out.S10 = resample(c.S10, target);
    out.T20 = resample(c.T20, target);
    out.T02 = resample(c.T02, target);
    out.S30 = resample(c.S30, target);
    out.T40 = resample(c.T40, target);
    out.rho1 = resample(c.rho1, target);
    out.rho2_hat = resample(c.rho2_hat, target);
    out.Q = resample(c.Q, target);
    out.e1 = c.e1;
    out.k_second_deriv_at_0 = c.k_second_deriv_at_0;
    out.weight = c.weight;
    out.solvability_residuals = c.solvability_residuals;
    return out;
}

// rho pair at a given b; the rho2 right-hand side orthogonality is certified
// during construction and re-exposed here.
inline std::pair<GridFunction, GridFunction> compute_rho(const ProfileCoefficientSet& c,
                                                         double b) {
    GridFunction rho2 = c.rho2_hat;
    rho2 *= cplx(b, 0.0);
    return {c.rho1, std::move(rho2)};
}

// Deformed linearized operators on the y-grid.
//   M+(eps) = D eps1 + eps1 - k(ly)(|QP|^2 eps1 + 2 Q1P^2 eps1 + 2 Q1P Q2P eps2)
//   M-(eps) = D eps2 + eps2 - k(ly)(|QP|^2 eps2 + 2 Q2P^2 eps2 + 2 Q1P Q2P eps1)
inline GridFunction apply_M(const GridFunction& eps, const BlowupProfile& pr,
                            const InhomogeneityProfile& k, double lambda, Which which) {
    const GridPtr g = eps.grid_ptr();
    if (!g->same_as(pr.qp.grid())) throw GridMismatchError("eps and profile on different grids");
    GridFunction comp = (which == Which::Plus) ? real_part(eps) : imag_part(eps);
    GridFunction other = (which == Which::Plus) ? imag_part(eps) : real_part(eps);
    GridFunction out = halfwave_D(comp);
    const auto& x = g->nodes();
    for (int j = 0; j < g->size(); ++j) {
        const double q1 = pr.qp[j].real(), q2 = pr.qp[j].imag();
        const double qq = q1 * q1 + q2 * q2;
        const double self = (which == Which::Plus) ? 2.0 * q1 * q1 : 2.0 * q2 * q2;
        out[j] += comp[j] - k(lambda * x[j]) *
                                ((qq + self) * comp[j].real() + 2.0 * q1 * q2 * other[j].real());
    }
    out.set_kind(FieldKind::Real);
    return out;
}

namespace detail {

struct ConditionVectors {
    GridFunction w1_re, w1_im; // G1 = (eps2, w1_im) - (eps1, w1_re) with w1 = Lambda QP
    GridFunction w2_re, w2_im; // d_b QP
    GridFunction w3_re, w3_im; // rho
};

inline std::array<double, 3> conditions(const GridFunction& eps, const ConditionVectors& w) {
    auto pair_re = [](const GridFunction& a, const GridFunction& e, bool imagpart) {
        // (eps_component, a) with real a
        double acc = 0.0;
        for (int j = 0; j < e.size(); ++j)
            acc += a[j].real() * (imagpart ? e[j].imag() : e[j].real());
        return acc * e.grid().dx();
    };
    return {pair_re(w.w1_re, eps, true) - pair_re(w.w1_im, eps, false),
            pair_re(w.w2_re, eps, true) - pair_re(w.w2_im, eps, false),
            pair_re(w.w3_re, eps, true) - pair_re(w.w3_im, eps, false)};
}

} // namespace detail

// Decompose a physical-space snapshot against the profile family. The field
// u lives on its own (simulation) grid; eps and the conditions live on the
// coefficient grid of `c` (the y-grid).
inline ModulationState decompose(const GridFunction& u, const ProfileCoefficientSet& c,
                                 double b0, double lambda0, double gamma0,
                                 DecomposeConfig cfg = {}) {
    const GridPtr gy = c.grid_ptr();
    const double massQ = norm2sq(c.Q);
    const double min_lambda =
        cfg.min_resolved_lambda > 0.0 ? cfg.min_resolved_lambda : 2.0 * u.grid().dx() / gy->dx();

    double b = b0, lam = lambda0, gam = gamma0;
    const auto& y = gy->nodes();
    std::vector<double> pts(gy->size());

    auto rescale_to_y = [&](double lambda) {
        for (int j = 0; j < gy->size(); ++j) pts[j] = lambda * y[j];
        std::vector<cplx> vals = trig_eval(u, pts);
        GridFunction v(gy, std::move(vals), FieldKind::Complex);
        const double s = std::sqrt(lambda);
        for (auto& z : v.values()) z *= s;
        return v;
    };

    ModulationState st;
    std::array<double, 3> G{};
    GridFunction v(gy), eps(gy);
    BlowupProfile pr;
    detail::ConditionVectors w{GridFunction(gy), GridFunction(gy), GridFunction(gy),
                               GridFunction(gy), GridFunction(gy), GridFunction(gy)};

    auto build = [&](double bb, double ll, double gg, GridFunction& vv, GridFunction& ee,
                     BlowupProfile& pp) {
        if (ll < min_lambda) throw ModulationError("scale unresolved on the sampling grid");
        vv = rescale_to_y(ll);
        const cplx ph(std::cos(-gg), std::sin(-gg));
        for (auto& z : vv.values()) z *= ph;
        pp = assemble_profile(c, ProfileParams{bb, ll}, 1e9);
        ee = vv - pp.qp;
    };

    int it = 0;
    for (; it < cfg.max_iterations; ++it) {
        build(b, lam, gam, v, eps, pr);
        GridFunction LamQP = scaling_generator(pr.qp, ScalingWeight::default_for(*gy));
        w.w1_re = real_part(LamQP);
        w.w1_im = imag_part(LamQP);
        w.w2_re = real_part(pr.d_b);
        w.w2_im = imag_part(pr.d_b);
        w.w3_re = c.rho1;
        w.w3_im = c.rho2_hat;
        w.w3_im *= cplx(b, 0.0);
        G = detail::conditions(eps, w);
        const double gn = std::sqrt(G[0] * G[0] + G[1] * G[1] + G[2] * G[2]);
        if (gn / massQ < cfg.tolerance) break;

        // quasi-Newton Jacobian from the eps-variations
        GridFunction d_eps_b = pr.d_b;
        d_eps_b *= cplx(-1.0, 0.0);
        GridFunction d_eps_gam = v;
        d_eps_gam *= cplx(0.0, -1.0);
        GridFunction Lv = scaling_generator(v, ScalingWeight::default_for(*gy));
        GridFunction d_eps_lam = Lv;
        d_eps_lam *= cplx(1.0 / lam, 0.0);
        d_eps_lam -= pr.d_lambda;

        Eigen::Matrix3d J;
        const GridFunction* deps[3] = {&d_eps_b, &d_eps_lam, &d_eps_gam};
        for (int col = 0; col < 3; ++col) {
            auto Gc = detail::conditions(*deps[col], w);
            for (int row = 0; row < 3; ++row) J(row, col) = Gc[row];
        }
        Eigen::Vector3d rhs(-G[0], -G[1], -G[2]);
        Eigen::Vector3d step = J.fullPivLu().solve(rhs);
        if (!step.allFinite()) throw ModulationError("singular modulation Jacobian");

        // damped update: halve on residual increase, up to 8 times
        double scale = 1.0;
        bool accepted = false;
        for (int h = 0; h < 8; ++h, scale *= 0.5) {
            const double bt = b + scale * step(0);
            const double lt = lam + scale * step(1);
            const double gt = gam + scale * step(2);
            if (lt <= 0.0) continue;
            GridFunction vt(gy), et(gy);
            BlowupProfile pt;
            try {
                build(bt, lt, gt, vt, et, pt);
            } catch (const ProfileError&) {
                continue;
            }
            auto Gt = detail::conditions(et, w);
            const double gnt = std::sqrt(Gt[0] * Gt[0] + Gt[1] * Gt[1] + Gt[2] * Gt[2]);
            if (gnt < gn || h == 7) {
                b = bt;
                lam = lt;
                gam = gt;
                accepted = true;
                break;
            }
        }
        if (!accepted) throw ModulationError("modulation Newton stalled");
    }
    build(b, lam, gam, v, eps, pr);
    {
        GridFunction LamQP = scaling_generator(pr.qp, ScalingWeight::default_for(*gy));
        w.w1_re = real_part(LamQP);
        w.w1_im = imag_part(LamQP);
        w.w2_re = real_part(pr.d_b);
        w.w2_im = imag_part(pr.d_b);
        w.w3_re = c.rho1;
        w.w3_im = c.rho2_hat;
        w.w3_im *= cplx(b, 0.0);
        G = detail::conditions(eps, w);
    }
    const double gn = std::sqrt(G[0] * G[0] + G[1] * G[1] + G[2] * G[2]);
    if (gn / massQ >= cfg.tolerance * 10.0)
        throw ModulationError("modulation Newton did not converge, |G|=" + std::to_string(gn));

    st.b = b;
    st.lambda = lam;
    st.gamma = std::remainder(gam, 2.0 * M_PI);
    st.eps = eps;
    st.ortho_residuals = G;
    st.eps_l2 = norm2(eps);
    st.eps_h_half = std::sqrt(h_half_normsq(eps));
    st.eps_d_half_delta = fractional_norm(eps, 0.5 + cfg.delta);
    st.newton_iterations = it;
    return st;
}

struct ModTrackRecord {
    double t = 0.0, s = 0.0;
    double b = 0.0, lambda = 0.0, gamma = 0.0; // gamma unwrapped along the series
    double mod_b = 0.0;     // b_s + b^2/2
    double mod_gamma = 0.0; // gamma_s - 1
    double mod_lambda = 0.0; // lambda_s/lambda + b
    double eps_l2 = 0.0, eps_h_half = 0.0, eps_d_half_delta = 0.0;
    bool ok = false;
};

struct ModTrack {
    std::vector<ModTrackRecord> records;
};

struct Snapshot {
    double t;
    GridFunction u;
};

// Decompose a series of snapshots with warm starts, build the rescaled-time
// axis s by trapezoid integration of dt/lambda, and estimate the modulation
// residual vector by centered differences in s.
inline ModTrack track(const std::vector<Snapshot>& snaps, const ProfileCoefficientSet& c,
                      double b_guess, double lambda_guess, double gamma_guess,
                      DecomposeConfig cfg = {}) {
    ModTrack out;
    out.records.resize(snaps.size());
    double b = b_guess, lam = lambda_guess, gam = gamma_guess;
    double prev_gamma = gamma_guess;
    for (size_t i = 0; i < snaps.size(); ++i) {
        auto& rec = out.records[i];
        rec.t = snaps[i].t;
        try {
            ModulationState st = decompose(snaps[i].u, c, b, lam, gam, cfg);
            // unwrap the phase against the previous record
            double g = st.gamma;
            if (i > 0) g = prev_gamma + std::remainder(g - prev_gamma, 2.0 * M_PI);
            rec.b = st.b;
            rec.lambda = st.lambda;
            rec.gamma = g;
            rec.eps_l2 = st.eps_l2;
            rec.eps_h_half = st.eps_h_half;
            rec.eps_d_half_delta = st.eps_d_half_delta;
            rec.ok = true;
            b = st.b;
            lam = st.lambda;
            gam = g;
            prev_gamma = g;
        } catch (const std::exception&) {
            rec.ok = false; // mark and continue
        }
    }
    // s-axis by trapezoid of dt/lambda over the decomposed records
    double s = 0.0;
    for (size_t i = 0; i < out.records.size(); ++i) {
        if (i > 0 && out.records[i].ok && out.records[i - 1].ok) {
            const double dt = out.records[i].t - out.records[i - 1].t;
            s += 0.5 * dt * (1.0 / out.records[i].lambda + 1.0 / out.records[i - 1].lambda);
        }
        out.records[i].s = s;
    }
    // centered differences in s
    for (size_t i = 0; i + 2 < out.records.size(); ++i) {
        auto &a = out.records[i], &m = out.records[i + 1], &z = out.records[i + 2];
        if (!(a.ok && m.ok && z.ok)) continue;
        const double ds = z.s - a.s;
        if (ds <= 0.0) continue;
        const double b_s = (z.b - a.b) / ds;
        const double g_s = (z.gamma - a.gamma) / ds;
        const double l_s = (z.lambda - a.lambda) / ds;
        m.mod_b = b_s + 0.5 * m.b * m.b;
        m.mod_gamma = g_s - 1.0;
        m.mod_lambda = l_s / m.lambda + m.b;
    }
    return out;
}

} // namespace hw
