#pragma once

// Approximate blowup profile
//   Q_P = Q + b^2 T20 + lambda^2 T02 + b^4 T40 + i (b S10 + b^3 S30),
// its parameter derivatives, the equation residual Phi_P, and the rescaled
// profile energy.

#include <cmath>

#include "halfwave/coefficients.hpp"

namespace hw {

struct ProfileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ProfileParams {
    double b = 0.0;
    double lambda = 0.0;

    double box_norm() const { return std::abs(b) + std::abs(lambda); }
};

inline constexpr double kProfileBoxLimit = 0.3; // smallness box |b| + lambda

struct BlowupProfile {
    GridFunction qp;       // complex profile
    GridFunction d_b;      // exact polynomial derivative in b
    GridFunction d_lambda; // exact polynomial derivative in lambda
    ProfileParams params;
};

inline BlowupProfile assemble_profile(const ProfileCoefficientSet& c, ProfileParams p,
                                      double box_limit = kProfileBoxLimit) {
    if (p.box_norm() > box_limit)
        throw ProfileError("profile parameters outside the smallness box");
    const GridPtr g = c.grid_ptr();
    const double b = p.b, l = p.lambda;
    BlowupProfile out{GridFunction(g), GridFunction(g), GridFunction(g), p};
    for (int j = 0; j < g->size(); ++j) {
        const double q = c.Q[j].real(), s1 = c.S10[j].real(), t2 = c.T20[j].real();
        const double t02 = c.T02[j].real(), s3 = c.S30[j].real(), t4 = c.T40[j].real();
        out.qp[j] = cplx(q + b * b * t2 + l * l * t02 + b * b * b * b * t4,
                         b * s1 + b * b * b * s3);
        out.d_b[j] = cplx(2.0 * b * t2 + 4.0 * b * b * b * t4, s1 + 3.0 * b * b * s3);
        out.d_lambda[j] = cplx(2.0 * l * t02, 0.0);
    }
    return out;
}

// Phi_P = -[ -i b^2/2 d_b Q_P - i b lambda d_lambda Q_P - D Q_P - Q_P
//            + i b Lambda Q_P + k(lambda y) |Q_P|^2 Q_P ]
// evaluated with the same scaling weight the coefficient construction used.
inline GridFunction profile_residual(const ProfileCoefficientSet& c, ProfileParams p,
                                     const InhomogeneityProfile& k) {
    BlowupProfile pr = assemble_profile(c, p);
    const GridPtr g = c.grid_ptr();
    GridFunction Dqp = halfwave_D(pr.qp);
    GridFunction Lqp = scaling_generator(pr.qp, c.weight);
    GridFunction out(g, FieldKind::Complex);
    const auto& x = g->nodes();
    const cplx I(0.0, 1.0);
    const double b = p.b, l = p.lambda;
    for (int j = 0; j < g->size(); ++j) {
        const cplx q = pr.qp[j];
        const cplx eq = -I * (0.5 * b * b) * pr.d_b[j] - I * (b * l) * pr.d_lambda[j] - Dqp[j] - q +
                        I * b * Lqp[j] + k(l * x[j]) * std::norm(q) * q;
        out[j] = -eq;
    }
    return out;
}

struct ResidualNorms {
    double l2 = 0.0;
    double h1 = 0.0;
    double weighted_grad_sup = 0.0; // sup <x>^2 |grad Phi|
};

inline ResidualNorms residual_norms(const GridFunction& phi) {
    ResidualNorms out;
    out.l2 = norm2(phi);
    GridFunction gphi = derivative(phi);
    out.h1 = std::sqrt(out.l2 * out.l2 + norm2sq(gphi));
    const auto& x = phi.grid().nodes();
    for (int j = 0; j < phi.size(); ++j)
        out.weighted_grad_sup =
            std::max(out.weighted_grad_sup, (1.0 + x[j] * x[j]) * std::abs(gphi[j]));
    return out;
}

// E(Q_P) in rescaled variables: k evaluated at lambda*y.
inline double profile_energy(const ProfileCoefficientSet& c, ProfileParams p,
                             const InhomogeneityProfile& k) {
    BlowupProfile pr = assemble_profile(c, p);
    return energy(pr.qp, k, p.lambda);
}

inline double profile_mass(const ProfileCoefficientSet& c, ProfileParams p) {
    return norm2sq(assemble_profile(c, p).qp);
}

} // namespace hw
