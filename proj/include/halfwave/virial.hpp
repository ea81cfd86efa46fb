#pragma once

// Virial toolbox: the convex cutoff phi with a certified quintic bridge, the
// resolvent smoothing u_s = sqrt(2/pi)(-Delta+s)^{-1} u, Gauss-Legendre
// quadrature for integrals ds sqrt(s) (...) over (0,inf) via s = s0 tan^2
// theta, the half-derivative identity, the localized energy J_A, the
// localized quadratic forms and the biharmonic remainder bound.

#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "halfwave/grid.hpp"
#include "halfwave/inhomogeneity.hpp"
#include "halfwave/spectral.hpp"

namespace hw {

struct VirialError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
}

} // namespace detail

// Nodes and weights for integral_0^inf f(s) ds with the substitution
// s = s0 tan^2(theta), Gauss-Legendre in theta on (0, pi/2). The scale s0
// centers the node cloud; s0 = 1 suits unit-scale integrands, the biharmonic
// study uses s0 = 1/A^2.
struct ResolventQuadrature {
    std::vector<double> nodes;   // s_q > 0
    std::vector<double> weights; // w_q > 0, include the jacobian
    double scale = 1.0;
    std::string descriptor;

    static ResolventQuadrature tan_squared(int count = 80, double s0 = 1.0) {
        ResolventQuadrature q;
        q.scale = s0;
        q.descriptor = "s=" + std::to_string(s0) + "*tan^2(theta), GL" + std::to_string(count);
        std::vector<double> gx, gw;
        detail::gauss_legendre(count, gx, gw);
        q.nodes.resize(count);
        q.weights.resize(count);
        for (int i = 0; i < count; ++i) {
            const double theta = 0.25 * M_PI * (gx[i] + 1.0);
            const double wt = 0.25 * M_PI * gw[i];
            const double tn = std::tan(theta), cs = std::cos(theta);
            q.nodes[i] = s0 * tn * tn;
            q.weights[i] = wt * s0 * 2.0 * tn / (cs * cs);
        }
        return q;
    }

    int count() const { return static_cast<int>(nodes.size()); }
};

// u_s = sqrt(2/pi) (-Delta + s)^{-1} u
inline GridFunction resolvent_smooth(const GridFunction& u, double s) {
    if (s <= 0.0) throw VirialError("resolvent parameter must be positive");
    return apply_multiplier(u, Multiplier::resolvent(u.grid_ptr(), s));
}

struct IdentityCheck {
    double lhs = 0.0, rhs = 0.0, relerr = 0.0;
};

// integral_0^inf sqrt(s) ||grad u_s||^2 ds = ||D^{1/2} u||^2, evaluated with
// one FFT and the per-mode closed resolvent symbol.
inline IdentityCheck halfnorm_identity(const GridFunction& u, const ResolventQuadrature& q) {
    std::vector<cplx> uh = u.values();
    fft_forward(uh);
    const auto& xi = u.grid().wavenumbers();
    const double wspec = u.grid().dx() / u.size();
    double lhs = 0.0, rhs = 0.0;
    for (int j = 0; j < u.size(); ++j) {
        const double x2 = xi[j] * xi[j];
        const double p = std::norm(uh[j]) * wspec;
        double acc = 0.0;
        for (int k = 0; k < q.count(); ++k) {
            const double d = x2 + q.nodes[k];
            acc += q.weights[k] * std::sqrt(q.nodes[k]) / (d * d);
        }
        lhs += (2.0 / M_PI) * x2 * acc * p;
        rhs += std::abs(xi[j]) * p;
    }
    IdentityCheck out{lhs, rhs, 0.0};
    out.relerr = (rhs != 0.0) ? std::abs(lhs - rhs) / rhs : std::abs(lhs);
    return out;
}

// general-alpha variant: integral sqrt(s) ||(-Delta)^{alpha/2} u_s||^2 ds
// against ||D^{alpha - 1/2} u||^2
inline IdentityCheck halfnorm_identity_general(const GridFunction& u, double alpha,
                                               const ResolventQuadrature& q) {
    std::vector<cplx> uh = u.values();
    fft_forward(uh);
    const auto& xi = u.grid().wavenumbers();
    const double wspec = u.grid().dx() / u.size();
    double lhs = 0.0, rhs = 0.0;
    for (int j = 0; j < u.size(); ++j) {
        const double ax = std::abs(xi[j]);
        const double x2 = ax * ax;
        const double p = std::norm(uh[j]) * wspec;
        double acc = 0.0;
        for (int k = 0; k < q.count(); ++k) {
            const double d = x2 + q.nodes[k];
            acc += q.weights[k] * std::sqrt(q.nodes[k]) / (d * d);
        }
        lhs += (2.0 / M_PI) * std::pow(ax, 2.0 * alpha) * acc * p;
        rhs += std::pow(ax, 2.0 * alpha - 1.0) * p;
    }
    IdentityCheck out{lhs, rhs, 0.0};
    out.relerr = (rhs != 0.0) ? std::abs(lhs - rhs) / rhs : std::abs(lhs);
    return out;
}

// Smooth even convex cutoff: phi'(y) = y on [0,1], a quintic bridge on
// (1,2) matching value, slope and curvature of both pieces, and 3 - e^{-y}
// for y >= 2. phi'' >= 0 is certified by dense sampling on the bridge.
class CutoffPhi {
  public:
    explicit CutoffPhi(double A) : A_(A) {
        if (A <= 0.0) throw VirialError("cutoff scale A must be positive");
        Eigen::MatrixXd M(6, 6);
        Eigen::VectorXd rhs(6);
        auto row = [&](int r, double y, int d) {
            for (int k = 0; k < 6; ++k) {
                double c = 1.0;
                for (int j = 0; j < d; ++j) c *= (k - j);
                M(r, k) = (k >= d) ? c * std::pow(y, k - d) : 0.0;
            }
        };
        const double e2 = std::exp(-2.0);
        row(0, 1.0, 0); rhs(0) = 1.0;        // phi'(1)
        row(1, 1.0, 1); rhs(1) = 1.0;        // phi''(1)
        row(2, 1.0, 2); rhs(2) = 0.0;        // phi'''(1)
        row(3, 2.0, 0); rhs(3) = 3.0 - e2;   // phi'(2)
        row(4, 2.0, 1); rhs(4) = e2;         // phi''(2)
        row(5, 2.0, 2); rhs(5) = -e2;        // phi'''(2)
        Eigen::VectorXd c = M.fullPivLu().solve(rhs);
        for (int k = 0; k < 6; ++k) p_[k] = c(k);
        // integral of the bridge for the phi values
        bridge_int1_ = poly_int(1.0);
        // certify convexity of the bridge
        double mn = 1e300;
        for (int i = 0; i <= 1000; ++i) {
            const double y = 1.0 + i / 1000.0;
            mn = std::min(mn, poly_d(y, 1));
        }
        if (mn < 0.0) throw VirialError("bridge violates phi'' >= 0");
        phi1_ = 0.5;                      // phi(1)
        phi2_ = phi1_ + poly_int(2.0) - bridge_int1_; // phi(2)
    }

    double A() const { return A_; }

    double phi(double x) const {
        const double y = std::abs(x);
        if (y <= 1.0) return 0.5 * y * y;
        if (y < 2.0) return phi1_ + poly_int(y) - bridge_int1_;
        return phi2_ + 3.0 * (y - 2.0) + std::exp(-y) - std::exp(-2.0);
    }
    double dphi(double x) const { // phi'
        const double y = std::abs(x);
        const double s = x < 0.0 ? -1.0 : 1.0;
        if (y <= 1.0) return s * y;
        if (y < 2.0) return s * poly_d(y, 0);
        return s * (3.0 - std::exp(-y));
    }
    double ddphi(double x) const { // phi'' = 1D laplacian of phi
        const double y = std::abs(x);
        if (y <= 1.0) return 1.0;
        if (y < 2.0) return poly_d(y, 1);
        return std::exp(-y);
    }
    double d4phi(double x) const { // phi''''
        const double y = std::abs(x);
        if (y <= 1.0) return 0.0;
        if (y < 2.0) return poly_d(y, 3);
        return std::exp(-y);
    }

  private:
    // d-th derivative of the bridge polynomial for phi'
    double poly_d(double y, int d) const {
        double out = 0.0;
        for (int k = d; k <= 5; ++k) {
            double c = 1.0;
            for (int j = 0; j < d; ++j) c *= (k - j);
            out += c * p_[k] * std::pow(y, k - d);
        }
        return out;
    }

    double poly_int(double y) const { // antiderivative of the bridge at y
        double out = 0.0;
        for (int k = 0; k <= 5; ++k) out += p_[k] * std::pow(y, k + 1) / (k + 1);
        return out;
    }

    double A_;
    std::array<double, 6> p_{};
    double phi1_ = 0.0, phi2_ = 0.0, bridge_int1_ = 0.0;
};

struct JaBreakdown {
    double kinetic = 0.0;    // 1/2 ||D^{1/2} eps~||^2
    double mass_term = 0.0;  // 1/2 ||eps~||^2 / lambda
    double potential = 0.0;  // -int k [F(u)-F(Q~)-F'(Q~).eps~]
    double virial_cross = 0.0;
    double total() const { return kinetic + mass_term + potential + virial_cross; }
};

// J_A with u = Q~ + eps~ on the physical grid.
inline JaBreakdown evaluate_JA(const GridFunction& eps, const GridFunction& Qt, double b,
                               double lambda, const InhomogeneityProfile& k,
                               const CutoffPhi& phi) {
    eps.check(Qt);
    if (lambda <= 0.0) throw VirialError("lambda must be positive");
    JaBreakdown out;
    out.kinetic = 0.5 * half_energy(eps);
    out.mass_term = 0.5 * norm2sq(eps) / lambda;
    const auto& x = eps.grid().nodes();
    const double dx = eps.grid().dx();
    double pot = 0.0;
    for (int j = 0; j < eps.size(); ++j) {
        const cplx u = Qt[j] + eps[j];
        const double Fu = 0.25 * std::norm(u) * std::norm(u);
        const double FQ = 0.25 * std::norm(Qt[j]) * std::norm(Qt[j]);
        const cplx fQ = std::norm(Qt[j]) * Qt[j];
        const double Fp = (fQ * std::conj(eps[j])).real();
        pot += k(x[j]) * (Fu - FQ - Fp);
    }
    out.potential = -pot * dx;
    if (b != 0.0) {
        GridFunction geps = derivative(eps);
        const double Al = phi.A() * lambda;
        double acc = 0.0;
        for (int j = 0; j < eps.size(); ++j)
            acc += phi.A() * phi.dphi(x[j] / Al) * (geps[j] * std::conj(eps[j])).imag();
        out.virial_cross = 0.5 * b * acc * dx;
    }
    return out;
}

// localized quadratic forms
//   Lp_A(v) = int sqrt(s) int phi''(x/A) |grad v_s|^2 + ||v||^2 - 3 int k Q^2 v^2
//   Lm_A(v) = (same s-part) + ||v||^2 - int k Q^2 v^2
// applied to the real and imaginary parts of eps respectively.
inline std::pair<double, double> localized_forms(const GridFunction& eps, const GridFunction& Q,
                                                 const InhomogeneityProfile& k,
                                                 const CutoffPhi& phi,
                                                 const ResolventQuadrature& q) {
    eps.check(Q);
    const GridPtr g = eps.grid_ptr();
    const auto& x = g->nodes();
    const auto& xi = g->wavenumbers();
    const double dx = g->dx();
    GridFunction e1 = real_part(eps), e2 = imag_part(eps);

    auto s_part = [&](const GridFunction& v) {
        std::vector<cplx> vh = v.values();
        fft_forward(vh);
        double acc = 0.0;
        std::vector<cplx> work(v.size());
        const double c = std::sqrt(2.0 / M_PI);
        for (int kq = 0; kq < q.count(); ++kq) {
            const double s = q.nodes[kq];
            for (int j = 0; j < v.size(); ++j)
                work[j] = vh[j] * cplx(0.0, xi[j]) * (c / (xi[j] * xi[j] + s));
            fft_backward(work);
            double xint = 0.0;
            for (int j = 0; j < v.size(); ++j)
                xint += phi.ddphi(x[j] / phi.A()) * std::norm(work[j]);
            acc += q.weights[kq] * std::sqrt(s) * xint * dx;
        }
        return acc;
    };

    double pot1 = 0.0, pot2 = 0.0;
    for (int j = 0; j < eps.size(); ++j) {
        const double q2 = Q[j].real() * Q[j].real() * k(x[j]);
        pot1 += q2 * e1[j].real() * e1[j].real();
        pot2 += q2 * e2[j].real() * e2[j].real();
    }
    const double lp = s_part(e1) + norm2sq(e1) - 3.0 * pot1 * dx;
    const double lm = s_part(e2) + norm2sq(e2) - pot2 * dx;
    return {lp, lm};
}

// | int sqrt(s) int (1/A^2) phi''''(x/A) |u_s|^2 dx ds |, the biharmonic
// remainder. The constant mode is removed first: its contribution vanishes
// identically on the line (integral of the biharmonic of the cutoff is
// zero) while on the torus it diverges as s -> 0.
inline double biharmonic_bound(const GridFunction& u, const CutoffPhi& phi,
                               const ResolventQuadrature& q) {
    const GridPtr g = u.grid_ptr();
    const auto& x = g->nodes();
    const auto& xi = g->wavenumbers();
    std::vector<cplx> uh = u.values();
    fft_forward(uh);
    uh[0] = cplx(0.0, 0.0);
    const double A = phi.A();
    std::vector<double> wgt(g->size());
    for (int j = 0; j < g->size(); ++j) wgt[j] = phi.d4phi(x[j] / A) / (A * A);
    const double c = std::sqrt(2.0 / M_PI);
    double acc = 0.0;
    std::vector<cplx> work(g->size());
    for (int kq = 0; kq < q.count(); ++kq) {
        const double s = q.nodes[kq];
        for (int j = 0; j < g->size(); ++j) work[j] = uh[j] * (c / (xi[j] * xi[j] + s));
        fft_backward(work);
        double xint = 0.0;
        for (int j = 0; j < g->size(); ++j) xint += wgt[j] * std::norm(work[j]);
        acc += q.weights[kq] * std::sqrt(s) * xint * g->dx();
    }
    return std::abs(acc);
}

} // namespace hw
