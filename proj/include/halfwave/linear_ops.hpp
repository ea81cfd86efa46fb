#pragma once

// Matrix-free application of the linearized operators
// L+ = D + 1 - 3Q^2, L- = D + 1 - Q^2 and an iterative constrained solver.
//
// Solver: two-pass Lanczos-MINRES on the symmetrized operator
// S A S with S = (D+1)^{-1/2}, restarted on the true residual. The
// preconditioned spectrum is tightly clustered, so a handful of iterations
// per cycle suffices; pass one builds the tridiagonal projection, a small
// dense least-squares gives the combination, pass two regenerates the basis.
// Memory stays at a few fields regardless of grid size.

#include <cmath>
#include <functional>

#include <Eigen/Dense>

#include "halfwave/grid.hpp"
#include "halfwave/spectral.hpp"

namespace hw {

enum class Which { Plus, Minus };

// real even potential applied nodal-diagonally
class LinearizedApply {
  public:
    LinearizedApply(GridPtr g, const GridFunction& Q) : grid_(std::move(g)), qsq_(grid_->size()) {
        for (int j = 0; j < grid_->size(); ++j) qsq_[j] = Q[j].real() * Q[j].real();
    }

    GridFunction operator()(const GridFunction& f, Which w) const {
        GridFunction out = halfwave_D(f);
        const double c = (w == Which::Plus) ? 3.0 : 1.0;
        for (int j = 0; j < out.size(); ++j) out[j] += f[j] - c * qsq_[j] * f[j];
        return out;
    }

    std::function<GridFunction(const GridFunction&)> op(Which w) const {
        return [this, w](const GridFunction& f) { return (*this)(f, w); };
    }

    const GridPtr& grid() const { return grid_; }

  private:
    GridPtr grid_;
    std::vector<double> qsq_;
};

struct MinresResult {
    GridFunction x;
    double relative_residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct MinresConfig {
    double tolerance = 1e-12; // true-residual target, relative to ||rhs||
    int cycle_length = 24;
    int max_cycles = 10;
};

inline MinresResult minres_solve(const GridPtr& g,
                                 const std::function<GridFunction(const GridFunction&)>& A,
                                 const GridFunction& rhs,
                                 const GridFunction* kernel = nullptr,
                                 MinresConfig cfg = {}) {
    const int n = g->size();
    Multiplier S = Multiplier::from_function(g, [](double xi) { return 1.0 / std::sqrt(std::abs(xi) + 1.0); });

    double kn2 = kernel ? norm2sq(*kernel) : 0.0;
    auto drop_kernel = [&](GridFunction& v) {
        if (!kernel || kn2 == 0.0) return;
        const double c = inner(*kernel, v).real() / kn2;
        for (int j = 0; j < n; ++j) v[j] -= c * (*kernel)[j];
    };

    GridFunction b = rhs;
    drop_kernel(b);
    const double nb = norm2(b);
    MinresResult out{GridFunction(g, FieldKind::Real), 0.0, 0, false};
    if (nb == 0.0) {
        out.converged = true;
        return out;
    }

    auto At = [&](const GridFunction& y) {
        GridFunction t = apply_multiplier(y, S);
        t = A(t);
        return apply_multiplier(t, S);
    };

    GridFunction bt = apply_multiplier(b, S);
    GridFunction y(g, FieldKind::Real); // symmetrized solution accumulator

    const int m = cfg.cycle_length;
    Eigen::MatrixXd T(m + 1, m);
    for (int cycle = 0; cycle < cfg.max_cycles; ++cycle) {
        GridFunction r = bt - At(y);
        const double beta0 = norm2(r);
        if (beta0 / norm2(bt) < cfg.tolerance) break;

        // pass one: Lanczos scalars
        T.setZero();
        std::vector<double> alphas(m), betas(m + 1);
        {
            GridFunction v = r, v_prev(g, FieldKind::Real);
            for (auto& z : v.values()) z /= beta0;
            double beta_prev = 0.0;
            for (int k = 0; k < m; ++k) {
                GridFunction w = At(v);
                if (k > 0)
                    for (int j = 0; j < n; ++j) w[j] -= beta_prev * v_prev[j];
                const double alpha = inner(w, v).real();
                for (int j = 0; j < n; ++j) w[j] -= alpha * v[j];
                const double beta = norm2(w);
                alphas[k] = alpha;
                betas[k + 1] = beta;
                T(k, k) = alpha;
                if (k + 1 <= m - 1) T(k + 1, k) = beta;
                if (k + 1 < m) T(k, k + 1) = beta;
                v_prev = v;
                if (beta == 0.0) break;
                v = w;
                for (auto& z : v.values()) z /= beta;
                beta_prev = beta;
                out.iterations++;
            }
            T(m, m - 1) = betas[m];
        }
        // least squares min || beta0 e1 - T_bar c ||
        Eigen::MatrixXd Tb(m + 1, m);
        Tb.setZero();
        for (int k = 0; k < m; ++k) {
            Tb(k, k) = alphas[k];
            if (k + 1 <= m) Tb(k + 1, k) = betas[k + 1];
            if (k + 1 < m) Tb(k, k + 1) = betas[k + 1];
        }
        Eigen::VectorXd e1 = Eigen::VectorXd::Zero(m + 1);
        e1(0) = beta0;
        Eigen::VectorXd coef = Tb.colPivHouseholderQr().solve(e1);

        // pass two: regenerate the basis, accumulate the update
        {
            GridFunction v = r, v_prev(g, FieldKind::Real);
            for (auto& z : v.values()) z /= beta0;
            double beta_prev = 0.0;
            for (int k = 0; k < m; ++k) {
                for (int j = 0; j < n; ++j) y[j] += coef(k) * v[j];
                if (betas[k + 1] == 0.0) break;
                GridFunction w = At(v);
                if (k > 0)
                    for (int j = 0; j < n; ++j) w[j] -= beta_prev * v_prev[j];
                for (int j = 0; j < n; ++j) w[j] -= alphas[k] * v[j];
                v_prev = v;
                v = w;
                for (auto& z : v.values()) z /= betas[k + 1];
                beta_prev = betas[k + 1];
            }
        }
    }

    GridFunction x = apply_multiplier(y, S);
    drop_kernel(x);
    for (int j = 0; j < n; ++j) x[j] = cplx(x[j].real(), 0.0);
    GridFunction check = A(x);
    drop_kernel(check);
    check -= b;
    out.relative_residual = norm2(check) / nb;
    out.converged = out.relative_residual < std::max(cfg.tolerance * 100.0, 1e-9);
    out.x = std::move(x);
    return out;
}

} // namespace hw
