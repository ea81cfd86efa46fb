#pragma once

// Dense representation of L+ = D + 1 - 3Q^2 and L- = D + 1 - Q^2 on a
// moderate grid: spectra, kernel certificates and constrained dense solves.
//
// Both operators commute with parity, so they are assembled in the even and
// odd reflection sectors. That halves the eigensolve dimension and makes the
// kernel bookkeeping explicit: grad Q (odd) spans ker L+, Q (even) spans
// ker L-. D is a symmetric circulant; its first column comes from one FFT.

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "halfwave/ground_state.hpp"
#include "halfwave/linear_ops.hpp"

namespace hw {

struct LinearizedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EigenPair {
    double value;
    GridFunction function;
};

class LinearizedPair {
  public:
    struct Certificates {
        double lm_Q = 0.0;      // ||L- Q|| / ||Q||
        double lp_gradQ = 0.0;  // ||L+ Q'|| / ||Q'||
        double lp_LamQ = 0.0;   // ||L+ Lambda Q + Q|| / ||Q||
    };

    LinearizedPair(const GroundState& gs, double kernel_tolerance = 1e-6)
        : grid_(gs.Q.grid_ptr()), Q_(gs.Q), apply_(grid_, gs.Q) {
        const int n = grid_->size();
        gradQ_ = derivative(Q_);
        gradQ_.set_kind(FieldKind::Real);

        certs_.lm_Q = norm2(apply_(Q_, Which::Minus)) / norm2(Q_);
        certs_.lp_gradQ = norm2(apply_(gradQ_, Which::Plus)) / norm2(gradQ_);
        GridFunction LamQ = scaling_generator(Q_);
        GridFunction r = apply_(LamQ, Which::Plus) + Q_;
        certs_.lp_LamQ = norm2(r) / norm2(Q_);
        if (certs_.lm_Q > kernel_tolerance || certs_.lp_gradQ > kernel_tolerance)
            throw LinearizedError("kernel certificate failure (grid too coarse)");

        // circulant first column of D
        std::vector<cplx> d(n);
        const auto& xi = grid_->wavenumbers();
        for (int m = 0; m < n; ++m) d[m] = cplx(std::abs(xi[m]), 0.0);
        fft_backward(d);
        dcol_.resize(n);
        for (int m = 0; m < n; ++m) dcol_[m] = d[m].real();

        assemble_sectors();
    }

    const SpectralGrid& grid() const { return *grid_; }
    const GridFunction& ground_state() const { return Q_; }
    const GridFunction& kernel_plus() const { return gradQ_; }  // grad Q
    const GridFunction& kernel_minus() const { return Q_; }     // Q
    const Certificates& certificates() const { return certs_; }
    const LinearizedApply& apply() const { return apply_; }

    GridFunction operator()(const GridFunction& f, Which w) const { return apply_(f, w); }

    // max |A - A^T| over the assembled sector matrices
    double symmetry_defect(Which w) const {
        const auto& ms = (w == Which::Plus) ? mats_plus_ : mats_minus_;
        double m = 0.0;
        for (const auto& A : {ms.even, ms.odd})
            m = std::max(m, (A - A.transpose()).cwiseAbs().maxCoeff());
        return m;
    }

    // Unique solution of L_w x = rhs orthogonal to the kernel vector; the rhs
    // is projected off the kernel first. Reports the projected component.
    GridFunction solve_on_complement(Which w, const GridFunction& rhs,
                                     double* kernel_component = nullptr) const {
        if (!rhs.grid().same_as(*grid_)) throw GridMismatchError("rhs on wrong grid");
        const GridFunction& k = (w == Which::Plus) ? gradQ_ : Q_;
        GridFunction b = rhs;
        const double kc = inner(k, b).real() / norm2sq(k);
        if (kernel_component) *kernel_component = kc;
        for (int j = 0; j < b.size(); ++j) b[j] -= kc * k[j];

        auto [be, bo] = split(b);
        ensure_factorizations(w);
        const auto& F = (w == Which::Plus) ? fact_plus_ : fact_minus_;
        Eigen::VectorXd xe, xo;
        if (w == Which::Plus) {
            // kernel (grad Q) lives in the odd sector: KKT there
            xe = F->even.solve(be);
            Eigen::VectorXd rhs_kkt(bo.size() + 1);
            rhs_kkt.head(bo.size()) = bo;
            rhs_kkt(bo.size()) = 0.0;
            Eigen::VectorXd sol = F->odd.solve(rhs_kkt);
            xo = sol.head(bo.size());
        } else {
            Eigen::VectorXd rhs_kkt(be.size() + 1);
            rhs_kkt.head(be.size()) = be;
            rhs_kkt(be.size()) = 0.0;
            Eigen::VectorXd sol = F->even.solve(rhs_kkt);
            xe = sol.head(be.size());
            xo = F->odd.solve(bo);
        }
        GridFunction x = merge(xe, xo);
        // verify against the matrix-free operator
        GridFunction chk = apply_(x, w);
        chk -= b;
        const double rel = norm2(chk) / std::max(norm2(b), 1e-300);
        if (rel > 1e-7)
            throw LinearizedError("dense constrained solve ill-conditioned, residual " +
                                  std::to_string(rel));
        x.set_kind(FieldKind::Real);
        return x;
    }

    // lowest `count` eigenpairs over both parity sectors, ascending
    std::vector<EigenPair> lowest_spectrum(Which w, int count) const {
        ensure_eigen(w);
        const auto& E = (w == Which::Plus) ? eig_plus_ : eig_minus_;
        std::vector<EigenPair> out;
        size_t ie = 0, io = 0;
        while (static_cast<int>(out.size()) < count &&
               (ie < E->even_values.size() || io < E->odd_values.size())) {
            const bool take_even =
                io >= E->odd_values.size() ||
                (ie < E->even_values.size() && E->even_values[ie] <= E->odd_values[io]);
            if (take_even) {
                out.push_back({E->even_values[ie],
                               merge(E->even_vectors.col(ie), Eigen::VectorXd::Zero(grid_->size() / 2 - 1))});
                ++ie;
            } else {
                out.push_back({E->odd_values[io],
                               merge(Eigen::VectorXd::Zero(grid_->size() / 2 + 1), E->odd_vectors.col(io))});
                ++io;
            }
        }
        return out;
    }

    int negative_count(Which w, double tol = 1e-8) const {
        ensure_eigen(w);
        const auto& E = (w == Which::Plus) ? eig_plus_ : eig_minus_;
        int c = 0;
        for (double v : E->even_values)
            if (v < -tol) ++c;
        for (double v : E->odd_values)
            if (v < -tol) ++c;
        return c;
    }

    // split a field into sector coordinate vectors (even dim N/2+1, odd N/2-1)
    std::pair<Eigen::VectorXd, Eigen::VectorXd> split(const GridFunction& f) const {
        const int n = grid_->size();
        const double s = 1.0 / std::sqrt(2.0);
        Eigen::VectorXd fe(n / 2 + 1), fo(n / 2 - 1);
        fe(0) = f[0].real();
        fe(n / 2) = f[n / 2].real();
        for (int j = 1; j < n / 2; ++j) {
            fe(j) = s * (f[j].real() + f[n - j].real());
            fo(j - 1) = s * (f[j].real() - f[n - j].real());
        }
        return {fe, fo};
    }

    GridFunction merge(const Eigen::VectorXd& fe, const Eigen::VectorXd& fo) const {
        const int n = grid_->size();
        const double s = 1.0 / std::sqrt(2.0);
        GridFunction f(grid_, FieldKind::Real);
        f[0] = cplx(fe(0), 0.0);
        f[n / 2] = cplx(fe(n / 2), 0.0);
        for (int j = 1; j < n / 2; ++j) {
            f[j] = cplx(s * (fe(j) + fo(j - 1)), 0.0);
            f[n - j] = cplx(s * (fe(j) - fo(j - 1)), 0.0);
        }
        return f;
    }

  private:
    struct SectorMats {
        Eigen::MatrixXd even, odd;
    };
    struct SectorFacts {
        Eigen::PartialPivLU<Eigen::MatrixXd> even, odd; // one side KKT-augmented
    };
    struct SectorEig {
        std::vector<double> even_values, odd_values;
        Eigen::MatrixXd even_vectors, odd_vectors;
    };

    void assemble_sectors() {
        const int n = grid_->size();
        const int ne = n / 2 + 1, no = n / 2 - 1;
        auto cval = [&](int m) { return dcol_[((m % n) + n) % n]; };
        std::vector<double> vplus(n), vminus(n);
        for (int j = 0; j < n; ++j) {
            const double q2 = Q_[j].real() * Q_[j].real();
            vplus[j] = 1.0 - 3.0 * q2;
            vminus[j] = 1.0 - q2;
        }
        const double r2 = std::sqrt(2.0);
        auto build = [&](const std::vector<double>& v, SectorMats& m) {
            m.even.resize(ne, ne);
            m.odd.resize(no, no);
            // even: indices p,q in {0 .. n/2}
            for (int p = 0; p <= n / 2; ++p)
                for (int q = 0; q <= n / 2; ++q) {
                    double a;
                    const bool pe = (p == 0 || p == n / 2), qe = (q == 0 || q == n / 2);
                    if (pe && qe) a = cval(p - q) + (p == q ? 0.0 : cval(p + q) - cval(p - q));
                    else if (pe || qe) a = r2 * cval(p - q); // cval(p-q)=cval(p+q) when one endpoint
                    else a = cval(p - q) + cval(p + q);
                    if (p == q) a += v[p];
                    m.even(p, q) = a;
                }
            for (int p = 1; p < n / 2; ++p)
                for (int q = 1; q < n / 2; ++q) {
                    double a = cval(p - q) - cval(p + q);
                    if (p == q) a += v[p];
                    m.odd(p - 1, q - 1) = a;
                }
        };
        build(vplus, mats_plus_);
        build(vminus, mats_minus_);
    }

    void ensure_factorizations(Which w) const {
        auto& F = (w == Which::Plus) ? fact_plus_ : fact_minus_;
        if (F) return;
        const auto& M = (w == Which::Plus) ? mats_plus_ : mats_minus_;
        const GridFunction& k = (w == Which::Plus) ? gradQ_ : Q_;
        auto [ke, ko] = split(k);
        F = std::make_unique<SectorFacts>();
        if (w == Which::Plus) {
            F->even = Eigen::PartialPivLU<Eigen::MatrixXd>(M.even);
            Eigen::VectorXd kv = ko / ko.norm();
            Eigen::MatrixXd Akkt(M.odd.rows() + 1, M.odd.cols() + 1);
            Akkt.topLeftCorner(M.odd.rows(), M.odd.cols()) = M.odd;
            Akkt.topRightCorner(M.odd.rows(), 1) = kv;
            Akkt.bottomLeftCorner(1, M.odd.cols()) = kv.transpose();
            Akkt(M.odd.rows(), M.odd.cols()) = 0.0;
            F->odd = Eigen::PartialPivLU<Eigen::MatrixXd>(Akkt);
        } else {
            Eigen::VectorXd kv = ke / ke.norm();
            Eigen::MatrixXd Akkt(M.even.rows() + 1, M.even.cols() + 1);
            Akkt.topLeftCorner(M.even.rows(), M.even.cols()) = M.even;
            Akkt.topRightCorner(M.even.rows(), 1) = kv;
            Akkt.bottomLeftCorner(1, M.even.cols()) = kv.transpose();
            Akkt(M.even.rows(), M.even.cols()) = 0.0;
            F->even = Eigen::PartialPivLU<Eigen::MatrixXd>(Akkt);
            F->odd = Eigen::PartialPivLU<Eigen::MatrixXd>(M.odd);
        }
    }

    void ensure_eigen(Which w) const {
        auto& E = (w == Which::Plus) ? eig_plus_ : eig_minus_;
        if (E) return;
        const auto& M = (w == Which::Plus) ? mats_plus_ : mats_minus_;
        E = std::make_unique<SectorEig>();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> se(M.even);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> so(M.odd);
        if (se.info() != Eigen::Success || so.info() != Eigen::Success)
            throw LinearizedError("dense eigensolver failed");
        E->even_values.assign(se.eigenvalues().data(), se.eigenvalues().data() + M.even.rows());
        E->odd_values.assign(so.eigenvalues().data(), so.eigenvalues().data() + M.odd.rows());
        E->even_vectors = se.eigenvectors();
        E->odd_vectors = so.eigenvectors();
    }

    GridPtr grid_;
    GridFunction Q_, gradQ_;
    LinearizedApply apply_;
    Certificates certs_;
    std::vector<double> dcol_;
    SectorMats mats_plus_, mats_minus_;
    mutable std::unique_ptr<SectorFacts> fact_plus_, fact_minus_;
    mutable std::unique_ptr<SectorEig> eig_plus_, eig_minus_;
};

} // namespace hw
