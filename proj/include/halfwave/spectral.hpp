#pragma once

// Fourier-multiplier calculus on the periodic grid: D = |grad|, fractional
// powers, derivatives, resolvents, the L^2-scaling generator, inner products
// and the conserved-quantity diagnostics.

#include <algorithm>
#include <cmath>
#include <functional>

#include "halfwave/grid.hpp"

namespace hw {

// Symbol sampled at the grid wavenumbers. Odd real symbols (i xi) are stored
// complex; the unpaired Nyquist mode of odd symbols is zeroed so real fields
// stay real.
class Multiplier {
  public:
    Multiplier(GridPtr g, std::vector<cplx> symbol) : grid_(std::move(g)), sym_(std::move(symbol)) {
        if (static_cast<int>(sym_.size()) != grid_->size())
            throw GridMismatchError("symbol length does not match grid");
        for (const auto& s : sym_)
            if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
                throw GridError("multiplier symbol must be finite at every wavenumber");
    }

    template <typename F>
    static Multiplier from_function(const GridPtr& g, F&& m) {
        std::vector<cplx> s(g->size());
        const auto& xi = g->wavenumbers();
        for (int j = 0; j < g->size(); ++j) s[j] = cplx(m(xi[j]));
        return Multiplier(g, std::move(s));
    }

    static Multiplier halfwave(const GridPtr& g) {
        return from_function(g, [](double xi) { return std::abs(xi); });
    }
    static Multiplier fractional(const GridPtr& g, double power) {
        return from_function(g, [power](double xi) { return std::pow(std::abs(xi), power); });
    }
    static Multiplier identity(const GridPtr& g) {
        return from_function(g, [](double) { return 1.0; });
    }
    // i*xi with the unpaired Nyquist zeroed
    static Multiplier derivative(const GridPtr& g) {
        std::vector<cplx> s(g->size());
        const auto& xi = g->wavenumbers();
        for (int j = 0; j < g->size(); ++j) s[j] = cplx(0.0, xi[j]);
        s[g->size() / 2] = cplx(0.0, 0.0);
        return Multiplier(g, std::move(s));
    }
    // sqrt(2/pi) / (xi^2 + s)
    static Multiplier resolvent(const GridPtr& g, double s) {
        if (s <= 0.0) throw GridError("resolvent parameter must be positive");
        const double c = std::sqrt(2.0 / M_PI);
        return from_function(g, [s, c](double xi) { return c / (xi * xi + s); });
    }
    // e^{-i |xi| dt}
    static Multiplier halfwave_flow(const GridPtr& g, double dt) {
        std::vector<cplx> s(g->size());
        const auto& xi = g->wavenumbers();
        for (int j = 0; j < g->size(); ++j) {
            const double ph = -std::abs(xi[j]) * dt;
            s[j] = cplx(std::cos(ph), std::sin(ph));
        }
        return Multiplier(g, std::move(s));
    }

    const std::vector<cplx>& symbol() const { return sym_; }
    const SpectralGrid& grid() const { return *grid_; }

  private:
    GridPtr grid_;
    std::vector<cplx> sym_;
};

inline GridFunction apply_multiplier(const GridFunction& f, const Multiplier& m) {
    if (!f.grid().same_as(m.grid())) throw GridMismatchError("field and multiplier on different grids");
    std::vector<cplx> v = f.values();
    fft_forward(v);
    const auto& s = m.symbol();
    for (size_t j = 0; j < v.size(); ++j) v[j] *= s[j];
    fft_backward(v);
    return GridFunction(f.grid_ptr(), std::move(v), FieldKind::Complex);
}

inline GridFunction apply_symbol(const GridFunction& f, const std::function<double(double)>& m) {
    return apply_multiplier(f, Multiplier::from_function(f.grid_ptr(), m));
}

inline GridFunction halfwave_D(const GridFunction& f) {
    return apply_multiplier(f, Multiplier::halfwave(f.grid_ptr()));
}

inline GridFunction derivative(const GridFunction& f) {
    return apply_multiplier(f, Multiplier::derivative(f.grid_ptr()));
}

// 2/3-rule dealiasing: zero all modes with |xi| above two thirds of the
// grid maximum.
inline GridFunction dealias(const GridFunction& f) {
    std::vector<cplx> v = f.values();
    fft_forward(v);
    const auto& xi = f.grid().wavenumbers();
    const double cut = (2.0 / 3.0) * f.grid().xi_max();
    for (size_t j = 0; j < v.size(); ++j)
        if (std::abs(xi[j]) > cut) v[j] = cplx(0.0, 0.0);
    fft_backward(v);
    return GridFunction(f.grid_ptr(), std::move(v), f.kind());
}

// (f, g) = integral conj(f) g, discretized as dx * sum.
inline cplx inner(const GridFunction& f, const GridFunction& g) {
    f.check(g);
    cplx acc(0.0, 0.0);
    const int n = f.size();
    for (int j = 0; j < n; ++j) acc += std::conj(f[j]) * g[j];
    return acc * f.grid().dx();
}

inline double norm2(const GridFunction& f) { return std::sqrt(std::abs(inner(f, f).real())); }

inline double norm2sq(const GridFunction& f) { return inner(f, f).real(); }

inline double sup_norm(const GridFunction& f) {
    double m = 0.0;
    for (const auto& z : f.values()) m = std::max(m, std::abs(z));
    return m;
}

// || D^{1/2} f ||_2^2 evaluated in wavenumber space
inline double half_energy(const GridFunction& f) {
    std::vector<cplx> v = f.values();
    fft_forward(v);
    const auto& xi = f.grid().wavenumbers();
    double acc = 0.0;
    const double w = f.grid().dx() / f.size();
    for (size_t j = 0; j < v.size(); ++j) acc += std::abs(xi[j]) * std::norm(v[j]);
    return acc * w;
}

// || D^s f ||_2 for arbitrary s >= 0
inline double fractional_norm(const GridFunction& f, double s) {
    std::vector<cplx> v = f.values();
    fft_forward(v);
    const auto& xi = f.grid().wavenumbers();
    double acc = 0.0;
    const double w = f.grid().dx() / f.size();
    for (size_t j = 0; j < v.size(); ++j) acc += std::pow(std::abs(xi[j]), 2.0 * s) * std::norm(v[j]);
    return std::sqrt(acc * w);
}

inline double h_half_normsq(const GridFunction& f) { return norm2sq(f) + half_energy(f); }

// fraction of the squared L^2 mass beyond |x| > half_width/2
inline double tail_mass_fraction(const GridFunction& f) {
    const auto& x = f.grid().nodes();
    double tail = 0.0, tot = 0.0;
    for (int j = 0; j < f.size(); ++j) {
        const double a = std::norm(f[j]);
        tot += a;
        if (std::abs(x[j]) > 0.5 * f.grid().half_width()) tail += a;
    }
    return tot > 0.0 ? tail / tot : 0.0;
}

inline constexpr double kTailWarnFraction = 1e-8;

// Smoothly tapered x-weight used inside the scaling generator. The weight
// equals x for |x| <= x0 and goes to zero by |x| >= x1 through a quintic
// smoothstep, so spectral derivatives never see the sawtooth seam of the
// periodic coordinate. An optional calibration factor rescales the weight so
// that (Lambda Q, Q) = 0 holds exactly on the grid for a reference state Q.
struct ScalingWeight {
    double x0;
    double x1;
    double scale = 1.0;

    static ScalingWeight default_for(const SpectralGrid& g) {
        return ScalingWeight{0.5 * g.half_width(), 0.9 * g.half_width(), 1.0};
    }

    double operator()(double x) const {
        const double a = std::abs(x);
        if (a <= x0) return scale * x;
        if (a >= x1) return 0.0;
        const double t = (a - x0) / (x1 - x0);
        const double w = 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
        return scale * x * w;
    }
};

// Lambda f = f/2 + x f' with the tapered x-weight.
inline GridFunction scaling_generator(const GridFunction& f, const ScalingWeight& w) {
    GridFunction df = derivative(f);
    GridFunction out(f.grid_ptr(), f.kind());
    const auto& x = f.grid().nodes();
    for (int j = 0; j < f.size(); ++j) out[j] = 0.5 * f[j] + w(x[j]) * df[j];
    if (tail_mass_fraction(f) > kTailWarnFraction) out.set_tail_untrusted(true);
    return out;
}

inline GridFunction scaling_generator(const GridFunction& f) {
    return scaling_generator(f, ScalingWeight::default_for(f.grid()));
}

// Calibrate the weight scale so that (Lambda Q, Q) vanishes on the grid.
inline ScalingWeight calibrate_scaling_weight(ScalingWeight w, const GridFunction& Q) {
    GridFunction dQ = derivative(Q);
    const auto& x = Q.grid().nodes();
    double num = 0.0, den = 0.0;
    w.scale = 1.0;
    for (int j = 0; j < Q.size(); ++j) {
        num += std::norm(Q[j]);
        den += w(x[j]) * (dQ[j] * std::conj(Q[j])).real();
    }
    if (den != 0.0) w.scale = -0.5 * num / den;
    return w;
}

// momentum P(u) = Im( integral grad(u) conj(u) ) = Im (u, grad u)
inline double momentum(const GridFunction& u) {
    return inner(u, derivative(u)).imag();
}


inline GridFunction real_part(const GridFunction& f) {
    GridFunction out(f.grid_ptr(), FieldKind::Real);
    for (int j = 0; j < f.size(); ++j) out[j] = cplx(f[j].real(), 0.0);
    return out;
}

inline GridFunction imag_part(const GridFunction& f) {
    GridFunction out(f.grid_ptr(), FieldKind::Real);
    for (int j = 0; j < f.size(); ++j) out[j] = cplx(f[j].imag(), 0.0);
    return out;
}

// even projection about x = 0 (node j <-> node N-j; node 0 is the seam)
inline void symmetrize_even(GridFunction& f) {
    const int n = f.size();
    for (int j = 1; j < n / 2; ++j) {
        const cplx avg = 0.5 * (f[j] + f[n - j]);
        f[j] = avg;
        f[n - j] = avg;
    }
}

inline double even_defect(const GridFunction& f) {
    const int n = f.size();
    double m = 0.0;
    for (int j = 1; j < n; ++j) m = std::max(m, std::abs(f[j] - f[n - j]));
    return m;
}

// Evaluate the trigonometric interpolant of f at arbitrary points. Horner
// evaluation over modes; O(N * npts). Points outside [-L, L) wrap
// periodically. The unpaired Nyquist mode is evaluated as a cosine so real
// fields interpolate to real values.
inline std::vector<cplx> trig_eval(const GridFunction& f, const std::vector<double>& pts) {
    std::vector<cplx> fh = f.values();
    fft_forward(fh);
    const int n = f.size();
    const double invn = 1.0 / n;
    const double dxi = M_PI / f.grid().half_width();
    // coefficients ordered m = -N/2 .. N/2-1; c[k] corresponds to m = k - N/2
    std::vector<cplx> c(n);
    for (int m = -n / 2; m < n / 2; ++m) c[m + n / 2] = fh[(m + n) % n] * invn;
    std::vector<cplx> out(pts.size());
    for (size_t p = 0; p < pts.size(); ++p) {
        const double ph = dxi * pts[p];
        const cplx w(std::cos(ph), std::sin(ph));
        // Horner over k = 1 .. N-1 (modes m = 1-N/2 .. N/2-1)
        cplx acc = c[n - 1];
        for (int k = n - 2; k >= 1; --k) acc = acc * w + c[k];
        const double base = (1.0 - 0.5 * n) * ph;
        acc *= cplx(std::cos(base), std::sin(base));
        // Nyquist m = -N/2 as symmetric cosine
        acc += c[0] * std::cos(0.5 * n * ph);
        out[p] = acc;
    }
    return out;
}

// Restrict or transfer a field to another grid. When the target nodes are a
// subset of the source nodes the values are copied exactly; otherwise the
// trigonometric interpolant is evaluated.
inline GridFunction resample(const GridFunction& f, const GridPtr& target) {
    const auto& gs = f.grid();
    const auto& gt = *target;
    if (gs.same_as(gt)) return GridFunction(target, f.values(), f.kind());
    const double rx = gt.dx() / gs.dx();
    const long stride = std::lround(rx);
    const bool nested = std::abs(rx - stride) < 1e-12 && stride >= 1 &&
                        gt.half_width() <= gs.half_width();
    if (nested) {
        const double off = (gs.half_width() - gt.half_width()) / gs.dx();
        const long j0 = std::lround(off);
        if (std::abs(off - j0) < 1e-9) {
            std::vector<cplx> v(gt.size());
            for (int j = 0; j < gt.size(); ++j) v[j] = f[(j0 + stride * j) % gs.size()];
            return GridFunction(target, std::move(v), f.kind());
        }
    }
    std::vector<cplx> v = trig_eval(f, gt.nodes());
    return GridFunction(target, std::move(v), f.kind());
}

} // namespace hw
