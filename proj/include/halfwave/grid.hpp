#pragma once

// Periodic spectral grid on [-L, L) and complex fields sampled on it.
// All Fourier-multiplier calculus in the library is built on top of the
// plan cache defined here (FFTW, complex-to-complex, unnormalized forward;
// inverse carries the 1/N).

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <fftw3.h>

namespace hw {

using cplx = std::complex<double>;

struct GridError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GridMismatchError : GridError {
    using GridError::GridError;
};

// Nodes x_j = -L + 2L j/N, wavenumbers xi_m = pi m / L with m in
// {-N/2, ..., N/2-1} stored in FFT layout (0, 1, ..., -1).
class SpectralGrid {
  public:
    SpectralGrid(double half_width, int size) : L_(half_width), N_(size) {
        if (N_ < 16 || N_ % 2 != 0) throw GridError("grid size must be even and >= 16");
        if (L_ <= 0.0) throw GridError("grid half-width must be positive");
        x_.resize(N_);
        xi_.resize(N_);
        const double dx = 2.0 * L_ / N_;
        for (int j = 0; j < N_; ++j) x_[j] = -L_ + dx * j;
        const double dxi = M_PI / L_;
        for (int m = 0; m < N_; ++m) {
            const int mm = (m <= N_ / 2 - 1) ? m : m - N_;
            xi_[m] = dxi * mm;
        }
    }

    double half_width() const { return L_; }
    int size() const { return N_; }
    double dx() const { return 2.0 * L_ / N_; }
    double xi_max() const { return M_PI / dx(); }
    const std::vector<double>& nodes() const { return x_; }
    const std::vector<double>& wavenumbers() const { return xi_; }

    bool same_as(const SpectralGrid& o) const { return N_ == o.N_ && L_ == o.L_; }

    // index of the node closest to x = 0 (exact node when N even)
    int origin_index() const { return N_ / 2; }

  private:
    double L_;
    int N_;
    std::vector<double> x_, xi_;
};

using GridPtr = std::shared_ptr<const SpectralGrid>;

inline GridPtr make_grid(double half_width, int size) {
    return std::make_shared<const SpectralGrid>(half_width, size);
}

namespace detail {

// One forward/backward plan pair per transform size. Plans are created with
// FFTW_ESTIMATE | FFTW_UNALIGNED so they can execute on any buffer.
class FftPlans {
  public:
    static FftPlans& instance() {
        static FftPlans p;
        return p;
    }

    void forward(std::vector<cplx>& inout) { execute(inout, true); }
    void backward(std::vector<cplx>& inout) {
        execute(inout, false);
        const double s = 1.0 / static_cast<double>(inout.size());
        for (auto& v : inout) v *= s;
    }

  private:
    struct Pair {
        fftw_plan fwd = nullptr;
        fftw_plan bwd = nullptr;
    };

    void execute(std::vector<cplx>& buf, bool fwd) {
        Pair p = plan_for(static_cast<int>(buf.size()));
        auto* ptr = reinterpret_cast<fftw_complex*>(buf.data());
        fftw_execute_dft(fwd ? p.fwd : p.bwd, ptr, ptr);
    }

    Pair plan_for(int n) {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = plans_.find(n);
        if (it != plans_.end()) return it->second;
        std::vector<cplx> tmp(n);
        auto* ptr = reinterpret_cast<fftw_complex*>(tmp.data());
        Pair p;
        p.fwd = fftw_plan_dft_1d(n, ptr, ptr, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        p.bwd = fftw_plan_dft_1d(n, ptr, ptr, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_[n] = p;
        return p;
    }

    std::mutex mu_;
    std::unordered_map<int, Pair> plans_;
};

} // namespace detail

enum class FieldKind { Complex, Real };

// Complex-valued field sampled on a SpectralGrid. Value semantics; the grid
// is shared immutable state.
class GridFunction {
  public:
    GridFunction() = default;
    explicit GridFunction(GridPtr g, FieldKind kind = FieldKind::Complex)
        : grid_(std::move(g)), kind_(kind), v_(grid_->size(), cplx(0.0, 0.0)) {}
    GridFunction(GridPtr g, std::vector<cplx> values, FieldKind kind = FieldKind::Complex)
        : grid_(std::move(g)), kind_(kind), v_(std::move(values)) {
        if (static_cast<int>(v_.size()) != grid_->size())
            throw GridMismatchError("value array length does not match grid size");
    }

    const SpectralGrid& grid() const { return *grid_; }
    GridPtr grid_ptr() const { return grid_; }
    FieldKind kind() const { return kind_; }
    void set_kind(FieldKind k) { kind_ = k; }

    int size() const { return static_cast<int>(v_.size()); }
    cplx& operator[](int j) { return v_[j]; }
    const cplx& operator[](int j) const { return v_[j]; }
    std::vector<cplx>& values() { return v_; }
    const std::vector<cplx>& values() const { return v_; }

    // flagged by operations whose validity assumes negligible tail mass
    bool tail_untrusted() const { return tail_untrusted_; }
    void set_tail_untrusted(bool f) { tail_untrusted_ = f; }

    double max_imag() const {
        double m = 0.0;
        for (const auto& z : v_) m = std::max(m, std::abs(z.imag()));
        return m;
    }

    GridFunction& operator+=(const GridFunction& o) {
        check(o);
        for (int j = 0; j < size(); ++j) v_[j] += o.v_[j];
        return *this;
    }
    GridFunction& operator-=(const GridFunction& o) {
        check(o);
        for (int j = 0; j < size(); ++j) v_[j] -= o.v_[j];
        return *this;
    }
    GridFunction& operator*=(cplx a) {
        for (auto& z : v_) z *= a;
        return *this;
    }

    friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
    friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
    friend GridFunction operator*(cplx a, GridFunction f) { return f *= a; }

    void check(const GridFunction& o) const {
        if (!grid_->same_as(o.grid())) throw GridMismatchError("grid mismatch between fields");
    }

  private:
    GridPtr grid_;
    FieldKind kind_ = FieldKind::Complex;
    std::vector<cplx> v_;
    bool tail_untrusted_ = false;
};

// Build a field by sampling a callable at the nodes.
template <typename F>
GridFunction sample(const GridPtr& g, F&& f, FieldKind kind = FieldKind::Real) {
    GridFunction out(g, kind);
    const auto& x = g->nodes();
    for (int j = 0; j < g->size(); ++j) out[j] = cplx(f(x[j]));
    return out;
}

template <typename F>
GridFunction sample_complex(const GridPtr& g, F&& f) {
    GridFunction out(g, FieldKind::Complex);
    const auto& x = g->nodes();
    for (int j = 0; j < g->size(); ++j) out[j] = f(x[j]);
    return out;
}

inline void fft_forward(std::vector<cplx>& v) { detail::FftPlans::instance().forward(v); }
inline void fft_backward(std::vector<cplx>& v) { detail::FftPlans::instance().backward(v); }

} // namespace hw
