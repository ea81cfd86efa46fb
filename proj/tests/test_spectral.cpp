#include <catch2/catch_amalgamated.hpp>

#include "halfwave/spectral.hpp"
#include "halfwave/virial.hpp"
#include "halfwave/inhomogeneity.hpp"
#include "test_common.hpp"

using namespace hw;
using Catch::Approx;

namespace {

// Independent oracle for D = |grad|: the singular-integral definition
//   (D f)(x0) = (1/pi) pv int (f(x0) - f(y)) / (x0 - y)^2 dy
// evaluated as (1/pi) int_0^R [2 f(x0) - f(x0+r) - f(x0-r)] / r^2 dr plus the
// analytic tail 2 f(x0) / (pi R), with Gauss-Legendre panels in r.
double halfwave_singular_integral(const std::function<double(double)>& f, double x0, double R) {
    std::vector<double> gx, gw;
    hw::detail::gauss_legendre(64, gx, gw);
    double acc = 0.0;
    const int panels = 200;
    const double h = R / panels;
    for (int p = 0; p < panels; ++p) {
        const double a = p * h;
        for (size_t i = 0; i < gx.size(); ++i) {
            const double r = a + 0.5 * h * (gx[i] + 1.0);
            const double w = 0.5 * h * gw[i];
            double val;
            if (r < 1e-8) {
                // integrand limit is -f''(x0); irrelevant at these nodes
                val = 0.0;
            } else {
                val = (2.0 * f(x0) - f(x0 + r) - f(x0 - r)) / (r * r);
            }
            acc += w * val;
        }
    }
    return (acc + 2.0 * f(x0) / R) / M_PI;
}

} // namespace

TEST_CASE("multiplier acts diagonally on grid modes") {
    auto g = make_grid(16.0, 1 << 10);
    const double xi0 = 6.0 * M_PI / 16.0; // a grid wavenumber
    GridFunction f = sample(g, [xi0](double x) { return std::cos(xi0 * x); });
    GridFunction Df = halfwave_D(f);
    for (int j = 0; j < f.size(); j += 37)
        REQUIRE(Df[j].real() == Approx(xi0 * f[j].real()).margin(1e-11));
}

TEST_CASE("identity symbol leaves fields unchanged") {
    auto g = make_grid(16.0, 1 << 10);
    std::mt19937_64 rng(7);
    GridFunction f = hwtest::random_decaying_field(g, rng, 3.0);
    GridFunction h = apply_multiplier(f, Multiplier::identity(g));
    h -= f;
    REQUIRE(norm2(h) < 1e-13 * norm2(f));
}

TEST_CASE("halfwave derivative matches the singular-integral quadrature") {
    auto g = make_grid(32.0, 1 << 11);
    auto gauss = [](double x) { return std::exp(-x * x); };
    GridFunction f = sample(g, gauss);
    GridFunction Df = halfwave_D(f);
    for (double x0 : {0.0, 0.35, 0.8, 1.5, 2.2}) {
        const double oracle = halfwave_singular_integral(gauss, x0, 2000.0);
        const int j = static_cast<int>(std::lround((x0 + 32.0) / g->dx()));
        REQUIRE(Df[j].real() == Approx(oracle).margin(1e-6));
    }
}

TEST_CASE("multiplier application rejects grid mismatch") {
    auto g1 = make_grid(16.0, 1 << 10);
    auto g2 = make_grid(16.0, 1 << 11);
    GridFunction f(g1);
    REQUIRE_THROWS_AS(apply_multiplier(f, Multiplier::halfwave(g2)), GridMismatchError);
}

TEST_CASE("scaling generator on a gaussian has the analytic closed form") {
    auto g = make_grid(16.0, 1 << 11);
    GridFunction f = sample(g, [](double x) { return std::exp(-x * x); });
    GridFunction Lf = scaling_generator(f);
    const auto& x = g->nodes();
    double worst = 0.0;
    for (int j = 0; j < f.size(); ++j) {
        const double exact = (0.5 - 2.0 * x[j] * x[j]) * std::exp(-x[j] * x[j]);
        worst = std::max(worst, std::abs(Lf[j].real() - exact));
    }
    REQUIRE(worst < 1e-10);
}

TEST_CASE("scaling generator is skew-adjoint on decaying fields") {
    auto g = make_grid(32.0, 1 << 11);
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 5; ++rep) {
        GridFunction f = hwtest::random_decaying_field(g, rng, 4.0);
        GridFunction h = hwtest::random_decaying_field(g, rng, 5.0);
        const double a = inner(scaling_generator(f), h).real();
        const double b = inner(f, scaling_generator(h)).real();
        REQUIRE(std::abs(a + b) < 1e-8 * std::abs(a));
    }
}

TEST_CASE("inner product basics") {
    auto g = make_grid(16.0, 1 << 10);
    GridFunction one = sample(g, [](double) { return 1.0; });
    REQUIRE(inner(one, one).real() == Approx(2.0 * 16.0).epsilon(1e-14));

    GridFunction f = sample(g, [](double x) { return std::exp(-x * x); });
    REQUIRE(inner(f, f).real() == Approx(std::sqrt(M_PI / 2.0)).epsilon(1e-10));

    // conjugate symmetry
    std::mt19937_64 rng(3);
    GridFunction a = hwtest::random_decaying_field(g, rng, 3.0);
    GridFunction b = hwtest::random_decaying_field(g, rng, 3.0);
    for (int j = 0; j < a.size(); ++j) a[j] *= cplx(0.3, 0.7);
    REQUIRE(std::abs(inner(a, b) - std::conj(inner(b, a))) < 1e-13);
}

TEST_CASE("D is self-adjoint for decaying fields") {
    auto g = make_grid(32.0, 1 << 11);
    std::mt19937_64 rng(5);
    GridFunction f = hwtest::random_decaying_field(g, rng, 4.0);
    GridFunction h = hwtest::random_decaying_field(g, rng, 3.0);
    const double a = inner(halfwave_D(f), h).real();
    const double b = inner(f, halfwave_D(h)).real();
    REQUIRE(std::abs(a - b) < 1e-10 * std::abs(a));
}

TEST_CASE("energy of the zero field vanishes") {
    auto g = make_grid(16.0, 1 << 10);
    REQUIRE(energy(GridFunction(g), InhomogeneityProfile::homogeneous()) == 0.0);
}

TEST_CASE("momentum conventions") {
    auto g = make_grid(16.0, 1 << 11);
    GridFunction real_u = sample(g, [](double x) { return std::exp(-x * x); });
    REQUIRE(std::abs(momentum(real_u)) < 1e-12);

    const double xi0 = 8.0 * M_PI / 16.0;
    GridFunction u = sample_complex(g, [xi0](double x) {
        return std::exp(cplx(0.0, xi0 * x)) * std::exp(-x * x);
    });
    REQUIRE(momentum(u) == Approx(xi0 * std::sqrt(M_PI / 2.0)).epsilon(1e-8));

    // even fields carry no momentum
    std::mt19937_64 rng(13);
    GridFunction even = hwtest::random_even_field(g, rng, 3.0);
    REQUIRE(std::abs(momentum(even)) < 1e-10);
}

TEST_CASE("parseval and fractional power composition") {
    auto g = make_grid(32.0, 1 << 11);
    std::mt19937_64 rng(17);
    GridFunction f = hwtest::random_decaying_field(g, rng, 4.0);

    std::vector<cplx> fh = f.values();
    fft_forward(fh);
    double spec = 0.0;
    for (const auto& z : fh) spec += std::norm(z);
    spec *= g->dx() / g->size();
    REQUIRE(spec == Approx(norm2sq(f)).epsilon(1e-12));

    GridFunction a = apply_multiplier(apply_multiplier(f, Multiplier::fractional(g, 0.5)),
                                      Multiplier::fractional(g, 0.5));
    GridFunction b = halfwave_D(f);
    a -= b;
    REQUIRE(norm2(a) < 1e-12 * norm2(b));

    REQUIRE(half_energy(f) == Approx(inner(f, halfwave_D(f)).real()).epsilon(1e-10));
}

TEST_CASE("multipliers commute with whole-node shifts") {
    auto g = make_grid(16.0, 1 << 10);
    std::mt19937_64 rng(23);
    GridFunction f = hwtest::random_decaying_field(g, rng, 3.0);
    const int shift = 173;
    auto rotate = [&](const GridFunction& a) {
        GridFunction out(g, a.kind());
        for (int j = 0; j < a.size(); ++j) out[(j + shift) % a.size()] = a[j];
        return out;
    };
    GridFunction lhs = halfwave_D(rotate(f));
    GridFunction rhs = rotate(halfwave_D(f));
    lhs -= rhs;
    REQUIRE(norm2(lhs) < 1e-12 * norm2(rhs));

    // linearity
    GridFunction h = hwtest::random_decaying_field(g, rng, 4.0);
    GridFunction sum = f + h;
    GridFunction d = halfwave_D(sum) - halfwave_D(f) - halfwave_D(h);
    REQUIRE(norm2(d) < 1e-12);
}

TEST_CASE("dealias caps the top third of the spectrum") {
    auto g = make_grid(16.0, 1 << 10);
    std::mt19937_64 rng(29);
    GridFunction f = hwtest::random_decaying_field(g, rng, 0.5);
    GridFunction capped = dealias(f);
    std::vector<cplx> ch = capped.values();
    fft_forward(ch);
    const auto& xi = g->wavenumbers();
    for (int j = 0; j < g->size(); ++j)
        if (std::abs(xi[j]) > (2.0 / 3.0) * g->xi_max()) REQUIRE(std::abs(ch[j]) == 0.0);
    GridFunction twice = dealias(capped);
    twice -= capped;
    REQUIRE(norm2(twice) < 1e-14);
}

TEST_CASE("trigonometric evaluation reproduces nodes and dilates exactly") {
    auto g = make_grid(16.0, 1 << 10);
    const double xi0 = 5.0 * M_PI / 16.0;
    GridFunction f = sample(g, [xi0](double x) { return std::sin(xi0 * x) + 0.3 * std::cos(2 * xi0 * x); });
    auto at_nodes = trig_eval(f, g->nodes());
    double worst = 0.0;
    for (int j = 0; j < g->size(); ++j) worst = std::max(worst, std::abs(at_nodes[j] - f[j]));
    REQUIRE(worst < 1e-11);

    std::vector<double> pts = {0.123, -4.56, 7.0001, 15.9};
    auto off = trig_eval(f, pts);
    for (size_t i = 0; i < pts.size(); ++i) {
        const double exact = std::sin(xi0 * pts[i]) + 0.3 * std::cos(2 * xi0 * pts[i]);
        REQUIRE(off[i].real() == Approx(exact).margin(1e-11));
        REQUIRE(std::abs(off[i].imag()) < 1e-11);
    }
}

TEST_CASE("resample uses exact subsampling on nested grids") {
    auto fine = make_grid(32.0, 1 << 11);
    auto coarse = make_grid(16.0, 1 << 9); // nodes are a subset: same dx ratio 2
    GridFunction f = sample(fine, [](double x) { return std::exp(-x * x / 9.0); });
    GridFunction r = resample(f, coarse);
    const auto& xc = coarse->nodes();
    for (int j = 0; j < coarse->size(); j += 17)
        REQUIRE(r[j].real() == Approx(std::exp(-xc[j] * xc[j] / 9.0)).margin(1e-12));
}

TEST_CASE("tail monitor flags slowly decaying fields") {
    auto g = make_grid(16.0, 1 << 10);
    GridFunction fat = sample(g, [](double x) { return 1.0 / (1.0 + std::abs(x)); });
    REQUIRE(tail_mass_fraction(fat) > kTailWarnFraction);
    REQUIRE(scaling_generator(fat).tail_untrusted());
    GridFunction thin = sample(g, [](double x) { return std::exp(-x * x); });
    REQUIRE_FALSE(scaling_generator(thin).tail_untrusted());
}
