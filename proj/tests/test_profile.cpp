#include <catch2/catch_amalgamated.hpp>

#include "halfwave/fit.hpp"
#include "halfwave/profile.hpp"
#include "test_common.hpp"

using namespace hw;
using Catch::Approx;

namespace {
const ProfileCoefficientSet& coeffs() { return hwtest::cached_coefficients(1024.0, 1 << 16); }
const InhomogeneityProfile& kdef() {
    static InhomogeneityProfile k = InhomogeneityProfile::default_profile();
    return k;
}
} // namespace

TEST_CASE("profile at the origin of parameter space is Q") {
    BlowupProfile p = assemble_profile(coeffs(), ProfileParams{0.0, 0.0});
    GridFunction d = p.qp - coeffs().Q;
    REQUIRE(sup_norm(d) < 1e-12);
}

TEST_CASE("imaginary part is the odd-in-b combination") {
    const double b = 0.1;
    BlowupProfile p = assemble_profile(coeffs(), ProfileParams{b, 0.0});
    const auto& c = coeffs();
    double worst = 0.0;
    for (int j = 0; j < p.qp.size(); ++j)
        worst = std::max(worst, std::abs(p.qp[j].imag() - (b * c.S10[j].real() +
                                                           b * b * b * c.S30[j].real())));
    REQUIRE(worst < 1e-14);
}

TEST_CASE("parameters outside the smallness box are rejected") {
    REQUIRE_THROWS_AS(assemble_profile(coeffs(), ProfileParams{0.3, 0.05}), ProfileError);
}

TEST_CASE("profile mass deviates at fourth order") {
    const auto& c = coeffs();
    const double massQ = norm2sq(c.Q);
    std::vector<double> ratios;
    for (double b : {0.02, 0.05, 0.1, 0.2}) {
        ProfileParams p{b, b * b};
        const double dev = std::abs(profile_mass(c, p) - massQ);
        ratios.push_back(dev / (std::pow(b, 4) + p.lambda * p.lambda));
    }
    for (double r : ratios) REQUIRE(r < 1.0); // b^2 order cancels
}

TEST_CASE("profile residual reduces to the ground-state residual at the origin") {
    GridFunction phi = profile_residual(coeffs(), ProfileParams{0.0, 0.0},
                                        InhomogeneityProfile::homogeneous());
    REQUIRE(norm2(phi) < 1e-9);
}

TEST_CASE("residual scales at fifth order along lambda = b^2") {
    std::vector<double> bs, rs;
    for (int i = 0; i < 7; ++i) {
        const double b = 0.02 * std::pow(10.0, i / 6.0);
        bs.push_back(b);
        rs.push_back(norm2(profile_residual(coeffs(), ProfileParams{b, b * b}, kdef())));
    }
    LineFit f = fit_loglog(bs, rs);
    REQUIRE(f.slope == Approx(5.0).margin(0.4));
}

TEST_CASE("weighted gradient of the residual stays bounded over the ladder") {
    std::vector<double> ratios;
    for (double b : {0.02, 0.0632, 0.2}) {
        ProfileParams p{b, b * b};
        ResidualNorms rn = residual_norms(profile_residual(coeffs(), p, kdef()));
        const double size = std::pow(b, 5) + p.lambda * p.lambda * p.box_norm();
        ratios.push_back(rn.weighted_grad_sup / size);
    }
    const double lo = *std::min_element(ratios.begin(), ratios.end());
    const double hi = *std::max_element(ratios.begin(), ratios.end());
    REQUIRE(hi / lo < 3.0);
}

TEST_CASE("residual is orthogonal to the kernel directions at profile order") {
    const auto& c = coeffs();
    GridFunction gradQ = derivative(c.Q);
    for (double b : {0.05, 0.1, 0.2}) {
        ProfileParams p{b, b * b};
        GridFunction phi = profile_residual(c, p, kdef());
        const double size = std::pow(b, 5) + p.lambda * p.lambda * p.box_norm();
        REQUIRE(std::abs(inner(real_part(phi), c.Q).real()) < 20.0 * size);
        REQUIRE(std::abs(inner(real_part(phi), gradQ).real()) < 20.0 * size);
    }
}

TEST_CASE("residual is even") {
    GridFunction phi = profile_residual(coeffs(), ProfileParams{0.1, 0.01}, kdef());
    REQUIRE(even_defect(phi) < 1e-10 * sup_norm(phi));
}

TEST_CASE("profile energy recovers e1 on the suppressed-lambda ladder") {
    const auto& c = coeffs();
    const double E00 = profile_energy(c, ProfileParams{0.0, 0.0}, kdef());
    REQUIRE(std::abs(E00) < 1e-5); // grid-level Pohozaev defect
    for (double b : {0.05, 0.02}) {
        const double E = profile_energy(c, ProfileParams{b, b * b * b}, kdef());
        REQUIRE((E - E00) / (b * b) == Approx(c.e1).epsilon(0.02));
    }
}

TEST_CASE("the lambda^2 energy coefficient matches the quarter-moment value") {
    const auto& c = coeffs();
    auto ids = coefficient_identities(c);
    const double E00 = profile_energy(c, ProfileParams{0.0, 0.0}, kdef());
    // expansion of the energy in lambda at b = 0: both the Taylor term of k
    // and the T02 feedback contribute -k''(0)/8 each
    const double predicted = -c.k_second_deriv_at_0 / 4.0 * ids.y2Q4;
    const double measured = (profile_energy(c, ProfileParams{0.0, 0.025}, kdef()) - E00) / (0.025 * 0.025);
    REQUIRE(measured == Approx(predicted).epsilon(0.03));
}

TEST_CASE("parameter derivatives match finite differences of the assembly") {
    const auto& c = coeffs();
    const double h = 1e-3;
    ProfileParams p{0.1, 0.02};
    BlowupProfile mid = assemble_profile(c, p);
    BlowupProfile up = assemble_profile(c, ProfileParams{p.b + h, p.lambda});
    BlowupProfile dn = assemble_profile(c, ProfileParams{p.b - h, p.lambda});
    double worst = 0.0;
    for (int j = 0; j < mid.qp.size(); ++j)
        worst = std::max(worst, std::abs((up.qp[j] - dn.qp[j]) / (2.0 * h) - mid.d_b[j]));
    REQUIRE(worst < 1e-5);

    BlowupProfile lu = assemble_profile(c, ProfileParams{p.b, p.lambda + h});
    BlowupProfile ld = assemble_profile(c, ProfileParams{p.b, p.lambda - h});
    worst = 0.0;
    for (int j = 0; j < mid.qp.size(); ++j)
        worst = std::max(worst, std::abs((lu.qp[j] - ld.qp[j]) / (2.0 * h) - mid.d_lambda[j]));
    REQUIRE(worst < 1e-5);
}
