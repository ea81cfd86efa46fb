#pragma once

// The bounded even factor k(x) multiplying the cubic nonlinearity, with its
// first two derivatives supplied analytically, plus the energy functional
// that couples fields to k.

#include <cmath>
#include <functional>
#include <string>
#include <utility>

#include "halfwave/grid.hpp"
#include "halfwave/spectral.hpp"

namespace hw {

struct InhomogeneityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class InhomogeneityProfile {
  public:
    using Fn = std::function<double(double)>;

    InhomogeneityProfile(Fn k, Fn dk, Fn ddk, double lower_bound, std::string tag)
        : k_(std::move(k)), dk_(std::move(dk)), ddk_(std::move(ddk)),
          k1_(lower_bound), tag_(std::move(tag)) {
        const bool homogeneous = tag_ == "homogeneous";
        if (k1_ <= 0.0) throw InhomogeneityError("lower bound k1 must be positive");
        if (std::abs(k_(0.0) - 1.0) > 1e-12) throw InhomogeneityError("k(0) must equal 1");
        if (std::abs(dk_(0.0)) > 1e-12) throw InhomogeneityError("k'(0) must vanish");
        if (!homogeneous && ddk_(0.0) >= 0.0)
            throw InhomogeneityError("k''(0) must be negative for admissible profiles");
    }

    // k(x) = (1 + k1 x^2) / (1 + x^2); k(0)=1, k''(0) = -2(1-k1), bounded below by k1
    static InhomogeneityProfile default_profile(double k1 = 0.5) {
        return InhomogeneityProfile(
            [k1](double x) { return (1.0 + k1 * x * x) / (1.0 + x * x); },
            [k1](double x) {
                const double d = 1.0 + x * x;
                return 2.0 * x * (k1 - 1.0) / (d * d);
            },
            [k1](double x) {
                const double d = 1.0 + x * x;
                return 2.0 * (k1 - 1.0) * (1.0 - 3.0 * x * x) / (d * d * d);
            },
            k1, "default");
    }

    static InhomogeneityProfile homogeneous() {
        return InhomogeneityProfile([](double) { return 1.0; }, [](double) { return 0.0; },
                                    [](double) { return 0.0; }, 1.0, "homogeneous");
    }

    double operator()(double x) const { return k_(x); }
    double deriv(double x) const { return dk_(x); }
    double second_deriv(double x) const { return ddk_(x); }
    double lower_bound() const { return k1_; }
    const std::string& tag() const { return tag_; }
    bool is_homogeneous() const { return tag_ == "homogeneous"; }

    // validate bounds, evenness and normalization on the nodes of a grid
    void validate_on(const SpectralGrid& g) const {
        const auto& x = g.nodes();
        for (int j = 0; j < g.size(); ++j) {
            const double v = k_(x[j]);
            if (v < k1_ - 1e-12 || v > 1.0 + 1e-12)
                throw InhomogeneityError("k(x) out of [k1, 1] at a grid node");
            if (std::abs(k_(x[j]) - k_(-x[j])) > 1e-12)
                throw InhomogeneityError("k(x) not even at a grid node");
        }
    }

    // max over the grid nodes (equals 1 for admissible profiles)
    double max_on(const SpectralGrid& g) const {
        double m = 0.0;
        for (double x : g.nodes()) m = std::max(m, k_(x));
        return m;
    }

    GridFunction sample_on(const GridPtr& g, double length_scale = 1.0) const {
        return sample(g, [this, length_scale](double x) { return k_(length_scale * x); });
    }

  private:
    Fn k_, dk_, ddk_;
    double k1_;
    std::string tag_;
};

// E(u) = 1/2 Re (u, D u) - 1/4 integral k |u|^4
inline double energy(const GridFunction& u, const InhomogeneityProfile& k,
                     double length_scale = 1.0) {
    const double kin = 0.5 * inner(u, halfwave_D(u)).real();
    const auto& x = u.grid().nodes();
    double quart = 0.0;
    for (int j = 0; j < u.size(); ++j) {
        const double a2 = std::norm(u[j]);
        quart += k(length_scale * x[j]) * a2 * a2;
    }
    return kin - 0.25 * quart * u.grid().dx();
}

} // namespace hw
