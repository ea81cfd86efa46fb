#pragma once

// Shared fixtures: ground states and coefficient sets are expensive, so each
// is solved once per test binary and cached by grid signature.

#include <map>
#include <random>

#include "halfwave/coefficients.hpp"
#include "halfwave/ground_state.hpp"

namespace hwtest {

using namespace hw;

inline const GroundState& cached_ground_state(double L, int N) {
    static std::map<std::pair<double, int>, GroundState> cache;
    auto key = std::make_pair(L, N);
    auto it = cache.find(key);
    if (it == cache.end())
        it = cache.emplace(key, solve_petviashvili(make_grid(L, N))).first;
    return it->second;
}

// coefficients on the standard analysis grid (fixed-radius taper)
inline const ProfileCoefficientSet& cached_coefficients(double L, int N,
                                                        bool homogeneous = false) {
    static std::map<std::tuple<double, int, bool>, ProfileCoefficientSet> cache;
    auto key = std::make_tuple(L, N, homogeneous);
    auto it = cache.find(key);
    if (it == cache.end()) {
        const auto& gs = cached_ground_state(L, N);
        InhomogeneityProfile k = homogeneous ? InhomogeneityProfile::homogeneous()
                                             : InhomogeneityProfile::default_profile();
        it = cache.emplace(key, build_profile_coefficients(gs, k)).first;
    }
    return it->second;
}

// random even real field with a gaussian envelope, dealiased
inline GridFunction random_even_field(const GridPtr& g, std::mt19937_64& rng, double width) {
    std::normal_distribution<double> nd;
    GridFunction f(g, FieldKind::Real);
    const auto& x = g->nodes();
    for (int j = 0; j < g->size(); ++j)
        f[j] = cplx(nd(rng) * std::exp(-x[j] * x[j] / (width * width)), 0.0);
    symmetrize_even(f);
    f = dealias(f);
    f.set_kind(FieldKind::Real);
    return f;
}

inline GridFunction random_decaying_field(const GridPtr& g, std::mt19937_64& rng, double width) {
    std::normal_distribution<double> nd;
    GridFunction f(g, FieldKind::Real);
    const auto& x = g->nodes();
    for (int j = 0; j < g->size(); ++j)
        f[j] = cplx(nd(rng) * std::exp(-x[j] * x[j] / (width * width)), 0.0);
    f = dealias(f);
    f.set_kind(FieldKind::Real);
    return f;
}

} // namespace hwtest
