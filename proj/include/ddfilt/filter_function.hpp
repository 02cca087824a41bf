#pragma once

#include <span>
#include <vector>

#include "ddfilt/quadrature.hpp"
#include "ddfilt/sequence_set.hpp"

namespace ddfilt {

/// Everything the dephasing filter function depends on, in dimensionless
/// units: pulse centers, tau' = omega_D * tau and tau_pi' = omega_D * tau_pi.
/// Non-owning view over the deltas; the caller keeps them alive.
struct FilterContext {
    std::span<const double> deltas;
    double tau_prime = 0.0;
    double tau_pi_prime = 0.0;
};

// |1 + (-1)^(n+1) e^{i theta} + 2 sum_j (-1)^j e^{i theta d_j} cos(w' tau_pi'/2)|^2
// with theta = omega_prime * tau_prime.
double filter_value(const FilterContext& ctx, double omega_prime);

// Same quantity through the real form valid for sequences symmetric about
// 1/2 (the bracketed sum is real up to a global phase). Precondition:
// is_symmetric(ctx.deltas, ~1e-12).
double filter_value_symmetric(const FilterContext& ctx, double omega_prime);

// Closed form of int_0^1 F(w' tau') dw' (the constant omega_D prefactor is
// dropped). The squared modulus is expanded into pairwise cosines and every
// term integrates to a sinc.
double area_analytic(const FilterContext& ctx);

// d area_analytic / d delta_j for every pulse. `grad` must hold n values.
void area_analytic_gradient(const FilterContext& ctx, std::span<double> grad);

// Scale of the absolute rounding error of area_analytic: the expansion sums
// O((n+2)^2) terms of size O(1) that cancel to the (possibly tiny) area.
double area_rounding_bound(const FilterContext& ctx);

// Same integral by adaptive quadrature of filter_value, panels seeded at 8
// nodes per oscillation period. Independent cross-check of area_analytic.
QuadratureResult area_quadrature(const FilterContext& ctx, const QuadratureOptions& opts = {});

struct Crossing {
    double tau_prime;
    std::vector<double> deltas;
};

/// Smallest tau' of the set at which the filter function evaluated at the
/// cutoff (omega' = 1, i.e. theta = tau') reaches 1. The crossing is
/// bracketed on the set grid, each entry evaluated with its own deltas, then
/// refined by bisection on the linearly interpolated deltas.
///
/// Throws NumericalError if F stays below 1 over the whole set.
Crossing tau_F1(const SequenceSet& set);

}  // namespace ddfilt
