#pragma once

#include <functional>
#include <span>
#include <vector>

namespace ddfilt {

struct QuadratureOptions {
    double rel_tol = 1e-10;
    double abs_tol = 0.0;
    // Ceiling on the number of live panels before refinement gives up.
    int max_panels = 1 << 18;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    int panels = 0;
};

// Adaptive Gauss-Kronrod (7/15) integration. `breakpoints` must be sorted and
// hold at least two points; each initial interval becomes one panel, and the
// panel with the largest error estimate is bisected until the summed estimate
// drops below max(abs_tol, rel_tol * |value|).
//
// Throws NumericalError (naming the worst panel) when max_panels is reached.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f,
                                    std::span<const double> breakpoints,
                                    const QuadratureOptions& opts = {});

// Breakpoints on [a, b] spaced so that an integrand oscillating at
// `angular_rate` (radians per unit of the integration variable) gets at
// least `nodes_per_period` Kronrod nodes per period. Always includes a and b.
std::vector<double> oscillation_breakpoints(double a, double b, double angular_rate,
                                            int nodes_per_period = 8);

// Merges extra breakpoints (kinks) inside (a, b) into a sorted grid.
std::vector<double> merge_breakpoints(std::vector<double> grid, std::span<const double> extra);

}  // namespace ddfilt
