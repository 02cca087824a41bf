#pragma once

#include <functional>
#include <span>
#include <vector>

namespace ddfilt {

struct NelderMeadOptions {
    int max_evaluations = 4000;
    double initial_step = 5e-3;
    // Converged when the simplex diameter is below x_tol and the spread of
    // vertex values is below max(f_abs_tol, f_rel_tol * |f_best|).
    double x_tol = 1e-10;
    double f_rel_tol = 1e-12;
    double f_abs_tol = 0.0;
};

struct NelderMeadResult {
    std::vector<double> x;
    double f = 0.0;
    int evaluations = 0;
    int iterations = 0;
    double simplex_size = 0.0;
    bool converged = false;
};

using Objective = std::function<double(std::span<const double>)>;

// Nelder-Mead downhill simplex with the standard coefficients (reflection 1,
// expansion 2, contraction 1/2, shrink 1/2). Deterministic: the initial
// simplex is x0 plus initial_step along each coordinate.
NelderMeadResult nelder_mead(const Objective& f, std::vector<double> x0,
                             const NelderMeadOptions& opts = {});

}  // namespace ddfilt
