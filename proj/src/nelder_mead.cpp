#include "ddfilt/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ddfilt/error.hpp"

namespace ddfilt {
namespace {

double diameter(const std::vector<std::vector<double>>& simplex) {
    double d = 0.0;
    for (std::size_t i = 1; i < simplex.size(); ++i) {
        for (std::size_t k = 0; k < simplex[0].size(); ++k) {
            d = std::max(d, std::abs(simplex[i][k] - simplex[0][k]));
        }
    }
    return d;
}

}  // namespace

NelderMeadResult nelder_mead(const Objective& f, std::vector<double> x0,
                             const NelderMeadOptions& opts) {
    const std::size_t dim = x0.size();
    NelderMeadResult out;
    if (dim == 0) {
        out.x = std::move(x0);
        out.f = f(out.x);
        out.evaluations = 1;
        out.converged = true;
        return out;
    }
    if (!(opts.initial_step > 0.0)) throw InvalidArgument("simplex step must be positive");

    int evals = 0;
    auto eval = [&](const std::vector<double>& x) {
        ++evals;
        return f(x);
    };

    std::vector<std::vector<double>> simplex(dim + 1, x0);
    for (std::size_t k = 0; k < dim; ++k) simplex[k + 1][k] += opts.initial_step;
    std::vector<double> values(dim + 1);
    for (std::size_t i = 0; i <= dim; ++i) values[i] = eval(simplex[i]);

    std::vector<std::size_t> order(dim + 1);
    std::vector<double> centroid(dim), trial(dim), trial2(dim);
    int iterations = 0;
    bool converged = false;

    auto sort_simplex = [&] {
        std::iota(order.begin(), order.end(), 0);
        // Stable so that ties keep their insertion order (determinism).
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        std::vector<std::vector<double>> s(dim + 1);
        std::vector<double> v(dim + 1);
        for (std::size_t i = 0; i <= dim; ++i) {
            s[i] = std::move(simplex[order[i]]);
            v[i] = values[order[i]];
        }
        simplex = std::move(s);
        values = std::move(v);
    };

    sort_simplex();
    while (evals < opts.max_evaluations) {
        const double spread = values[dim] - values[0];
        const double ftol = std::max(opts.f_abs_tol, opts.f_rel_tol * std::abs(values[0]));
        if (diameter(simplex) <= opts.x_tol && spread <= ftol) {
            converged = true;
            break;
        }
        // Also stop once the values are flat to rounding and the simplex is tiny.
        if (spread == 0.0 && diameter(simplex) <= 1e3 * opts.x_tol) {
            converged = true;
            break;
        }
        ++iterations;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i < dim; ++i) {
            for (std::size_t k = 0; k < dim; ++k) centroid[k] += simplex[i][k];
        }
        for (double& c : centroid) c /= static_cast<double>(dim);

        const std::vector<double>& worst = simplex[dim];
        for (std::size_t k = 0; k < dim; ++k) trial[k] = centroid[k] + (centroid[k] - worst[k]);
        const double fr = eval(trial);

        if (fr < values[0]) {
            for (std::size_t k = 0; k < dim; ++k) {
                trial2[k] = centroid[k] + 2.0 * (centroid[k] - worst[k]);
            }
            const double fe = eval(trial2);
            if (fe < fr) {
                simplex[dim] = trial2;
                values[dim] = fe;
            } else {
                simplex[dim] = trial;
                values[dim] = fr;
            }
        } else if (fr < values[dim - 1]) {
            simplex[dim] = trial;
            values[dim] = fr;
        } else {
            const bool outside = fr < values[dim];
            for (std::size_t k = 0; k < dim; ++k) {
                trial2[k] = outside ? centroid[k] + 0.5 * (trial[k] - centroid[k])
                                    : centroid[k] + 0.5 * (worst[k] - centroid[k]);
            }
            const double fc = eval(trial2);
            if (fc < std::min(fr, values[dim])) {
                simplex[dim] = trial2;
                values[dim] = fc;
            } else {
                for (std::size_t i = 1; i <= dim; ++i) {
                    for (std::size_t k = 0; k < dim; ++k) {
                        simplex[i][k] = simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k]);
                    }
                    values[i] = eval(simplex[i]);
                }
            }
        }
        sort_simplex();
    }

    out.x = simplex[0];
    out.f = values[0];
    out.evaluations = evals;
    out.iterations = iterations;
    out.simplex_size = diameter(simplex);
    out.converged = converged;
    return out;
}

}  // namespace ddfilt
