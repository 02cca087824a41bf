#include "ddfilt/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <ostream>

#include "ddfilt/coherence.hpp"
#include "ddfilt/filter_function.hpp"
#include "ddfilt/nelder_mead.hpp"
#include "ddfilt/parallel.hpp"

namespace ddfilt {

void OptimizerConfig::validate() const {
    if (max_evaluations < 1) throw InvalidArgument("max_evaluations must be >= 1");
    if (!(rel_tol > 0.0) || !(x_tol > 0.0)) throw InvalidArgument("tolerances must be > 0");
    if (!(initial_step > 0.0)) throw InvalidArgument("initial simplex step must be > 0");
    if (!(penalty_weight > 0.0)) throw InvalidArgument("penalty weight must be > 0");
    if (restarts < 0) throw InvalidArgument("restarts must be >= 0");
    if (!(min_gap > 0.0)) throw InvalidArgument("min_gap must be > 0");
    if (!(tau_min > 0.0)) throw InvalidArgument("tau_min must be > 0");
    if (points < 2) throw InvalidArgument("grid needs at least 2 points");
}

double OptimizerConfig::resolved_tau_max(int n) const {
    return tau_max > 0.0 ? tau_max : 2.0 * n * std::numbers::pi;
}

std::vector<double> OptimizerConfig::grid(int n) const {
    const double hi = resolved_tau_max(n);
    if (!(hi > tau_min)) throw InvalidArgument("tau_max must exceed tau_min");
    std::vector<double> g(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        g[static_cast<std::size_t>(i)] =
            tau_min + (hi - tau_min) * static_cast<double>(i) / (points - 1);
    }
    g.back() = hi;
    return g;
}

namespace {

void check_pulse_count(int n) {
    if (n < 1 || n > kMaxPulses) {
        throw InvalidArgument("pulse count " + std::to_string(n) + " outside [1, " +
                              std::to_string(kMaxPulses) +
                              "]: the optimization is unreliable beyond ~20 pulses");
    }
}

// Symmetric sequences parametrized by the free half values: the first n/2
// centers (the odd-n center is pinned at 0.5).
struct SymmetricSpace {
    int n;
    double edge;  // minimum first center
    double gap;   // minimum center separation

    std::size_t dim() const { return static_cast<std::size_t>(n / 2); }

    void expand(std::span<const double> x, std::vector<double>& deltas) const {
        deltas.resize(static_cast<std::size_t>(n));
        const std::size_t m = dim();
        for (std::size_t k = 0; k < m; ++k) {
            deltas[k] = x[k];
            deltas[static_cast<std::size_t>(n) - 1 - k] = 1.0 - x[k];
        }
        if (n % 2 == 1) deltas[m] = 0.5;
    }

    // Sum of constraint violations (0 when feasible).
    double violation(std::span<const double> x) const {
        double v = 0.0;
        double prev = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double need = k == 0 ? edge : gap;
            v += std::max(0.0, need - (x[k] - prev));
            prev = x[k];
        }
        if (!x.empty()) {
            // Distance to the mirrored partner (even n) or to the center pulse (odd n).
            const double room = n % 2 == 0 ? 1.0 - 2.0 * prev : 0.5 - prev;
            v += std::max(0.0, gap - room);
        }
        return v;
    }
};

SymmetricSpace make_space(int n, double tau_prime, double tau_pi_prime, double min_gap) {
    const double width = tau_pi_prime / tau_prime;
    return {n, std::max(min_gap, width / 2.0), std::max(min_gap, width)};
}

double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

using SequenceObjective = std::function<double(std::span<const double> deltas)>;

// Shared simplex driver. `tie` is the objective resolution: improvements
// smaller than tie keep the seed, restarts within tie of the best are
// resolved toward the seed.
OptimizedSequence minimize_symmetric(int n, double tau_prime, double tau_pi_prime,
                                     std::span<const double> initial,
                                     const SequenceObjective& objective,
                                     const std::function<double(double)>& tie,
                                     const OptimizerConfig& config) {
    check_pulse_count(n);
    config.validate();
    if (!(tau_prime > 0.0)) throw InvalidArgument("tau' must be > 0");
    if (static_cast<int>(initial.size()) != n) {
        throw InvalidArgument("seed has " + std::to_string(initial.size()) + " pulses, expected " +
                              std::to_string(n));
    }
    if (!is_symmetric(initial, 1e-9)) throw InvalidArgument("seed is not symmetric about 0.5");

    const SymmetricSpace space = make_space(n, tau_prime, tau_pi_prime, config.min_gap);
    const std::vector<double> x0(initial.begin(),
                                 initial.begin() + static_cast<std::ptrdiff_t>(space.dim()));
    if (space.violation(x0) > 0.0) {
        throw InvalidArgument("infeasible seed at tau'=" + format_double(tau_prime) +
                              ": pulses overlap or touch");
    }

    std::vector<double> scratch;
    auto exact = [&](std::span<const double> x) {
        space.expand(x, scratch);
        return objective(scratch);
    };

    const double f0 = exact(x0);
    OptimizedSequence out;
    space.expand(x0, out.deltas);
    out.objective = f0;
    if (space.dim() == 0) {
        out.report.converged = true;
        return out;
    }

    // Best feasible point seen during the current simplex run.
    std::vector<double> run_best_x;
    double run_best_f = std::numeric_limits<double>::infinity();
    auto penalized = [&](std::span<const double> x) {
        const double v = space.violation(x);
        const double f = exact(x);
        if (v == 0.0) {
            if (f < run_best_f) {
                run_best_f = f;
                run_best_x.assign(x.begin(), x.end());
            }
            return f;
        }
        return f + config.penalty_weight * (v + v * v);
    };

    NelderMeadOptions nm;
    nm.max_evaluations = config.max_evaluations;
    nm.initial_step = config.initial_step;
    nm.x_tol = config.x_tol;
    nm.f_rel_tol = config.rel_tol;
    nm.f_abs_tol = tie(f0);

    struct Candidate {
        std::vector<double> x;
        double f;
    };
    std::vector<Candidate> candidates;
    std::vector<double> start = x0;
    double step = config.initial_step;
    for (int run = 0; run <= config.restarts; ++run) {
        run_best_x.clear();
        run_best_f = std::numeric_limits<double>::infinity();
        nm.initial_step = step;
        const NelderMeadResult r = nelder_mead(penalized, start, nm);
        out.report.evaluations += r.evaluations;
        out.report.iterations += r.iterations;
        out.report.simplex_size = r.simplex_size;
        out.report.converged = r.converged;
        if (run_best_x.empty()) break;
        const bool better = candidates.empty() || run_best_f < candidates.back().f - tie(run_best_f);
        candidates.push_back({run_best_x, run_best_f});
        if (!better) break;
        start = run_best_x;
        step = std::max(step * 0.1, 10.0 * config.x_tol);
    }
    if (candidates.empty()) return out;

    double f_min = candidates.front().f;
    for (const Candidate& c : candidates) f_min = std::min(f_min, c.f);
    const Candidate* chosen = nullptr;
    for (const Candidate& c : candidates) {
        if (c.f > f_min + tie(f_min)) continue;
        if (chosen == nullptr || distance(c.x, x0) < distance(chosen->x, x0)) chosen = &c;
    }
    if (chosen->f < f0 - tie(f0)) {
        space.expand(chosen->x, out.deltas);
        out.objective = chosen->f;
        out.report.improved = true;
    }
    return out;
}

}  // namespace

OptimizedSequence minimize_area(int n, double tau_prime, double tau_pi_prime,
                                std::span<const double> initial, const OptimizerConfig& config) {
    const std::vector<double> probe(static_cast<std::size_t>(std::max(n, 0)), 0.5);
    const double floor = area_rounding_bound({probe, tau_prime, tau_pi_prime});
    auto objective = [&](std::span<const double> deltas) {
        return area_analytic({deltas, tau_prime, tau_pi_prime});
    };
    auto tie = [&](double f) { return std::max(floor, config.rel_tol * std::abs(f)); };
    return minimize_symmetric(n, tau_prime, tau_pi_prime, initial, objective, tie, config);
}

OptimizedSequence lodd_optimize(const NoiseSpectrum& spec, int n, double tau_prime,
                                double tau_pi_prime, std::span<const double> initial,
                                const OptimizerConfig& config) {
    QuadratureOptions q;
    q.rel_tol = 1e-11;
    auto objective = [&](std::span<const double> deltas) {
        return coherence(spec, FilterContext{deltas, tau_prime, tau_pi_prime}, q).chi;
    };
    // Quadrature noise sets the resolution of the chi objective.
    auto tie = [&](double f) {
        return std::max({1e-17, 10.0 * q.rel_tol * std::abs(f), config.rel_tol * std::abs(f)});
    };
    return minimize_symmetric(n, tau_prime, tau_pi_prime, initial, objective, tie, config);
}

SetBuild build_ofdd_set(int n, double tau_pi_prime, const OptimizerConfig& config,
                        const ProgressCallback& progress) {
    check_pulse_count(n);
    config.validate();
    if (!(tau_pi_prime >= 0.0)) throw InvalidArgument("tau_pi' must be >= 0");
    const std::vector<double> grid = config.grid(n);
    const double spacing = grid[1] - grid[0];
    const std::vector<double> udd = udd_deltas(n);

    std::vector<SequenceEntry> entries;
    std::vector<ConvergenceRow> log;
    std::vector<std::string> warnings;
    std::size_t skipped = 0;
    std::vector<double> seed = udd;

    auto meta = [&] {
        std::map<std::string, std::string> m;
        m["grid_min"] = format_double(config.tau_min);
        m["grid_max"] = format_double(grid.back());
        m["grid_points"] = std::to_string(config.points);
        m["grid_skipped"] = std::to_string(skipped);
        m["rel_tol"] = format_double(config.rel_tol);
        m["x_tol"] = format_double(config.x_tol);
        m["max_evaluations"] = std::to_string(config.max_evaluations);
        m["initial_step"] = format_double(config.initial_step);
        m["restarts"] = std::to_string(config.restarts);
        m["min_gap"] = format_double(config.min_gap);
        m["objective"] = "filter_area";
        return m;
    };

    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double tau = grid[i];
        if (entries.empty()) {
            const SymmetricSpace space = make_space(n, tau, tau_pi_prime, config.min_gap);
            if (space.violation(std::span<const double>(udd).first(space.dim())) > 0.0) {
                ++skipped;
                continue;
            }
        }
        OptimizedSequence r;
        try {
            r = minimize_area(n, tau, tau_pi_prime, seed, config);
        } catch (const std::exception& e) {
            std::optional<SetBuild> partial;
            if (!entries.empty()) {
                partial = SetBuild{SequenceSet(n, tau_pi_prime, Generator::ofdd, entries, meta()),
                                   log, warnings};
            }
            throw SetBuildError("optimization failed at tau'=" + format_double(tau) + ": " +
                                    e.what(),
                                tau, std::move(partial));
        }
        if (!entries.empty()) {
            double jump = 0.0;
            for (std::size_t j = 0; j < r.deltas.size(); ++j) {
                jump = std::max(jump, std::abs(r.deltas[j] - entries.back().deltas[j]));
            }
            if (jump > 5.0 * spacing) {
                warnings.push_back("pulse center jumps by " + format_double(jump) + " at tau'=" +
                                   format_double(tau) + " (possible branch change)");
            }
        }
        log.push_back({tau, r.objective, area_analytic({udd, tau, tau_pi_prime}),
                       r.report.iterations, r.report.converged});
        entries.push_back({tau, r.deltas});
        seed = r.deltas;
        if (progress) progress(i + 1, grid.size());
    }
    if (entries.empty()) {
        throw SetBuildError("no grid point admits the UDD seed with these finite pulses",
                            grid.back(), std::nullopt);
    }
    if (skipped > 0) {
        warnings.push_back(std::to_string(skipped) +
                           " leading grid points skipped: UDD seed does not fit the pulses");
    }
    return {SequenceSet(n, tau_pi_prime, Generator::ofdd, std::move(entries), meta()),
            std::move(log), std::move(warnings)};
}

namespace {

struct LoddPoint {
    SequenceEntry entry;
    ConvergenceRow row;
};

LoddPoint lodd_point(const NoiseSpectrum& spec, const SequenceSet& seed_set, double tau,
                     const OptimizerConfig& config) {
    const std::vector<double> seed = seed_set.deltas_at(tau);
    const OptimizedSequence r =
        lodd_optimize(spec, seed_set.n(), tau, seed_set.tau_pi_prime(), seed, config);
    const double area = area_analytic({r.deltas, tau, seed_set.tau_pi_prime()});
    const double udd_area =
        area_analytic({udd_deltas(seed_set.n()), tau, seed_set.tau_pi_prime()});
    return {{tau, r.deltas}, {tau, area, udd_area, r.report.iterations, r.report.converged}};
}

std::map<std::string, std::string> lodd_meta(const NoiseSpectrum& spec,
                                             const OptimizerConfig& config) {
    std::map<std::string, std::string> m;
    m["objective"] = "coherence_integral";
    m["spectrum"] = spec.describe();
    m["rel_tol"] = format_double(config.rel_tol);
    m["max_evaluations"] = std::to_string(config.max_evaluations);
    m["initial_step"] = format_double(config.initial_step);
    m["restarts"] = std::to_string(config.restarts);
    return m;
}

void check_lodd_grid(const SequenceSet& seed_set, std::span<const double> grid) {
    if (grid.empty()) throw InvalidArgument("empty LODD grid");
    for (double t : grid) {
        if (!seed_set.covers(t)) {
            throw InvalidArgument("LODD grid point tau'=" + format_double(t) +
                                  " outside the seed set coverage");
        }
    }
}

}  // namespace

SetBuild build_lodd_set(const NoiseSpectrum& spec, const SequenceSet& seed_set,
                        std::span<const double> tau_grid, const OptimizerConfig& config) {
    check_lodd_grid(seed_set, tau_grid);
    std::vector<LoddPoint> points(tau_grid.size());
    std::exception_ptr failure;
    const long count = static_cast<long>(tau_grid.size());
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
    for (long i = 0; i < count; ++i) {
        try {
            points[static_cast<std::size_t>(i)] =
                lodd_point(spec, seed_set, tau_grid[static_cast<std::size_t>(i)], config);
        } catch (...) {
#pragma omp critical(ddfilt_lodd_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    SetBuild out{SequenceSet(seed_set.n(), seed_set.tau_pi_prime(), Generator::lodd,
                             [&] {
                                 std::vector<SequenceEntry> e;
                                 for (auto& p : points) e.push_back(p.entry);
                                 return e;
                             }(),
                             lodd_meta(spec, config)),
                 {},
                 {}};
    for (const LoddPoint& p : points) out.log.push_back(p.row);
    return out;
}

SetBuild serial::build_lodd_set(const NoiseSpectrum& spec, const SequenceSet& seed_set,
                                std::span<const double> tau_grid, const OptimizerConfig& config) {
    check_lodd_grid(seed_set, tau_grid);
    std::vector<SequenceEntry> entries;
    std::vector<ConvergenceRow> log;
    for (double t : tau_grid) {
        LoddPoint p = lodd_point(spec, seed_set, t, config);
        entries.push_back(std::move(p.entry));
        log.push_back(p.row);
    }
    return {SequenceSet(seed_set.n(), seed_set.tau_pi_prime(), Generator::lodd,
                        std::move(entries), lodd_meta(spec, config)),
            std::move(log),
            {}};
}

void write_convergence_log(std::ostream& os, const std::vector<ConvergenceRow>& log) {
    os << "tau_prime,area,iterations,converged\n";
    for (const ConvergenceRow& r : log) {
        os << format_double(r.tau_prime) << ',' << format_double(r.area) << ',' << r.iterations
           << ',' << (r.converged ? 1 : 0) << '\n';
    }
}

}  // namespace ddfilt
