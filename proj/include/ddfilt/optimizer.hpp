#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ddfilt/error.hpp"
#include "ddfilt/noise_spectrum.hpp"
#include "ddfilt/sequence_set.hpp"

namespace ddfilt {

// Largest pulse count the optimizer accepts; past ~20 pulses the area
// landscape becomes too rugged for a warm-started local search.
inline constexpr int kMaxPulses = 20;

struct OptimizerConfig {
    // Objective evaluations per simplex run.
    int max_evaluations = 4000;
    // Relative objective tolerance of one simplex run.
    double rel_tol = 1e-12;
    double x_tol = 1e-10;
    double initial_step = 5e-3;
    // Weight of the exact (L1 + quadratic) penalty on gap violations.
    double penalty_weight = 1e6;
    // Extra simplex runs restarted from the previous best point.
    int restarts = 2;
    // Smallest allowed separation of instantaneous pulses (fractions of tau).
    double min_gap = 1e-9;

    // Continuation grid; tau_max <= 0 means 2 n pi.
    double tau_min = 0.01;
    double tau_max = 0.0;
    int points = 3000;

    // Throws InvalidArgument on non-positive tolerances, tau_min <= 0 or points < 2.
    void validate() const;
    double resolved_tau_max(int n) const;
    std::vector<double> grid(int n) const;
};

struct ConvergenceReport {
    int evaluations = 0;
    int iterations = 0;
    double simplex_size = 0.0;
    bool converged = false;
    // False when the seed was kept (no improvement beyond rounding).
    bool improved = false;
};

struct OptimizedSequence {
    std::vector<double> deltas;
    double objective = 0.0;
    ConvergenceReport report;
};

/// Minimizes the filter-function area at fixed tau' over sequences symmetric
/// about 1/2 (ceil(n/2) half parameters, the odd-n center pinned at 0.5).
/// Never returns anything worse than the seed: differences below the
/// closed-form area's rounding bound count as ties and keep the seed.
///
/// Throws InvalidArgument for n outside [1, kMaxPulses] or an infeasible seed.
OptimizedSequence minimize_area(int n, double tau_prime, double tau_pi_prime,
                                std::span<const double> initial, const OptimizerConfig& config);

/// Same search with the coherence integral of a known spectrum as objective.
OptimizedSequence lodd_optimize(const NoiseSpectrum& spec, int n, double tau_prime,
                                double tau_pi_prime, std::span<const double> initial,
                                const OptimizerConfig& config);

struct ConvergenceRow {
    double tau_prime;
    double area;
    double udd_area;
    int iterations;
    bool converged;
};

struct SetBuild {
    SequenceSet set;
    std::vector<ConvergenceRow> log;
    std::vector<std::string> warnings;
};

// Thrown when a continuation sweep fails part-way; carries everything built
// before the failing tau'.
class SetBuildError : public NumericalError {
public:
    SetBuildError(const std::string& what, double tau_prime, std::optional<SetBuild> partial)
        : NumericalError(what), tau_prime_(tau_prime), partial_(std::move(partial)) {}
    double tau_prime() const { return tau_prime_; }
    const std::optional<SetBuild>& partial() const { return partial_; }

private:
    double tau_prime_;
    std::optional<SetBuild> partial_;
};

using ProgressCallback = std::function<void(std::size_t done, std::size_t total)>;

/// Continuation sweep in ascending tau'. The first grid point is seeded with
/// UDD, every later point with the previous solution. Leading grid points at
/// which the UDD seed does not fit finite pulses are skipped. A per-step jump
/// of any pulse center larger than 5 grid spacings is reported as a warning
/// (likely branch loss).
SetBuild build_ofdd_set(int n, double tau_pi_prime, const OptimizerConfig& config,
                        const ProgressCallback& progress = {});

/// LODD sequences on `tau_grid`, each minimizing the coherence integral and
/// seeded with the OFDD entry interpolated at the same tau'. Grid points are
/// independent and optimized in parallel.
SetBuild build_lodd_set(const NoiseSpectrum& spec, const SequenceSet& seed_set,
                        std::span<const double> tau_grid, const OptimizerConfig& config);

namespace serial {
SetBuild build_lodd_set(const NoiseSpectrum& spec, const SequenceSet& seed_set,
                        std::span<const double> tau_grid, const OptimizerConfig& config);
}  // namespace serial

// CSV `tau_prime,area,iterations,converged`.
void write_convergence_log(std::ostream& os, const std::vector<ConvergenceRow>& log);

}  // namespace ddfilt
