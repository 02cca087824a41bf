#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ddfilt/filter_function.hpp"
#include "ddfilt/noise_spectrum.hpp"
#include "ddfilt/pulse_sequence.hpp"
#include "ddfilt/quadrature.hpp"
#include "ddfilt/sequence_set.hpp"

namespace ddfilt {

// Error level that defines the coherence time: 1/e of the fully dephased
// asymptote 0.5.
inline constexpr double kCoherenceThreshold = 0.18393972058572117;  // 0.5 / e

struct CoherenceResult {
    double chi = 0.0;    // coherence integral
    double w = 1.0;      // |<sigma_y>| = exp(-chi)
    double error = 0.0;  // (1 - w) / 2
};

CoherenceResult coherence_from_chi(double chi);

// chi = (2/pi) int S'(w') F(w' tau') / w'^2 dw' over the spectrum support.
// Panels follow the filter oscillation and split at the spectrum kinks.
CoherenceResult coherence(const NoiseSpectrum& spec, const FilterContext& ctx,
                          const QuadratureOptions& opts = {});

// Physical sequence against a spectrum with scale omega_d:
// tau' = omega_d tau, tau_pi' = omega_d tau_pi.
CoherenceResult coherence(const NoiseSpectrum& spec, const PulseSequence& seq,
                          const QuadratureOptions& opts = {});

enum class Strategy { cpmg, udd, ofdd, lodd, free };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view tag);

struct CurvePoint {
    double duration;
    double error;
};

struct DecoherenceCurve {
    Strategy strategy = Strategy::free;
    int n = 0;
    std::vector<CurvePoint> points;
    std::string spectrum_id;
};

// Pulse centers a strategy uses at dimensionless duration tau_prime. For
// ofdd/lodd the set is interpolated (each duration gets its own locally
// optimized sequence); cpmg/udd/free ignore the set.
std::vector<double> strategy_deltas(Strategy strategy, int n, double tau_prime,
                                    const SequenceSet* set);

/// Error (1 - W)/2 of one strategy on a grid of dimensionless durations.
/// Grid points are independent and evaluated in parallel; results do not
/// depend on the thread count.
///
/// Throws InvalidArgument for ofdd/lodd without a set, for grid points
/// outside the set's coverage, or for a set built with a different tau_pi'.
DecoherenceCurve decoherence_curve(const NoiseSpectrum& spec, Strategy strategy, int n,
                                   std::span<const double> tau_grid,
                                   const SequenceSet* set = nullptr,
                                   double tau_pi_prime = 0.0);

// First duration at which the error reaches kCoherenceThreshold, linearly
// interpolated between the bracketing points. Throws NumericalError when the
// curve never gets there.
double coherence_time(const DecoherenceCurve& curve);
double coherence_time(std::span<const CurvePoint> points);

// `# key=value` header lines, then `tau_prime,error` rows.
void write_curve_csv(std::ostream& os, const DecoherenceCurve& curve);

struct MonteCarloOptions {
    int realizations = 10000;
    std::uint64_t seed = 1;
    int bins = 2048;
    int bootstrap_resamples = 200;
};

struct MonteCarloResult {
    double error = 0.0;
    double standard_error = 0.0;
    int realizations = 0;
};

/// Time-domain oracle for the coherence integral. Each realization draws the
/// frequency noise beta(t) = sum_k a_k cos(w_k t + phi_k) with uniform random
/// phases on a 2048-bin grid over the spectrum support (log spaced for
/// gamma < 0), a_k^2 = (8/pi) S'(w_k) dw_k, and integrates the toggled phase
/// int y(t) beta(t) dt with y flipping sign at each pulse center. Returns
/// (1 - |<cos phase>|)/2 with a bootstrap standard error.
///
/// Instantaneous pulses only: throws InvalidArgument if ctx.tau_pi_prime > 0.
/// Realization k uses a generator seeded from (seed, k) alone, so results are
/// bitwise independent of scheduling.
MonteCarloResult monte_carlo_error(const NoiseSpectrum& spec, const FilterContext& ctx,
                                   const MonteCarloOptions& opts = {});

// Single-threaded reference versions of the data-parallel kernels above.
namespace serial {
DecoherenceCurve decoherence_curve(const NoiseSpectrum& spec, Strategy strategy, int n,
                                   std::span<const double> tau_grid,
                                   const SequenceSet* set = nullptr,
                                   double tau_pi_prime = 0.0);
MonteCarloResult monte_carlo_error(const NoiseSpectrum& spec, const FilterContext& ctx,
                                   const MonteCarloOptions& opts = {});
}  // namespace serial

}  // namespace ddfilt
