#include "ddfilt/coherence.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <ostream>
#include <random>

#include "ddfilt/error.hpp"
#include "ddfilt/parallel.hpp"

namespace ddfilt {

CoherenceResult coherence_from_chi(double chi) {
    CoherenceResult r;
    r.chi = chi;
    r.w = std::exp(-chi);
    r.error = 0.5 * (1.0 - r.w);
    return r;
}

namespace {

QuadratureOptions with_floor(QuadratureOptions opts) {
    // Below ~1e-18 the filter function itself is rounding noise.
    opts.abs_tol = std::max(opts.abs_tol, 1e-18);
    return opts;
}

std::vector<double> chi_breakpoints(const NoiseSpectrum& spec, const FilterContext& ctx,
                                    double lo, double hi) {
    std::vector<double> pts = oscillation_breakpoints(lo, hi, ctx.tau_prime + ctx.tau_pi_prime);
    std::vector<double> extra = spec.kinks();
    if (lo > 0.0) {
        // Geometric points resolve w'^gamma bodies that start at a low cutoff.
        for (double x = 2.0 * lo; x < std::min(hi, 1.0); x *= 2.0) extra.push_back(x);
    }
    return merge_breakpoints(std::move(pts), extra);
}

}  // namespace

CoherenceResult coherence(const NoiseSpectrum& spec, const FilterContext& ctx,
                          const QuadratureOptions& opts) {
    const double lo = std::max(spec.support_low(), 0.0);
    const double hi = spec.support_high();
    if (!(hi > lo) || ctx.tau_prime == 0.0) return coherence_from_chi(0.0);
    const std::vector<double> pts = chi_breakpoints(spec, ctx, lo, hi);
    auto integrand = [&](double w) {
        const double s = spec(w);
        if (s == 0.0) return 0.0;
        return s * filter_value(ctx, w) / (w * w);
    };
    const QuadratureResult r = integrate_adaptive(integrand, pts, with_floor(opts));
    const double chi = 2.0 / std::numbers::pi * r.value;
    return coherence_from_chi(std::max(chi, 0.0));
}

CoherenceResult coherence(const NoiseSpectrum& spec, const PulseSequence& seq,
                          const QuadratureOptions& opts) {
    const FilterContext ctx{seq.deltas(), spec.omega_d() * seq.tau(),
                            spec.omega_d() * seq.tau_pi()};
    return coherence(spec, ctx, opts);
}

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::cpmg: return "cpmg";
        case Strategy::udd: return "udd";
        case Strategy::ofdd: return "ofdd";
        case Strategy::lodd: return "lodd";
        case Strategy::free: return "free";
    }
    return "unknown";
}

Strategy parse_strategy(std::string_view tag) {
    if (tag == "cpmg") return Strategy::cpmg;
    if (tag == "udd") return Strategy::udd;
    if (tag == "ofdd") return Strategy::ofdd;
    if (tag == "lodd") return Strategy::lodd;
    if (tag == "free") return Strategy::free;
    throw InvalidArgument("unknown strategy '" + std::string(tag) + "'");
}

std::vector<double> strategy_deltas(Strategy strategy, int n, double tau_prime,
                                    const SequenceSet* set) {
    switch (strategy) {
        case Strategy::free: return {};
        case Strategy::cpmg: return cpmg_deltas(n);
        case Strategy::udd: return udd_deltas(n);
        case Strategy::ofdd:
        case Strategy::lodd:
            if (set == nullptr) {
                throw InvalidArgument(std::string(to_string(strategy)) +
                                      " needs a sequence set");
            }
            return set->deltas_at(tau_prime);
    }
    return {};
}

namespace {

void check_curve_inputs(Strategy strategy, int n, std::span<const double> grid,
                        const SequenceSet* set, double tau_pi_prime) {
    if (n < 0 || (strategy != Strategy::free && n < 1)) {
        throw InvalidArgument("pulse count must be >= 1 for pulsed strategies");
    }
    double prev = 0.0;
    for (double t : grid) {
        if (!(t > prev)) throw InvalidArgument("duration grid must be positive and increasing");
        prev = t;
    }
    if (strategy == Strategy::ofdd || strategy == Strategy::lodd) {
        if (set == nullptr) {
            throw InvalidArgument(std::string(to_string(strategy)) + " needs a sequence set");
        }
        if (set->n() != n) throw InvalidArgument("sequence set has a different pulse count");
        if (set->tau_pi_prime() != tau_pi_prime) {
            throw InvalidArgument("sequence set was built for a different tau_pi'");
        }
        if (!grid.empty() && (!set->covers(grid.front()) || !set->covers(grid.back()))) {
            throw InvalidArgument("duration grid outside the sequence set coverage");
        }
    }
}

CurvePoint curve_point(const NoiseSpectrum& spec, Strategy strategy, int n, double tau_prime,
                       const SequenceSet* set, double tau_pi_prime) {
    const std::vector<double> deltas = strategy_deltas(strategy, n, tau_prime, set);
    validate_deltas(deltas, tau_pi_prime / tau_prime);
    const FilterContext ctx{deltas, tau_prime, tau_pi_prime};
    return {tau_prime, coherence(spec, ctx).error};
}

DecoherenceCurve empty_curve(const NoiseSpectrum& spec, Strategy strategy, int n,
                             std::size_t size) {
    DecoherenceCurve curve;
    curve.strategy = strategy;
    curve.n = strategy == Strategy::free ? 0 : n;
    curve.spectrum_id = spec.describe();
    curve.points.resize(size);
    return curve;
}

}  // namespace

DecoherenceCurve decoherence_curve(const NoiseSpectrum& spec, Strategy strategy, int n,
                                   std::span<const double> tau_grid, const SequenceSet* set,
                                   double tau_pi_prime) {
    check_curve_inputs(strategy, n, tau_grid, set, tau_pi_prime);
    DecoherenceCurve curve = empty_curve(spec, strategy, n, tau_grid.size());
    const long count = static_cast<long>(tau_grid.size());
    // Exceptions cannot cross the parallel region; the first one is rethrown.
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
    for (long i = 0; i < count; ++i) {
        try {
            curve.points[static_cast<std::size_t>(i)] =
                curve_point(spec, strategy, n, tau_grid[static_cast<std::size_t>(i)], set,
                            tau_pi_prime);
        } catch (...) {
#pragma omp critical(ddfilt_curve_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return curve;
}

DecoherenceCurve serial::decoherence_curve(const NoiseSpectrum& spec, Strategy strategy, int n,
                                           std::span<const double> tau_grid,
                                           const SequenceSet* set, double tau_pi_prime) {
    check_curve_inputs(strategy, n, tau_grid, set, tau_pi_prime);
    DecoherenceCurve curve = empty_curve(spec, strategy, n, tau_grid.size());
    for (std::size_t i = 0; i < tau_grid.size(); ++i) {
        curve.points[i] = curve_point(spec, strategy, n, tau_grid[i], set, tau_pi_prime);
    }
    return curve;
}

double coherence_time(std::span<const CurvePoint> points) {
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].error >= kCoherenceThreshold) {
            if (i == 0) return points[0].duration;
            const CurvePoint& a = points[i - 1];
            const CurvePoint& b = points[i];
            const double t = (kCoherenceThreshold - a.error) / (b.error - a.error);
            return a.duration + t * (b.duration - a.duration);
        }
    }
    throw NumericalError("decoherence curve never reaches 1/e of the asymptotic error");
}

double coherence_time(const DecoherenceCurve& curve) { return coherence_time(curve.points); }

void write_curve_csv(std::ostream& os, const DecoherenceCurve& curve) {
    os << "# strategy=" << to_string(curve.strategy) << '\n';
    os << "# n=" << curve.n << '\n';
    os << "# spectrum=" << curve.spectrum_id << '\n';
    os << "tau_prime,error\n";
    for (const CurvePoint& p : curve.points) {
        os << format_double(p.duration) << ',' << format_double(p.error) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Monte Carlo oracle

namespace {

struct SynthesisGrid {
    std::vector<double> omega;
    std::vector<double> amplitude;
    // int y(t) cos(w_k t + p) dt = C_k cos p + D_k sin p.
    std::vector<double> c;
    std::vector<double> d;
};

SynthesisGrid make_grid(const NoiseSpectrum& spec, const FilterContext& ctx, int bins) {
    const double lo = std::max(spec.support_low(), 0.0);
    const double hi = spec.support_high();
    SynthesisGrid g;
    if (!(hi > lo) || bins < 1) return g;
    const bool log_grid = spec.prefers_log_grid() && lo > 0.0;
    std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
    for (int k = 0; k <= bins; ++k) {
        const double f = static_cast<double>(k) / bins;
        edges[static_cast<std::size_t>(k)] =
            log_grid ? lo * std::pow(hi / lo, f) : lo + (hi - lo) * f;
    }
    // Switching times of the toggling function, in units where tau = tau'.
    std::vector<double> t{0.0};
    for (double dl : ctx.deltas) t.push_back(dl * ctx.tau_prime);
    t.push_back(ctx.tau_prime);

    for (int k = 0; k < bins; ++k) {
        const double a = edges[static_cast<std::size_t>(k)];
        const double b = edges[static_cast<std::size_t>(k) + 1];
        const double w = log_grid ? std::sqrt(a * b) : 0.5 * (a + b);
        const double s = spec(w);
        if (!(s > 0.0)) continue;
        double ck = 0.0;
        double dk = 0.0;
        double sign = 1.0;
        for (std::size_t seg = 0; seg + 1 < t.size(); ++seg) {
            ck += sign * (std::sin(w * t[seg + 1]) - std::sin(w * t[seg])) / w;
            dk += sign * (std::cos(w * t[seg + 1]) - std::cos(w * t[seg])) / w;
            sign = -sign;
        }
        g.omega.push_back(w);
        g.amplitude.push_back(std::sqrt(8.0 / std::numbers::pi * s * (b - a)));
        g.c.push_back(ck);
        g.d.push_back(dk);
    }
    return g;
}

std::mt19937_64 stream_for(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double realization_cosine(const SynthesisGrid& g, std::uint64_t seed, std::uint64_t index) {
    std::mt19937_64 rng = stream_for(seed, index);
    double phase = 0.0;
    for (std::size_t k = 0; k < g.omega.size(); ++k) {
        const double p = 2.0 * std::numbers::pi * unit_uniform(rng);
        phase += g.amplitude[k] * (g.c[k] * std::cos(p) + g.d[k] * std::sin(p));
    }
    return std::cos(phase);
}

MonteCarloResult summarize(const std::vector<double>& cosines, const MonteCarloOptions& opts) {
    MonteCarloResult out;
    out.realizations = static_cast<int>(cosines.size());
    double sum = 0.0;
    for (double c : cosines) sum += c;
    const double mean = sum / static_cast<double>(cosines.size());
    out.error = 0.5 * (1.0 - std::abs(mean));

    if (opts.bootstrap_resamples > 1) {
        std::mt19937_64 rng = stream_for(opts.seed, ~std::uint64_t{0});
        const std::size_t m = cosines.size();
        double acc = 0.0;
        double acc2 = 0.0;
        for (int b = 0; b < opts.bootstrap_resamples; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i) s += cosines[rng() % m];
            const double e = 0.5 * (1.0 - std::abs(s / static_cast<double>(m)));
            acc += e;
            acc2 += e * e;
        }
        const double nb = opts.bootstrap_resamples;
        const double var = std::max(0.0, (acc2 - acc * acc / nb) / (nb - 1.0));
        out.standard_error = std::sqrt(var);
    }
    return out;
}

void check_mc_inputs(const FilterContext& ctx, const MonteCarloOptions& opts) {
    if (ctx.tau_pi_prime > 0.0) {
        throw InvalidArgument("Monte Carlo oracle supports instantaneous pulses only");
    }
    if (opts.realizations < 1) throw InvalidArgument("need at least one realization");
    if (opts.bins < 1) throw InvalidArgument("need at least one frequency bin");
    validate_deltas(ctx.deltas, 0.0);
}

}  // namespace

MonteCarloResult monte_carlo_error(const NoiseSpectrum& spec, const FilterContext& ctx,
                                   const MonteCarloOptions& opts) {
    check_mc_inputs(ctx, opts);
    const SynthesisGrid grid = make_grid(spec, ctx, opts.bins);
    std::vector<double> cosines(static_cast<std::size_t>(opts.realizations));
    const long count = opts.realizations;
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (long r = 0; r < count; ++r) {
        cosines[static_cast<std::size_t>(r)] =
            realization_cosine(grid, opts.seed, static_cast<std::uint64_t>(r));
    }
    return summarize(cosines, opts);
}

MonteCarloResult serial::monte_carlo_error(const NoiseSpectrum& spec, const FilterContext& ctx,
                                           const MonteCarloOptions& opts) {
    check_mc_inputs(ctx, opts);
    const SynthesisGrid grid = make_grid(spec, ctx, opts.bins);
    std::vector<double> cosines(static_cast<std::size_t>(opts.realizations));
    for (int r = 0; r < opts.realizations; ++r) {
        cosines[static_cast<std::size_t>(r)] =
            realization_cosine(grid, opts.seed, static_cast<std::uint64_t>(r));
    }
    return summarize(cosines, opts);
}

}  // namespace ddfilt
