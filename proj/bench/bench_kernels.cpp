// Serial reference vs OpenMP kernels: wall time and largest difference.
//
//   ddfilt-bench [repeats]
//
// DDFILT_THREADS caps the parallel thread count.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <vector>

#include "ddfilt/coherence.hpp"
#include "ddfilt/optimizer.hpp"
#include "ddfilt/parallel.hpp"

using namespace ddfilt;
using Clock = std::chrono::steady_clock;

namespace {

double best_of(int repeats, const std::function<void()>& body) {
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = Clock::now();
        body();
        best = std::min(best, std::chrono::duration<double>(Clock::now() - t0).count());
    }
    return best;
}

void report(const char* name, double serial_s, double parallel_s, double max_diff) {
    std::printf("%-28s serial %9.4f s  parallel %9.4f s  speedup %5.2fx  max|diff| %.3g\n", name,
                serial_s, parallel_s, serial_s / parallel_s, max_diff);
}

}  // namespace

int main(int argc, char** argv) {
    const int repeats = argc > 1 ? std::max(1, std::atoi(argv[1])) : 3;
    std::printf("threads: %d\n", thread_count());

    const NoiseSpectrum ohmic = NoiseSpectrum::ohmic();
    const NoiseSpectrum pink = NoiseSpectrum::one_over_f();
    std::vector<double> grid(400);
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = 0.05 + 0.075 * static_cast<double>(i);

    for (const auto* spec : {&ohmic, &pink}) {
        DecoherenceCurve a, b;
        const double ts = best_of(repeats, [&] {
            a = serial::decoherence_curve(*spec, Strategy::udd, 10, grid);
        });
        const double tp = best_of(repeats, [&] {
            b = decoherence_curve(*spec, Strategy::udd, 10, grid);
        });
        double diff = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            diff = std::max(diff, std::abs(a.points[i].error - b.points[i].error));
        }
        report(spec == &ohmic ? "curve udd n=10 ohmic" : "curve udd n=10 1/f", ts, tp, diff);
    }

    {
        const std::vector<double> d = cpmg_deltas(2);
        const FilterContext ctx{d, 3.0, 0.0};
        MonteCarloOptions mc;
        mc.realizations = 4000;
        MonteCarloResult a, b;
        const double ts = best_of(repeats, [&] { a = serial::monte_carlo_error(ohmic, ctx, mc); });
        const double tp = best_of(repeats, [&] { b = monte_carlo_error(ohmic, ctx, mc); });
        report("monte carlo n=2 (4000)", ts, tp,
               std::max(std::abs(a.error - b.error), std::abs(a.standard_error - b.standard_error)));
    }

    {
        OptimizerConfig cfg;
        cfg.points = 200;
        cfg.tau_max = 20.0;
        const SetBuild seed = build_ofdd_set(6, 0.0, cfg);
        std::vector<double> lgrid;
        for (double t = 2.0; t <= 18.0; t += 1.0) lgrid.push_back(t);
        SetBuild a = seed, b = seed;
        const double ts = best_of(repeats, [&] {
            a = serial::build_lodd_set(ohmic, seed.set, lgrid, cfg);
        });
        const double tp = best_of(repeats, [&] { b = build_lodd_set(ohmic, seed.set, lgrid, cfg); });
        double diff = 0.0;
        for (std::size_t i = 0; i < lgrid.size(); ++i) {
            for (std::size_t j = 0; j < a.set[i].deltas.size(); ++j) {
                diff = std::max(diff, std::abs(a.set[i].deltas[j] - b.set[i].deltas[j]));
            }
        }
        report("lodd n=6 ohmic (17 points)", ts, tp, diff);
    }
    return 0;
}
