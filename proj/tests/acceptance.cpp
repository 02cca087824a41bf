// Acceptance run: one PASS/FAIL line per criterion, with the measured values.
// Exit status is the number of failing criteria.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ddfilt/error.hpp"
#include "ddfilt/calibration.hpp"
#include "ddfilt/coherence.hpp"
#include "ddfilt/filter_function.hpp"
#include "ddfilt/optimizer.hpp"

using namespace ddfilt;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
    std::printf("criterion %d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
    v.back() = b;
    return v;
}

// Sorted random centers with a guaranteed minimum gap (and margin to 0, 1).
std::vector<double> random_deltas(std::mt19937_64& rng, int n, double gap) {
    const double slack = 1.0 - (n + 1) * gap;
    std::uniform_real_distribution<double> u(0.0, slack);
    std::vector<double> x(static_cast<std::size_t>(n));
    for (double& v : x) v = u(rng);
    std::sort(x.begin(), x.end());
    for (int j = 0; j < n; ++j) x[static_cast<std::size_t>(j)] += (j + 1) * gap;
    return x;
}

// ------------------------------------------------------------------ 1
void filter_identities() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> pick_n(1, 20);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst_zero = 0.0, worst_mean = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const int n = pick_n(rng);
        const double tau_pi = k % 2 ? 0.7 : 0.0;
        // Durations long against the pulses, so that at the sampled
        // frequencies the pulse factor cos(w tau_pi / 2) is ~1.
        const double tau = 1e7;
        const auto d = random_deltas(rng, n, 0.01);
        const FilterContext ctx{d, tau, tau_pi};
        worst_zero = std::max(worst_zero, std::abs(filter_value(ctx, 0.0)));
        // Mean over theta = w tau drawn uniformly from [1e3, 1e5].
        double sum = 0.0;
        const int samples = 4000;
        for (int s = 0; s < samples; ++s) sum += filter_value(ctx, (1e3 + 99e3 * unit(rng)) / tau);
        const double mean = sum / samples;
        worst_mean = std::max(worst_mean, std::abs(mean / (4.0 * n + 2.0) - 1.0));
    }
    const double dt = seconds_since(t0);
    report(1, worst_zero <= 1e-12 && worst_mean <= 0.10 && dt < 10.0,
           fmt("max|F(0)|=%.2e  worst mean deviation from 4n+2=%.2f%%  time=%.1fs", worst_zero,
               100 * worst_mean, dt));
}

// ------------------------------------------------------------------ 2
void area_oracle() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> pick_n(1, 10);
    std::uniform_real_distribution<double> pick_tau(0.1, 100.0);
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
        const int n = pick_n(rng);
        const double tau = pick_tau(rng);
        const double tau_pi = k % 2 ? 0.0 : 0.2;
        const auto d = random_deltas(rng, n, tau_pi / tau + 1e-3);
        const FilterContext ctx{d, tau, tau_pi};
        const double a = area_analytic(ctx);
        const double q = area_quadrature(ctx).value;
        worst = std::max(worst, std::abs(a - q) / std::abs(q));
    }
    const double dt = seconds_since(t0);
    report(2, worst <= 1e-8 && dt < 60.0,
           fmt("worst relative difference=%.2e  time=%.1fs", worst, dt));
}

// ------------------------------------------------------------------ 3
struct BuiltSet {
    SequenceSet set;
    double f1;
    double seconds;
    std::size_t warnings;
    double max_slope;  // largest |d delta / d tau'| between neighbours
};

BuiltSet build(int n, int points, double tau_pi_prime = 0.0) {
    OptimizerConfig cfg;
    cfg.tau_min = 0.01;
    cfg.tau_max = 30.0;
    cfg.points = points;
    const auto t0 = Clock::now();
    SetBuild b = build_ofdd_set(n, tau_pi_prime, cfg);
    const double dt = seconds_since(t0);
    double slope = 0.0;
    for (std::size_t i = 1; i < b.set.size(); ++i) {
        const double h = b.set[i].tau_prime - b.set[i - 1].tau_prime;
        for (std::size_t j = 0; j < b.set[i].deltas.size(); ++j) {
            slope = std::max(slope, std::abs(b.set[i].deltas[j] - b.set[i - 1].deltas[j]) / h);
        }
    }
    const double f1 = tau_F1(b.set).tau_prime;
    return {std::move(b.set), f1, dt, b.warnings.size(), slope};
}

void sets_criterion(BuiltSet& n6, BuiltSet& n10) {
    const BuiltSet s6 = build(6, 300), s10 = build(10, 300);
    n6 = build(6, 3000);
    n10 = build(10, 3000);
    const bool cont = n6.warnings == 0 && n10.warnings == 0;
    const bool full = cont && std::abs(n6.f1 - 15.8) <= 0.5 && std::abs(n10.f1 - 24.2) <= 1.0 &&
                      n6.seconds < 1800 && n10.seconds < 1800;
    const bool smoke = s6.warnings == 0 && s10.warnings == 0 && std::abs(s6.f1 - 15.8) <= 1.0 &&
                       std::abs(s10.f1 - 24.2) <= 2.0 && s6.seconds + s10.seconds < 180;
    report(3, full && smoke,
           fmt("3000 pts: n=6 tau'_F1=%.3f (15.8+-0.5, %.1fs), n=10 tau'_F1=%.3f (24.2+-1.0, %.1fs), "
               "jump warnings %zu/%zu, max slope %.3g/%.3g; 300 pts: %.3f / %.3f in %.1fs",
               n6.f1, n6.seconds, n10.f1, n10.seconds, n6.warnings, n10.warnings, n6.max_slope,
               n10.max_slope, s6.f1, s10.f1, s6.seconds + s10.seconds));
}

// ------------------------------------------------------------------ 4 and 5
std::vector<CurvePoint> lodd_points(const NoiseSpectrum& spec, const SequenceSet& seed,
                                    const std::vector<double>& grid) {
    OptimizerConfig cfg;
    const SetBuild b = build_lodd_set(spec, seed, grid, cfg);
    std::vector<CurvePoint> pts;
    for (const SequenceEntry& e : b.set.entries()) {
        pts.push_back({e.tau_prime, coherence(spec, FilterContext{e.deltas, e.tau_prime, 0.0}).error});
    }
    return pts;
}

void ohmic_criterion(const BuiltSet& n6, const BuiltSet& n10) {
    const auto t0 = Clock::now();
    const auto spec = NoiseSpectrum::ohmic();
    bool pass = true;
    std::string detail;
    for (const BuiltSet* b : {&n6, &n10}) {
        const int n = b->set.n();
        const auto grid = linspace(b->set.tau_prime_min(), b->set.tau_prime_max(), 300);
        const auto udd = decoherence_curve(spec, Strategy::udd, n, grid);
        const auto ofdd = decoherence_curve(spec, Strategy::ofdd, n, grid, &b->set);
        double worst_excess = 0.0;
        bool below = true;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (ofdd.points[i].error > udd.points[i].error) {
                below = false;
                worst_excess = std::max(worst_excess, ofdd.points[i].error - udd.points[i].error);
            }
        }
        const double ratio = coherence_time(ofdd) / coherence_time(udd);

        // LODD on 40 durations spread over the region where the error is >= 1e-6.
        double lo = grid.back();
        for (const CurvePoint& p : ofdd.points) {
            if (p.error >= 1e-6) {
                lo = p.duration;
                break;
            }
        }
        const auto lgrid = linspace(lo, b->set.tau_prime_max(), 40);
        const auto lodd = lodd_points(spec, b->set, lgrid);
        double worst_rel = 0.0, at = 0.0;
        for (const CurvePoint& p : lodd) {
            const double e_ofdd =
                coherence(spec, FilterContext{b->set.deltas_at(p.duration), p.duration, 0.0}).error;
            const double rel = std::abs(e_ofdd - p.error) / p.error;
            if (rel > worst_rel) {
                worst_rel = rel;
                at = p.duration;
            }
        }
        pass = pass && below && std::abs(ratio - 1.5) <= 0.2 && worst_rel <= 0.10;
        detail += fmt("n=%d: ofdd<=udd %s (worst excess %.1e), tc ratio %.3f (1.5+-0.2), "
                      "worst |ofdd-lodd|/lodd %.1f%% at tau'=%.2f (<=10%%); ",
                      n, below ? "yes" : "no", worst_excess, ratio, 100 * worst_rel, at);
    }
    report(4, pass, detail + fmt("time=%.1fs", seconds_since(t0)));
}

void one_over_f_criterion(const BuiltSet& n6, const BuiltSet& n10) {
    const auto t0 = Clock::now();
    const auto spec = NoiseSpectrum::one_over_f();
    bool pass = true;
    std::string detail;
    for (const BuiltSet* b : {&n6, &n10}) {
        const int n = b->set.n();
        const auto grid = linspace(b->set.tau_prime_min(), b->set.tau_prime_max(), 300);
        const double t_cpmg = coherence_time(decoherence_curve(spec, Strategy::cpmg, n, grid));
        const double t_udd = coherence_time(decoherence_curve(spec, Strategy::udd, n, grid));
        const double t_ofdd = coherence_time(decoherence_curve(spec, Strategy::ofdd, n, grid, &b->set));
        // LODD is only computed around the crossings.
        const double lo = 0.8 * std::min({t_cpmg, t_udd, t_ofdd});
        const double hi = std::min(b->set.tau_prime_max(), 1.3 * std::max({t_cpmg, t_udd, t_ofdd}));
        double t_lodd = NAN;
        try {
            t_lodd = coherence_time(lodd_points(spec, b->set, linspace(lo, hi, 16)));
        } catch (const NumericalError&) {
        }
        const double mx = std::max({t_cpmg, t_udd, t_ofdd, t_lodd});
        const double mn = std::min({t_cpmg, t_udd, t_ofdd, t_lodd});
        const double spread = mx / mn - 1.0;
        pass = pass && std::isfinite(t_lodd) && spread <= 0.30;
        detail += fmt("n=%d: tc' cpmg %.3f udd %.3f ofdd %.3f lodd %.3f, spread %.1f%%; ", n, t_cpmg,
                      t_udd, t_ofdd, t_lodd, 100 * spread);
    }
    report(5, pass, detail + fmt("(<=30%%) time=%.1fs", seconds_since(t0)));
}

// ------------------------------------------------------------------ 6
void monte_carlo_criterion() {
    const auto t0 = Clock::now();
    MonteCarloOptions mc;
    mc.realizations = 10000;
    int bad = 0, cases = 0;
    double worst_sigma = 0.0, worst_rel = 0.0;
    for (const auto& spec : {NoiseSpectrum::ohmic(), NoiseSpectrum::one_over_f()}) {
        for (int n : {0, 1, 2}) {
            for (double tau : {1.0, 3.0, 6.0}) {
                const auto d = cpmg_deltas(n);
                const FilterContext ctx{d, tau, 0.0};
                const double exact = coherence(spec, ctx).error;
                mc.seed = static_cast<std::uint64_t>(++cases);
                const auto r = monte_carlo_error(spec, ctx, mc);
                const double diff = std::abs(r.error - exact);
                if (diff > std::max(0.05 * exact, 3.0 * r.standard_error)) ++bad;
                worst_rel = std::max(worst_rel, diff / exact);
                worst_sigma = std::max(worst_sigma, diff / r.standard_error);
            }
        }
    }
    const double dt = seconds_since(t0);
    report(6, bad == 0 && dt < 300,
           fmt("%d/%d cases outside max(5%%, 3 sigma); worst %.2f%% rel, %.2f sigma; time=%.1fs", bad,
               cases, 100 * worst_rel, worst_sigma, dt));
}

// ------------------------------------------------------------------ 7
void calibration_criterion(const SequenceSet& set) {
    const auto t0 = Clock::now();
    const double wd = 2.0 * std::numbers::pi * 500.0;
    auto run = [&](double omega_d, int shots, std::uint64_t seed) {
        SimulatedProbe p(NoiseSpectrum::ohmic(1.0, omega_d), 0.0, shots, seed);
        const double tc = measure_coherence_time(p, set.n(), Strategy::cpmg).tau_c;
        return std::pair{tc, golden_section_select(p, set, tc)};
    };
    const auto [tc0, exact] = run(wd, 0, 1);
    const double exact_err = std::abs(exact.omega_d_estimate / wd - 1.0);
    int max_it = exact.iterations;
    double worst_noisy = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto r = run(wd, 1000, seed).second;
        max_it = std::max(max_it, r.iterations);
        worst_noisy = std::max(worst_noisy, std::abs(r.omega_d_estimate / wd - 1.0));
    }
    const auto [tc_half, half] = run(wd / 2, 0, 1);
    const bool same = half.index == exact.index;
    const double dur_ratio = tc_half / tc0;
    report(7, exact_err <= 0.05 && worst_noisy <= 0.15 && max_it <= 15 && same &&
                  std::abs(dur_ratio - 2.0) < 1e-3,
           fmt("noiseless omega_d error %.2f%% (<=5%%), shots=1000 worst %.2f%% over 5 seeds (<=15%%), "
               "max iterations %d (<=15), halved cutoff: entry %zu vs %zu, duration ratio %.4f; "
               "time=%.1fs",
               100 * exact_err, 100 * worst_noisy, max_it, half.index, exact.index, dur_ratio,
               seconds_since(t0)));
}

// ------------------------------------------------------------------ 8
void finite_pulse_criterion(const SequenceSet& instantaneous) {
    const auto t0 = Clock::now();
    const double wd = 2.0 * std::numbers::pi * 500.0, tau_pi = 229e-6, tau_pi_prime = wd * tau_pi;
    // Noise strength chosen so that CPMG's coherence time is 2.8 ms.
    const double tc_prime = wd * 2.8e-3;
    const double chi1 = coherence(NoiseSpectrum::ohmic(1.0),
                                  FilterContext{cpmg_deltas(6), tc_prime, tau_pi_prime}).chi;
    const double alpha = -std::log(1.0 - 2.0 * kCoherenceThreshold) / chi1;
    const BuiltSet finite = build(6, 3000, tau_pi_prime);

    SimulatedProbe probe(NoiseSpectrum::ohmic(alpha, wd), tau_pi, 0, 1, 1e-4, 1.0);
    const double tc = measure_coherence_time(probe, 6, Strategy::cpmg).tau_c;
    const auto r = golden_section_select(probe, finite.set, tc);
    const double e_ofdd = probe.measure(scaled_schedule(finite.set, r.omega_d_estimate, tc, tau_pi)).error;
    const double e_cpmg = probe.measure(make_cpmg(6, tc, tau_pi)).error;
    const double e_udd = probe.measure(make_udd(6, tc, tau_pi)).error;

    // Same loop with the instantaneous-pulse set, for reference.
    double e_inst = NAN;
    try {
        const auto ri = golden_section_select(probe, instantaneous, tc);
        e_inst = probe.measure(scaled_schedule(instantaneous, ri.omega_d_estimate, tc, tau_pi)).error;
    } catch (const std::exception&) {
    }
    report(8, e_ofdd < e_udd && e_ofdd < e_cpmg,
           fmt("omega_d tau_pi=%.3f, tau_c(cpmg)=%.3f ms: error ofdd %.3e (calibrated omega_d %.1f%% "
               "off), cpmg %.3e, udd %.3e; instantaneous-pulse set gives %.3e; time=%.1fs",
               tau_pi_prime, 1e3 * tc, e_ofdd, 100 * (r.omega_d_estimate / wd - 1.0), e_cpmg, e_udd,
               e_inst, seconds_since(t0)));
}

// ------------------------------------------------------------------ 9
int sh(const std::string& cmd) {
    const int s = std::system((cmd + " > /dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void determinism_criterion() {
    const auto t0 = Clock::now();
    const fs::path root = fs::temp_directory_path() / "ddfilt_acceptance";
    fs::remove_all(root);
    const fs::path run = root / "run", snap = root / "snapshot";
    fs::create_directories(run);
    const std::string cli = DDFILT_CLI_PATH;
    const std::string set = (run / "set.csv").string();
    bool ok = sh(cli + " ofdd --n 6 --grid 200 --tau-max 30 --out " + set) == 0;
    ok = ok && sh(cli + " curves --strategies cpmg,udd,ofdd,lodd --lodd-points 6 --set " + set +
                  " --tau-grid 2:28:60 --out " + (run / "curves").string()) == 0;
    ok = ok && sh(cli + " calibrate --set " + set + " --shots 1000 --seed 5 --out " +
                  (run / "cal").string()) == 0;
    ok = ok && sh(cli + " oracle --n 2 --tau-prime 3 --realizations 2000 --seed 9 --out " +
                  (run / "oracle.csv").string()) == 0;
    if (!ok) {
        report(9, false, "a CLI run failed");
        return;
    }
    fs::copy(run, snap, fs::copy_options::recursive);
    std::vector<fs::path> manifests;
    for (const auto& e : fs::recursive_directory_iterator(snap)) {
        if (e.path().string().ends_with("manifest.json")) manifests.push_back(e.path());
    }
    for (const fs::path& m : manifests) ok = ok && sh(cli + " replay " + m.string()) == 0;
    int files = 0, differ = 0;
    for (const auto& e : fs::recursive_directory_iterator(snap)) {
        if (!e.is_regular_file()) continue;
        ++files;
        if (slurp(e.path()) != slurp(run / fs::relative(e.path(), snap))) ++differ;
    }
    report(9, ok && differ == 0 && files > 0,
           fmt("%zu manifests replayed, %d/%d files differ; time=%.1fs", manifests.size(), differ, files,
               seconds_since(t0)));
    fs::remove_all(root);
}

}  // namespace

// A criterion that throws counts as failed.
void guarded(int id, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(id, false, std::string("threw: ") + e.what());
    }
}

int main() {
    guarded(1, filter_identities);
    guarded(2, area_oracle);
    BuiltSet n6{SequenceSet(1, 0.0, Generator::ofdd, {{1.0, {0.5}}}), 0, 0, 0, 0};
    BuiltSet n10 = n6;
    guarded(3, [&] { sets_criterion(n6, n10); });
    guarded(4, [&] { ohmic_criterion(n6, n10); });
    guarded(5, [&] { one_over_f_criterion(n6, n10); });
    guarded(6, monte_carlo_criterion);
    guarded(7, [&] { calibration_criterion(n6.set); });
    guarded(8, [&] { finite_pulse_criterion(n6.set); });
    guarded(9, determinism_criterion);
    std::printf("%d criteria failed\n", failures);
    return failures;
}
