// ddfilt: optimized-filtration dynamical decoupling from the command line.
//
// Exit codes: 0 success, 1 usage, 2 numerical failure, 3 probe failure.

#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "ddfilt/calibration.hpp"
#include "ddfilt/error.hpp"
#include "ddfilt/optimizer.hpp"
#include "manifest.hpp"

namespace {

using nlohmann::json;
constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

struct SpectrumFlags {
    std::string kind = "ohmic";
    double alpha = kUnset;
    double gamma = kUnset;
    std::string cutoff;
    double omega_low = kUnset;

    void add(CLI::App* app, const std::string& prefix = "") {
        app->add_option("--" + prefix + "spectrum", kind,
                        "ohmic, one-over-f, ambient or file:<csv>")
            ->capture_default_str();
        app->add_option("--" + prefix + "alpha", alpha, "noise strength (default 1)");
        app->add_option("--" + prefix + "gamma", gamma, "power-law exponent");
        app->add_option("--" + prefix + "cutoff", cutoff, "sharp or soft high-frequency cutoff");
        app->add_option("--" + prefix + "omega-low", omega_low, "low-frequency cutoff (omega')");
    }
    json resolve() const {
        return ddfilt::cli::resolve_spectrum(kind, alpha, gamma, cutoff, omega_low);
    }
};

// "min:max:points"
json parse_grid(const std::string& text) {
    std::istringstream is(text);
    double lo = 0.0, hi = 0.0;
    int points = 0;
    char c1 = 0, c2 = 0;
    if (!(is >> lo >> c1 >> hi >> c2 >> points) || c1 != ':' || c2 != ':' || !is.eof()) {
        throw ddfilt::InvalidArgument("--tau-grid expects min:max:points, got '" + text + "'");
    }
    return {{"min", lo}, {"max", hi}, {"points", points}};
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream is(text);
    for (std::string item; std::getline(is, item, ',');) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dynamical decoupling sequences optimized for noise filtration"};
    app.set_version_flag("--version", ddfilt::cli::kToolVersion);
    app.require_subcommand(1);

    // ofdd
    auto* ofdd = app.add_subcommand("ofdd", "Build an OFDD sequence set by continuation");
    int of_n = 0;
    double of_tau_pi = 0.0, of_tau_max = 0.0, of_tau_min = 0.01;
    int of_grid = 3000;
    std::string of_out;
    ddfilt::OptimizerConfig of_cfg;
    ofdd->add_option("--n", of_n, "number of pi pulses (1..20)")->required();
    ofdd->add_option("--tau-pi-prime", of_tau_pi, "dimensionless pulse length")->capture_default_str();
    ofdd->add_option("--tau-min", of_tau_min, "first grid point")->capture_default_str();
    ofdd->add_option("--tau-max", of_tau_max, "last grid point (default 2 n pi)");
    ofdd->add_option("--grid", of_grid, "grid points")->capture_default_str();
    ofdd->add_option("--max-evaluations", of_cfg.max_evaluations, "objective evaluations per simplex run")
        ->capture_default_str();
    ofdd->add_option("--rel-tol", of_cfg.rel_tol, "relative objective tolerance")->capture_default_str();
    ofdd->add_option("--initial-step", of_cfg.initial_step, "initial simplex step")->capture_default_str();
    ofdd->add_option("--restarts", of_cfg.restarts, "simplex restarts per grid point")->capture_default_str();
    ofdd->add_option("--out", of_out, "sequence set file")->required();

    // curves
    auto* curves = app.add_subcommand("curves", "Decoherence curves for several strategies");
    SpectrumFlags cu_spec;
    cu_spec.add(curves);
    std::string cu_strategies = "cpmg,udd,ofdd,lodd", cu_set, cu_grid, cu_out;
    int cu_n = -1, cu_lodd_points = 0;
    double cu_tau_pi = 0.0;
    curves->add_option("--strategies", cu_strategies, "comma separated: cpmg,udd,ofdd,lodd,free")
        ->capture_default_str();
    curves->add_option("--n", cu_n, "number of pi pulses (default: from --set)");
    curves->add_option("--set", cu_set, "OFDD set file (needed for ofdd and lodd)");
    curves->add_option("--tau-grid", cu_grid, "min:max:points (default: set range, 300 points)");
    curves->add_option("--tau-pi-prime", cu_tau_pi, "dimensionless pulse length")->capture_default_str();
    curves->add_option("--lodd-points", cu_lodd_points, "LODD optimization points (0: whole grid)")
        ->capture_default_str();
    curves->add_option("--out", cu_out, "output directory")->required();

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "Feedback calibration of an OFDD set");
    std::string ca_probe = "sim", ca_set, ca_out, ca_strategy = "cpmg";
    SpectrumFlags ca_spec;
    ca_spec.add(cal, "probe-");
    double ca_omega_d = 2.0 * std::numbers::pi * 500.0, ca_tau_pi = 0.0, ca_timeout = 60.0;
    double ca_min_d = 1e-6, ca_max_d = 10.0;
    int ca_shots = 1000, ca_n = -1;
    std::uint64_t ca_seed = 1;
    ddfilt::GoldenSectionOptions ca_gs;
    cal->add_option("--probe", ca_probe, "sim or exec:<command>")->capture_default_str();
    cal->add_option("--probe-omega-d", ca_omega_d, "hidden cutoff of the simulated probe (rad/s)")
        ->capture_default_str();
    cal->add_option("--shots", ca_shots, "averages per simulated measurement (0: exact)")
        ->capture_default_str();
    cal->add_option("--seed", ca_seed, "simulated probe seed")->capture_default_str();
    cal->add_option("--tau-pi", ca_tau_pi, "pi pulse length (s)")->capture_default_str();
    cal->add_option("--set", ca_set, "OFDD set file")->required();
    cal->add_option("--n", ca_n, "number of pi pulses (default: from --set)");
    cal->add_option("--strategy", ca_strategy, "sequence for the coherence time: cpmg or udd")
        ->capture_default_str();
    cal->add_option("--min-duration", ca_min_d, "shortest probe duration (s)")->capture_default_str();
    cal->add_option("--max-duration", ca_max_d, "longest probe duration (s)")->capture_default_str();
    cal->add_option("--timeout", ca_timeout, "external probe timeout per call (s)")->capture_default_str();
    cal->add_option("--min-bracket", ca_gs.min_bracket, "stop below this many set entries")
        ->capture_default_str();
    cal->add_option("--noise-factor", ca_gs.noise_factor, "stop when the bracket is within this many sigma")
        ->capture_default_str();
    cal->add_option("--max-iterations", ca_gs.max_iterations, "golden-section iteration cap")
        ->capture_default_str();
    cal->add_option("--out", ca_out, "output directory")->required();

    // oracle
    auto* oracle = app.add_subcommand("oracle", "Compare the coherence integral with Monte Carlo");
    SpectrumFlags or_spec;
    or_spec.add(oracle);
    int or_n = 0, or_realizations = 10000, or_bins = 2048;
    double or_tau = 1.0, or_tau_pi = 0.0;
    std::uint64_t or_seed = 1;
    std::string or_strategy = "cpmg", or_out;
    oracle->add_option("--n", or_n, "number of pi pulses")->capture_default_str();
    oracle->add_option("--strategy", or_strategy, "cpmg or udd")->capture_default_str();
    oracle->add_option("--tau-prime", or_tau, "dimensionless duration")->capture_default_str();
    oracle->add_option("--tau-pi-prime", or_tau_pi, "must be 0")->capture_default_str();
    oracle->add_option("--realizations", or_realizations, "noise realizations")->capture_default_str();
    oracle->add_option("--bins", or_bins, "frequency bins of the synthesized noise")->capture_default_str();
    oracle->add_option("--seed", or_seed, "random seed")->capture_default_str();
    oracle->add_option("--out", or_out, "output CSV")->required();

    // replay
    auto* rep = app.add_subcommand("replay", "Re-run a manifest");
    std::string rep_manifest, rep_out_dir;
    rep->add_option("manifest", rep_manifest, "manifest JSON")->required();
    rep->add_option("--out-dir", rep_out_dir, "write outputs here instead of the original paths");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (ofdd->parsed()) {
            json p;
            p["n"] = of_n;
            p["tau_pi_prime"] = of_tau_pi;
            p["tau_min"] = of_tau_min;
            p["tau_max"] = of_tau_max > 0.0 ? of_tau_max : 2.0 * of_n * std::numbers::pi;
            p["grid"] = of_grid;
            p["max_evaluations"] = of_cfg.max_evaluations;
            p["rel_tol"] = of_cfg.rel_tol;
            p["initial_step"] = of_cfg.initial_step;
            p["restarts"] = of_cfg.restarts;
            p["out"] = of_out;
            ddfilt::cli::run_ofdd(p);
        } else if (curves->parsed()) {
            json p;
            p["spectrum"] = cu_spec.resolve();
            const std::vector<std::string> strategies = split_list(cu_strategies);
            if (strategies.empty()) throw ddfilt::InvalidArgument("--strategies is empty");
            p["strategies"] = strategies;
            json grid;
            if (!cu_set.empty()) {
                const ddfilt::SequenceSet set = ddfilt::load_sequence_set(cu_set);
                if (cu_n < 0) cu_n = set.n();
                grid = {{"min", set.tau_prime_min()}, {"max", set.tau_prime_max()}, {"points", 300}};
            }
            if (cu_n < 0) throw ddfilt::InvalidArgument("--n is required without --set");
            if (grid.is_null()) {
                grid = {{"min", 0.01}, {"max", 2.0 * std::numbers::pi * (cu_n + 1)}, {"points", 300}};
            }
            if (!cu_grid.empty()) grid = parse_grid(cu_grid);
            p["n"] = cu_n;
            p["set"] = cu_set;
            p["tau_grid"] = grid;
            p["tau_pi_prime"] = cu_tau_pi;
            p["lodd_points"] = cu_lodd_points;
            p["out"] = cu_out;
            ddfilt::cli::run_curves(p);
        } else if (cal->parsed()) {
            json p;
            json probe;
            if (ca_probe == "sim") {
                probe["kind"] = "sim";
                probe["spectrum"] = ca_spec.resolve();
                probe["omega_d"] = ca_omega_d;
                probe["shots"] = ca_shots;
                probe["seed"] = ca_seed;
            } else if (ca_probe.rfind("exec:", 0) == 0 && ca_probe.size() > 5) {
                probe["kind"] = "exec";
                probe["command"] = ca_probe.substr(5);
                probe["timeout"] = ca_timeout;
            } else {
                throw ddfilt::InvalidArgument("--probe must be sim or exec:<command>");
            }
            if (ca_n < 0) ca_n = ddfilt::load_sequence_set(ca_set).n();
            p["probe"] = probe;
            p["set"] = ca_set;
            p["n"] = ca_n;
            p["tau_pi"] = ca_tau_pi;
            p["strategy"] = ca_strategy;
            p["min_duration"] = ca_min_d;
            p["max_duration"] = ca_max_d;
            p["min_bracket"] = ca_gs.min_bracket;
            p["noise_factor"] = ca_gs.noise_factor;
            p["max_iterations"] = ca_gs.max_iterations;
            p["out"] = ca_out;
            ddfilt::cli::run_calibrate(p);
        } else if (oracle->parsed()) {
            json p;
            p["spectrum"] = or_spec.resolve();
            p["n"] = or_n;
            p["strategy"] = or_strategy;
            p["tau_prime"] = or_tau;
            p["tau_pi_prime"] = or_tau_pi;
            p["realizations"] = or_realizations;
            p["bins"] = or_bins;
            p["seed"] = or_seed;
            p["out"] = or_out;
            ddfilt::cli::run_oracle(p);
        } else if (rep->parsed()) {
            ddfilt::cli::replay(rep_manifest, rep_out_dir);
        }
    } catch (const ddfilt::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const ddfilt::ProbeError& e) {
        std::cerr << "probe error: " << e.what() << '\n';
        return 3;
    } catch (const ddfilt::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
