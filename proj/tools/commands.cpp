#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <sstream>

#include "ddfilt/calibration.hpp"
#include "ddfilt/coherence.hpp"
#include "ddfilt/optimizer.hpp"
#include "manifest.hpp"

namespace ddfilt::cli {

using nlohmann::json;
namespace fs = std::filesystem;

json resolve_spectrum(const std::string& kind, double alpha, double gamma,
                      const std::string& cutoff, double omega_low) {
    json j;
    j["alpha"] = std::isnan(alpha) ? 1.0 : alpha;
    if (!(j["alpha"].get<double>() > 0.0)) throw InvalidArgument("--alpha must be > 0");
    if (kind == "ohmic" || kind == "one-over-f") {
        const bool ohmic = kind == "ohmic";
        j["kind"] = kind;
        j["gamma"] = std::isnan(gamma) ? (ohmic ? 1.0 : -1.0) : gamma;
        j["cutoff"] = cutoff.empty() ? (ohmic ? "sharp" : "soft") : cutoff;
        j["omega_low"] = std::isnan(omega_low) ? (ohmic ? 0.0 : 1e-3) : omega_low;
    } else if (kind == "ambient") {
        if (!std::isnan(gamma) || !cutoff.empty()) {
            throw InvalidArgument("--gamma/--cutoff do not apply to the ambient spectrum");
        }
        j["kind"] = kind;
        j["omega_low"] = std::isnan(omega_low) ? 1e-2 : omega_low;
    } else if (kind.rfind("file:", 0) == 0 && kind.size() > 5) {
        j["kind"] = "file";
        j["file"] = kind.substr(5);
    } else {
        throw InvalidArgument("unknown spectrum '" + kind +
                              "' (expected ohmic, one-over-f, ambient or file:<path>)");
    }
    if (j.contains("cutoff") && j["cutoff"] != "sharp" && j["cutoff"] != "soft") {
        throw InvalidArgument("--cutoff must be sharp or soft");
    }
    return j;
}

NoiseSpectrum spectrum_from_json(const json& j, double omega_d) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "file") return NoiseSpectrum::from_csv(j.at("file").get<std::string>(), omega_d);
    if (kind == "ambient") {
        return NoiseSpectrum::ambient(j.at("alpha").get<double>(), j.at("omega_low").get<double>(),
                                      omega_d);
    }
    const CutoffKind cutoff =
        j.at("cutoff") == "soft" ? CutoffKind::soft_inverse_square : CutoffKind::sharp;
    return NoiseSpectrum::power_law(j.at("alpha").get<double>(), j.at("gamma").get<double>(),
                                    cutoff, j.at("omega_low").get<double>(), omega_d);
}

namespace {

std::vector<std::string> spectrum_inputs(const json& spec) {
    if (spec.at("kind") == "file") return {spec.at("file").get<std::string>()};
    return {};
}

std::string save_set_text(const SequenceSet& set) {
    std::ostringstream os;
    write_sequence_set(os, set);
    return os.str();
}

std::string log_text(const std::vector<ConvergenceRow>& log) {
    std::ostringstream os;
    write_convergence_log(os, log);
    return os.str();
}

}  // namespace

void run_ofdd(const json& p) {
    const int n = p.at("n").get<int>();
    OptimizerConfig cfg;
    cfg.tau_min = p.at("tau_min").get<double>();
    cfg.tau_max = p.at("tau_max").get<double>();
    cfg.points = p.at("grid").get<int>();
    cfg.max_evaluations = p.at("max_evaluations").get<int>();
    cfg.rel_tol = p.at("rel_tol").get<double>();
    cfg.initial_step = p.at("initial_step").get<double>();
    cfg.restarts = p.at("restarts").get<int>();
    const double tau_pi_prime = p.at("tau_pi_prime").get<double>();
    const std::string out = p.at("out").get<std::string>();

    RunManifest m{"ofdd", p, {}, {out, out + ".convergence.csv"}, 0};
    try {
        const SetBuild b = build_ofdd_set(n, tau_pi_prime, cfg);
        for (const std::string& w : b.warnings) std::cerr << "warning: " << w << '\n';
        write_file(out, save_set_text(b.set));
        write_file(out + ".convergence.csv", log_text(b.log));
        write_manifest(out + ".manifest.json", m);
        std::cout << "wrote " << b.set.size() << " sequences to " << out << '\n';
        try {
            const Crossing c = tau_F1(b.set);
            std::cout << "tau'_F1 = " << format_double(c.tau_prime) << '\n';
        } catch (const NumericalError& e) {
            std::cout << "tau'_F1: " << e.what() << '\n';
        }
    } catch (const SetBuildError& e) {
        if (e.partial()) {
            write_file(out + ".partial", save_set_text(e.partial()->set));
            write_file(out + ".convergence.csv.partial", log_text(e.partial()->log));
            m.outputs = {out + ".partial", out + ".convergence.csv.partial"};
            write_manifest(out + ".manifest.json", m);
            std::cerr << "partial set written to " << out << ".partial\n";
        }
        throw;
    }
}

void run_curves(const json& p) {
    const json& sp = p.at("spectrum");
    const NoiseSpectrum spec = spectrum_from_json(sp);
    const int n = p.at("n").get<int>();
    const double tau_pi_prime = p.at("tau_pi_prime").get<double>();
    const std::string set_path = p.at("set").get<std::string>();
    const fs::path dir = p.at("out").get<std::string>();

    std::vector<Strategy> strategies;
    for (const auto& s : p.at("strategies")) strategies.push_back(parse_strategy(s.get<std::string>()));
    if (strategies.empty()) throw InvalidArgument("no strategies requested");

    std::optional<SequenceSet> set;
    bool needs_set = false;
    for (Strategy s : strategies) needs_set |= s == Strategy::ofdd || s == Strategy::lodd;
    if (needs_set) {
        if (set_path.empty()) throw InvalidArgument("ofdd/lodd curves need --set");
        set = load_sequence_set(set_path);
        if (set->n() != n) {
            throw InvalidArgument("set has n=" + std::to_string(set->n()) + ", --n is " +
                                  std::to_string(n));
        }
    }

    const json& g = p.at("tau_grid");
    const double lo = g.at("min").get<double>(), hi = g.at("max").get<double>();
    const int points = g.at("points").get<int>();
    if (points < 2 || !(hi > lo) || !(lo >= 0.0)) throw InvalidArgument("invalid --tau-grid");
    std::vector<double> grid(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) grid[i] = lo + (hi - lo) * i / (points - 1);
    grid.back() = hi;

    RunManifest m{"curves", p, spectrum_inputs(sp), {}, 0};
    if (!set_path.empty()) m.inputs.push_back(set_path);

    std::vector<DecoherenceCurve> curves;
    for (Strategy s : strategies) {
        if (s == Strategy::lodd) {
            const int lodd_points = p.at("lodd_points").get<int>();
            std::vector<double> lgrid = grid;
            if (lodd_points > 0 && lodd_points < points) {
                lgrid.resize(static_cast<std::size_t>(lodd_points));
                for (int i = 0; i < lodd_points; ++i) {
                    lgrid[i] = lo + (hi - lo) * i / std::max(1, lodd_points - 1);
                }
                lgrid.back() = hi;
            }
            const SetBuild lodd = build_lodd_set(spec, *set, lgrid, OptimizerConfig{});
            const std::string lodd_path = (dir / "lodd_set.csv").string();
            write_file(lodd_path, save_set_text(lodd.set));
            m.outputs.push_back(lodd_path);
            curves.push_back(decoherence_curve(spec, s, n, grid, &lodd.set, tau_pi_prime));
        } else {
            curves.push_back(decoherence_curve(spec, s, n, grid, set ? &*set : nullptr,
                                               tau_pi_prime));
        }
        curves.back().spectrum_id = spec.describe();
        std::ostringstream os;
        write_curve_csv(os, curves.back());
        const std::string path = (dir / (std::string(to_string(s)) + ".csv")).string();
        write_file(path, os.str());
        m.outputs.push_back(path);
    }

    std::ostringstream all;
    all << "# spectrum=" << spec.describe() << "\n# n=" << n << "\ntau_prime";
    for (Strategy s : strategies) all << ',' << to_string(s);
    all << '\n';
    for (std::size_t i = 0; i < grid.size(); ++i) {
        all << format_double(grid[i]);
        for (const DecoherenceCurve& c : curves) all << ',' << format_double(c.points[i].error);
        all << '\n';
    }
    const std::string combined = (dir / "curves.csv").string();
    write_file(combined, all.str());
    m.outputs.push_back(combined);

    std::ostringstream tc;
    tc << "strategy,tau_c\n";
    for (const DecoherenceCurve& c : curves) {
        tc << to_string(c.strategy) << ',';
        try {
            const double t = coherence_time(c);
            tc << format_double(t);
            std::cout << to_string(c.strategy) << ": tau'_c = " << format_double(t) << '\n';
        } catch (const NumericalError&) {
            tc << "nan";
            std::cout << to_string(c.strategy) << ": no crossing on this grid\n";
        }
        tc << '\n';
    }
    const std::string tc_path = (dir / "coherence_times.csv").string();
    write_file(tc_path, tc.str());
    m.outputs.push_back(tc_path);
    write_manifest((dir / "manifest.json").string(), m);
}

namespace {

std::string transcript_text(const std::vector<ProbeCall>& calls) {
    std::ostringstream os;
    os << "tau,tau_pi,n,deltas,error,standard_error\n";
    for (const ProbeCall& c : calls) {
        os << format_double(c.tau) << ',' << format_double(c.tau_pi) << ',' << c.deltas.size()
           << ',';
        for (std::size_t i = 0; i < c.deltas.size(); ++i) {
            os << (i ? ";" : "") << format_double(c.deltas[i]);
        }
        os << ',' << format_double(c.result.error) << ',' << format_double(c.result.standard_error)
           << '\n';
    }
    return os.str();
}

std::string profile_text(const std::vector<ProfileSample>& profile) {
    std::ostringstream os;
    os << "index,tau_prime,error,standard_error\n";
    for (const ProfileSample& s : profile) {
        os << s.index << ',' << format_double(s.tau_prime) << ',' << format_double(s.m.error)
           << ',' << format_double(s.m.standard_error) << '\n';
    }
    return os.str();
}

}  // namespace

void run_calibrate(const json& p) {
    const SequenceSet set = load_sequence_set(p.at("set").get<std::string>());
    const int n = p.at("n").get<int>();
    if (n != set.n()) {
        throw InvalidArgument("set has n=" + std::to_string(set.n()) + ", --n is " +
                              std::to_string(n));
    }
    const fs::path dir = p.at("out").get<std::string>();
    const json& pr = p.at("probe");
    const double tau_pi = p.at("tau_pi").get<double>();
    const double min_d = p.at("min_duration").get<double>();
    const double max_d = p.at("max_duration").get<double>();

    std::unique_ptr<ErrorProbe> probe;
    RunManifest m{"calibrate", p, {p.at("set").get<std::string>()}, {}, 0};
    if (pr.at("kind") == "sim") {
        const json& sp = pr.at("spectrum");
        m.seed = pr.at("seed").get<std::uint64_t>();
        for (const std::string& f : spectrum_inputs(sp)) m.inputs.push_back(f);
        probe = std::make_unique<SimulatedProbe>(
            spectrum_from_json(sp, pr.at("omega_d").get<double>()), tau_pi,
            pr.at("shots").get<int>(), m.seed, min_d, max_d);
    } else {
        ProbeCapability cap;
        cap.tau_pi = tau_pi;
        cap.min_duration = min_d;
        cap.max_duration = max_d;
        probe = std::make_unique<ExternalProbe>(
            pr.at("command").get<std::string>(), cap,
            std::chrono::milliseconds(std::llround(pr.at("timeout").get<double>() * 1000.0)));
    }

    RecordingProbe rec(*probe);
    const std::string transcript_path = (dir / "transcript.csv").string();
    m.outputs.push_back(transcript_path);
    auto dump_transcript = [&] { write_file(transcript_path, transcript_text(rec.transcript())); };

    GoldenSectionOptions gs;
    gs.min_bracket = p.at("min_bracket").get<int>();
    gs.noise_factor = p.at("noise_factor").get<double>();
    gs.max_iterations = p.at("max_iterations").get<int>();

    CoherenceTimeEstimate tc{};
    CalibrationResult r{};
    try {
        tc = measure_coherence_time(rec, n, parse_strategy(p.at("strategy").get<std::string>()));
        r = golden_section_select(rec, set, tc.tau_c, gs);
    } catch (const NonUnimodalError& e) {
        dump_transcript();
        write_file((dir / "profile.csv").string(), profile_text(e.profile()));
        throw;
    } catch (const Error&) {
        dump_transcript();
        throw;
    }
    dump_transcript();

    json res;
    res["tau_c"] = tc.tau_c;
    res["tau_c_uncertainty"] = tc.uncertainty;
    res["tau_c_calls"] = tc.calls;
    res["tau_prime_opt"] = r.tau_prime_opt;
    res["set_index"] = r.index;
    res["omega_d_estimate"] = r.omega_d_estimate;
    res["omega_d_tau_pi"] = r.omega_d_estimate * tau_pi;
    res["iterations"] = r.iterations;
    res["converged"] = r.converged;
    res["error_at_optimum"] = r.error_at_optimum.error;
    res["error_at_optimum_se"] = r.error_at_optimum.standard_error;
    res["probe_calls"] = rec.transcript().size();
    const std::string result_path = (dir / "result.json").string();
    write_file(result_path, res.dump(2) + "\n");
    const std::string profile_path = (dir / "profile.csv").string();
    write_file(profile_path, profile_text(r.profile));
    m.outputs.push_back(result_path);
    m.outputs.push_back(profile_path);
    write_manifest((dir / "manifest.json").string(), m);

    std::cout << "tau_c            = " << format_double(tc.tau_c) << " s (+- "
              << format_double(tc.uncertainty) << ")\n"
              << "tau'_opt         = " << format_double(r.tau_prime_opt) << " (entry " << r.index
              << ")\n"
              << "omega_d estimate = " << format_double(r.omega_d_estimate) << " rad/s\n"
              << "omega_d tau_pi   = " << format_double(r.omega_d_estimate * tau_pi) << '\n'
              << "iterations       = " << r.iterations << (r.converged ? "" : " (not converged)")
              << '\n';
}

void run_oracle(const json& p) {
    const json& sp = p.at("spectrum");
    const NoiseSpectrum spec = spectrum_from_json(sp);
    const int n = p.at("n").get<int>();
    const double tau_prime = p.at("tau_prime").get<double>();
    if (p.at("tau_pi_prime").get<double>() > 0.0) {
        throw InvalidArgument("the Monte Carlo oracle supports instantaneous pulses only");
    }
    const Strategy strategy = parse_strategy(p.at("strategy").get<std::string>());
    if (strategy != Strategy::cpmg && strategy != Strategy::udd) {
        throw InvalidArgument("oracle strategy must be cpmg or udd");
    }
    if (n < 0) throw InvalidArgument("--n must be >= 0");
    const std::vector<double> deltas = strategy == Strategy::cpmg ? cpmg_deltas(n) : udd_deltas(n);
    const FilterContext ctx{deltas, tau_prime, 0.0};

    MonteCarloOptions mc;
    mc.realizations = p.at("realizations").get<int>();
    mc.seed = p.at("seed").get<std::uint64_t>();
    mc.bins = p.at("bins").get<int>();

    const CoherenceResult analytic = coherence(spec, ctx);
    const MonteCarloResult sim = monte_carlo_error(spec, ctx, mc);
    const double tol = std::max(0.05 * analytic.error, 3.0 * sim.standard_error);
    const bool agree = std::abs(sim.error - analytic.error) <= tol;
    const bool enough = mc.realizations >= 1000;

    std::ostringstream os;
    os << "# spectrum=" << spec.describe() << "\n# strategy=" << to_string(strategy)
       << "\nn,tau_prime,analytic_error,mc_error,standard_error,realizations,agreement,"
          "sufficient_statistics\n"
       << n << ',' << format_double(tau_prime) << ',' << format_double(analytic.error) << ','
       << format_double(sim.error) << ',' << format_double(sim.standard_error) << ','
       << sim.realizations << ',' << (agree ? "true" : "false") << ','
       << (enough ? "true" : "false") << '\n';
    const std::string out = p.at("out").get<std::string>();
    write_file(out, os.str());
    RunManifest m{"oracle", p, spectrum_inputs(sp), {out}, mc.seed};
    write_manifest(out + ".manifest.json", m);

    std::cout << "analytic " << format_double(analytic.error) << "  monte carlo "
              << format_double(sim.error) << " +- " << format_double(sim.standard_error)
              << (agree ? "  agree" : "  DISAGREE") << '\n';
    if (!enough) {
        std::cerr << "warning: " << mc.realizations
                  << " realizations are too few for a meaningful comparison (need >= 1000)\n";
    }
}

void dispatch(const std::string& subcommand, const json& params) {
    try {
        if (subcommand == "ofdd") return run_ofdd(params);
        if (subcommand == "curves") return run_curves(params);
        if (subcommand == "calibrate") return run_calibrate(params);
        if (subcommand == "oracle") return run_oracle(params);
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("bad parameters: ") + e.what());
    }
    throw InvalidArgument("unknown subcommand '" + subcommand + "'");
}

void replay(const std::string& manifest_path, const std::string& out_dir) {
    const RunManifest m = read_manifest(manifest_path);
    if (m.version != kToolVersion) {
        std::cerr << "warning: manifest written by version " << m.version << ", this is "
                  << kToolVersion << "; outputs may differ\n";
    }
    json params = m.parameters;
    if (!out_dir.empty()) {
        fs::path old = params.at("out").get<std::string>();
        if (!old.has_filename()) old = old.parent_path();
        params["out"] = (fs::path(out_dir) / old.filename()).string();
    }
    dispatch(m.subcommand, params);
}

}  // namespace ddfilt::cli
