#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ddfilt/error.hpp"
#include "ddfilt/calibration.hpp"

using namespace ddfilt;

namespace {

const double kOmegaD = 2.0 * std::numbers::pi * 500.0;

const SequenceSet& ofdd_set() {
    static const SequenceSet set = [] {
        OptimizerConfig cfg;
        cfg.points = 1000;
        cfg.tau_max = 30.0;
        return build_ofdd_set(6, 0.0, cfg).set;
    }();
    return set;
}

std::string stub(const std::string& args) { return std::string(DDFILT_PROBE_STUB) + " " + args; }

}  // namespace

TEST_CASE("simulated probe: exact in noiseless mode, binomial otherwise") {
    const auto spec = NoiseSpectrum::ohmic(1.0, kOmegaD);
    const PulseSequence seq(udd_deltas(6), 3e-3, 0.0);
    SimulatedProbe exact(spec, 0.0, 0, 1);
    const double p = coherence(spec, seq).error;
    CHECK(exact.measure(seq).error == p);
    CHECK(exact.measure(seq).standard_error == 0.0);

    SimulatedProbe noisy(spec, 0.0, 1000, 1);
    double sum = 0.0;
    for (int i = 0; i < 400; ++i) sum += noisy.measure(seq).error;
    CHECK(sum / 400 == doctest::Approx(p).epsilon(0.05));

    auto a = noisy.clone(9), b = noisy.clone(9), c = noisy.clone(10);
    const double ma = a->measure(seq).error;
    CHECK(ma == b->measure(seq).error);
    bool differs = false;
    for (int i = 0; i < 5 && !differs; ++i) differs = c->measure(seq).error != a->measure(seq).error;
    CHECK(differs);

    CHECK_THROWS_AS(exact.measure(PulseSequence(udd_deltas(6), 20.0, 0.0)), ProbeError);
}

TEST_CASE("coherence time from a noiseless probe matches the analytic crossing") {
    const auto spec = NoiseSpectrum::ohmic(1.0, kOmegaD);
    SimulatedProbe probe(spec, 0.0, 0, 1);
    const auto est = measure_coherence_time(probe, 6, Strategy::cpmg);
    std::vector<double> grid;
    for (int i = 1; i <= 3000; ++i) grid.push_back(0.01 * i);
    const double ref = coherence_time(decoherence_curve(NoiseSpectrum::ohmic(), Strategy::cpmg, 6, grid));
    CHECK(est.tau_c * kOmegaD == doctest::Approx(ref).epsilon(1e-3));

    SimulatedProbe noisy(spec, 0.0, 1000, 4);
    CHECK(measure_coherence_time(noisy, 6, Strategy::udd).tau_c * kOmegaD ==
          doctest::Approx(coherence_time(decoherence_curve(NoiseSpectrum::ohmic(), Strategy::udd, 6, grid)))
              .epsilon(0.05));
}

TEST_CASE("no crossing within the probe's range") {
    SimulatedProbe silent(NoiseSpectrum::tabulated({{0.1, 0.0}, {1.0, 0.0}}, kOmegaD), 0.0, 0, 1);
    CHECK_THROWS_AS(measure_coherence_time(silent, 6, Strategy::cpmg), NumericalError);
    SimulatedProbe p(NoiseSpectrum::ohmic(1.0, kOmegaD), 0.0, 0, 1);
    CHECK_THROWS_AS(measure_coherence_time(p, 6, Strategy::ofdd), InvalidArgument);
}

TEST_CASE("golden-section recovers the hidden cutoff") {
    SimulatedProbe probe(NoiseSpectrum::ohmic(1.0, kOmegaD), 0.0, 0, 1);
    const double tc = measure_coherence_time(probe, 6, Strategy::cpmg).tau_c;
    const auto r = golden_section_select(probe, ofdd_set(), tc);
    CHECK(r.omega_d_estimate == doctest::Approx(kOmegaD).epsilon(0.05));
    CHECK(r.converged);
    CHECK(r.tau_prime_opt == ofdd_set()[r.index].tau_prime);

    // Local optimality against everything sampled.
    for (const ProfileSample& s : r.profile) CHECK(r.error_at_optimum.error <= s.m.error + 1e-15);

    SimulatedProbe noisy(NoiseSpectrum::ohmic(1.0, kOmegaD), 0.0, 1000, 2);
    const double tcn = measure_coherence_time(noisy, 6, Strategy::cpmg).tau_c;
    const auto rn = golden_section_select(noisy, ofdd_set(), tcn);
    CHECK(rn.iterations <= 15);
    CHECK(rn.omega_d_estimate == doctest::Approx(kOmegaD).epsilon(0.15));
}

TEST_CASE("halving the cutoff selects the same entry at twice the duration") {
    SimulatedProbe fast(NoiseSpectrum::ohmic(1.0, kOmegaD), 0.0, 0, 1);
    SimulatedProbe slow(NoiseSpectrum::ohmic(1.0, kOmegaD / 2), 0.0, 0, 1);
    const double t1 = measure_coherence_time(fast, 6, Strategy::cpmg).tau_c;
    const double t2 = measure_coherence_time(slow, 6, Strategy::cpmg).tau_c;
    CHECK(t2 / t1 == doctest::Approx(2.0).epsilon(1e-3));
    const auto r1 = golden_section_select(fast, ofdd_set(), t1);
    const auto r2 = golden_section_select(slow, ofdd_set(), t2);
    CHECK(r1.index == r2.index);
}

TEST_CASE("degenerate single-entry set") {
    const SequenceSet one(6, 0.0, Generator::ofdd, {{12.0, ofdd_set().deltas_at(12.0)}});
    SimulatedProbe probe(NoiseSpectrum::ohmic(1.0, kOmegaD), 0.0, 0, 1);
    const auto r = golden_section_select(probe, one, 4e-3);
    CHECK(r.index == 0);
    CHECK(r.iterations == 0);
}

TEST_CASE("scaled schedules") {
    const PulseSequence s = scaled_schedule(ofdd_set(), 1.0, 15.0, 0.0);
    const auto ref = ofdd_set().deltas_at(15.0);
    CHECK(std::vector<double>(s.deltas().begin(), s.deltas().end()) == ref);
    CHECK(s.tau() == 15.0);

    const std::size_t i = ofdd_set().nearest_index(10.0);
    const double t = 0.5 * (ofdd_set()[i].tau_prime + ofdd_set()[i + 1].tau_prime);
    const PulseSequence mid = scaled_schedule(ofdd_set(), kOmegaD, t / kOmegaD, 1e-5);
    for (int j = 0; j < 6; ++j) {
        const double lo = std::min(ofdd_set()[i].deltas[j], ofdd_set()[i + 1].deltas[j]);
        const double hi = std::max(ofdd_set()[i].deltas[j], ofdd_set()[i + 1].deltas[j]);
        CHECK(mid.deltas()[j] >= lo);
        CHECK(mid.deltas()[j] <= hi);
    }
    CHECK_THROWS_AS(scaled_schedule(ofdd_set(), 1.0, 45.0, 0.0), InvalidArgument);
}

TEST_CASE("wire protocol formatting and parsing") {
    const std::string req = format_measure_request(PulseSequence({0.25, 0.75}, 0.0028, 0.000229));
    CHECK(req.rfind("MEASURE 0.0028", 0) == 0);
    CHECK(req.find(" 2 0.25") != std::string::npos);
    const auto m = parse_measure_response("0.25 0.01\n");
    CHECK(m.error == 0.25);
    CHECK(m.standard_error == 0.01);
    CHECK_THROWS_AS(parse_measure_response("1.5 0.0"), ProbeError);
    CHECK_THROWS_AS(parse_measure_response("0.2"), ProbeError);
    CHECK_THROWS_AS(parse_measure_response("0.2 0.1 7"), ProbeError);
    CHECK_THROWS_AS(parse_measure_response("ERR shutter"), ProbeError);
}

TEST_CASE("external probe plumbing") {
    ProbeCapability cap;
    const PulseSequence seq(udd_deltas(6), 3e-3, 0.0);
    {
        ExternalProbe p(stub("fixed 0.25 0.01"), cap);
        const auto m = p.measure(seq);
        CHECK(m.error == 0.25);
        CHECK(m.standard_error == 0.01);
    }
    {
        ExternalProbe p(stub("fixed 1.5 0.0"), cap);
        CHECK_THROWS_AS(p.measure(seq), ProbeError);
    }
    {
        ExternalProbe p(stub("err"), cap);
        CHECK_THROWS_WITH_AS(p.measure(seq), doctest::Contains("laser unlocked"), ProbeError);
    }
    {
        ExternalProbe p(stub("quit"), cap);
        CHECK_THROWS_AS(p.measure(seq), ProbeError);
    }
    {
        ExternalProbe p(stub("hang"), cap, std::chrono::milliseconds(200));
        CHECK_THROWS_WITH_AS(p.measure(seq), doctest::Contains("timed out"), ProbeError);
    }
    CHECK_THROWS_AS(ExternalProbe("/nonexistent/probe", cap), ProbeError);
}

TEST_CASE("simulated probe behind the pipe calibrates identically") {
    ProbeCapability cap;
    ExternalProbe piped(stub("sim 1 " + format_double(kOmegaD) + " 1000 42"), cap);
    SimulatedProbe local(NoiseSpectrum::ohmic(1.0, kOmegaD), 0.0, 1000, 42);
    const auto ta = measure_coherence_time(piped, 6, Strategy::cpmg);
    const auto tb = measure_coherence_time(local, 6, Strategy::cpmg);
    CHECK(ta.tau_c == tb.tau_c);
    const auto ra = golden_section_select(piped, ofdd_set(), ta.tau_c);
    const auto rb = golden_section_select(local, ofdd_set(), tb.tau_c);
    CHECK(ra.index == rb.index);
    CHECK(ra.iterations == rb.iterations);
    CHECK(ra.error_at_optimum.error == rb.error_at_optimum.error);
}
