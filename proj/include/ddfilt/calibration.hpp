#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ddfilt/coherence.hpp"
#include "ddfilt/noise_spectrum.hpp"
#include "ddfilt/optimizer.hpp"
#include "ddfilt/pulse_sequence.hpp"
#include "ddfilt/sequence_set.hpp"

namespace ddfilt {

struct ProbeCapability {
    int max_n = kMaxPulses;
    double min_duration = 1e-6;  // s
    double max_duration = 10.0;  // s
    double tau_pi = 0.0;         // s
    int shots = 0;               // averages per call, 0 = exact expectation
};

struct Measurement {
    double error;
    double standard_error;
};

// Measurement channel returning noisy estimates of (1 - W)/2. Calls are
// issued strictly one after another.
class ErrorProbe {
public:
    virtual ~ErrorProbe() = default;
    virtual const ProbeCapability& capability() const = 0;
    virtual Measurement measure(const PulseSequence& seq) = 0;
};

/// Stand-in for an experiment: evaluates the coherence integral of a spectrum
/// carrying a hidden omega_d and samples the outcome binomially over `shots`
/// two-outcome trials. shots = 0 returns the exact expectation.
class SimulatedProbe : public ErrorProbe {
public:
    SimulatedProbe(NoiseSpectrum spectrum, double tau_pi, int shots, std::uint64_t seed,
                   double min_duration = 1e-6, double max_duration = 10.0);

    const ProbeCapability& capability() const override { return cap_; }
    Measurement measure(const PulseSequence& seq) override;

    // Independent copy for parallel offline studies.
    std::unique_ptr<SimulatedProbe> clone(std::uint64_t seed) const;

private:
    NoiseSpectrum spectrum_;
    ProbeCapability cap_;
    std::mt19937_64 rng_;
};

struct ProbeCall {
    double tau;
    double tau_pi;
    std::vector<double> deltas;
    Measurement result;
};

// Forwards to another probe and keeps every request and response.
class RecordingProbe : public ErrorProbe {
public:
    explicit RecordingProbe(ErrorProbe& inner) : inner_(inner) {}
    const ProbeCapability& capability() const override { return inner_.capability(); }
    Measurement measure(const PulseSequence& seq) override;
    const std::vector<ProbeCall>& transcript() const { return calls_; }

private:
    ErrorProbe& inner_;
    std::vector<ProbeCall> calls_;
};

/// Child process speaking the line protocol
///   request  `MEASURE <tau> <tau_pi> <n> <delta_1> ... <delta_n>`
///   response `<error> <standard_error>` (both in [0, 1]) or `ERR <message>`.
/// The command is split on whitespace and executed directly (no shell).
/// Spawn failures, timeouts, early exit and malformed lines raise ProbeError.
class ExternalProbe : public ErrorProbe {
public:
    ExternalProbe(const std::string& command, ProbeCapability capability,
                  std::chrono::milliseconds timeout = std::chrono::seconds(60));
    ~ExternalProbe() override;
    ExternalProbe(const ExternalProbe&) = delete;
    ExternalProbe& operator=(const ExternalProbe&) = delete;

    const ProbeCapability& capability() const override { return cap_; }
    Measurement measure(const PulseSequence& seq) override;

private:
    std::string read_line();
    void shutdown();

    std::string command_;
    ProbeCapability cap_;
    std::chrono::milliseconds timeout_;
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
};

// Request line sent for one sequence (no trailing newline).
std::string format_measure_request(const PulseSequence& seq);
// Parses a response line; throws ProbeError on `ERR ...` or anything malformed.
Measurement parse_measure_response(const std::string& line);

struct CoherenceTimeOptions {
    double start = 0.0;         // first duration, 0 = smallest one the probe allows
    double growth = 2.0;        // geometric factor of the coarse sweep
    double rel_precision = 1e-4;  // bracket ratio at which refinement stops
    int max_calls = 200;
};

struct CoherenceTimeEstimate {
    double tau_c;
    double uncertainty;
    int calls;
};

/// Duration at which the probe's error reaches kCoherenceThreshold with CPMG
/// or UDD: geometric sweep up to the first point above threshold, geometric
/// bisection of that bracket, then linear interpolation between the final
/// bracket measurements. Throws NumericalError when the crossing lies outside
/// the probe's duration range.
CoherenceTimeEstimate measure_coherence_time(ErrorProbe& probe, int n, Strategy strategy,
                                             const CoherenceTimeOptions& opts = {});

struct GoldenSectionOptions {
    // Stop when the bracket spans fewer index steps than this.
    int min_bracket = 3;
    // Stop when every error in the bracket lies within noise_factor combined
    // standard errors of the others.
    double noise_factor = 2.0;
    int max_iterations = 40;
    // Bracket extensions allowed when the initial minimum sits on an edge.
    int max_expansions = 4;
};

struct ProfileSample {
    std::size_t index;
    double tau_prime;
    Measurement m;
};

struct CalibrationResult {
    double tau_fixed;        // s, duration the selection was made at
    double tau_prime_opt;
    std::size_t index;
    double omega_d_estimate;  // rad/s
    int iterations;
    Measurement error_at_optimum;
    bool converged;
    std::vector<ProfileSample> profile;  // every index measured, in call order
};

// Thrown when the sampled error profile cannot be unimodal.
class NonUnimodalError : public NumericalError {
public:
    NonUnimodalError(const std::string& what, std::vector<ProfileSample> profile)
        : NumericalError(what), profile_(std::move(profile)) {}
    const std::vector<ProfileSample>& profile() const { return profile_; }

private:
    std::vector<ProfileSample> profile_;
};

/// Golden-section search over the set index at fixed physical duration. The
/// initial bracket spans 0.5 to 1.5 times the entry where F(1) reaches 1.
CalibrationResult golden_section_select(ErrorProbe& probe, const SequenceSet& set,
                                        double tau_fixed, const GoldenSectionOptions& opts = {});

/// Set entry at tau' = omega_d * tau (deltas interpolated) as a physical
/// sequence with the given pulse duration.
PulseSequence scaled_schedule(const SequenceSet& set, double omega_d, double tau, double tau_pi);

}  // namespace ddfilt
