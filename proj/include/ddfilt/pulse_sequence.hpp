#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ddfilt {

// Which construction produced a sequence or a set of sequences.
enum class Generator { cpmg, udd, ofdd, lodd };

std::string_view to_string(Generator g);
Generator parse_generator(std::string_view tag);

// Absolute slack applied to every minimum-gap comparison so that exactly
// touching finite pulses are not rejected by rounding.
inline constexpr double kGapSlack = 1e-12;

// Throws InvalidArgument unless 0 < d_1 < ... < d_n < 1 and every pulse of
// relative width `width` (= tau_pi / tau) fits without overlap.
void validate_deltas(std::span<const double> deltas, double width);

// Symmetry about the sequence midpoint: d_j + d_{n+1-j} == 1 within `tol`.
bool is_symmetric(std::span<const double> deltas, double tol);

/// A train of n pi-pulses. Deltas are pulse *centers* as fractions of the
/// total duration tau (free precession plus all pulse durations). An empty
/// deltas list is plain free evolution.
///
/// Immutable; all invariants are checked by the constructor.
class PulseSequence {
public:
    PulseSequence(std::vector<double> deltas, double tau, double tau_pi);

    int size() const { return static_cast<int>(deltas_.size()); }
    std::span<const double> deltas() const { return deltas_; }
    double tau() const { return tau_; }
    double tau_pi() const { return tau_pi_; }

private:
    std::vector<double> deltas_;
    double tau_;
    double tau_pi_;
};

std::vector<double> cpmg_deltas(int n);
std::vector<double> udd_deltas(int n);

PulseSequence make_cpmg(int n, double tau, double tau_pi);
PulseSequence make_udd(int n, double tau, double tau_pi);

// Expands the first ceil(n/2) centers of a sequence symmetric about 1/2 into
// the full list. For odd n the last half value is the fixed center 0.5.
std::vector<double> from_half_parameters(int n, std::span<const double> half);

// Inverse of from_half_parameters: the first ceil(n/2) entries.
std::vector<double> half_parameters(std::span<const double> deltas);

struct PulseWindow {
    double start;
    double end;
};

// Pulse j occupies [d_j tau - tau_pi/2, d_j tau + tau_pi/2], in seconds.
std::vector<PulseWindow> absolute_pulse_times(const PulseSequence& seq);

}  // namespace ddfilt
