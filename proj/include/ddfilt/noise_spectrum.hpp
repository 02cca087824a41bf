#pragma once

#include <string>
#include <utility>
#include <vector>

namespace ddfilt {

enum class SpectrumKind { power_law, ambient_inverse_quartic, tabulated };
enum class CutoffKind { sharp, soft_inverse_square };

/// One-sided noise power spectral density in dimensionless form,
/// S'(w') = S(w' omega_d) / omega_d, with w' = omega / omega_d.
///
/// power_law: alpha w'^gamma on [w_low, 1]; above 1 either nothing (sharp)
///   or alpha w'^-2 (soft, continuous at w' = 1).
/// ambient_inverse_quartic: alpha w'^-4 above w_low.
/// tabulated: linear interpolation of (w', S') samples, 0 outside the table.
///
/// omega_d (rad/s) is the only dimensional quantity and only matters when a
/// physical sequence is evaluated against the spectrum.
class NoiseSpectrum {
public:
    static NoiseSpectrum power_law(double alpha, double gamma, CutoffKind cutoff,
                                   double omega_low = 0.0, double omega_d = 1.0);
    static NoiseSpectrum ambient(double alpha, double omega_low, double omega_d = 1.0);
    static NoiseSpectrum tabulated(std::vector<std::pair<double, double>> table,
                                   double omega_d = 1.0);
    // Reads `omega_prime,s_prime` CSV (ascending, `#` comments allowed).
    static NoiseSpectrum from_csv(const std::string& path, double omega_d = 1.0);

    // Ohmic (gamma = 1) with a sharp cutoff.
    static NoiseSpectrum ohmic(double alpha = 1.0, double omega_d = 1.0) {
        return power_law(alpha, 1.0, CutoffKind::sharp, 0.0, omega_d);
    }
    // 1/f with a sharp low cutoff at 1e-3 and a soft w'^-2 tail.
    static NoiseSpectrum one_over_f(double alpha = 1.0, double omega_low = 1e-3,
                                    double omega_d = 1.0) {
        return power_law(alpha, -1.0, CutoffKind::soft_inverse_square, omega_low, omega_d);
    }

    double operator()(double omega_prime) const;

    SpectrumKind kind() const { return kind_; }
    CutoffKind cutoff() const { return cutoff_; }
    double alpha() const { return alpha_; }
    double gamma() const { return gamma_; }
    double omega_low() const { return omega_low_; }
    double omega_d() const { return omega_d_; }
    const std::vector<std::pair<double, double>>& table() const { return table_; }

    // Upper integration limit for tails that extend past the cutoff.
    double ceiling() const { return ceiling_; }
    NoiseSpectrum with_ceiling(double ceiling) const;
    NoiseSpectrum with_omega_d(double omega_d) const;

    // Integration support [lo, hi] and interior points where S' is not smooth.
    double support_low() const;
    double support_high() const;
    std::vector<double> kinks() const;
    // Whether frequency synthesis should use a logarithmic grid.
    bool prefers_log_grid() const;

    // Compact identifier recorded in output headers.
    std::string describe() const;

private:
    NoiseSpectrum() = default;

    SpectrumKind kind_ = SpectrumKind::power_law;
    CutoffKind cutoff_ = CutoffKind::sharp;
    double alpha_ = 1.0;
    double gamma_ = 1.0;
    double omega_low_ = 0.0;
    double omega_d_ = 1.0;
    double ceiling_ = 100.0;
    std::vector<std::pair<double, double>> table_;
};

struct Sharpness {
    double tail_fraction;        // power above w' = 1 over total power
    double tail_width_fraction;  // width above 1 holding 90% of the tail power
    bool is_sharp;               // both fractions <= 0.10
};

// Empirical criterion for a "sharp" high-frequency cutoff: at most 10% of the
// integrated power lies beyond the cutoff, packed within a tenth of omega_d.
Sharpness sharpness_metric(const NoiseSpectrum& spec);

// Integrated power of the spectrum over [a, b] (dimensionless).
double integrated_power(const NoiseSpectrum& spec, double a, double b);

}  // namespace ddfilt
