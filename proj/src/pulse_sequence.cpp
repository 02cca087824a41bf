#include "ddfilt/pulse_sequence.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ddfilt/error.hpp"

namespace ddfilt {

std::string_view to_string(Generator g) {
    switch (g) {
        case Generator::cpmg: return "cpmg";
        case Generator::udd: return "udd";
        case Generator::ofdd: return "ofdd";
        case Generator::lodd: return "lodd";
    }
    return "unknown";
}

Generator parse_generator(std::string_view tag) {
    if (tag == "cpmg") return Generator::cpmg;
    if (tag == "udd") return Generator::udd;
    if (tag == "ofdd") return Generator::ofdd;
    if (tag == "lodd") return Generator::lodd;
    throw InvalidArgument("unknown generator tag '" + std::string(tag) + "'");
}

void validate_deltas(std::span<const double> deltas, double width) {
    if (!(width >= 0.0) || !std::isfinite(width)) {
        throw InvalidArgument("pulse width fraction must be finite and >= 0");
    }
    const double n = static_cast<double>(deltas.size());
    if (n * width > 1.0 + kGapSlack) {
        throw InvalidArgument("pulses do not fit: n * tau_pi exceeds tau");
    }
    const double edge = width / 2.0;
    double prev = 0.0;
    for (std::size_t j = 0; j < deltas.size(); ++j) {
        const double d = deltas[j];
        if (!std::isfinite(d) || d <= 0.0 || d >= 1.0) {
            std::ostringstream msg;
            msg << "pulse center " << j + 1 << " = " << d << " outside (0, 1)";
            throw InvalidArgument(msg.str());
        }
        if (j > 0 && !(d > prev)) {
            std::ostringstream msg;
            msg << "pulse centers not strictly increasing at index " << j + 1;
            throw InvalidArgument(msg.str());
        }
        const double need = j == 0 ? edge : width;
        if (d - prev < need - kGapSlack) {
            std::ostringstream msg;
            msg << "pulse " << j + 1 << " overlaps its predecessor (gap " << d - prev
                << " < " << need << ")";
            throw InvalidArgument(msg.str());
        }
        prev = d;
    }
    if (!deltas.empty() && 1.0 - prev < edge - kGapSlack) {
        throw InvalidArgument("last pulse extends past the end of the sequence");
    }
}

bool is_symmetric(std::span<const double> deltas, double tol) {
    const std::size_t n = deltas.size();
    for (std::size_t j = 0; j < n; ++j) {
        if (std::abs(deltas[j] + deltas[n - 1 - j] - 1.0) > tol) return false;
    }
    return true;
}

PulseSequence::PulseSequence(std::vector<double> deltas, double tau, double tau_pi)
    : deltas_(std::move(deltas)), tau_(tau), tau_pi_(tau_pi) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidArgument("tau must be > 0");
    if (!(tau_pi >= 0.0) || !std::isfinite(tau_pi)) {
        throw InvalidArgument("tau_pi must be >= 0");
    }
    validate_deltas(deltas_, tau_pi / tau);
}

std::vector<double> cpmg_deltas(int n) {
    std::vector<double> d(static_cast<std::size_t>(std::max(n, 0)));
    for (int j = 1; j <= n; ++j) d[j - 1] = (2.0 * j - 1.0) / (2.0 * n);
    return d;
}

std::vector<double> udd_deltas(int n) {
    std::vector<double> d(static_cast<std::size_t>(std::max(n, 0)));
    for (int j = 1; j <= n; ++j) {
        const double s = std::sin(j * std::numbers::pi / (2.0 * n + 2.0));
        d[j - 1] = s * s;
    }
    // Mirror the upper half so the symmetry holds to the last bit.
    for (int j = 0; j < n / 2; ++j) d[n - 1 - j] = 1.0 - d[j];
    if (n % 2 == 1) d[n / 2] = 0.5;
    return d;
}

PulseSequence make_cpmg(int n, double tau, double tau_pi) {
    if (n < 1) throw InvalidArgument("CPMG needs at least one pulse");
    return PulseSequence(cpmg_deltas(n), tau, tau_pi);
}

PulseSequence make_udd(int n, double tau, double tau_pi) {
    if (n < 1) throw InvalidArgument("UDD needs at least one pulse");
    return PulseSequence(udd_deltas(n), tau, tau_pi);
}

std::vector<double> from_half_parameters(int n, std::span<const double> half) {
    if (n < 0) throw InvalidArgument("negative pulse count");
    const std::size_t m = static_cast<std::size_t>((n + 1) / 2);
    if (half.size() != m) {
        throw InvalidArgument("expected " + std::to_string(m) + " half parameters");
    }
    double prev = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        if (!(half[k] > prev) || half[k] > 0.5) {
            throw InvalidArgument("half parameters must increase strictly within (0, 0.5]");
        }
        prev = half[k];
    }
    if (n % 2 == 1 && half[m - 1] != 0.5) {
        throw InvalidArgument("odd pulse count requires the center pulse at 0.5");
    }
    if (n % 2 == 0 && m > 0 && half[m - 1] == 0.5) {
        throw InvalidArgument("even pulse count cannot place a pulse at the center");
    }
    std::vector<double> d(static_cast<std::size_t>(n));
    for (std::size_t k = 0; k < m; ++k) {
        d[k] = half[k];
        d[static_cast<std::size_t>(n) - 1 - k] = 1.0 - half[k];
    }
    return d;
}

std::vector<double> half_parameters(std::span<const double> deltas) {
    const std::size_t m = (deltas.size() + 1) / 2;
    return {deltas.begin(), deltas.begin() + static_cast<std::ptrdiff_t>(m)};
}

std::vector<PulseWindow> absolute_pulse_times(const PulseSequence& seq) {
    std::vector<PulseWindow> out;
    out.reserve(seq.deltas().size());
    const double half = seq.tau_pi() / 2.0;
    for (double d : seq.deltas()) {
        const double center = d * seq.tau();
        out.push_back({center - half, center + half});
    }
    return out;
}

}  // namespace ddfilt
