#pragma once

// Test-side reference computations. Each one takes a different route from
// the library: time-domain toggling functions instead of the closed-form
// filter, fixed-step Simpson instead of adaptive Gauss-Kronrod, physical
// units instead of dimensionless ones.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

// Composite Simpson with `panels` (even) subintervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
    if (panels % 2) ++panels;
    const double h = (b - a) / panels;
    double s = f(a) + f(b);
    for (int i = 1; i < panels; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

// |omega int_0^tau y(t) e^{i omega t} dt|^2 for instantaneous pulses, with
// y = +-1 flipping at each pulse. Written per free-evolution segment.
inline double toggling_filter(const std::vector<double>& deltas, double theta) {
    if (theta == 0.0) return 0.0;
    std::vector<double> edges{0.0};
    edges.insert(edges.end(), deltas.begin(), deltas.end());
    edges.push_back(1.0);
    std::complex<double> sum = 0.0;
    double sign = 1.0;
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
        sum += sign * (std::polar(1.0, theta * edges[k + 1]) - std::polar(1.0, theta * edges[k]));
        sign = -sign;
    }
    return std::norm(sum);
}

// Finite pulses: every pulse term carries cos(omega tau_pi / 2).
inline double finite_pulse_filter(const std::vector<double>& deltas, double tau_prime,
                                  double tau_pi_prime, double omega_prime) {
    const double theta = omega_prime * tau_prime;
    const int n = static_cast<int>(deltas.size());
    std::complex<double> sum = 1.0;
    sum += (n % 2 == 0 ? -1.0 : 1.0) * std::polar(1.0, theta);
    const double c = std::cos(omega_prime * tau_pi_prime / 2.0);
    for (int j = 1; j <= n; ++j) {
        sum += 2.0 * (j % 2 ? -1.0 : 1.0) * c * std::polar(1.0, theta * deltas[j - 1]);
    }
    return std::norm(sum);
}

// Sine integral by Simpson on sin(t)/t.
inline double si(double x) {
    auto f = [](double t) { return t == 0.0 ? 1.0 : std::sin(t) / t; };
    return simpson(f, 0.0, x, std::max(2000, static_cast<int>(x * 200)));
}

// Random ordered centers with every gap (and both edges) at least `gap`.
inline std::vector<double> random_deltas(std::mt19937_64& rng, int n, double gap) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double slack = 1.0 - (n + 1) * gap;
    std::vector<double> cuts(static_cast<std::size_t>(n));
    for (double& c : cuts) c = u(rng) * slack;
    std::sort(cuts.begin(), cuts.end());
    std::vector<double> d(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) d[j] = cuts[j] + (j + 1) * gap;
    return d;
}

// Random sequence symmetric about 1/2 with gaps >= gap.
inline std::vector<double> random_symmetric(std::mt19937_64& rng, int n, double gap) {
    const int m = n / 2;
    // Centers drawn on [0, 1] with doubled gaps, then halved into [0, 0.5].
    const std::vector<double> half = random_deltas(rng, m, 2.0 * gap);
    std::vector<double> d(static_cast<std::size_t>(n));
    for (int j = 0; j < m; ++j) {
        d[j] = 0.5 * half[j];
        d[n - 1 - j] = 1.0 - d[j];
    }
    if (n % 2) d[m] = 0.5;
    return d;
}

}  // namespace oracle
