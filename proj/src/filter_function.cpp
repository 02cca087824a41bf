#include "ddfilt/filter_function.hpp"

#include <cmath>
#include <limits>

#include "ddfilt/error.hpp"

namespace ddfilt {
namespace {

// sin(x)/x with its Taylor series near zero.
double sinc(double x) {
    const double x2 = x * x;
    if (x2 < 1e-6) return 1.0 - x2 / 6.0 * (1.0 - x2 / 20.0);
    return std::sin(x) / x;
}

// d/dx sin(x)/x.
double sinc_prime(double x) {
    const double x2 = x * x;
    if (x2 < 1e-4) return -x / 3.0 * (1.0 - x2 / 10.0 * (1.0 - x2 / 28.0));
    return (x * std::cos(x) - std::sin(x)) / x2;
}

double sign_of_pulse(std::size_t j) {  // (-1)^j for 1-based j
    return (j % 2 == 1) ? -1.0 : 1.0;
}

// Node times (in units of tau') and signed weights of the expanded sum:
// index 0 is the start, 1..n the pulses, n+1 the end.
struct Nodes {
    std::vector<double> t;
    std::vector<double> a;
    std::size_t n;
};

Nodes make_nodes(const FilterContext& ctx) {
    const std::size_t n = ctx.deltas.size();
    Nodes nodes{std::vector<double>(n + 2), std::vector<double>(n + 2), n};
    nodes.t[0] = 0.0;
    nodes.a[0] = 1.0;
    for (std::size_t j = 1; j <= n; ++j) {
        nodes.t[j] = ctx.deltas[j - 1];
        nodes.a[j] = 2.0 * sign_of_pulse(j);
    }
    nodes.t[n + 1] = 1.0;
    nodes.a[n + 1] = (n % 2 == 0) ? -1.0 : 1.0;  // (-1)^(n+1)
    return nodes;
}

bool is_pulse(std::size_t k, std::size_t n) { return k >= 1 && k <= n; }

// int_0^1 cos(w u) g_k(w) g_l(w) dw, where g is 1 for the endpoints and
// cos(w p) for pulses (p = tau_pi'/2).
double pair_integral(double u, int pulse_count, double p) {
    switch (pulse_count) {
        case 0: return sinc(u);
        case 1: return 0.5 * (sinc(u + p) + sinc(u - p));
        default: return 0.5 * sinc(u) + 0.25 * (sinc(u + 2.0 * p) + sinc(u - 2.0 * p));
    }
}

double pair_integral_prime(double u, int pulse_count, double p) {
    switch (pulse_count) {
        case 0: return sinc_prime(u);
        case 1: return 0.5 * (sinc_prime(u + p) + sinc_prime(u - p));
        default:
            return 0.5 * sinc_prime(u) +
                   0.25 * (sinc_prime(u + 2.0 * p) + sinc_prime(u - 2.0 * p));
    }
}

}  // namespace

double filter_value(const FilterContext& ctx, double omega_prime) {
    const double theta = omega_prime * ctx.tau_prime;
    const double pulse_factor = std::cos(omega_prime * ctx.tau_pi_prime / 2.0);
    const std::size_t n = ctx.deltas.size();
    const double end_sign = (n % 2 == 0) ? -1.0 : 1.0;
    // Re/Im accumulated separately; std::polar is slower in the hot loop.
    double re = 1.0 + end_sign * std::cos(theta);
    double im = end_sign * std::sin(theta);
    double pre = 0.0;
    double pim = 0.0;
    for (std::size_t j = 1; j <= n; ++j) {
        const double phase = theta * ctx.deltas[j - 1];
        const double s = sign_of_pulse(j);
        pre += s * std::cos(phase);
        pim += s * std::sin(phase);
    }
    re += 2.0 * pulse_factor * pre;
    im += 2.0 * pulse_factor * pim;
    return re * re + im * im;
}

double filter_value_symmetric(const FilterContext& ctx, double omega_prime) {
    const double theta = omega_prime * ctx.tau_prime;
    const double c = std::cos(omega_prime * ctx.tau_pi_prime / 2.0);
    const std::size_t n = ctx.deltas.size();
    const std::size_t pairs = n / 2;
    double amp = 0.0;
    if (n % 2 == 0) {
        amp = -2.0 * std::sin(theta / 2.0);
        for (std::size_t j = 1; j <= pairs; ++j) {
            amp += 4.0 * c * sign_of_pulse(j) * std::sin(theta * (ctx.deltas[j - 1] - 0.5));
        }
    } else {
        amp = 2.0 * std::cos(theta / 2.0);
        for (std::size_t j = 1; j <= pairs; ++j) {
            amp += 4.0 * c * sign_of_pulse(j) * std::cos(theta * (ctx.deltas[j - 1] - 0.5));
        }
        amp += 2.0 * c * sign_of_pulse(pairs + 1);
    }
    return amp * amp;
}

double area_analytic(const FilterContext& ctx) {
    const Nodes nodes = make_nodes(ctx);
    const double p = ctx.tau_pi_prime / 2.0;
    const std::size_t m = nodes.t.size();
    double diag = 0.0;
    double off = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const int pk = is_pulse(k, nodes.n) ? 1 : 0;
        diag += nodes.a[k] * nodes.a[k] * pair_integral(0.0, 2 * pk, p);
        for (std::size_t l = k + 1; l < m; ++l) {
            const int pulses = pk + (is_pulse(l, nodes.n) ? 1 : 0);
            const double u = ctx.tau_prime * (nodes.t[l] - nodes.t[k]);
            off += nodes.a[k] * nodes.a[l] * pair_integral(u, pulses, p);
        }
    }
    return diag + 2.0 * off;
}

void area_analytic_gradient(const FilterContext& ctx, std::span<double> grad) {
    const Nodes nodes = make_nodes(ctx);
    const double p = ctx.tau_pi_prime / 2.0;
    const std::size_t m = nodes.t.size();
    for (std::size_t j = 1; j <= nodes.n; ++j) {
        double g = 0.0;
        for (std::size_t l = 0; l < m; ++l) {
            if (l == j) continue;
            const int pulses = 1 + (is_pulse(l, nodes.n) ? 1 : 0);
            const double u = ctx.tau_prime * (nodes.t[j] - nodes.t[l]);
            g += nodes.a[j] * nodes.a[l] * pair_integral_prime(u, pulses, p);
        }
        // Each unordered pair appears twice in the full double sum.
        grad[j - 1] = 2.0 * ctx.tau_prime * g;
    }
}

double area_rounding_bound(const FilterContext& ctx) {
    const double weight = 2.0 + 2.0 * static_cast<double>(ctx.deltas.size());
    return 8.0 * std::numeric_limits<double>::epsilon() * weight * weight;
}

QuadratureResult area_quadrature(const FilterContext& ctx, const QuadratureOptions& opts) {
    // Fastest oscillation of F on [0, 1]: phases up to tau' plus the pulse factor.
    const double rate = ctx.tau_prime + ctx.tau_pi_prime;
    const std::vector<double> pts = oscillation_breakpoints(0.0, 1.0, rate);
    return integrate_adaptive([&](double w) { return filter_value(ctx, w); }, pts, opts);
}

Crossing tau_F1(const SequenceSet& set) {
    auto at_cutoff = [&](double tau_prime, std::span<const double> deltas) {
        return filter_value({deltas, tau_prime, set.tau_pi_prime()}, 1.0);
    };
    const auto& entries = set.entries();
    std::size_t hit = entries.size();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (at_cutoff(entries[i].tau_prime, entries[i].deltas) >= 1.0) {
            hit = i;
            break;
        }
    }
    if (hit == entries.size()) {
        throw NumericalError("filter function at the cutoff stays below 1 over the set");
    }
    if (hit == 0) return {entries[0].tau_prime, entries[0].deltas};

    double lo = entries[hit - 1].tau_prime;
    double hi = entries[hit].tau_prime;
    for (int iter = 0; iter < 200 && hi - lo > 1e-13 * hi; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const std::vector<double> d = set.deltas_at(mid);
        if (at_cutoff(mid, d) >= 1.0) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return {hi, set.deltas_at(hi)};
}

}  // namespace ddfilt
