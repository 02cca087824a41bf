#include "ddfilt/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <queue>
#include <sstream>

#include "ddfilt/error.hpp"

namespace ddfilt {
namespace {

// Kronrod abscissae (positive half), Kronrod weights, Gauss weights for the
// embedded 7-point rule (zero where the node is Kronrod-only).
constexpr std::array<double, 8> kNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kKronrod = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 8> kGauss = {
    0.0, 0.129484966168869693270611432679082, 0.0, 0.279705391489276667901467771423780,
    0.0, 0.381830050505118944950369775488975, 0.0, 0.417959183673469387755102040816327};

struct Panel {
    double a;
    double b;
    double value;
    double error;
    bool operator<(const Panel& other) const { return error < other.error; }
};

Panel gauss_kronrod(const std::function<double(double)>& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double kronrod = 0.0;
    double gauss = 0.0;
    for (std::size_t i = 0; i + 1 < kNodes.size(); ++i) {
        const double dx = half * kNodes[i];
        const double pair = f(center - dx) + f(center + dx);
        kronrod += kKronrod[i] * pair;
        gauss += kGauss[i] * pair;
    }
    const double mid = f(center);
    kronrod += kKronrod[7] * mid;
    gauss += kGauss[7] * mid;
    kronrod *= half;
    gauss *= half;
    return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace

QuadratureResult integrate_adaptive(const std::function<double(double)>& f,
                                    std::span<const double> breakpoints,
                                    const QuadratureOptions& opts) {
    if (breakpoints.size() < 2) throw InvalidArgument("quadrature needs an interval");
    std::priority_queue<Panel> heap;
    // Summation is redone from the heap on exit so that the reported value is
    // independent of refinement order up to rounding.
    double value = 0.0;
    double error = 0.0;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        if (breakpoints[i + 1] <= breakpoints[i]) continue;
        Panel p = gauss_kronrod(f, breakpoints[i], breakpoints[i + 1]);
        value += p.value;
        error += p.error;
        heap.push(p);
    }
    auto done = [&] { return error <= std::max(opts.abs_tol, opts.rel_tol * std::abs(value)); };
    while (!heap.empty() && !done()) {
        if (static_cast<int>(heap.size()) >= opts.max_panels) {
            const Panel& worst = heap.top();
            std::ostringstream msg;
            msg << "adaptive quadrature hit the panel ceiling (" << opts.max_panels
                << "); worst panel [" << worst.a << ", " << worst.b << "] error "
                << worst.error;
            throw NumericalError(msg.str());
        }
        const Panel worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            // Panel cannot be split further in floating point; accept it.
            heap.push({worst.a, worst.b, worst.value, 0.0});
            error -= worst.error;
            continue;
        }
        const Panel left = gauss_kronrod(f, worst.a, mid);
        const Panel right = gauss_kronrod(f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    std::vector<Panel> panels;
    panels.reserve(heap.size());
    while (!heap.empty()) {
        panels.push_back(heap.top());
        heap.pop();
    }
    std::sort(panels.begin(), panels.end(), [](const Panel& x, const Panel& y) { return x.a < y.a; });
    QuadratureResult out;
    for (const Panel& p : panels) {
        out.value += p.value;
        out.error += p.error;
    }
    out.panels = static_cast<int>(panels.size());
    return out;
}

std::vector<double> oscillation_breakpoints(double a, double b, double angular_rate,
                                            int nodes_per_period) {
    std::vector<double> pts{a};
    if (!(b > a)) {
        pts.push_back(b);
        return pts;
    }
    std::size_t count = 1;
    if (angular_rate > 0.0) {
        const double period = 2.0 * std::numbers::pi / angular_rate;
        // A 15-node panel then spans at most nodes_per_period nodes' worth of a period.
        const double max_width = period * 15.0 / nodes_per_period;
        count = static_cast<std::size_t>(std::ceil((b - a) / max_width));
        count = std::max<std::size_t>(count, 1);
    }
    for (std::size_t i = 1; i < count; ++i) {
        pts.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(count));
    }
    pts.push_back(b);
    return pts;
}

std::vector<double> merge_breakpoints(std::vector<double> grid, std::span<const double> extra) {
    if (grid.empty()) return grid;
    const double lo = grid.front();
    const double hi = grid.back();
    for (double x : extra) {
        if (x > lo && x < hi) grid.push_back(x);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

}  // namespace ddfilt
