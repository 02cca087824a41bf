#include "ddfilt/noise_spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ddfilt/error.hpp"
#include "ddfilt/quadrature.hpp"
#include "ddfilt/sequence_set.hpp"

namespace ddfilt {

NoiseSpectrum NoiseSpectrum::power_law(double alpha, double gamma, CutoffKind cutoff,
                                       double omega_low, double omega_d) {
    if (!(alpha > 0.0)) throw InvalidArgument("noise strength alpha must be > 0");
    if (!(omega_d > 0.0)) throw InvalidArgument("omega_d must be > 0");
    if (!(omega_low >= 0.0) || omega_low >= 1.0) {
        throw InvalidArgument("low cutoff must lie in [0, 1)");
    }
    if (gamma <= 0.0 && !(omega_low > 0.0)) {
        throw InvalidArgument("gamma <= 0 needs a positive low-frequency cutoff");
    }
    NoiseSpectrum s;
    s.kind_ = SpectrumKind::power_law;
    s.alpha_ = alpha;
    s.gamma_ = gamma;
    s.cutoff_ = cutoff;
    s.omega_low_ = omega_low;
    s.omega_d_ = omega_d;
    return s;
}

NoiseSpectrum NoiseSpectrum::ambient(double alpha, double omega_low, double omega_d) {
    if (!(alpha > 0.0)) throw InvalidArgument("noise strength alpha must be > 0");
    if (!(omega_d > 0.0)) throw InvalidArgument("omega_d must be > 0");
    if (!(omega_low > 0.0)) throw InvalidArgument("ambient spectrum needs a low cutoff > 0");
    NoiseSpectrum s;
    s.kind_ = SpectrumKind::ambient_inverse_quartic;
    s.alpha_ = alpha;
    s.gamma_ = -4.0;
    s.cutoff_ = CutoffKind::soft_inverse_square;
    s.omega_low_ = omega_low;
    s.omega_d_ = omega_d;
    return s;
}

NoiseSpectrum NoiseSpectrum::tabulated(std::vector<std::pair<double, double>> table,
                                       double omega_d) {
    if (table.size() < 2) throw InvalidArgument("tabulated spectrum needs >= 2 samples");
    if (!(omega_d > 0.0)) throw InvalidArgument("omega_d must be > 0");
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto [w, s] = table[i];
        if (!std::isfinite(w) || !std::isfinite(s) || w < 0.0 || s < 0.0) {
            throw InvalidArgument("tabulated spectrum samples must be finite and >= 0");
        }
        if (i > 0 && !(w > table[i - 1].first)) {
            throw InvalidArgument("tabulated spectrum must be strictly ascending in omega'");
        }
    }
    NoiseSpectrum s;
    s.kind_ = SpectrumKind::tabulated;
    s.table_ = std::move(table);
    s.omega_d_ = omega_d;
    s.ceiling_ = s.table_.back().first;
    return s;
}

NoiseSpectrum NoiseSpectrum::from_csv(const std::string& path, double omega_d) {
    std::ifstream is(path);
    if (!is) throw InvalidArgument("cannot read spectrum file " + path);
    std::vector<std::pair<double, double>> table;
    std::string line;
    int line_no = 0;
    bool first_row = true;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        double w = 0.0;
        double s = 0.0;
        const bool header_allowed = first_row;
        first_row = false;
        if (!(row >> w >> s)) {
            // Tolerate a textual header row.
            if (header_allowed) continue;
            throw InvalidArgument(path + ":" + std::to_string(line_no) + ": expected two numbers");
        }
        table.emplace_back(w, s);
    }
    return tabulated(std::move(table), omega_d);
}

double NoiseSpectrum::operator()(double w) const {
    if (!(w >= 0.0)) return 0.0;
    switch (kind_) {
        case SpectrumKind::power_law:
            if (w < omega_low_) return 0.0;
            if (w <= 1.0) return alpha_ * std::pow(w, gamma_);
            if (cutoff_ == CutoffKind::sharp || w > ceiling_) return 0.0;
            return alpha_ / (w * w);
        case SpectrumKind::ambient_inverse_quartic:
            if (w < omega_low_ || w > ceiling_) return 0.0;
            return alpha_ / (w * w * w * w);
        case SpectrumKind::tabulated: {
            if (w < table_.front().first || w > table_.back().first) return 0.0;
            auto it = std::lower_bound(table_.begin(), table_.end(), w,
                                       [](const auto& p, double x) { return p.first < x; });
            if (it->first == w) return it->second;
            const auto& lo = *(it - 1);
            const auto& hi = *it;
            const double t = (w - lo.first) / (hi.first - lo.first);
            return lo.second + t * (hi.second - lo.second);
        }
    }
    return 0.0;
}

NoiseSpectrum NoiseSpectrum::with_ceiling(double ceiling) const {
    if (!(ceiling > 1.0)) throw InvalidArgument("integration ceiling must exceed 1");
    NoiseSpectrum s = *this;
    if (kind_ != SpectrumKind::tabulated) s.ceiling_ = ceiling;
    return s;
}

NoiseSpectrum NoiseSpectrum::with_omega_d(double omega_d) const {
    if (!(omega_d > 0.0)) throw InvalidArgument("omega_d must be > 0");
    NoiseSpectrum s = *this;
    s.omega_d_ = omega_d;
    return s;
}

double NoiseSpectrum::support_low() const {
    if (kind_ == SpectrumKind::tabulated) return table_.front().first;
    return omega_low_;
}

double NoiseSpectrum::support_high() const {
    switch (kind_) {
        case SpectrumKind::power_law:
            return cutoff_ == CutoffKind::sharp ? 1.0 : ceiling_;
        case SpectrumKind::ambient_inverse_quartic:
            return ceiling_;
        case SpectrumKind::tabulated:
            return table_.back().first;
    }
    return 1.0;
}

std::vector<double> NoiseSpectrum::kinks() const {
    std::vector<double> k;
    if (kind_ == SpectrumKind::tabulated) {
        for (const auto& p : table_) k.push_back(p.first);
        return k;
    }
    if (omega_low_ > 0.0) k.push_back(omega_low_);
    k.push_back(1.0);
    return k;
}

bool NoiseSpectrum::prefers_log_grid() const {
    switch (kind_) {
        case SpectrumKind::power_law: return gamma_ < 0.0;
        case SpectrumKind::ambient_inverse_quartic: return true;
        case SpectrumKind::tabulated: return false;
    }
    return false;
}

std::string NoiseSpectrum::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case SpectrumKind::power_law:
            os << "power_law alpha=" << format_double(alpha_) << " gamma=" << format_double(gamma_)
               << " cutoff=" << (cutoff_ == CutoffKind::sharp ? "sharp" : "soft")
               << " omega_low=" << format_double(omega_low_);
            if (cutoff_ != CutoffKind::sharp) os << " ceiling=" << format_double(ceiling_);
            break;
        case SpectrumKind::ambient_inverse_quartic:
            os << "ambient alpha=" << format_double(alpha_)
               << " omega_low=" << format_double(omega_low_)
               << " ceiling=" << format_double(ceiling_);
            break;
        case SpectrumKind::tabulated:
            os << "tabulated samples=" << table_.size();
            break;
    }
    return os.str();
}

namespace {

// Breakpoints for power integrals: log-spaced from the low cutoff so that the
// w'^gamma (gamma < 0) body is resolved, plus every kink.
std::vector<double> power_breakpoints(const NoiseSpectrum& spec, double a, double b) {
    std::vector<double> pts{a, b};
    if (a > 0.0) {
        for (double x = a * 2.0; x < b; x *= 2.0) pts.push_back(x);
    } else {
        for (double x = 1e-6; x < b; x *= 2.0) pts.push_back(x);
    }
    const std::vector<double> k = spec.kinks();
    return merge_breakpoints(std::move(pts), k);
}

}  // namespace

double integrated_power(const NoiseSpectrum& spec, double a, double b) {
    if (!(b > a)) return 0.0;
    QuadratureOptions opts;
    opts.rel_tol = 1e-11;
    opts.abs_tol = 1e-300;
    const std::vector<double> pts = power_breakpoints(spec, a, b);
    const QuadratureResult r =
        integrate_adaptive([&](double w) { return spec(w); }, pts, opts);
    if (!std::isfinite(r.value)) throw NumericalError("spectrum is not integrable");
    return r.value;
}

Sharpness sharpness_metric(const NoiseSpectrum& spec) {
    const double lo = spec.support_low();
    const double hi = std::max(spec.support_high(), 1.0);
    const double body = integrated_power(spec, lo, std::min(1.0, hi));
    const double tail = hi > 1.0 ? integrated_power(spec, std::max(1.0, lo), hi) : 0.0;
    const double total = body + tail;
    if (!(total > 0.0)) throw NumericalError("spectrum carries no power");
    Sharpness out{};
    out.tail_fraction = tail / total;
    if (tail > 0.0) {
        // Smallest width w with power(1, 1 + w) >= 0.9 * tail, by bisection.
        const double target = 0.9 * tail;
        double w_lo = 0.0;
        double w_hi = hi - 1.0;
        for (int i = 0; i < 100 && w_hi - w_lo > 1e-12 * (1.0 + w_hi); ++i) {
            const double mid = 0.5 * (w_lo + w_hi);
            if (integrated_power(spec, 1.0, 1.0 + mid) >= target) {
                w_hi = mid;
            } else {
                w_lo = mid;
            }
        }
        out.tail_width_fraction = w_hi;
    } else {
        out.tail_width_fraction = 0.0;
    }
    out.is_sharp = out.tail_fraction <= 0.10 && out.tail_width_fraction <= 0.10;
    return out;
}

}  // namespace ddfilt
