#include "ddfilt/calibration.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <map>
#include <sstream>

#include "ddfilt/filter_function.hpp"

namespace ddfilt {

SimulatedProbe::SimulatedProbe(NoiseSpectrum spectrum, double tau_pi, int shots,
                               std::uint64_t seed, double min_duration, double max_duration)
    : spectrum_(std::move(spectrum)), rng_(seed) {
    if (!(tau_pi >= 0.0)) throw InvalidArgument("probe tau_pi must be >= 0");
    if (shots < 0) throw InvalidArgument("shots must be >= 0");
    if (!(min_duration > 0.0) || !(max_duration > min_duration)) {
        throw InvalidArgument("probe duration range must satisfy 0 < min < max");
    }
    cap_.tau_pi = tau_pi;
    cap_.shots = shots;
    cap_.min_duration = min_duration;
    cap_.max_duration = max_duration;
}

namespace {

void check_capability(const ProbeCapability& cap, const PulseSequence& seq) {
    if (seq.size() > cap.max_n) {
        throw ProbeError("sequence has " + std::to_string(seq.size()) + " pulses, probe allows " +
                         std::to_string(cap.max_n));
    }
    if (seq.tau() < cap.min_duration * (1 - 1e-12) || seq.tau() > cap.max_duration * (1 + 1e-12)) {
        throw ProbeError("duration " + format_double(seq.tau()) + " s outside probe range [" +
                         format_double(cap.min_duration) + ", " + format_double(cap.max_duration) +
                         "]");
    }
}

}  // namespace

Measurement SimulatedProbe::measure(const PulseSequence& seq) {
    check_capability(cap_, seq);
    const double p = std::clamp(coherence(spectrum_, seq).error, 0.0, 1.0);
    if (cap_.shots == 0) return {p, 0.0};
    std::binomial_distribution<int> draw(cap_.shots, p);
    const double phat = static_cast<double>(draw(rng_)) / cap_.shots;
    return {phat, std::sqrt(phat * (1.0 - phat) / cap_.shots)};
}

std::unique_ptr<SimulatedProbe> SimulatedProbe::clone(std::uint64_t seed) const {
    auto copy = std::make_unique<SimulatedProbe>(*this);
    copy->rng_.seed(seed);
    return copy;
}

Measurement RecordingProbe::measure(const PulseSequence& seq) {
    const Measurement m = inner_.measure(seq);
    calls_.push_back({seq.tau(), seq.tau_pi(),
                      std::vector<double>(seq.deltas().begin(), seq.deltas().end()), m});
    return m;
}

std::string format_measure_request(const PulseSequence& seq) {
    std::string line = "MEASURE " + format_double(seq.tau()) + ' ' + format_double(seq.tau_pi()) +
                       ' ' + std::to_string(seq.size());
    for (double d : seq.deltas()) {
        line += ' ';
        line += format_double(d);
    }
    return line;
}

Measurement parse_measure_response(const std::string& raw) {
    std::string line = raw;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.rfind("ERR ", 0) == 0) throw ProbeError("probe reported: " + line.substr(4));
    std::istringstream is(line);
    std::string a, b, extra;
    if (!(is >> a >> b) || (is >> extra)) {
        throw ProbeError("malformed probe response '" + line + "'");
    }
    auto number = [&](const std::string& tok) {
        char* end = nullptr;
        errno = 0;
        const double v = std::strtod(tok.c_str(), &end);
        if (end != tok.c_str() + tok.size() || errno != 0 || !std::isfinite(v)) {
            throw ProbeError("malformed probe response '" + line + "'");
        }
        if (v < 0.0 || v > 1.0) {
            throw ProbeError("probe response '" + line + "' outside [0, 1]");
        }
        return v;
    };
    return {number(a), number(b)};
}

ExternalProbe::ExternalProbe(const std::string& command, ProbeCapability capability,
                             std::chrono::milliseconds timeout)
    : command_(command), cap_(capability), timeout_(timeout) {
    std::istringstream is(command);
    std::vector<std::string> args;
    for (std::string tok; is >> tok;) args.push_back(tok);
    if (args.empty()) throw ProbeError("empty probe command");

    // A dead child must surface as a read/write error, not kill us.
    struct sigaction ignore {};
    ignore.sa_handler = SIG_IGN;
    sigaction(SIGPIPE, &ignore, nullptr);

    int in_pipe[2], out_pipe[2], err_pipe[2];
    if (pipe(in_pipe) != 0) throw ProbeError("pipe: " + std::string(std::strerror(errno)));
    if (pipe(out_pipe) != 0) {
        close(in_pipe[0]);
        close(in_pipe[1]);
        throw ProbeError("pipe: " + std::string(std::strerror(errno)));
    }
    if (pipe2(err_pipe, O_CLOEXEC) != 0) {
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);
        throw ProbeError("pipe: " + std::string(std::strerror(errno)));
    }

    std::vector<char*> argv;
    for (std::string& s : args) argv.push_back(s.data());
    argv.push_back(nullptr);

    const pid_t pid = fork();
    if (pid < 0) {
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]}) {
            close(fd);
        }
        throw ProbeError("fork: " + std::string(std::strerror(errno)));
    }
    if (pid == 0) {
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        close(in_pipe[0]);
        close(in_pipe[1]);
        close(out_pipe[0]);
        close(out_pipe[1]);
        close(err_pipe[0]);
        execvp(argv[0], argv.data());
        const int code = errno;
        [[maybe_unused]] auto w = write(err_pipe[1], &code, sizeof code);
        _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    close(err_pipe[1]);
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];

    int code = 0;
    ssize_t got;
    do {
        got = read(err_pipe[0], &code, sizeof code);
    } while (got < 0 && errno == EINTR);
    close(err_pipe[0]);
    if (got == static_cast<ssize_t>(sizeof code)) {
        shutdown();
        throw ProbeError("cannot start probe '" + args[0] + "': " + std::strerror(code));
    }
}

ExternalProbe::~ExternalProbe() { shutdown(); }

void ExternalProbe::shutdown() {
    if (to_child_ >= 0) close(to_child_);
    if (from_child_ >= 0) close(from_child_);
    to_child_ = from_child_ = -1;
    if (pid_ > 0) {
        // Closing stdin asks a well-behaved probe to exit; give it a moment.
        int status = 0;
        for (int i = 0; i < 50; ++i) {
            if (waitpid(pid_, &status, WNOHANG) != 0) {
                pid_ = -1;
                return;
            }
            usleep(2000);
        }
        kill(pid_, SIGKILL);
        waitpid(pid_, &status, 0);
        pid_ = -1;
    }
}

std::string ExternalProbe::read_line() {
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    for (;;) {
        if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return line;
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) {
            shutdown();
            throw ProbeError("probe timed out after " + std::to_string(timeout_.count()) + " ms");
        }
        pollfd p{from_child_, POLLIN, 0};
        const int ready = poll(&p, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
        if (ready < 0) {
            if (errno == EINTR) continue;
            throw ProbeError("poll: " + std::string(std::strerror(errno)));
        }
        if (ready == 0) continue;
        char chunk[4096];
        const ssize_t got = read(from_child_, chunk, sizeof chunk);
        if (got < 0) {
            if (errno == EINTR) continue;
            throw ProbeError("read from probe: " + std::string(std::strerror(errno)));
        }
        if (got == 0) {
            shutdown();
            throw ProbeError("probe '" + command_ + "' closed its output");
        }
        buffer_.append(chunk, static_cast<std::size_t>(got));
    }
}

Measurement ExternalProbe::measure(const PulseSequence& seq) {
    check_capability(cap_, seq);
    if (pid_ <= 0) throw ProbeError("probe process is not running");
    const std::string line = format_measure_request(seq) + '\n';
    std::size_t sent = 0;
    while (sent < line.size()) {
        const ssize_t w = write(to_child_, line.data() + sent, line.size() - sent);
        if (w < 0) {
            if (errno == EINTR) continue;
            shutdown();
            throw ProbeError("write to probe: " + std::string(std::strerror(errno)));
        }
        sent += static_cast<std::size_t>(w);
    }
    return parse_measure_response(read_line());
}

namespace {

// Shortest duration at which `deltas` fit pulses of length tau_pi.
double shortest_fit(std::span<const double> deltas, double tau_pi) {
    if (tau_pi == 0.0 || deltas.empty()) return 0.0;
    double need = 1.0 / (2.0 * deltas.front());
    need = std::max(need, 1.0 / (2.0 * (1.0 - deltas.back())));
    for (std::size_t i = 1; i < deltas.size(); ++i) {
        need = std::max(need, 1.0 / (deltas[i] - deltas[i - 1]));
    }
    need = std::max(need, static_cast<double>(deltas.size()));
    return tau_pi * need * (1.0 + 1e-9);
}

}  // namespace

CoherenceTimeEstimate measure_coherence_time(ErrorProbe& probe, int n, Strategy strategy,
                                             const CoherenceTimeOptions& opts) {
    if (strategy != Strategy::cpmg && strategy != Strategy::udd) {
        throw InvalidArgument("coherence time is measured with cpmg or udd");
    }
    if (n < 1) throw InvalidArgument("coherence time measurement needs n >= 1");
    if (!(opts.growth > 1.0) || !(opts.rel_precision > 0.0) || opts.max_calls < 2) {
        throw InvalidArgument("invalid coherence-time sweep options");
    }
    const ProbeCapability& cap = probe.capability();
    if (n > cap.max_n) throw InvalidArgument("n exceeds the probe's pulse capacity");
    const std::vector<double> deltas = strategy == Strategy::cpmg ? cpmg_deltas(n) : udd_deltas(n);

    int calls = 0;
    auto at = [&](double tau) {
        ++calls;
        return probe.measure(PulseSequence(deltas, tau, cap.tau_pi));
    };

    double lo = opts.start > 0.0 ? opts.start
                                 : std::max(cap.min_duration, shortest_fit(deltas, cap.tau_pi));
    if (lo > cap.max_duration) {
        throw NumericalError("sequence does not fit the probe's pulses below its maximum duration");
    }
    Measurement mlo = at(lo);
    if (mlo.error >= kCoherenceThreshold) {
        throw NumericalError("error " + format_double(mlo.error) +
                             " already above the coherence threshold at the shortest duration " +
                             format_double(lo) + " s");
    }
    double hi = lo;
    Measurement mhi = mlo;
    while (mhi.error < kCoherenceThreshold) {
        if (hi >= cap.max_duration || calls >= opts.max_calls) {
            throw NumericalError("no coherence-time crossing up to " + format_double(hi) +
                                 " s (probe maximum " + format_double(cap.max_duration) + " s)");
        }
        lo = hi;
        mlo = mhi;
        hi = std::min(hi * opts.growth, cap.max_duration);
        mhi = at(hi);
    }

    const double noise = std::hypot(mlo.standard_error, mhi.standard_error);
    while (hi / lo > 1.0 + opts.rel_precision && calls < opts.max_calls) {
        // Below the noise floor further bisection only chases fluctuations.
        if (noise > 0.0 && mhi.error - mlo.error < 2.0 * noise) break;
        const double mid = std::sqrt(lo * hi);
        const Measurement m = at(mid);
        if (m.error >= kCoherenceThreshold) {
            hi = mid;
            mhi = m;
        } else {
            lo = mid;
            mlo = m;
        }
    }

    double w = 0.5;
    if (mhi.error > mlo.error) {
        w = std::clamp((kCoherenceThreshold - mlo.error) / (mhi.error - mlo.error), 0.0, 1.0);
    }
    const double tau_c = lo + w * (hi - lo);
    double uncertainty = 0.5 * (hi - lo);
    if (mhi.error > mlo.error) {
        const double slope = (mhi.error - mlo.error) / (hi - lo);
        uncertainty = std::hypot(uncertainty, std::hypot(mlo.standard_error, mhi.standard_error) / slope);
    }
    return {tau_c, uncertainty, calls};
}

CalibrationResult golden_section_select(ErrorProbe& probe, const SequenceSet& set,
                                        double tau_fixed, const GoldenSectionOptions& opts) {
    if (!(tau_fixed > 0.0)) throw InvalidArgument("tau_fixed must be > 0");
    if (opts.min_bracket < 1 || !(opts.noise_factor >= 0.0) || opts.max_iterations < 0) {
        throw InvalidArgument("invalid golden-section options");
    }
    const auto& entries = set.entries();
    const double tau_pi = probe.capability().tau_pi;

    CalibrationResult out{};
    out.tau_fixed = tau_fixed;
    std::map<std::size_t, Measurement> seen;
    auto f = [&](std::size_t i) -> const Measurement& {
        if (auto it = seen.find(i); it != seen.end()) return it->second;
        const Measurement m = probe.measure(PulseSequence(entries[i].deltas, tau_fixed, tau_pi));
        out.profile.push_back({i, entries[i].tau_prime, m});
        return seen.emplace(i, m).first->second;
    };
    auto finish = [&](std::size_t i, bool converged) {
        out.index = i;
        out.tau_prime_opt = entries[i].tau_prime;
        out.omega_d_estimate = out.tau_prime_opt / tau_fixed;
        out.error_at_optimum = f(i);
        out.converged = converged;
        return out;
    };
    if (entries.size() == 1) return finish(0, true);

    const std::size_t last = entries.size() - 1;
    std::size_t lo = 0, hi = last;
    try {
        const double seed = tau_F1(set).tau_prime;
        lo = set.nearest_index(0.5 * seed);
        hi = set.nearest_index(std::min(1.5 * seed, entries.back().tau_prime));
    } catch (const NumericalError&) {
        // No F(1) = 1 crossing inside the set: search all of it.
    }
    if (hi < lo + 2) {
        lo = lo > 0 ? lo - 1 : 0;
        hi = std::min(last, lo + 2);
    }

    // Only entries whose pulses fit at tau_fixed can be applied; search the
    // contiguous run of those around the bracket center.
    auto fits = [&](std::size_t i) {
        try {
            validate_deltas(entries[i].deltas, tau_pi / tau_fixed);
            return true;
        } catch (const InvalidArgument&) {
            return false;
        }
    };
    std::size_t center = lo + (hi - lo) / 2;
    if (!fits(center)) {
        std::size_t best = entries.size();
        for (std::size_t d = 1; d <= last && best == entries.size(); ++d) {
            if (center >= d && fits(center - d)) best = center - d;
            else if (center + d <= last && fits(center + d)) best = center + d;
        }
        if (best == entries.size()) {
            throw InvalidArgument("no set entry fits pulses of " + format_double(tau_pi) +
                                  " s at duration " + format_double(tau_fixed) + " s");
        }
        center = best;
    }
    std::size_t run_lo = center, run_hi = center;
    while (run_lo > 0 && fits(run_lo - 1)) --run_lo;
    while (run_hi < last && fits(run_hi + 1)) ++run_hi;
    if (run_lo == run_hi) return finish(center, true);
    lo = std::clamp(lo, run_lo, run_hi);
    hi = std::clamp(hi, run_lo, run_hi);
    if (hi < lo + 2) {
        lo = run_lo;
        hi = run_hi;
    }

    auto sigma = [&](const Measurement& a, const Measurement& b) {
        return opts.noise_factor * std::hypot(a.standard_error, b.standard_error) + 1e-12;
    };
    auto lower = [&](const Measurement& a, const Measurement& b) {
        return a.error < b.error - sigma(a, b);
    };

    // Move the bracket while its edge clearly beats its middle.
    for (int e = 0; e < opts.max_expansions; ++e) {
        const std::size_t mid = lo + (hi - lo) / 2;
        const std::size_t half = (hi - lo) / 2;
        if (lo > run_lo && lower(f(lo), f(mid)) && !lower(f(hi), f(lo))) {
            hi = mid;
            lo = lo > run_lo + half ? lo - half : run_lo;
        } else if (hi < run_hi && lower(f(hi), f(mid))) {
            lo = mid;
            hi = std::min(run_hi, hi + half);
        } else {
            break;
        }
    }

    constexpr double kGolden = 0.6180339887498949;
    auto interior = [&] {
        const double w = static_cast<double>(hi - lo);
        std::size_t x1 = lo + static_cast<std::size_t>(std::lround((1.0 - kGolden) * w));
        std::size_t x2 = lo + static_cast<std::size_t>(std::lround(kGolden * w));
        x1 = std::clamp(x1, lo + 1, hi - 1);
        x2 = std::clamp(x2, lo + 1, hi - 1);
        if (x2 <= x1) x2 = std::min(hi - 1, x1 + 1);
        if (x2 <= x1) x1 = x2 - 1;
        return std::pair{x1, x2};
    };

    while (true) {
        if (hi - lo < static_cast<std::size_t>(std::max(opts.min_bracket, 2))) {
            std::size_t best = lo;
            for (std::size_t i = lo; i <= hi; ++i) {
                if (seen.count(i) && (!seen.count(best) || seen[i].error < seen[best].error)) {
                    best = i;
                }
            }
            if (!seen.count(best)) best = lo + (hi - lo) / 2;
            return finish(best, true);
        }
        const auto [x1, x2] = interior();
        const Measurement a = f(lo), b = f(x1), c = f(x2), d = f(hi);

        const Measurement* pts[] = {&a, &b, &c, &d};
        const auto [mn, mx] = std::minmax_element(
            std::begin(pts), std::end(pts),
            [](const Measurement* p, const Measurement* q) { return p->error < q->error; });
        if ((*mx)->error - (*mn)->error < sigma(**mx, **mn)) {
            return finish(lo + (hi - lo) / 2, true);
        }
        if ((lower(a, b) && lower(c, b)) || (lower(b, c) && lower(d, c))) {
            throw NonUnimodalError("error profile is not unimodal between tau'=" +
                                       format_double(entries[lo].tau_prime) + " and " +
                                       format_double(entries[hi].tau_prime),
                                   out.profile);
        }
        if (out.iterations >= opts.max_iterations) {
            return finish(b.error <= c.error ? x1 : x2, false);
        }
        ++out.iterations;
        if (b.error <= c.error) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
}

PulseSequence scaled_schedule(const SequenceSet& set, double omega_d, double tau, double tau_pi) {
    if (!(omega_d > 0.0) || !(tau > 0.0)) throw InvalidArgument("omega_d and tau must be > 0");
    return PulseSequence(set.deltas_at(omega_d * tau), tau, tau_pi);
}

}  // namespace ddfilt
