#include "ddfilt/sequence_set.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ddfilt/error.hpp"

namespace ddfilt {

SequenceSet::SequenceSet(int n, double tau_pi_prime, Generator generator,
                         std::vector<SequenceEntry> entries,
                         std::map<std::string, std::string> meta)
    : n_(n),
      tau_pi_prime_(tau_pi_prime),
      generator_(generator),
      entries_(std::move(entries)),
      meta_(std::move(meta)) {
    if (n_ < 0) throw InvalidArgument("sequence set: negative pulse count");
    if (!(tau_pi_prime_ >= 0.0)) throw InvalidArgument("sequence set: tau_pi_prime < 0");
    if (entries_.empty()) throw InvalidArgument("sequence set: no entries");
    double prev = -1.0;
    for (const SequenceEntry& e : entries_) {
        if (!(e.tau_prime > 0.0) || !(e.tau_prime > prev)) {
            throw InvalidArgument("sequence set: tau_prime must be positive and strictly increasing");
        }
        if (static_cast<int>(e.deltas.size()) != n_) {
            throw InvalidArgument("sequence set: entry has wrong pulse count");
        }
        validate_deltas(e.deltas, tau_pi_prime_ / e.tau_prime);
        if (generator_ != Generator::lodd && !is_symmetric(e.deltas, 1e-9)) {
            throw InvalidArgument("sequence set: entry at tau'=" + format_double(e.tau_prime) +
                                  " is not symmetric about 0.5");
        }
        prev = e.tau_prime;
    }
}

bool SequenceSet::covers(double tau_prime) const {
    return tau_prime >= tau_prime_min() && tau_prime <= tau_prime_max();
}

std::size_t SequenceSet::nearest_index(double tau_prime) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), tau_prime,
                               [](const SequenceEntry& e, double t) { return e.tau_prime < t; });
    if (it == entries_.begin()) return 0;
    if (it == entries_.end()) return entries_.size() - 1;
    const std::size_t hi = static_cast<std::size_t>(it - entries_.begin());
    const double dl = tau_prime - entries_[hi - 1].tau_prime;
    const double dh = it->tau_prime - tau_prime;
    return dh < dl ? hi : hi - 1;
}

std::vector<double> SequenceSet::deltas_at(double tau_prime) const {
    if (!covers(tau_prime)) {
        throw InvalidArgument("tau'=" + format_double(tau_prime) + " outside set coverage [" +
                              format_double(tau_prime_min()) + ", " +
                              format_double(tau_prime_max()) + "]");
    }
    auto it = std::lower_bound(entries_.begin(), entries_.end(), tau_prime,
                               [](const SequenceEntry& e, double t) { return e.tau_prime < t; });
    if (it->tau_prime == tau_prime || it == entries_.begin()) return it->deltas;
    const SequenceEntry& lo = *(it - 1);
    const SequenceEntry& hi = *it;
    const double w = (tau_prime - lo.tau_prime) / (hi.tau_prime - lo.tau_prime);
    std::vector<double> out(lo.deltas.size());
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] = (1.0 - w) * lo.deltas[j] + w * hi.deltas[j];
    }
    return out;
}

std::string format_double(double x) {
    // 17 significant digits, trailing zeros kept: round-trips exactly.
    char buf[64];
    const int len = std::snprintf(buf, sizeof(buf), "%#.17g", x);
    return std::string(buf, static_cast<std::size_t>(len));
}

void write_sequence_set(std::ostream& os, const SequenceSet& set) {
    os << "# n=" << set.n() << '\n';
    os << "# tau_pi_prime=" << format_double(set.tau_pi_prime()) << '\n';
    os << "# generator=" << to_string(set.generator()) << '\n';
    for (const auto& [key, value] : set.meta()) os << "# " << key << '=' << value << '\n';
    for (const SequenceEntry& e : set.entries()) {
        os << format_double(e.tau_prime);
        for (double d : e.deltas) os << ',' << format_double(d);
        os << '\n';
    }
}

namespace {

double parse_double(std::string_view text, int line_no) {
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
    double v = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw InvalidArgument("line " + std::to_string(line_no) + ": bad number '" +
                              std::string(text) + "'");
    }
    return v;
}

}  // namespace

SequenceSet read_sequence_set(std::istream& is) {
    int n = -1;
    double tau_pi_prime = 0.0;
    bool have_generator = false;
    Generator gen = Generator::ofdd;
    std::map<std::string, std::string> meta;
    std::vector<SequenceEntry> entries;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            std::string body = line.substr(1);
            while (!body.empty() && body.front() == ' ') body.erase(body.begin());
            const auto eq = body.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = body.substr(0, eq);
            const std::string value = body.substr(eq + 1);
            if (key == "n") {
                n = static_cast<int>(parse_double(value, line_no));
            } else if (key == "tau_pi_prime") {
                tau_pi_prime = parse_double(value, line_no);
            } else if (key == "generator") {
                gen = parse_generator(value);
                have_generator = true;
            } else {
                meta[key] = value;
            }
            continue;
        }
        if (n < 0) throw InvalidArgument("sequence set: record before the n= header");
        SequenceEntry e;
        std::string_view rest = line;
        bool first = true;
        while (true) {
            const auto comma = rest.find(',');
            const double v = parse_double(rest.substr(0, comma), line_no);
            if (first) {
                e.tau_prime = v;
                first = false;
            } else {
                e.deltas.push_back(v);
            }
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (static_cast<int>(e.deltas.size()) != n) {
            throw InvalidArgument("line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(n) + " deltas");
        }
        entries.push_back(std::move(e));
    }
    if (n < 0 || !have_generator) {
        throw InvalidArgument("sequence set: missing n= or generator= header");
    }
    return SequenceSet(n, tau_pi_prime, gen, std::move(entries), std::move(meta));
}

void save_sequence_set(const std::string& path, const SequenceSet& set) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InvalidArgument("cannot write " + path);
    write_sequence_set(os, set);
}

SequenceSet load_sequence_set(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InvalidArgument("cannot read " + path);
    return read_sequence_set(is);
}

}  // namespace ddfilt
