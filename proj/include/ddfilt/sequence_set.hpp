#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ddfilt/pulse_sequence.hpp"

namespace ddfilt {

struct SequenceEntry {
    double tau_prime;
    std::vector<double> deltas;
};

/// An ordered family of sequences indexed by dimensionless duration
/// tau' = omega_D * tau. Entries are strictly increasing in tau' and each
/// deltas list is a valid pulse-center list for pulse width tau_pi' / tau'.
class SequenceSet {
public:
    SequenceSet(int n, double tau_pi_prime, Generator generator,
                std::vector<SequenceEntry> entries,
                std::map<std::string, std::string> meta = {});

    int n() const { return n_; }
    double tau_pi_prime() const { return tau_pi_prime_; }
    Generator generator() const { return generator_; }
    const std::vector<SequenceEntry>& entries() const { return entries_; }
    const SequenceEntry& operator[](std::size_t i) const { return entries_[i]; }
    std::size_t size() const { return entries_.size(); }
    double tau_prime_min() const { return entries_.front().tau_prime; }
    double tau_prime_max() const { return entries_.back().tau_prime; }

    // Free-form provenance (grid parameters, tolerances). Written as
    // `# key=value` comments.
    const std::map<std::string, std::string>& meta() const { return meta_; }

    bool covers(double tau_prime) const;
    // Index of the entry nearest in tau' (lower index on ties).
    std::size_t nearest_index(double tau_prime) const;
    // Per-coordinate linear interpolation between the neighboring entries.
    // Throws InvalidArgument outside [tau_prime_min, tau_prime_max].
    std::vector<double> deltas_at(double tau_prime) const;

private:
    int n_;
    double tau_pi_prime_;
    Generator generator_;
    std::vector<SequenceEntry> entries_;
    std::map<std::string, std::string> meta_;
};

// Text format: `# n=<int>`, `# tau_pi_prime=<float>`, `# generator=<tag>`
// header comments (plus one `# key=value` line per meta item), then one
// `tau_prime,delta_1,...,delta_n` record per line, LF terminated.
void write_sequence_set(std::ostream& os, const SequenceSet& set);
SequenceSet read_sequence_set(std::istream& is);

void save_sequence_set(const std::string& path, const SequenceSet& set);
SequenceSet load_sequence_set(const std::string& path);

// Decimal with 17 significant digits; parses back to the same double.
std::string format_double(double x);

}  // namespace ddfilt
