#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "inboxaudit/timeutil.hpp"

// Seeded synthetic data: EML corpora with their side files, plus the
// numeric fixtures used by the property suites.
namespace inboxaudit::synth {

/// Platform-stable draws on top of mt19937_64.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    std::size_t below(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }
    double normal();
    template <typename T>
    const T& pick(const std::vector<T>& v) { return v[below(v.size())]; }

private:
    std::mt19937_64 gen_;
};

struct SynthFile {
    std::string name; // relative path, e.g. "eml/0001.eml"
    std::string contents;
};

enum class SenderKind { Own, Marketing, Cloud, Unresolved };

/// Ground truth for one generated message.
struct Truth {
    std::string message_id; // empty for unparseable noise
    std::string service;    // empty when the recipient alias is unregistered
    std::string spf;        // pass|fail|none
    std::string dkim;
    bool domain_matches = true;
    SenderKind sender = SenderKind::Own;
    std::string content;    // promotional|crm|alert
};

struct SynthCorpus {
    std::vector<SynthFile> messages;
    std::vector<Truth> truth; // aligned with messages
    std::string registry_csv;
    std::string ip2asn_csv;
    std::string abuse_csv;
    std::string org_map_csv;
    std::string trusted_mx = "mx.audit.example";
};

struct CorpusOptions {
    std::uint64_t seed = 42;
    int days = 361;
    CivilDate start{2023, 3, 6};
    std::size_t unparseable = 2;
    std::size_t unmatched = 3;
    std::size_t duplicates = 1;
};

/// Sixteen services over `days` days with weekly and hour-of-day structure,
/// marketing/cloud/own-network senders and a handful of spoofed,
/// unmatched, duplicate and unparseable messages.
SynthCorpus generate_corpus(const CorpusOptions& options = {});

/// `count` messages cycling through every cell of {spf, dkim} ∈
/// {pass, fail, none}² × {domain match, mismatch} × {marketing, own,
/// cloud, unresolved network}.
SynthCorpus generate_taxonomy_grid(std::size_t count = 500, std::uint64_t seed = 42);

/// Writes messages under `dir` plus registry.csv, ip2asn.csv, abuse.csv,
/// org_map.csv and audit.conf (output_dir = dir/out).
void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir, std::uint64_t seed = 42);

/// base + amplitude·sin(2πt/period) + N(0, noise_sd²), t = 0..days−1.
std::vector<double> periodic_series(std::size_t days, double period, double amplitude, double noise_sd,
                                    std::uint64_t seed, double base = 20.0);

struct Blobs {
    Eigen::MatrixXd points;
    std::vector<int> labels;
};

/// Isotropic Gaussian blobs, `per_blob` points around each center.
Blobs gaussian_blobs(const std::vector<std::vector<double>>& centers, std::size_t per_blob, double sd,
                     std::uint64_t seed);

} // namespace inboxaudit::synth
