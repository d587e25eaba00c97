#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "inboxaudit/stats.hpp"

namespace inboxaudit::fixture {

struct FixtureRow {
    std::string root_domain;
    std::string sector;
    int cluster = 0;
    std::int64_t total = 0;
    std::int64_t promotional = 0;
    std::int64_t crm = 0;
    std::int64_t alert = 0;
};

struct FixtureTable {
    std::vector<FixtureRow> rows;
};

FixtureTable parse_fixture_table(std::string_view contents);
FixtureTable load_fixture_table(const std::filesystem::path& path);
/// The table compiled into the library.
const FixtureTable& bundled_table();

std::vector<std::pair<std::string, double>> totals_by_domain(const FixtureTable& table);

/// sector × {promotional, crm, alert}, sectors sorted by name.
stats::ContingencyTable sector_type_table(const FixtureTable& table);

/// Per-company totals grouped by sector (sectors sorted by name).
std::vector<std::vector<double>> totals_by_sector(const FixtureTable& table);

enum class KurtosisForm { Excess, Raw };

struct MomentConvention {
    stats::MomentConvention moments = stats::MomentConvention::Sample;
    KurtosisForm kurtosis = KurtosisForm::Excess;

    std::string describe() const;
};

/// Every supported convention applied to `values`.
struct ConventionCandidate {
    MomentConvention convention;
    double skewness = 0.0;
    double kurtosis = 0.0;
};
std::vector<ConventionCandidate> moment_candidates(const std::vector<double>& values);

/// Convention whose kurtosis lands nearest `reference_kurtosis`.
MomentConvention detect_convention(const std::vector<double>& values, double reference_kurtosis);

// Published reference figures checked by fixture-check.
struct References {
    std::int64_t total_emails = 4847;
    std::size_t root_domains = 109;
    double top10_share_pct = 63.23;
    double top10_tolerance_pp = 0.05;
    double skewness = 3.55;
    double skewness_tolerance = 0.02;
    double kurtosis = 12.92;
    double kurtosis_tolerance = 0.05;
    double chi2 = 2138.858;
    double chi2_rel_tolerance = 0.01;
    double chi2_df = 14;
    double chi2_p_below = 1e-4;
    double anova_f = 3.5095;
    double anova_rel_tolerance = 0.01;
    double anova_df1 = 7;
    double anova_df2 = 101;
    double anova_p = 0.002;
    double anova_p_tolerance = 0.001;
};

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct CheckReport {
    std::vector<Check> checks;
    std::vector<std::string> notes;
    MomentConvention convention;

    bool all_pass() const noexcept;
    std::string to_text() const;
};

/// `convention` nullopt = auto-detect against the reference kurtosis.
CheckReport run_checks(const FixtureTable& table, const References& refs = {},
                       std::optional<MomentConvention> convention = std::nullopt);

} // namespace inboxaudit::fixture
