#include "inboxaudit/fixture.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>

#include "inboxaudit/embedded.hpp"
#include "inboxaudit/error.hpp"
#include "inboxaudit/text.hpp"

namespace inboxaudit::fixture {

namespace {

template <typename T>
T parse_int(const std::string& s, std::size_t line, const char* column) {
    T v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
        fail(ErrorKind::Parse, "fixture line " + std::to_string(line) + ": bad " + column + " '" + s + "'");
    return v;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

} // namespace

FixtureTable parse_fixture_table(std::string_view contents) {
    const auto t = text::parse_delimited(contents);
    const char* names[] = {"root_domain", "sector", "cluster", "total", "promotional", "crm", "alert"};
    std::size_t cols[7];
    for (int i = 0; i < 7; ++i) {
        cols[i] = t.column(names[i]);
        if (cols[i] == static_cast<std::size_t>(-1)) fail(ErrorKind::Parse, std::string("fixture lacks column ") + names[i]);
    }
    FixtureTable table;
    for (const auto& row : t.rows) {
        for (auto c : cols)
            if (c >= row.fields.size()) fail(ErrorKind::Parse, "fixture line " + std::to_string(row.line) + ": missing column");
        FixtureRow r;
        r.root_domain = row.fields[cols[0]];
        r.sector = row.fields[cols[1]];
        r.cluster = parse_int<int>(row.fields[cols[2]], row.line, "cluster");
        r.total = parse_int<std::int64_t>(row.fields[cols[3]], row.line, "total");
        r.promotional = parse_int<std::int64_t>(row.fields[cols[4]], row.line, "promotional");
        r.crm = parse_int<std::int64_t>(row.fields[cols[5]], row.line, "crm");
        r.alert = parse_int<std::int64_t>(row.fields[cols[6]], row.line, "alert");
        if (r.total < 0 || r.promotional < 0 || r.crm < 0 || r.alert < 0)
            fail(ErrorKind::Integrity, "fixture line " + std::to_string(row.line) + ": negative count");
        table.rows.push_back(std::move(r));
    }
    return table;
}

FixtureTable load_fixture_table(const std::filesystem::path& path) {
    return parse_fixture_table(text::read_file(path));
}

const FixtureTable& bundled_table() {
    static const FixtureTable table = parse_fixture_table(embedded::domain_table_csv);
    return table;
}

std::vector<std::pair<std::string, double>> totals_by_domain(const FixtureTable& table) {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& r : table.rows) out.emplace_back(r.root_domain, static_cast<double>(r.total));
    return out;
}

stats::ContingencyTable sector_type_table(const FixtureTable& table) {
    std::map<std::string, std::vector<std::int64_t>> by_sector;
    for (const auto& r : table.rows) {
        auto& v = by_sector[r.sector];
        v.resize(3, 0);
        v[0] += r.promotional;
        v[1] += r.crm;
        v[2] += r.alert;
    }
    stats::ContingencyTable ct;
    ct.col_labels = {"promotional", "crm", "alert"};
    for (auto& [sector, counts] : by_sector) {
        ct.row_labels.push_back(sector);
        ct.counts.push_back(counts);
    }
    return ct;
}

std::vector<std::vector<double>> totals_by_sector(const FixtureTable& table) {
    std::map<std::string, std::vector<double>> groups;
    for (const auto& r : table.rows) groups[r.sector].push_back(static_cast<double>(r.total));
    std::vector<std::vector<double>> out;
    for (auto& [s, g] : groups) out.push_back(std::move(g));
    return out;
}

std::string MomentConvention::describe() const {
    std::string s = moments == stats::MomentConvention::Sample ? "sample-adjusted (G1/G2)" : "population (g1/g2)";
    s += kurtosis == KurtosisForm::Excess ? ", excess kurtosis" : ", raw kurtosis";
    return s;
}

std::vector<ConventionCandidate> moment_candidates(const std::vector<double>& values) {
    std::vector<ConventionCandidate> out;
    for (auto m : {stats::MomentConvention::Sample, stats::MomentConvention::Population}) {
        const auto d = stats::descriptive(values, m);
        out.push_back({{m, KurtosisForm::Excess}, d.skewness, d.excess_kurtosis});
        out.push_back({{m, KurtosisForm::Raw}, d.skewness, d.excess_kurtosis + 3.0});
    }
    return out;
}

MomentConvention detect_convention(const std::vector<double>& values, double reference_kurtosis) {
    const auto candidates = moment_candidates(values);
    const auto* best = &candidates.front();
    for (const auto& c : candidates)
        if (std::abs(c.kurtosis - reference_kurtosis) < std::abs(best->kurtosis - reference_kurtosis)) best = &c;
    return best->convention;
}

bool CheckReport::all_pass() const noexcept {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return !checks.empty();
}

std::string CheckReport::to_text() const {
    std::string out;
    for (const auto& c : checks) out += std::string(c.pass ? "PASS " : "FAIL ") + c.name + ": " + c.detail + "\n";
    for (const auto& n : notes) out += "note: " + n + "\n";
    return out;
}

CheckReport run_checks(const FixtureTable& table, const References& refs, std::optional<MomentConvention> convention) {
    CheckReport rep;
    std::vector<double> totals;
    std::int64_t sum = 0, typed = 0;
    for (const auto& r : table.rows) {
        totals.push_back(static_cast<double>(r.total));
        sum += r.total;
        typed += r.promotional + r.crm + r.alert;
    }

    {
        const bool pass = sum == refs.total_emails && table.rows.size() == refs.root_domains;
        rep.checks.push_back({"total volume", pass,
                              std::to_string(sum) + " emails across " + std::to_string(table.rows.size()) +
                                  " root domains (expected " + std::to_string(refs.total_emails) + " across " +
                                  std::to_string(refs.root_domains) + ", diff " + std::to_string(sum - refs.total_emails) + ")"});
        rep.notes.push_back("promotional+crm+alert columns sum to " + std::to_string(typed) + "; totals exceed them by " +
                            std::to_string(sum - typed));
    }

    if (sum <= 0) {
        rep.checks.push_back({"top-10 share", false, "table has no volume"});
        return rep;
    }

    {
        const auto p = stats::pareto(totals_by_domain(table));
        const double share = 100.0 * p.top_k_share(10);
        const bool pass = std::abs(share - refs.top10_share_pct) <= refs.top10_tolerance_pp + 1e-12;
        rep.checks.push_back({"top-10 share", pass,
                              fmt("%.3f%%", share) + " of table volume (expected " + fmt("%.2f", refs.top10_share_pct) +
                                  " +/- " + fmt("%.2f", refs.top10_tolerance_pp) + " pp)"});
        const double top10 = p.top_k_share(10) * p.total();
        rep.notes.push_back("top-10 volume over the reference total of " + std::to_string(refs.total_emails) + " is " +
                            fmt("%.3f%%", 100.0 * top10 / static_cast<double>(refs.total_emails)));
    }

    if (totals.size() >= 4) {
        rep.convention = convention.value_or(detect_convention(totals, refs.kurtosis));
        for (const auto& c : moment_candidates(totals))
            rep.notes.push_back("moments under " + c.convention.describe() + ": skewness " + fmt("%.4f", c.skewness) +
                                ", kurtosis " + fmt("%.4f", c.kurtosis));
        const auto d = stats::descriptive(totals, rep.convention.moments);
        const double kurt = d.excess_kurtosis + (rep.convention.kurtosis == KurtosisForm::Raw ? 3.0 : 0.0);
        const std::string conv = " [" + rep.convention.describe() + (convention ? ", pinned" : ", auto-detected") + "]";
        rep.checks.push_back({"skewness", std::abs(d.skewness - refs.skewness) <= refs.skewness_tolerance + 1e-12,
                              fmt("%.4f", d.skewness) + " (expected " + fmt("%.2f", refs.skewness) + " +/- " +
                                  fmt("%.2f", refs.skewness_tolerance) + ")" + conv});
        rep.checks.push_back({"kurtosis", std::abs(kurt - refs.kurtosis) <= refs.kurtosis_tolerance + 1e-12,
                              fmt("%.4f", kurt) + " (expected " + fmt("%.2f", refs.kurtosis) + " +/- " +
                                  fmt("%.2f", refs.kurtosis_tolerance) + ")" + conv});
        rep.notes.push_back("mean " + fmt("%.3f", d.mean) + ", median " + fmt("%.1f", d.median) +
                            " emails per root domain");
    }

    try {
        const auto chi = stats::chi_squared_independence(sector_type_table(table));
        const bool pass = std::abs(chi.statistic - refs.chi2) <= refs.chi2_rel_tolerance * refs.chi2 &&
                          chi.df1 == refs.chi2_df && chi.p_value < refs.chi2_p_below;
        rep.checks.push_back({"chi-squared sector x type", pass,
                              "chi2(" + fmt("%.0f", chi.df1) + ") = " + fmt("%.3f", chi.statistic) + ", p = " +
                                  fmt("%.3g", chi.p_value) + " (expected " + fmt("%.3f", refs.chi2) + " +/- 1%, df " +
                                  fmt("%.0f", refs.chi2_df) + ", p < 0.0001)"});
    } catch (const AuditError& e) {
        rep.checks.push_back({"chi-squared sector x type", false, e.what()});
    }

    try {
        const auto a = stats::one_way_anova(totals_by_sector(table));
        const bool pass = std::abs(a.statistic - refs.anova_f) <= refs.anova_rel_tolerance * refs.anova_f &&
                          a.df1 == refs.anova_df1 && a.df2 == refs.anova_df2 &&
                          std::abs(a.p_value - refs.anova_p) <= refs.anova_p_tolerance + 1e-12;
        rep.checks.push_back({"ANOVA totals by sector", pass,
                              "F(" + fmt("%.0f", a.df1) + ", " + fmt("%.0f", a.df2) + ") = " + fmt("%.4f", a.statistic) +
                                  ", p = " + fmt("%.5f", a.p_value) + " (expected " + fmt("%.4f", refs.anova_f) +
                                  " +/- 1%, df (7, 101), p " + fmt("%.3f", refs.anova_p) + " +/- " +
                                  fmt("%.3f", refs.anova_p_tolerance) + ")"});
    } catch (const AuditError& e) {
        rep.checks.push_back({"ANOVA totals by sector", false, e.what()});
    }
    return rep;
}

} // namespace inboxaudit::fixture
