#include "doctest.h"

#include <cmath>
#include <map>
#include <set>

#include "inboxaudit/error.hpp"
#include "inboxaudit/fixture.hpp"
#include "../oracles.hpp"

using namespace inboxaudit;
using namespace inboxaudit::fixture;

namespace {

bool same_rows(const FixtureTable& a, const FixtureTable& b) {
    if (a.rows.size() != b.rows.size()) return false;
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        const auto &x = a.rows[i], &y = b.rows[i];
        if (x.root_domain != y.root_domain || x.sector != y.sector || x.cluster != y.cluster || x.total != y.total ||
            x.promotional != y.promotional || x.crm != y.crm || x.alert != y.alert)
            return false;
    }
    return true;
}

} // namespace

TEST_CASE("bundled table shape") {
    const auto& t = bundled_table();
    CHECK(t.rows.size() == 109);
    std::set<std::string> domains, sectors;
    for (const auto& r : t.rows) {
        domains.insert(r.root_domain);
        sectors.insert(r.sector);
        CHECK(r.total >= 0);
    }
    CHECK(domains.size() == t.rows.size());
    CHECK(sectors.size() == 8);

    const auto ct = sector_type_table(t);
    REQUIRE(ct.counts.size() == 8);
    CHECK(ct.col_labels.size() == 3);
    CHECK(std::is_sorted(ct.row_labels.begin(), ct.row_labels.end()));
    std::map<std::string, std::int64_t> promo;
    for (const auto& r : t.rows) promo[r.sector] += r.promotional;
    for (std::size_t i = 0; i < ct.row_labels.size(); ++i) CHECK(ct.counts[i][0] == promo[ct.row_labels[i]]);

    const auto groups = totals_by_sector(t);
    CHECK(groups.size() == 8);
    double sum = 0, direct = 0;
    std::size_t n = 0;
    for (const auto& g : groups) {
        n += g.size();
        for (double v : g) sum += v;
    }
    for (const auto& r : t.rows) direct += static_cast<double>(r.total);
    CHECK(n == t.rows.size());
    CHECK(sum == direct);
}

TEST_CASE("fixture statistics agree with the oracles") {
    const auto& t = bundled_table();
    const auto ct = sector_type_table(t);
    const auto chi = stats::chi_squared_independence(ct);
    CHECK(std::fabs(chi.statistic - static_cast<double>(oracle::chi2_stat(ct.counts))) <= 1e-9 * chi.statistic);
    CHECK(chi.df1 == 14);

    const auto groups = totals_by_sector(t);
    const auto an = stats::one_way_anova(groups);
    CHECK(std::fabs(an.statistic - static_cast<double>(oracle::anova_f(groups))) <= 1e-9 * an.statistic);
    CHECK(std::fabs(an.p_value - static_cast<double>(oracle::f_sf(an.statistic, an.df1, an.df2))) <= 1e-9 * an.p_value);
}

TEST_CASE("moment conventions") {
    std::vector<double> totals;
    for (const auto& r : bundled_table().rows) totals.push_back(static_cast<double>(r.total));
    const auto cands = moment_candidates(totals);
    REQUIRE(cands.size() == 4);
    std::map<std::pair<int, int>, double> k;
    for (const auto& c : cands)
        k[{static_cast<int>(c.convention.moments), static_cast<int>(c.convention.kurtosis)}] = c.kurtosis;
    for (int m : {0, 1}) CHECK(k[{m, 1}] == doctest::Approx(k[{m, 0}] + 3.0));

    // Whichever candidate is nearest the reference is picked.
    for (const auto& c : cands) {
        const auto d = detect_convention(totals, c.kurtosis);
        CHECK(d.moments == c.convention.moments);
        CHECK(d.kurtosis == c.convention.kurtosis);
        CHECK_FALSE(d.describe().empty());
    }
}

TEST_CASE("checks pass against self-consistent references and leave the table untouched") {
    const FixtureTable before = bundled_table();
    const auto first = run_checks(bundled_table());
    CHECK(same_rows(before, bundled_table()));
    CHECK(first.checks.size() >= 5);
    CHECK(first.to_text().find(first.checks[0].name) != std::string::npos);

    // References set to the table's own figures must all pass.
    References refs;
    std::int64_t sum = 0;
    std::vector<double> totals;
    for (const auto& r : before.rows) {
        sum += r.total;
        totals.push_back(static_cast<double>(r.total));
    }
    std::sort(totals.rbegin(), totals.rend());
    double top = 0;
    for (int i = 0; i < 10; ++i) top += totals[static_cast<std::size_t>(i)];
    const auto d = stats::descriptive(totals, stats::MomentConvention::Sample);
    const auto chi = stats::chi_squared_independence(sector_type_table(before));
    const auto an = stats::one_way_anova(totals_by_sector(before));
    refs.total_emails = sum;
    refs.top10_share_pct = 100.0 * top / static_cast<double>(sum);
    refs.skewness = d.skewness;
    refs.kurtosis = d.excess_kurtosis;
    refs.chi2 = chi.statistic;
    refs.anova_f = an.statistic;
    refs.anova_p = an.p_value;
    const auto self = run_checks(before, refs);
    for (const auto& c : self.checks) CHECK_MESSAGE(c.pass, c.name << ": " << c.detail);
    CHECK(self.all_pass());

    // Forcing the other convention moves the kurtosis off the reference.
    const auto forced = run_checks(before, refs, MomentConvention{stats::MomentConvention::Population, KurtosisForm::Excess});
    CHECK_FALSE(forced.all_pass());
}

TEST_CASE("fixture parsing errors") {
    const std::string header = "root_domain,sector,cluster,total,promotional,crm,alert\n";
    CHECK(parse_fixture_table(header + "a.com,X,0,3,1,1,1\n").rows.size() == 1);
    CHECK_THROWS_AS(parse_fixture_table("root_domain,sector,total\na.com,X,3\n"), AuditError);
    try {
        parse_fixture_table(header + "a.com,X,0,3,-1,1,1\n");
        FAIL("expected an error");
    } catch (const AuditError& e) {
        CHECK(e.kind() == ErrorKind::Integrity);
    }
    try {
        parse_fixture_table(header + "a.com,X,0,three,1,1,1\n");
        FAIL("expected an error");
    } catch (const AuditError& e) {
        CHECK(e.kind() == ErrorKind::Parse);
    }
}
