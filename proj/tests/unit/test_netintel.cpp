#include "doctest.h"

#include <cmath>

#include "inboxaudit/corpus.hpp"
#include "inboxaudit/error.hpp"
#include "inboxaudit/netintel.hpp"
#include "inboxaudit/synth.hpp"
#include "helpers.hpp"

using namespace inboxaudit;
using namespace inboxaudit::netintel;

namespace {

std::optional<IpAddress> ip(const char* s) { return IpAddress::parse(s); }

} // namespace

TEST_CASE("address parsing and reserved space") {
    CHECK(ip("167.89.1.2")->to_string() == "167.89.1.2");
    CHECK(ip("2a0b:4340:10::7")->family() == IpFamily::V6);
    CHECK_FALSE(ip("300.1.1.1").has_value());
    CHECK_FALSE(ip("1.2.3").has_value());
    CHECK(ip("10.0.0.1")->is_reserved());
    CHECK(ip("192.168.3.4")->is_reserved());
    CHECK(ip("100.64.0.9")->is_reserved());
    CHECK(ip("fe80::1")->is_reserved());
    CHECK_FALSE(ip("167.89.1.2")->is_reserved());
    CHECK(IpPrefix::parse("167.89.0.0/17")->contains(*ip("167.89.127.255")));
    CHECK_FALSE(IpPrefix::parse("167.89.0.0/17")->contains(*ip("167.89.128.0")));
}

TEST_CASE("longest-prefix lookup") {
    const auto t = parse_ip2asn("167.89.0.0/17, 11377, SENDGRID\n"
                                "167.0.0.0/8, 3356, LEVEL3\n"
                                "2a0b:4340::/32, 60001, LEARNLY-NET\n"
                                "45.0.0.0/8, 0, Not routed\n");
    auto r = t.lookup(ip("167.89.1.2"));
    REQUIRE(r.record.has_value());
    CHECK(r.record->asn == 11377);
    CHECK(r.record->label() == "AS11377 SENDGRID");
    r = t.lookup(ip("167.200.1.1"));
    REQUIRE(r.record.has_value());
    CHECK(r.record->asn == 3356);
    CHECK(t.lookup(ip("2a0b:4340:10::7")).record->asn == 60001);
    CHECK_FALSE(t.lookup(ip("45.1.2.3")).record.has_value());
    CHECK_FALSE(t.lookup(ip("8.8.8.8")).record.has_value());
    r = t.lookup(ip("10.0.0.1"));
    CHECK_FALSE(r.record.has_value());
    CHECK(r.internal_hop);
    CHECK_FALSE(t.lookup(std::nullopt).record.has_value());
    CHECK_THROWS_AS(parse_ip2asn("167.89.0.0/17, many, SENDGRID\n"), AuditError);
}

TEST_CASE("range rows split into covering blocks") {
    const auto blocks = range_to_cidrs(*ip("10.0.0.1"), *ip("10.0.0.6"));
    std::vector<std::string> s;
    for (const auto& b : blocks) s.push_back(b.to_string());
    CHECK(s == std::vector<std::string>{"10.0.0.1/32", "10.0.0.2/31", "10.0.0.4/31", "10.0.0.6/32"});
    const auto t = parse_ip2asn("range_start,range_end,asn,country,organization\n"
                                "35.184.0.0,35.191.255.255,15169,US,GOOGLE-CLOUD\n");
    CHECK(t.lookup(ip("35.190.1.1")).record->asn == 15169);
    CHECK_FALSE(t.lookup(ip("35.192.0.0")).record.has_value());
}

TEST_CASE("marketing flag") {
    const std::vector<std::string> list{"salesforce", "mailgun", "sendgrid", "sparkpost"};
    const auto p = *IpPrefix::parse("1.0.0.0/8");
    CHECK(flag_marketing_asn({11377, "SENDGRID", p}, list));
    CHECK_FALSE(flag_marketing_asn({16509, "AMAZON-02", p}, list));
    CHECK_FALSE(flag_marketing_asn({1, "", p}, list));
    CHECK(flag_marketing_asn({14340, "salesforce.com, inc.", p}, default_marketing_providers()));
}

TEST_CASE("abuse reports") {
    auto a = parse_abuse_reports("ip,total_reports\n1.2.3.4,3\n5.6.7.8,0\n9.9.9.9,2\n");
    CHECK(a.size() == 3);
    CHECK(a.at(*ip("5.6.7.8")) == 0);
    a = parse_abuse_reports("ip,total_reports\n1.2.3.4,3\n1.2.3.4,4\n");
    CHECK(a.size() == 1);
    CHECK(a.at(*ip("1.2.3.4")) == 7);
    CHECK_THROWS_AS(parse_abuse_reports("ip,total_reports\nnot-an-ip,3\n"), AuditError);
}

TEST_CASE("sender profiles on a small corpus") {
    const auto reg = corpus::parse_alias_registry(testutil::registry_csv());
    std::vector<std::string> raws;
    const char* ips[] = {"69.72.33.1", "69.72.33.2"};
    for (int i = 0; i < 5; ++i) {
        testutil::Mail m;
        m.id = "p" + std::to_string(i) + "@x";
        m.ip = ips[i % 2];
        raws.push_back(testutil::eml(m));
    }
    testutil::Mail other;
    other.to = "leo001@audit.example";
    other.from = "hi@gadgetly.com";
    other.id = "g@x";
    other.ip = "10.2.3.4";
    raws.push_back(testutil::eml(other));
    const auto store = corpus::ingest_messages(raws, reg).store;
    const auto table = parse_ip2asn("69.72.32.0/20, 35017, MAILGUN-TECH\n");
    const auto abuse = parse_abuse_reports("ip,total_reports\n69.72.33.1,4\n");
    const auto set = build_sender_profiles(store, table, abuse, default_marketing_providers());
    REQUIRE(set.profiles.size() == 2);
    const auto& g = set.profiles[0];
    CHECK(g.service_name == "Gadgetly");
    CHECK(g.ips.empty()); // private hop excluded
    CHECK(g.spam_reports_total == 0);
    const auto& s = set.profiles[1];
    CHECK(s.service_name == "Shopmart");
    CHECK(s.ips.size() == 2);
    CHECK(s.asns.size() == 1);
    CHECK(s.emails_total == 5);
    CHECK(s.uses_marketing_provider);
    CHECK(s.spam_reports_total == 4);
    CHECK(s.primary_root_domain == "shopmart.com");
}

TEST_CASE("profile invariants on the synthetic corpus") {
    const auto data = synth::generate_corpus({.seed = 9, .days = 120});
    std::vector<std::string> raws;
    for (const auto& m : data.messages) raws.push_back(m.contents);
    const auto store =
        corpus::ingest_messages(raws, corpus::parse_alias_registry(data.registry_csv), {Timezone::utc(), data.trusted_mx, true})
            .store;
    const auto table = parse_ip2asn(data.ip2asn_csv);
    const auto abuse = parse_abuse_reports(data.abuse_csv);
    const auto set = build_sender_profiles(store, table, abuse, default_marketing_providers());

    std::int64_t emails = 0, reports = 0;
    for (const auto& p : set.profiles) {
        emails += p.emails_total;
        std::int64_t sum = 0;
        for (const auto& a : p.ips)
            if (auto it = abuse.find(a); it != abuse.end()) sum += it->second;
        CHECK(p.spam_reports_total == sum);
        reports += p.spam_reports_total;
        bool marketing = false;
        for (const auto& r : p.asns) marketing = marketing || flag_marketing_asn(r, default_marketing_providers());
        CHECK(p.uses_marketing_provider == marketing);
    }
    CHECK(emails + static_cast<std::int64_t>(set.unmatched_emails) == static_cast<std::int64_t>(store.size()));
    std::int64_t tree = 0;
    for (const auto& [asn_label, domains] : set.treemap)
        for (const auto& [domain, n] : domains) tree += n;
    CHECK(tree == reports);
    double flow = 0;
    for (const auto& e : set.sankey) flow += e.weight;
    CHECK(flow == doctest::Approx(static_cast<double>(emails)));

    const auto pareto = asn_concentration(set);
    CHECK(top_fraction_share(pareto, 0.2) >= 0.85);
}

TEST_CASE("ip hopping correlation") {
    std::vector<SenderProfile> linear, cubic;
    for (int n = 1; n <= 8; ++n) {
        SenderProfile p;
        for (int i = 0; i < n; ++i) p.ips.insert(IpAddress::v4(0x01000000u + static_cast<std::uint32_t>(i)));
        p.spam_reports_total = 10 * n;
        linear.push_back(p);
        p.spam_reports_total = n * n * n;
        cubic.push_back(p);
    }
    const auto l = ip_hopping_correlation(linear);
    CHECK(l.pearson.r == doctest::Approx(1.0));
    CHECK(l.companies == 8);
    const auto c = ip_hopping_correlation(cubic);
    CHECK(c.spearman.r == doctest::Approx(1.0));
    CHECK(c.pearson.r < 0.999);
    linear.resize(2);
    CHECK_THROWS_AS(ip_hopping_correlation(linear), AuditError);
}
