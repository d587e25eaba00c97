#include "doctest.h"

#include "inboxaudit/authlineage.hpp"
#include "inboxaudit/corpus.hpp"

using namespace inboxaudit;
using namespace inboxaudit::authlineage;

namespace {

HeaderMap headers(std::initializer_list<std::pair<const char*, const char*>> fields) {
    HeaderMap h;
    for (const auto& [k, v] : fields) h.add(k, v);
    return h;
}

EmailRecord record_for(const std::string& service, const std::string& from_root, AuthResult spf, AuthResult dkim) {
    EmailRecord r;
    r.message_id = "m@x";
    AliasEntry e;
    e.local_part = "ann001";
    e.index = 1;
    e.service_name = service;
    r.alias = e;
    r.from_address = "news@" + from_root;
    r.from_root_domain = from_root;
    r.spf = spf;
    r.dkim = dkim;
    r.parse_status = ParseStatus::Ok;
    return r;
}

netintel::AsnRecord asn(std::uint32_t n, const char* org) {
    return {n, org, *IpPrefix::parse("13.110.0.0/16")};
}

bool invariants_hold(const ProvenanceLabel& l, const EmailRecord& r) {
    const bool pass = r.spf == AuthResult::Pass || r.dkim == AuthResult::Pass;
    if (l.spam == SpamClass::Uuss &&
        !(l.provenance == Provenance::Utp || (r.spf == AuthResult::Fail && r.dkim == AuthResult::Fail)))
        return false;
    if (l.spam == SpamClass::Sos && !((l.provenance == Provenance::Internal || l.provenance == Provenance::Atp) && pass))
        return false;
    return true;
}

} // namespace

TEST_CASE("authentication results") {
    auto v = parse_auth_results(headers({{"Authentication-Results", "mx.audit; spf=pass smtp.mailfrom=a; dkim=pass header.d=b.com"}}),
                                "mx.audit");
    CHECK(v.spf == AuthResult::Pass);
    CHECK(v.dkim == AuthResult::Pass);
    CHECK(v.authenticated_domain == "b.com");

    v = parse_auth_results(HeaderMap{});
    CHECK(v.spf == AuthResult::Absent);
    CHECK(v.dkim == AuthResult::Absent);

    v = parse_auth_results(headers({{"Authentication-Results", "mx.audit; spf=pass smtp.mailfrom=a"}}), "mx.audit");
    CHECK(v.spf == AuthResult::Pass);
    CHECK(v.dkim == AuthResult::Absent);

    v = parse_auth_results(headers({{"Authentication-Results", "mx.audit; SPF=Fail; DKIM=None"}}), "mx.audit");
    CHECK(v.spf == AuthResult::Fail);
    CHECK(v.dkim == AuthResult::None);

    // Headers from other hosts are ignored when a trusted host is configured.
    v = parse_auth_results(headers({{"Authentication-Results", "relay.elsewhere; spf=pass; dkim=pass"},
                                    {"Authentication-Results", "mx.audit; spf=fail; dkim=fail"}}),
                           "mx.audit");
    CHECK(v.spf == AuthResult::Fail);
    CHECK(v.dkim == AuthResult::Fail);

    v = parse_auth_results(headers({{"Authentication-Results", "mx.audit; spf; dkim=pass"}}));
    CHECK(v.spf == AuthResult::Absent);
    CHECK_FALSE(v.warnings.empty());
}

TEST_CASE("sender IP from the trusted hop") {
    auto h = headers({{"Received", "from out.sendgrid.net ([167.89.1.2]) by mx.audit"}});
    auto ip = extract_sender_ip(h, "mx.audit");
    REQUIRE(ip.has_value());
    CHECK(ip->to_string() == "167.89.1.2");

    h = headers({{"Received", "from a.example ([13.110.9.9]) by mx.audit; Tue, 05 Mar 2024 10:00:00 +0000"},
                 {"Received", "from b.example ([10.1.1.1]) by a.example"},
                 {"Received", "from c.example ([192.0.2.77]) by b.example"},
                 {"Received", "from d.example ([198.51.100.3]) by c.example"}});
    ip = extract_sender_ip(h, "mx.audit");
    REQUIRE(ip.has_value());
    CHECK(ip->to_string() == "13.110.9.9");
    CHECK(*received_timestamp(*trusted_received_header(h, "mx.audit")) == 1709632800);

    h = headers({{"Received", "from v6.example (v6.example [IPv6:2a0b:4340:10::7]) by mx.audit"}});
    ip = extract_sender_ip(h, "mx.audit");
    REQUIRE(ip.has_value());
    CHECK(ip->family() == IpFamily::V6);

    CHECK_FALSE(extract_sender_ip(HeaderMap{}).has_value());
}

TEST_CASE("provenance examples") {
    // Service domain relayed by a marketing provider.
    auto r = record_for("BestBuy", "bestbuy.com", AuthResult::Pass, AuthResult::None);
    ProvenanceInputs in;
    in.asn = asn(14340, "SALESFORCE-MC");
    in.marketing_flag = true;
    in.content = classify::ContentLabel::Promotional;
    auto l = classify_provenance(r, in);
    CHECK(l.provenance == Provenance::Atp);
    CHECK(l.spam == SpamClass::Sos);
    CHECK_FALSE(l.operator_unknown);

    // Own ASN per the bundled map.
    const auto map = default_org_map();
    r = record_for("LinkedIn", "linkedin.com", AuthResult::None, AuthResult::Pass);
    in = {};
    in.org_map = &map;
    in.asn = asn(14413, "LINKEDIN");
    in.content = classify::ContentLabel::Crm;
    l = classify_provenance(r, in);
    CHECK(l.provenance == Provenance::Internal);
    CHECK(l.spam == SpamClass::Sos);

    // Alerts are not spam.
    in.content = classify::ContentLabel::Alert;
    CHECK(classify_provenance(r, in).spam == SpamClass::NotSpam);

    // Unrelated domain with failing auth.
    r = record_for("BestBuy", "unrelated-domain.biz", AuthResult::Fail, AuthResult::Fail);
    l = classify_provenance(r, {});
    CHECK(l.provenance == Provenance::Utp);
    CHECK(l.spam == SpamClass::Uuss);

    // Service domain, both mechanisms failing: flagged for review.
    r = record_for("BestBuy", "bestbuy.com", AuthResult::Fail, AuthResult::Fail);
    l = classify_provenance(r, {});
    CHECK(l.spam == SpamClass::Uuss);
    CHECK(l.needs_review);

    // Cloud host.
    r = record_for("BestBuy", "bestbuy.com", AuthResult::Pass, AuthResult::Pass);
    in = {};
    in.asn = asn(16509, "AMAZON-02");
    l = classify_provenance(r, in);
    CHECK(l.provenance == Provenance::Atp);
    CHECK(l.operator_unknown);
}

TEST_CASE("provenance invariants over every auth and sender combination") {
    const AuthResult verdicts[] = {AuthResult::Pass, AuthResult::Fail, AuthResult::None, AuthResult::Absent};
    const std::optional<netintel::AsnRecord> senders[] = {asn(64010, "SHOPMART-NET"), asn(11377, "SENDGRID"),
                                                           asn(16509, "AMAZON-02"), std::nullopt};
    const std::optional<classify::ContentLabel> contents[] = {classify::ContentLabel::Promotional,
                                                              classify::ContentLabel::Crm,
                                                              classify::ContentLabel::Alert, std::nullopt};
    for (auto spf : verdicts)
        for (auto dkim : verdicts)
            for (const char* domain : {"shopmart.com", "other.biz"})
                for (std::size_t s = 0; s < 4; ++s) {
                    auto r = record_for("Shopmart", domain, spf, dkim);
                    std::optional<SpamClass> uuss_state;
                    for (const auto& c : contents) {
                        ProvenanceInputs in;
                        in.asn = senders[s];
                        in.marketing_flag = s == 1;
                        in.content = c;
                        const auto l = classify_provenance(r, in);
                        CHECK(invariants_hold(l, r));
                        // Content never moves a message in or out of uuss.
                        const bool uuss = l.spam == SpamClass::Uuss;
                        if (!uuss_state) uuss_state = uuss ? SpamClass::Uuss : SpamClass::Sos;
                        CHECK((*uuss_state == SpamClass::Uuss) == uuss);
                        CHECK(classify_provenance(r, in).provenance == l.provenance);
                    }
                }
}

TEST_CASE("org map parsing") {
    const auto m = parse_org_map("service_name,accepted_domains,accepted_asn_org_substrings\n"
                                 "Shopmart,shopmart.com;shopmart.co.uk,shopmart\n");
    const auto* s = m.find("Shopmart");
    REQUIRE(s != nullptr);
    CHECK(s->accepted_domains.size() == 2);
    CHECK(default_org_map().find("Wish") != nullptr);
    CHECK(default_org_map().find("AliExpress") != nullptr);
}
