#include "doctest.h"

#include <fstream>

#include "inboxaudit/corpus.hpp"
#include "inboxaudit/error.hpp"
#include "inboxaudit/synth.hpp"
#include "inboxaudit/text.hpp"
#include "helpers.hpp"

using namespace inboxaudit;
using testutil::Mail;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const AuditError& e) {
        return e.kind();
    }
    FAIL("no AuditError thrown");
    return ErrorKind::Config;
}

} // namespace

TEST_CASE("alias generation") {
    CHECK(corpus::generate_alias("karen", 7, "example.org") == "karen007@example.org");
    CHECK(corpus::generate_alias("bo", 149, "x.co") == "bo149@x.co");
    CHECK(kind_of([] { corpus::generate_alias("karen", 150, "x.co"); }) == ErrorKind::Range);
    CHECK(kind_of([] { corpus::generate_alias("karen", -1, "x.co"); }) == ErrorKind::Range);
    CHECK(corpus::alias_index("karen007") == 7);
    CHECK(corpus::alias_index("bo149") == 149);
    CHECK_FALSE(corpus::alias_index("karen7").has_value());
}

TEST_CASE("alias round trip through the registry") {
    std::string csv = "local_part,index,service_name,service_kind,registration_date\n";
    std::vector<std::string> locals;
    for (int i = 0; i < 150; ++i) {
        const auto addr = corpus::generate_alias("ann", i, "a.example");
        const auto local = addr.substr(0, addr.find('@'));
        locals.push_back(local);
        csv += local + "," + std::to_string(i) + ",Svc" + std::to_string(i) + "," +
               (i < 100 ? "online_service" : "mobile_app") + ",2023-01-01\n";
    }
    const auto reg = corpus::parse_alias_registry(csv);
    CHECK(reg.size() == 150);
    for (int i = 0; i < 150; ++i) {
        const auto* e = reg.find_local_part(locals[static_cast<std::size_t>(i)]);
        REQUIRE(e != nullptr);
        CHECK(e->index == i);
        CHECK(*corpus::alias_index(e->local_part) == i);
        CHECK(e->service_name == "Svc" + std::to_string(i));
    }
}

TEST_CASE("registry validation") {
    const std::string header = "local_part,index,service_name,service_kind,registration_date\n";
    CHECK(kind_of([&] {
              corpus::parse_alias_registry(header + "ann042,42,A,online_service,2023-01-01\n"
                                                    "bob042,42,B,online_service,2023-01-01\n");
          }) == ErrorKind::Integrity);
    CHECK(kind_of([&] { corpus::parse_alias_registry(header + "ann042,42,A,mobile_app,2023-01-01\n"); }) ==
          ErrorKind::Integrity);
    CHECK(kind_of([&] { corpus::parse_alias_registry(header + "ann042,42,A,online_service,yesterday\n"); }) ==
          ErrorKind::Parse);
    try {
        corpus::parse_alias_registry(header + "ann001,1,A,online_service,2023-01-01\nbad,x,B,online_service,2023-01-01\n");
        FAIL("expected a parse error");
    } catch (const AuditError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    const auto empty = corpus::parse_alias_registry("");
    CHECK(empty.empty());
    CHECK(empty.warnings.size() == 1);
}

TEST_CASE("root domains") {
    CHECK(corpus::root_domain("news@mail.bestbuy.com") == "bestbuy.com");
    CHECK(corpus::root_domain("a@b.co.uk") == "b.co.uk");
    CHECK(corpus::root_domain("promo@em.temuemail.com") == "temuemail.com");
    CHECK(corpus::root_domain("x@deep.sub.example.unknowntld") == "example.unknowntld");
    CHECK(kind_of([] { corpus::root_domain("no-at-sign"); }) == ErrorKind::Format);
}

TEST_CASE("minimal message parses") {
    Mail m;
    m.id = "abc@shopmart.com";
    const auto r = corpus::parse_eml(testutil::eml(m), "mx.audit.example");
    REQUIRE(r.ok());
    CHECK(r.message_id == "abc@shopmart.com");
    CHECK(r.from_address == "news@mail.shopmart.com");
    CHECK(r.from_root_domain == "shopmart.com");
    CHECK(r.recipient == "ava000@audit.example");
    CHECK(r.subject == "Hello");
    CHECK(r.spf == AuthResult::Pass);
    CHECK(r.dkim == AuthResult::Pass);
    REQUIRE(r.sender_ip.has_value());
    CHECK(r.sender_ip->to_string() == "167.89.1.2");
    REQUIRE(r.received_local.has_value());
    CHECK(r.received_local->weekday == 1);
    CHECK(r.received_local->hour == 14);
    CHECK(r.body_text.find("Plain body text.") != std::string::npos);
}

TEST_CASE("noise is unparseable and never throws") {
    synth::Rng rng(3);
    for (int t = 0; t < 20; ++t) {
        std::string noise;
        for (int i = 0; i < 400; ++i) noise.push_back(static_cast<char>(rng.below(256)));
        noise[0] = '\0';
        const auto r = corpus::parse_eml(noise);
        CHECK_FALSE(r.ok());
        CHECK(r.message_id.rfind("unparseable-", 0) == 0);
    }
    CHECK_FALSE(corpus::parse_eml("").ok());
}

TEST_CASE("folded headers and encoded words") {
    const std::string raw =
        "Received: from out.example.net\r\n"
        "  (out.example.net\r\n"
        "\t[13.110.4.5]) by mx.audit.example; Wed, 06 Mar 2024 09:00:00 +0000\r\n"
        "From: =?UTF-8?Q?Caf=C3=A9?= <hi@news.cafe.example.com>\r\n"
        "To: ava000@audit.example\r\n"
        "Subject: =?UTF-8?B?SGVsbG8gV29ybGQ=?=\r\n"
        "\r\n"
        "body\r\n";
    const auto r = corpus::parse_eml(raw, "mx.audit.example");
    REQUIRE(r.ok());
    const auto rec = r.headers.first("Received");
    REQUIRE(rec.has_value());
    const std::string unfolded = "from out.example.net  (out.example.net\t[13.110.4.5]) by mx.audit.example; Wed, 06 Mar 2024 09:00:00 +0000";
    CHECK(std::string(*rec) == unfolded);
    REQUIRE(r.sender_ip.has_value());
    CHECK(r.sender_ip->to_string() == "13.110.4.5");
    CHECK(r.subject == "Hello World");
    CHECK(r.from_address == "hi@news.cafe.example.com");
}

TEST_CASE("multipart bodies prefer text parts and fall back to html") {
    const std::string multi =
        "From: a@shop.example.com\r\nTo: ava000@audit.example\r\nDate: Tue, 05 Mar 2024 10:00:00 +0000\r\n"
        "MIME-Version: 1.0\r\nContent-Type: multipart/alternative; boundary=\"b1\"\r\n\r\n"
        "--b1\r\nContent-Type: text/plain; charset=utf-8\r\nContent-Transfer-Encoding: quoted-printable\r\n\r\n"
        "Save 30% =\r\ntoday\r\n--b1\r\nContent-Type: text/html\r\n\r\n<p>ignored</p>\r\n--b1--\r\n";
    auto r = corpus::parse_eml(multi);
    REQUIRE(r.ok());
    CHECK(r.body_text.find("Save 30% today") != std::string::npos);
    CHECK(r.body_text.find("ignored") == std::string::npos);

    const std::string html =
        "From: a@shop.example.com\r\nTo: ava000@audit.example\r\nDate: Tue, 05 Mar 2024 10:00:00 +0000\r\n"
        "Content-Type: text/html\r\n\r\n<html><body><b>Order</b> shipped</body></html>\r\n";
    r = corpus::parse_eml(html);
    REQUIRE(r.ok());
    CHECK(r.body_text.find("Order") != std::string::npos);
    CHECK(r.body_text.find("<b>") == std::string::npos);
}

TEST_CASE("recipient resolution order") {
    HeaderMap h;
    h.add("To", "someone@else.example");
    CHECK(corpus::resolve_recipient(h) == "someone@else.example");
    h.add("X-Original-To", "leo001@audit.example");
    CHECK(corpus::resolve_recipient(h) == "leo001@audit.example");
    h.add("Delivered-To", "ava000@audit.example");
    CHECK(corpus::resolve_recipient(h) == "ava000@audit.example");
}

TEST_CASE("ingest counts buckets, unmatched and duplicates") {
    const auto reg = corpus::parse_alias_registry(testutil::registry_csv());
    std::vector<std::string> raws;
    const char* to[] = {"ava000", "leo001", "mia002"};
    for (int i = 0; i < 10; ++i) {
        Mail m;
        m.to = std::string(to[i % 3]) + "@audit.example";
        m.id = "m" + std::to_string(i) + "@x";
        m.date = "Tue, 05 Mar 2024 1" + std::to_string(i) + ":00:00 +0000";
        raws.push_back(testutil::eml(m));
    }
    auto res = corpus::ingest_messages(raws, reg, {Timezone::utc(), "mx.audit.example", true});
    CHECK(res.report.files == 10);
    CHECK(res.report.ok == 10);
    CHECK(res.report.unmatched == 0);
    CHECK(res.store.by_service().size() == 3);

    Mail stranger;
    stranger.to = "nobody149@audit.example";
    stranger.id = "stranger@x";
    raws.push_back(testutil::eml(stranger));
    raws.push_back(raws.front());
    raws.push_back(std::string("\0garbage", 8));
    res = corpus::ingest_messages(raws, reg);
    CHECK(res.report.files == 13);
    CHECK(res.report.unmatched == 1);
    CHECK(res.report.duplicate_message_ids == 1);
    CHECK(res.report.unparseable == 1);
    CHECK(res.report.ok + res.report.unparseable == res.report.files - res.report.duplicate_message_ids);
    // The unparseable record has no alias either, so it shares the bucket.
    CHECK(res.store.by_service().at(std::string(kUnmatched)).size() == 2);
    std::size_t bucketed = 0;
    for (const auto& [name, idx] : res.store.by_service()) bucketed += idx.size();
    CHECK(bucketed == res.store.size());
}

TEST_CASE("directory ingest matches in-memory ingest, serial and parallel") {
    testutil::TempDir dir("ingest");
    const auto corpus_data = synth::generate_corpus({.seed = 5, .days = 40});
    for (const auto& f : corpus_data.messages) {
        const auto path = dir.path() / f.name;
        std::filesystem::create_directories(path.parent_path());
        text::write_file(path, f.contents);
    }
    text::write_file(dir.path() / "eml" / "notes.txt", "not a message");
    const auto reg = corpus::parse_alias_registry(corpus_data.registry_csv);
    corpus::IngestOptions serial{Timezone::utc(), corpus_data.trusted_mx, false};
    corpus::IngestOptions parallel{Timezone::utc(), corpus_data.trusted_mx, true};
    const auto a = corpus::ingest_corpus(dir.path(), reg, serial);
    const auto b = corpus::ingest_corpus(dir.path(), reg, parallel);
    CHECK(a.report.files == corpus_data.messages.size());
    CHECK(corpus::to_jsonl(a.store) == corpus::to_jsonl(b.store));
    CHECK(a.report.ok == b.report.ok);
    CHECK(a.report.unparseable == 2);
    CHECK(a.report.duplicate_message_ids == 1);
    CHECK_THROWS_AS(corpus::ingest_corpus(dir.path() / "missing", reg), AuditError);
}

TEST_CASE("JSON-lines round trip") {
    const auto reg = corpus::parse_alias_registry(testutil::registry_csv());
    std::vector<std::string> raws;
    for (int i = 0; i < 5; ++i) {
        Mail m;
        m.id = "rt" + std::to_string(i) + "@x";
        m.subject = "Subject \"quoted\" " + std::to_string(i);
        m.ip = i % 2 ? "2a0b:4340:10::5" : "69.72.33.1";
        raws.push_back(testutil::eml(m));
    }
    raws.push_back("\x01\x02 binary");
    const auto res = corpus::ingest_messages(raws, reg);
    const auto text1 = corpus::to_jsonl(res.store);
    const auto back = corpus::parse_jsonl(text1);
    CHECK(back.size() == res.store.size());
    CHECK(corpus::to_jsonl(back) == text1);
    CHECK_THROWS_AS(corpus::parse_jsonl("{\"message_id\": 3}\n"), AuditError);
}

TEST_CASE("content hash is stable") {
    CHECK(corpus::content_hash("") == "cbf29ce484222325");
    CHECK(corpus::content_hash("a") == "af63dc4c8601ec8c");
}
