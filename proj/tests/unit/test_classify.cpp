#include "doctest.h"

#include <atomic>
#include <mutex>
#include <thread>

#include "inboxaudit/classify.hpp"
#include "inboxaudit/error.hpp"
#include "inboxaudit/synth.hpp"
#include "../oracles.hpp"

// After Eigen: resolv.h, pulled in by httplib, defines a macro named _res.
#include "httplib.h"
#include "json.hpp"

using namespace inboxaudit;
using namespace inboxaudit::classify;

namespace {

EmailRecord message(std::string subject, std::string body = {}) {
    EmailRecord r;
    r.message_id = "c@x";
    r.subject = std::move(subject);
    r.body_text = std::move(body);
    r.parse_status = ParseStatus::Ok;
    return r;
}

AdapterConfig adapter() {
    AdapterConfig c;
    c.url = "http://127.0.0.1:1/classify";
    c.model = "test-model";
    c.retry_budget = 2;
    return c;
}

} // namespace

TEST_CASE("rule engine examples") {
    CHECK(classify_text("48-Hour Sale: 30% off everything", "").label == ContentLabel::Promotional);
    CHECK(classify_text("Your verification code is 882415", "").label == ContentLabel::Alert);
    CHECK(classify_text("Here's what's new in your community this week", "").label == ContentLabel::Crm);
    const auto empty = classify_text("", "");
    CHECK(empty.label == ContentLabel::Crm);
    CHECK(empty.confidence == 1);
    CHECK(empty.low_signal);
}

TEST_CASE("rule engine is a pure function of subject and body") {
    auto a = message("Flash sale ends tonight", "Use promo code SAVE20 and shop now");
    auto b = a;
    b.message_id = "other@x";
    b.from_address = "x@y.com";
    const auto ca = classify_rule_based(a), cb = classify_rule_based(b);
    CHECK(ca.label == cb.label);
    CHECK(ca.confidence == cb.confidence);
    CHECK(ca.rationale == cb.rationale);
    CHECK(ca.confidence >= 1);
    CHECK(ca.confidence <= 5);
}

TEST_CASE("custom rule table and tie order") {
    const auto t = parse_rule_table("# version: t1\n# crm_baseline: 0\n"
                                    "label\tfield\tkind\tpattern\tweight\n"
                                    "promotional\tsubject\tword\tzap\t1\n"
                                    "alert\tsubject\tword\tzap\t1\n");
    CHECK(t.version() == "t1");
    CHECK(classify_text("zap", "", t).label == ContentLabel::Alert);
    CHECK_THROWS_AS(parse_rule_table("label\tfield\tkind\tpattern\tweight\nhappy\tsubject\tword\tx\t1\n"), AuditError);
}

TEST_CASE("response decoding") {
    auto c = decode_response(R"({"sentiment":"promotional","confidence":5,"rationale":"discount"})");
    CHECK(c.label == ContentLabel::Promotional);
    CHECK(c.confidence == 5);
    CHECK(c.rationale == "discount");
    c = decode_response("Sure! Here is the result:\n{\"sentiment\": \"alert\", \"confidence\": 3, \"rationale\": \"code\"}\nThanks.");
    CHECK(c.label == ContentLabel::Alert);
    CHECK_THROWS_AS(decode_response("no json here"), AuditError);
    CHECK_THROWS_AS(decode_response(R"({"sentiment":"angry","confidence":3,"rationale":"x"})"), AuditError);
    CHECK_THROWS_AS(decode_response(R"({"sentiment":"CRM","confidence":9,"rationale":"x"})"), AuditError);
    CHECK_THROWS_AS(decode_response(R"({"sentiment":"CRM","confidence":2,"rationale":"x"} {"sentiment":"CRM","confidence":2,"rationale":"y"})"),
                    AuditError);
}

TEST_CASE("prompt carries the schema and the email text") {
    const auto p = render_prompt("SUBJECT LINE HERE");
    CHECK(p.find("SUBJECT LINE HERE") != std::string::npos);
    CHECK(p.find("sentiment") != std::string::npos);
    const auto text = email_input_text(message("s", std::string(100, 'x')), 20);
    CHECK(text.size() <= 20);
}

TEST_CASE("adapter retries transport failures") {
    int calls = 0;
    Transport flaky = [&](const AdapterConfig&, const std::string& request) -> std::string {
        ++calls;
        const auto j = nlohmann::json::parse(request);
        CHECK(j.at("model") == "test-model");
        CHECK(j.contains("schema"));
        if (calls <= 2) fail(ErrorKind::Transport, "timeout");
        return R"({"sentiment":"CRM","confidence":4,"rationale":"update"})";
    };
    const auto c = classify_external(message("hello"), adapter(), flaky);
    CHECK(c.source == LabelSource::External);
    CHECK(c.label == ContentLabel::Crm);
    CHECK(c.attempts == 3);

    calls = -10;
    auto cfg = adapter();
    cfg.retry_budget = 1;
    CHECK_THROWS_AS(classify_external(message("hello"), cfg, flaky), AuditError);
}

TEST_CASE("adapter re-prompts once on a schema violation") {
    std::vector<std::string> prompts;
    Transport t = [&](const AdapterConfig&, const std::string& request) -> std::string {
        prompts.push_back(nlohmann::json::parse(request).at("prompt"));
        if (prompts.size() == 1) return "I think it is promotional.";
        return R"({"sentiment":"promotional","confidence":2,"rationale":"sale"})";
    };
    const auto c = classify_external(message("sale"), adapter(), t);
    CHECK(c.label == ContentLabel::Promotional);
    REQUIRE(prompts.size() == 2);
    CHECK(prompts[1].find("Respond with JSON only") != std::string::npos);

    Transport never = [](const AdapterConfig&, const std::string&) -> std::string { return "nope"; };
    try {
        classify_external(message("sale"), adapter(), never);
        FAIL("expected protocol error");
    } catch (const AuditError& e) {
        CHECK(e.kind() == ErrorKind::Protocol);
    }
    const auto fb = classify_with_fallback(message("30% off"), adapter(), never);
    CHECK(fb.fallback);
    CHECK(fb.source == LabelSource::Rules);
    CHECK(fb.label == ContentLabel::Promotional);
    CHECK(fb.attempts == 2);
}

TEST_CASE("batch keeps input order with a bounded pool") {
    std::atomic<int> in_flight{0}, peak{0};
    Transport t = [&](const AdapterConfig&, const std::string& request) -> std::string {
        const int now = ++in_flight;
        int p = peak.load();
        while (now > p && !peak.compare_exchange_weak(p, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
        --in_flight;
        const std::string prompt = nlohmann::json::parse(request).at("prompt");
        if (prompt.find("broken") != std::string::npos) fail(ErrorKind::Transport, "down");
        const char* label = prompt.find("alert-item") != std::string::npos ? "alert" : "CRM";
        return std::string(R"({"sentiment":")") + label + R"(","confidence":3,"rationale":"r"})";
    };
    std::vector<EmailRecord> recs;
    for (int i = 0; i < 12; ++i) recs.push_back(message(i % 3 == 0 ? "alert-item" : i == 5 ? "broken 50% off" : "news"));
    std::vector<const EmailRecord*> ptrs;
    for (const auto& r : recs) ptrs.push_back(&r);
    auto cfg = adapter();
    cfg.pool_size = 3;
    cfg.retry_budget = 0;
    const auto out = classify_external_batch(ptrs, cfg, t);
    REQUIRE(out.size() == 12);
    for (int i = 0; i < 12; ++i) {
        if (i == 5) {
            CHECK(out[5].fallback);
            CHECK(out[5].label == ContentLabel::Promotional);
        } else {
            CHECK(out[static_cast<std::size_t>(i)].label == (i % 3 == 0 ? ContentLabel::Alert : ContentLabel::Crm));
            CHECK(out[static_cast<std::size_t>(i)].source == LabelSource::External);
        }
    }
    CHECK(peak.load() <= 3);
}

TEST_CASE("http transport against a local mock server") {
    httplib::Server server;
    std::mutex mu;
    std::vector<std::string> bodies;
    server.Post("/classify", [&](const httplib::Request& req, httplib::Response& res) {
        std::lock_guard lock(mu);
        bodies.push_back(req.body);
        res.set_content(R"({"sentiment":"alert","confidence":5,"rationale":"receipt"})", "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    auto cfg = adapter();
    cfg.url = "http://127.0.0.1:" + std::to_string(port) + "/classify";
    cfg.timeout = std::chrono::milliseconds(5000);
    const auto c = classify_external(message("Your receipt"), cfg);
    CHECK(c.source == LabelSource::External);
    CHECK(c.label == ContentLabel::Alert);

    cfg.url = "http://127.0.0.1:" + std::to_string(port) + "/missing";
    cfg.retry_budget = 0;
    const auto fb = classify_with_fallback(message("Your receipt"), cfg);
    CHECK(fb.fallback);
    CHECK(fb.fallback_reason.find("transport") != std::string::npos);

    server.stop();
    th.join();
    CHECK(bodies.size() == 1);
}

TEST_CASE("kappa examples") {
    CHECK(cohens_kappa({"P", "P", "C", "C"}, {"C", "C", "P", "P"}) == doctest::Approx(-1.0));
    CHECK(cohens_kappa({"A", "B", "C"}, {"A", "B", "C"}) == doctest::Approx(1.0));
    CHECK(cohens_kappa({"A", "A"}, {"A", "A"}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(cohens_kappa({"A"}, {"A", "B"}), AuditError);
}

TEST_CASE("kappa matches the oracle and its symmetries") {
    synth::Rng rng(23);
    const std::vector<std::string> labels{"promotional", "crm", "alert"};
    const std::map<std::string, std::string> rename{{"promotional", "x"}, {"crm", "y"}, {"alert", "z"}};
    for (int t = 0; t < 25; ++t) {
        const std::size_t n = 4 + rng.below(9);
        std::vector<std::string> a, b, ra, rb;
        for (std::size_t i = 0; i < n; ++i) {
            a.push_back(rng.pick(labels));
            b.push_back(rng.uniform() < 0.5 ? a.back() : rng.pick(labels));
            ra.push_back(rename.at(a.back()));
            rb.push_back(rename.at(b.back()));
        }
        const auto want = oracle::kappa(a, b);
        CHECK(std::fabs(cohens_kappa(a, b) - static_cast<double>(want)) < 1e-9);
        CHECK(cohens_kappa(a, b) == doctest::Approx(cohens_kappa(b, a)));
        CHECK(cohens_kappa(a, b) == doctest::Approx(cohens_kappa(ra, rb)));
    }
}

TEST_CASE("pairwise reliability") {
    RaterMatrix same{{"i1", "i2", "i3"}, {"h1", "h2", "h3"}, {{"P", "C", "A"}, {"P", "C", "A"}, {"P", "C", "A"}}};
    CHECK(*pairwise_irr(same).human_human_mean == doctest::Approx(1.0));

    RaterMatrix two{{"i1", "i2"}, {"h1", "llm"}, {{"P", "C"}, {"P", "C"}}};
    const auto s = pairwise_irr(two, "llm");
    CHECK(*s.machine_human_mean == doctest::Approx(1.0));
    CHECK_FALSE(s.human_human_mean.has_value());

    RaterMatrix one{{"i1"}, {"h1"}, {{"P"}}};
    CHECK_THROWS_AS(pairwise_irr(one), AuditError);

    // Five humans and a machine on 50 items, planted agreement.
    synth::Rng rng(29);
    const std::vector<std::string> labels{"promotional", "crm", "alert"};
    RaterMatrix m;
    std::vector<std::string> truth;
    for (int i = 0; i < 50; ++i) {
        m.items.push_back("item" + std::to_string(i));
        truth.push_back(rng.pick(labels));
    }
    for (int r = 0; r < 6; ++r) {
        m.raters.push_back(r == 5 ? "llm" : "h" + std::to_string(r));
        std::vector<std::string> col;
        for (const auto& t : truth) col.push_back(rng.uniform() < 0.7 ? t : rng.pick(labels));
        m.labels.push_back(col);
    }
    const auto irr = pairwise_irr(m, "llm");
    long double hh = 0, mh = 0;
    int nhh = 0, nmh = 0;
    for (int a = 0; a < 6; ++a)
        for (int b = a + 1; b < 6; ++b) {
            const auto k = oracle::kappa(m.labels[static_cast<std::size_t>(a)], m.labels[static_cast<std::size_t>(b)]);
            if (b == 5) {
                mh += k;
                ++nmh;
            } else {
                hh += k;
                ++nhh;
            }
        }
    CHECK(std::fabs(*irr.human_human_mean - static_cast<double>(hh / nhh)) < 1e-9);
    CHECK(std::fabs(*irr.machine_human_mean - static_cast<double>(mh / nmh)) < 1e-9);
    CHECK(irr.pairs.size() == 15);

    const auto parsed = parse_rater_matrix("item,h1,h2\na,P,P\nb,C,A\n");
    CHECK(parsed.raters == std::vector<std::string>{"h1", "h2"});
    CHECK(parsed.labels[1] == std::vector<std::string>{"P", "A"});
    CHECK_THROWS_AS(parse_rater_matrix("item,h1,h2\na,P\n"), AuditError);
}
