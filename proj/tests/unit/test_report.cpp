#include "doctest.h"

#include <set>

#include "inboxaudit/error.hpp"
#include "inboxaudit/report.hpp"
#include "inboxaudit/synth.hpp"
#include "inboxaudit/text.hpp"
#include "json.hpp"
#include "helpers.hpp"

using namespace inboxaudit;
using namespace inboxaudit::report;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const AuditError& e) {
        return e.kind();
    }
    FAIL("no AuditError thrown");
    return ErrorKind::Io;
}

AuditConfig write_synth(const synth::SynthCorpus& corpus, const fs::path& dir) {
    synth::write_corpus(corpus, dir, 7);
    return load_config(dir / "audit.conf");
}

bool has_warning(const RunLog& log, const std::string& needle) {
    for (const auto& w : log.warnings)
        if (w.find(needle) != std::string::npos) return true;
    return false;
}

std::string slurp(const fs::path& p) { return text::read_file(p); }

} // namespace

TEST_CASE("config parsing") {
    const auto c = parse_config("# audit\n"
                                "corpus_dir = mail\n"
                                "registry_path = /abs/registry.csv\n"
                                "k_max = 6\n"
                                "pca_variance_threshold = 0.9\n"
                                "classifier_mode = rules\n",
                                {{"k_max", "8"}, {"seed", "11"}}, "/base");
    CHECK(c.corpus_dir == fs::path("/base/mail"));
    CHECK(c.registry_path == fs::path("/abs/registry.csv"));
    CHECK(c.k_max == 8);
    CHECK(c.seed == 11);
    CHECK(c.pca_target.mode == cluster::PcaTarget::Mode::VarianceThreshold);
    CHECK(c.pca_target.threshold == doctest::Approx(0.9));
    CHECK(c.audit_timezone == "UTC");

    CHECK(kind_of([] { parse_config("bogus = 1\n"); }) == ErrorKind::Config);
    CHECK(kind_of([] { parse_config("", {{"bogus", "1"}}); }) == ErrorKind::Config);
    CHECK(kind_of([] { parse_config("k_min\n"); }) == ErrorKind::Config);
    CHECK(kind_of([] { parse_config("k_min = x\n"); }) == ErrorKind::Config);
    CHECK(kind_of([] { parse_config("k_min = 5\nk_max = 3\n"); }) == ErrorKind::Config);
    CHECK(kind_of([] { parse_config("classifier_mode = external\n"); }) == ErrorKind::Config);
    CHECK(kind_of([] { parse_config("classifier_mode = maybe\n"); }) == ErrorKind::Config);
    CHECK(kind_of([] { parse_config("pca_components = 3\npca_variance_threshold = 0.8\n"); }) == ErrorKind::Config);
    CHECK(kind_of([] { parse_config("pca_variance_threshold = 1.5\n"); }) == ErrorKind::Config);
    CHECK(kind_of([] { parse_config("adapter_pool_size = 0\n"); }) == ErrorKind::Config);
    CHECK(kind_of([] { load_config(fs::path("/nonexistent/audit.conf")); }) == ErrorKind::Config);

    try {
        parse_config("seed = 1\n\nwhat = 2\n");
    } catch (const AuditError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    // Every advertised key is recognised, whatever its value.
    for (const auto& key : config_keys()) {
        try {
            parse_config(key + " = 1\n");
        } catch (const AuditError& e) {
            CHECK(std::string(e.what()).find("unknown key") == std::string::npos);
        }
    }
}

TEST_CASE("exit codes and path validation") {
    CHECK(exit_code_for(ErrorKind::Config) == 2);
    for (auto k : {ErrorKind::Io, ErrorKind::Parse, ErrorKind::Format, ErrorKind::Integrity, ErrorKind::Transport,
                   ErrorKind::Protocol})
        CHECK(exit_code_for(k) == 3);
    for (auto k : {ErrorKind::InsufficientData, ErrorKind::Infeasible, ErrorKind::Undefined, ErrorKind::Shape,
                   ErrorKind::Range})
        CHECK(exit_code_for(k) == 4);

    AuditConfig c;
    c.corpus_dir = "/nonexistent/mail";
    c.registry_path = "/nonexistent/registry.csv";
    CHECK(kind_of([&] { validate_paths(c, Stage::Ingest); }) == ErrorKind::Config);
    CHECK(kind_of([&] { validate_paths(AuditConfig{}, Stage::Analyze); }) == ErrorKind::Config);
    CHECK_NOTHROW(validate_paths(AuditConfig{}, Stage::Classify));
    c.audit_timezone = "Mars/Olympus";
    CHECK(kind_of([&] { validate_paths(c, Stage::Classify); }) == ErrorKind::Config);
}

TEST_CASE("full pipeline on a synthetic corpus") {
    testutil::TempDir dir("pipeline");
    const auto config = write_synth(synth::generate_corpus({.seed = 9, .days = 120}), dir.path());

    const auto log = cmd_report(config, [](const classify::AdapterConfig&, const std::string&) -> std::string {
        FAIL("rules mode must not call the transport");
        return {};
    });
    for (const auto& name : analysis_artifacts()) CHECK_MESSAGE(fs::exists(config.output_dir / name), name);
    for (const char* name : {"corpus.jsonl", "ingest_report.json", "classifications.jsonl",
                             "classification_summary.json", "analysis.json"})
        CHECK_MESSAGE(fs::exists(config.output_dir / name), name);

    const auto issues = validate_directory(config.output_dir);
    for (const auto& i : issues) MESSAGE(i.file << ": " << i.message);
    CHECK(issues.empty());

    const auto ingest = nlohmann::json::parse(slurp(config.output_dir / "ingest_report.json"));
    CHECK(ingest["unparseable"].get<int>() == 2);

    const auto analysis = nlohmann::json::parse(slurp(config.output_dir / "analysis.json"));
    CHECK(analysis["seed"].get<std::uint64_t>() == config.seed);
    const auto& pareto = analysis["pareto"];
    CHECK(pareto["mean_per_root_domain"].get<double>() > 0.0);
    CHECK(pareto["services"].get<int>() == 16);

    // Re-running analysis gives identical bytes.
    std::map<std::string, std::string> first;
    for (const auto& name : analysis_artifacts()) first[name] = slurp(config.output_dir / name);
    first["analysis.json"] = slurp(config.output_dir / "analysis.json");
    cmd_analyze(config);
    for (const auto& [name, bytes] : first) CHECK_MESSAGE(slurp(config.output_dir / name) == bytes, name);
}

TEST_CASE("analysis without a classification artifact warns and computes labels") {
    testutil::TempDir dir("nolabels");
    const auto config = write_synth(synth::generate_corpus({.seed = 4, .days = 60}), dir.path());
    cmd_ingest(config);
    const auto log = cmd_analyze(config);
    CHECK(has_warning(log, "classifications.jsonl not found"));
    CHECK(validate_directory(config.output_dir).empty());
}

TEST_CASE("ingest edge cases") {
    testutil::TempDir dir("edges");
    fs::create_directories(dir.path() / "mail");
    text::write_file(dir.path() / "registry.csv", testutil::registry_csv());
    AuditConfig c;
    c.corpus_dir = dir.path() / "mail";
    c.registry_path = dir.path() / "registry.csv";
    c.output_dir = dir.path() / "out";
    const auto log = cmd_ingest(c);
    CHECK(has_warning(log, "no .eml files found"));
    const auto report = nlohmann::json::parse(slurp(c.output_dir / "ingest_report.json"));
    CHECK(report["ok"].get<int>() == 0);

    // analyze on an empty corpus is infeasible
    c.ip2asn_path = dir.path() / "ip2asn.csv";
    c.abuse_path = dir.path() / "abuse.csv";
    text::write_file(c.ip2asn_path, "cidr,asn,org\n");
    text::write_file(c.abuse_path, "ip,reports\n");
    CHECK(exit_code_for(kind_of([&] { cmd_analyze(c); })) == 4);

    text::write_file(c.registry_path, testutil::registry_csv() + "ava000,0,Other,online_service,2023-03-02,E-tailer\n");
    CHECK(kind_of([&] { cmd_ingest(c); }) == ErrorKind::Integrity);
}

TEST_CASE("external classifier mode through a stub transport") {
    testutil::TempDir dir("external");
    synth::write_corpus(synth::generate_corpus({.seed = 3, .days = 30}), dir.path(), 7);
    const auto config = load_config(dir.path() / "audit.conf",
                                    {{"classifier_mode", "external"}, {"adapter_url", "http://127.0.0.1:1/v1"},
                                     {"adapter_retry_budget", "0"}, {"adapter_pool_size", "2"}});
    cmd_ingest(config);

    std::atomic<int> calls{0};
    classify::Transport t = [&](const classify::AdapterConfig&, const std::string& request) -> std::string {
        // Every fifth request is refused to exercise the fallback path.
        if (++calls % 5 == 0) fail(ErrorKind::Transport, "refused");
        const auto body = nlohmann::json::parse(request).dump();
        const char* label = body.find("receipt") != std::string::npos ? "alert" : "promotional";
        return std::string(R"({"sentiment":")") + label + R"(","confidence":4,"rationale":"stub"})";
    };
    const auto log = cmd_classify(config, t);
    const auto s = nlohmann::json::parse(slurp(config.output_dir / "classification_summary.json"));
    CHECK(s["mode"] == "external");
    const auto classified = s["classified"].get<int>();
    const auto fallbacks = s["fallbacks"].get<int>();
    CHECK(classified > 0);
    CHECK(fallbacks > 0);
    CHECK(s["by_source"]["external"].get<int>() + s["by_source"]["rules"].get<int>() == classified);
    CHECK(s["by_source"]["rules"].get<int>() == fallbacks);
    CHECK(has_warning(log, "fell back to the rule engine"));
    CHECK(validate_directory(config.output_dir).empty());
}

TEST_CASE("few companies clamp the k range") {
    auto corpus = synth::generate_corpus({.seed = 6, .days = 60, .unparseable = 0, .unmatched = 0, .duplicates = 0});
    const std::set<std::string> keep{"Shopmart", "Gadgetly", "Stylehub", "Homecraft", "Bankwise", "Streamly"};
    synth::SynthCorpus small = corpus;
    small.messages.clear();
    small.truth.clear();
    for (std::size_t i = 0; i < corpus.messages.size(); ++i)
        if (keep.count(corpus.truth[i].service)) {
            small.messages.push_back(corpus.messages[i]);
            small.truth.push_back(corpus.truth[i]);
        }
    testutil::TempDir dir("clamp");
    const auto config = write_synth(small, dir.path());
    const auto log = cmd_report(config);
    CHECK(has_warning(log, "clamped"));
    const auto analysis = nlohmann::json::parse(slurp(config.output_dir / "analysis.json"));
    CHECK(analysis["clustering"]["k"].get<int>() <= 5);
    CHECK(validate_directory(config.output_dir).empty());
}

TEST_CASE("fixture check command") {
    const auto bundled = cmd_fixture_check();
    CHECK(bundled.checks.size() >= 5);

    testutil::TempDir dir("fixture");
    auto lines = text::split(std::string(slurp(fs::path(INBOXAUDIT_SOURCE_DIR) / "fixtures" / "domain_table.csv")), '\n', false);
    std::string trimmed;
    for (std::size_t i = 0; i < lines.size(); ++i)
        if (i != 1 && !lines[i].empty()) trimmed += std::string(lines[i]) + "\n";
    text::write_file(dir.path() / "table.csv", trimmed);
    const auto r = cmd_fixture_check(dir.path() / "table.csv");
    CHECK_FALSE(r.all_pass());
    bool count_failed = false;
    for (const auto& c : r.checks)
        if (!c.pass && c.detail.find("108") != std::string::npos) count_failed = true;
    CHECK(count_failed);
    CHECK(kind_of([&] { cmd_fixture_check(dir.path() / "missing.csv"); }) == ErrorKind::Io);
}
