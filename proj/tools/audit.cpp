// audit: command-line front end for the inbox audit pipeline.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "inboxaudit/report.hpp"
#include "inboxaudit/synth.hpp"

namespace fs = std::filesystem;
using namespace inboxaudit;

namespace {

struct GlobalOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::vector<std::string> sets;
    bool quiet = false;
};

report::AuditConfig make_config(const GlobalOptions& g) {
    report::Overrides overrides;
    for (const auto& kv : g.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) fail(ErrorKind::Config, "--set expects key=value, got '" + kv + "'");
        overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    if (g.seed) overrides["seed"] = std::to_string(*g.seed);
    if (!g.out.empty()) overrides["output_dir"] = g.out;
    std::optional<fs::path> path;
    if (!g.config.empty()) path = g.config;
    return report::load_config(path, overrides);
}

void print_log(const report::RunLog& log, bool quiet) {
    for (const auto& w : log.warnings) std::cerr << "warning: " << w << "\n";
    if (quiet) return;
    for (const auto& p : log.written) std::cout << "wrote " << p.string() << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Inbox provenance and marketing-behaviour audit"};
    app.require_subcommand(1);
    app.fallthrough();
    GlobalOptions g;
    app.add_option("--config", g.config, "key = value configuration file");
    app.add_option("--seed", g.seed, "random seed (default 42)");
    app.add_option("--out", g.out, "output directory (overrides output_dir)");
    app.add_option("--set", g.sets, "override a config key, key=value (repeatable)");
    app.add_flag("-q,--quiet", g.quiet, "only print warnings and errors");

    auto* ingest = app.add_subcommand("ingest", "parse the EML corpus into corpus.jsonl");
    auto* classify = app.add_subcommand("classify", "label every parsed message");
    auto* analyze = app.add_subcommand("analyze", "write the analysis artifacts");
    auto* full = app.add_subcommand("report", "ingest, classify and analyze in one run");

    auto* check = app.add_subcommand("fixture-check", "recompute the bundled table statistics against reference values");
    std::string table_path;
    check->add_option("--table", table_path, "alternative fixture table (CSV)");

    auto* validate = app.add_subcommand("validate", "check artifacts against the published schemas");
    std::string validate_dir;
    validate->add_option("dir", validate_dir, "artifact directory")->required();

    auto* synth_cmd = app.add_subcommand("synth", "write a seeded synthetic corpus with its side files");
    std::string synth_dir;
    bool grid = false;
    std::size_t grid_count = 500;
    synth_cmd->add_option("dir", synth_dir, "destination directory")->required();
    synth_cmd->add_flag("--grid", grid, "authentication/provenance grid instead of the behavioural corpus");
    synth_cmd->add_option("--count", grid_count, "grid message count");

    CLI11_PARSE(app, argc, argv);

    try {
        if (check->parsed()) {
            std::optional<fs::path> path;
            if (!table_path.empty()) path = table_path;
            const auto r = report::cmd_fixture_check(path);
            std::cout << r.to_text();
            return r.all_pass() ? 0 : 1;
        }
        if (validate->parsed()) {
            const auto issues = report::validate_directory(validate_dir);
            for (const auto& i : issues) std::cout << i.file << ": " << i.message << "\n";
            if (issues.empty() && !g.quiet) std::cout << "all artifacts valid\n";
            return issues.empty() ? 0 : 3;
        }
        if (synth_cmd->parsed()) {
            const std::uint64_t seed = g.seed.value_or(42);
            synth::SynthCorpus corpus;
            if (grid) {
                corpus = synth::generate_taxonomy_grid(grid_count, seed);
            } else {
                synth::CorpusOptions o;
                o.seed = seed;
                corpus = synth::generate_corpus(o);
            }
            synth::write_corpus(corpus, synth_dir, seed);
            if (!g.quiet)
                std::cout << "wrote " << corpus.messages.size() << " messages and audit.conf under " << synth_dir << "\n";
            return 0;
        }

        const auto config = make_config(g);
        report::RunLog log;
        if (ingest->parsed()) log = report::cmd_ingest(config);
        else if (classify->parsed()) log = report::cmd_classify(config);
        else if (analyze->parsed()) log = report::cmd_analyze(config);
        else if (full->parsed()) log = report::cmd_report(config);
        print_log(log, g.quiet);
        return 0;
    } catch (const AuditError& e) {
        std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
        return report::exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
