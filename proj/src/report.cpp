#include "inboxaudit/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>

#include "json.hpp"

#include "inboxaudit/authlineage.hpp"
#include "inboxaudit/netintel.hpp"
#include "inboxaudit/stats.hpp"
#include "inboxaudit/temporal.hpp"
#include "inboxaudit/text.hpp"

namespace inboxaudit::report {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& what) {
    fail(ErrorKind::Config, what);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        config_error("config key '" + key + "': '" + value + "' is not a valid number");
    return out;
}

fs::path resolve(const fs::path& base, const std::string& value) {
    if (value.empty()) return {};
    fs::path p(value);
    return p.is_absolute() || base.empty() ? p : base / p;
}

json number_or_null(double v) {
    return std::isfinite(v) ? json(v) : json(nullptr);
}

json to_json(const stats::TestResult& t) {
    json j{{"statistic", number_or_null(t.statistic)}, {"df1", t.df1}, {"p_value", t.p_value}};
    j["df2"] = t.df2 > 0 ? json(t.df2) : json(nullptr);
    j["warnings"] = t.warnings;
    return j;
}

json to_json(const stats::Correlation& c) {
    return {{"r", c.r}, {"p_value", c.p_value}, {"n", c.n}};
}

void write_json(const fs::path& path, const json& j, RunLog& log) {
    text::write_file(path, j.dump(2, ' ', false, json::error_handler_t::replace) + "\n");
    log.written.push_back(path);
}

void write_text(const fs::path& path, const std::string& contents, RunLog& log) {
    text::write_file(path, contents);
    log.written.push_back(path);
}

std::string csv_row(std::initializer_list<std::string> fields) {
    std::string out;
    bool first = true;
    for (const auto& f : fields) {
        if (!first) out += ',';
        out += text::csv_escape(f);
        first = false;
    }
    return out + "\n";
}

const char* to_string(classify::LabelSource s) {
    return s == classify::LabelSource::External ? "external" : "rules";
}

std::vector<std::string> provider_list(const AuditConfig& config) {
    if (config.provider_list_path.empty()) return netintel::default_marketing_providers();
    std::vector<std::string> out;
    for (auto& line : text::split(text::read_file(config.provider_list_path), '\n'))
        if (!line.empty() && line[0] != '#') out.push_back(text::to_lower(line));
    return out;
}

Timezone load_timezone(const AuditConfig& config) {
    try {
        return Timezone::load(config.audit_timezone);
    } catch (const AuditError& e) {
        config_error("audit_timezone '" + config.audit_timezone + "': " + e.what());
    }
}

fs::path corpus_artifact(const AuditConfig& c) { return c.output_dir / "corpus.jsonl"; }
fs::path classification_artifact(const AuditConfig& c) { return c.output_dir / "classifications.jsonl"; }

corpus::CorpusStore load_corpus_artifact(const AuditConfig& config) {
    const auto path = corpus_artifact(config);
    if (!fs::exists(path)) fail(ErrorKind::Io, "corpus artifact " + path.string() + " not found; run ingest first");
    return corpus::read_jsonl(path, load_timezone(config));
}

json classification_json(const std::string& message_id, const classify::Classification& c) {
    return {{"message_id", message_id},
            {"label", classify::to_string(c.label)},
            {"confidence", c.confidence},
            {"rationale", c.rationale},
            {"source", to_string(c.source)},
            {"low_signal", c.low_signal},
            {"fallback", c.fallback},
            {"fallback_reason", c.fallback_reason},
            {"attempts", c.attempts}};
}

std::map<std::string, classify::ContentLabel> read_classifications(const fs::path& path) {
    std::map<std::string, classify::ContentLabel> out;
    std::size_t line_no = 0;
    for (const auto& line : text::split(text::read_file(path), '\n', false)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            const auto j = json::parse(line);
            const auto label = classify::content_label_from_string(j.at("label").get<std::string>());
            if (!label) fail(ErrorKind::Parse, "unknown label");
            out[j.at("message_id").get<std::string>()] = *label;
        } catch (const std::exception& e) {
            fail(ErrorKind::Parse, path.filename().string() + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

classify::RuleTable rule_table(const AuditConfig& config) {
    return config.rules_path.empty() ? classify::default_rule_table() : classify::load_rule_table(config.rules_path);
}

} // namespace

// ---------------------------------------------------------------------------
// Configuration

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "corpus_dir",         "registry_path",      "ip2asn_path",           "abuse_path",
        "org_map_path",       "provider_list",      "rules_path",            "rater_matrix_path",
        "machine_rater",      "trusted_mx",         "audit_timezone",        "classifier_mode",
        "adapter_url",        "adapter_model",      "adapter_timeout_ms",    "adapter_retry_budget",
        "adapter_pool_size",  "adapter_max_input_chars", "seed",            "output_dir",
        "spectrum_multiplier", "decomposition_period", "pca_components",     "pca_variance_threshold",
        "k_min",              "k_max"};
    return keys;
}

AuditConfig parse_config(std::string_view contents, const Overrides& overrides, const fs::path& base_dir) {
    std::map<std::string, std::pair<std::string, fs::path>> values; // key → (value, base)
    const std::set<std::string> known(config_keys().begin(), config_keys().end());
    std::size_t line_no = 0;
    for (const auto& raw : text::split(contents, '\n', false)) {
        ++line_no;
        const auto line = text::trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            config_error("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key(text::trim(line.substr(0, eq)));
        if (!known.count(key)) config_error("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        values[key] = {std::string(text::trim(line.substr(eq + 1))), base_dir};
    }
    for (const auto& [key, value] : overrides) {
        if (!known.count(key)) config_error("unknown config key '" + key + "'");
        values[key] = {value, fs::current_path()};
    }

    AuditConfig c;
    bool pca_fixed_set = false;
    for (const auto& [key, entry] : values) {
        const auto& [v, base] = entry;
        if (key == "corpus_dir") c.corpus_dir = resolve(base, v);
        else if (key == "registry_path") c.registry_path = resolve(base, v);
        else if (key == "ip2asn_path") c.ip2asn_path = resolve(base, v);
        else if (key == "abuse_path") c.abuse_path = resolve(base, v);
        else if (key == "org_map_path") c.org_map_path = resolve(base, v);
        else if (key == "provider_list") c.provider_list_path = resolve(base, v);
        else if (key == "rules_path") c.rules_path = resolve(base, v);
        else if (key == "rater_matrix_path") c.rater_matrix_path = resolve(base, v);
        else if (key == "machine_rater") c.machine_rater = v;
        else if (key == "trusted_mx") c.trusted_mx = v;
        else if (key == "audit_timezone") c.audit_timezone = v.empty() ? "UTC" : v;
        else if (key == "classifier_mode") {
            if (v == "rules") c.classifier_mode = ClassifierMode::Rules;
            else if (v == "external") c.classifier_mode = ClassifierMode::External;
            else config_error("classifier_mode must be rules or external, got '" + v + "'");
        } else if (key == "adapter_url") c.adapter.url = v;
        else if (key == "adapter_model") c.adapter.model = v;
        else if (key == "adapter_timeout_ms") c.adapter.timeout = std::chrono::milliseconds(parse_number<long>(key, v));
        else if (key == "adapter_retry_budget") c.adapter.retry_budget = parse_number<int>(key, v);
        else if (key == "adapter_pool_size") c.adapter.pool_size = parse_number<std::size_t>(key, v);
        else if (key == "adapter_max_input_chars") c.adapter.max_input_chars = parse_number<std::size_t>(key, v);
        else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, v);
        else if (key == "output_dir") c.output_dir = resolve(base, v);
        else if (key == "spectrum_multiplier") c.spectrum_multiplier = parse_number<double>(key, v);
        else if (key == "decomposition_period") c.decomposition_period = parse_number<int>(key, v);
        else if (key == "pca_components") {
            c.pca_target = cluster::PcaTarget::fixed(parse_number<std::size_t>(key, v));
            pca_fixed_set = true;
        } else if (key == "pca_variance_threshold") {
            if (pca_fixed_set) config_error("pca_components and pca_variance_threshold are mutually exclusive");
            const double t = parse_number<double>(key, v);
            if (!(t > 0.0 && t <= 1.0)) config_error("pca_variance_threshold must lie in (0, 1]");
            c.pca_target = cluster::PcaTarget::variance(t);
        } else if (key == "k_min") c.k_min = parse_number<int>(key, v);
        else if (key == "k_max") c.k_max = parse_number<int>(key, v);
    }
    if (c.classifier_mode == ClassifierMode::External && c.adapter.url.empty())
        config_error("classifier_mode = external requires adapter_url");
    if (c.adapter.pool_size == 0) config_error("adapter_pool_size must be at least 1");
    if (c.adapter.retry_budget < 0) config_error("adapter_retry_budget must be nonnegative");
    if (c.k_min > c.k_max) config_error("k_min exceeds k_max");
    if (c.decomposition_period < 2) config_error("decomposition_period must be at least 2");
    if (c.pca_target.mode == cluster::PcaTarget::Mode::FixedComponents && c.pca_target.components == 0)
        config_error("pca_components must be at least 1");
    return c;
}

AuditConfig load_config(const std::optional<fs::path>& path, const Overrides& overrides) {
    if (!path) return parse_config("", overrides, fs::current_path());
    std::string contents;
    try {
        contents = text::read_file(*path);
    } catch (const AuditError& e) {
        config_error(std::string("cannot read config: ") + e.what());
    }
    return parse_config(contents, overrides, fs::absolute(*path).parent_path());
}

void validate_paths(const AuditConfig& config, Stage stage) {
    auto need = [](const fs::path& p, const char* key, bool directory) {
        if (p.empty()) config_error(std::string("config key '") + key + "' is required");
        std::error_code ec;
        const bool ok = directory ? fs::is_directory(p, ec) : fs::is_regular_file(p, ec);
        if (!ok) config_error(std::string(key) + ": " + p.string() + (directory ? " is not a directory" : " not found"));
    };
    auto optional = [&](const fs::path& p, const char* key) {
        if (!p.empty()) need(p, key, false);
    };
    switch (stage) {
    case Stage::Ingest:
        need(config.corpus_dir, "corpus_dir", true);
        need(config.registry_path, "registry_path", false);
        break;
    case Stage::Classify:
        optional(config.rules_path, "rules_path");
        optional(config.rater_matrix_path, "rater_matrix_path");
        break;
    case Stage::Analyze:
        need(config.ip2asn_path, "ip2asn_path", false);
        need(config.abuse_path, "abuse_path", false);
        optional(config.org_map_path, "org_map_path");
        optional(config.provider_list_path, "provider_list");
        optional(config.rules_path, "rules_path");
        break;
    }
    load_timezone(config);
}

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::InsufficientData:
    case ErrorKind::Infeasible:
    case ErrorKind::Undefined:
    case ErrorKind::Shape:
    case ErrorKind::Range: return 4;
    default: return 3;
    }
}

std::string format_number(double v) {
    return std::isnan(v) ? std::string() : text::format_double(v);
}

const std::vector<std::string>& analysis_artifacts() {
    static const std::vector<std::string> names = {"pareto.csv",   "spectrum.csv",  "decomposition.csv", "heatmap.csv",
                                                   "features.csv", "clusters.csv",  "loadings.json",     "sankey.json",
                                                   "treemap.json", "sector_stats.json"};
    return names;
}

// ---------------------------------------------------------------------------
// Commands

RunLog cmd_ingest(const AuditConfig& config) {
    validate_paths(config, Stage::Ingest);
    RunLog log;
    const auto registry = corpus::load_alias_registry(config.registry_path);
    log.warnings = registry.warnings;
    corpus::IngestOptions options;
    options.timezone = load_timezone(config);
    options.trusted_mx = config.trusted_mx;
    auto result = corpus::ingest_corpus(config.corpus_dir, registry, options);
    log.warnings.insert(log.warnings.end(), result.report.warnings.begin(), result.report.warnings.end());
    fs::create_directories(config.output_dir);
    corpus::write_jsonl(result.store, corpus_artifact(config));
    log.written.push_back(corpus_artifact(config));
    write_text(config.output_dir / "ingest_report.json", corpus::to_json(result.report) + "\n", log);
    return log;
}

RunLog cmd_classify(const AuditConfig& config, const classify::Transport& transport) {
    validate_paths(config, Stage::Classify);
    RunLog log;
    const auto store = load_corpus_artifact(config);
    const auto table = rule_table(config);

    std::vector<const EmailRecord*> targets;
    for (const auto& rec : store.records())
        if (rec.ok()) targets.push_back(&rec);

    std::vector<classify::Classification> results;
    if (config.classifier_mode == ClassifierMode::External) {
        results = classify::classify_external_batch(targets, config.adapter, transport, table);
    } else {
        results.reserve(targets.size());
        for (const auto* rec : targets) results.push_back(classify::classify_rule_based(*rec, table));
    }

    std::string lines;
    std::map<std::string, std::int64_t> counts{{"promotional", 0}, {"crm", 0}, {"alert", 0}};
    std::map<std::string, std::int64_t> by_source{{"rules", 0}, {"external", 0}};
    std::map<std::string, std::int64_t> fallback_reasons;
    std::int64_t fallbacks = 0, low_signal = 0;
    double confidence_sum = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const auto& c = results[i];
        lines += classification_json(targets[i]->message_id, c).dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
        ++counts[classify::to_string(c.label)];
        ++by_source[to_string(c.source)];
        if (c.fallback) {
            ++fallbacks;
            ++fallback_reasons[c.fallback_reason];
        }
        if (c.low_signal) ++low_signal;
        confidence_sum += c.confidence;
    }
    fs::create_directories(config.output_dir);
    write_text(classification_artifact(config), lines, log);

    const auto n = static_cast<double>(targets.size());
    json percentages;
    for (const auto& [label, count] : counts) percentages[label] = n > 0 ? 100.0 * static_cast<double>(count) / n : 0.0;
    json summary{{"mode", config.classifier_mode == ClassifierMode::External ? "external" : "rules"},
                 {"rule_table_version", table.version()},
                 {"classified", targets.size()},
                 {"skipped_unparseable", store.size() - targets.size()},
                 {"counts", counts},
                 {"percentages", percentages},
                 {"by_source", by_source},
                 {"fallbacks", fallbacks},
                 {"fallback_reasons", fallback_reasons},
                 {"low_signal", low_signal},
                 {"mean_confidence", n > 0 ? confidence_sum / n : 0.0}};
    if (fallbacks > 0) log.warnings.push_back(std::to_string(fallbacks) + " records fell back to the rule engine");
    write_json(config.output_dir / "classification_summary.json", summary, log);

    if (!config.rater_matrix_path.empty()) {
        const auto matrix = classify::load_rater_matrix(config.rater_matrix_path);
        std::optional<std::string> machine;
        if (!config.machine_rater.empty()) machine = config.machine_rater;
        const auto irr = classify::pairwise_irr(matrix, machine);
        json pairs = json::array();
        for (const auto& p : irr.pairs)
            pairs.push_back({{"rater_a", p.rater_a}, {"rater_b", p.rater_b}, {"kappa", p.kappa},
                             {"involves_machine", p.involves_machine}});
        json j{{"items", matrix.items.size()}, {"raters", matrix.raters}, {"pairs", pairs}};
        j["human_human_mean"] = irr.human_human_mean ? json(*irr.human_human_mean) : json(nullptr);
        j["machine_human_mean"] = irr.machine_human_mean ? json(*irr.machine_human_mean) : json(nullptr);
        write_json(config.output_dir / "irr.json", j, log);
    }
    return log;
}

namespace {

struct AnalysisContext {
    const AuditConfig& config;
    const corpus::CorpusStore& store;
    std::map<std::string, classify::ContentLabel> labels;
    netintel::AsnTable asn_table;
    netintel::ProfileSet profiles;
    RunLog& log;
    json summary;

    void warn(const std::string& w) { log.warnings.push_back(w); }
};

void analyze_pareto(AnalysisContext& ctx) {
    std::vector<std::pair<std::string, double>> values;
    for (const auto& [domain, idx] : ctx.store.by_root_domain())
        if (!domain.empty()) values.emplace_back(domain, static_cast<double>(idx.size()));
    std::string csv = "rank,root_domain,emails,share,cumulative_share\n";
    json top = nullptr;
    try {
        const auto table = stats::pareto(values);
        std::size_t rank = 0;
        for (const auto& e : table.entries())
            csv += csv_row({std::to_string(++rank), e.name, format_number(e.value), format_number(e.share),
                            format_number(e.cumulative)});
        // The per-domain and per-service means differ whenever a service mails from several domains.
        std::size_t services = 0, service_emails = 0;
        for (const auto& [name, idx] : ctx.store.by_service()) {
            if (name == kUnmatched) continue;
            ++services;
            service_emails += idx.size();
        }
        top = {{"top_10_share", table.top_k_share(10)},
               {"root_domains", table.entries().size()},
               {"mean_per_root_domain", table.total() / static_cast<double>(table.entries().size())},
               {"services", services},
               {"mean_per_service", services ? json(static_cast<double>(service_emails) / static_cast<double>(services))
                                             : json(nullptr)}};
    } catch (const AuditError& e) {
        ctx.warn(std::string("pareto: ") + e.what());
    }
    ctx.summary["pareto"] = top;
    write_text(ctx.config.output_dir / "pareto.csv", csv, ctx.log);
}

void analyze_temporal(AnalysisContext& ctx) {
    std::string spectrum_csv = "k,frequency,magnitude,period,is_peak\n";
    std::string decomposition_csv = "day,observed,trend,seasonal,residual\n";
    json spectrum_json = nullptr, decomposition_json = nullptr;
    try {
        const auto series = temporal::build_daily_series(ctx.store);
        ctx.summary["daily_series"] = {{"start", format_iso_date(series.day0)}, {"days", series.values.size()}};
        try {
            const auto spec = temporal::spectrum(series.values, ctx.config.spectrum_multiplier);
            for (const auto& b : spec.bins)
                spectrum_csv += csv_row({std::to_string(b.k), format_number(b.frequency), format_number(b.magnitude),
                                         format_number(b.period_days), b.is_peak ? "true" : "false"});
            json peaks = json::array();
            for (const auto& p : spec.peaks)
                peaks.push_back({{"frequency", p.frequency}, {"magnitude", p.magnitude}, {"period_days", p.period_days}});
            spectrum_json = {{"threshold", spec.threshold}, {"multiplier", ctx.config.spectrum_multiplier}, {"peaks", peaks}};
        } catch (const AuditError& e) {
            ctx.warn(std::string("spectrum: ") + e.what());
        }
        try {
            const auto d = temporal::decompose_additive(series.values, ctx.config.decomposition_period);
            const auto day0 = days_from_civil(series.day0);
            for (std::size_t t = 0; t < d.observed.size(); ++t)
                decomposition_csv += csv_row({format_iso_date(civil_from_days(day0 + static_cast<std::int64_t>(t))),
                                              format_number(d.observed[t]), format_number(d.trend[t]),
                                              format_number(d.seasonal[t]), format_number(d.residual[t])});
            decomposition_json = {{"period", d.period},
                                  {"seasonal_variance_share", d.seasonal_variance_share},
                                  {"seasonal_profile", d.seasonal_profile}};
        } catch (const AuditError& e) {
            ctx.warn(std::string("decomposition: ") + e.what());
        }
    } catch (const AuditError& e) {
        ctx.warn(std::string("daily series: ") + e.what());
    }
    ctx.summary["spectrum"] = spectrum_json;
    ctx.summary["decomposition"] = decomposition_json;
    write_text(ctx.config.output_dir / "spectrum.csv", spectrum_csv, ctx.log);
    write_text(ctx.config.output_dir / "decomposition.csv", decomposition_csv, ctx.log);

    std::string heatmap = "dow,hour,count\n";
    const auto m = temporal::hour_day_matrix(ctx.store);
    for (int d = 0; d < 7; ++d)
        for (int h = 0; h < 24; ++h)
            heatmap += std::to_string(d) + "," + std::to_string(h) + "," + std::to_string(m[d][h]) + "\n";
    write_text(ctx.config.output_dir / "heatmap.csv", heatmap, ctx.log);
}

void analyze_clusters(AnalysisContext& ctx) {
    std::string features_csv = "company";
    for (const auto& name : cluster::feature_names()) features_csv += "," + name;
    features_csv += "\n";
    std::string clusters_csv = "company,cluster,pc1,pc2\n";
    json loadings = nullptr;
    json summary = nullptr;
    try {
        const auto features = cluster::build_features(ctx.store, ctx.profiles, ctx.labels);
        for (Eigen::Index i = 0; i < features.values.rows(); ++i) {
            features_csv += text::csv_escape(features.companies[static_cast<std::size_t>(i)]);
            for (Eigen::Index j = 0; j < features.values.cols(); ++j)
                features_csv += "," + format_number(features.values(i, j));
            features_csv += "\n";
        }
        try {
            const auto z = cluster::standardize(features.values);
            for (auto col : z.zero_variance_columns)
                ctx.warn("standardize: zero-variance column " + features.columns[col] + " set to zero");
            const auto pca = cluster::pca_fit(z.values, ctx.config.pca_target);
            for (const auto& w : pca.warnings) ctx.warn("pca: " + w);
            const Eigen::MatrixXd scores = pca.transform(z.values);
            const auto sel = cluster::select_k(scores, ctx.config.seed, ctx.config.k_min, ctx.config.k_max);
            for (const auto& w : sel.warnings) ctx.warn("select_k: " + w);
            for (Eigen::Index i = 0; i < scores.rows(); ++i)
                clusters_csv += csv_row({features.companies[static_cast<std::size_t>(i)],
                                         std::to_string(sel.best.labels[static_cast<std::size_t>(i)]),
                                         format_number(scores(i, 0)),
                                         scores.cols() > 1 ? format_number(scores(i, 1)) : std::string()});
            const auto report = cluster::loadings_report(pca, z.values, sel.best.labels, features.columns);

            json components = json::array();
            for (const auto& c : report.components) {
                json top = json::array();
                for (const auto& [name, value] : c.top_features) top.push_back({{"feature", name}, {"loading", value}});
                components.push_back({{"component", c.component},
                                      {"explained_variance_ratio", c.explained_variance_ratio},
                                      {"top_features", top}});
            }
            json clusters = json::array();
            for (const auto& c : report.clusters)
                clusters.push_back({{"cluster", c.cluster}, {"size", c.size}, {"mean_scores", c.mean_scores}});
            json matrix = json::array();
            for (Eigen::Index r = 0; r < pca.components.rows(); ++r) {
                std::vector<double> row;
                for (Eigen::Index c = 0; c < pca.components.cols(); ++c) row.push_back(pca.components(r, c));
                matrix.push_back(row);
            }
            json silhouettes = json::array();
            for (const auto& [k, s] : sel.silhouettes) silhouettes.push_back({{"k", k}, {"silhouette", s}});
            std::vector<double> ratios(pca.explained_variance_ratio.data(),
                                       pca.explained_variance_ratio.data() + pca.explained_variance_ratio.size());
            std::vector<std::string> zero_cols;
            for (auto col : z.zero_variance_columns) zero_cols.push_back(features.columns[col]);
            loadings = {{"features", features.columns},
                        {"explained_variance_ratio", ratios},
                        {"loadings", matrix},
                        {"components", components},
                        {"clusters", clusters},
                        {"silhouettes", silhouettes},
                        {"k", sel.best.k},
                        {"silhouette", sel.best.silhouette},
                        {"inertia", sel.best.inertia},
                        {"zero_variance_columns", zero_cols}};
            double cumulative = 0.0;
            for (double r : ratios) cumulative += r;
            summary = {{"companies", features.companies.size()},
                       {"components", ratios.size()},
                       {"cumulative_explained_variance", cumulative},
                       {"k", sel.best.k},
                       {"silhouette", sel.best.silhouette}};
        } catch (const AuditError& e) {
            ctx.warn(std::string("clustering: ") + e.what());
        }
    } catch (const AuditError& e) {
        ctx.warn(std::string("features: ") + e.what());
    }
    ctx.summary["clustering"] = summary;
    write_text(ctx.config.output_dir / "features.csv", features_csv, ctx.log);
    write_text(ctx.config.output_dir / "clusters.csv", clusters_csv, ctx.log);
    write_json(ctx.config.output_dir / "loadings.json", loadings.is_null() ? json::object() : loadings, ctx.log);
}

void analyze_network(AnalysisContext& ctx) {
    json sankey = json::array();
    for (const auto& e : ctx.profiles.sankey) sankey.push_back({{"source", e.source}, {"target", e.target}, {"weight", e.weight}});
    write_json(ctx.config.output_dir / "sankey.json", sankey, ctx.log);
    write_json(ctx.config.output_dir / "treemap.json", json(ctx.profiles.treemap), ctx.log);

    json concentration = nullptr;
    try {
        const auto table = netintel::asn_concentration(ctx.profiles);
        concentration = {{"asns", table.entries().size()},
                         {"top_20pct_share", netintel::top_fraction_share(table, 0.2)},
                         {"top_8_share", table.top_k_share(8)}};
    } catch (const AuditError& e) {
        ctx.warn(std::string("asn concentration: ") + e.what());
    }
    ctx.summary["asn_concentration"] = concentration;

    json hopping = nullptr;
    try {
        const auto h = netintel::ip_hopping_correlation(ctx.profiles.profiles);
        hopping = {{"companies", h.companies}, {"pearson", to_json(h.pearson)}, {"spearman", to_json(h.spearman)}};
    } catch (const AuditError& e) {
        ctx.warn(std::string("ip hopping correlation: ") + e.what());
    }
    ctx.summary["ip_hopping"] = hopping;

    json profiles = json::array();
    for (const auto& p : ctx.profiles.profiles) {
        std::vector<std::string> asns;
        for (const auto& a : p.asns) asns.push_back(a.label());
        profiles.push_back({{"service", p.service_name},
                            {"emails", p.emails_total},
                            {"distinct_ips", p.ips.size()},
                            {"asns", asns},
                            {"uses_marketing_provider", p.uses_marketing_provider},
                            {"spam_reports", p.spam_reports_total},
                            {"primary_root_domain", p.primary_root_domain}});
    }
    ctx.summary["sender_profiles"] = profiles;
}

void analyze_provenance(AnalysisContext& ctx, const authlineage::OrgMap& org_map,
                        const std::vector<std::string>& providers) {
    std::string csv = "message_id,service,provenance,spam,operator_unknown,needs_review\n";
    std::map<std::string, std::int64_t> counts;
    std::int64_t spf_pass = 0, dkim_pass = 0, ok = 0;
    for (const auto& rec : ctx.store.records()) {
        if (!rec.ok()) continue;
        ++ok;
        if (rec.spf == AuthResult::Pass) ++spf_pass;
        if (rec.dkim == AuthResult::Pass) ++dkim_pass;
        if (!rec.alias) continue;
        authlineage::ProvenanceInputs in;
        in.org_map = &org_map;
        const auto hit = ctx.asn_table.lookup(rec.sender_ip);
        in.asn = hit.record;
        in.marketing_flag = hit.record && netintel::flag_marketing_asn(*hit.record, providers);
        if (auto it = ctx.labels.find(rec.message_id); it != ctx.labels.end()) in.content = it->second;
        const auto label = authlineage::classify_provenance(rec, in);
        const std::string key = std::string(authlineage::to_string(label.provenance)) + "/" +
                                authlineage::to_string(label.spam);
        ++counts[key];
        csv += csv_row({rec.message_id, rec.alias->service_name, authlineage::to_string(label.provenance),
                        authlineage::to_string(label.spam), label.operator_unknown ? "true" : "false",
                        label.needs_review ? "true" : "false"});
    }
    write_text(ctx.config.output_dir / "provenance.csv", csv, ctx.log);
    ctx.summary["provenance"] = counts;
    ctx.summary["authentication"] = {
        {"records", ok},
        {"spf_pass_rate", ok > 0 ? static_cast<double>(spf_pass) / static_cast<double>(ok) : 0.0},
        {"dkim_pass_rate", ok > 0 ? static_cast<double>(dkim_pass) / static_cast<double>(ok) : 0.0}};
}

void analyze_sectors(AnalysisContext& ctx) {
    const auto& records = ctx.store.records();
    std::map<std::string, std::array<std::int64_t, 3>> by_sector;
    std::map<std::string, std::vector<double>> totals, hours, weekdays;
    std::vector<double> company_totals;
    for (const auto& [service, idx] : ctx.store.by_service()) {
        if (service == kUnmatched) continue;
        const auto& alias = records[idx.front()].alias;
        const std::string sector = alias && !alias->sector.empty() ? alias->sector : std::string();
        company_totals.push_back(static_cast<double>(idx.size()));
        if (sector.empty()) continue;
        totals[sector].push_back(static_cast<double>(idx.size()));
        auto& row = by_sector[sector];
        for (auto i : idx) {
            const auto& rec = records[i];
            if (auto it = ctx.labels.find(rec.message_id); it != ctx.labels.end()) ++row[static_cast<std::size_t>(it->second)];
            if (rec.received_local) {
                hours[sector].push_back(rec.received_local->hour);
                weekdays[sector].push_back(rec.received_local->weekday);
            }
        }
    }

    json out;
    auto attempt = [&](const char* name, auto&& fn) {
        try {
            out[name] = fn();
        } catch (const AuditError& e) {
            out[name] = nullptr;
            ctx.warn(std::string("sector stats ") + name + ": " + e.what());
        }
    };

    stats::ContingencyTable table;
    table.col_labels = {"promotional", "crm", "alert"};
    for (const auto& [sector, row] : by_sector) {
        table.row_labels.push_back(sector);
        table.counts.push_back({row[0], row[1], row[2]});
    }
    out["contingency"] = {{"rows", table.row_labels}, {"columns", table.col_labels}, {"counts", table.counts}};
    if (by_sector.empty()) ctx.warn("sector stats: registry has no sector column; sector tests skipped");

    auto groups_of = [](const std::map<std::string, std::vector<double>>& m) {
        std::vector<std::vector<double>> g;
        for (const auto& [k, v] : m) g.push_back(v);
        return g;
    };
    attempt("chi_squared", [&] { return to_json(stats::chi_squared_independence(table)); });
    attempt("anova_totals_by_sector", [&] { return to_json(stats::one_way_anova(groups_of(totals))); });
    attempt("kruskal_wallis_hourly", [&] { return to_json(stats::kruskal_wallis(groups_of(hours))); });
    attempt("kruskal_wallis_daily", [&] { return to_json(stats::kruskal_wallis(groups_of(weekdays))); });
    attempt("descriptive_company_totals", [&] {
        const auto d = stats::descriptive(company_totals);
        return json{{"n", d.n},
                    {"mean", d.mean},
                    {"median", d.median},
                    {"skewness", d.skewness},
                    {"excess_kurtosis", d.excess_kurtosis},
                    {"convention", d.convention == stats::MomentConvention::Sample ? "sample" : "population"}};
    });
    attempt("pareto_root_domains", [&] {
        std::vector<std::pair<std::string, double>> values;
        for (const auto& [domain, idx] : ctx.store.by_root_domain())
            if (!domain.empty()) values.emplace_back(domain, static_cast<double>(idx.size()));
        const auto p = stats::pareto(values);
        json entries = json::array();
        for (const auto& e : p.entries())
            entries.push_back({{"name", e.name}, {"value", e.value}, {"share", e.share}, {"cumulative", e.cumulative}});
        return json{{"total", p.total()}, {"top_10_share", p.top_k_share(10)}, {"entries", entries}};
    });
    json sectors = json::object();
    for (const auto& [sector, v] : totals) sectors[sector] = {{"companies", v.size()}, {"emails", std::accumulate(v.begin(), v.end(), 0.0)}};
    out["sectors"] = sectors;
    write_json(ctx.config.output_dir / "sector_stats.json", out, ctx.log);
}

} // namespace

RunLog cmd_analyze(const AuditConfig& config) {
    validate_paths(config, Stage::Analyze);
    RunLog log;
    const auto store = load_corpus_artifact(config);
    if (store.size() == 0) fail(ErrorKind::InsufficientData, "corpus artifact holds no records");

    AnalysisContext ctx{config, store, {}, netintel::load_ip2asn(config.ip2asn_path), {}, log, json::object()};
    if (fs::exists(classification_artifact(config))) {
        ctx.labels = read_classifications(classification_artifact(config));
    } else {
        ctx.warn("classifications.jsonl not found; rule-based labels computed in memory");
        const auto table = rule_table(config);
        for (const auto& rec : store.records())
            if (rec.ok()) ctx.labels[rec.message_id] = classify::classify_rule_based(rec, table).label;
    }
    const auto providers = provider_list(config);
    const auto abuse = netintel::load_abuse_reports(config.abuse_path);
    const auto org_map = config.org_map_path.empty() ? authlineage::default_org_map()
                                                     : authlineage::load_org_map(config.org_map_path);
    ctx.profiles = netintel::build_sender_profiles(store, ctx.asn_table, abuse, providers);

    fs::create_directories(config.output_dir);
    ctx.summary["records"] = store.size();
    ctx.summary["seed"] = config.seed;
    ctx.summary["unmatched"] = ctx.profiles.unmatched_emails;
    analyze_pareto(ctx);
    analyze_temporal(ctx);
    analyze_clusters(ctx);
    analyze_network(ctx);
    analyze_provenance(ctx, org_map, providers);
    analyze_sectors(ctx);
    ctx.summary["warnings"] = log.warnings;
    write_json(config.output_dir / "analysis.json", ctx.summary, log);
    return log;
}

RunLog cmd_report(const AuditConfig& config, const classify::Transport& transport) {
    validate_paths(config, Stage::Ingest);
    validate_paths(config, Stage::Classify);
    validate_paths(config, Stage::Analyze);
    RunLog log = cmd_ingest(config);
    auto merge = [&log](RunLog step) {
        log.warnings.insert(log.warnings.end(), step.warnings.begin(), step.warnings.end());
        log.written.insert(log.written.end(), step.written.begin(), step.written.end());
    };
    merge(cmd_classify(config, transport));
    merge(cmd_analyze(config));
    return log;
}

fixture::CheckReport cmd_fixture_check(const std::optional<fs::path>& table_path) {
    if (table_path) return fixture::run_checks(fixture::load_fixture_table(*table_path));
    return fixture::run_checks(fixture::bundled_table());
}

} // namespace inboxaudit::report
