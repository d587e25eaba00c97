#include "inboxaudit/classify.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <map>
#include <set>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "inboxaudit/embedded.hpp"
#include "inboxaudit/error.hpp"
#include "inboxaudit/text.hpp"

namespace inboxaudit::classify {

namespace {

using nlohmann::json;

// Long bodies are scanned only up to this many bytes; std::regex recursion
// grows with input length.
constexpr std::size_t kScanLimit = 16384;

bool is_word_char(char c) {
    const auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || c == '_' || u >= 0x80;
}

bool contains_word(std::string_view haystack_lower, std::string_view needle_lower) {
    if (needle_lower.empty()) return false;
    std::size_t pos = 0;
    while ((pos = haystack_lower.find(needle_lower, pos)) != std::string_view::npos) {
        const bool left = pos == 0 || !is_word_char(haystack_lower[pos - 1]);
        const std::size_t end = pos + needle_lower.size();
        const bool right = end >= haystack_lower.size() || !is_word_char(haystack_lower[end]);
        if (left && right) return true;
        ++pos;
    }
    return false;
}

std::optional<RuleField> field_from_string(std::string_view s) {
    if (text::iequals(s, "subject")) return RuleField::Subject;
    if (text::iequals(s, "body")) return RuleField::Body;
    if (text::iequals(s, "any")) return RuleField::Any;
    return std::nullopt;
}

std::string utf8_prefix(std::string_view s, std::size_t max_bytes) {
    if (s.size() <= max_bytes) return std::string(s);
    std::size_t cut = max_bytes;
    while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
    return std::string(s.substr(0, cut));
}

int confidence_from_margin(double margin) {
    if (margin >= 4.0) return 5;
    if (margin >= 3.0) return 4;
    if (margin >= 2.0) return 3;
    if (margin >= 1.0) return 2;
    return 1;
}

// Top-level balanced {...} spans in `s` that parse as JSON objects.
std::vector<json> json_objects_in(std::string_view s) {
    std::vector<json> found;
    std::size_t i = 0;
    while ((i = s.find('{', i)) != std::string_view::npos) {
        int depth = 0;
        bool in_string = false, escaped = false;
        std::size_t j = i;
        for (; j < s.size(); ++j) {
            const char c = s[j];
            if (in_string) {
                if (escaped) escaped = false;
                else if (c == '\\') escaped = true;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{') ++depth;
            else if (c == '}' && --depth == 0) break;
        }
        if (j >= s.size()) break;
        auto parsed = json::parse(s.substr(i, j - i + 1), nullptr, false);
        if (!parsed.is_discarded() && parsed.is_object()) {
            found.push_back(std::move(parsed));
            i = j + 1;
        } else {
            ++i;
        }
    }
    return found;
}

// Services that wrap the model text in an envelope ({"response": "..."}).
std::string unwrap_envelope(std::string_view body) {
    auto j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object() || j.contains("sentiment")) return std::string(body);
    for (const char* key : {"response", "content", "output", "text"})
        if (auto it = j.find(key); it != j.end() && it->is_string()) return it->get<std::string>();
    if (auto it = j.find("message"); it != j.end() && it->is_object())
        if (auto c = it->find("content"); c != it->end() && c->is_string()) return c->get<std::string>();
    return std::string(body);
}

Classification run_external(const EmailRecord& record, const AdapterConfig& config, const Transport& transport,
                            int& attempts) {
    const std::string prompt = render_prompt(email_input_text(record, config.max_input_chars));
    const json schema = json::parse(response_schema_json());

    auto send = [&](const std::string& p) {
        const std::string request = json{{"model", config.model}, {"prompt", p}, {"schema", schema}}.dump();
        for (int tries = 0;; ++tries) {
            ++attempts;
            try {
                return transport(config, request);
            } catch (const AuditError& e) {
                if (e.kind() != ErrorKind::Transport || tries >= config.retry_budget) throw;
            } catch (const std::exception& e) {
                if (tries >= config.retry_budget) fail(ErrorKind::Transport, e.what());
            }
        }
    };

    Classification out;
    try {
        out = decode_response(unwrap_envelope(send(prompt)));
    } catch (const AuditError& e) {
        if (e.kind() != ErrorKind::Protocol) throw;
        out = decode_response(unwrap_envelope(send(prompt + "\nRespond with JSON only")));
    }
    out.source = LabelSource::External;
    out.attempts = attempts;
    return out;
}

} // namespace

const char* to_string(ContentLabel l) noexcept {
    switch (l) {
    case ContentLabel::Promotional: return "promotional";
    case ContentLabel::Crm: return "crm";
    case ContentLabel::Alert: return "alert";
    }
    return "crm";
}

std::optional<ContentLabel> content_label_from_string(std::string_view s) noexcept {
    if (text::iequals(s, "promotional")) return ContentLabel::Promotional;
    if (text::iequals(s, "crm")) return ContentLabel::Crm;
    if (text::iequals(s, "alert")) return ContentLabel::Alert;
    return std::nullopt;
}

RuleTable::RuleTable(std::vector<Rule> rules, double crm_baseline, std::string version)
    : rules_(std::move(rules)), crm_baseline_(crm_baseline), version_(std::move(version)) {
    for (auto& r : rules_) {
        if (r.is_regex && !r.compiled) {
            try {
                r.compiled.emplace(r.pattern, std::regex::ECMAScript | std::regex::icase | std::regex::optimize);
            } catch (const std::regex_error& e) {
                fail(ErrorKind::Parse, "bad rule regex '" + r.pattern + "': " + e.what());
            }
        }
        if (!r.is_regex) r.pattern = text::to_lower(r.pattern);
    }
}

RuleTable parse_rule_table(std::string_view contents) {
    double baseline = 1.0;
    std::string version;
    for (auto& line : text::split(contents, '\n')) {
        if (line.empty() || line[0] != '#') continue;
        auto body = text::trim(std::string_view(line).substr(1));
        const auto colon = body.find(':');
        if (colon == std::string_view::npos) continue;
        const auto key = text::to_lower(text::trim(body.substr(0, colon)));
        const auto value = text::trim(body.substr(colon + 1));
        if (key == "version") version = std::string(value);
        else if (key == "crm_baseline") {
            auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), baseline);
            if (ec != std::errc{}) fail(ErrorKind::Parse, "bad crm_baseline '" + std::string(value) + "'");
        }
    }

    const auto table = text::parse_delimited(contents);
    const auto npos = static_cast<std::size_t>(-1);
    const auto c_label = table.column("label"), c_field = table.column("field"), c_kind = table.column("kind"),
               c_pattern = table.column("pattern"), c_weight = table.column("weight");
    if (c_label == npos || c_field == npos || c_kind == npos || c_pattern == npos || c_weight == npos)
        fail(ErrorKind::Parse, "rule table header must name label, field, kind, pattern, weight");

    std::vector<Rule> rules;
    for (const auto& row : table.rows) {
        auto bad = [&](const std::string& why) {
            fail(ErrorKind::Parse, "rule table line " + std::to_string(row.line) + ": " + why);
        };
        if (row.fields.size() <= std::max({c_label, c_field, c_kind, c_pattern, c_weight})) bad("missing column");
        Rule r;
        const auto label = content_label_from_string(row.fields[c_label]);
        if (!label) bad("unknown label '" + row.fields[c_label] + "'");
        r.label = *label;
        const auto field = field_from_string(row.fields[c_field]);
        if (!field) bad("unknown field '" + row.fields[c_field] + "'");
        r.field = *field;
        const auto& kind = row.fields[c_kind];
        if (text::iequals(kind, "regex")) r.is_regex = true;
        else if (!text::iequals(kind, "word")) bad("kind must be word or regex");
        r.pattern = row.fields[c_pattern];
        if (r.pattern.empty()) bad("empty pattern");
        const auto& w = row.fields[c_weight];
        auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), r.weight);
        if (ec != std::errc{} || ptr != w.data() + w.size()) bad("bad weight '" + w + "'");
        rules.push_back(std::move(r));
    }
    return RuleTable(std::move(rules), baseline, version);
}

RuleTable load_rule_table(const std::filesystem::path& path) {
    return parse_rule_table(text::read_file(path));
}

const RuleTable& default_rule_table() {
    static const RuleTable table = parse_rule_table(embedded::classifier_rules_tsv);
    return table;
}

RuleScores score_rules(std::string_view subject, std::string_view body, const RuleTable& table) {
    RuleScores scores;
    scores.crm = table.crm_baseline();
    const std::string subject_lower = text::to_lower(utf8_prefix(subject, kScanLimit));
    const std::string body_lower = text::to_lower(utf8_prefix(body, kScanLimit));

    for (const auto& rule : table.rules()) {
        auto hit = [&](const std::string& lowered) {
            if (lowered.empty()) return false;
            if (rule.is_regex) return std::regex_search(lowered, *rule.compiled);
            return contains_word(lowered, rule.pattern);
        };
        int hits = 0;
        if (rule.field != RuleField::Body && hit(subject_lower)) ++hits;
        if (rule.field != RuleField::Subject && hit(body_lower)) ++hits;
        if (hits == 0) continue;
        const double add = rule.weight * hits;
        switch (rule.label) {
        case ContentLabel::Promotional: scores.promotional += add; break;
        case ContentLabel::Crm: scores.crm += add; break;
        case ContentLabel::Alert: scores.alert += add; break;
        }
        scores.matched.push_back(std::string(to_string(rule.label)) + ":" + rule.pattern);
    }
    return scores;
}

Classification classify_text(std::string_view subject, std::string_view body, const RuleTable& table) {
    Classification c;
    c.source = LabelSource::Rules;
    if (text::trim(subject).empty() && text::trim(body).empty()) {
        c.label = ContentLabel::Crm;
        c.confidence = 1;
        c.low_signal = true;
        c.rationale = "empty subject and body";
        return c;
    }
    const auto s = score_rules(subject, body, table);
    // Priority order on exact ties: alert, promotional, crm.
    const std::array<std::pair<ContentLabel, double>, 3> ranked{
        {{ContentLabel::Alert, s.alert}, {ContentLabel::Promotional, s.promotional}, {ContentLabel::Crm, s.crm}}};
    std::size_t best = 0;
    for (std::size_t i = 1; i < ranked.size(); ++i)
        if (ranked[i].second > ranked[best].second) best = i;
    double runner_up = -1e300;
    for (std::size_t i = 0; i < ranked.size(); ++i)
        if (i != best) runner_up = std::max(runner_up, ranked[i].second);

    c.label = ranked[best].first;
    c.confidence = confidence_from_margin(ranked[best].second - runner_up);
    c.low_signal = s.matched.empty();
    std::string why = "scores promotional=" + text::format_double(s.promotional) +
                      " crm=" + text::format_double(s.crm) + " alert=" + text::format_double(s.alert);
    if (!s.matched.empty()) {
        why += "; matched";
        for (const auto& m : s.matched) why += " " + m;
    }
    c.rationale = std::move(why);
    return c;
}

Classification classify_rule_based(const EmailRecord& record, const RuleTable& table) {
    return classify_text(record.subject, record.body_text, table);
}

const std::string& response_schema_json() {
    static const std::string schema(text::trim(embedded::classifier_response_schema_json));
    return schema;
}

std::string email_input_text(const EmailRecord& record, std::size_t max_chars) {
    std::string s = "Subject: " + record.subject + "\n\n" + record.body_text;
    return utf8_prefix(s, max_chars);
}

std::string render_prompt(std::string_view email_text) {
    std::string out(embedded::classifier_prompt_txt);
    auto replace = [&](std::string_view key, std::string_view value) {
        const auto pos = out.find(key);
        if (pos != std::string::npos) out.replace(pos, key.size(), value);
    };
    replace("{schema}", response_schema_json());
    replace("{input}", email_text);
    return out;
}

Classification decode_response(std::string_view response) {
    const auto objects = json_objects_in(response);
    if (objects.empty()) fail(ErrorKind::Protocol, "response contains no JSON object");
    if (objects.size() > 1) fail(ErrorKind::Protocol, "response contains more than one JSON object");
    const auto& j = objects.front();

    Classification c;
    c.source = LabelSource::External;
    const auto sentiment = j.find("sentiment");
    if (sentiment == j.end() || !sentiment->is_string()) fail(ErrorKind::Protocol, "sentiment missing or not a string");
    const auto s = sentiment->get<std::string>();
    if (s == "promotional") c.label = ContentLabel::Promotional;
    else if (s == "CRM") c.label = ContentLabel::Crm;
    else if (s == "alert") c.label = ContentLabel::Alert;
    else fail(ErrorKind::Protocol, "sentiment '" + s + "' not in {promotional, CRM, alert}");

    const auto confidence = j.find("confidence");
    if (confidence == j.end() || !confidence->is_number_integer())
        fail(ErrorKind::Protocol, "confidence missing or not an integer");
    const auto conf = confidence->get<std::int64_t>();
    if (conf < 1 || conf > 5) fail(ErrorKind::Protocol, "confidence outside 1-5");
    c.confidence = static_cast<int>(conf);

    const auto rationale = j.find("rationale");
    if (rationale == j.end() || !rationale->is_string()) fail(ErrorKind::Protocol, "rationale missing or not a string");
    c.rationale = rationale->get<std::string>();
    return c;
}

Transport http_transport() {
    return [](const AdapterConfig& config, const std::string& request_json) -> std::string {
        const std::string& url = config.url;
        if (!text::starts_with_ci(url, "http://"))
            fail(ErrorKind::Config, "adapter url must start with http:// (got '" + url + "')");
        const auto path_pos = url.find('/', 7);
        const std::string origin = url.substr(0, path_pos);
        const std::string path = path_pos == std::string::npos ? "/" : url.substr(path_pos);

        httplib::Client client(origin);
        const auto ms = config.timeout.count();
        client.set_connection_timeout(ms / 1000, (ms % 1000) * 1000);
        client.set_read_timeout(ms / 1000, (ms % 1000) * 1000);
        client.set_write_timeout(ms / 1000, (ms % 1000) * 1000);
        auto res = client.Post(path, request_json, "application/json");
        if (!res) fail(ErrorKind::Transport, "request to " + url + " failed: " + httplib::to_string(res.error()));
        if (res->status != 200)
            fail(ErrorKind::Transport, "request to " + url + " returned HTTP " + std::to_string(res->status));
        return res->body;
    };
}

Classification classify_external(const EmailRecord& record, const AdapterConfig& config, const Transport& transport) {
    int attempts = 0;
    return run_external(record, config, transport, attempts);
}

Classification classify_with_fallback(const EmailRecord& record, const AdapterConfig& config,
                                      const Transport& transport, const RuleTable& table) {
    int attempts = 0;
    try {
        return run_external(record, config, transport, attempts);
    } catch (const AuditError& e) {
        auto c = classify_rule_based(record, table);
        c.fallback = true;
        c.fallback_reason = std::string(to_string(e.kind())) + ": " + e.what();
        c.attempts = attempts;
        return c;
    }
}

std::vector<Classification> classify_external_batch(const std::vector<const EmailRecord*>& records,
                                                    const AdapterConfig& config, const Transport& transport,
                                                    const RuleTable& table) {
    std::vector<Classification> out(records.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < records.size();)
            out[i] = classify_with_fallback(*records[i], config, transport, table);
    };
    const std::size_t n = std::clamp<std::size_t>(config.pool_size, 1, std::max<std::size_t>(records.size(), 1));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return out;
}

double cohens_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.size() != b.size())
        fail(ErrorKind::Shape, "kappa: label lists differ in length (" + std::to_string(a.size()) + " vs " +
                                   std::to_string(b.size()) + ")");
    if (a.empty()) fail(ErrorKind::InsufficientData, "kappa: no items");
    const double n = static_cast<double>(a.size());
    std::map<std::string, double> fa, fb;
    double agree = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        fa[a[i]] += 1.0;
        fb[b[i]] += 1.0;
        if (a[i] == b[i]) agree += 1.0;
    }
    const double po = agree / n;
    double pe = 0.0;
    for (const auto& [label, count] : fa)
        if (auto it = fb.find(label); it != fb.end()) pe += (count / n) * (it->second / n);
    if (pe >= 1.0) return 1.0; // both raters used a single shared label
    return (po - pe) / (1.0 - pe);
}

RaterMatrix parse_rater_matrix(std::string_view contents) {
    const auto table = text::parse_delimited(contents);
    if (table.header.size() < 2) fail(ErrorKind::Parse, "rater matrix needs an item column and at least one rater");
    RaterMatrix m;
    m.raters.assign(table.header.begin() + 1, table.header.end());
    m.labels.resize(m.raters.size());
    for (const auto& row : table.rows) {
        if (row.fields.size() != table.header.size())
            fail(ErrorKind::Shape, "rater matrix line " + std::to_string(row.line) + ": expected " +
                                       std::to_string(table.header.size()) + " columns");
        m.items.push_back(row.fields[0]);
        for (std::size_t r = 0; r < m.raters.size(); ++r) {
            if (row.fields[r + 1].empty())
                fail(ErrorKind::Shape, "rater matrix line " + std::to_string(row.line) + ": rater '" + m.raters[r] +
                                           "' left the item unlabeled");
            m.labels[r].push_back(row.fields[r + 1]);
        }
    }
    return m;
}

RaterMatrix load_rater_matrix(const std::filesystem::path& path) {
    return parse_rater_matrix(text::read_file(path));
}

IrrSummary pairwise_irr(const RaterMatrix& matrix, std::optional<std::string> machine_rater) {
    if (matrix.raters.size() < 2) fail(ErrorKind::InsufficientData, "inter-rater reliability needs at least 2 raters");
    std::optional<std::size_t> machine;
    if (machine_rater) {
        auto it = std::find(matrix.raters.begin(), matrix.raters.end(), *machine_rater);
        if (it == matrix.raters.end()) fail(ErrorKind::Shape, "machine rater '" + *machine_rater + "' not in matrix");
        machine = static_cast<std::size_t>(it - matrix.raters.begin());
    }
    IrrSummary out;
    double hh = 0.0, mh = 0.0;
    std::size_t n_hh = 0, n_mh = 0;
    for (std::size_t i = 0; i < matrix.raters.size(); ++i) {
        for (std::size_t j = i + 1; j < matrix.raters.size(); ++j) {
            KappaPair p{matrix.raters[i], matrix.raters[j], cohens_kappa(matrix.labels[i], matrix.labels[j]),
                        machine && (*machine == i || *machine == j)};
            if (p.involves_machine) {
                mh += p.kappa;
                ++n_mh;
            } else {
                hh += p.kappa;
                ++n_hh;
            }
            out.pairs.push_back(std::move(p));
        }
    }
    if (n_hh > 0) out.human_human_mean = hh / static_cast<double>(n_hh);
    if (n_mh > 0) out.machine_human_mean = mh / static_cast<double>(n_mh);
    return out;
}

} // namespace inboxaudit::classify
