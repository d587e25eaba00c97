#include "inboxaudit/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <memory>
#include <mutex>
#include <unordered_set>

#include "json.hpp"

#include "inboxaudit/authlineage.hpp"
#include "inboxaudit/embedded.hpp"
#include "inboxaudit/error.hpp"
#include "inboxaudit/mime.hpp"
#include "inboxaudit/text.hpp"

namespace inboxaudit {

const char* to_string(AuthResult r) noexcept {
    switch (r) {
    case AuthResult::Pass: return "pass";
    case AuthResult::Fail: return "fail";
    case AuthResult::None: return "none";
    case AuthResult::Absent: return "absent";
    }
    return "absent";
}

std::optional<AuthResult> auth_result_from_string(std::string_view s) noexcept {
    if (text::iequals(s, "pass")) return AuthResult::Pass;
    if (text::iequals(s, "fail")) return AuthResult::Fail;
    if (text::iequals(s, "none")) return AuthResult::None;
    if (text::iequals(s, "absent")) return AuthResult::Absent;
    return std::nullopt;
}

const char* to_string(ServiceKind k) noexcept {
    return k == ServiceKind::OnlineService ? "online_service" : "mobile_app";
}

std::optional<ServiceKind> service_kind_from_string(std::string_view s) noexcept {
    if (text::iequals(s, "online_service")) return ServiceKind::OnlineService;
    if (text::iequals(s, "mobile_app")) return ServiceKind::MobileApp;
    return std::nullopt;
}

void HeaderMap::add(std::string name, std::string value) {
    fields_.emplace_back(std::move(name), std::move(value));
}

std::vector<std::string_view> HeaderMap::all(std::string_view name) const {
    std::vector<std::string_view> out;
    for (const auto& [n, v] : fields_)
        if (text::iequals(n, name)) out.emplace_back(v);
    return out;
}

std::optional<std::string_view> HeaderMap::first(std::string_view name) const {
    for (const auto& [n, v] : fields_)
        if (text::iequals(n, name)) return std::string_view(v);
    return std::nullopt;
}

const std::string& EmailRecord::service_name() const {
    static const std::string unmatched(kUnmatched);
    return alias ? alias->service_name : unmatched;
}

} // namespace inboxaudit

namespace inboxaudit::corpus {

namespace {

bool is_lower_letters(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

// ---------------------------------------------------------------------------
// Public suffix rules

struct SuffixRules {
    std::unordered_set<std::string> normal;
    std::unordered_set<std::string> wildcard;  // "ck" for "*.ck"
    std::unordered_set<std::string> exception; // "www.ck" for "!www.ck"
};

std::shared_ptr<const SuffixRules> parse_suffix_rules(std::string_view contents) {
    auto rules = std::make_shared<SuffixRules>();
    for (auto& raw : text::split(contents, '\n')) {
        auto line = text::trim(raw);
        if (line.empty() || line.substr(0, 2) == "//") continue;
        line = line.substr(0, line.find_first_of(" \t"));
        auto rule = text::to_lower(line);
        if (rule.rfind("!", 0) == 0) rules->exception.insert(rule.substr(1));
        else if (rule.rfind("*.", 0) == 0) rules->wildcard.insert(rule.substr(2));
        else rules->normal.insert(rule);
    }
    return rules;
}

std::mutex g_rules_mutex;
std::shared_ptr<const SuffixRules> g_rules;

std::shared_ptr<const SuffixRules> current_rules() {
    std::lock_guard lock(g_rules_mutex);
    if (!g_rules) g_rules = parse_suffix_rules(embedded::public_suffix_dat);
    return g_rules;
}

std::string local_part_of(std::string_view address) {
    const auto at = address.rfind('@');
    if (at == std::string_view::npos) return text::to_lower(address);
    auto local = address.substr(0, at);
    // Sub-addressing ("name007+tag") binds to the base alias.
    if (const auto plus = local.find('+'); plus != std::string_view::npos) local = local.substr(0, plus);
    return text::to_lower(local);
}

std::string format_local(const LocalTime& lt) {
    const int off = lt.utc_offset_seconds;
    const int aoff = off < 0 ? -off : off;
    char buf[48];
    std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02d%c%02d:%02d", format_iso_date(lt.date).c_str(), lt.hour,
                  lt.minute, lt.second, off < 0 ? '-' : '+', aoff / 3600, aoff % 3600 / 60);
    return buf;
}

EmailRecord parse_one(const std::string& raw, const IngestOptions& options, const AliasRegistry& registry) {
    auto rec = parse_eml(raw, options.trusted_mx, options.timezone);
    bind_alias(rec, registry);
    return rec;
}

IngestResult finish_ingest(std::vector<EmailRecord> parsed, std::size_t files) {
    IngestResult result;
    result.report.files = files;
    std::vector<EmailRecord> kept;
    kept.reserve(parsed.size());
    std::unordered_set<std::string> seen;
    for (auto& rec : parsed) {
        if (!seen.insert(rec.message_id).second) {
            ++result.report.duplicate_message_ids;
            result.report.warnings.push_back("duplicate message_id " + rec.message_id);
            continue;
        }
        if (rec.ok()) ++result.report.ok;
        else ++result.report.unparseable;
        if (rec.ok() && !rec.alias) ++result.report.unmatched;
        kept.push_back(std::move(rec));
    }
    if (files == 0) result.report.warnings.emplace_back("no .eml files found");
    result.store = CorpusStore(std::move(kept));
    return result;
}

std::vector<EmailRecord> parse_all(const std::vector<std::string>& raws, const AliasRegistry& registry,
                                   const IngestOptions& options) {
    const auto n = static_cast<std::ptrdiff_t>(raws.size());
    std::vector<EmailRecord> out(raws.size());
    if (options.parallel) {
#pragma omp parallel for schedule(dynamic, 8)
        for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = parse_one(raws[static_cast<std::size_t>(i)], options, registry);
    } else {
        for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = parse_one(raws[static_cast<std::size_t>(i)], options, registry);
    }
    return out;
}

} // namespace

std::string content_hash(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (char c : bytes) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string generate_alias(std::string_view name_seed, int index, std::string_view domain) {
    if (index < 0 || index > kMaxAliasIndex)
        fail(ErrorKind::Range, "alias index " + std::to_string(index) + " outside 0-149");
    if (!is_lower_letters(name_seed)) fail(ErrorKind::Format, "alias name seed must be lowercase letters");
    char digits[4];
    std::snprintf(digits, sizeof digits, "%03d", index);
    return std::string(name_seed) + digits + "@" + std::string(domain);
}

std::optional<int> alias_index(std::string_view local_part) noexcept {
    if (local_part.size() < 4) return std::nullopt;
    const auto letters = local_part.substr(0, local_part.size() - 3);
    const auto digits = local_part.substr(local_part.size() - 3);
    if (!is_lower_letters(letters)) return std::nullopt;
    int v = 0;
    for (char c : digits) {
        if (c < '0' || c > '9') return std::nullopt;
        v = v * 10 + (c - '0');
    }
    if (v > kMaxAliasIndex) return std::nullopt;
    return v;
}

AliasRegistry::AliasRegistry(std::vector<AliasEntry> entries) : entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
    std::unordered_set<std::string> locals;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        if (e.index < 0 || e.index > kMaxAliasIndex)
            fail(ErrorKind::Integrity, "alias index " + std::to_string(e.index) + " outside 0-149");
        if (i > 0 && entries_[i - 1].index == e.index) {
            char buf[8];
            std::snprintf(buf, sizeof buf, "%03d", e.index);
            fail(ErrorKind::Integrity, std::string("duplicate alias index ") + buf);
        }
        const auto idx = alias_index(e.local_part);
        if (!idx || *idx != e.index)
            fail(ErrorKind::Integrity, "local part '" + e.local_part + "' does not encode index " + std::to_string(e.index));
        const auto expected = e.index < kFirstMobileIndex ? ServiceKind::OnlineService : ServiceKind::MobileApp;
        if (e.service_kind != expected)
            fail(ErrorKind::Integrity, "service kind of '" + e.local_part + "' contradicts its index range");
        if (!locals.insert(e.local_part).second) fail(ErrorKind::Integrity, "duplicate local part " + e.local_part);
    }
}

const AliasEntry* AliasRegistry::find_local_part(std::string_view local_part) const noexcept {
    const auto idx = alias_index(local_part);
    if (!idx) return nullptr;
    const auto* e = find_index(*idx);
    return (e && e->local_part == local_part) ? e : nullptr;
}

const AliasEntry* AliasRegistry::find_index(int index) const noexcept {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), index,
                               [](const AliasEntry& e, int v) { return e.index < v; });
    return (it != entries_.end() && it->index == index) ? &*it : nullptr;
}

const AliasEntry* AliasRegistry::find_service(std::string_view service_name) const noexcept {
    for (const auto& e : entries_)
        if (e.service_name == service_name) return &e;
    return nullptr;
}

AliasRegistry parse_alias_registry(std::string_view contents) {
    const auto table = text::parse_delimited(contents);
    if (table.header.empty() && table.rows.empty()) {
        AliasRegistry empty;
        empty.warnings.emplace_back("alias registry is empty");
        return empty;
    }
    const std::size_t c_local = table.column("local_part"), c_index = table.column("index"),
                      c_name = table.column("service_name"), c_kind = table.column("service_kind"),
                      c_date = table.column("registration_date"), c_sector = table.column("sector");
    const auto npos = static_cast<std::size_t>(-1);
    if (c_local == npos || c_index == npos || c_name == npos || c_kind == npos || c_date == npos)
        fail(ErrorKind::Parse, "alias registry header must name local_part, index, service_name, service_kind, registration_date");

    std::vector<AliasEntry> entries;
    for (const auto& row : table.rows) {
        auto bad = [&](const std::string& why) {
            fail(ErrorKind::Parse, "alias registry row at line " + std::to_string(row.line) + ": " + why);
        };
        auto field = [&](std::size_t c) -> const std::string& {
            if (c >= row.fields.size()) bad("missing column");
            return row.fields[c];
        };
        AliasEntry e;
        e.local_part = text::to_lower(field(c_local));
        const auto& idx = field(c_index);
        if (idx.empty() || idx.size() > 3 || !std::all_of(idx.begin(), idx.end(), [](char c) { return c >= '0' && c <= '9'; }))
            bad("index '" + idx + "' is not an integer");
        e.index = std::stoi(idx);
        e.service_name = field(c_name);
        if (e.service_name.empty()) bad("empty service_name");
        const auto kind = service_kind_from_string(field(c_kind));
        if (!kind) bad("unknown service_kind '" + field(c_kind) + "'");
        e.service_kind = *kind;
        const auto date = parse_iso_date(field(c_date));
        if (!date) bad("registration_date '" + field(c_date) + "' is not YYYY-MM-DD");
        e.registration_date = *date;
        if (c_sector != npos && c_sector < row.fields.size()) e.sector = row.fields[c_sector];
        entries.push_back(std::move(e));
    }
    AliasRegistry registry(std::move(entries));
    if (registry.empty()) registry.warnings.emplace_back("alias registry is empty");
    return registry;
}

AliasRegistry load_alias_registry(const std::filesystem::path& path) {
    return parse_alias_registry(text::read_file(path));
}

void load_public_suffix_rules(std::string_view psl_contents) {
    auto rules = parse_suffix_rules(psl_contents);
    std::lock_guard lock(g_rules_mutex);
    g_rules = std::move(rules);
}

std::string registrable_domain(std::string_view host) {
    auto h = text::to_lower(text::trim(host));
    while (!h.empty() && h.back() == '.') h.pop_back();
    if (h.empty()) return h;
    const auto labels = text::split(h, '.', false);
    const auto rules = current_rules();
    const std::size_t n = labels.size();

    auto join_from = [&](std::size_t i) {
        std::string s;
        for (std::size_t k = i; k < n; ++k) {
            if (!s.empty()) s.push_back('.');
            s += labels[k];
        }
        return s;
    };

    std::size_t suffix_labels = 1; // implicit "*" rule
    for (std::size_t i = 0; i < n; ++i) {
        const auto candidate = join_from(i);
        const std::size_t count = n - i;
        if (rules->exception.count(candidate)) {
            suffix_labels = count - 1;
            break; // exceptions override everything
        }
        if (count > suffix_labels &&
            (rules->normal.count(candidate) || (i + 1 < n && rules->wildcard.count(join_from(i + 1)))))
            suffix_labels = count;
    }
    if (n <= suffix_labels) return h;
    return join_from(n - suffix_labels - 1);
}

std::string root_domain(std::string_view address) {
    const auto at = address.rfind('@');
    if (at == std::string_view::npos) fail(ErrorKind::Format, "address without '@': " + std::string(address));
    return registrable_domain(address.substr(at + 1));
}

std::string resolve_recipient(const HeaderMap& headers) {
    for (const char* name : {"Delivered-To", "X-Original-To", "To"}) {
        for (auto value : headers.all(name)) {
            auto addr = mime::first_address(mime::decode_encoded_words(value));
            if (!addr.empty()) return addr;
        }
    }
    return {};
}

void bind_alias(EmailRecord& record, const AliasRegistry& registry) {
    record.alias.reset();
    if (record.recipient.empty()) return;
    if (const auto* entry = registry.find_local_part(local_part_of(record.recipient))) record.alias = *entry;
}

EmailRecord parse_eml(std::string_view raw, std::string_view trusted_mx, const Timezone& tz) {
    EmailRecord rec;
    auto msg = mime::parse_message(raw);
    rec.warnings = std::move(msg.warnings);
    const std::string hash = content_hash(raw);
    if (!msg.has_header_block) {
        rec.message_id = "unparseable-" + hash;
        rec.parse_status = ParseStatus::Unparseable;
        return rec;
    }
    rec.headers = std::move(msg.headers);
    const auto& h = rec.headers;

    if (auto mid = h.first("Message-ID")) {
        auto id = text::trim(*mid);
        if (id.size() >= 2 && id.front() == '<' && id.back() == '>') id = id.substr(1, id.size() - 2);
        rec.message_id = std::string(id);
    }
    rec.recipient = resolve_recipient(h);
    if (auto from = h.first("From")) rec.from_address = mime::first_address(mime::decode_encoded_words(*from));
    if (!rec.from_address.empty()) rec.from_root_domain = root_domain(rec.from_address);
    if (auto subject = h.first("Subject")) rec.subject = mime::decode_encoded_words(*subject);
    rec.body_text = std::move(msg.body_text);

    const auto verdict = authlineage::parse_auth_results(h, trusted_mx);
    rec.spf = verdict.spf;
    rec.dkim = verdict.dkim;
    rec.authenticated_domain = verdict.authenticated_domain;
    rec.warnings.insert(rec.warnings.end(), verdict.warnings.begin(), verdict.warnings.end());
    rec.sender_ip = authlineage::extract_sender_ip(h, trusted_mx);

    // Receipt time: trusted hop, else topmost hop, else the Date header.
    if (auto trusted = authlineage::trusted_received_header(h, trusted_mx))
        rec.received_utc = authlineage::received_timestamp(*trusted);
    if (!rec.received_utc) {
        if (auto top = h.first("Received")) rec.received_utc = authlineage::received_timestamp(*top);
    }
    if (!rec.received_utc) {
        if (auto date = h.first("Date")) rec.received_utc = parse_rfc5322_date(*date);
    }

    if (rec.from_address.empty()) rec.warnings.emplace_back("missing From address");
    if (!rec.received_utc) rec.warnings.emplace_back("no parsable receipt date");
    if (rec.received_utc) rec.received_local = tz.to_local(*rec.received_utc);
    if (!rec.from_address.empty() && rec.received_utc) {
        rec.parse_status = ParseStatus::Ok;
        if (rec.message_id.empty()) rec.message_id = "generated-" + hash;
    } else {
        rec.parse_status = ParseStatus::Unparseable;
        rec.message_id = "unparseable-" + hash;
    }
    return rec;
}

CorpusStore::CorpusStore(std::vector<EmailRecord> records) : records_(std::move(records)) {
    std::sort(records_.begin(), records_.end(), [](const EmailRecord& a, const EmailRecord& b) {
        const auto ta = a.received_utc.value_or(INT64_MIN);
        const auto tb = b.received_utc.value_or(INT64_MIN);
        if (ta != tb) return ta < tb;
        return a.message_id < b.message_id;
    });
    for (std::size_t i = 0; i < records_.size(); ++i) {
        by_service_[records_[i].service_name()].push_back(i);
        by_root_domain_[records_[i].from_root_domain].push_back(i);
    }
}

std::vector<const EmailRecord*> CorpusStore::service_records(std::string_view service) const {
    std::vector<const EmailRecord*> out;
    if (auto it = by_service_.find(std::string(service)); it != by_service_.end())
        for (auto i : it->second) out.push_back(&records_[i]);
    return out;
}

IngestResult ingest_messages(const std::vector<std::string>& raw_messages, const AliasRegistry& registry,
                             const IngestOptions& options) {
    return finish_ingest(parse_all(raw_messages, registry, options), raw_messages.size());
}

IngestResult ingest_corpus(const std::filesystem::path& directory, const AliasRegistry& registry,
                           const IngestOptions& options) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(directory, ec)) fail(ErrorKind::Io, "corpus directory not readable: " + directory.string());
    std::vector<fs::path> files;
    fs::recursive_directory_iterator it(directory, fs::directory_options::skip_permission_denied, ec);
    if (ec) fail(ErrorKind::Io, "cannot list " + directory.string() + ": " + ec.message());
    for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
        if (ec) fail(ErrorKind::Io, "cannot list " + directory.string() + ": " + ec.message());
        if (it->is_regular_file(ec) && text::iequals(it->path().extension().string(), ".eml")) files.push_back(it->path());
    }
    std::sort(files.begin(), files.end());
    std::vector<std::string> raws;
    raws.reserve(files.size());
    for (const auto& f : files) raws.push_back(text::read_file(f));
    return finish_ingest(parse_all(raws, registry, options), files.size());
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

using nlohmann::json;

json alias_json(const std::optional<AliasEntry>& alias) {
    if (!alias) return std::string(kUnmatched);
    json j = {{"local_part", alias->local_part},
              {"index", alias->index},
              {"service_name", alias->service_name},
              {"service_kind", to_string(alias->service_kind)},
              {"registration_date", format_iso_date(alias->registration_date)}};
    if (!alias->sector.empty()) j["sector"] = alias->sector;
    return j;
}

json record_json(const EmailRecord& r) {
    json j;
    j["message_id"] = r.message_id;
    j["alias"] = alias_json(r.alias);
    j["recipient"] = r.recipient;
    j["from_address"] = r.from_address;
    j["from_root_domain"] = r.from_root_domain;
    j["received_utc"] = r.received_utc ? json(format_iso_utc(*r.received_utc)) : json(nullptr);
    j["received_local"] = r.received_local ? json(format_local(*r.received_local)) : json(nullptr);
    j["sender_ip"] = r.sender_ip ? r.sender_ip->to_string() : std::string(kUnknown);
    j["spf"] = to_string(r.spf);
    j["dkim"] = to_string(r.dkim);
    j["authenticated_domain"] = r.authenticated_domain;
    j["subject"] = r.subject;
    j["body_text"] = r.body_text;
    j["parse_status"] = r.ok() ? "ok" : "unparseable";
    return j;
}

std::string get_string(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) fail(ErrorKind::Parse, std::string("corpus record missing string field ") + key);
    return it->get<std::string>();
}

EmailRecord record_from_json(const json& j, const Timezone& tz) {
    EmailRecord r;
    r.message_id = get_string(j, "message_id");
    const auto& alias = j.at("alias");
    if (alias.is_object()) {
        AliasEntry e;
        e.local_part = alias.at("local_part").get<std::string>();
        e.index = alias.at("index").get<int>();
        e.service_name = alias.at("service_name").get<std::string>();
        const auto kind = service_kind_from_string(alias.at("service_kind").get<std::string>());
        if (!kind) fail(ErrorKind::Parse, "bad service_kind in corpus record");
        e.service_kind = *kind;
        const auto date = parse_iso_date(alias.at("registration_date").get<std::string>());
        if (!date) fail(ErrorKind::Parse, "bad registration_date in corpus record");
        e.registration_date = *date;
        if (alias.contains("sector")) e.sector = alias.at("sector").get<std::string>();
        r.alias = std::move(e);
    }
    r.recipient = j.value("recipient", std::string{});
    r.from_address = get_string(j, "from_address");
    r.from_root_domain = get_string(j, "from_root_domain");
    if (const auto& t = j.at("received_utc"); t.is_string()) {
        r.received_utc = parse_iso_utc(t.get<std::string>());
        if (!r.received_utc) fail(ErrorKind::Parse, "bad received_utc in corpus record");
        r.received_local = tz.to_local(*r.received_utc);
    }
    const auto ip = get_string(j, "sender_ip");
    if (ip != kUnknown) {
        r.sender_ip = IpAddress::parse(ip);
        if (!r.sender_ip) fail(ErrorKind::Parse, "bad sender_ip in corpus record");
    }
    const auto spf = auth_result_from_string(get_string(j, "spf"));
    const auto dkim = auth_result_from_string(get_string(j, "dkim"));
    if (!spf || !dkim) fail(ErrorKind::Parse, "bad auth verdict in corpus record");
    r.spf = *spf;
    r.dkim = *dkim;
    r.authenticated_domain = j.value("authenticated_domain", std::string{});
    r.subject = get_string(j, "subject");
    r.body_text = get_string(j, "body_text");
    const auto status = get_string(j, "parse_status");
    if (status != "ok" && status != "unparseable") fail(ErrorKind::Parse, "bad parse_status in corpus record");
    r.parse_status = status == "ok" ? ParseStatus::Ok : ParseStatus::Unparseable;
    return r;
}

} // namespace

std::string to_jsonl(const CorpusStore& store) {
    std::string out;
    for (const auto& r : store.records()) {
        out += record_json(r).dump(-1, ' ', false, json::error_handler_t::replace);
        out.push_back('\n');
    }
    return out;
}

void write_jsonl(const CorpusStore& store, const std::filesystem::path& path) {
    text::write_file(path, to_jsonl(store));
}

CorpusStore parse_jsonl(std::string_view contents, const Timezone& tz) {
    std::vector<EmailRecord> records;
    std::size_t line_no = 0;
    for (const auto& line : text::split(contents, '\n', false)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            records.push_back(record_from_json(json::parse(line), tz));
        } catch (const json::exception& e) {
            fail(ErrorKind::Parse, "corpus line " + std::to_string(line_no) + ": " + e.what());
        } catch (const AuditError& e) {
            fail(ErrorKind::Parse, "corpus line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return CorpusStore(std::move(records));
}

CorpusStore read_jsonl(const std::filesystem::path& path, const Timezone& tz) {
    return parse_jsonl(text::read_file(path), tz);
}

std::string to_json(const IngestReport& report) {
    json j = {{"files", report.files},
              {"ok", report.ok},
              {"unparseable", report.unparseable},
              {"unmatched", report.unmatched},
              {"duplicate_message_ids", report.duplicate_message_ids},
              {"warnings", report.warnings}};
    return j.dump(2);
}

} // namespace inboxaudit::corpus
