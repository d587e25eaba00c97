#include "inboxaudit/authlineage.hpp"

#include <algorithm>
#include <cctype>

#include "inboxaudit/corpus.hpp"
#include "inboxaudit/embedded.hpp"
#include "inboxaudit/error.hpp"
#include "inboxaudit/text.hpp"

namespace inboxaudit::authlineage {

namespace {

// Removes RFC 5322 comments, which A-R headers use freely.
std::string strip_comments(std::string_view s) {
    std::string out;
    int depth = 0;
    for (char c : s) {
        if (c == '(') ++depth;
        else if (c == ')' && depth > 0) --depth;
        else if (depth == 0) out.push_back(c);
    }
    return out;
}

std::optional<AuthResult> map_result(std::string_view r) {
    const auto v = text::to_lower(r);
    if (v == "pass") return AuthResult::Pass;
    if (v == "none" || v == "neutral") return AuthResult::None;
    if (v == "fail" || v == "softfail" || v == "hardfail" || v == "permerror" || v == "temperror" || v == "policy")
        return AuthResult::Fail;
    return std::nullopt;
}

std::string authserv_id(std::string_view value) {
    auto head = text::trim(value.substr(0, value.find(';')));
    head = head.substr(0, head.find_first_of(" \t"));
    return text::to_lower(head);
}

bool host_matches(std::string_view host, std::string_view trusted) {
    if (text::iequals(host, trusted)) return true;
    // Accept subdomains of the trusted name (mx1.audit for "audit").
    return host.size() > trusted.size() && host[host.size() - trusted.size() - 1] == '.' &&
           text::iequals(host.substr(host.size() - trusted.size()), trusted);
}

// Value of "key=value" inside a resinfo segment, empty if absent.
std::string property(std::string_view segment, std::string_view key) {
    const auto lower = text::to_lower(segment);
    std::size_t pos = 0;
    const std::string needle = std::string(key) + "=";
    while ((pos = lower.find(needle, pos)) != std::string::npos) {
        if (pos == 0 || std::isspace(static_cast<unsigned char>(lower[pos - 1]))) {
            auto rest = segment.substr(pos + needle.size());
            auto end = rest.find_first_of(" \t");
            auto v = rest.substr(0, end);
            if (!v.empty() && v.front() == '"') v = v.substr(1, v.find('"', 1) - 1);
            return std::string(v);
        }
        ++pos;
    }
    return {};
}

std::string domain_of(std::string_view v) {
    const auto at = v.rfind('@');
    return text::to_lower(at == std::string_view::npos ? v : v.substr(at + 1));
}

std::string received_by(std::string_view value) {
    const auto lower = text::to_lower(value);
    std::size_t pos = 0;
    while ((pos = lower.find("by", pos)) != std::string::npos) {
        const bool left = pos == 0 || std::isspace(static_cast<unsigned char>(lower[pos - 1])) || lower[pos - 1] == ')';
        const bool right = pos + 2 < lower.size() && std::isspace(static_cast<unsigned char>(lower[pos + 2]));
        if (left && right) {
            auto rest = text::trim(std::string_view(value).substr(pos + 2));
            return std::string(rest.substr(0, rest.find_first_of(" \t;()")));
        }
        pos += 2;
    }
    return {};
}

std::optional<IpAddress> ip_in_from_clause(std::string_view value) {
    auto clause = value.substr(0, value.find(';'));
    const auto lower = text::to_lower(clause);
    for (std::size_t pos = 0; (pos = lower.find("by ", pos)) != std::string::npos; ++pos) {
        if (pos > 0 && (std::isspace(static_cast<unsigned char>(lower[pos - 1])) || lower[pos - 1] == ')')) {
            clause = clause.substr(0, pos);
            break;
        }
    }
    // Bracketed literals first ("[1.2.3.4]", "[IPv6:2001:db8::1]").
    for (std::size_t open = clause.find('['); open != std::string_view::npos; open = clause.find('[', open + 1)) {
        const auto close = clause.find(']', open);
        if (close == std::string_view::npos) break;
        if (auto ip = IpAddress::parse(clause.substr(open + 1, close - open - 1))) return ip;
    }
    std::string token;
    for (std::size_t i = 0; i <= clause.size(); ++i) {
        const char c = i < clause.size() ? clause[i] : ' ';
        if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == '[' || c == ']' || c == '=') {
            if (!token.empty()) {
                if (auto ip = IpAddress::parse(token)) return ip;
                token.clear();
            }
        } else {
            token.push_back(c);
        }
    }
    return std::nullopt;
}

std::vector<std::string> semicolon_list(std::string_view s) {
    std::vector<std::string> out;
    for (auto& item : text::split(s, ';'))
        if (!item.empty()) out.push_back(text::to_lower(item));
    return out;
}

std::string normalize_name(std::string_view s) {
    std::string out;
    for (char c : s)
        if (std::isalnum(static_cast<unsigned char>(c))) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

std::vector<std::string> provider_lines(std::string_view contents) {
    std::vector<std::string> out;
    for (auto& line : text::split(contents, '\n'))
        if (!line.empty() && line[0] != '#') out.push_back(text::to_lower(line));
    return out;
}

bool org_matches_any(std::string_view organization, const std::vector<std::string>& substrings) {
    return !organization.empty() && std::any_of(substrings.begin(), substrings.end(), [&](const std::string& s) {
               return !s.empty() && text::icontains(organization, s);
           });
}

} // namespace

const char* to_string(Provenance p) noexcept {
    switch (p) {
    case Provenance::Internal: return "internal";
    case Provenance::Atp: return "atp";
    case Provenance::Utp: return "utp";
    }
    return "utp";
}

const char* to_string(SpamClass s) noexcept {
    switch (s) {
    case SpamClass::Sos: return "sos";
    case SpamClass::Uuss: return "uuss";
    case SpamClass::NotSpam: return "not_spam";
    }
    return "uuss";
}

AuthVerdict parse_auth_results(const HeaderMap& headers, std::string_view trusted_mx) {
    AuthVerdict verdict;
    std::optional<std::string_view> chosen;
    for (auto value : headers.all("Authentication-Results")) {
        if (trusted_mx.empty() || host_matches(authserv_id(value), trusted_mx)) {
            chosen = value;
            break;
        }
    }
    if (!chosen) return verdict;

    const auto body = strip_comments(*chosen);
    const auto semi = body.find(';');
    if (semi == std::string::npos) {
        // "authserv-id none" is the only legal form without a ';'.
        if (!text::icontains(body, "none")) verdict.warnings.emplace_back("malformed Authentication-Results header");
        return verdict;
    }

    AuthVerdict parsed;
    std::string spf_domain, dkim_domain;
    for (auto& segment : text::split(std::string_view(body).substr(semi + 1), ';')) {
        if (segment.empty() || text::iequals(segment, "none")) continue;
        const auto eq = segment.find('=');
        if (eq == std::string::npos) {
            verdict.warnings.emplace_back("malformed Authentication-Results header");
            return verdict;
        }
        const auto method = text::to_lower(text::trim(std::string_view(segment).substr(0, eq)));
        auto rest = text::trim(std::string_view(segment).substr(eq + 1));
        const auto result_token = rest.substr(0, rest.find_first_of(" \t"));
        if (method != "spf" && method != "dkim") continue;
        const auto result = map_result(result_token);
        if (!result) {
            verdict.warnings.emplace_back("malformed Authentication-Results header");
            return verdict;
        }
        if (method == "spf") {
            if (parsed.spf == AuthResult::Absent) {
                parsed.spf = *result;
                auto from = property(segment, "smtp.mailfrom");
                if (from.empty()) from = property(segment, "smtp.helo");
                if (*result == AuthResult::Pass && !from.empty()) spf_domain = domain_of(from);
            }
        } else {
            // Several signatures: one passing signature is enough.
            if (parsed.dkim == AuthResult::Absent || *result == AuthResult::Pass) {
                if (parsed.dkim != AuthResult::Pass) parsed.dkim = *result;
                auto d = property(segment, "header.d");
                if (d.empty()) d = property(segment, "header.i");
                if (*result == AuthResult::Pass && !d.empty() && dkim_domain.empty()) dkim_domain = domain_of(d);
            }
        }
    }
    parsed.authenticated_domain = !dkim_domain.empty() ? dkim_domain : spf_domain;
    return parsed;
}

std::optional<std::string_view> trusted_received_header(const HeaderMap& headers, std::string_view trusted_mx) {
    const auto received = headers.all("Received");
    if (received.empty()) return std::nullopt;
    if (trusted_mx.empty()) return received.front();
    for (auto value : received)
        if (host_matches(received_by(value), trusted_mx)) return value;
    return std::nullopt;
}

std::optional<UnixSeconds> received_timestamp(std::string_view received_value) {
    const auto semi = received_value.rfind(';');
    if (semi == std::string_view::npos) return std::nullopt;
    return parse_rfc5322_date(received_value.substr(semi + 1));
}

std::optional<IpAddress> extract_sender_ip(const HeaderMap& headers, std::string_view trusted_mx) {
    const auto value = trusted_received_header(headers, trusted_mx);
    if (!value) return std::nullopt;
    return ip_in_from_clause(*value);
}

OrgMap::OrgMap(std::vector<ServiceOrg> services) : services_(std::move(services)) {
    std::sort(services_.begin(), services_.end(),
              [](const ServiceOrg& a, const ServiceOrg& b) { return a.service_name < b.service_name; });
}

const ServiceOrg* OrgMap::find(std::string_view service_name) const noexcept {
    for (const auto& s : services_)
        if (text::iequals(s.service_name, service_name)) return &s;
    return nullptr;
}

OrgMap parse_org_map(std::string_view contents) {
    const auto table = text::parse_delimited(contents);
    const auto npos = static_cast<std::size_t>(-1);
    const auto c_name = table.column("service_name"), c_domains = table.column("accepted_domains"),
               c_orgs = table.column("accepted_asn_org_substrings");
    if (table.rows.empty() && table.header.empty()) return {};
    if (c_name == npos || c_domains == npos || c_orgs == npos)
        fail(ErrorKind::Parse, "org map header must name service_name, accepted_domains, accepted_asn_org_substrings");
    std::vector<ServiceOrg> services;
    for (const auto& row : table.rows) {
        if (row.fields.size() <= std::max({c_name, c_domains, c_orgs}))
            fail(ErrorKind::Parse, "org map row at line " + std::to_string(row.line) + ": missing column");
        services.push_back({row.fields[c_name], semicolon_list(row.fields[c_domains]), semicolon_list(row.fields[c_orgs])});
    }
    return OrgMap(std::move(services));
}

OrgMap load_org_map(const std::filesystem::path& path) {
    return parse_org_map(text::read_file(path));
}

OrgMap default_org_map() {
    return parse_org_map(embedded::service_org_map_csv);
}

const std::vector<std::string>& default_cloud_providers() {
    static const std::vector<std::string> list = provider_lines(embedded::cloud_providers_txt);
    return list;
}

bool domain_matches_service(const EmailRecord& record, const OrgMap& org_map) {
    if (!record.alias || record.from_root_domain.empty()) return false;
    if (const auto* org = org_map.find(record.alias->service_name)) {
        return std::any_of(org->accepted_domains.begin(), org->accepted_domains.end(), [&](const std::string& d) {
            return text::iequals(d, record.from_root_domain) || text::iequals(corpus::registrable_domain(d), record.from_root_domain);
        });
    }
    // Unmapped service: its normalized name must equal the registrable label.
    const auto label = record.from_root_domain.substr(0, record.from_root_domain.find('.'));
    const auto name = normalize_name(record.alias->service_name);
    return !name.empty() && name == normalize_name(label);
}

ProvenanceLabel classify_provenance(const EmailRecord& record, const ProvenanceInputs& inputs) {
    static const OrgMap empty_map;
    const OrgMap& org_map = inputs.org_map ? *inputs.org_map : empty_map;
    const auto& cloud = inputs.cloud_providers ? *inputs.cloud_providers : default_cloud_providers();

    ProvenanceLabel label;
    const bool spf_pass = record.spf == AuthResult::Pass;
    const bool dkim_pass = record.dkim == AuthResult::Pass;
    const bool auth_pass = spf_pass || dkim_pass;

    auto untrusted = [&](std::string reason) {
        label.provenance = Provenance::Utp;
        label.spam = SpamClass::Uuss;
        label.reason = std::move(reason);
        return label;
    };

    if (!record.alias) return untrusted("recipient alias not registered");
    if (!domain_matches_service(record, org_map)) return untrusted("from domain does not belong to the alias's service");
    if (!auth_pass) {
        label.needs_review = record.spf == AuthResult::Fail && record.dkim == AuthResult::Fail;
        return untrusted("neither SPF nor DKIM passed");
    }

    const ServiceOrg* org = org_map.find(record.alias->service_name);
    if (inputs.asn) {
        const auto& organization = inputs.asn->organization;
        const bool own = org ? org_matches_any(organization, org->accepted_asn_org_substrings)
                             : (!normalize_name(record.alias->service_name).empty() &&
                                normalize_name(organization).find(normalize_name(record.alias->service_name)) != std::string::npos);
        if (own) {
            label.provenance = Provenance::Internal;
            label.reason = "service domain sent from the service's own ASN";
        } else if (inputs.marketing_flag) {
            label.provenance = Provenance::Atp;
            label.reason = "authenticated mail relayed by marketing provider " + inputs.asn->label();
        } else if (org_matches_any(organization, cloud)) {
            label.provenance = Provenance::Atp;
            label.operator_unknown = true;
            label.reason = "authenticated mail from cloud provider " + inputs.asn->label();
        } else {
            label.provenance = Provenance::Atp;
            label.operator_unknown = true;
            label.reason = "authenticated mail from third-party network " + inputs.asn->label();
        }
    } else {
        label.provenance = Provenance::Atp;
        label.operator_unknown = true;
        label.reason = "authenticated mail from an unresolved network";
    }

    if (inputs.content && *inputs.content == classify::ContentLabel::Alert) label.spam = SpamClass::NotSpam;
    else label.spam = SpamClass::Sos; // promotional, CRM, or unclassified
    return label;
}

} // namespace inboxaudit::authlineage
