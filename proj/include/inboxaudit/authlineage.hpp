#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "inboxaudit/classify.hpp"
#include "inboxaudit/netintel.hpp"
#include "inboxaudit/record.hpp"

namespace inboxaudit::authlineage {

struct AuthVerdict {
    AuthResult spf = AuthResult::Absent;
    AuthResult dkim = AuthResult::Absent;
    std::string authenticated_domain; // empty = NONE
    std::vector<std::string> warnings;
};

/// Reads spf= and dkim= from the first Authentication-Results header whose
/// authserv-id is `trusted_mx` (any header when `trusted_mx` is empty).
AuthVerdict parse_auth_results(const HeaderMap& headers, std::string_view trusted_mx = {});

/// Connecting IP of the topmost Received header written by `trusted_mx`
/// (the topmost header of any kind when `trusted_mx` is empty).
std::optional<IpAddress> extract_sender_ip(const HeaderMap& headers, std::string_view trusted_mx = {});

/// The Received header extract_sender_ip reads from, if any.
std::optional<std::string_view> trusted_received_header(const HeaderMap& headers, std::string_view trusted_mx = {});

/// Timestamp after the final ';' of a Received header.
std::optional<UnixSeconds> received_timestamp(std::string_view received_value);

enum class Provenance { Internal, Atp, Utp };
enum class SpamClass { Sos, Uuss, NotSpam };

const char* to_string(Provenance p) noexcept;
const char* to_string(SpamClass s) noexcept;

struct ProvenanceLabel {
    Provenance provenance = Provenance::Utp;
    SpamClass spam = SpamClass::Uuss;
    bool operator_unknown = false; // cloud-hosted or unresolved sender
    bool needs_review = false;     // service domain but SPF and DKIM both failed
    std::string reason;
};

struct ServiceOrg {
    std::string service_name;
    std::vector<std::string> accepted_domains;
    std::vector<std::string> accepted_asn_org_substrings;
};

/// service → accepted from-domains and ASN organization substrings.
class OrgMap {
public:
    OrgMap() = default;
    explicit OrgMap(std::vector<ServiceOrg> services);

    const ServiceOrg* find(std::string_view service_name) const noexcept;
    const std::vector<ServiceOrg>& services() const noexcept { return services_; }

private:
    std::vector<ServiceOrg> services_;
};

OrgMap parse_org_map(std::string_view contents);
OrgMap load_org_map(const std::filesystem::path& path);
/// Bundled seed mapping (wish/ContextLogic, AliExpress/Alibaba, LinkedIn,
/// Adobe/Omniture).
OrgMap default_org_map();

const std::vector<std::string>& default_cloud_providers();

struct ProvenanceInputs {
    const OrgMap* org_map = nullptr;
    std::optional<netintel::AsnRecord> asn;
    bool marketing_flag = false;
    std::optional<classify::ContentLabel> content;
    const std::vector<std::string>* cloud_providers = nullptr; // defaults when null
};

/// True when the record's from root domain belongs to its alias's service.
bool domain_matches_service(const EmailRecord& record, const OrgMap& org_map);

ProvenanceLabel classify_provenance(const EmailRecord& record, const ProvenanceInputs& inputs);

} // namespace inboxaudit::authlineage
