#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "inboxaudit/ip.hpp"
#include "inboxaudit/timeutil.hpp"

namespace inboxaudit {

enum class AuthResult { Pass, Fail, None, Absent };

const char* to_string(AuthResult r) noexcept;
std::optional<AuthResult> auth_result_from_string(std::string_view s) noexcept;

enum class ParseStatus { Ok, Unparseable };

enum class ServiceKind { OnlineService, MobileApp };

const char* to_string(ServiceKind k) noexcept;
std::optional<ServiceKind> service_kind_from_string(std::string_view s) noexcept;

struct AliasEntry {
    std::string local_part;
    int index = 0;
    std::string service_name;
    ServiceKind service_kind = ServiceKind::OnlineService;
    CivilDate registration_date;
    std::string sector; // optional column; empty when not provided

    bool operator==(const AliasEntry&) const = default;
};

/// Unfolded header fields in message order. Names compare
/// case-insensitively; values keep their original bytes.
class HeaderMap {
public:
    void add(std::string name, std::string value);

    const std::vector<std::pair<std::string, std::string>>& fields() const noexcept { return fields_; }
    std::vector<std::string_view> all(std::string_view name) const;
    std::optional<std::string_view> first(std::string_view name) const;
    bool empty() const noexcept { return fields_.empty(); }

private:
    std::vector<std::pair<std::string, std::string>> fields_;
};

struct EmailRecord {
    std::string message_id;
    std::optional<AliasEntry> alias; // nullopt = UNMATCHED
    std::string recipient;           // resolved recipient address
    std::string from_address;
    std::string from_root_domain;
    std::optional<UnixSeconds> received_utc;
    std::optional<LocalTime> received_local;
    std::optional<IpAddress> sender_ip; // nullopt = UNKNOWN
    AuthResult spf = AuthResult::Absent;
    AuthResult dkim = AuthResult::Absent;
    std::string authenticated_domain;
    std::string subject;
    std::string body_text;
    ParseStatus parse_status = ParseStatus::Unparseable;
    std::vector<std::string> warnings;

    // Raw headers are kept in memory only; they are not part of the
    // serialized corpus.
    HeaderMap headers;

    bool ok() const noexcept { return parse_status == ParseStatus::Ok; }
    const std::string& service_name() const;
};

inline constexpr std::string_view kUnmatched = "UNMATCHED";
inline constexpr std::string_view kUnknown = "UNKNOWN";

} // namespace inboxaudit
