#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace inboxaudit {

/// Seconds since the Unix epoch, UTC.
using UnixSeconds = std::int64_t;

struct CivilDate {
    int year = 1970;
    unsigned month = 1;
    unsigned day = 1;

    auto operator<=>(const CivilDate&) const = default;
};

struct LocalTime {
    CivilDate date;
    int hour = 0;
    int minute = 0;
    int second = 0;
    int weekday = 0; // 0 = Monday … 6 = Sunday
    int utc_offset_seconds = 0;
};

std::int64_t days_from_civil(const CivilDate& d);
CivilDate civil_from_days(std::int64_t days);
std::optional<CivilDate> parse_iso_date(std::string_view text);
std::string format_iso_date(const CivilDate& d);
std::string format_iso_utc(UnixSeconds t);
std::optional<UnixSeconds> parse_iso_utc(std::string_view text);

/// "Tue, 05 Mar 2024 14:05:00 +0100" for instant `t` shown at the offset.
std::string format_rfc5322(UnixSeconds t, int offset_minutes = 0);

/// RFC 5322 date-time (with the obsolete forms mail in the wild uses:
/// missing weekday, two-digit years, named zones such as EST or GMT).
std::optional<UnixSeconds> parse_rfc5322_date(std::string_view text);

/// A named IANA zone read from the system TZif database, or a fixed offset
/// ("UTC", "+05:30", "UTC-04:00"). Instants past the last stored transition
/// use the final offset in the file.
class Timezone {
public:
    static Timezone utc();
    static Timezone load(std::string_view name,
                         std::string_view zoneinfo_dir = "/usr/share/zoneinfo");

    const std::string& name() const noexcept { return name_; }
    int offset_at(UnixSeconds t) const noexcept;
    LocalTime to_local(UnixSeconds t) const noexcept;

private:
    std::string name_;
    std::vector<std::int64_t> transitions_;
    std::vector<int> offsets_after_; // offset in effect from transitions_[i]
    int initial_offset_ = 0;
};

} // namespace inboxaudit
