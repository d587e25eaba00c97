#include "inboxaudit/timeutil.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>

#include "inboxaudit/error.hpp"
#include "inboxaudit/text.hpp"

namespace inboxaudit {

namespace {

bool parse_int(std::string_view s, int& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

unsigned days_in_month(int y, unsigned m) {
    static constexpr std::array<unsigned, 12> days = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && ((y % 4 == 0 && y % 100 != 0) || y % 400 == 0)) return 29;
    return days[m - 1];
}

bool valid_date(const CivilDate& d) {
    return d.month >= 1 && d.month <= 12 && d.day >= 1 && d.day <= days_in_month(d.year, d.month);
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

std::int64_t read_be(const std::string& data, std::size_t pos, int width) {
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v = (v << 8) | static_cast<std::uint8_t>(data[pos + i]);
    if (width == 4) return static_cast<std::int32_t>(static_cast<std::uint32_t>(v));
    return static_cast<std::int64_t>(v);
}

std::optional<int> parse_fixed_offset(std::string_view s) {
    if (text::starts_with_ci(s, "UTC") || text::starts_with_ci(s, "GMT")) s.remove_prefix(3);
    if (s.empty() || s == "Z") return 0;
    if (s.front() != '+' && s.front() != '-') return std::nullopt;
    const int sign = s.front() == '-' ? -1 : 1;
    s.remove_prefix(1);
    int h = 0, m = 0;
    if (const auto colon = s.find(':'); colon != std::string_view::npos) {
        if (!parse_int(s.substr(0, colon), h) || !parse_int(s.substr(colon + 1), m)) return std::nullopt;
    } else if (s.size() == 4) {
        if (!parse_int(s.substr(0, 2), h) || !parse_int(s.substr(2), m)) return std::nullopt;
    } else if (!parse_int(s, h)) {
        return std::nullopt;
    }
    if (h > 18 || m > 59) return std::nullopt;
    return sign * (h * 3600 + m * 60);
}

int month_from_name(std::string_view s) {
    static constexpr std::array<std::string_view, 12> names = {"jan", "feb", "mar", "apr", "may", "jun",
                                                               "jul", "aug", "sep", "oct", "nov", "dec"};
    if (s.size() < 3) return 0;
    for (std::size_t i = 0; i < names.size(); ++i)
        if (text::iequals(s.substr(0, 3), names[i])) return static_cast<int>(i) + 1;
    return 0;
}

} // namespace

// Howard Hinnant's civil calendar algorithms.
std::int64_t days_from_civil(const CivilDate& d) {
    const std::int64_t y = static_cast<std::int64_t>(d.year) - (d.month <= 2 ? 1 : 0);
    const std::int64_t era = floor_div(y, 400);
    const std::int64_t yoe = y - era * 400;
    const std::int64_t mp = (static_cast<std::int64_t>(d.month) + 9) % 12;
    const std::int64_t doy = (153 * mp + 2) / 5 + d.day - 1;
    const std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + doe - 719468;
}

CivilDate civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = floor_div(z, 146097);
    const std::int64_t doe = z - era * 146097;
    const std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const std::int64_t mp = (5 * doy + 2) / 153;
    const unsigned day = static_cast<unsigned>(doy - (153 * mp + 2) / 5 + 1);
    const unsigned month = static_cast<unsigned>(mp < 10 ? mp + 3 : mp - 9);
    const int year = static_cast<int>(yoe + era * 400 + (month <= 2 ? 1 : 0));
    return {year, month, day};
}

std::optional<CivilDate> parse_iso_date(std::string_view s) {
    s = text::trim(s);
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    int y = 0, m = 0, d = 0;
    if (!parse_int(s.substr(0, 4), y) || !parse_int(s.substr(5, 2), m) || !parse_int(s.substr(8, 2), d))
        return std::nullopt;
    CivilDate date{y, static_cast<unsigned>(m), static_cast<unsigned>(d)};
    if (!valid_date(date)) return std::nullopt;
    return date;
}

std::string format_iso_date(const CivilDate& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", d.year, d.month, d.day);
    return buf;
}

std::string format_iso_utc(UnixSeconds t) {
    const auto days = floor_div(t, 86400);
    const auto secs = t - days * 86400;
    const auto d = civil_from_days(days);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", d.year, d.month, d.day,
                  static_cast<int>(secs / 3600), static_cast<int>(secs % 3600 / 60), static_cast<int>(secs % 60));
    return buf;
}

std::string format_rfc5322(UnixSeconds t, int offset_minutes) {
    static constexpr const char* kDays[] = {"Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"};
    static constexpr const char* kMonths[] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                              "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
    const UnixSeconds local = t + static_cast<UnixSeconds>(offset_minutes) * 60;
    const auto days = floor_div(local, 86400);
    const auto secs = local - days * 86400;
    const auto d = civil_from_days(days);
    const auto weekday = static_cast<int>(((days % 7) + 7 + 3) % 7); // 1970-01-01 was a Thursday
    const int aoff = offset_minutes < 0 ? -offset_minutes : offset_minutes;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s, %02u %s %04d %02d:%02d:%02d %c%02d%02d", kDays[weekday], d.day,
                  kMonths[d.month - 1], d.year, static_cast<int>(secs / 3600), static_cast<int>(secs % 3600 / 60),
                  static_cast<int>(secs % 60), offset_minutes < 0 ? '-' : '+', aoff / 60, aoff % 60);
    return buf;
}

std::optional<UnixSeconds> parse_iso_utc(std::string_view s) {
    s = text::trim(s);
    if (s.size() != 20 || s[10] != 'T' || s[19] != 'Z') return std::nullopt;
    auto date = parse_iso_date(s.substr(0, 10));
    int h = 0, m = 0, sec = 0;
    if (!date || s[13] != ':' || s[16] != ':' || !parse_int(s.substr(11, 2), h) ||
        !parse_int(s.substr(14, 2), m) || !parse_int(s.substr(17, 2), sec))
        return std::nullopt;
    return days_from_civil(*date) * 86400 + h * 3600 + m * 60 + sec;
}

std::optional<UnixSeconds> parse_rfc5322_date(std::string_view raw) {
    // Drop comments such as "(UTC)" or "(CEST)".
    std::string cleaned;
    int depth = 0;
    for (char c : raw) {
        if (c == '(') ++depth;
        else if (c == ')' && depth > 0) --depth;
        else if (depth == 0) cleaned.push_back(c == ',' ? ' ' : c);
    }
    std::vector<std::string> tokens;
    for (auto& t : text::split(cleaned, ' '))
        if (!t.empty()) tokens.push_back(t);

    std::size_t i = 0;
    if (i < tokens.size() && !tokens[i].empty() && std::isalpha(static_cast<unsigned char>(tokens[i][0])) &&
        month_from_name(tokens[i]) == 0)
        ++i; // weekday
    if (tokens.size() < i + 4) return std::nullopt;

    int day = 0, month = 0, year = 0;
    if (parse_int(tokens[i], day)) {
        month = month_from_name(tokens[i + 1]);
    } else {
        // "Mon DD YYYY" variant
        month = month_from_name(tokens[i]);
        if (!parse_int(tokens[i + 1], day)) return std::nullopt;
    }
    if (month == 0 || !parse_int(tokens[i + 2], year)) return std::nullopt;
    if (tokens[i + 2].size() <= 2) year += year < 50 ? 2000 : 1900;
    else if (tokens[i + 2].size() == 3) year += 1900;

    const auto hms = text::split(tokens[i + 3], ':');
    int h = 0, m = 0, s = 0;
    if (hms.size() < 2 || !parse_int(hms[0], h) || !parse_int(hms[1], m)) return std::nullopt;
    if (hms.size() >= 3) {
        // fractional seconds are truncated
        auto sec = std::string_view(hms[2]);
        sec = sec.substr(0, sec.find('.'));
        if (!parse_int(sec, s)) return std::nullopt;
    }
    if (h > 23 || m > 59 || s > 60) return std::nullopt;

    int offset = 0;
    if (tokens.size() > i + 4) {
        const auto& zone = tokens[i + 4];
        if (auto fixed = parse_fixed_offset(zone); fixed) {
            offset = *fixed;
        } else {
            static constexpr std::array<std::pair<std::string_view, int>, 10> named = {{
                {"UT", 0}, {"EST", -5}, {"EDT", -4}, {"CST", -6}, {"CDT", -5},
                {"MST", -7}, {"MDT", -6}, {"PST", -8}, {"PDT", -7}, {"Z", 0},
            }};
            for (const auto& [name, hours] : named)
                if (text::iequals(zone, name)) offset = hours * 3600;
        }
    }

    CivilDate date{year, static_cast<unsigned>(month), static_cast<unsigned>(day)};
    if (!valid_date(date)) return std::nullopt;
    return days_from_civil(date) * 86400 + h * 3600 + m * 60 + std::min(s, 59) - offset;
}

Timezone Timezone::utc() {
    Timezone tz;
    tz.name_ = "UTC";
    return tz;
}

Timezone Timezone::load(std::string_view name, std::string_view zoneinfo_dir) {
    const auto trimmed = text::trim(name);
    if (trimmed.empty() || text::iequals(trimmed, "UTC") || text::iequals(trimmed, "Etc/UTC")) return utc();
    if (auto fixed = parse_fixed_offset(trimmed); fixed) {
        Timezone tz;
        tz.name_ = std::string(trimmed);
        tz.initial_offset_ = *fixed;
        return tz;
    }
    if (trimmed.find("..") != std::string_view::npos)
        fail(ErrorKind::Config, "invalid timezone name: " + std::string(trimmed));

    const auto path = std::filesystem::path(zoneinfo_dir) / std::string(trimmed);
    std::string data;
    try {
        data = text::read_file(path);
    } catch (const AuditError&) {
        fail(ErrorKind::Config, "unknown timezone: " + std::string(trimmed));
    }
    if (data.size() < 44 || data.compare(0, 4, "TZif") != 0)
        fail(ErrorKind::Config, "not a TZif file: " + path.string());

    auto counts_at = [&](std::size_t pos) {
        std::array<std::int64_t, 6> c{};
        for (int k = 0; k < 6; ++k) c[k] = read_be(data, pos + 20 + 4 * k, 4);
        return c;
    };
    auto block_size = [](const std::array<std::int64_t, 6>& c, int tw) {
        // isutcnt, isstdcnt, leapcnt, timecnt, typecnt, charcnt
        return c[3] * tw + c[3] + c[4] * 6 + c[5] + c[2] * (tw + 4) + c[1] + c[0];
    };

    std::size_t pos = 0;
    int time_width = 4;
    auto counts = counts_at(0);
    if (data[4] >= '2') {
        pos = 44 + static_cast<std::size_t>(block_size(counts, 4));
        if (data.size() < pos + 44 || data.compare(pos, 4, "TZif") != 0)
            fail(ErrorKind::Config, "corrupt TZif file: " + path.string());
        counts = counts_at(pos);
        time_width = 8;
    }
    pos += 44;
    const auto timecnt = static_cast<std::size_t>(counts[3]);
    const auto typecnt = static_cast<std::size_t>(counts[4]);
    if (typecnt == 0 || data.size() < pos + static_cast<std::size_t>(block_size(counts, time_width)))
        fail(ErrorKind::Config, "corrupt TZif file: " + path.string());

    Timezone tz;
    tz.name_ = std::string(trimmed);
    std::vector<int> type_offsets(typecnt);
    const std::size_t types_pos = pos + timecnt * time_width + timecnt;
    for (std::size_t k = 0; k < typecnt; ++k)
        type_offsets[k] = static_cast<int>(read_be(data, types_pos + 6 * k, 4));
    tz.initial_offset_ = type_offsets[0];
    tz.transitions_.reserve(timecnt);
    tz.offsets_after_.reserve(timecnt);
    for (std::size_t k = 0; k < timecnt; ++k) {
        tz.transitions_.push_back(read_be(data, pos + k * time_width, time_width));
        const auto idx = static_cast<std::uint8_t>(data[pos + timecnt * time_width + k]);
        tz.offsets_after_.push_back(idx < typecnt ? type_offsets[idx] : tz.initial_offset_);
    }
    return tz;
}

int Timezone::offset_at(UnixSeconds t) const noexcept {
    auto it = std::upper_bound(transitions_.begin(), transitions_.end(), t);
    if (it == transitions_.begin()) return initial_offset_;
    return offsets_after_[static_cast<std::size_t>(it - transitions_.begin() - 1)];
}

LocalTime Timezone::to_local(UnixSeconds t) const noexcept {
    LocalTime lt;
    lt.utc_offset_seconds = offset_at(t);
    const std::int64_t local = t + lt.utc_offset_seconds;
    const std::int64_t days = floor_div(local, 86400);
    const std::int64_t secs = local - days * 86400;
    lt.date = civil_from_days(days);
    lt.hour = static_cast<int>(secs / 3600);
    lt.minute = static_cast<int>(secs % 3600 / 60);
    lt.second = static_cast<int>(secs % 60);
    // 1970-01-01 was a Thursday (3 with Monday = 0).
    lt.weekday = static_cast<int>(((days % 7) + 7 + 3) % 7);
    return lt;
}

} // namespace inboxaudit
