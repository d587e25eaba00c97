#include "inboxaudit/ip.hpp"

#include <arpa/inet.h>

#include <charconv>
#include <cstring>

#include "inboxaudit/text.hpp"

namespace inboxaudit {

std::optional<IpAddress> IpAddress::parse(std::string_view text) {
    text = text::trim(text);
    if (text.size() >= 2 && text.front() == '[' && text.back() == ']') text = text.substr(1, text.size() - 2);
    if (text::starts_with_ci(text, "ipv6:")) text.remove_prefix(5);
    if (text.empty() || text.size() > 45) return std::nullopt;
    const std::string buf(text);
    IpAddress ip;
    if (buf.find(':') != std::string::npos) {
        // Zone identifiers (fe80::1%eth0) are not meaningful here.
        const auto pct = buf.find('%');
        const std::string addr = pct == std::string::npos ? buf : buf.substr(0, pct);
        if (inet_pton(AF_INET6, addr.c_str(), ip.bytes_.data()) != 1) return std::nullopt;
        ip.family_ = IpFamily::V6;
        return ip;
    }
    if (inet_pton(AF_INET, buf.c_str(), ip.bytes_.data()) != 1) return std::nullopt;
    ip.family_ = IpFamily::V4;
    return ip;
}

IpAddress IpAddress::v4(std::uint32_t host_order) {
    IpAddress ip;
    ip.family_ = IpFamily::V4;
    ip.bytes_[0] = static_cast<std::uint8_t>(host_order >> 24);
    ip.bytes_[1] = static_cast<std::uint8_t>(host_order >> 16);
    ip.bytes_[2] = static_cast<std::uint8_t>(host_order >> 8);
    ip.bytes_[3] = static_cast<std::uint8_t>(host_order);
    return ip;
}

IpAddress IpAddress::from_bytes(IpFamily family, const std::array<std::uint8_t, 16>& bytes) {
    IpAddress ip;
    ip.family_ = family;
    ip.bytes_ = bytes;
    if (family == IpFamily::V4)
        for (int i = 4; i < 16; ++i) ip.bytes_[i] = 0;
    return ip;
}

IpAddress IpAddress::masked(unsigned prefix_len) const noexcept {
    IpAddress out = *this;
    const unsigned width = bit_width();
    if (prefix_len >= width) return out;
    const unsigned full = prefix_len / 8;
    const unsigned rem = prefix_len % 8;
    const unsigned nbytes = width / 8;
    if (full < nbytes) {
        out.bytes_[full] &= static_cast<std::uint8_t>(rem == 0 ? 0 : (0xFF << (8 - rem)));
        for (unsigned i = full + 1; i < nbytes; ++i) out.bytes_[i] = 0;
    }
    return out;
}

bool IpAddress::is_reserved() const noexcept {
    const auto& b = bytes_;
    if (family_ == IpFamily::V4) {
        if (b[0] == 0 || b[0] == 10 || b[0] == 127) return true;
        if (b[0] == 100 && (b[1] & 0xC0) == 64) return true;     // 100.64/10
        if (b[0] == 169 && b[1] == 254) return true;              // link-local
        if (b[0] == 172 && (b[1] & 0xF0) == 16) return true;      // 172.16/12
        if (b[0] == 192 && b[1] == 168) return true;
        if (b[0] == 192 && b[1] == 0 && (b[2] == 0 || b[2] == 2)) return true;
        if (b[0] == 198 && (b[1] & 0xFE) == 18) return true;      // 198.18/15
        if (b[0] == 198 && b[1] == 51 && b[2] == 100) return true;
        if (b[0] == 203 && b[1] == 0 && b[2] == 113) return true;
        return b[0] >= 224;                                       // multicast + class E
    }
    bool all_zero_but_last = true;
    for (int i = 0; i < 15; ++i)
        if (b[i] != 0) all_zero_but_last = false;
    if (all_zero_but_last && (b[15] == 0 || b[15] == 1)) return true;  // :: and ::1
    if ((b[0] & 0xFE) == 0xFC) return true;                            // fc00::/7
    if (b[0] == 0xFE && (b[1] & 0xC0) == 0x80) return true;            // fe80::/10
    if (b[0] == 0xFF) return true;                                     // multicast
    if (b[0] == 0x20 && b[1] == 0x01 && b[2] == 0x0D && b[3] == 0xB8) return true;  // 2001:db8::/32
    // IPv4-mapped: judge by the embedded address.
    bool mapped = b[10] == 0xFF && b[11] == 0xFF;
    for (int i = 0; i < 10 && mapped; ++i) mapped = b[i] == 0;
    if (mapped) {
        return v4(static_cast<std::uint32_t>(b[12]) << 24 | static_cast<std::uint32_t>(b[13]) << 16 |
                  static_cast<std::uint32_t>(b[14]) << 8 | b[15])
            .is_reserved();
    }
    return false;
}

std::string IpAddress::to_string() const {
    char buf[INET6_ADDRSTRLEN] = {};
    inet_ntop(family_ == IpFamily::V4 ? AF_INET : AF_INET6, bytes_.data(), buf, sizeof buf);
    return buf;
}

std::optional<IpPrefix> IpPrefix::parse(std::string_view text) {
    text = text::trim(text);
    const auto slash = text.find('/');
    auto addr = IpAddress::parse(text.substr(0, slash));
    if (!addr) return std::nullopt;
    unsigned len = addr->bit_width();
    if (slash != std::string_view::npos) {
        const auto digits = text.substr(slash + 1);
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), len);
        if (ec != std::errc{} || ptr != digits.data() + digits.size()) return std::nullopt;
        if (len > addr->bit_width()) return std::nullopt;
    }
    return IpPrefix{addr->masked(len), len};
}

bool IpPrefix::contains(const IpAddress& ip) const noexcept {
    return ip.family() == network.family() && ip.masked(length) == network;
}

std::string IpPrefix::to_string() const {
    return network.to_string() + "/" + std::to_string(length);
}

std::size_t IpAddressHash::operator()(const IpAddress& ip) const noexcept {
    // FNV-1a over family + bytes.
    std::size_t h = 1469598103934665603ull;
    auto mix = [&](std::uint8_t v) {
        h ^= v;
        h *= 1099511628211ull;
    };
    mix(static_cast<std::uint8_t>(ip.family()));
    for (auto v : ip.bytes()) mix(v);
    return h;
}

} // namespace inboxaudit
