#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace inboxaudit {

enum class IpFamily : std::uint8_t { V4, V6 };

/// IPv4 or IPv6 address, stored in network byte order. IPv4 occupies the
/// first four bytes.
class IpAddress {
public:
    IpAddress() = default;

    static std::optional<IpAddress> parse(std::string_view text);
    static IpAddress v4(std::uint32_t host_order);
    static IpAddress from_bytes(IpFamily family, const std::array<std::uint8_t, 16>& bytes);

    IpFamily family() const noexcept { return family_; }
    unsigned bit_width() const noexcept { return family_ == IpFamily::V4 ? 32u : 128u; }
    const std::array<std::uint8_t, 16>& bytes() const noexcept { return bytes_; }

    /// Copy with every bit past `prefix_len` cleared.
    IpAddress masked(unsigned prefix_len) const noexcept;

    /// Private, loopback, link-local, CGNAT, multicast and other
    /// non-routable space.
    bool is_reserved() const noexcept;

    std::string to_string() const;

    auto operator<=>(const IpAddress&) const = default;
    bool operator==(const IpAddress&) const = default;

private:
    IpFamily family_ = IpFamily::V4;
    std::array<std::uint8_t, 16> bytes_{};
};

struct IpPrefix {
    IpAddress network;
    unsigned length = 0;

    /// Parses "a.b.c.d/n" or "x::/n"; host bits must be zero or are masked.
    static std::optional<IpPrefix> parse(std::string_view text);
    bool contains(const IpAddress& ip) const noexcept;
    std::string to_string() const;

    auto operator<=>(const IpPrefix&) const = default;
};

struct IpAddressHash {
    std::size_t operator()(const IpAddress& ip) const noexcept;
};

} // namespace inboxaudit
