#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "inboxaudit/corpus.hpp"
#include "inboxaudit/ip.hpp"
#include "inboxaudit/stats.hpp"

namespace inboxaudit::netintel {

struct AsnRecord {
    std::uint32_t asn = 0;
    std::string organization;
    IpPrefix prefix;

    std::string label() const; // "AS11377 SENDGRID"
    bool operator==(const AsnRecord&) const = default;
};

struct AsnLookup {
    std::optional<AsnRecord> record;
    bool internal_hop = false; // address in private/reserved space
};

/// Most-specific-prefix table. Ranges that are not CIDR-aligned are split
/// into covering CIDR blocks at load time.
class AsnTable {
public:
    void insert(const IpPrefix& prefix, std::uint32_t asn, std::string organization);
    AsnLookup lookup(const std::optional<IpAddress>& ip) const;
    std::size_t size() const noexcept { return records_.size(); }

private:
    struct Family {
        // prefix length → masked network → record index
        std::map<unsigned, std::unordered_map<IpAddress, std::size_t, IpAddressHash>, std::greater<>> by_length;
    };
    Family v4_, v6_;
    std::vector<AsnRecord> records_;
};

/// Delimited rows of either "cidr, asn, organization" or
/// "range_start, range_end, asn, [country,] organization". A header row is
/// optional. ASN 0 rows ("not routed") are skipped.
AsnTable parse_ip2asn(std::string_view contents);
AsnTable load_ip2asn(const std::filesystem::path& path);

std::vector<IpPrefix> range_to_cidrs(const IpAddress& first, const IpAddress& last);

/// Case-insensitive substring match against provider names.
bool flag_marketing_asn(const AsnRecord& record, const std::vector<std::string>& provider_list);

const std::vector<std::string>& default_marketing_providers();

using AbuseMap = std::unordered_map<IpAddress, std::int64_t, IpAddressHash>;

/// "ip, total_reports" rows; duplicate IPs are summed.
AbuseMap parse_abuse_reports(std::string_view contents);
AbuseMap load_abuse_reports(const std::filesystem::path& path);

struct SenderProfile {
    std::string service_name;
    std::set<IpAddress> ips;
    std::vector<AsnRecord> asns; // unique by ASN number, ascending
    bool uses_marketing_provider = false;
    std::int64_t spam_reports_total = 0;
    std::int64_t emails_total = 0;
    std::string primary_root_domain;
};

struct FlowEdge {
    std::string source;
    std::string target;
    double weight = 0.0;
};

/// ASN label → root domain → spam reports.
using Treemap = std::map<std::string, std::map<std::string, std::int64_t>>;

struct ProfileSet {
    std::vector<SenderProfile> profiles; // sorted by service name
    std::vector<FlowEdge> sankey;        // service → ASN, weight = emails
    Treemap treemap;
    std::map<std::string, std::int64_t> asn_volume; // ASN label → emails
    std::size_t unmatched_emails = 0;
};

inline constexpr std::string_view kUnresolvedAsn = "UNRESOLVED";

ProfileSet build_sender_profiles(const corpus::CorpusStore& store, const AsnTable& table, const AbuseMap& abuse,
                                 const std::vector<std::string>& provider_list);

struct HoppingCorrelation {
    stats::Correlation pearson;
    stats::Correlation spearman;
    std::size_t companies = 0;
};

/// |ips| against spam_reports_total over profiles with at least one IP.
HoppingCorrelation ip_hopping_correlation(const std::vector<SenderProfile>& profiles);

/// Descending ASN volumes with cumulative shares.
stats::ParetoTable asn_concentration(const ProfileSet& profiles);

/// Share of volume produced by the top ceil(fraction · #ASNs) ASNs.
double top_fraction_share(const stats::ParetoTable& table, double fraction);

} // namespace inboxaudit::netintel
