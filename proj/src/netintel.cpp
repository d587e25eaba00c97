#include "inboxaudit/netintel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "inboxaudit/embedded.hpp"
#include "inboxaudit/error.hpp"
#include "inboxaudit/text.hpp"

namespace inboxaudit::netintel {

namespace {

using u128 = unsigned __int128;

u128 to_u128(const IpAddress& ip) {
    u128 v = 0;
    const unsigned n = ip.bit_width() / 8;
    for (unsigned i = 0; i < n; ++i) v = (v << 8) | ip.bytes()[i];
    return v;
}

IpAddress from_u128(u128 v, IpFamily family) {
    std::array<std::uint8_t, 16> bytes{};
    const unsigned n = family == IpFamily::V4 ? 4 : 16;
    for (unsigned i = 0; i < n; ++i) bytes[n - 1 - i] = static_cast<std::uint8_t>(v >> (8 * i));
    return IpAddress::from_bytes(family, bytes);
}

std::optional<std::uint32_t> parse_asn(std::string_view s) {
    s = text::trim(s);
    if (s.size() > 2 && (s[0] == 'A' || s[0] == 'a') && (s[1] == 'S' || s[1] == 's')) s.remove_prefix(2);
    std::uint32_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

std::vector<std::string> provider_lines(std::string_view contents) {
    std::vector<std::string> out;
    for (auto& line : text::split(contents, '\n'))
        if (!line.empty() && line[0] != '#') out.push_back(text::to_lower(line));
    return out;
}

} // namespace

std::string AsnRecord::label() const {
    return "AS" + std::to_string(asn) + " " + organization;
}

void AsnTable::insert(const IpPrefix& prefix, std::uint32_t asn, std::string organization) {
    auto& family = prefix.network.family() == IpFamily::V4 ? v4_ : v6_;
    const auto network = prefix.network.masked(prefix.length);
    auto [it, inserted] = family.by_length[prefix.length].emplace(network, records_.size());
    if (!inserted) return; // first row for an identical prefix wins
    records_.push_back({asn, std::move(organization), IpPrefix{network, prefix.length}});
}

AsnLookup AsnTable::lookup(const std::optional<IpAddress>& ip) const {
    AsnLookup out;
    if (!ip) return out;
    if (ip->is_reserved()) {
        out.internal_hop = true;
        return out;
    }
    const auto& family = ip->family() == IpFamily::V4 ? v4_ : v6_;
    for (const auto& [len, nets] : family.by_length) {
        if (auto it = nets.find(ip->masked(len)); it != nets.end()) {
            out.record = records_[it->second];
            return out;
        }
    }
    return out;
}

std::vector<IpPrefix> range_to_cidrs(const IpAddress& first, const IpAddress& last) {
    if (first.family() != last.family()) fail(ErrorKind::Format, "range endpoints differ in address family");
    const unsigned width = first.bit_width();
    u128 lo = to_u128(first);
    const u128 hi = to_u128(last);
    if (lo > hi) fail(ErrorKind::Format, "range start " + first.to_string() + " is after its end");
    std::vector<IpPrefix> out;
    while (true) {
        // Largest aligned block starting at lo that stays within hi.
        unsigned size_bits = 0;
        while (size_bits < width) {
            const unsigned next = size_bits + 1;
            if (next < 128 && (lo & ((u128{1} << next) - 1)) != 0) break;
            const u128 span = next >= 128 ? ~u128{0} : (u128{1} << next) - 1;
            if (next < 128 && lo + span > hi) break;
            if (next >= 128 && !(lo == 0 && hi == ~u128{0})) break;
            size_bits = next;
        }
        out.push_back({from_u128(lo, first.family()), width - size_bits});
        const u128 block_last = size_bits >= 128 ? ~u128{0} : lo + ((u128{1} << size_bits) - 1);
        if (block_last >= hi) break;
        lo = block_last + 1;
    }
    return out;
}

AsnTable parse_ip2asn(std::string_view contents) {
    AsnTable table;
    const auto parsed = text::parse_delimited(contents, false);
    bool first = true;
    for (const auto& row : parsed.rows) {
        const bool header_candidate = first;
        first = false;
        auto bad = [&](const std::string& why) {
            fail(ErrorKind::Parse, "ip2asn row " + std::to_string(row.line) + ": " + why);
        };
        const auto& f = row.fields;
        if (f.empty()) continue;
        const bool cidr_form = f[0].find('/') != std::string::npos;
        if (header_candidate && !IpPrefix::parse(f[0])) continue; // header row

        if (cidr_form) {
            if (f.size() < 3) bad("expected cidr, asn, organization");
            const auto prefix = IpPrefix::parse(f[0]);
            if (!prefix) bad("bad CIDR '" + f[0] + "'");
            const auto asn = parse_asn(f[1]);
            if (!asn) bad("bad ASN '" + f[1] + "'");
            if (*asn == 0) continue;
            table.insert(*prefix, *asn, f[2]);
        } else {
            if (f.size() < 4) bad("expected range_start, range_end, asn, [country,] organization");
            const auto lo = IpAddress::parse(f[0]);
            const auto hi = IpAddress::parse(f[1]);
            if (!lo || !hi) bad("bad address range");
            const auto asn = parse_asn(f[2]);
            if (!asn) bad("bad ASN '" + f[2] + "'");
            if (*asn == 0) continue;
            const std::string& org = f.size() >= 5 ? f[4] : f[3];
            try {
                for (const auto& p : range_to_cidrs(*lo, *hi)) table.insert(p, *asn, org);
            } catch (const AuditError& e) {
                bad(e.what());
            }
        }
    }
    return table;
}

AsnTable load_ip2asn(const std::filesystem::path& path) {
    return parse_ip2asn(text::read_file(path));
}

bool flag_marketing_asn(const AsnRecord& record, const std::vector<std::string>& provider_list) {
    if (record.organization.empty()) return false;
    return std::any_of(provider_list.begin(), provider_list.end(), [&](const std::string& p) {
        return !p.empty() && text::icontains(record.organization, p);
    });
}

const std::vector<std::string>& default_marketing_providers() {
    static const std::vector<std::string> list = provider_lines(embedded::marketing_providers_txt);
    return list;
}

AbuseMap parse_abuse_reports(std::string_view contents) {
    AbuseMap map;
    const auto parsed = text::parse_delimited(contents, false);
    bool first = true;
    for (const auto& row : parsed.rows) {
        const bool header_candidate = first;
        first = false;
        const auto& f = row.fields;
        const auto ip = f.empty() ? std::nullopt : IpAddress::parse(f[0]);
        if (!ip && header_candidate) continue;
        if (!ip || f.size() < 2)
            fail(ErrorKind::Parse, "abuse report row " + std::to_string(row.line) + ": expected ip, total_reports");
        std::int64_t count = 0;
        const auto& c = f[1];
        auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), count);
        if (ec != std::errc{} || ptr != c.data() + c.size() || count < 0)
            fail(ErrorKind::Parse, "abuse report row " + std::to_string(row.line) + ": bad report count '" + c + "'");
        map[*ip] += count;
    }
    return map;
}

AbuseMap load_abuse_reports(const std::filesystem::path& path) {
    return parse_abuse_reports(text::read_file(path));
}

ProfileSet build_sender_profiles(const corpus::CorpusStore& store, const AsnTable& table, const AbuseMap& abuse,
                                 const std::vector<std::string>& provider_list) {
    ProfileSet out;
    std::map<std::pair<std::string, std::string>, double> flows;
    const auto& records = store.records();

    for (const auto& [service, indexes] : store.by_service()) {
        if (service == kUnmatched) {
            out.unmatched_emails = indexes.size();
            continue;
        }
        SenderProfile profile;
        profile.service_name = service;
        profile.emails_total = static_cast<std::int64_t>(indexes.size());
        std::map<std::uint32_t, AsnRecord> asns;
        std::map<std::string, std::size_t> domains;
        std::map<IpAddress, std::string> ip_label;

        for (auto i : indexes) {
            const auto& rec = records[i];
            if (!rec.from_root_domain.empty()) ++domains[rec.from_root_domain];
            if (!rec.sender_ip || rec.sender_ip->is_reserved()) continue;
            const auto hit = table.lookup(rec.sender_ip);
            const std::string label = hit.record ? hit.record->label() : std::string(kUnresolvedAsn);
            if (hit.record) asns.emplace(hit.record->asn, *hit.record);
            profile.ips.insert(*rec.sender_ip);
            ip_label[*rec.sender_ip] = label;
            flows[{service, label}] += 1.0;
            ++out.asn_volume[label];
        }

        std::size_t best = 0;
        for (const auto& [domain, count] : domains) {
            if (count > best) {
                best = count;
                profile.primary_root_domain = domain;
            }
        }
        for (const auto& [asn, rec] : asns) {
            profile.asns.push_back(rec);
            if (flag_marketing_asn(rec, provider_list)) profile.uses_marketing_provider = true;
        }
        for (const auto& [ip, label] : ip_label) {
            const auto it = abuse.find(ip);
            const std::int64_t reports = it == abuse.end() ? 0 : it->second;
            profile.spam_reports_total += reports;
            if (reports > 0) out.treemap[label][profile.primary_root_domain] += reports;
        }
        out.profiles.push_back(std::move(profile));
    }
    for (const auto& [key, weight] : flows) out.sankey.push_back({key.first, key.second, weight});
    return out;
}

HoppingCorrelation ip_hopping_correlation(const std::vector<SenderProfile>& profiles) {
    std::vector<double> ips, reports;
    for (const auto& p : profiles) {
        if (p.ips.empty()) continue;
        ips.push_back(static_cast<double>(p.ips.size()));
        reports.push_back(static_cast<double>(p.spam_reports_total));
    }
    if (ips.size() < 3)
        fail(ErrorKind::InsufficientData, "IP-hopping correlation needs at least 3 companies with sender IPs");
    HoppingCorrelation out;
    out.companies = ips.size();
    out.pearson = stats::pearson(ips, reports);
    out.spearman = stats::spearman(ips, reports);
    return out;
}

stats::ParetoTable asn_concentration(const ProfileSet& profiles) {
    std::vector<std::pair<std::string, double>> values;
    for (const auto& [label, count] : profiles.asn_volume)
        if (label != kUnresolvedAsn) values.emplace_back(label, static_cast<double>(count));
    return stats::pareto(std::move(values));
}

double top_fraction_share(const stats::ParetoTable& table, double fraction) {
    if (fraction <= 0.0 || fraction > 1.0) fail(ErrorKind::Range, "fraction must lie in (0, 1]");
    const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(table.entries().size()) - 1e-12));
    return table.top_k_share(k);
}

} // namespace inboxaudit::netintel
