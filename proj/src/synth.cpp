#include "inboxaudit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <set>

#include "inboxaudit/corpus.hpp"
#include "inboxaudit/error.hpp"
#include "inboxaudit/ip.hpp"
#include "inboxaudit/text.hpp"

namespace inboxaudit::synth {

double Rng::normal() {
    // Box-Muller; std::normal_distribution differs between libraries.
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

constexpr const char* kAuditDomain = "audit.example";
constexpr const char* kTrustedMx = "mx.audit.example";

struct Network {
    std::string cidr;
    std::uint32_t asn = 0;
    std::string org;
};

const Network kSendgrid{"167.89.0.0/17", 11377, "SENDGRID"};
const Network kSalesforce{"13.110.0.0/16", 14340, "SALESFORCE-MC"};
const Network kMailgun{"69.72.32.0/20", 35017, "MAILGUN-TECH"};
const Network kSparkpost{"192.174.80.0/20", 19994, "SPARKPOST"};
const Network kAmazon{"52.0.0.0/11", 16509, "AMAZON-02"};
const Network kGoogle{"35.184.0.0/13", 15169, "GOOGLE-CLOUD"};
const char* kUnroutedPrefix = "45.";

enum class Mix { Promo, Crm, Alert, Balanced };

struct Service {
    std::string name;
    std::string domain;
    std::string sector;
    bool mobile = false;
    SenderKind sender = SenderKind::Own;
    const Network* provider = nullptr; // marketing or cloud network
    Mix mix = Mix::Balanced;
    std::size_t volume = 0;
    int peak_hour = 12;
    bool ipv6_own = false;
    // filled in by the world builder
    int index = 0;
    std::string local_part;
    Network own;
    std::vector<std::string> ips;
};

std::vector<Service> corpus_services() {
    std::vector<Service> v;
    auto add = [&v](std::string name, std::string domain, std::string sector, bool mobile, SenderKind sender,
                     const Network* provider, Mix mix, std::size_t volume, int peak_hour, bool ipv6_own = false) {
        Service s;
        s.name = std::move(name);
        s.domain = std::move(domain);
        s.sector = std::move(sector);
        s.mobile = mobile;
        s.sender = sender;
        s.provider = provider;
        s.mix = mix;
        s.volume = volume;
        s.peak_hour = peak_hour;
        s.ipv6_own = ipv6_own;
        v.push_back(std::move(s));
    };
    add("Shopmart", "shopmart.com", "E-tailer", false, SenderKind::Marketing, &kSendgrid, Mix::Promo, 220, 0);
    add("Gadgetly", "gadgetly.com", "E-tailer", false, SenderKind::Marketing, &kSalesforce, Mix::Promo, 160, 1);
    add("Stylehub", "stylehub.co.uk", "Omnichannel", false, SenderKind::Marketing, &kSendgrid, Mix::Promo, 90, 23);
    add("Homecraft", "homecraft.com", "Omnichannel", false, SenderKind::Cloud, &kAmazon, Mix::Promo, 70, 9);
    add("Bankwise", "bankwise.com", "Financials", false, SenderKind::Own, nullptr, Mix::Alert, 20, 14);
    add("Streamly", "streamly.com", "Digital Services", false, SenderKind::Marketing, &kSendgrid, Mix::Crm, 45, 18);
    add("Newsbyte", "newsbyte.com", "Digital Services", false, SenderKind::Marketing, &kSalesforce, Mix::Crm, 30, 7);
    add("Travelnest", "travelnest.com", "Online Marketplace", false, SenderKind::Cloud, &kAmazon, Mix::Balanced, 25, 10);
    add("Learnly", "learnly.io", "Digital Services", false, SenderKind::Own, nullptr, Mix::Crm, 12, 16, true);
    add("Petpal", "petpal.com", "E-tailer", false, SenderKind::Marketing, &kMailgun, Mix::Promo, 15, 20);
    add("Chatterbox", "chatterbox.com", "Communication Platforms", true, SenderKind::Own, nullptr, Mix::Alert, 10, 12);
    add("Ridego", "ridego.com", "Online Marketplace", true, SenderKind::Cloud, &kGoogle, Mix::Crm, 8, 8);
    add("Mealmate", "mealmate.com", "Online Marketplace", true, SenderKind::Marketing, &kSparkpost, Mix::Promo, 6, 11);
    add("Fitpulse", "fitpulse.com", "Digital Services", true, SenderKind::Own, nullptr, Mix::Crm, 5, 6);
    add("Gamezone", "gamezone.com", "Online Entertainment", true, SenderKind::Unresolved, nullptr, Mix::Promo, 4, 21);
    add("Cloudnote", "cloudnote.com", "Digital Services", false, SenderKind::Own, nullptr, Mix::Alert, 3, 13);
    return v;
}

const std::vector<std::string> kNameSeeds = {"karen", "bo",  "lina", "omar", "zoe", "ravi", "mei", "tom", "ana", "ike",
                                             "jun",   "sara", "leo", "nia",  "eli", "ava",  "max", "ida", "kai", "uma"};

std::string random_ipv4_in(const std::string& cidr, Rng& rng) {
    const auto prefix = IpPrefix::parse(cidr);
    const auto& b = prefix->network.bytes();
    const std::uint32_t base = static_cast<std::uint32_t>(b[0]) << 24 | static_cast<std::uint32_t>(b[1]) << 16 |
                               static_cast<std::uint32_t>(b[2]) << 8 | b[3];
    const std::uint32_t host_bits = 32 - prefix->length;
    const std::uint64_t span = (std::uint64_t{1} << host_bits) - 2;
    return IpAddress::v4(base + 1 + static_cast<std::uint32_t>(rng.below(span))).to_string();
}

std::string random_ip(const Network& net, Rng& rng) {
    if (net.cidr.find(':') != std::string::npos) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%s%x:%x", net.cidr.substr(0, net.cidr.find("::") + 2).c_str(),
                      static_cast<unsigned>(1 + rng.below(0xfffe)), static_cast<unsigned>(1 + rng.below(0xfffe)));
        return buf;
    }
    return random_ipv4_in(net.cidr, rng);
}

std::string unrouted_ip(Rng& rng) {
    return kUnroutedPrefix + std::to_string(1 + rng.below(250)) + "." + std::to_string(rng.below(256)) + "." +
           std::to_string(1 + rng.below(250));
}

// Every service gets its own network; only Own senders use it in the
// main corpus.
void build_world(std::vector<Service>& services, Rng& rng) {
    int online = 0, mobile = 100;
    std::set<std::string> used_locals;
    for (std::size_t i = 0; i < services.size(); ++i) {
        auto& s = services[i];
        s.index = s.mobile ? mobile++ : online++;
        std::string local;
        do {
            char digits[4];
            std::snprintf(digits, sizeof digits, "%03d", s.index);
            local = rng.pick(kNameSeeds) + digits;
        } while (!used_locals.insert(local).second);
        s.local_part = local;
        std::string upper;
        for (char c : s.name) upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        if (s.ipv6_own) s.own = {"2a0b:4340:" + std::to_string(10 + i) + "::/48", 60000u + static_cast<std::uint32_t>(i), upper + "-NET"};
        else s.own = {"64." + std::to_string(10 + i) + ".0.0/16", 60000u + static_cast<std::uint32_t>(i), upper + "-NET"};
    }
}

std::string registry_csv(const std::vector<Service>& services, Rng& rng) {
    std::string out = "local_part,index,service_name,service_kind,registration_date,sector\n";
    std::vector<std::string> lines;
    for (const auto& s : services)
        lines.push_back(s.local_part + "," + std::to_string(s.index) + "," + s.name + "," +
                        (s.mobile ? "mobile_app" : "online_service") + ",2023-03-0" + std::to_string(1 + rng.below(5)) +
                        "," + s.sector);
    // Registered services that never write.
    const char* silent[] = {"Quietco", "Idlebank", "Sleepytv"};
    for (int i = 0; i < 3; ++i)
        lines.push_back("silent0" + std::to_string(90 + i) + "," + std::to_string(90 + i) + "," + silent[i] +
                        ",online_service,2023-03-02,Digital Services");
    for (const auto& l : lines) out += l + "\n";
    return out;
}

std::string ip2asn_csv(const std::vector<Service>& services) {
    std::string out = "# synthetic routing snapshot\nrange_start,range_end,asn,country,organization\n";
    out += "0.0.0.0,0.255.255.255,0,None,Not routed\n";
    out += "35.184.0.0,35.191.255.255,15169,US,GOOGLE-CLOUD\n";
    // CIDR rows; the /8 overlaps the SendGrid /17.
    for (const auto* n : {&kSendgrid, &kSalesforce, &kMailgun, &kSparkpost, &kAmazon})
        out += n->cidr + "," + std::to_string(n->asn) + "," + n->org + "\n";
    out += "167.0.0.0/8,3356,LEVEL3\n";
    for (const auto& s : services) out += s.own.cidr + "," + std::to_string(s.own.asn) + "," + s.own.org + "\n";
    return out;
}

std::string org_map_csv(const std::vector<Service>& services) {
    std::string out = "service_name,accepted_domains,accepted_asn_org_substrings\n";
    out += "Wish,wish.com,contextlogic;wish\nAliExpress,aliexpress.com;alibaba.com,alibaba\n";
    out += "LinkedIn,linkedin.com,linkedin\nAdobe,adobe.com,adobe;omniture\n";
    for (const auto& s : services)
        if (s.name == "Bankwise" || s.name == "Stylehub")
            out += s.name + "," + s.domain + ";" + s.name.substr(0, 4) + "-mail.com," + s.own.org + "\n";
    return out;
}

std::string base64(std::string_view in) {
    static constexpr char kTable[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    std::size_t i = 0;
    while (i + 2 < in.size()) {
        const std::uint32_t v = static_cast<std::uint8_t>(in[i]) << 16 | static_cast<std::uint8_t>(in[i + 1]) << 8 |
                                static_cast<std::uint8_t>(in[i + 2]);
        out += {kTable[v >> 18], kTable[(v >> 12) & 63], kTable[(v >> 6) & 63], kTable[v & 63]};
        i += 3;
    }
    if (i + 1 == in.size()) {
        const std::uint32_t v = static_cast<std::uint8_t>(in[i]) << 16;
        out += {kTable[v >> 18], kTable[(v >> 12) & 63], '=', '='};
    } else if (i + 2 == in.size()) {
        const std::uint32_t v = static_cast<std::uint8_t>(in[i]) << 16 | static_cast<std::uint8_t>(in[i + 1]) << 8;
        out += {kTable[v >> 18], kTable[(v >> 12) & 63], kTable[(v >> 6) & 63], '='};
    }
    return out;
}

std::string wrap76(const std::string& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); i += 76) out += s.substr(i, 76) + "\n";
    return out;
}

std::string quoted_printable(std::string_view in) {
    std::string out;
    std::size_t col = 0;
    for (char c : in) {
        const auto u = static_cast<unsigned char>(c);
        std::string piece;
        if (c == '\n') {
            out += "\n";
            col = 0;
            continue;
        }
        if (c == '=' || u >= 0x80) {
            char buf[4];
            std::snprintf(buf, sizeof buf, "=%02X", u);
            piece = buf;
        } else {
            piece = std::string(1, c);
        }
        if (col + piece.size() > 73) {
            out += "=\n";
            col = 0;
        }
        out += piece;
        col += piece.size();
    }
    return out;
}

struct Content {
    std::string label;
    std::string subject;
    std::string body;
};

Content make_content(const std::string& label, const std::string& brand, Rng& rng) {
    const auto pct = std::to_string(10 + 5 * rng.below(12));
    const auto amt = std::to_string(5 * (1 + rng.below(20)));
    char code[8];
    std::snprintf(code, sizeof code, "%06u", static_cast<unsigned>(rng.below(1000000)));
    if (label == "promotional") {
        const std::vector<std::string> subjects = {
            pct + "% off everything this weekend", "Flash Sale: up to " + pct + "% off",
            "Last chance: free shipping ends tonight", "Deals of the week from " + brand,
            "Save $" + amt + " on your next order", "Clearance event: prices dropped"};
        return {label, rng.pick(subjects),
                "Shop now and save " + pct + "% on our best sellers.\nUse promo code SAVE" + pct +
                    " at checkout. Limited time offer, ends Sunday.\n\nShop now: https://" + brand + ".example/sale\n"};
    }
    if (label == "crm") {
        const std::vector<std::string> subjects = {"What's new at " + brand + " this month",
                                                   "Tips to get more out of " + brand, "Your weekly digest",
                                                   "Welcome to the " + brand + " community",
                                                   "Stories from our community", "Here's what's new in your community this week"};
        return {label, rng.pick(subjects),
                "Hi there,\n\nHere are a few stories and tips we think you will enjoy. Thanks for being part of the " +
                    brand + " community.\n\nThe " + brand + " team\n"};
    }
    const std::vector<std::string> subjects = {std::string("Your verification code is ") + code,
                                               "Security alert: new sign-in to your account", "Your order has shipped",
                                               "Your statement is ready", "Receipt for your payment"};
    return {label, rng.pick(subjects),
            std::string("This is an automated notification about your account.\nIf this was you, no action is "
                        "needed. Reference: ") +
                code + "\n"};
}

std::string pick_label(Mix mix, Rng& rng) {
    double p[3];
    switch (mix) {
    case Mix::Promo: p[0] = 0.8, p[1] = 0.15, p[2] = 0.05; break;
    case Mix::Crm: p[0] = 0.15, p[1] = 0.75, p[2] = 0.10; break;
    case Mix::Alert: p[0] = 0.05, p[1] = 0.25, p[2] = 0.70; break;
    default: p[0] = 0.4, p[1] = 0.4, p[2] = 0.2; break;
    }
    const double u = rng.uniform();
    if (u < p[0]) return "promotional";
    if (u < p[0] + p[1]) return "crm";
    return "alert";
}

struct Envelope {
    std::string from_display;
    std::string from_address;
    std::string recipient;
    bool delivered_to = true;
    std::string message_id;
    UnixSeconds sent = 0;
    int offset_minutes = 0;
    std::string ip;
    std::string helo;
    std::string spf = "pass";
    std::string dkim = "pass";
    std::string mailfrom_domain;
    bool filter_hop = false;
    bool forged_ar = false;
    bool crlf = false;
    int format = 0; // 0 multipart, 1 plain QP, 2 plain base64, 3 html only
    bool encode_subject = false;
};

std::string build_eml(const Envelope& e, const Content& c, Rng& rng) {
    const auto received_at = e.sent + 2 + static_cast<UnixSeconds>(rng.below(40));
    std::string h;
    if (e.filter_hop)
        h += "Received: from localhost (localhost [127.0.0.1])\n\tby filter.audit.example (amavis) with ESMTP id F" +
             std::to_string(rng.below(100000)) + ";\n\t" + format_rfc5322(received_at + 1) + "\n";
    const std::string ip_literal = e.ip.find(':') != std::string::npos ? "IPv6:" + e.ip : e.ip;
    h += "Received: from " + e.helo + " (" + e.helo + " [" + ip_literal + "])\n\tby " + kTrustedMx +
         " (Postfix) with ESMTPS id " + std::to_string(100000 + rng.below(900000)) + "\n\tfor <" + e.recipient + ">; " +
         format_rfc5322(received_at) + "\n";
    h += "Received: from app-" + std::to_string(rng.below(40)) + ".internal ([10." + std::to_string(rng.below(256)) +
         "." + std::to_string(rng.below(256)) + ".7])\n\tby " + e.helo + " with SMTP; " + format_rfc5322(e.sent) + "\n";
    h += std::string("Authentication-Results: ") + kTrustedMx + ";\n\tspf=" + e.spf + " (sender IP is " + e.ip +
         ") smtp.mailfrom=bounce." + e.mailfrom_domain + ";\n\tdkim=" + e.dkim + " header.d=" + e.mailfrom_domain + "\n";
    if (e.forged_ar) h += "Authentication-Results: relay.elsewhere.example; spf=pass; dkim=pass\n";
    h += "From: \"" + e.from_display + "\" <" + e.from_address + ">\n";
    h += "To: " + e.recipient + "\n";
    if (e.delivered_to) h += "Delivered-To: " + e.recipient + "\n";
    if (e.encode_subject) h += "Subject: =?UTF-8?B?" + base64(c.subject) + "?=\n";
    else h += "Subject: " + c.subject + "\n";
    h += "Date: " + format_rfc5322(e.sent, e.offset_minutes) + "\n";
    h += "Message-ID: <" + e.message_id + ">\n";
    h += "MIME-Version: 1.0\n";

    const std::string html = "<html><body><p>" + c.body + "</p><p>&copy; " + e.from_display + "</p></body></html>";
    std::string body;
    switch (e.format) {
    case 0: {
        const std::string boundary = "b_" + std::to_string(rng.below(1u << 30));
        h += "Content-Type: multipart/alternative; boundary=\"" + boundary + "\"\n";
        body = "This is a multi-part message in MIME format.\n\n--" + boundary +
               "\nContent-Type: text/plain; charset=utf-8\nContent-Transfer-Encoding: quoted-printable\n\n" +
               quoted_printable(c.body) + "\n--" + boundary +
               "\nContent-Type: text/html; charset=utf-8\nContent-Transfer-Encoding: base64\n\n" + wrap76(base64(html)) +
               "--" + boundary + "--\n";
        break;
    }
    case 1:
        h += "Content-Type: text/plain; charset=utf-8\nContent-Transfer-Encoding: quoted-printable\n";
        body = quoted_printable(c.body);
        break;
    case 2:
        h += "Content-Type: text/plain; charset=utf-8\nContent-Transfer-Encoding: base64\n";
        body = wrap76(base64(c.body));
        break;
    default:
        h += "Content-Type: text/html; charset=utf-8\n";
        body = html + "\n";
        break;
    }
    std::string out = h + "\n" + body;
    if (e.crlf) {
        std::string crlf;
        crlf.reserve(out.size() + out.size() / 40);
        for (char ch : out) {
            if (ch == '\n') crlf += "\r\n";
            else crlf.push_back(ch);
        }
        return crlf;
    }
    return out;
}

UnixSeconds pick_time(UnixSeconds start, int days, int peak_hour, Rng& rng) {
    static constexpr double kWeekday[] = {0.9, 1.0, 1.0, 0.95, 0.85, 0.55, 0.5};
    const auto start_day = start / 86400;
    while (true) {
        const auto day = static_cast<std::int64_t>(rng.below(static_cast<std::size_t>(days)));
        const auto dow = static_cast<int>(((start_day + day) % 7 + 7 + 3) % 7);
        if (rng.uniform() > kWeekday[dow]) continue;
        const int hour = ((peak_hour + static_cast<int>(std::lround(rng.normal() * 1.5))) % 24 + 24) % 24;
        return start + day * 86400 + hour * 3600 + static_cast<UnixSeconds>(rng.below(3600));
    }
}

std::string message_id_for(std::size_t seq, const std::string& domain, Rng& rng) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%05zu.%08x", seq, static_cast<unsigned>(rng.below(0xffffffffu)));
    return std::string(buf) + "@mail." + domain;
}

std::string abuse_csv(const std::vector<Service>& services, const std::set<std::string>& extra_ips, Rng& rng) {
    std::string out = "ip,total_reports\n";
    std::set<std::string> seen;
    for (const auto& s : services) {
        for (const auto& ip : s.ips) {
            if (!seen.insert(ip).second) continue;
            if (rng.uniform() < 0.15) continue; // not listed
            const auto reports = s.sender == SenderKind::Own ? rng.below(2) : 1 + rng.below(8);
            out += ip + "," + std::to_string(reports) + "\n";
        }
    }
    for (const auto& ip : extra_ips)
        if (seen.insert(ip).second) out += ip + "," + std::to_string(2 + rng.below(10)) + "\n";
    return out;
}

std::string file_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "eml/%04zu.eml", i);
    return buf;
}

} // namespace

SynthCorpus generate_corpus(const CorpusOptions& options) {
    Rng rng(options.seed);
    auto services = corpus_services();
    build_world(services, rng);

    SynthCorpus corpus;
    corpus.trusted_mx = kTrustedMx;
    const UnixSeconds start = days_from_civil(options.start) * 86400;
    std::set<std::string> spoof_ips;

    struct Pending {
        UnixSeconds sent;
        std::string eml;
        Truth truth;
    };
    std::vector<Pending> pending;
    std::size_t seq = 0;
    for (auto& s : services) {
        const std::size_t n_ips = 1 + s.volume / 20 + rng.below(3);
        const Network& net = (s.sender == SenderKind::Marketing || s.sender == SenderKind::Cloud) ? *s.provider : s.own;
        for (std::size_t i = 0; i < n_ips; ++i)
            s.ips.push_back(s.sender == SenderKind::Unresolved ? unrouted_ip(rng) : random_ip(net, rng));

        for (std::size_t m = 0; m < s.volume; ++m) {
            Envelope e;
            Truth t;
            t.service = s.name;
            t.sender = s.sender;
            const bool spoof = s.volume >= 40 && rng.uniform() < 0.02;
            const auto content = make_content(pick_label(s.mix, rng), s.name, rng);
            t.content = content.label;
            e.recipient = s.local_part + "@" + kAuditDomain;
            e.delivered_to = rng.uniform() < 0.8;
            e.sent = pick_time(start, options.days, s.peak_hour, rng);
            e.offset_minutes = static_cast<int>(rng.below(3)) * -300;
            e.filter_hop = rng.uniform() < 0.2;
            e.forged_ar = rng.uniform() < 0.05;
            e.crlf = rng.uniform() < 0.5;
            e.format = static_cast<int>(rng.below(4));
            e.encode_subject = rng.uniform() < 0.15;
            if (spoof) {
                const std::string dom = "deals-" + std::to_string(rng.below(90)) + ".biz";
                e.from_display = s.name + " Rewards";
                e.from_address = "win@" + dom;
                e.mailfrom_domain = dom;
                e.ip = unrouted_ip(rng);
                spoof_ips.insert(e.ip);
                e.helo = "mail." + dom;
                e.spf = e.dkim = "fail";
                t.domain_matches = false;
                t.sender = SenderKind::Unresolved;
            } else {
                e.from_display = s.name;
                e.from_address = std::string(content.label == "alert" ? "no-reply" : "news") + "@mail." + s.domain;
                e.mailfrom_domain = s.domain;
                e.ip = s.ips[rng.below(s.ips.size())];
                e.helo = "o" + std::to_string(1 + rng.below(9)) + ".mail." + s.domain;
                // DKIM pass implies SPF pass in this corpus.
                const double u = rng.uniform();
                if (u < 0.9) e.spf = e.dkim = "pass";
                else if (u < 0.97) e.spf = "pass", e.dkim = "none";
                else e.spf = "none", e.dkim = "none";
            }
            t.spf = e.spf;
            t.dkim = e.dkim;
            e.message_id = message_id_for(seq++, s.domain, rng);
            t.message_id = e.message_id;
            pending.push_back({e.sent, build_eml(e, content, rng), t});
        }
    }

    // Unregistered recipients.
    for (std::size_t i = 0; i < options.unmatched; ++i) {
        Envelope e;
        Truth t;
        const auto content = make_content("promotional", "Unknownshop", rng);
        t.content = content.label;
        t.domain_matches = false;
        t.sender = SenderKind::Unresolved;
        e.recipient = "nobody" + std::to_string(140 + i) + "@" + kAuditDomain;
        e.sent = pick_time(start, options.days, 3, rng);
        e.from_display = "Unknownshop";
        e.from_address = "hello@unknownshop.net";
        e.mailfrom_domain = "unknownshop.net";
        e.ip = unrouted_ip(rng);
        e.helo = "mx.unknownshop.net";
        e.spf = e.dkim = "pass";
        e.message_id = message_id_for(seq++, "unknownshop.net", rng);
        t.message_id = e.message_id;
        t.spf = e.spf;
        t.dkim = e.dkim;
        pending.push_back({e.sent, build_eml(e, content, rng), t});
    }

    std::stable_sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) { return a.sent < b.sent; });
    for (auto& p : pending) {
        corpus.messages.push_back({file_name(corpus.messages.size() + 1), std::move(p.eml)});
        corpus.truth.push_back(std::move(p.truth));
    }
    for (std::size_t i = 0; i < options.duplicates && !corpus.messages.empty(); ++i) {
        const auto src = rng.below(corpus.messages.size());
        corpus.messages.push_back({file_name(corpus.messages.size() + 1), corpus.messages[src].contents});
        corpus.truth.push_back(corpus.truth[src]);
    }
    for (std::size_t i = 0; i < options.unparseable; ++i) {
        std::string noise(200 + rng.below(300), '\0');
        for (std::size_t j = 1; j < noise.size(); ++j) noise[j] = static_cast<char>(rng.below(256));
        corpus.messages.push_back({file_name(corpus.messages.size() + 1), std::move(noise)});
        corpus.truth.push_back({});
    }

    corpus.registry_csv = registry_csv(services, rng);
    corpus.ip2asn_csv = ip2asn_csv(services);
    corpus.org_map_csv = org_map_csv(services);
    corpus.abuse_csv = abuse_csv(services, spoof_ips, rng);
    return corpus;
}

SynthCorpus generate_taxonomy_grid(std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    auto services = corpus_services();
    services.resize(8);
    build_world(services, rng);
    for (auto& s : services) s.ips.clear();

    SynthCorpus corpus;
    corpus.trusted_mx = kTrustedMx;
    const UnixSeconds start = days_from_civil({2023, 3, 6}) * 86400;
    const std::vector<std::string> verdicts = {"pass", "fail", "none"};
    const std::vector<SenderKind> senders = {SenderKind::Marketing, SenderKind::Own, SenderKind::Cloud,
                                             SenderKind::Unresolved};
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t cell = i % 72;
        auto& s = services[(i / 72 + i) % services.size()];
        Truth t;
        t.service = s.name;
        t.spf = verdicts[cell % 3];
        t.dkim = verdicts[(cell / 3) % 3];
        t.domain_matches = (cell / 9) % 2 == 0;
        t.sender = senders[(cell / 18) % 4];
        const auto content = make_content(pick_label(Mix::Balanced, rng), s.name, rng);
        t.content = content.label;

        Envelope e;
        e.recipient = s.local_part + "@" + kAuditDomain;
        e.sent = pick_time(start, 120, s.peak_hour, rng);
        e.spf = t.spf;
        e.dkim = t.dkim;
        const std::string domain = t.domain_matches ? s.domain : "unrelated-domain.biz";
        e.from_display = s.name;
        e.from_address = "news@mail." + domain;
        e.mailfrom_domain = domain;
        e.helo = "out." + domain;
        switch (t.sender) {
        case SenderKind::Marketing: e.ip = random_ip(kSendgrid, rng); break;
        case SenderKind::Own: e.ip = random_ip(s.own, rng); break;
        case SenderKind::Cloud: e.ip = random_ip(kAmazon, rng); break;
        case SenderKind::Unresolved: e.ip = unrouted_ip(rng); break;
        }
        s.ips.push_back(e.ip);
        e.format = static_cast<int>(rng.below(4));
        e.message_id = message_id_for(i, domain, rng);
        t.message_id = e.message_id;
        corpus.messages.push_back({file_name(i + 1), build_eml(e, content, rng)});
        corpus.truth.push_back(std::move(t));
    }
    corpus.registry_csv = registry_csv(services, rng);
    corpus.ip2asn_csv = ip2asn_csv(services);
    corpus.org_map_csv = org_map_csv(services);
    corpus.abuse_csv = abuse_csv(services, {}, rng);
    return corpus;
}

void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir, std::uint64_t seed) {
    namespace fs = std::filesystem;
    const auto root = fs::absolute(dir);
    fs::create_directories(root / "eml");
    for (const auto& m : corpus.messages) text::write_file(root / m.name, m.contents);
    text::write_file(root / "registry.csv", corpus.registry_csv);
    text::write_file(root / "ip2asn.csv", corpus.ip2asn_csv);
    text::write_file(root / "abuse.csv", corpus.abuse_csv);
    text::write_file(root / "org_map.csv", corpus.org_map_csv);
    std::string conf = "# synthetic corpus configuration\n";
    conf += "corpus_dir = " + (root / "eml").string() + "\n";
    conf += "registry_path = " + (root / "registry.csv").string() + "\n";
    conf += "ip2asn_path = " + (root / "ip2asn.csv").string() + "\n";
    conf += "abuse_path = " + (root / "abuse.csv").string() + "\n";
    conf += "org_map_path = " + (root / "org_map.csv").string() + "\n";
    conf += "trusted_mx = " + corpus.trusted_mx + "\n";
    conf += "audit_timezone = UTC\n";
    conf += "classifier_mode = rules\n";
    conf += "seed = " + std::to_string(seed) + "\n";
    conf += "output_dir = " + (root / "out").string() + "\n";
    text::write_file(root / "audit.conf", conf);
}

std::vector<double> periodic_series(std::size_t days, double period, double amplitude, double noise_sd,
                                    std::uint64_t seed, double base) {
    Rng rng(seed);
    std::vector<double> v(days);
    for (std::size_t t = 0; t < days; ++t)
        v[t] = base + amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period) + noise_sd * rng.normal();
    return v;
}

Blobs gaussian_blobs(const std::vector<std::vector<double>>& centers, std::size_t per_blob, double sd,
                     std::uint64_t seed) {
    if (centers.empty()) fail(ErrorKind::Range, "gaussian_blobs needs at least one center");
    Rng rng(seed);
    const auto dim = static_cast<Eigen::Index>(centers.front().size());
    Blobs b;
    b.points.resize(static_cast<Eigen::Index>(centers.size() * per_blob), dim);
    Eigen::Index row = 0;
    for (std::size_t c = 0; c < centers.size(); ++c) {
        for (std::size_t i = 0; i < per_blob; ++i, ++row) {
            for (Eigen::Index j = 0; j < dim; ++j) b.points(row, j) = centers[c][static_cast<std::size_t>(j)] + sd * rng.normal();
            b.labels.push_back(static_cast<int>(c));
        }
    }
    return b;
}

} // namespace inboxaudit::synth
