#include "inboxaudit/mime.hpp"

#include <array>
#include <cctype>
#include <cstdint>

#include "inboxaudit/text.hpp"

namespace inboxaudit::mime {

namespace {

constexpr int kMaxDepth = 16;

void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x110000) {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// Windows-1252 code points for 0x80–0x9F; 0 marks undefined bytes.
constexpr std::array<std::uint16_t, 32> kCp1252High = {
    0x20AC, 0,      0x201A, 0x0192, 0x201E, 0x2026, 0x2020, 0x2021, 0x02C6, 0x2030, 0x0160,
    0x2039, 0x0152, 0,      0x017D, 0,      0,      0x2018, 0x2019, 0x201C, 0x201D, 0x2022,
    0x2013, 0x2014, 0x02DC, 0x2122, 0x0161, 0x203A, 0x0153, 0,      0x017E, 0x0178};

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

bool is_field_name_char(char c) {
    const auto u = static_cast<unsigned char>(c);
    return u >= 33 && u <= 126 && c != ':';
}

std::string normalize_newlines(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == '\r') {
            out.push_back('\n');
            if (i + 1 < raw.size() && raw[i + 1] == '\n') ++i;
        } else {
            out.push_back(raw[i]);
        }
    }
    return out;
}

// Splits "headers\n\nbody"; a message without a blank line is all headers.
std::pair<std::string_view, std::string_view> split_head_body(std::string_view msg) {
    if (!msg.empty() && msg.front() == '\n') return {std::string_view{}, msg.substr(1)};
    const auto pos = msg.find("\n\n");
    if (pos == std::string_view::npos) return {msg, std::string_view{}};
    return {msg.substr(0, pos + 1), msg.substr(pos + 2)};
}

std::string get_param(std::string_view value, std::string_view param) {
    // Scans ;-separated parameters honouring quoted strings.
    std::size_t i = value.find(';');
    while (i != std::string_view::npos && i < value.size()) {
        ++i;
        while (i < value.size() && std::isspace(static_cast<unsigned char>(value[i]))) ++i;
        const auto eq = value.find('=', i);
        if (eq == std::string_view::npos) break;
        const auto name = text::trim(value.substr(i, eq - i));
        std::size_t j = eq + 1;
        while (j < value.size() && std::isspace(static_cast<unsigned char>(value[j]))) ++j;
        std::string val;
        if (j < value.size() && value[j] == '"') {
            ++j;
            while (j < value.size() && value[j] != '"') {
                if (value[j] == '\\' && j + 1 < value.size()) ++j;
                val.push_back(value[j++]);
            }
            if (j < value.size()) ++j;
        } else {
            while (j < value.size() && value[j] != ';') val.push_back(value[j++]);
            val = std::string(text::trim(val));
        }
        if (text::iequals(name, param)) return val;
        i = value.find(';', j);
    }
    return {};
}

std::string decode_body(std::string_view body, std::string_view encoding, std::string_view charset) {
    std::string bytes;
    const auto enc = text::to_lower(text::trim(encoding));
    if (enc == "base64") {
        auto decoded = decode_base64(body);
        bytes = decoded ? std::move(*decoded) : std::string(body);
    } else if (enc == "quoted-printable") {
        bytes = decode_quoted_printable(body);
    } else {
        bytes = std::string(body);
    }
    return to_utf8(bytes, charset);
}

struct TextParts {
    std::vector<std::string> plain;
    std::vector<std::string> html;
};

void collect_parts(const HeaderMap& headers, std::string_view body, int depth, TextParts& parts,
                   std::vector<std::string>& warnings) {
    if (depth > kMaxDepth) {
        warnings.emplace_back("MIME nesting too deep");
        return;
    }
    const auto ct_header = headers.first("Content-Type");
    const ContentType ct = ct_header ? parse_content_type(*ct_header) : ContentType{};
    if (const auto disp = headers.first("Content-Disposition"); disp && text::starts_with_ci(text::trim(*disp), "attachment"))
        return;

    if (ct.type == "multipart") {
        if (ct.boundary.empty()) {
            warnings.emplace_back("multipart without boundary");
            return;
        }
        const std::string delim = "--" + ct.boundary;
        std::size_t pos = 0;
        bool first = true;
        std::size_t part_start = 0;
        while (true) {
            // Boundaries must start a line.
            auto found = body.find(delim, pos);
            while (found != std::string_view::npos && found != 0 && body[found - 1] != '\n')
                found = body.find(delim, found + 1);
            if (found == std::string_view::npos) {
                if (!first && part_start < body.size()) {
                    warnings.emplace_back("missing closing MIME boundary");
                    auto part = body.substr(part_start);
                    auto [ph, pb] = split_head_body(part);
                    if (auto hm = parse_header_block(ph)) collect_parts(*hm, pb, depth + 1, parts, warnings);
                }
                break;
            }
            if (!first) {
                auto part = body.substr(part_start, found - part_start);
                if (!part.empty() && part.back() == '\n') part.remove_suffix(1);
                auto [ph, pb] = split_head_body(part);
                auto hm = parse_header_block(ph);
                if (hm) collect_parts(*hm, pb, depth + 1, parts, warnings);
                else warnings.emplace_back("malformed MIME part headers");
            }
            first = false;
            const auto after = found + delim.size();
            if (body.substr(after, 2) == "--") break;
            const auto eol = body.find('\n', after);
            if (eol == std::string_view::npos) break;
            part_start = eol + 1;
            pos = part_start;
        }
        return;
    }
    if (ct.type == "message" && ct.subtype == "rfc822") {
        auto [ph, pb] = split_head_body(body);
        if (auto hm = parse_header_block(ph)) collect_parts(*hm, pb, depth + 1, parts, warnings);
        return;
    }
    if (ct.type != "text") return;
    const auto cte = headers.first("Content-Transfer-Encoding").value_or("7bit");
    if (ct.subtype == "plain") parts.plain.push_back(decode_body(body, cte, ct.charset));
    else if (ct.subtype == "html") parts.html.push_back(decode_body(body, cte, ct.charset));
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) {
        if (!out.empty()) out.push_back('\n');
        out += text::trim(s);
    }
    return out;
}

} // namespace

std::optional<HeaderMap> parse_header_block(std::string_view block) {
    HeaderMap headers;
    std::string name, value;
    bool have = false;
    std::size_t pos = 0;
    bool first_line = true;
    while (pos < block.size()) {
        auto eol = block.find('\n', pos);
        if (eol == std::string_view::npos) eol = block.size();
        auto line = block.substr(pos, eol - pos);
        pos = eol + 1;
        if (line.empty()) continue;
        for (char c : line)
            if (c == '\0') return std::nullopt;
        if (first_line && line.substr(0, 5) == "From ") {
            first_line = false;
            continue; // mbox separator
        }
        first_line = false;
        if (line.front() == ' ' || line.front() == '\t') {
            if (!have) return std::nullopt;
            // Unfolding removes the CRLF, keeping the leading whitespace.
            value += line;
            continue;
        }
        const auto colon = line.find(':');
        if (colon == std::string_view::npos || colon == 0) return std::nullopt;
        auto fname = line.substr(0, colon);
        while (!fname.empty() && (fname.back() == ' ' || fname.back() == '\t')) fname.remove_suffix(1);
        for (char c : fname)
            if (!is_field_name_char(c)) return std::nullopt;
        if (have) headers.add(std::move(name), std::string(text::trim(value)));
        name = std::string(fname);
        value = std::string(line.substr(colon + 1));
        have = true;
    }
    if (have) headers.add(std::move(name), std::string(text::trim(value)));
    if (headers.empty()) return std::nullopt;
    return headers;
}

ParsedMessage parse_message(std::string_view raw) {
    ParsedMessage msg;
    const std::string normalized = normalize_newlines(raw);
    auto [head, body] = split_head_body(normalized);
    auto headers = parse_header_block(head);
    if (!headers) {
        msg.warnings.emplace_back("no well-formed header block");
        return msg;
    }
    msg.has_header_block = true;
    msg.headers = std::move(*headers);
    TextParts parts;
    collect_parts(msg.headers, body, 0, parts, msg.warnings);
    if (!parts.plain.empty()) {
        msg.body_text = join(parts.plain);
    } else if (!parts.html.empty()) {
        std::vector<std::string> stripped;
        for (const auto& h : parts.html) stripped.push_back(strip_html(h));
        msg.body_text = join(stripped);
    }
    return msg;
}

std::string decode_quoted_printable(std::string_view in) {
    std::string out;
    out.reserve(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
        const char c = in[i];
        if (c != '=') {
            out.push_back(c);
            continue;
        }
        if (i + 1 < in.size() && in[i + 1] == '\n') {
            ++i; // soft line break
            continue;
        }
        if (i + 2 < in.size() && in[i + 1] == '\r' && in[i + 2] == '\n') {
            i += 2;
            continue;
        }
        if (i + 2 < in.size()) {
            const int hi = hex_value(in[i + 1]), lo = hex_value(in[i + 2]);
            if (hi >= 0 && lo >= 0) {
                out.push_back(static_cast<char>(hi * 16 + lo));
                i += 2;
                continue;
            }
        }
        out.push_back(c);
    }
    return out;
}

std::optional<std::string> decode_base64(std::string_view in) {
    auto value = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+' || c == '-') return 62;
        if (c == '/' || c == '_') return 63;
        return -1;
    };
    std::string out;
    out.reserve(in.size() * 3 / 4);
    std::uint32_t acc = 0;
    int bits = 0;
    for (char c : in) {
        if (c == '=') break;
        if (c == ' ' || c == '\n' || c == '\r' || c == '\t') continue;
        const int v = value(c);
        if (v < 0) return std::nullopt;
        acc = (acc << 6) | static_cast<std::uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<char>((acc >> bits) & 0xFF));
        }
    }
    return out;
}

std::string to_utf8(std::string_view bytes, std::string_view charset) {
    const auto cs = text::to_lower(text::trim(charset));
    const bool latin1 = cs == "iso-8859-1" || cs == "latin1" || cs == "iso8859-1" || cs == "l1";
    const bool cp1252 = cs == "windows-1252" || cs == "cp1252";
    if (!latin1 && !cp1252) return std::string(bytes);
    std::string out;
    out.reserve(bytes.size());
    for (char ch : bytes) {
        const auto b = static_cast<unsigned char>(ch);
        if (b < 0x80) {
            out.push_back(ch);
        } else if (cp1252 && b < 0xA0) {
            const auto cp = kCp1252High[b - 0x80];
            append_utf8(out, cp != 0 ? cp : 0xFFFD);
        } else {
            append_utf8(out, b);
        }
    }
    return out;
}

std::string decode_encoded_words(std::string_view value) {
    std::string out;
    std::size_t i = 0;
    bool last_was_word = false;
    std::string pending_ws;
    while (i < value.size()) {
        if (value.substr(i, 2) == "=?") {
            const auto q1 = value.find('?', i + 2);
            const auto q2 = q1 == std::string_view::npos ? q1 : value.find('?', q1 + 1);
            const auto end = q2 == std::string_view::npos ? q2 : value.find("?=", q2 + 1);
            if (end != std::string_view::npos && q2 == q1 + 2) {
                auto charset = value.substr(i + 2, q1 - i - 2);
                if (const auto star = charset.find('*'); star != std::string_view::npos)
                    charset = charset.substr(0, star); // RFC 2231 language tag
                const char enc = static_cast<char>(std::toupper(static_cast<unsigned char>(value[q1 + 1])));
                const auto payload = value.substr(q2 + 1, end - q2 - 1);
                std::optional<std::string> bytes;
                if (enc == 'B') {
                    bytes = decode_base64(payload);
                } else if (enc == 'Q') {
                    std::string tmp(payload);
                    for (auto& c : tmp)
                        if (c == '_') c = ' ';
                    bytes = decode_quoted_printable(tmp);
                }
                if (bytes) {
                    // Whitespace between adjacent encoded-words is dropped.
                    if (!last_was_word) out += pending_ws;
                    pending_ws.clear();
                    out += to_utf8(*bytes, charset);
                    last_was_word = true;
                    i = end + 2;
                    continue;
                }
            }
        }
        const char c = value[i];
        if (c == ' ' || c == '\t') {
            pending_ws.push_back(c);
        } else {
            out += pending_ws;
            pending_ws.clear();
            out.push_back(c);
            last_was_word = false;
        }
        ++i;
    }
    out += pending_ws;
    return out;
}

std::string strip_html(std::string_view html) {
    std::string out;
    out.reserve(html.size());
    std::size_t i = 0;
    auto skip_block = [&](std::string_view close) {
        const auto lower = text::to_lower(html.substr(i));
        const auto end = lower.find(close);
        i = end == std::string::npos ? html.size() : i + end + close.size();
    };
    while (i < html.size()) {
        const char c = html[i];
        if (c == '<') {
            if (html.substr(i, 4) == "<!--") {
                const auto end = html.find("-->", i + 4);
                i = end == std::string_view::npos ? html.size() : end + 3;
                continue;
            }
            const auto close = html.find('>', i);
            if (close == std::string_view::npos) break;
            const auto tag = text::to_lower(html.substr(i + 1, std::min<std::size_t>(close - i - 1, 16)));
            i = close + 1;
            if (tag.rfind("script", 0) == 0) {
                skip_block("</script>");
            } else if (tag.rfind("style", 0) == 0) {
                skip_block("</style>");
            } else if (tag.rfind("br", 0) == 0 || tag.rfind("p", 0) == 0 || tag.rfind("/p", 0) == 0 ||
                       tag.rfind("div", 0) == 0 || tag.rfind("/div", 0) == 0 || tag.rfind("tr", 0) == 0 ||
                       tag.rfind("li", 0) == 0 || tag.rfind("h", 0) == 0 || tag.rfind("/h", 0) == 0) {
                out.push_back('\n');
            } else {
                out.push_back(' ');
            }
            continue;
        }
        if (c == '&') {
            const auto semi = html.find(';', i);
            if (semi != std::string_view::npos && semi - i <= 10) {
                const auto ent = html.substr(i + 1, semi - i - 1);
                std::optional<std::uint32_t> cp;
                if (ent == "amp") cp = '&';
                else if (ent == "lt") cp = '<';
                else if (ent == "gt") cp = '>';
                else if (ent == "quot") cp = '"';
                else if (ent == "apos") cp = '\'';
                else if (ent == "nbsp") cp = ' ';
                else if (!ent.empty() && ent.front() == '#') {
                    std::uint32_t v = 0;
                    bool okv = ent.size() > 1;
                    const bool hexa = ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X');
                    for (std::size_t k = hexa ? 2 : 1; k < ent.size() && okv; ++k) {
                        const int d = hexa ? hex_value(ent[k]) : (std::isdigit(static_cast<unsigned char>(ent[k])) ? ent[k] - '0' : -1);
                        if (d < 0 || v > 0x10FFFF) okv = false;
                        else v = v * (hexa ? 16 : 10) + static_cast<std::uint32_t>(d);
                    }
                    if (okv && v > 0 && v < 0x110000) cp = v;
                }
                if (cp) {
                    append_utf8(out, *cp);
                    i = semi + 1;
                    continue;
                }
            }
        }
        out.push_back(c);
        ++i;
    }
    // Collapse runs of spaces and blank lines.
    std::string collapsed;
    collapsed.reserve(out.size());
    bool space = false, newline = false;
    for (char c : out) {
        if (c == '\n') {
            newline = true;
            space = false;
        } else if (c == ' ' || c == '\t' || c == '\r') {
            space = true;
        } else {
            if (newline && !collapsed.empty()) collapsed.push_back('\n');
            else if (space && !collapsed.empty()) collapsed.push_back(' ');
            newline = space = false;
            collapsed.push_back(c);
        }
    }
    return collapsed;
}

ContentType parse_content_type(std::string_view value) {
    ContentType ct;
    const auto semi = value.find(';');
    const auto mime = text::to_lower(text::trim(value.substr(0, semi)));
    const auto slash = mime.find('/');
    if (slash != std::string::npos && slash > 0 && slash + 1 < mime.size()) {
        ct.type = mime.substr(0, slash);
        ct.subtype = mime.substr(slash + 1);
    }
    ct.charset = get_param(value, "charset");
    ct.boundary = get_param(value, "boundary");
    return ct;
}

std::string first_address(std::string_view value) {
    // Angle-bracket form, skipping quoted display names.
    bool quoted = false;
    for (std::size_t i = 0; i < value.size(); ++i) {
        if (value[i] == '"') quoted = !quoted;
        if (!quoted && value[i] == '<') {
            const auto close = value.find('>', i);
            if (close == std::string_view::npos) break;
            auto addr = text::trim(value.substr(i + 1, close - i - 1));
            if (addr.find('@') != std::string_view::npos) return text::to_lower(addr);
        }
    }
    // Bare addr-spec: the first whitespace/comma delimited token with '@'.
    std::string token;
    for (std::size_t i = 0; i <= value.size(); ++i) {
        const char c = i < value.size() ? value[i] : ' ';
        if (c == ' ' || c == '\t' || c == ',' || c == ';' || c == '(' || c == ')' || c == '"') {
            if (token.find('@') != std::string::npos && token.front() != '@' && token.back() != '@')
                return text::to_lower(token);
            token.clear();
        } else {
            token.push_back(c);
        }
    }
    return {};
}

} // namespace inboxaudit::mime
