#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "inboxaudit/record.hpp"

namespace inboxaudit::mime {

struct ParsedMessage {
    HeaderMap headers;
    std::string body_text;
    // False when no well-formed header block could be found.
    bool has_header_block = false;
    std::vector<std::string> warnings;
};

/// Splits header block from body, unfolds continuation lines and collects
/// decoded text parts (text/plain preferred, tag-stripped text/html as
/// fallback). Never throws on malformed input.
ParsedMessage parse_message(std::string_view raw);

/// Unfolds an RFC 5322 header block into fields. Returns nullopt when the
/// block contains a line that is neither a field nor a continuation.
std::optional<HeaderMap> parse_header_block(std::string_view block);

/// RFC 2047 encoded-words (B and Q) to UTF-8.
std::string decode_encoded_words(std::string_view value);

std::string decode_quoted_printable(std::string_view input);
std::optional<std::string> decode_base64(std::string_view input);

/// Converts bytes in `charset` to UTF-8. UTF-8/ASCII pass through;
/// ISO-8859-1 and Windows-1252 are transcoded; unknown charsets pass
/// through unchanged.
std::string to_utf8(std::string_view bytes, std::string_view charset);

std::string strip_html(std::string_view html);

struct ContentType {
    std::string type = "text";
    std::string subtype = "plain";
    std::string charset;
    std::string boundary;
};

ContentType parse_content_type(std::string_view value);

/// First mailbox address in an address-list header ("Name <a@b>", "a@b").
/// Lowercased; empty when none found.
std::string first_address(std::string_view header_value);

} // namespace inboxaudit::mime
