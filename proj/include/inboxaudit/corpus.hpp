#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "inboxaudit/record.hpp"
#include "inboxaudit/timeutil.hpp"

namespace inboxaudit::corpus {

inline constexpr int kMaxAliasIndex = 149;
inline constexpr int kFirstMobileIndex = 100;

/// "<name_seed><index as 3 digits>@<domain>".
std::string generate_alias(std::string_view name_seed, int index, std::string_view domain);

/// Splits a local part of the form <letters><3 digits> into its index.
std::optional<int> alias_index(std::string_view local_part) noexcept;

class AliasRegistry {
public:
    AliasRegistry() = default;

    /// Validates every invariant; throws Integrity/Parse errors.
    explicit AliasRegistry(std::vector<AliasEntry> entries);

    const std::vector<AliasEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    const AliasEntry* find_local_part(std::string_view local_part) const noexcept;
    const AliasEntry* find_index(int index) const noexcept;
    const AliasEntry* find_service(std::string_view service_name) const noexcept;

    std::vector<std::string> warnings;

private:
    std::vector<AliasEntry> entries_; // sorted by index
};

AliasRegistry parse_alias_registry(std::string_view contents);
AliasRegistry load_alias_registry(const std::filesystem::path& path);

/// Parses one raw message. Never throws: input that cannot be read as a
/// message yields parse_status = Unparseable with a content-hash id.
/// `trusted_mx` selects the Authentication-Results / Received headers to
/// trust; `tz` sets received_local.
EmailRecord parse_eml(std::string_view raw, std::string_view trusted_mx = {},
                      const Timezone& tz = Timezone::utc());

/// Registrable domain using the bundled public-suffix snapshot.
/// Throws Format when `address` has no '@'.
std::string root_domain(std::string_view address);

/// Registrable domain of a bare host name.
std::string registrable_domain(std::string_view host);

/// Replaces the public-suffix rules used by root_domain (PSL file format).
void load_public_suffix_rules(std::string_view psl_contents);

struct IngestReport {
    std::size_t files = 0;
    std::size_t ok = 0;
    std::size_t unparseable = 0;
    std::size_t unmatched = 0; // parsed records with no registered alias
    std::size_t duplicate_message_ids = 0;
    std::vector<std::string> warnings;
};

class CorpusStore {
public:
    CorpusStore() = default;

    /// Sorts by (received_utc, message_id) and builds both indexes.
    explicit CorpusStore(std::vector<EmailRecord> records);

    const std::vector<EmailRecord>& records() const noexcept { return records_; }
    std::size_t size() const noexcept { return records_.size(); }

    /// service name (or "UNMATCHED") → record indexes.
    const std::map<std::string, std::vector<std::size_t>>& by_service() const noexcept { return by_service_; }
    /// root domain (empty for records without a From domain) → indexes.
    const std::map<std::string, std::vector<std::size_t>>& by_root_domain() const noexcept { return by_root_domain_; }

    std::vector<const EmailRecord*> service_records(std::string_view service) const;

private:
    std::vector<EmailRecord> records_;
    std::map<std::string, std::vector<std::size_t>> by_service_;
    std::map<std::string, std::vector<std::size_t>> by_root_domain_;
};

struct IngestOptions {
    Timezone timezone = Timezone::utc();
    std::string trusted_mx;
    bool parallel = true;
};

struct IngestResult {
    CorpusStore store;
    IngestReport report;
};

/// Recipient resolution: Delivered-To, then X-Original-To, then To.
std::string resolve_recipient(const HeaderMap& headers);

/// Binds a parsed record to the registry entry owning its recipient
/// local part (UNMATCHED otherwise).
void bind_alias(EmailRecord& record, const AliasRegistry& registry);

/// Parses every *.eml file under `directory` (recursively), binds aliases
/// and de-duplicates by message_id (first file in path order wins).
IngestResult ingest_corpus(const std::filesystem::path& directory, const AliasRegistry& registry,
                           const IngestOptions& options = {});

/// Same pipeline over in-memory messages, in the given order.
IngestResult ingest_messages(const std::vector<std::string>& raw_messages, const AliasRegistry& registry,
                             const IngestOptions& options = {});

/// JSON-lines, one EmailRecord per line.
std::string to_jsonl(const CorpusStore& store);
void write_jsonl(const CorpusStore& store, const std::filesystem::path& path);
CorpusStore read_jsonl(const std::filesystem::path& path, const Timezone& tz = Timezone::utc());
CorpusStore parse_jsonl(std::string_view contents, const Timezone& tz = Timezone::utc());

std::string to_json(const IngestReport& report);

/// Stable 64-bit content hash (FNV-1a) as 16 hex digits.
std::string content_hash(std::string_view bytes);

} // namespace inboxaudit::corpus
