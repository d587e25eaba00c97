#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "inboxaudit/record.hpp"

namespace inboxaudit::classify {

enum class ContentLabel { Promotional, Crm, Alert };
enum class LabelSource { Rules, External };

const char* to_string(ContentLabel l) noexcept;
std::optional<ContentLabel> content_label_from_string(std::string_view s) noexcept;

struct Classification {
    ContentLabel label = ContentLabel::Crm;
    int confidence = 1; // 1–5
    std::string rationale;
    LabelSource source = LabelSource::Rules;
    bool low_signal = false;
    bool fallback = false;       // external requested but rules used
    std::string fallback_reason; // error text when fallback is set
    int attempts = 0;            // external requests issued
};

// ---------------------------------------------------------------------------
// Rule engine

enum class RuleField { Subject, Body, Any };

struct Rule {
    ContentLabel label = ContentLabel::Crm;
    RuleField field = RuleField::Any;
    bool is_regex = false;
    std::string pattern;
    double weight = 0.0;
    std::optional<std::regex> compiled;
};

class RuleTable {
public:
    RuleTable() = default;
    RuleTable(std::vector<Rule> rules, double crm_baseline, std::string version);

    const std::vector<Rule>& rules() const noexcept { return rules_; }
    double crm_baseline() const noexcept { return crm_baseline_; }
    const std::string& version() const noexcept { return version_; }

private:
    std::vector<Rule> rules_;
    double crm_baseline_ = 1.0;
    std::string version_;
};

/// Tab/comma delimited: label, field, kind (word|regex), pattern, weight.
/// Comment lines "# version: X" and "# crm_baseline: Y" set metadata.
RuleTable parse_rule_table(std::string_view contents);
RuleTable load_rule_table(const std::filesystem::path& path);
const RuleTable& default_rule_table();

struct RuleScores {
    double promotional = 0.0;
    double crm = 0.0;
    double alert = 0.0;
    std::vector<std::string> matched;
};

RuleScores score_rules(std::string_view subject, std::string_view body, const RuleTable& table);

/// Deterministic label from (subject, body_text). Exact ties resolve
/// alert > promotional > crm.
Classification classify_rule_based(const EmailRecord& record, const RuleTable& table = default_rule_table());
Classification classify_text(std::string_view subject, std::string_view body,
                             const RuleTable& table = default_rule_table());

// ---------------------------------------------------------------------------
// External LLM adapter

struct AdapterConfig {
    std::string url;   // http://host:port/path
    std::string model;
    std::chrono::milliseconds timeout{30000};
    int retry_budget = 2;      // extra attempts after a transport failure
    std::size_t pool_size = 4; // concurrent in-flight requests
    std::size_t max_input_chars = 8000;
};

/// Request/response transport: returns the response body or throws
/// AuditError(Transport). Swappable for tests.
using Transport = std::function<std::string(const AdapterConfig&, const std::string& request_json)>;

Transport http_transport();

/// JSON schema for the structured response.
const std::string& response_schema_json();

/// The classifier prompt with schema and email text substituted.
std::string render_prompt(std::string_view email_text);
std::string email_input_text(const EmailRecord& record, std::size_t max_chars);

/// Extracts exactly one JSON object from `response` (prose around it is
/// tolerated) and validates it against the response schema. Throws
/// AuditError(Protocol) on failure.
Classification decode_response(std::string_view response);

/// One record through the adapter. Transport failures are retried up to
/// retry_budget; a schema violation triggers one re-prompt ending in
/// "Respond with JSON only". Throws Transport/Protocol errors.
Classification classify_external(const EmailRecord& record, const AdapterConfig& config,
                                 const Transport& transport = http_transport());

/// classify_external with rule-engine fallback (source = Rules, fallback set).
Classification classify_with_fallback(const EmailRecord& record, const AdapterConfig& config,
                                      const Transport& transport = http_transport(),
                                      const RuleTable& table = default_rule_table());

/// Runs a batch through a bounded pool of workers; results are returned in
/// input order.
std::vector<Classification> classify_external_batch(const std::vector<const EmailRecord*>& records,
                                                    const AdapterConfig& config,
                                                    const Transport& transport = http_transport(),
                                                    const RuleTable& table = default_rule_table());

// ---------------------------------------------------------------------------
// Inter-rater reliability

/// Unweighted Cohen's kappa over nominal labels.
double cohens_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b);

struct RaterMatrix {
    std::vector<std::string> items;
    std::vector<std::string> raters;                // column order
    std::vector<std::vector<std::string>> labels;   // labels[rater][item]
};

RaterMatrix parse_rater_matrix(std::string_view contents);
RaterMatrix load_rater_matrix(const std::filesystem::path& path);

struct KappaPair {
    std::string rater_a;
    std::string rater_b;
    double kappa = 0.0;
    bool involves_machine = false;
};

struct IrrSummary {
    std::optional<double> human_human_mean; // needs ≥ 2 human raters
    std::optional<double> machine_human_mean;
    std::vector<KappaPair> pairs;
};

IrrSummary pairwise_irr(const RaterMatrix& matrix, std::optional<std::string> machine_rater = std::nullopt);

} // namespace inboxaudit::classify
