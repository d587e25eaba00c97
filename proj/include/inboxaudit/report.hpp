#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "inboxaudit/classify.hpp"
#include "inboxaudit/cluster.hpp"
#include "inboxaudit/corpus.hpp"
#include "inboxaudit/error.hpp"
#include "inboxaudit/fixture.hpp"

namespace inboxaudit::report {

enum class ClassifierMode { Rules, External };

struct AuditConfig {
    std::filesystem::path corpus_dir;
    std::filesystem::path registry_path;
    std::filesystem::path ip2asn_path;
    std::filesystem::path abuse_path;
    std::filesystem::path org_map_path;       // optional; bundled map when empty
    std::filesystem::path provider_list_path; // optional; bundled list when empty
    std::filesystem::path rules_path;         // optional; bundled rule table when empty
    std::filesystem::path rater_matrix_path;  // optional
    std::string machine_rater;
    std::string trusted_mx;
    std::string audit_timezone = "UTC";
    ClassifierMode classifier_mode = ClassifierMode::Rules;
    classify::AdapterConfig adapter;
    std::uint64_t seed = 42;
    std::filesystem::path output_dir = "out";
    double spectrum_multiplier = 2.0;
    int decomposition_period = 7;
    cluster::PcaTarget pca_target = cluster::PcaTarget::fixed(5);
    int k_min = 2;
    int k_max = 10;
};

using Overrides = std::map<std::string, std::string>;

/// key = value lines, '#' comments. Overrides win over file values.
/// Relative paths resolve against `base_dir`. Throws AuditError(Config).
AuditConfig parse_config(std::string_view contents, const Overrides& overrides = {},
                         const std::filesystem::path& base_dir = {});
AuditConfig load_config(const std::optional<std::filesystem::path>& path, const Overrides& overrides = {});

/// Every key parse_config accepts.
const std::vector<std::string>& config_keys();

enum class Stage { Ingest, Classify, Analyze };

/// Checks that the inputs a stage reads exist. Throws AuditError(Config).
void validate_paths(const AuditConfig& config, Stage stage);

/// 0 success, 2 config error, 3 input error, 4 analysis infeasible.
int exit_code_for(ErrorKind kind) noexcept;

struct RunLog {
    std::vector<std::string> warnings;
    std::vector<std::filesystem::path> written;
};

RunLog cmd_ingest(const AuditConfig& config);
RunLog cmd_classify(const AuditConfig& config, const classify::Transport& transport = classify::http_transport());
RunLog cmd_analyze(const AuditConfig& config);
/// ingest, classify and analyze in sequence.
RunLog cmd_report(const AuditConfig& config, const classify::Transport& transport = classify::http_transport());

fixture::CheckReport cmd_fixture_check(const std::optional<std::filesystem::path>& table_path = std::nullopt);

/// Artifact file names written by cmd_analyze.
const std::vector<std::string>& analysis_artifacts();

/// Shortest round-trip decimal; "" for NaN.
std::string format_number(double v);

// ---------------------------------------------------------------------------
// Artifact schemas

struct SchemaIssue {
    std::string file;
    std::string message;
};

/// Names of the bundled schemas, e.g. "pareto.csv".
std::vector<std::string> schema_names();
/// Bundled schema text for an artifact name; throws AuditError(Config) if unknown.
std::string_view schema_for(std::string_view artifact);

/// Validates a JSON document (or JSON-lines / CSV file by extension) against
/// the bundled schema for its file name.
std::vector<SchemaIssue> validate_artifact(const std::filesystem::path& file);
/// Validates every artifact in `dir` that has a schema.
std::vector<SchemaIssue> validate_directory(const std::filesystem::path& dir);

} // namespace inboxaudit::report
