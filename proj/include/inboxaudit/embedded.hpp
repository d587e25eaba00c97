#pragma once

#include <cstddef>
#include <string_view>
#include <utility>

// Data files compiled into the library (see data/ and fixtures/).
namespace inboxaudit::embedded {

extern const std::string_view public_suffix_dat;
extern const std::string_view classifier_rules_tsv;
extern const std::string_view classifier_prompt_txt;
extern const std::string_view classifier_response_schema_json;
extern const std::string_view service_org_map_csv;
extern const std::string_view marketing_providers_txt;
extern const std::string_view cloud_providers_txt;
extern const std::string_view domain_table_csv;

// Artifact schemas from schemas/, keyed by file stem ("pareto_csv").
extern const std::pair<std::string_view, std::string_view> schemas[];
extern const std::size_t schemas_count;

} // namespace inboxaudit::embedded
