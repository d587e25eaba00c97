// Minimal JSON Schema subset for the published artifact schemas: type,
// enum, const, anyOf, minimum/maximum, pattern, items, min/maxItems,
// properties, required, additionalProperties, maxProperties. CSV schemas
// describe one row object plus the column order in "x-columns".

#include <algorithm>
#include <charconv>
#include <cmath>
#include <regex>

#include "json.hpp"

#include "inboxaudit/embedded.hpp"
#include "inboxaudit/report.hpp"
#include "inboxaudit/text.hpp"

namespace inboxaudit::report {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string stem_for(std::string_view artifact) {
    std::string s(artifact);
    std::replace(s.begin(), s.end(), '.', '_');
    return s;
}

bool type_matches(const std::string& type, const json& v) {
    if (type == "object") return v.is_object();
    if (type == "array") return v.is_array();
    if (type == "string") return v.is_string();
    if (type == "boolean") return v.is_boolean();
    if (type == "null") return v.is_null();
    if (type == "number") return v.is_number();
    if (type == "integer") {
        if (v.is_number_integer()) return true;
        if (!v.is_number_float()) return false;
        const double d = v.get<double>();
        return std::isfinite(d) && std::floor(d) == d;
    }
    return false;
}

void check(const json& schema, const json& v, const std::string& path, std::vector<std::string>& errors) {
    const auto where = path.empty() ? std::string("$") : path;
    if (schema.contains("anyOf")) {
        bool any = false;
        for (const auto& alt : schema["anyOf"]) {
            std::vector<std::string> sub;
            check(alt, v, path, sub);
            if (sub.empty()) {
                any = true;
                break;
            }
        }
        if (!any) errors.push_back(where + ": matches no allowed alternative");
    }
    if (schema.contains("const") && v != schema["const"]) errors.push_back(where + ": expected " + schema["const"].dump());
    if (schema.contains("type")) {
        const auto& t = schema["type"];
        bool ok = false;
        if (t.is_string()) ok = type_matches(t.get<std::string>(), v);
        else
            for (const auto& one : t) ok = ok || type_matches(one.get<std::string>(), v);
        if (!ok) {
            errors.push_back(where + ": expected type " + t.dump() + ", got " + v.type_name());
            return;
        }
    }
    if (schema.contains("enum")) {
        const auto& e = schema["enum"];
        if (std::find(e.begin(), e.end(), v) == e.end()) errors.push_back(where + ": " + v.dump() + " not in " + e.dump());
    }
    if (v.is_number()) {
        const double d = v.get<double>();
        if (schema.contains("minimum") && d < schema["minimum"].get<double>())
            errors.push_back(where + ": " + v.dump() + " below minimum " + schema["minimum"].dump());
        if (schema.contains("maximum") && d > schema["maximum"].get<double>())
            errors.push_back(where + ": " + v.dump() + " above maximum " + schema["maximum"].dump());
    }
    if (v.is_string() && schema.contains("pattern")) {
        if (!std::regex_search(v.get<std::string>(), std::regex(schema["pattern"].get<std::string>())))
            errors.push_back(where + ": does not match " + schema["pattern"].get<std::string>());
    }
    if (v.is_array()) {
        if (schema.contains("minItems") && v.size() < schema["minItems"].get<std::size_t>())
            errors.push_back(where + ": fewer than " + schema["minItems"].dump() + " items");
        if (schema.contains("maxItems") && v.size() > schema["maxItems"].get<std::size_t>())
            errors.push_back(where + ": more than " + schema["maxItems"].dump() + " items");
        if (schema.contains("items"))
            for (std::size_t i = 0; i < v.size(); ++i)
                check(schema["items"], v[i], where + "[" + std::to_string(i) + "]", errors);
    }
    if (v.is_object()) {
        if (schema.contains("maxProperties") && v.size() > schema["maxProperties"].get<std::size_t>())
            errors.push_back(where + ": too many properties");
        if (schema.contains("required"))
            for (const auto& key : schema["required"])
                if (!v.contains(key.get<std::string>())) errors.push_back(where + ": missing " + key.get<std::string>());
        const json empty = json::object();
        const auto& props = schema.contains("properties") ? schema["properties"] : empty;
        for (const auto& [key, value] : v.items()) {
            const auto child = where + "." + key;
            if (props.contains(key)) {
                check(props[key], value, child, errors);
            } else if (schema.contains("additionalProperties")) {
                const auto& extra = schema["additionalProperties"];
                if (extra.is_boolean()) {
                    if (!extra.get<bool>()) errors.push_back(child + ": unexpected property");
                } else {
                    check(extra, value, child, errors);
                }
            }
        }
    }
}

std::vector<std::string> types_of(const json& schema) {
    std::vector<std::string> out;
    if (!schema.contains("type")) return out;
    if (schema["type"].is_string()) out.push_back(schema["type"].get<std::string>());
    else
        for (const auto& t : schema["type"]) out.push_back(t.get<std::string>());
    return out;
}

// Typed value of one CSV cell under its column schema.
json cell_value(const std::string& cell, const json& column) {
    const auto types = types_of(column);
    auto has = [&](const char* t) { return std::find(types.begin(), types.end(), t) != types.end(); };
    if (cell.empty() && has("null")) return nullptr;
    if (has("boolean")) {
        if (cell == "true") return true;
        if (cell == "false") return false;
    }
    if (has("integer") || has("number")) {
        double d = 0.0;
        auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), d);
        if (ec == std::errc{} && ptr == cell.data() + cell.size() && !cell.empty()) {
            if (has("integer") && std::floor(d) == d && std::fabs(d) < 9e15) return static_cast<std::int64_t>(d);
            return d;
        }
    }
    return cell;
}

std::vector<SchemaIssue> validate_csv(const fs::path& file, const json& schema) {
    std::vector<SchemaIssue> issues;
    const auto name = file.filename().string();
    const auto table = text::read_delimited(file, true);
    const auto& columns = schema["x-columns"];
    std::vector<std::string> expected;
    for (const auto& c : columns) expected.push_back(c.get<std::string>());
    if (table.header != expected) {
        issues.push_back({name, "header does not match the published column list"});
        return issues;
    }
    for (const auto& row : table.rows) {
        if (row.fields.size() != expected.size()) {
            issues.push_back({name, "line " + std::to_string(row.line) + ": expected " + std::to_string(expected.size()) +
                                        " fields, found " + std::to_string(row.fields.size())});
            continue;
        }
        json obj = json::object();
        for (std::size_t i = 0; i < expected.size(); ++i)
            obj[expected[i]] = cell_value(row.fields[i], schema["properties"][expected[i]]);
        std::vector<std::string> errors;
        check(schema, obj, "line " + std::to_string(row.line), errors);
        for (auto& e : errors) issues.push_back({name, std::move(e)});
    }
    return issues;
}

} // namespace

std::vector<std::string> schema_names() {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < embedded::schemas_count; ++i) {
        std::string n(embedded::schemas[i].first);
        if (auto pos = n.rfind('_'); pos != std::string::npos) n[pos] = '.';
        out.push_back(n);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string_view schema_for(std::string_view artifact) {
    const auto stem = stem_for(artifact);
    for (std::size_t i = 0; i < embedded::schemas_count; ++i)
        if (embedded::schemas[i].first == stem) return embedded::schemas[i].second;
    fail(ErrorKind::Config, "no schema published for " + std::string(artifact));
}

std::vector<SchemaIssue> validate_artifact(const fs::path& file) {
    const auto name = file.filename().string();
    const auto schema = json::parse(schema_for(name));
    std::vector<SchemaIssue> issues;
    try {
        if (schema.contains("x-columns")) return validate_csv(file, schema);
        const auto contents = text::read_file(file);
        if (file.extension() == ".jsonl") {
            std::size_t line_no = 0;
            for (const auto& line : text::split(contents, '\n', false)) {
                ++line_no;
                if (text::trim(line).empty()) continue;
                std::vector<std::string> errors;
                check(schema, json::parse(line), "line " + std::to_string(line_no), errors);
                for (auto& e : errors) issues.push_back({name, std::move(e)});
            }
        } else {
            std::vector<std::string> errors;
            check(schema, json::parse(contents), "", errors);
            for (auto& e : errors) issues.push_back({name, std::move(e)});
        }
    } catch (const json::exception& e) {
        issues.push_back({name, std::string("not valid JSON: ") + e.what()});
    } catch (const AuditError& e) {
        issues.push_back({name, e.what()});
    }
    return issues;
}

std::vector<SchemaIssue> validate_directory(const fs::path& dir) {
    std::vector<SchemaIssue> issues;
    const auto names = schema_names();
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() &&
            std::binary_search(names.begin(), names.end(), entry.path().filename().string()))
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        auto more = validate_artifact(f);
        issues.insert(issues.end(), more.begin(), more.end());
    }
    return issues;
}

} // namespace inboxaudit::report
