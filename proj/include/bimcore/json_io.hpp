#pragma once

// JSON bindings for the registry's wire and storage representations.
// Field names follow the type definitions; optional fields are omitted when
// empty so that serialize -> parse is identity on the value level.

#include "bimcore/fixity.hpp"
#include "bimcore/model.hpp"
#include "bimcore/report.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace bimcore {

using json = nlohmann::json;

void to_json(json& j, const FixityEntry& e);
void from_json(const json& j, FixityEntry& e);

void to_json(json& j, const ContextEntry& e);
void from_json(const json& j, ContextEntry& e);

void to_json(json& j, const ContentElementDef& d);

void to_json(json& j, const ContentElementValue& v);
void from_json(const json& j, ContentElementValue& v);

void to_json(json& j, const RecordRelation& r);
void from_json(const json& j, RecordRelation& r);

void to_json(json& j, const RIRecord& r);
void from_json(const json& j, RIRecord& r);

void to_json(json& j, const SignificantProperty& p);
void from_json(const json& j, SignificantProperty& p);

void to_json(json& j, const Violation& v);
void to_json(json& j, const ValidationReport& r);

void to_json(json& j, const CheckResult& c);
void to_json(json& j, const VerificationReport& r);

/// Canonical text form: two-space indent, sorted keys, trailing newline.
std::string canonical_dump(const json& j);

/// Parses a JSON document, rethrowing parse problems as ParseError.
json parse_json(const std::string& text, const std::string& context);

/// Reads and parses a JSON file.
json load_json_file(const std::filesystem::path& path);

/// Writes canonical JSON atomically (temp file + rename).
void store_json_file(const std::filesystem::path& path, const json& j);

} // namespace bimcore
