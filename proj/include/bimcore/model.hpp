#pragma once

#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace bimcore {

// ---------------------------------------------------------------------------
// BIMcore content element schema
// ---------------------------------------------------------------------------

/// The three BIMcore categories. Elements 1-15 are structural/semantic,
/// 16-18 describe tooling, 19-23 carry context.
enum class BimcoreCategory {
    StructuralSemantic,
    Tooling,
    Context,
};

/// Payload kind of a content element value.
enum class ValueKind {
    Text,
    StructuredReference,
    ExternalLink,
    ToolDescription,
    ContextEntry,
};

constexpr int kElementCount = 23;

/// Category owning a given element id (1..23).
BimcoreCategory category_of_element(int element_id);

struct ContentElementDef {
    int id = 0;
    BimcoreCategory category = BimcoreCategory::StructuralSemantic;
    std::string name;
    ValueKind value_kind = ValueKind::Text;
    bool repeatable = true;
    bool required_for_publication = false;
};

/// The fixed set of 23 element definitions, ids 1..23 in order.
const std::vector<ContentElementDef>& builtin_element_defs();

// ---------------------------------------------------------------------------
// Element value payloads
// ---------------------------------------------------------------------------

struct TextPayload {
    std::string text;
    bool operator==(const TextPayload&) const = default;
};

struct StructuredReference {
    std::string label;
    std::string target; // record id or external identifier
    bool operator==(const StructuredReference&) const = default;
};

struct ExternalLink {
    std::string url;
    std::string title;
    bool operator==(const ExternalLink&) const = default;
};

struct ToolDescription {
    std::string tool_name;
    std::string description;
    std::string availability;
    bool operator==(const ToolDescription&) const = default;
};

/// Kinds of context entries; each corresponds to one of elements 19-23.
enum class ContextKind {
    OriginContext,      // element 19
    BuildingSpecific,   // element 20
    ExternalUseCaseRepo,// element 21
    AcceptanceProfile,  // element 22
    Background,         // element 23
};

/// Element id an entry of the given kind belongs to.
int element_of_context_kind(ContextKind kind);

struct ContextEntry {
    std::string entry_id;
    ContextKind kind = ContextKind::OriginContext;
    /// Inline text or an external link.
    std::variant<std::string, ExternalLink> body;
    /// Marks technical provenance (e.g. sensor specifications), empty if none.
    std::string provenance_note;
    bool operator==(const ContextEntry&) const = default;
};

using ElementPayload =
    std::variant<TextPayload, StructuredReference, ExternalLink, ToolDescription, ContextEntry>;

/// Payload kind of a concrete payload value.
ValueKind kind_of_payload(const ElementPayload& payload);

struct ContentElementValue {
    int element_id = 0;
    ElementPayload payload;
    /// BCP-47 tag for textual payloads, empty when not applicable.
    std::string language;
    std::optional<std::string> source_citation;
    bool operator==(const ContentElementValue&) const = default;
};

// ---------------------------------------------------------------------------
// Representation-information subtypes
// ---------------------------------------------------------------------------

/// Three RI subtypes plus the two special software types.
enum class RISubtype {
    StructureInformation,
    SemanticInformation,
    OtherRepresentationInformation,
    RepresentationRenderingSoftware,
    AccessSoftware,
};

/// Fixed mapping from a content element value to the RI subtypes it feeds.
/// Elements outside 1..23 are a contract violation.
std::set<RISubtype> classify_ri_subtype(const ContentElementValue& value);

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

enum class RecordStatus {
    Draft,
    Published,
    Superseded,
    Withdrawn,
};

enum class RelationKind {
    PreviousVersionOf,
    TailoringOf,
    ContainerMemberOf,
    Supersedes,
    RequiresRI,
};

struct RecordRelation {
    RelationKind relation = RelationKind::PreviousVersionOf;
    std::string record_id;
    bool operator==(const RecordRelation&) const = default;
};

/// One registry entry describing a format or format tailoring.
struct RIRecord {
    std::string record_id;
    int version = 0; // assigned by the store, monotonically increasing
    RecordStatus status = RecordStatus::Draft;
    std::string format_name;
    std::string format_version_label;
    std::set<RISubtype> ri_subtype_tags;
    std::vector<ContentElementValue> elements;
    std::vector<RecordRelation> related_records;
    std::string created;  // RFC 3339 UTC
    std::string modified; // RFC 3339 UTC
    bool operator==(const RIRecord&) const = default;

    /// First value for the given element id, if any.
    const ContentElementValue* find_element(int element_id) const;
};

/// A testable characteristic of an information object that must hold over time.
struct SignificantProperty {
    std::string property_id;
    std::string name;
    std::string statement;
    std::string assessment_hint;
    /// Record ids and/or package object identifiers ("aip:<aip-id>/<path>").
    std::vector<std::string> applies_to;
    bool operator==(const SignificantProperty&) const = default;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct Violation {
    std::optional<int> element_id;          // set for element-level violations
    std::optional<RecordRelation> relation; // set for relation-level violations
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

/// Checks a record against the element schema. Publication-level checks
/// (element 1 present, no dangling relations against existing_ids) apply only
/// when status == Published. Violations are data, not failures.
ValidationReport validate_record(const RIRecord& record,
                                 const std::vector<ContentElementDef>& defs,
                                 const std::set<std::string>& existing_ids);

/// Validates a significant property (non-empty statement; non-empty applies_to).
ValidationReport validate_property(const SignificantProperty& property);

// ---------------------------------------------------------------------------
// Enum spellings (used in JSON and on the CLI)
// ---------------------------------------------------------------------------

std::string to_string(BimcoreCategory c);
std::string to_string(ValueKind k);
std::string to_string(ContextKind k);
std::string to_string(RISubtype s);
std::string to_string(RecordStatus s);
std::string to_string(RelationKind r);

BimcoreCategory category_from_string(const std::string& s);
ValueKind value_kind_from_string(const std::string& s);
ContextKind context_kind_from_string(const std::string& s);
RISubtype ri_subtype_from_string(const std::string& s);
RecordStatus record_status_from_string(const std::string& s);
RelationKind relation_kind_from_string(const std::string& s);

/// Human-readable single-line text of a payload (consumer renderings, CLI).
std::string display_text(const ElementPayload& payload);

/// Current UTC time as an RFC 3339 string with second precision.
std::string now_rfc3339();

/// True if id is usable as a store key (safe as a directory name).
bool is_valid_record_id(const std::string& id);

} // namespace bimcore
