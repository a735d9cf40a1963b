#include "bimcore/model.hpp"

#include "bimcore/errors.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <ctime>
#include <map>

namespace bimcore {

BimcoreCategory category_of_element(int element_id) {
    if (element_id >= 1 && element_id <= 15) return BimcoreCategory::StructuralSemantic;
    if (element_id >= 16 && element_id <= 18) return BimcoreCategory::Tooling;
    if (element_id >= 19 && element_id <= 23) return BimcoreCategory::Context;
    throw ContractViolation("element id out of range: " + std::to_string(element_id));
}

namespace {

ContentElementDef def(int id, const char* name, ValueKind kind, bool repeatable) {
    ContentElementDef d;
    d.id = id;
    d.category = category_of_element(id);
    d.name = name;
    d.value_kind = kind;
    d.repeatable = repeatable;
    d.required_for_publication = (id == 1);
    return d;
}

std::vector<ContentElementDef> make_defs() {
    using VK = ValueKind;
    std::vector<ContentElementDef> defs;
    defs.reserve(kElementCount);
    // Structural and semantic features (1-15)
    defs.push_back(def(1, "Name, identifier and classifications", VK::Text, false));
    defs.push_back(def(2, "Format version", VK::Text, false));
    defs.push_back(def(3, "References to existing registries", VK::ExternalLink, true));
    defs.push_back(def(4, "Forward and backward compatibility", VK::Text, true));
    defs.push_back(def(5, "Openness and specification availability", VK::Text, false));
    defs.push_back(def(6, "Rights and intellectual property", VK::Text, true));
    defs.push_back(def(7, "Syntax and semantics", VK::Text, true));
    defs.push_back(def(8, "Encoding of fundamental elements", VK::Text, true));
    defs.push_back(def(9, "Compression, data reduction and encryption", VK::Text, true));
    defs.push_back(def(10, "References to external standards", VK::ExternalLink, true));
    defs.push_back(def(11, "Self-documentation capabilities", VK::Text, true));
    defs.push_back(def(12, "Resolvability of external references", VK::StructuredReference, true));
    defs.push_back(def(13, "Software and hardware dependencies", VK::Text, true));
    defs.push_back(def(14, "Tailoring options", VK::Text, true));
    defs.push_back(def(15, "Background and fundamentals", VK::Text, true));
    // Tools for file format handling (16-18)
    defs.push_back(def(16, "Format recognition tools", VK::ToolDescription, true));
    defs.push_back(def(17, "Format verification tools", VK::ToolDescription, true));
    defs.push_back(def(18, "Content inspection and presentation tools", VK::ToolDescription, true));
    // Contexts (19-23)
    defs.push_back(def(19, "Contexts of origin and significant properties", VK::ContextEntry, true));
    defs.push_back(def(20, "Building-specific context", VK::ContextEntry, true));
    defs.push_back(def(21, "Use-case repositories", VK::ExternalLink, true));
    defs.push_back(def(22, "Acceptance and frequency of use", VK::ContextEntry, true));
    defs.push_back(def(23, "Background sources", VK::ExternalLink, true));
    return defs;
}

} // namespace

const std::vector<ContentElementDef>& builtin_element_defs() {
    static const std::vector<ContentElementDef> defs = make_defs();
    return defs;
}

int element_of_context_kind(ContextKind kind) {
    switch (kind) {
    case ContextKind::OriginContext: return 19;
    case ContextKind::BuildingSpecific: return 20;
    case ContextKind::ExternalUseCaseRepo: return 21;
    case ContextKind::AcceptanceProfile: return 22;
    case ContextKind::Background: return 23;
    }
    throw ContractViolation("unknown context kind");
}

ValueKind kind_of_payload(const ElementPayload& payload) {
    struct Visitor {
        ValueKind operator()(const TextPayload&) const { return ValueKind::Text; }
        ValueKind operator()(const StructuredReference&) const { return ValueKind::StructuredReference; }
        ValueKind operator()(const ExternalLink&) const { return ValueKind::ExternalLink; }
        ValueKind operator()(const ToolDescription&) const { return ValueKind::ToolDescription; }
        ValueKind operator()(const ContextEntry&) const { return ValueKind::ContextEntry; }
    };
    return std::visit(Visitor{}, payload);
}

std::set<RISubtype> classify_ri_subtype(const ContentElementValue& value) {
    const int id = value.element_id;
    if (id < 1 || id > kElementCount)
        throw ContractViolation("element id out of range: " + std::to_string(id));
    switch (id) {
    case 7: return {RISubtype::StructureInformation, RISubtype::SemanticInformation};
    case 8: return {RISubtype::StructureInformation};
    case 9: return {RISubtype::StructureInformation};
    case 12: return {RISubtype::SemanticInformation};
    case 15: return {RISubtype::OtherRepresentationInformation};
    case 16: return {RISubtype::OtherRepresentationInformation};
    case 17: return {RISubtype::OtherRepresentationInformation};
    case 18: return {RISubtype::AccessSoftware};
    default: return {};
    }
}

const ContentElementValue* RIRecord::find_element(int element_id) const {
    for (const auto& v : elements)
        if (v.element_id == element_id) return &v;
    return nullptr;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace {

Violation element_violation(int id, std::string message) {
    Violation v;
    v.element_id = id;
    v.message = std::move(message);
    return v;
}

Violation relation_violation(const RecordRelation& rel, std::string message) {
    Violation v;
    v.relation = rel;
    v.message = std::move(message);
    return v;
}

Violation record_violation(std::string message) {
    Violation v;
    v.message = std::move(message);
    return v;
}

} // namespace

bool is_valid_record_id(const std::string& id) {
    if (id.empty() || id.size() > 200) return false;
    bool non_dot = false;
    for (char c : id) {
        const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' ||
                        c == '~' || c == '-';
        if (!ok) return false;
        if (c != '.') non_dot = true;
    }
    return non_dot; // rejects "." and ".."
}

ValidationReport validate_record(const RIRecord& record,
                                 const std::vector<ContentElementDef>& defs,
                                 const std::set<std::string>& existing_ids) {
    ValidationReport report;
    auto& out = report.violations;

    if (!is_valid_record_id(record.record_id))
        out.push_back(record_violation("record_id must match [A-Za-z0-9._~-]{1,200}"));

    std::map<int, int> counts;
    for (const auto& value : record.elements) {
        const int id = value.element_id;
        if (id < 1 || id > static_cast<int>(defs.size())) {
            out.push_back(element_violation(id, "unknown element id"));
            continue;
        }
        const ContentElementDef& d = defs[static_cast<std::size_t>(id - 1)];
        const ValueKind actual = kind_of_payload(value.payload);
        if (actual != d.value_kind) {
            out.push_back(element_violation(
                id, "payload kind " + to_string(actual) + " does not match element kind " +
                        to_string(d.value_kind)));
        }
        if (actual == ValueKind::ContextEntry) {
            const auto& entry = std::get<ContextEntry>(value.payload);
            if (element_of_context_kind(entry.kind) != id) {
                out.push_back(element_violation(
                    id, "context entry kind " + to_string(entry.kind) +
                            " belongs to element " +
                            std::to_string(element_of_context_kind(entry.kind))));
            }
        }
        if (++counts[id] == 2 && !d.repeatable)
            out.push_back(element_violation(id, "element is not repeatable"));
    }

    if (record.status == RecordStatus::Published) {
        if (record.find_element(1) == nullptr)
            out.push_back(element_violation(
                1, "published record requires element 1 (name, identifier and classifications)"));
        for (const auto& rel : record.related_records) {
            if (!existing_ids.contains(rel.record_id))
                out.push_back(relation_violation(
                    rel, "dangling reference: record \"" + rel.record_id + "\" does not exist"));
        }
    }
    return report;
}

ValidationReport validate_property(const SignificantProperty& property) {
    ValidationReport report;
    if (!is_valid_record_id(property.property_id))
        report.violations.push_back(
            record_violation("property_id must match [A-Za-z0-9._~-]{1,200}"));
    if (property.statement.empty())
        report.violations.push_back(record_violation("statement must be non-empty"));
    if (property.applies_to.empty())
        report.violations.push_back(record_violation("applies_to must be non-empty"));
    return report;
}

// ---------------------------------------------------------------------------
// Enum spellings
// ---------------------------------------------------------------------------

namespace {

template <typename E>
E from_string_impl(const std::map<std::string, E>& table, const std::string& s, const char* what) {
    auto it = table.find(s);
    if (it == table.end()) throw ContractViolation(std::string("unknown ") + what + ": " + s);
    return it->second;
}

const std::map<std::string, BimcoreCategory> kCategories = {
    {"structural-semantic", BimcoreCategory::StructuralSemantic},
    {"tooling", BimcoreCategory::Tooling},
    {"context", BimcoreCategory::Context},
};

const std::map<std::string, ValueKind> kValueKinds = {
    {"text", ValueKind::Text},
    {"structured-reference", ValueKind::StructuredReference},
    {"external-link", ValueKind::ExternalLink},
    {"tool-description", ValueKind::ToolDescription},
    {"context-entry", ValueKind::ContextEntry},
};

const std::map<std::string, ContextKind> kContextKinds = {
    {"origin-context", ContextKind::OriginContext},
    {"building-specific", ContextKind::BuildingSpecific},
    {"external-use-case-repo", ContextKind::ExternalUseCaseRepo},
    {"acceptance-profile", ContextKind::AcceptanceProfile},
    {"background", ContextKind::Background},
};

const std::map<std::string, RISubtype> kSubtypes = {
    {"structure-information", RISubtype::StructureInformation},
    {"semantic-information", RISubtype::SemanticInformation},
    {"other-representation-information", RISubtype::OtherRepresentationInformation},
    {"representation-rendering-software", RISubtype::RepresentationRenderingSoftware},
    {"access-software", RISubtype::AccessSoftware},
};

const std::map<std::string, RecordStatus> kStatuses = {
    {"draft", RecordStatus::Draft},
    {"published", RecordStatus::Published},
    {"superseded", RecordStatus::Superseded},
    {"withdrawn", RecordStatus::Withdrawn},
};

const std::map<std::string, RelationKind> kRelations = {
    {"previous-version-of", RelationKind::PreviousVersionOf},
    {"tailoring-of", RelationKind::TailoringOf},
    {"container-member-of", RelationKind::ContainerMemberOf},
    {"supersedes", RelationKind::Supersedes},
    {"requires-ri", RelationKind::RequiresRI},
};

template <typename E>
std::string to_string_impl(const std::map<std::string, E>& table, E value) {
    for (const auto& [name, v] : table)
        if (v == value) return name;
    throw ContractViolation("unmapped enum value");
}

} // namespace

std::string to_string(BimcoreCategory c) { return to_string_impl(kCategories, c); }
std::string to_string(ValueKind k) { return to_string_impl(kValueKinds, k); }
std::string to_string(ContextKind k) { return to_string_impl(kContextKinds, k); }
std::string to_string(RISubtype s) { return to_string_impl(kSubtypes, s); }
std::string to_string(RecordStatus s) { return to_string_impl(kStatuses, s); }
std::string to_string(RelationKind r) { return to_string_impl(kRelations, r); }

BimcoreCategory category_from_string(const std::string& s) {
    return from_string_impl(kCategories, s, "category");
}
ValueKind value_kind_from_string(const std::string& s) {
    return from_string_impl(kValueKinds, s, "value kind");
}
ContextKind context_kind_from_string(const std::string& s) {
    return from_string_impl(kContextKinds, s, "context kind");
}
RISubtype ri_subtype_from_string(const std::string& s) {
    return from_string_impl(kSubtypes, s, "RI subtype");
}
RecordStatus record_status_from_string(const std::string& s) {
    return from_string_impl(kStatuses, s, "record status");
}
RelationKind relation_kind_from_string(const std::string& s) {
    return from_string_impl(kRelations, s, "relation kind");
}

std::string display_text(const ElementPayload& payload) {
    struct Visitor {
        std::string operator()(const TextPayload& p) const { return p.text; }
        std::string operator()(const StructuredReference& p) const {
            return p.label.empty() ? p.target : p.label + " -> " + p.target;
        }
        std::string operator()(const ExternalLink& p) const {
            return p.title.empty() ? p.url : p.title + " <" + p.url + ">";
        }
        std::string operator()(const ToolDescription& p) const {
            std::string out = p.tool_name;
            if (!p.description.empty()) out += ": " + p.description;
            if (!p.availability.empty()) out += " [" + p.availability + "]";
            return out;
        }
        std::string operator()(const ContextEntry& p) const {
            std::string out = "[" + to_string(p.kind) + "] ";
            if (const auto* text = std::get_if<std::string>(&p.body))
                out += *text;
            else {
                const auto& link = std::get<ExternalLink>(p.body);
                out += link.title.empty() ? link.url : link.title + " <" + link.url + ">";
            }
            if (!p.provenance_note.empty()) out += " (provenance: " + p.provenance_note + ")";
            return out;
        }
    };
    return std::visit(Visitor{}, payload);
}

std::string now_rfc3339() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace bimcore
