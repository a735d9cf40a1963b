#include "bimcore/json_io.hpp"

#include "bimcore/errors.hpp"

#include <fstream>
#include <random>

namespace bimcore {

namespace {

std::string get_string(const json& j, const char* key, bool required = true) {
    if (auto it = j.find(key); it != j.end()) return it->get<std::string>();
    if (required) throw ParseError(std::string("missing field \"") + key + "\"", 0);
    return {};
}

} // namespace

void to_json(json& j, const FixityEntry& e) {
    j = json{{"path", e.path}, {"sha256", e.sha256}};
}

void from_json(const json& j, FixityEntry& e) {
    e.path = get_string(j, "path");
    e.sha256 = get_string(j, "sha256");
}

// ---------------------------------------------------------------------------
// Model types
// ---------------------------------------------------------------------------

void to_json(json& j, const ContextEntry& e) {
    j = json{{"entry_id", e.entry_id}, {"kind", to_string(e.kind)}};
    if (const auto* text = std::get_if<std::string>(&e.body)) {
        j["body"] = *text;
    } else {
        const auto& link = std::get<ExternalLink>(e.body);
        json b{{"url", link.url}};
        if (!link.title.empty()) b["title"] = link.title;
        j["body"] = b;
    }
    if (!e.provenance_note.empty()) j["provenance_note"] = e.provenance_note;
}

void from_json(const json& j, ContextEntry& e) {
    e.entry_id = get_string(j, "entry_id");
    e.kind = context_kind_from_string(get_string(j, "kind"));
    const json& b = j.at("body");
    if (b.is_string()) {
        e.body = b.get<std::string>();
    } else {
        ExternalLink link;
        link.url = get_string(b, "url");
        link.title = get_string(b, "title", false);
        e.body = link;
    }
    e.provenance_note = get_string(j, "provenance_note", false);
}

void to_json(json& j, const ContentElementDef& d) {
    j = json{{"id", d.id},
             {"category", to_string(d.category)},
             {"name", d.name},
             {"value_kind", to_string(d.value_kind)},
             {"repeatable", d.repeatable},
             {"required_for_publication", d.required_for_publication}};
}

namespace {

json payload_to_json(const ElementPayload& payload) {
    struct Visitor {
        json operator()(const TextPayload& p) const {
            return json{{"kind", "text"}, {"text", p.text}};
        }
        json operator()(const StructuredReference& p) const {
            return json{{"kind", "structured-reference"}, {"label", p.label}, {"target", p.target}};
        }
        json operator()(const ExternalLink& p) const {
            json j{{"kind", "external-link"}, {"url", p.url}};
            if (!p.title.empty()) j["title"] = p.title;
            return j;
        }
        json operator()(const ToolDescription& p) const {
            json j{{"kind", "tool-description"},
                   {"tool_name", p.tool_name},
                   {"description", p.description}};
            if (!p.availability.empty()) j["availability"] = p.availability;
            return j;
        }
        json operator()(const ContextEntry& p) const {
            return json{{"kind", "context-entry"}, {"entry", p}};
        }
    };
    return std::visit(Visitor{}, payload);
}

ElementPayload payload_from_json(const json& j) {
    const ValueKind kind = value_kind_from_string(get_string(j, "kind"));
    switch (kind) {
    case ValueKind::Text: {
        return TextPayload{get_string(j, "text")};
    }
    case ValueKind::StructuredReference: {
        return StructuredReference{get_string(j, "label"), get_string(j, "target")};
    }
    case ValueKind::ExternalLink: {
        return ExternalLink{get_string(j, "url"), get_string(j, "title", false)};
    }
    case ValueKind::ToolDescription: {
        return ToolDescription{get_string(j, "tool_name"), get_string(j, "description"),
                               get_string(j, "availability", false)};
    }
    case ValueKind::ContextEntry: {
        return j.at("entry").get<ContextEntry>();
    }
    }
    throw ParseError("unknown payload kind", 0);
}

} // namespace

void to_json(json& j, const ContentElementValue& v) {
    j = json{{"element_id", v.element_id}, {"payload", payload_to_json(v.payload)}};
    if (!v.language.empty()) j["language"] = v.language;
    if (v.source_citation) j["source_citation"] = *v.source_citation;
}

void from_json(const json& j, ContentElementValue& v) {
    v.element_id = j.at("element_id").get<int>();
    v.payload = payload_from_json(j.at("payload"));
    v.language = get_string(j, "language", false);
    if (auto it = j.find("source_citation"); it != j.end())
        v.source_citation = it->get<std::string>();
    else
        v.source_citation.reset();
}

void to_json(json& j, const RecordRelation& r) {
    j = json{{"relation", to_string(r.relation)}, {"record_id", r.record_id}};
}

void from_json(const json& j, RecordRelation& r) {
    r.relation = relation_kind_from_string(get_string(j, "relation"));
    r.record_id = get_string(j, "record_id");
}

void to_json(json& j, const RIRecord& r) {
    json tags = json::array();
    for (const auto& t : r.ri_subtype_tags) tags.push_back(to_string(t));
    j = json{{"record_id", r.record_id},
             {"version", r.version},
             {"status", to_string(r.status)},
             {"format_name", r.format_name},
             {"format_version_label", r.format_version_label},
             {"ri_subtype_tags", tags},
             {"elements", r.elements},
             {"related_records", r.related_records},
             {"created", r.created},
             {"modified", r.modified}};
}

void from_json(const json& j, RIRecord& r) {
    r.record_id = get_string(j, "record_id");
    r.version = j.value("version", 0);
    r.status = record_status_from_string(get_string(j, "status"));
    r.format_name = get_string(j, "format_name", false);
    r.format_version_label = get_string(j, "format_version_label", false);
    r.ri_subtype_tags.clear();
    if (auto it = j.find("ri_subtype_tags"); it != j.end())
        for (const auto& t : *it) r.ri_subtype_tags.insert(ri_subtype_from_string(t));
    r.elements = j.value("elements", std::vector<ContentElementValue>{});
    r.related_records = j.value("related_records", std::vector<RecordRelation>{});
    r.created = get_string(j, "created", false);
    r.modified = get_string(j, "modified", false);
}

void to_json(json& j, const SignificantProperty& p) {
    j = json{{"property_id", p.property_id},
             {"name", p.name},
             {"statement", p.statement},
             {"assessment_hint", p.assessment_hint},
             {"applies_to", p.applies_to}};
}

void from_json(const json& j, SignificantProperty& p) {
    p.property_id = get_string(j, "property_id");
    p.name = get_string(j, "name", false);
    p.statement = get_string(j, "statement", false);
    p.assessment_hint = get_string(j, "assessment_hint", false);
    p.applies_to = j.value("applies_to", std::vector<std::string>{});
}

void to_json(json& j, const Violation& v) {
    j = json{{"message", v.message}};
    if (v.element_id) j["element_id"] = *v.element_id;
    if (v.relation) j["relation"] = *v.relation;
}

void to_json(json& j, const ValidationReport& r) {
    j = json{{"valid", r.ok()}, {"violations", r.violations}};
}

void to_json(json& j, const CheckResult& c) {
    j = json{{"check", c.check}, {"passed", c.passed}};
    if (!c.detail.empty()) j["detail"] = c.detail;
    if (c.offset) j["offset"] = *c.offset;
}

void to_json(json& j, const VerificationReport& r) {
    j = json{{"all_passed", r.all_passed()}, {"checks", r.checks}};
}

// ---------------------------------------------------------------------------
// Canonical text form and file I/O
// ---------------------------------------------------------------------------

std::string canonical_dump(const json& j) { return j.dump(2) + "\n"; }

json parse_json(const std::string& text, const std::string& context) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(context + ": " + e.what(), e.byte);
    }
}

json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StoreError("cannot read " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_json(text, path.string());
}

void store_json_file(const std::filesystem::path& path, const json& j) {
    namespace fs = std::filesystem;
    static std::mt19937_64 rng{std::random_device{}()};
    const fs::path tmp =
        path.parent_path() / (path.filename().string() + ".tmp" + std::to_string(rng()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw StoreError("cannot write " + tmp.string());
        out << canonical_dump(j);
        if (!out.flush()) throw StoreError("short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw StoreError("cannot replace " + path.string());
    }
}

} // namespace bimcore
