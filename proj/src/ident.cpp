#include "bimcore/ident.hpp"

#include "bimcore/errors.hpp"
#include "bimcore/version.hpp"
#include "bytesource.hpp"
#include "zipscan.hpp"

#include <algorithm>
#include <cctype>
#include <map>

namespace bimcore {

namespace {

using detail::ByteSource;
using detail::FileSource;
using detail::MemorySource;

constexpr std::size_t kHeadWindow = 64 * 1024;
constexpr std::size_t kInnerHead = 4096;
constexpr std::size_t kHeuristicWindow = 64;
constexpr std::size_t kHeuristicMinBytes = 4;

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::uint8_t> ascii_bytes(const char* s) {
    std::vector<std::uint8_t> out;
    for (; *s; ++s) out.push_back(static_cast<std::uint8_t>(*s));
    return out;
}

FormatSignature make_signature(const char* id, std::vector<std::uint8_t> magic,
                               std::vector<std::string> extensions, int priority) {
    FormatSignature sig;
    sig.signature_id = id;
    sig.magic = std::move(magic);
    sig.extension_hints = std::move(extensions);
    sig.priority = priority;
    return sig;
}

std::string extension_of(const std::string& name_hint) {
    const std::size_t slash = name_hint.find_last_of("/\\");
    const std::string base = slash == std::string::npos ? name_hint : name_hint.substr(slash + 1);
    const std::size_t dot = base.find_last_of('.');
    if (dot == std::string::npos || dot + 1 == base.size()) return {};
    return lower(base.substr(dot + 1));
}

bool magic_matches(const ByteSource& src, const FormatSignature& sig, ByteRange& range) {
    if (sig.magic.empty()) return false;
    std::int64_t pos = sig.offset;
    if (pos < 0) pos += static_cast<std::int64_t>(src.size());
    if (pos < 0) return false;
    const std::uint64_t at = static_cast<std::uint64_t>(pos);
    if (at + sig.magic.size() > src.size()) return false;
    const std::vector<std::uint8_t> got = src.read(at, sig.magic.size());
    if (got.size() != sig.magic.size()) return false;
    for (std::size_t i = 0; i < sig.magic.size(); ++i) {
        const std::uint8_t m = sig.mask ? (*sig.mask)[i] : 0xFF;
        if ((got[i] & m) != (sig.magic[i] & m)) return false;
    }
    range = {at, sig.magic.size()};
    return true;
}

/// Printable-ASCII head check backing extension heuristics (plot files are
/// streams of ASCII commands; binaries fail this).
bool printable_head(const ByteSource& src) {
    const std::vector<std::uint8_t> head =
        src.read(0, std::min<std::uint64_t>(src.size(), kHeuristicWindow));
    if (head.size() < kHeuristicMinBytes) return false;
    for (std::uint8_t c : head) {
        const bool ok = c == 0x09 || c == 0x0A || c == 0x0D || c == 0x1B ||
                        (c >= 0x20 && c <= 0x7E);
        if (!ok) return false;
    }
    return true;
}

/// Root element name of an XML document head, namespace prefix stripped.
std::optional<std::string> sniff_xml_root(const ByteSource& src) {
    std::vector<std::uint8_t> head =
        src.read(0, std::min<std::uint64_t>(src.size(), kHeadWindow));
    std::size_t pos = 0;
    // UTF-8 BOM
    if (head.size() >= 3 && head[0] == 0xEF && head[1] == 0xBB && head[2] == 0xBF) pos = 3;
    while (pos < head.size()) {
        const std::uint8_t c = head[pos];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            ++pos;
            continue;
        }
        if (c != '<') return std::nullopt;
        if (pos + 1 >= head.size()) return std::nullopt;
        const std::uint8_t next = head[pos + 1];
        if (next == '?') {
            // prolog / processing instruction: skip to "?>"
            std::size_t end = pos + 2;
            while (end + 1 < head.size() && !(head[end] == '?' && head[end + 1] == '>')) ++end;
            if (end + 1 >= head.size()) return std::nullopt;
            pos = end + 2;
            continue;
        }
        if (next == '!') {
            if (pos + 3 < head.size() && head[pos + 2] == '-' && head[pos + 3] == '-') {
                // comment: skip to "-->"
                std::size_t end = pos + 4;
                while (end + 2 < head.size() &&
                       !(head[end] == '-' && head[end + 1] == '-' && head[end + 2] == '>'))
                    ++end;
                if (end + 2 >= head.size()) return std::nullopt;
                pos = end + 3;
                continue;
            }
            // DOCTYPE: naive skip to '>' (good enough for sniffing)
            std::size_t end = pos + 2;
            while (end < head.size() && head[end] != '>') ++end;
            if (end >= head.size()) return std::nullopt;
            pos = end + 1;
            continue;
        }
        // root start tag
        std::size_t end = pos + 1;
        std::string name;
        while (end < head.size()) {
            const std::uint8_t t = head[end];
            if (t == ' ' || t == '\t' || t == '\r' || t == '\n' || t == '>' || t == '/') break;
            name.push_back(static_cast<char>(t));
            ++end;
        }
        if (name.empty()) return std::nullopt;
        const std::size_t colon = name.find(':');
        if (colon != std::string::npos) name = name.substr(colon + 1);
        return name;
    }
    return std::nullopt;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t end = s.find(sep, start);
        out.push_back(s.substr(start, end - start));
        if (end == std::string::npos) return out;
        start = end + 1;
    }
}

const FormatSignature* find_signature(const std::vector<FormatSignature>& sigs,
                                      const std::string& id) {
    for (const auto& s : sigs)
        if (s.signature_id == id) return &s;
    return nullptr;
}

/// Evaluates a container rule. Returns the evidence note when the rule fires,
/// std::nullopt when the container is readable but the rule does not fire.
/// Structural damage propagates as ParseError.
std::optional<std::string> resolve_container(const ByteSource& src, const ContainerRule& rule,
                                             const std::vector<FormatSignature>& signatures) {
    if (rule.container_kind == "zip") {
        const FormatSignature* inner = find_signature(signatures, rule.inner);
        if (inner == nullptr)
            throw ContractViolation("container rule references unknown signature \"" +
                                    rule.inner + "\"");
        for (const auto& entry : detail::list_zip_entries(src)) {
            std::vector<std::uint8_t> head;
            try {
                head = detail::read_zip_entry_head(src, entry, kInnerHead);
            } catch (const ParseError&) {
                continue; // one unreadable entry does not kill the scan
            }
            MemorySource head_src(head);
            ByteRange range;
            if (magic_matches(head_src, *inner, range))
                return "container entry \"" + entry.name + "\" matches " + inner->signature_id;
        }
        return std::nullopt;
    }
    if (rule.container_kind == "xml") {
        const std::optional<std::string> root = sniff_xml_root(src);
        if (!root) return std::nullopt;
        const std::string got = lower(*root);
        for (const auto& accepted : split(rule.inner, '|'))
            if (lower(accepted) == got) return "root element <" + *root + ">";
        return std::nullopt;
    }
    throw ContractViolation("unknown container kind \"" + rule.container_kind + "\"");
}

IdentificationResult identify_source(const ByteSource& src, const std::string& name_hint,
                                     const std::vector<FormatSignature>& signatures) {
    IdentificationResult result;
    const std::string ext = extension_of(name_hint);

    std::vector<std::pair<const FormatSignature*, SignatureMatch>> magic_hits;
    for (const auto& sig : signatures) {
        ByteRange range;
        if (!magic_matches(src, sig, range)) continue;
        SignatureMatch match;
        match.signature_id = sig.signature_id;
        match.evidence.matched_ranges.push_back(range);
        match.evidence.extension_agreement =
            !ext.empty() && std::count(sig.extension_hints.begin(), sig.extension_hints.end(), ext);
        if (sig.container_rule) {
            try {
                const auto note = resolve_container(src, *sig.container_rule, signatures);
                if (!note) continue; // readable container, rule did not fire
                match.evidence.note = *note;
            } catch (const ParseError& e) {
                result.warnings.push_back("container rule for " + sig.signature_id +
                                          " skipped: " + e.what());
                continue; // outer (rule-free) signatures still report
            }
        }
        magic_hits.emplace_back(&sig, std::move(match));
    }

    if (!magic_hits.empty()) {
        std::sort(magic_hits.begin(), magic_hits.end(), [](const auto& a, const auto& b) {
            if (a.first->priority != b.first->priority) return a.first->priority > b.first->priority;
            return a.first->signature_id < b.first->signature_id;
        });
        result.verdict = Verdict::Identified;
        for (auto& [sig, match] : magic_hits) result.matches.push_back(std::move(match));
        return result;
    }

    // No magic evidence: extension hints can still suggest a format. Pure
    // heuristic signatures (empty magic) additionally require an ASCII head.
    if (!ext.empty()) {
        std::vector<const FormatSignature*> hinted;
        for (const auto& sig : signatures) {
            if (!std::count(sig.extension_hints.begin(), sig.extension_hints.end(), ext)) continue;
            if (sig.magic.empty() && !printable_head(src)) continue;
            hinted.push_back(&sig);
        }
        std::sort(hinted.begin(), hinted.end(), [](const auto* a, const auto* b) {
            if (a->priority != b->priority) return a->priority > b->priority;
            return a->signature_id < b->signature_id;
        });
        for (const auto* sig : hinted) {
            SignatureMatch match;
            match.signature_id = sig->signature_id;
            match.evidence.extension_agreement = true;
            match.evidence.note = sig->magic.empty() ? "extension hint, ASCII command head"
                                                     : "extension hint only";
            result.matches.push_back(std::move(match));
        }
        if (!result.matches.empty()) {
            result.verdict = Verdict::Tentative;
            return result;
        }
    }

    result.verdict = Verdict::Unknown;
    return result;
}

} // namespace

// ---------------------------------------------------------------------------
// Signature set
// ---------------------------------------------------------------------------

const std::vector<FormatSignature>& builtin_signatures() {
    static const std::vector<FormatSignature> sigs = [] {
        std::vector<FormatSignature> out;

        // ISO 10303-21 clear text starts with this exact token.
        out.push_back(make_signature("STEP-SPF", ascii_bytes("ISO-10303-21;"),
                                     {"ifc", "stp", "step", "p21", "spf"}, 100));

        // ifcZIP: a ZIP archive whose first matching entry is STEP clear text.
        {
            FormatSignature sig = make_signature("ifcZIP", {0x50, 0x4B, 0x03, 0x04},
                                                 {"ifczip", "zip"}, 90);
            sig.container_rule = ContainerRule{"zip", "STEP-SPF"};
            out.push_back(std::move(sig));
        }

        // ifcXML: an XML document whose root element is one of the IFC roots
        // (ifcXML for IFC4, iso_10303_28 for IFC2X3).
        {
            FormatSignature sig = make_signature("ifcXML", ascii_bytes("<?xml"),
                                                 {"ifcxml", "xml"}, 85);
            sig.container_rule = ContainerRule{"xml", "ifcXML|iso_10303_28"};
            out.push_back(std::move(sig));
        }

        // TIFF 6.0, big- and little-endian byte-order marks.
        out.push_back(make_signature("TIFF-BE", {0x4D, 0x4D, 0x00, 0x2A}, {"tif", "tiff"}, 71));
        out.push_back(make_signature("TIFF-LE", {0x49, 0x49, 0x2A, 0x00}, {"tif", "tiff"}, 70));

        out.push_back(make_signature("PDF", ascii_bytes("%PDF-"), {"pdf"}, 60));

        // Outer fallbacks when the container rules above do not fire.
        out.push_back(make_signature("ZIP", {0x50, 0x4B, 0x03, 0x04}, {"zip"}, 50));
        out.push_back(make_signature("XML", ascii_bytes("<?xml"), {"xml"}, 40));

        // HP-GL plot files have no magic; extension plus ASCII-command head
        // gives a tentative verdict at best.
        out.push_back(make_signature("HPGL-PLT", {}, {"plt", "hpgl", "hpg", "plo"}, 10));

        validate_signature_set(out);
        return out;
    }();
    return sigs;
}

void validate_signature_set(const std::vector<FormatSignature>& signatures) {
    std::map<std::string, const FormatSignature*> by_id;
    for (const auto& sig : signatures) {
        if (sig.signature_id.empty()) throw ContractViolation("signature with empty id");
        if (!by_id.emplace(sig.signature_id, &sig).second)
            throw ContractViolation("duplicate signature id \"" + sig.signature_id + "\"");
        if (sig.mask && sig.mask->size() != sig.magic.size())
            throw ContractViolation("mask length differs from magic length in \"" +
                                    sig.signature_id + "\"");
        if (sig.container_rule) {
            const auto& rule = *sig.container_rule;
            if (rule.container_kind != "zip" && rule.container_kind != "xml")
                throw ContractViolation("unknown container kind \"" + rule.container_kind +
                                        "\" in \"" + sig.signature_id + "\"");
            if (rule.container_kind == "zip" && find_signature(signatures, rule.inner) == nullptr)
                throw ContractViolation("container rule in \"" + sig.signature_id +
                                        "\" references unknown signature \"" + rule.inner + "\"");
        }
    }
    // Priorities must break ties among signatures whose magic overlaps.
    for (std::size_t i = 0; i < signatures.size(); ++i) {
        for (std::size_t j = i + 1; j < signatures.size(); ++j) {
            const auto& a = signatures[i];
            const auto& b = signatures[j];
            if (a.magic.empty() || b.magic.empty() || a.offset != b.offset) continue;
            const std::size_t n = std::min(a.magic.size(), b.magic.size());
            if (std::equal(a.magic.begin(), a.magic.begin() + static_cast<std::ptrdiff_t>(n),
                           b.magic.begin()) &&
                a.priority == b.priority)
                throw ContractViolation("signatures \"" + a.signature_id + "\" and \"" +
                                        b.signature_id +
                                        "\" share a magic prefix but not distinct priorities");
        }
    }
}

namespace {

std::vector<std::uint8_t> hex_to_bytes(const std::string& hex, const std::string& what) {
    if (hex.size() % 2 != 0) throw ParseError("odd hex length in " + what, 0);
    auto nibble = [&](char c) -> std::uint8_t {
        if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
        if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
        if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
        throw ParseError("invalid hex digit in " + what, 0);
    };
    std::vector<std::uint8_t> out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2)
        out.push_back(static_cast<std::uint8_t>((nibble(hex[i]) << 4) | nibble(hex[i + 1])));
    return out;
}

std::string bytes_to_hex(std::span<const std::uint8_t> bytes) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (std::uint8_t b : bytes) {
        out.push_back(hex[b >> 4]);
        out.push_back(hex[b & 0x0F]);
    }
    return out;
}

} // namespace

FormatSignature signature_from_json(const json& j) {
    FormatSignature sig;
    sig.signature_id = j.at("signature_id").get<std::string>();
    sig.target_record_id = j.value("target_record_id", std::string{});
    sig.magic = hex_to_bytes(j.value("magic", std::string{}), "magic of " + sig.signature_id);
    sig.offset = j.value("offset", std::int64_t{0});
    if (auto it = j.find("mask"); it != j.end() && !it->is_null())
        sig.mask = hex_to_bytes(it->get<std::string>(), "mask of " + sig.signature_id);
    sig.extension_hints = j.value("extension_hints", std::vector<std::string>{});
    for (auto& e : sig.extension_hints) e = lower(e);
    if (auto it = j.find("container_rule"); it != j.end() && !it->is_null()) {
        ContainerRule rule;
        rule.container_kind = it->at("container_kind").get<std::string>();
        rule.inner = it->at("inner").get<std::string>();
        sig.container_rule = rule;
    }
    sig.priority = j.value("priority", 0);
    return sig;
}

json signature_to_json(const FormatSignature& sig) {
    json j{{"signature_id", sig.signature_id},
           {"magic", bytes_to_hex(sig.magic)},
           {"offset", sig.offset},
           {"extension_hints", sig.extension_hints},
           {"priority", sig.priority}};
    if (!sig.target_record_id.empty()) j["target_record_id"] = sig.target_record_id;
    if (sig.mask) j["mask"] = bytes_to_hex(*sig.mask);
    if (sig.container_rule)
        j["container_rule"] = json{{"container_kind", sig.container_rule->container_kind},
                                   {"inner", sig.container_rule->inner}};
    return j;
}

std::vector<FormatSignature> load_signature_file(const std::filesystem::path& path) {
    const json doc = load_json_file(path);
    if (!doc.is_array()) throw ParseError("signature file must hold a JSON list", 0);
    std::vector<FormatSignature> sigs = builtin_signatures();
    for (const auto& entry : doc) sigs.push_back(signature_from_json(entry));
    validate_signature_set(sigs);
    return sigs;
}

// ---------------------------------------------------------------------------
// Identification
// ---------------------------------------------------------------------------

IdentificationResult identify_bytes(std::span<const std::uint8_t> data,
                                    const std::string& name_hint,
                                    const std::vector<FormatSignature>& signatures) {
    MemorySource src(data);
    return identify_source(src, name_hint, signatures);
}

IdentificationResult identify_bytes(const std::string& data, const std::string& name_hint,
                                    const std::vector<FormatSignature>& signatures) {
    return identify_bytes(
        std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()), name_hint,
        signatures);
}

IdentificationResult identify_file(const std::filesystem::path& path,
                                   const std::vector<FormatSignature>& signatures) {
    FileSource src(path);
    return identify_source(src, path.filename().string(), signatures);
}

// ---------------------------------------------------------------------------
// Record stubs
// ---------------------------------------------------------------------------

RIRecord suggest_record_stub(const IdentificationResult& result,
                             const std::optional<StepHeader>& header) {
    const SignatureMatch* best = result.best();
    if (result.verdict == Verdict::Unknown || best == nullptr)
        throw ContractViolation("cannot draft a record from an unknown identification");

    RIRecord record;
    std::string id = "draft-" + lower(best->signature_id);
    for (char& c : id) {
        const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
        if (!ok) c = '-';
    }
    record.record_id = id;
    record.status = RecordStatus::Draft;
    record.format_name = best->signature_id;
    record.created = now_rfc3339();
    record.modified = record.created;

    ContentElementValue name_value;
    name_value.element_id = 1;
    name_value.payload = TextPayload{best->signature_id};
    record.elements.push_back(std::move(name_value));

    if (header && !header->file_schema.empty()) {
        record.format_version_label = header->file_schema.front();
        ContentElementValue version_value;
        version_value.element_id = 2;
        version_value.payload = TextPayload{header->file_schema.front()};
        record.elements.push_back(std::move(version_value));
    }

    std::string evidence = "signature " + best->signature_id;
    if (!best->evidence.matched_ranges.empty()) {
        const ByteRange& r = best->evidence.matched_ranges.front();
        evidence += " matched " + std::to_string(r.length) + " bytes at offset " +
                    std::to_string(r.offset);
    } else {
        evidence += " suggested by extension hint";
    }
    if (!best->evidence.note.empty()) evidence += "; " + best->evidence.note;
    evidence += best->evidence.extension_agreement ? "; extension agrees" : "; extension differs";

    ContentElementValue tool_value;
    tool_value.element_id = 16;
    tool_value.payload = ToolDescription{std::string(kToolName) + " identify", evidence,
                                         std::string(kToolName) + " " + kVersion};
    record.elements.push_back(std::move(tool_value));
    return record;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::Identified: return "identified";
    case Verdict::Tentative: return "tentative";
    case Verdict::Unknown: return "unknown";
    }
    throw ContractViolation("unmapped verdict");
}

Verdict verdict_from_string(const std::string& s) {
    if (s == "identified") return Verdict::Identified;
    if (s == "tentative") return Verdict::Tentative;
    if (s == "unknown") return Verdict::Unknown;
    throw ContractViolation("unknown verdict: " + s);
}

void to_json(json& j, const IdentificationResult& r) {
    json matches = json::array();
    for (const auto& m : r.matches) {
        json ranges = json::array();
        for (const auto& range : m.evidence.matched_ranges)
            ranges.push_back(json{{"offset", range.offset}, {"length", range.length}});
        json evidence{{"matched_ranges", ranges},
                      {"extension_agreement", m.evidence.extension_agreement}};
        if (!m.evidence.note.empty()) evidence["note"] = m.evidence.note;
        matches.push_back(json{{"signature_id", m.signature_id}, {"evidence", evidence}});
    }
    j = json{{"verdict", to_string(r.verdict)}, {"matches", matches}, {"warnings", r.warnings}};
}

void from_json(const json& j, IdentificationResult& r) {
    r.verdict = verdict_from_string(j.at("verdict").get<std::string>());
    r.matches.clear();
    for (const auto& m : j.value("matches", json::array())) {
        SignatureMatch match;
        match.signature_id = m.at("signature_id").get<std::string>();
        const json& e = m.at("evidence");
        for (const auto& range : e.value("matched_ranges", json::array()))
            match.evidence.matched_ranges.push_back(
                {range.at("offset").get<std::uint64_t>(), range.at("length").get<std::uint64_t>()});
        match.evidence.extension_agreement = e.value("extension_agreement", false);
        match.evidence.note = e.value("note", std::string{});
        r.matches.push_back(std::move(match));
    }
    r.warnings = j.value("warnings", std::vector<std::string>{});
}

} // namespace bimcore
