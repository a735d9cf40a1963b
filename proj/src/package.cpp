#include "bimcore/package.hpp"

#include "bimcore/errors.hpp"
#include "bimcore/version.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <map>

namespace bimcore {

namespace fs = std::filesystem;

namespace {

const char* kManifestName = "manifest-sha256.txt";
const char* kAipMetadata = "metadata/aip.json";

std::string tool_stamp() { return std::string(kToolName) + " " + kVersion; }

std::string generic_relative(const fs::path& path, const fs::path& base) {
    return fs::relative(path, base).generic_string();
}

std::vector<std::string> collect_files(const fs::path& root) {
    std::vector<std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file()) files.push_back(generic_relative(entry.path(), root));
    std::sort(files.begin(), files.end());
    return files;
}

void copy_payload_file(const fs::path& from, const fs::path& to) {
    fs::create_directories(to.parent_path());
    std::ifstream in(from, std::ios::binary);
    if (!in) throw PackagingError("unreadable payload file: " + from.string());
    std::ofstream out(to, std::ios::binary | std::ios::trunc);
    if (!out) throw PackagingError("cannot write " + to.string());
    out << in.rdbuf();
    if (in.bad() || !out.flush())
        throw PackagingError("copy failed: " + from.string() + " -> " + to.string());
}

/// Latest published version of the given record id, walking back from the
/// newest version.
std::optional<RIRecord> latest_published(const RegistryStore& store, const std::string& id) {
    if (!store.has_record(id)) return std::nullopt;
    for (int v = store.latest_version(id); v >= 1; --v) {
        const RIRecord rec = store.get_record(id, v);
        if (rec.status == RecordStatus::Published) return rec;
    }
    return std::nullopt;
}

/// Record id an identified signature resolves to, if any.
std::optional<std::string> resolve_record_for_signature(const RegistryStore& store,
                                                        const FormatSignature* sig,
                                                        const std::string& signature_id) {
    if (sig != nullptr && !sig->target_record_id.empty())
        if (auto rec = latest_published(store, sig->target_record_id)) return rec->record_id;
    if (auto rec = store.find_published_by_format_name(signature_id)) return rec->record_id;
    return std::nullopt;
}

const FormatSignature* find_signature(const std::vector<FormatSignature>& sigs,
                                      const std::string& id) {
    for (const auto& s : sigs)
        if (s.signature_id == id) return &s;
    return nullptr;
}

void write_aip_metadata(const fs::path& root, const ArchivalPackage& aip) {
    json j{{"aip_id", aip.aip_id},
           {"content_information", aip.content_information},
           {"pdi", aip.pdi},
           {"significant_property_links", aip.significant_property_links}};
    fs::create_directories(root / "metadata");
    store_json_file(root / kAipMetadata, j);
}

std::vector<FixityEntry> build_full_manifest(const fs::path& root) {
    std::vector<FixityEntry> entries;
    for (const auto& rel : collect_files(root)) {
        if (rel == kManifestName) continue;
        entries.push_back({rel, sha256_file(root / rel)});
    }
    return entries;
}

} // namespace

const ObjectInfo* ArchivalPackage::find_object(const std::string& path) const {
    for (const auto& o : content_information)
        if (o.path == path) return &o;
    return nullptr;
}

// ---------------------------------------------------------------------------
// RI closure
// ---------------------------------------------------------------------------

RIClosure compute_ri_closure(const std::vector<std::string>& roots, const RegistryStore& store,
                             const std::set<std::string>& baseline_set) {
    RIClosure closure;
    closure.roots = roots;
    closure.baseline_set = baseline_set;

    for (const auto& root : roots)
        if (!store.has_record(root)) throw NotFoundError("closure root not found: " + root);

    std::deque<std::string> queue(roots.begin(), roots.end());
    std::set<std::string> dangling;
    while (!queue.empty()) {
        const std::string id = queue.front();
        queue.pop_front();
        if (closure.members.contains(id)) continue;
        closure.members.insert(id);
        if (baseline_set.contains(id)) continue; // self-describing: stop here
        const RIRecord rec = store.get_record(id);
        for (const auto& rel : rec.related_records) {
            if (rel.relation != RelationKind::RequiresRI) continue;
            closure.edges.push_back({id, rel.record_id});
            if (store.has_record(rel.record_id)) {
                if (!closure.members.contains(rel.record_id)) queue.push_back(rel.record_id);
            } else {
                dangling.insert(rel.record_id);
            }
        }
    }

    // A member is resolved iff it is baseline or reaches baseline via edges.
    std::map<std::string, std::vector<std::string>> reverse;
    for (const auto& edge : closure.edges) reverse[edge.to].push_back(edge.from);
    std::set<std::string> resolved;
    std::deque<std::string> frontier;
    for (const auto& id : closure.members)
        if (baseline_set.contains(id)) {
            resolved.insert(id);
            frontier.push_back(id);
        }
    while (!frontier.empty()) {
        const std::string id = frontier.front();
        frontier.pop_front();
        for (const auto& from : reverse[id])
            if (closure.members.contains(from) && resolved.insert(from).second)
                frontier.push_back(from);
    }

    for (const auto& id : closure.members)
        if (!resolved.contains(id)) closure.unresolved.insert(id);
    closure.unresolved.insert(dangling.begin(), dangling.end());
    return closure;
}

// ---------------------------------------------------------------------------
// Ingest
// ---------------------------------------------------------------------------

ArchivalPackage ingest(const SubmissionPackage& sip, const RegistryStore& store,
                       const std::vector<FormatSignature>& signatures, const fs::path& aip_root,
                       const IngestOptions& options) {
    if (!fs::is_directory(sip.payload_root))
        throw PackagingError("SIP payload is not a directory: " + sip.payload_root.string());
    const std::vector<std::string> payload_files = collect_files(sip.payload_root);
    if (payload_files.empty())
        throw PackagingError("SIP payload contains no files: " + sip.payload_root.string());
    if (fs::exists(aip_root) && !fs::is_empty(aip_root))
        throw PackagingError("AIP target is not empty: " + aip_root.string());

    // Dangling context links are operator errors; catch them before writing.
    for (const auto& ctx : sip.declared_context)
        if (!ctx.ref.empty() && !store.has_context_entry(ctx.ref))
            throw PackagingError("declared context entry not in registry: " + ctx.ref);

    ArchivalPackage aip;
    aip.root = aip_root;
    aip.aip_id = !options.aip_id.empty() ? options.aip_id
                 : !sip.sip_id.empty()   ? sip.sip_id + "-aip"
                                         : "aip";
    aip.pdi.reference.aip_id = aip.aip_id;
    aip.pdi.context = sip.declared_context;

    fs::create_directories(aip_root / "objects");
    fs::create_directories(aip_root / "metadata");

    const std::set<std::string> baseline = store.baseline_records();
    std::map<std::string, std::set<std::string>> closure_cache; // root record -> members

    for (const auto& rel : payload_files) {
        const fs::path source = sip.payload_root / rel;
        const fs::path target = aip_root / "objects" / rel;
        copy_payload_file(source, target);

        ObjectInfo object;
        object.path = rel;
        object.identification = identify_file(target, signatures);

        std::optional<std::string> record_id;
        if (object.identification.verdict == Verdict::Identified) {
            const std::string& sig_id = object.identification.best()->signature_id;
            record_id =
                resolve_record_for_signature(store, find_signature(signatures, sig_id), sig_id);
        }
        if (record_id) {
            auto cached = closure_cache.find(*record_id);
            if (cached == closure_cache.end())
                cached = closure_cache
                             .emplace(*record_id,
                                      compute_ri_closure({*record_id}, store, baseline).members)
                             .first;
            object.ri_records.assign(cached->second.begin(), cached->second.end());
        } else {
            object.unresolved_ri = true;
        }
        aip.content_information.push_back(std::move(object));

        aip.pdi.fixity.push_back({"objects/" + rel, sha256_file(target)});
        aip.pdi.reference.object_ids.push_back("aip:" + aip.aip_id + "/" + rel);
    }

    std::string detail = "sip " + (sip.sip_id.empty() ? "(unnamed)" : sip.sip_id) + ", " +
                         std::to_string(payload_files.size()) + " objects";
    for (const auto& [key, value] : sip.producer_metadata) detail += "; " + key + "=" + value;
    aip.pdi.provenance.push_back({now_rfc3339(), "ingest", tool_stamp(), detail});

    write_aip_metadata(aip_root, aip);
    aip.packaging_manifest = build_full_manifest(aip_root);
    store_manifest(aip_root / kManifestName, aip.packaging_manifest);
    return aip;
}

// ---------------------------------------------------------------------------
// Load / verify
// ---------------------------------------------------------------------------

ArchivalPackage load_aip(const fs::path& aip_root) {
    const fs::path meta = aip_root / kAipMetadata;
    const fs::path manifest = aip_root / kManifestName;
    if (!fs::exists(meta)) throw PackagingError("missing " + meta.string());
    if (!fs::exists(manifest)) throw PackagingError("missing " + manifest.string());

    const json j = load_json_file(meta);
    ArchivalPackage aip;
    aip.root = aip_root;
    aip.aip_id = j.at("aip_id").get<std::string>();
    aip.content_information = j.value("content_information", std::vector<ObjectInfo>{});
    if (auto it = j.find("pdi"); it != j.end()) aip.pdi = it->get<Pdi>();
    aip.significant_property_links =
        j.value("significant_property_links", std::vector<std::string>{});
    aip.packaging_manifest = load_manifest(manifest);
    return aip;
}

VerificationReport verify_aip(const fs::path& aip_root) {
    VerificationReport report;
    auto add = [&report](const char* name, bool passed, std::string detail) {
        report.checks.push_back({name, passed, std::move(detail), std::nullopt});
    };

    ArchivalPackage aip;
    try {
        aip = load_aip(aip_root);
        add("layout", true, "");
    } catch (const std::exception& e) {
        add("layout", false, e.what());
        add("fixity", false, "skipped: layout unreadable");
        add("manifest-complete", false, "skipped: layout unreadable");
        add("ri-coverage", false, "skipped: layout unreadable");
        add("provenance", false, "skipped: layout unreadable");
        return report;
    }

    // fixity: recompute every manifest digest; payload digests must also be
    // covered by and consistent with pdi.fixity.
    {
        std::vector<std::string> failures;
        std::map<std::string, std::string> manifest_digest;
        for (const auto& entry : aip.packaging_manifest) {
            manifest_digest[entry.path] = entry.sha256;
            const fs::path file = aip_root / entry.path;
            if (!fs::exists(file)) {
                failures.push_back(entry.path + " (missing)");
                continue;
            }
            if (sha256_file(file) != entry.sha256) failures.push_back(entry.path);
        }
        std::map<std::string, std::string> pdi_digest;
        for (const auto& entry : aip.pdi.fixity) pdi_digest[entry.path] = entry.sha256;
        for (const auto& [path, digest] : manifest_digest) {
            if (!path.starts_with("objects/")) continue;
            auto it = pdi_digest.find(path);
            if (it == pdi_digest.end())
                failures.push_back(path + " (no fixity record)");
            else if (it->second != digest)
                failures.push_back(path + " (fixity record disagrees)");
        }
        std::string detail;
        for (const auto& f : failures) detail += (detail.empty() ? "" : "; ") + f;
        add("fixity", failures.empty(), detail);
    }

    // manifest-complete: tree contents equal the manifest, both directions.
    {
        std::vector<std::string> problems;
        std::set<std::string> listed;
        for (const auto& entry : aip.packaging_manifest) listed.insert(entry.path);
        std::set<std::string> on_disk;
        for (const auto& rel : collect_files(aip_root))
            if (rel != kManifestName) on_disk.insert(rel);
        for (const auto& path : on_disk)
            if (!listed.contains(path)) problems.push_back("not in manifest: " + path);
        for (const auto& path : listed)
            if (!on_disk.contains(path)) problems.push_back("listed but absent: " + path);
        std::string detail;
        for (const auto& p : problems) detail += (detail.empty() ? "" : "; ") + p;
        add("manifest-complete", problems.empty(), detail);
    }

    // ri-coverage: every payload file described, every object resolved or
    // explicitly flagged.
    {
        std::vector<std::string> problems;
        for (const auto& entry : aip.packaging_manifest) {
            if (!entry.path.starts_with("objects/")) continue;
            if (aip.find_object(entry.path.substr(8)) == nullptr)
                problems.push_back("undescribed object: " + entry.path);
        }
        for (const auto& object : aip.content_information)
            if (object.ri_records.empty() && !object.unresolved_ri)
                problems.push_back("object without RI links or unresolved-RI flag: " +
                                   object.path);
        std::string detail;
        for (const auto& p : problems) detail += (detail.empty() ? "" : "; ") + p;
        add("ri-coverage", problems.empty(), detail);
    }

    add("provenance", !aip.pdi.provenance.empty(),
        aip.pdi.provenance.empty() ? "no provenance events" : "");
    return report;
}

// ---------------------------------------------------------------------------
// DIP
// ---------------------------------------------------------------------------

ObjectPredicate select_by_format(const std::string& signature_id) {
    return [signature_id](const ObjectInfo& object) {
        const SignatureMatch* best = object.identification.best();
        return best != nullptr && best->signature_id == signature_id;
    };
}

ObjectPredicate select_all() {
    return [](const ObjectInfo&) { return true; };
}

std::string render_record_excerpt(const RIRecord& record) {
    static const std::set<int> kExcerptElements = {1, 2, 7, 11, 18, 19, 20};
    const auto& defs = builtin_element_defs();

    std::string out;
    out += "Record: " + record.record_id + " (version " + std::to_string(record.version) + ", " +
           to_string(record.status) + ")\n";
    out += "Format: " + record.format_name;
    if (!record.format_version_label.empty()) out += " " + record.format_version_label;
    out += "\n";
    for (const auto& value : record.elements) {
        if (!kExcerptElements.contains(value.element_id)) continue;
        if (value.element_id < 1 || value.element_id > static_cast<int>(defs.size())) continue;
        out += "\n" + std::to_string(value.element_id) + ". " +
               defs[static_cast<std::size_t>(value.element_id - 1)].name + "\n";
        out += "   " + display_text(value.payload) + "\n";
    }
    return out;
}

DisseminationPackage build_dip(const fs::path& aip_root, const ObjectPredicate& selection,
                               const RegistryStore& store, const fs::path& dip_root,
                               const DipOptions& options) {
    const VerificationReport verification = verify_aip(aip_root);
    if (!verification.all_passed())
        throw PackagingError("AIP does not verify clean; refusing to build a DIP from " +
                             aip_root.string());
    const ArchivalPackage aip = load_aip(aip_root);

    std::vector<const ObjectInfo*> selected;
    for (const auto& object : aip.content_information)
        if (selection(object)) selected.push_back(&object);
    if (selected.empty())
        throw PackagingError("selection matches no objects in AIP " + aip.aip_id);

    if (fs::exists(dip_root) && !fs::is_empty(dip_root))
        throw PackagingError("DIP target is not empty: " + dip_root.string());
    fs::create_directories(dip_root / "objects");
    fs::create_directories(dip_root / "metadata");

    DisseminationPackage dip;
    dip.root = dip_root;
    dip.source_aip_id = aip.aip_id;
    dip.dip_id = !options.dip_id.empty() ? options.dip_id : aip.aip_id + "-dip";

    std::map<std::string, std::string> aip_digest;
    for (const auto& entry : aip.pdi.fixity) aip_digest[entry.path] = entry.sha256;

    std::set<std::string> record_ids;
    for (const ObjectInfo* object : selected) {
        const fs::path from = aip_root / "objects" / object->path;
        const fs::path to = dip_root / "objects" / object->path;
        copy_payload_file(from, to);
        const std::string digest = sha256_file(to);
        const std::string expected = aip_digest["objects/" + object->path];
        if (digest != expected)
            throw PackagingError("digest changed while exporting " + object->path);
        dip.objects.push_back({"objects/" + object->path, digest});
        record_ids.insert(object->ri_records.begin(), object->ri_records.end());
    }

    if (!record_ids.empty()) fs::create_directories(dip_root / "ri");
    for (const auto& id : record_ids) {
        std::string text;
        try {
            text = render_record_excerpt(store.get_record(id));
        } catch (const NotFoundError&) {
            text = "Record: " + id + "\nThis record is no longer available in the registry.\n";
        }
        const std::string rel = "ri/" + id + ".txt";
        std::ofstream out(dip_root / rel, std::ios::binary);
        out << text;
        if (!out.flush()) throw PackagingError("cannot write " + rel);
        dip.ri_excerpts.push_back(rel);
    }

    json j{{"dip_id", dip.dip_id},
           {"source_aip_id", dip.source_aip_id},
           {"objects", dip.objects},
           {"ri_excerpts", dip.ri_excerpts}};
    store_json_file(dip_root / "metadata/dip.json", j);
    store_manifest(dip_root / kManifestName, build_full_manifest(dip_root));
    return dip;
}

// ---------------------------------------------------------------------------
// Significant properties
// ---------------------------------------------------------------------------

ArchivalPackage attach_significant_properties(const fs::path& aip_root,
                                              const std::vector<std::string>& property_ids,
                                              const RegistryStore& store) {
    ArchivalPackage aip = load_aip(aip_root);

    for (const auto& id : property_ids)
        if (!store.has_property(id))
            throw NotFoundError("no such significant property: " + id);

    std::vector<std::string> added;
    for (const auto& id : property_ids) {
        if (std::count(aip.significant_property_links.begin(),
                       aip.significant_property_links.end(), id))
            continue;
        if (std::count(added.begin(), added.end(), id)) continue;
        added.push_back(id);
    }
    if (added.empty()) return aip; // idempotent: nothing new, nothing written

    aip.significant_property_links.insert(aip.significant_property_links.end(), added.begin(),
                                          added.end());
    std::sort(aip.significant_property_links.begin(), aip.significant_property_links.end());

    std::string detail = "attached";
    for (const auto& id : added) detail += " " + id;
    aip.pdi.provenance.push_back(
        {now_rfc3339(), "attach-significant-properties", tool_stamp(), detail});

    write_aip_metadata(aip_root, aip);
    aip.packaging_manifest = build_full_manifest(aip_root);
    store_manifest(aip_root / kManifestName, aip.packaging_manifest);
    return aip;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

void to_json(json& j, const ContextRef& c) {
    if (c.entry)
        j = json{{"entry", *c.entry}};
    else
        j = json{{"ref", c.ref}};
}

void from_json(const json& j, ContextRef& c) {
    if (auto it = j.find("entry"); it != j.end()) {
        c.entry = it->get<ContextEntry>();
        c.ref.clear();
    } else {
        c.ref = j.at("ref").get<std::string>();
        c.entry.reset();
    }
}

void to_json(json& j, const ObjectInfo& o) {
    j = json{{"path", o.path},
             {"identification", o.identification},
             {"ri_records", o.ri_records},
             {"unresolved_ri", o.unresolved_ri}};
}

void from_json(const json& j, ObjectInfo& o) {
    o.path = j.at("path").get<std::string>();
    o.identification = j.at("identification").get<IdentificationResult>();
    o.ri_records = j.value("ri_records", std::vector<std::string>{});
    o.unresolved_ri = j.value("unresolved_ri", false);
}

void to_json(json& j, const ProvenanceEvent& e) {
    j = json{{"timestamp", e.timestamp}, {"action", e.action}, {"tool", e.tool},
             {"detail", e.detail}};
}

void from_json(const json& j, ProvenanceEvent& e) {
    e.timestamp = j.value("timestamp", std::string{});
    e.action = j.value("action", std::string{});
    e.tool = j.value("tool", std::string{});
    e.detail = j.value("detail", std::string{});
}

void to_json(json& j, const Pdi& p) {
    j = json{{"provenance", p.provenance},
             {"context", p.context},
             {"reference",
              json{{"aip_id", p.reference.aip_id}, {"object_ids", p.reference.object_ids}}},
             {"fixity", p.fixity}};
}

void from_json(const json& j, Pdi& p) {
    p.provenance = j.value("provenance", std::vector<ProvenanceEvent>{});
    p.context = j.value("context", std::vector<ContextRef>{});
    if (auto it = j.find("reference"); it != j.end()) {
        p.reference.aip_id = it->value("aip_id", std::string{});
        p.reference.object_ids = it->value("object_ids", std::vector<std::string>{});
    }
    p.fixity = j.value("fixity", std::vector<FixityEntry>{});
}

void to_json(json& j, const RIClosure& c) {
    json edges = json::array();
    for (const auto& e : c.edges)
        edges.push_back(json{{"from", e.from}, {"relation", "requires-ri"}, {"to", e.to}});
    j = json{{"roots", c.roots},
             {"edges", edges},
             {"baseline_set", c.baseline_set},
             {"members", c.members},
             {"unresolved", c.unresolved}};
}

} // namespace bimcore
