#include "bimcore/store.hpp"

#include "bimcore/errors.hpp"
#include "bimcore/json_io.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace bimcore {

namespace fs = std::filesystem;

ValidationFailure::ValidationFailure(ValidationReport report)
    : std::runtime_error([&report] {
          std::string msg = "record rejected: ";
          for (std::size_t i = 0; i < report.violations.size(); ++i) {
              if (i) msg += "; ";
              msg += report.violations[i].message;
          }
          return msg;
      }()),
      report_(std::move(report)) {}

namespace {

/// Advisory single-writer lock on <root>/.lock, held for one write operation.
class StoreLock {
public:
    explicit StoreLock(const fs::path& root) {
        const fs::path lock_path = root / ".lock";
        fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
        if (fd_ < 0) throw StoreError("cannot open lock file " + lock_path.string());
        if (::flock(fd_, LOCK_EX) != 0) {
            ::close(fd_);
            throw StoreError("cannot lock store " + root.string());
        }
    }
    ~StoreLock() {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
        }
    }
    StoreLock(const StoreLock&) = delete;
    StoreLock& operator=(const StoreLock&) = delete;

private:
    int fd_ = -1;
};

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

bool contains_ci(const std::string& haystack, const std::string& needle_lower) {
    return lower(haystack).find(needle_lower) != std::string::npos;
}

/// Flattened text of a payload, for term matching.
std::string payload_search_text(const ElementPayload& payload) {
    struct Visitor {
        std::string operator()(const TextPayload& p) const { return p.text; }
        std::string operator()(const StructuredReference& p) const {
            return p.label + " " + p.target;
        }
        std::string operator()(const ExternalLink& p) const { return p.url + " " + p.title; }
        std::string operator()(const ToolDescription& p) const {
            return p.tool_name + " " + p.description + " " + p.availability;
        }
        std::string operator()(const ContextEntry& p) const {
            std::string text = p.entry_id + " " + p.provenance_note + " ";
            if (const auto* s = std::get_if<std::string>(&p.body))
                text += *s;
            else {
                const auto& link = std::get<ExternalLink>(p.body);
                text += link.url + " " + link.title;
            }
            return text;
        }
    };
    return std::visit(Visitor{}, payload);
}

std::vector<std::string> split_terms(const std::string& terms) {
    std::vector<std::string> out;
    std::istringstream in(terms);
    std::string term;
    while (in >> term) out.push_back(lower(term));
    return out;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StoreError("cannot read " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void copy_file_checked(const fs::path& from, const fs::path& to) {
    fs::create_directories(to.parent_path());
    std::error_code ec;
    fs::copy_file(from, to, fs::copy_options::overwrite_existing, ec);
    if (ec) throw StoreError("cannot copy " + from.string() + " -> " + to.string());
}

bool is_version_file(const fs::directory_entry& entry, int& version) {
    if (!entry.is_regular_file()) return false;
    const std::string name = entry.path().filename().string();
    if (!name.ends_with(".json")) return false;
    const std::string stem = name.substr(0, name.size() - 5);
    if (stem.empty() || !std::all_of(stem.begin(), stem.end(), [](unsigned char c) {
            return std::isdigit(c);
        }))
        return false;
    version = std::stoi(stem);
    return version >= 1;
}

} // namespace

// ---------------------------------------------------------------------------
// Views
// ---------------------------------------------------------------------------

std::string to_string(Role role) {
    switch (role) {
    case Role::Producer: return "producer";
    case Role::Consumer: return "consumer";
    case Role::ArchiveManagement: return "archive-management";
    case Role::ComputerExpert: return "computer-expert";
    case Role::Historian: return "historian";
    }
    throw ContractViolation("unmapped role");
}

Role role_from_string(const std::string& s) {
    if (s == "producer") return Role::Producer;
    if (s == "consumer") return Role::Consumer;
    if (s == "archive-management") return Role::ArchiveManagement;
    if (s == "computer-expert") return Role::ComputerExpert;
    if (s == "historian") return Role::Historian;
    throw ContractViolation("unknown role: " + s);
}

QueryView QueryView::for_role(Role role) {
    QueryView view;
    view.role = role;
    switch (role) {
    case Role::Producer: view.elements = {1, 2, 3, 4, 5, 14}; break;
    case Role::Consumer: view.elements = {7, 8, 9, 10, 11, 12, 13, 14, 15, 18, 19, 20, 21, 22}; break;
    case Role::ArchiveManagement: view.elements = {4, 5, 6, 16, 17, 22}; break;
    case Role::ComputerExpert: view.elements = {6, 7, 8, 9, 10, 13, 15, 16, 17, 18}; break;
    case Role::Historian: view.elements = {15, 19, 23}; break;
    }
    return view;
}

// ---------------------------------------------------------------------------
// Store lifecycle
// ---------------------------------------------------------------------------

RegistryStore::RegistryStore(fs::path root) : root_(std::move(root)) {}

RegistryStore RegistryStore::open(const fs::path& root) {
    std::error_code ec;
    fs::create_directories(root / "records", ec);
    fs::create_directories(root / "properties", ec);
    fs::create_directories(root / "contexts", ec);
    if (!fs::is_directory(root / "records"))
        throw StoreError("cannot create store at " + root.string());
    RegistryStore store(root);
    store.rebuild_index();
    return store;
}

void RegistryStore::rebuild_index() {
    index_.clear();
    for (const auto& dir : fs::directory_iterator(root_ / "records")) {
        if (!dir.is_directory()) continue;
        const std::string id = dir.path().filename().string();
        int latest = 0;
        int v = 0;
        for (const auto& f : fs::directory_iterator(dir.path()))
            if (is_version_file(f, v)) latest = std::max(latest, v);
        if (latest == 0) continue;
        IndexEntry entry;
        entry.latest = latest;
        const RIRecord rec = load_json_file(record_file(id, latest)).get<RIRecord>();
        entry.status = rec.status;
        entry.format_name = rec.format_name;
        entry.created =
            latest == 1 ? rec.created
                        : load_json_file(record_file(id, 1)).get<RIRecord>().created;
        index_[id] = entry;
    }
}

fs::path RegistryStore::record_dir(const std::string& id) const { return root_ / "records" / id; }

fs::path RegistryStore::record_file(const std::string& id, int version) const {
    return record_dir(id) / (std::to_string(version) + ".json");
}

void RegistryStore::append_audit(const std::string& actor, const std::string& action,
                                 const std::string& record_id, int version) {
    json line{{"timestamp", now_rfc3339()},
              {"actor", actor},
              {"action", action},
              {"record_id", record_id},
              {"version", version}};
    std::ofstream out(root_ / "audit.log", std::ios::binary | std::ios::app);
    if (!out) throw StoreError("cannot append to audit log");
    out << line.dump() << '\n';
    out.flush();
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

PutResult RegistryStore::put_record(const RIRecord& record, const std::string& actor) {
    StoreLock lock(root_);

    std::set<std::string> existing;
    for (const auto& [id, entry] : index_) existing.insert(id);
    existing.insert(record.record_id); // a record may relate to its own id

    ValidationReport report = validate_record(record, builtin_element_defs(), existing);
    if (!report.ok()) throw ValidationFailure(std::move(report));

    RIRecord stored = record;
    const auto it = index_.find(record.record_id);
    stored.version = (it == index_.end()) ? 1 : it->second.latest + 1;
    const std::string now = now_rfc3339();
    if (it != index_.end() && !it->second.created.empty())
        stored.created = it->second.created;
    else if (stored.created.empty())
        stored.created = now;
    stored.modified = now;

    fs::create_directories(record_dir(stored.record_id));
    store_json_file(record_file(stored.record_id, stored.version), json(stored));
    append_audit(actor, "put-record", stored.record_id, stored.version);

    IndexEntry entry;
    entry.latest = stored.version;
    entry.status = stored.status;
    entry.format_name = stored.format_name;
    entry.created = stored.created;
    index_[stored.record_id] = entry;
    return {stored.record_id, stored.version};
}

RIRecord RegistryStore::get_record(const std::string& record_id,
                                   std::optional<int> version) const {
    const auto it = index_.find(record_id);
    if (it == index_.end()) throw NotFoundError("no such record: " + record_id);
    const int v = version.value_or(it->second.latest);
    if (v < 1 || v > it->second.latest)
        throw NotFoundError("no version " + std::to_string(v) + " of record " + record_id);
    return load_json_file(record_file(record_id, v)).get<RIRecord>();
}

std::string RegistryStore::get_record_bytes(const std::string& record_id, int version) const {
    const auto it = index_.find(record_id);
    if (it == index_.end()) throw NotFoundError("no such record: " + record_id);
    if (version < 1 || version > it->second.latest)
        throw NotFoundError("no version " + std::to_string(version) + " of record " + record_id);
    return read_file(record_file(record_id, version));
}

bool RegistryStore::has_record(const std::string& record_id) const {
    return index_.contains(record_id);
}

int RegistryStore::latest_version(const std::string& record_id) const {
    const auto it = index_.find(record_id);
    if (it == index_.end()) throw NotFoundError("no such record: " + record_id);
    return it->second.latest;
}

std::vector<std::string> RegistryStore::record_ids() const {
    std::vector<std::string> ids;
    ids.reserve(index_.size());
    for (const auto& [id, entry] : index_) ids.push_back(id);
    return ids;
}

std::vector<RecordSummary> RegistryStore::list_records() const {
    std::vector<RecordSummary> out;
    for (const auto& [id, entry] : index_) {
        RecordSummary s;
        s.record_id = id;
        s.version = entry.latest;
        s.status = entry.status;
        s.format_name = entry.format_name;
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<RecordSummary> RegistryStore::query(const QueryView& view,
                                                const std::string& text_terms) const {
    const std::vector<std::string> terms = split_terms(text_terms);
    std::vector<RecordSummary> out;
    for (const auto& [id, entry] : index_) {
        if (entry.status == RecordStatus::Withdrawn) continue;
        const RIRecord rec = get_record(id);

        std::vector<int> matched;
        std::string searchable = rec.format_name + " " + rec.format_version_label;
        for (const auto& value : rec.elements) {
            if (!view.elements.contains(value.element_id)) continue;
            matched.push_back(value.element_id);
            searchable += " " + payload_search_text(value.payload);
        }
        std::sort(matched.begin(), matched.end());
        matched.erase(std::unique(matched.begin(), matched.end()), matched.end());
        if (matched.empty()) continue;

        bool all_terms = true;
        for (const auto& term : terms)
            if (!contains_ci(searchable, term)) {
                all_terms = false;
                break;
            }
        if (!all_terms) continue;

        RecordSummary s;
        s.record_id = id;
        s.version = rec.version;
        s.status = rec.status;
        s.format_name = rec.format_name;
        s.matched_elements = std::move(matched);
        out.push_back(std::move(s));
    }
    std::sort(out.begin(), out.end(), [](const RecordSummary& a, const RecordSummary& b) {
        if (a.format_name != b.format_name) return a.format_name < b.format_name;
        if (a.version != b.version) return a.version > b.version;
        return a.record_id < b.record_id;
    });
    return out;
}

std::optional<RIRecord> RegistryStore::find_published_by_format_name(
    const std::string& format_name) const {
    const std::string wanted = lower(format_name);
    for (const auto& [id, entry] : index_) { // std::map iterates in id order
        if (lower(entry.format_name) != wanted) continue;
        // walk back to the latest published version of this id
        for (int v = entry.latest; v >= 1; --v) {
            const RIRecord rec = get_record(id, v);
            if (rec.status == RecordStatus::Published) return rec;
            if (rec.status == RecordStatus::Superseded) break;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Properties and context entries
// ---------------------------------------------------------------------------

void RegistryStore::put_property(const SignificantProperty& property, const std::string& actor) {
    StoreLock lock(root_);
    ValidationReport report = validate_property(property);
    if (!report.ok()) throw ValidationFailure(std::move(report));
    store_json_file(root_ / "properties" / (property.property_id + ".json"), json(property));
    append_audit(actor, "put-property", property.property_id, 0);
}

SignificantProperty RegistryStore::get_property(const std::string& property_id) const {
    const fs::path path = root_ / "properties" / (property_id + ".json");
    if (!is_valid_record_id(property_id) || !fs::exists(path))
        throw NotFoundError("no such significant property: " + property_id);
    return load_json_file(path).get<SignificantProperty>();
}

bool RegistryStore::has_property(const std::string& property_id) const {
    return is_valid_record_id(property_id) &&
           fs::exists(root_ / "properties" / (property_id + ".json"));
}

std::vector<SignificantProperty> RegistryStore::list_properties() const {
    std::vector<SignificantProperty> out;
    for (const auto& f : fs::directory_iterator(root_ / "properties"))
        if (f.is_regular_file() && f.path().extension() == ".json")
            out.push_back(load_json_file(f.path()).get<SignificantProperty>());
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.property_id < b.property_id; });
    return out;
}

void RegistryStore::put_context_entry(const ContextEntry& entry, const std::string& actor) {
    StoreLock lock(root_);
    if (!is_valid_record_id(entry.entry_id)) {
        ValidationReport report;
        report.violations.push_back({std::nullopt, std::nullopt,
                                     "entry_id must match [A-Za-z0-9._~-]{1,200}"});
        throw ValidationFailure(std::move(report));
    }
    store_json_file(root_ / "contexts" / (entry.entry_id + ".json"), json(entry));
    append_audit(actor, "put-context", entry.entry_id, 0);
}

ContextEntry RegistryStore::get_context_entry(const std::string& entry_id) const {
    const fs::path path = root_ / "contexts" / (entry_id + ".json");
    if (!is_valid_record_id(entry_id) || !fs::exists(path))
        throw NotFoundError("no such context entry: " + entry_id);
    return load_json_file(path).get<ContextEntry>();
}

bool RegistryStore::has_context_entry(const std::string& entry_id) const {
    return is_valid_record_id(entry_id) && fs::exists(root_ / "contexts" / (entry_id + ".json"));
}

std::vector<ContextEntry> RegistryStore::list_context_entries() const {
    std::vector<ContextEntry> out;
    for (const auto& f : fs::directory_iterator(root_ / "contexts"))
        if (f.is_regular_file() && f.path().extension() == ".json")
            out.push_back(load_json_file(f.path()).get<ContextEntry>());
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.entry_id < b.entry_id; });
    return out;
}

// ---------------------------------------------------------------------------
// Baseline
// ---------------------------------------------------------------------------

std::set<std::string> RegistryStore::baseline_records() const {
    const fs::path path = root_ / "baseline.json";
    if (!fs::exists(path)) return {};
    std::set<std::string> ids;
    for (const auto& id : load_json_file(path)) ids.insert(id.get<std::string>());
    return ids;
}

void RegistryStore::set_baseline_records(const std::set<std::string>& ids,
                                         const std::string& actor) {
    StoreLock lock(root_);
    store_json_file(root_ / "baseline.json", json(ids));
    append_audit(actor, "set-baseline", "", 0);
}

// ---------------------------------------------------------------------------
// Integrity
// ---------------------------------------------------------------------------

IntegrityReport RegistryStore::integrity_check() const {
    IntegrityReport report;
    auto issue = [&report](std::string kind, std::string subject, std::string detail) {
        report.issues.push_back({std::move(kind), std::move(subject), std::move(detail)});
    };

    // Disk scan, independent of the in-memory index.
    std::map<std::string, int> disk_latest;
    for (const auto& dir : fs::directory_iterator(root_ / "records")) {
        if (!dir.is_directory()) continue;
        const std::string id = dir.path().filename().string();
        std::set<int> versions;
        int v = 0;
        for (const auto& f : fs::directory_iterator(dir.path()))
            if (is_version_file(f, v)) versions.insert(v);
        if (versions.empty()) {
            issue("index-mismatch", id, "record directory contains no version files");
            continue;
        }
        disk_latest[id] = *versions.rbegin();
        for (int expect = 1; expect <= *versions.rbegin(); ++expect)
            if (!versions.contains(expect))
                issue("index-mismatch", id,
                      "missing version file " + std::to_string(expect) + ".json");
    }

    for (const auto& [id, entry] : index_) {
        auto disk = disk_latest.find(id);
        if (disk == disk_latest.end())
            issue("index-mismatch", id, "indexed record has no files on disk");
        else if (disk->second != entry.latest)
            issue("index-mismatch", id,
                  "index latest " + std::to_string(entry.latest) + " but disk latest " +
                      std::to_string(disk->second));
    }
    for (const auto& [id, latest] : disk_latest)
        if (!index_.contains(id))
            issue("index-mismatch", id, "record on disk is missing from the index");

    // Dangling relations (drafts are allowed dangling references).
    for (const auto& [id, latest] : disk_latest) {
        for (int v = 1; v <= latest; ++v) {
            const fs::path path = record_file(id, v);
            if (!fs::exists(path)) continue;
            RIRecord rec;
            try {
                rec = load_json_file(path).get<RIRecord>();
            } catch (const std::exception& e) {
                issue("index-mismatch", id + "@" + std::to_string(v),
                      std::string("unparseable record file: ") + e.what());
                continue;
            }
            if (rec.status == RecordStatus::Draft) continue;
            for (const auto& rel : rec.related_records)
                if (!disk_latest.contains(rel.record_id))
                    issue("dangling-relation", id + "@" + std::to_string(v),
                          to_string(rel.relation) + " -> missing record \"" + rel.record_id +
                              "\"");
        }
    }

    // Orphaned significant properties. Entries prefixed "aip:" reference
    // package objects, not records, and are not resolvable against the store.
    for (const auto& prop : list_properties())
        for (const auto& target : prop.applies_to) {
            if (target.starts_with("aip:")) continue;
            if (!disk_latest.contains(target))
                issue("orphaned-property", prop.property_id,
                      "applies_to references missing record \"" + target + "\"");
        }

    return report;
}

// ---------------------------------------------------------------------------
// Export / import
// ---------------------------------------------------------------------------

ExportManifest RegistryStore::export_all(const fs::path& dest) const {
    const IntegrityReport health = integrity_check();
    if (!health.ok())
        throw StoreError("refusing to export an unhealthy store (" +
                         std::to_string(health.issues.size()) + " integrity issues)");

    fs::create_directories(dest);
    ExportManifest manifest;

    auto export_file = [&](const fs::path& src, const std::string& rel) {
        copy_file_checked(src, dest / rel);
        manifest.files.push_back({rel, sha256_file(dest / rel)});
    };

    for (const auto& [id, entry] : index_)
        for (int v = 1; v <= entry.latest; ++v) {
            export_file(record_file(id, v), "records/" + id + "/" + std::to_string(v) + ".json");
            ++manifest.record_versions;
        }
    for (const auto& prop : list_properties()) {
        export_file(root_ / "properties" / (prop.property_id + ".json"),
                    "properties/" + prop.property_id + ".json");
        ++manifest.properties;
    }
    for (const auto& entry : list_context_entries()) {
        export_file(root_ / "contexts" / (entry.entry_id + ".json"),
                    "contexts/" + entry.entry_id + ".json");
        ++manifest.contexts;
    }
    if (fs::exists(root_ / "baseline.json")) export_file(root_ / "baseline.json", "baseline.json");

    std::sort(manifest.files.begin(), manifest.files.end(),
              [](const FixityEntry& a, const FixityEntry& b) { return a.path < b.path; });
    json mj{{"files", json::array()},
            {"record_versions", manifest.record_versions},
            {"properties", manifest.properties},
            {"contexts", manifest.contexts},
            {"created", now_rfc3339()}};
    for (const auto& f : manifest.files)
        mj["files"].push_back(json{{"path", f.path}, {"sha256", f.sha256}});
    store_json_file(dest / "export-manifest.json", mj);
    return manifest;
}

std::size_t RegistryStore::import_all(const fs::path& src) {
    StoreLock lock(root_);

    const json mj = load_json_file(src / "export-manifest.json");
    std::vector<FixityEntry> files;
    for (const auto& f : mj.at("files"))
        files.push_back({f.at("path").get<std::string>(), f.at("sha256").get<std::string>()});

    // Verify everything before touching the store.
    std::size_t record_versions = 0;
    for (const auto& f : files) {
        if (f.path.find("..") != std::string::npos)
            throw StoreError("manifest path escapes the export tree: " + f.path);
        const fs::path source = src / f.path;
        if (!fs::exists(source)) throw StoreError("export file missing: " + f.path);
        const std::string digest = sha256_file(source);
        if (digest != f.sha256)
            throw StoreError("checksum mismatch on " + f.path + " (manifest " + f.sha256 +
                             ", actual " + digest + ")");
        if (f.path.starts_with("records/")) {
            if (fs::exists(root_ / f.path))
                throw StoreError("record version already present: " + f.path);
            ++record_versions;
        }
    }

    for (const auto& f : files) {
        if (f.path == "baseline.json" && fs::exists(root_ / "baseline.json"))
            continue; // keep the store's own baseline
        copy_file_checked(src / f.path, root_ / f.path);
    }
    rebuild_index();
    append_audit("import", "import-all", "", static_cast<int>(record_versions));
    return record_versions;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

void to_json(json& j, const RecordSummary& s) {
    j = json{{"record_id", s.record_id},
             {"version", s.version},
             {"status", to_string(s.status)},
             {"format_name", s.format_name},
             {"matched_elements", s.matched_elements}};
}

void to_json(json& j, const IntegrityIssue& i) {
    j = json{{"kind", i.kind}, {"subject", i.subject}, {"detail", i.detail}};
}

void to_json(json& j, const IntegrityReport& r) {
    j = json{{"healthy", r.ok()}, {"issues", r.issues}};
}

void to_json(json& j, const ExportManifest& m) {
    j = json{{"record_versions", m.record_versions},
             {"properties", m.properties},
             {"contexts", m.contexts},
             {"files", m.files}};
}

} // namespace bimcore
