#pragma once

#include "bimcore/fixity.hpp"
#include "bimcore/json_io.hpp"
#include "bimcore/model.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace bimcore {

/// put_record / put_property rejection; carries the offending report.
class ValidationFailure : public std::runtime_error {
public:
    explicit ValidationFailure(ValidationReport report);
    const ValidationReport& report() const noexcept { return report_; }

private:
    ValidationReport report_;
};

// ---------------------------------------------------------------------------
// Role-oriented query views
// ---------------------------------------------------------------------------

enum class Role {
    Producer,
    Consumer,
    ArchiveManagement,
    ComputerExpert,
    Historian,
};

std::string to_string(Role role);
Role role_from_string(const std::string& s);

/// A role plus the element-id filter it implies.
struct QueryView {
    Role role = Role::Consumer;
    std::set<int> elements;

    static QueryView for_role(Role role);
};

struct RecordSummary {
    std::string record_id;
    int version = 0;
    RecordStatus status = RecordStatus::Draft;
    std::string format_name;
    std::vector<int> matched_elements;
};

struct IntegrityIssue {
    std::string kind; // dangling-relation | orphaned-property | index-mismatch
    std::string subject;
    std::string detail;
};

struct IntegrityReport {
    std::vector<IntegrityIssue> issues;
    bool ok() const { return issues.empty(); }
};

struct ExportManifest {
    std::vector<FixityEntry> files;
    std::size_t record_versions = 0;
    std::size_t properties = 0;
    std::size_t contexts = 0;
};

struct PutResult {
    std::string record_id;
    int version = 0;
};

// ---------------------------------------------------------------------------
// Store
// ---------------------------------------------------------------------------

/// Filesystem-backed registry. Layout:
///   <root>/records/<record_id>/<version>.json   (append-only history)
///   <root>/properties/<property_id>.json
///   <root>/contexts/<entry_id>.json
///   <root>/baseline.json                        (self-describing record ids)
///   <root>/audit.log                            (one JSON object per line)
/// The in-memory index is rebuilt from the files on open; writes take an
/// advisory lock on <root>/.lock and become visible atomically (temp+rename).
class RegistryStore {
public:
    /// Opens a store, creating the layout when absent.
    static RegistryStore open(const std::filesystem::path& root);

    const std::filesystem::path& root() const noexcept { return root_; }

    // Records ---------------------------------------------------------------

    /// Persists a new version (assigned previous+1, or 1 for a new id).
    /// Throws ValidationFailure when the record does not validate at its
    /// declared status level; the store is unchanged on any failure.
    PutResult put_record(const RIRecord& record, const std::string& actor);

    /// Returns the requested version, or the latest when omitted.
    RIRecord get_record(const std::string& record_id,
                        std::optional<int> version = std::nullopt) const;

    /// Raw stored bytes of one record version (canonical JSON document).
    std::string get_record_bytes(const std::string& record_id, int version) const;

    bool has_record(const std::string& record_id) const;
    int latest_version(const std::string& record_id) const;
    std::vector<std::string> record_ids() const;

    /// Latest-version summaries of all records (no view filter).
    std::vector<RecordSummary> list_records() const;

    /// Records matching the view's element filter and all text terms, ordered
    /// by (format_name, version desc, record_id). Withdrawn records are
    /// excluded. Terms are whitespace-split and matched case-insensitively
    /// against format_name, format_version_label, and the textual content of
    /// the view-filtered element values.
    std::vector<RecordSummary> query(const QueryView& view, const std::string& text_terms = "") const;

    /// Latest published version of the record with the given format name
    /// (case-insensitive); ties broken by smallest record_id.
    std::optional<RIRecord> find_published_by_format_name(const std::string& format_name) const;

    // Significant properties and context entries -----------------------------

    void put_property(const SignificantProperty& property, const std::string& actor);
    SignificantProperty get_property(const std::string& property_id) const;
    bool has_property(const std::string& property_id) const;
    std::vector<SignificantProperty> list_properties() const;

    void put_context_entry(const ContextEntry& entry, const std::string& actor);
    ContextEntry get_context_entry(const std::string& entry_id) const;
    bool has_context_entry(const std::string& entry_id) const;
    std::vector<ContextEntry> list_context_entries() const;

    // Baseline (self-describing formats, RI-closure terminators) -------------

    std::set<std::string> baseline_records() const;
    void set_baseline_records(const std::set<std::string>& ids, const std::string& actor);

    // Maintenance -------------------------------------------------------------

    /// Dangling relations, orphaned properties, and index/disk mismatches.
    IntegrityReport integrity_check() const;

    /// Writes every record version, property, and context entry to dest plus
    /// an export-manifest.json with per-file SHA-256 digests. The store must
    /// be healthy (empty integrity report).
    ExportManifest export_all(const std::filesystem::path& dest) const;

    /// Imports an export_all tree. Aborts (store unchanged) on checksum
    /// mismatch, missing file, or record-version collision. Returns the
    /// number of record versions imported.
    std::size_t import_all(const std::filesystem::path& src);

private:
    explicit RegistryStore(std::filesystem::path root);

    struct IndexEntry {
        int latest = 0;
        RecordStatus status = RecordStatus::Draft; // of latest version
        std::string format_name;                   // of latest version
        std::string created;                       // of version 1
    };

    void rebuild_index();
    void append_audit(const std::string& actor, const std::string& action,
                      const std::string& record_id, int version);
    std::filesystem::path record_dir(const std::string& id) const;
    std::filesystem::path record_file(const std::string& id, int version) const;

    std::filesystem::path root_;
    std::map<std::string, IndexEntry> index_;
};

void to_json(json& j, const RecordSummary& s);
void to_json(json& j, const IntegrityIssue& i);
void to_json(json& j, const IntegrityReport& r);
void to_json(json& j, const ExportManifest& m);

} // namespace bimcore
