#pragma once

// SIP -> AIP -> DIP lifecycle: ingest with identification and RI resolution
// against the registry, fixity, package verification, and dissemination
// export. AIP layout:
//   <aip>/objects/...            payload, original relative paths
//   <aip>/metadata/aip.json      content information + PDI
//   <aip>/manifest-sha256.txt    "digest  path" per file (sorted, LF),
//                                covering everything except itself

#include "bimcore/fixity.hpp"
#include "bimcore/ident.hpp"
#include "bimcore/report.hpp"
#include "bimcore/store.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace bimcore {

/// Link to a stored context entry (shared documents) or an inline copy
/// (project-specific documents).
struct ContextRef {
    std::string ref;                   // entry_id link; empty when inline
    std::optional<ContextEntry> entry; // inline copy
    bool operator==(const ContextRef&) const = default;
};

struct SubmissionPackage {
    std::string sip_id;
    std::filesystem::path payload_root; // directory tree of data objects
    std::vector<std::pair<std::string, std::string>> producer_metadata;
    std::vector<ContextRef> declared_context;
};

struct ObjectInfo {
    std::string path; // payload-relative, '/' separators
    IdentificationResult identification;
    std::vector<std::string> ri_records; // resolved RI reference set (record ids)
    bool unresolved_ri = false;
};

struct ProvenanceEvent {
    std::string timestamp;
    std::string action;
    std::string tool;
    std::string detail;
};

struct PackageReference {
    std::string aip_id;
    std::vector<std::string> object_ids; // "aip:<aip-id>/<payload path>"
};

struct Pdi {
    std::vector<ProvenanceEvent> provenance;
    std::vector<ContextRef> context;
    PackageReference reference;
    std::vector<FixityEntry> fixity; // payload files, AIP-root-relative paths
};

struct ArchivalPackage {
    std::string aip_id;
    std::filesystem::path root;
    std::vector<ObjectInfo> content_information;
    Pdi pdi;
    /// Mirror of manifest-sha256.txt (not serialized inside aip.json).
    std::vector<FixityEntry> packaging_manifest;
    std::vector<std::string> significant_property_links;

    const ObjectInfo* find_object(const std::string& path) const;
};

struct DisseminationPackage {
    std::string dip_id;
    std::string source_aip_id;
    std::filesystem::path root;
    std::vector<FixityEntry> objects;      // exported objects with digests
    std::vector<std::string> ri_excerpts;  // bundled rendering paths ("ri/...")
};

struct RIClosureEdge {
    std::string from;
    std::string to; // requires-ri target
    bool operator==(const RIClosureEdge&) const = default;
};

/// Result of resolving the recursive RI network. A non-baseline member is
/// resolved iff some requires-ri path from it reaches a baseline member;
/// targets of dangling requires-ri edges appear in unresolved but not in
/// members. Terminates on cyclic graphs (visited-set traversal).
struct RIClosure {
    std::vector<std::string> roots;
    std::vector<RIClosureEdge> edges;
    std::set<std::string> baseline_set;
    std::set<std::string> members;    // reachable records, roots included
    std::set<std::string> unresolved;
};

struct IngestOptions {
    std::string aip_id; // default: "<sip-id>-aip"
    std::string actor = "ingest";
};

/// Converts a SIP into an AIP at aip_root (created; must not already hold
/// files): every payload file is copied, identified, fixity-digested, and
/// linked to the latest published registry record resolved from its matched
/// signature (target_record_id first, format_name == signature_id as
/// fallback) together with that record's RI closure. Unknown or tentative
/// formats are ingested with the unresolved-RI flag. Unreadable payload
/// files or dangling declared-context links abort the ingest.
ArchivalPackage ingest(const SubmissionPackage& sip, const RegistryStore& store,
                       const std::vector<FormatSignature>& signatures,
                       const std::filesystem::path& aip_root, const IngestOptions& options = {});

/// Reads an AIP from disk (aip.json + manifest).
ArchivalPackage load_aip(const std::filesystem::path& aip_root);

/// Checks, in order: layout (metadata + manifest readable), fixity (every
/// digest recomputed, pdi fixity consistent), manifest-complete (no extra or
/// missing files), ri-coverage (every object has RI links or the explicit
/// unresolved flag), provenance (non-empty). Failures are report content.
VerificationReport verify_aip(const std::filesystem::path& aip_root);

/// Breadth-first traversal of requires-ri relations from roots, stopping at
/// baseline members. Unknown roots raise NotFoundError.
RIClosure compute_ri_closure(const std::vector<std::string>& roots, const RegistryStore& store,
                             const std::set<std::string>& baseline_set);

using ObjectPredicate = std::function<bool(const ObjectInfo&)>;

struct DipOptions {
    std::string dip_id; // default: "<aip-id>-dip"
};

/// Exports the selected objects of a clean AIP plus human-readable renderings
/// (elements 1, 2, 7, 11, 18-20) of each object's linked records. An empty
/// selection is an error, not an empty package.
DisseminationPackage build_dip(const std::filesystem::path& aip_root,
                               const ObjectPredicate& selection, const RegistryStore& store,
                               const std::filesystem::path& dip_root, const DipOptions& = {});

/// Selects objects whose best identification match is the given signature id.
ObjectPredicate select_by_format(const std::string& signature_id);
ObjectPredicate select_all();

/// Links significant properties (which must exist in the store) into the AIP
/// and records one provenance event for the newly added ids. Idempotent:
/// re-attaching already-linked ids changes nothing.
ArchivalPackage attach_significant_properties(const std::filesystem::path& aip_root,
                                              const std::vector<std::string>& property_ids,
                                              const RegistryStore& store);

/// Consumer-facing text rendering of a record (the DIP excerpt subset).
std::string render_record_excerpt(const RIRecord& record);

void to_json(json& j, const ContextRef& c);
void from_json(const json& j, ContextRef& c);
void to_json(json& j, const ObjectInfo& o);
void from_json(const json& j, ObjectInfo& o);
void to_json(json& j, const ProvenanceEvent& e);
void from_json(const json& j, ProvenanceEvent& e);
void to_json(json& j, const Pdi& p);
void from_json(const json& j, Pdi& p);
void to_json(json& j, const RIClosure& c);

} // namespace bimcore
