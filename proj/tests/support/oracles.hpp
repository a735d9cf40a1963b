#pragma once

// Independent oracles used to cross-check the implementation paths, plus
// randomized generators. These routines deliberately re-derive expected
// results from first principles (raw files, explicit adjacency) instead of
// calling the code they check.

#include "bimcore/model.hpp"
#include "bimcore/store.hpp"

#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace testsupport {

// -- RI closure ---------------------------------------------------------------

struct ClosureExpectation {
    std::set<std::string> members;
    std::set<std::string> unresolved;
};

/// Fixpoint reachability over an explicit requires-ri adjacency:
/// members = reachable from roots without expanding baseline nodes (targets
/// must exist); unresolved = members that cannot reach a baseline member,
/// plus targets of dangling edges out of visited non-baseline members.
ClosureExpectation closure_oracle(const std::vector<std::string>& roots,
                                  const std::map<std::string, std::vector<std::string>>& adjacency,
                                  const std::set<std::string>& existing,
                                  const std::set<std::string>& baseline);

// -- Query --------------------------------------------------------------------

struct ScanSummary {
    std::string record_id;
    int version = 0;
    std::string format_name;
    std::vector<int> matched_elements;

    bool operator==(const ScanSummary&) const = default;
};

/// Linear scan over the on-disk store files (no RegistryStore involved):
/// latest version per record directory, withdrawn excluded, view filter and
/// AND-of-terms matching as documented, ordered by (format_name, version
/// desc, record_id).
std::vector<ScanSummary> query_scan_oracle(const std::filesystem::path& store_root,
                                           const std::set<int>& view_elements,
                                           const std::string& terms);

// -- Generators ---------------------------------------------------------------

std::string random_ascii(std::mt19937& rng, std::size_t min_len, std::size_t max_len);

/// Valid record with randomized elements, relations into existing_ids, and a
/// randomized status (published records get element 1 and safe relations).
bimcore::RIRecord random_record(std::mt19937& rng, const std::string& record_id,
                                const std::vector<std::string>& existing_ids);

/// Random directory tree: depth <= 4, file count in [1, max_files], file
/// sizes up to 2 KiB. Returns the relative paths created.
std::vector<std::string> random_file_tree(std::mt19937& rng, const std::filesystem::path& root,
                                          std::size_t max_files);

} // namespace testsupport
