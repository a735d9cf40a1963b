#pragma once

// Read-only HTTP/1.1 query endpoint over a registry store. Only GET routes
// exist; curation stays on the CLI behind the store's single-writer lock.
//
//   GET /records/{id}[?version=n]   canonical record JSON
//   GET /records?view=<role>&q=...  summary list for a role view
//   GET /elements                   the 23 content element definitions
//   GET /health                     store integrity summary
//
// Responses are application/json; charset=utf-8. Unknown records give 404
// with a JSON error body; malformed queries give 400.

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bimcore {

/// Operator-surface configuration. The CLI is fully usable offline; the
/// listen address only matters for `serve`.
struct CliConfig {
    std::filesystem::path store_root;
    std::optional<std::filesystem::path> signature_file;
    std::optional<std::string> listen_address; // host:port
    std::string log_level = "info";
};

class QueryService {
public:
    /// The store is re-read from disk per request (under a service lock), so
    /// a concurrent CLI writer's atomically-visible versions are served.
    explicit QueryService(std::filesystem::path store_root);
    ~QueryService();

    QueryService(const QueryService&) = delete;
    QueryService& operator=(const QueryService&) = delete;

    /// Registered (method, path pattern) pairs, for route audits.
    std::vector<std::pair<std::string, std::string>> routes() const;

    /// Blocking serve on host:port. Returns false if binding fails.
    bool listen(const std::string& host, int port);

    /// Binds an ephemeral port on host and serves on a background thread;
    /// returns the bound port.
    int start(const std::string& host);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace bimcore
