#include "bimcore/service.hpp"

#include "bimcore/errors.hpp"
#include "bimcore/json_io.hpp"
#include "bimcore/store.hpp"

#include <httplib.h>

#include <mutex>
#include <thread>

namespace bimcore {

struct QueryService::Impl {
    std::filesystem::path store_root;
    httplib::Server server;
    std::vector<std::pair<std::string, std::string>> routes;
    std::mutex store_mutex;
    std::thread worker;

    void reply_json(httplib::Response& res, int status, const json& body) {
        res.status = status;
        res.set_content(canonical_dump(body), "application/json; charset=utf-8");
    }

    void reply_error(httplib::Response& res, int status, const std::string& message) {
        reply_json(res, status, json{{"error", message}});
    }

    void register_routes() {
        auto add_get = [this](const std::string& pattern, httplib::Server::Handler handler) {
            routes.emplace_back("GET", pattern);
            server.Get(pattern, std::move(handler));
        };

        add_get(R"(/records/([A-Za-z0-9._~-]+))",
                [this](const httplib::Request& req, httplib::Response& res) {
                    std::optional<int> version;
                    if (req.has_param("version")) {
                        try {
                            std::size_t used = 0;
                            const std::string raw = req.get_param_value("version");
                            version = std::stoi(raw, &used);
                            if (used != raw.size()) throw std::invalid_argument(raw);
                        } catch (const std::exception&) {
                            reply_error(res, 400, "malformed version parameter");
                            return;
                        }
                    }
                    std::lock_guard lock(store_mutex);
                    try {
                        const RegistryStore store = RegistryStore::open(store_root);
                        reply_json(res, 200, json(store.get_record(req.matches[1], version)));
                    } catch (const NotFoundError& e) {
                        reply_error(res, 404, e.what());
                    }
                });

        add_get("/records", [this](const httplib::Request& req, httplib::Response& res) {
            if (!req.has_param("view")) {
                reply_error(res, 400, "missing view parameter");
                return;
            }
            Role role;
            try {
                role = role_from_string(req.get_param_value("view"));
            } catch (const ContractViolation&) {
                reply_error(res, 400, "unknown view: " + req.get_param_value("view"));
                return;
            }
            const std::string terms = req.get_param_value("q");
            std::lock_guard lock(store_mutex);
            const RegistryStore store = RegistryStore::open(store_root);
            reply_json(res, 200, json(store.query(QueryView::for_role(role), terms)));
        });

        add_get("/elements", [this](const httplib::Request&, httplib::Response& res) {
            reply_json(res, 200, json(builtin_element_defs()));
        });

        add_get("/health", [this](const httplib::Request&, httplib::Response& res) {
            std::lock_guard lock(store_mutex);
            const RegistryStore store = RegistryStore::open(store_root);
            const IntegrityReport report = store.integrity_check();
            json body{{"status", report.ok() ? "ok" : "issues"},
                      {"records", store.record_ids().size()},
                      {"integrity", report}};
            reply_json(res, 200, body);
        });
    }
};

QueryService::QueryService(std::filesystem::path store_root) : impl_(std::make_unique<Impl>()) {
    impl_->store_root = std::move(store_root);
    RegistryStore::open(impl_->store_root); // fail early on an unusable root
    impl_->register_routes();
}

QueryService::~QueryService() { stop(); }

std::vector<std::pair<std::string, std::string>> QueryService::routes() const {
    return impl_->routes;
}

bool QueryService::listen(const std::string& host, int port) {
    return impl_->server.listen(host, port);
}

int QueryService::start(const std::string& host) {
    const int port = impl_->server.bind_to_any_port(host);
    if (port <= 0) throw StoreError("cannot bind query endpoint on " + host);
    impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port;
}

void QueryService::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->worker.joinable()) impl_->worker.join();
}

} // namespace bimcore
