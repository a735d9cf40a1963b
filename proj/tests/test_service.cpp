#include "bimcore/json_io.hpp"
#include "bimcore/service.hpp"
#include "bimcore/store.hpp"

#include "support/oracles.hpp"
#include "support/tempdir.hpp"

#include <httplib.h>

#include <doctest.h>

using namespace bimcore;
using testsupport::TempDir;

namespace {

RIRecord sample_record(const std::string& id, const std::string& format) {
    RIRecord r;
    r.record_id = id;
    r.status = RecordStatus::Published;
    r.format_name = format;
    ContentElementValue name;
    name.element_id = 1;
    name.payload = TextPayload{format};
    r.elements.push_back(std::move(name));
    ContentElementValue tool;
    tool.element_id = 16;
    tool.payload = ToolDescription{"scanner", "byte signature scanner", ""};
    r.elements.push_back(std::move(tool));
    return r;
}

struct RunningService {
    QueryService service;
    httplib::Client client;

    explicit RunningService(const std::filesystem::path& store_root)
        : service(store_root), client("127.0.0.1", service.start("127.0.0.1")) {}

    ~RunningService() { service.stop(); }
};

} // namespace

TEST_CASE("GET /elements returns the 23 definitions") {
    TempDir tmp;
    RegistryStore::open(tmp / "store");
    RunningService rs(tmp / "store");

    auto res = rs.client.Get("/elements");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->get_header_value("Content-Type").find("application/json") != std::string::npos);
    const json body = json::parse(res->body);
    REQUIRE(body.is_array());
    CHECK(body.size() == 23);
    CHECK(body[15]["category"] == "tooling");
    CHECK(body[0]["required_for_publication"] == true);
}

TEST_CASE("GET /records/{id} serves canonical record JSON, versioned") {
    TempDir tmp;
    RegistryStore store = RegistryStore::open(tmp / "store");
    store.put_record(sample_record("ifc-spf", "IFC"), "t");
    RIRecord v2 = sample_record("ifc-spf", "IFC (updated)");
    store.put_record(v2, "t");
    RunningService rs(tmp / "store");

    auto latest = rs.client.Get("/records/ifc-spf");
    REQUIRE(latest);
    CHECK(latest->status == 200);
    CHECK(json::parse(latest->body)["version"] == 2);
    CHECK(json::parse(latest->body) == json(store.get_record("ifc-spf")));

    auto first = rs.client.Get("/records/ifc-spf?version=1");
    REQUIRE(first);
    CHECK(first->status == 200);
    CHECK(json::parse(first->body)["format_name"] == "IFC");

    auto missing_version = rs.client.Get("/records/ifc-spf?version=9");
    REQUIRE(missing_version);
    CHECK(missing_version->status == 404);

    auto bad_version = rs.client.Get("/records/ifc-spf?version=abc");
    REQUIRE(bad_version);
    CHECK(bad_version->status == 400);
    CHECK(json::parse(bad_version->body).contains("error"));
}

TEST_CASE("GET /records/unknown is a JSON 404") {
    TempDir tmp;
    RegistryStore::open(tmp / "store");
    RunningService rs(tmp / "store");
    auto res = rs.client.Get("/records/unknown");
    REQUIRE(res);
    CHECK(res->status == 404);
    CHECK(json::parse(res->body).contains("error"));
}

TEST_CASE("GET /records?view= matches the direct store query") {
    TempDir tmp;
    RegistryStore store = RegistryStore::open(tmp / "store");
    store.put_record(sample_record("tools-only", "Recognizer"), "t");
    RunningService rs(tmp / "store");

    auto res = rs.client.Get("/records?view=archive-management");
    REQUIRE(res);
    CHECK(res->status == 200);
    const json body = json::parse(res->body);
    REQUIRE(body.is_array());
    REQUIRE(body.size() == 1);
    CHECK(body[0]["record_id"] == "tools-only");
    CHECK(body[0]["matched_elements"] == json::array({16}));

    // oracle equivalence with the store API
    const json direct(store.query(QueryView::for_role(Role::ArchiveManagement)));
    CHECK(body == direct);

    // terms thread through
    auto hit = rs.client.Get("/records?view=archive-management&q=scanner");
    REQUIRE(hit);
    CHECK(json::parse(hit->body).size() == 1);
    auto miss = rs.client.Get("/records?view=archive-management&q=nothing-here");
    REQUIRE(miss);
    CHECK(json::parse(miss->body).empty());
}

TEST_CASE("malformed queries are 400") {
    TempDir tmp;
    RegistryStore::open(tmp / "store");
    RunningService rs(tmp / "store");
    auto no_view = rs.client.Get("/records");
    REQUIRE(no_view);
    CHECK(no_view->status == 400);
    auto bad_view = rs.client.Get("/records?view=superuser");
    REQUIRE(bad_view);
    CHECK(bad_view->status == 400);
    CHECK(json::parse(bad_view->body).contains("error"));
}

TEST_CASE("GET /health summarizes integrity") {
    TempDir tmp;
    RegistryStore store = RegistryStore::open(tmp / "store");
    store.put_record(sample_record("rec-a", "A"), "t");
    RunningService rs(tmp / "store");

    auto res = rs.client.Get("/health");
    REQUIRE(res);
    CHECK(res->status == 200);
    json body = json::parse(res->body);
    CHECK(body["status"] == "ok");
    CHECK(body["records"] == 1);

    // damage the store: health flips to issues
    std::filesystem::remove(tmp / "store" / "records" / "rec-a" / "1.json");
    auto after = rs.client.Get("/health");
    REQUIRE(after);
    CHECK(json::parse(after->body)["status"] == "issues");
}

TEST_CASE("the endpoint is read-only: only GET routes exist, writes bounce") {
    TempDir tmp;
    RegistryStore store = RegistryStore::open(tmp / "store");
    store.put_record(sample_record("rec-a", "A"), "t");
    RunningService rs(tmp / "store");

    for (const auto& [method, pattern] : rs.service.routes()) CHECK(method == "GET");
    REQUIRE(rs.service.routes().size() == 4);

    auto post = rs.client.Post("/records/rec-a", "{}", "application/json");
    REQUIRE(post);
    CHECK(post->status == 404);
    auto put = rs.client.Put("/records/rec-a", "{}", "application/json");
    REQUIRE(put);
    CHECK(put->status == 404);
    auto del = rs.client.Delete("/records/rec-a");
    REQUIRE(del);
    CHECK(del->status == 404);

    // nothing changed
    CHECK(store.get_record("rec-a").version == 1);
    CHECK(RegistryStore::open(tmp / "store").latest_version("rec-a") == 1);
}

TEST_CASE("the service sees versions written after it started") {
    TempDir tmp;
    RegistryStore store = RegistryStore::open(tmp / "store");
    store.put_record(sample_record("rec-a", "A"), "t");
    RunningService rs(tmp / "store");

    CHECK(json::parse(rs.client.Get("/records/rec-a")->body)["version"] == 1);
    store.put_record(sample_record("rec-a", "A2"), "t"); // concurrent CLI writer
    CHECK(json::parse(rs.client.Get("/records/rec-a")->body)["version"] == 2);
}
