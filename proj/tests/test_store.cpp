#include "bimcore/errors.hpp"
#include "bimcore/store.hpp"

#include "support/oracles.hpp"
#include "support/sha256_ref.hpp"
#include "support/tempdir.hpp"

#include <doctest.h>

#include <atomic>
#include <fstream>
#include <random>
#include <thread>

using namespace bimcore;
using testsupport::TempDir;

namespace {

RIRecord make_record(const std::string& id, RecordStatus status, const std::string& format) {
    RIRecord r;
    r.record_id = id;
    r.status = status;
    r.format_name = format;
    if (status == RecordStatus::Published) {
        ContentElementValue v;
        v.element_id = 1;
        v.payload = TextPayload{format};
        r.elements.push_back(std::move(v));
    }
    return r;
}

ContentElementValue tool_value(int id, const std::string& name, const std::string& text) {
    ContentElementValue v;
    v.element_id = id;
    v.payload = ToolDescription{name, text, ""};
    return v;
}

ContentElementValue text_value(int id, const std::string& text) {
    ContentElementValue v;
    v.element_id = id;
    v.payload = TextPayload{text};
    return v;
}

} // namespace

TEST_CASE("put assigns versions 1, 2, ... and history stays bit-identical") {
    TempDir tmp;
    RegistryStore store = RegistryStore::open(tmp / "store");

    RIRecord r = make_record("rec-a", RecordStatus::Draft, "Format A");
    CHECK(store.put_record(r, "tester").version == 1);

    r.format_name = "Format A (renamed)";
    CHECK(store.put_record(r, "tester").version == 2);
    r.format_name = "Format A (again)";
    CHECK(store.put_record(r, "tester").version == 3);
    r.format_name = "Format A (final)";
    CHECK(store.put_record(r, "tester").version == 4); // update at version 3 -> 4

    const std::string v1_before = store.get_record_bytes("rec-a", 1);
    CHECK(store.get_record("rec-a").version == 4);
    CHECK(store.get_record("rec-a", 1).format_name == "Format A");
    CHECK(store.get_record_bytes("rec-a", 1) == v1_before);

    // reopening rebuilds the same index from disk
    RegistryStore reopened = RegistryStore::open(tmp / "store");
    CHECK(reopened.latest_version("rec-a") == 4);
    CHECK(reopened.get_record_bytes("rec-a", 1) == v1_before);
}

TEST_CASE("get of unknown ids and versions raises not-found") {
    TempDir tmp;
    RegistryStore store = RegistryStore::open(tmp / "store");
    CHECK_THROWS_AS(store.get_record("missing"), NotFoundError);
    store.put_record(make_record("rec-a", RecordStatus::Draft, "A"), "t");
    CHECK_THROWS_AS(store.get_record("rec-a", 2), NotFoundError);
    CHECK_THROWS_AS(store.get_record("rec-a", 0), NotFoundError);
}

TEST_CASE("published record with dangling relation is rejected with the report") {
    TempDir tmp;
    RegistryStore store = RegistryStore::open(tmp / "store");
    RIRecord r = make_record("rec-a", RecordStatus::Published, "A");
    r.related_records.push_back({RelationKind::Supersedes, "ghost"});
    try {
        store.put_record(r, "tester");
        FAIL("expected ValidationFailure");
    } catch (const ValidationFailure& e) {
        REQUIRE(e.report().violations.size() == 1);
        REQUIRE(e.report().violations[0].relation.has_value());
        CHECK(e.report().violations[0].relation->record_id == "ghost");
    }
    CHECK_FALSE(store.has_record("rec-a")); // store unchanged

    // independent referential scan of the store contents agrees: no files
    CHECK(std::filesystem::is_empty(tmp / "store" / "records"));
}

TEST_CASE("query: archive-management view matches tooling-only record on 16-17") {
    TempDir tmp;
    RegistryStore store = RegistryStore::open(tmp / "store");

    RIRecord r = make_record("tools-only", RecordStatus::Draft, "Recognizer Collection");
    r.elements.push_back(tool_value(16, "sig-scan", "byte signature scanner"));
    r.elements.push_back(tool_value(17, "spf-check", "syntax level verifier"));
    store.put_record(r, "t");

    const auto hits = store.query(QueryView::for_role(Role::ArchiveManagement));
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].record_id == "tools-only");
    CHECK(hits[0].matched_elements == std::vector<int>{16, 17});

    // the producer view has no overlap with elements 16-17
    CHECK(store.query(QueryView::for_role(Role::Producer)).empty());
}

TEST_CASE("query: empty store yields an empty list") {
    TempDir tmp;
    RegistryStore store = RegistryStore::open(tmp / "store");
    for (auto role : {Role::Producer, Role::Consumer, Role::ArchiveManagement,
                      Role::ComputerExpert, Role::Historian})
        CHECK(store.query(QueryView::for_role(role)).empty());
}

TEST_CASE("query: consumer view with term IFC finds the IFC record") {
    TempDir tmp;
    RegistryStore store = RegistryStore::open(tmp / "store");

    RIRecord ifc = make_record("ifc-spf", RecordStatus::Published, "IFC");
    ifc.format_version_label = "IFC4";
    ifc.elements.push_back(text_value(7, "entity instances of the IFC schema in STEP encoding"));
    store.put_record(ifc, "t");
    store.put_record(make_record("tiff", RecordStatus::Published, "TIFF"), "t");

    const auto hits = store.query(QueryView::for_role(Role::Consumer), "IFC");
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].record_id == "ifc-spf");

    // linear-scan oracle over the raw files agrees
    const auto oracle = testsupport::query_scan_oracle(
        tmp / "store", QueryView::for_role(Role::Consumer).elements, "IFC");
    REQUIRE(oracle.size() == 1);
    CHECK(oracle[0].record_id == "ifc-spf");
}

TEST_CASE("query equals the linear-scan oracle on randomized stores") {
    std::mt19937 rng(2024);
    for (int round = 0; round < 3; ++round) {
        TempDir tmp;
        RegistryStore store = RegistryStore::open(tmp / "store");
        std::vector<std::string> ids;
        const std::size_t count = 20 + rng() % 60; // <= 100 records
        for (std::size_t i = 0; i < count; ++i) {
            const std::string id = "rec-" + std::to_string(i);
            store.put_record(testsupport::random_record(rng, id, ids), "gen");
            ids.push_back(id);
        }
        for (auto role : {Role::Producer, Role::Consumer, Role::ArchiveManagement,
                          Role::ComputerExpert, Role::Historian}) {
            for (const std::string terms : {"", "a", "pump station"}) {
                const QueryView view = QueryView::for_role(role);
                const auto got = store.query(view, terms);
                const auto expected =
                    testsupport::query_scan_oracle(tmp / "store", view.elements, terms);
                REQUIRE(got.size() == expected.size());
                for (std::size_t i = 0; i < got.size(); ++i) {
                    CAPTURE(to_string(role));
                    CHECK(got[i].record_id == expected[i].record_id);
                    CHECK(got[i].version == expected[i].version);
                    CHECK(got[i].matched_elements == expected[i].matched_elements);
                }
            }
        }
    }
}

TEST_CASE("query soundness: every summary satisfies the view predicate") {
    std::mt19937 rng(99);
    TempDir tmp;
    RegistryStore store = RegistryStore::open(tmp / "store");
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < 40; ++i) {
        const std::string id = "rec-" + std::to_string(i);
        store.put_record(testsupport::random_record(rng, id, ids), "gen");
        ids.push_back(id);
    }
    for (auto role : {Role::Producer, Role::Consumer, Role::Historian}) {
        const QueryView view = QueryView::for_role(role);
        for (const auto& summary : store.query(view)) {
            const RIRecord rec = store.get_record(summary.record_id);
            CHECK(rec.status != RecordStatus::Withdrawn);
            REQUIRE_FALSE(summary.matched_elements.empty());
            for (int id : summary.matched_elements) {
                CHECK(view.elements.contains(id));
                CHECK(rec.find_element(id) != nullptr);
            }
        }
    }
}

TEST_CASE("integrity: fresh store is healthy") {
    TempDir tmp;
    RegistryStore store = RegistryStore::open(tmp / "store");
    store.put_record(make_record("rec-a", RecordStatus::Draft, "A"), "t");
    CHECK(store.integrity_check().ok());
}

TEST_CASE("integrity: version file deleted from disk is reported") {
    TempDir tmp;
    RegistryStore store = RegistryStore::open(tmp / "store");
    RIRecord r = make_record("rec-a", RecordStatus::Draft, "A");
    store.put_record(r, "t");
    store.put_record(r, "t");
    // independent oracle: the index says latest 2, the directory will say 1
    std::filesystem::remove(tmp / "store" / "records" / "rec-a" / "2.json");
    const IntegrityReport report = store.integrity_check();
    REQUIRE_FALSE(report.ok());
    bool found = false;
    for (const auto& issue : report.issues)
        if (issue.kind == "index-mismatch" && issue.subject == "rec-a") found = true;
    CHECK(found);
}

TEST_CASE("integrity: orphaned significant property is reported") {
    TempDir tmp;
    RegistryStore store = RegistryStore::open(tmp / "store");
    store.put_record(make_record("rec-a", RecordStatus::Draft, "A"), "t");

    SignificantProperty p;
    p.property_id = "prop-1";
    p.name = "names preserved";
    p.statement = "room naming stays intact";
    p.applies_to = {"rec-a", "ghost-record", "aip:demo/objects/x.bin"};
    store.put_property(p, "t");

    // oracle: set difference over collected ids, aip:* excluded
    const IntegrityReport report = store.integrity_check();
    REQUIRE(report.issues.size() == 1);
    CHECK(report.issues[0].kind == "orphaned-property");
    CHECK(report.issues[0].subject == "prop-1");
    CHECK(report.issues[0].detail.find("ghost-record") != std::string::npos);
}

TEST_CASE("export then import reproduces the store") {
    std::mt19937 rng(7);
    TempDir tmp;
    RegistryStore store = RegistryStore::open(tmp / "store");
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < 12; ++i) {
        const std::string id = "rec-" + std::to_string(i);
        store.put_record(testsupport::random_record(rng, id, ids), "gen");
        ids.push_back(id);
        if (i % 3 == 0) // grow some histories
            store.put_record(testsupport::random_record(rng, id, ids), "gen");
    }
    SignificantProperty p;
    p.property_id = "prop-1";
    p.name = "geometry kept";
    p.statement = "geometry survives";
    p.applies_to = {"rec-0"};
    store.put_property(p, "gen");
    ContextEntry ctx;
    ctx.entry_id = "ctx-1";
    ctx.kind = ContextKind::BuildingSpecific;
    ctx.body = std::string("project handbook, section 4");
    store.put_context_entry(ctx, "gen");
    store.set_baseline_records({"rec-0"}, "gen");

    const ExportManifest manifest = store.export_all(tmp / "export");
    CHECK(manifest.properties == 1);
    CHECK(manifest.contexts == 1);

    // manifest digests agree with an independent SHA-256
    for (const auto& f : manifest.files) {
        const std::string bytes = testsupport::read_file(tmp / "export" / f.path);
        CHECK(testsupport::sha256_ref_hex(bytes) == f.sha256);
    }

    RegistryStore fresh = RegistryStore::open(tmp / "fresh");
    const std::size_t imported = fresh.import_all(tmp / "export");
    CHECK(imported == manifest.record_versions);
    CHECK(fresh.integrity_check().ok());
    CHECK(fresh.record_ids() == store.record_ids());
    CHECK(fresh.baseline_records() == store.baseline_records());
    CHECK(fresh.get_property("prop-1") == p);
    CHECK(fresh.get_context_entry("ctx-1") == ctx);

    // observable equality: identical bytes for every record version
    for (const auto& id : store.record_ids())
        for (int v = 1; v <= store.latest_version(id); ++v)
            CHECK(fresh.get_record_bytes(id, v) == store.get_record_bytes(id, v));

    // and identical query results
    for (auto role : {Role::Producer, Role::Consumer}) {
        const auto a = store.query(QueryView::for_role(role));
        const auto b = fresh.query(QueryView::for_role(role));
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].record_id == b[i].record_id);
    }
}

TEST_CASE("import with one corrupted file aborts with zero records imported") {
    TempDir tmp;
    RegistryStore store = RegistryStore::open(tmp / "store");
    store.put_record(make_record("rec-a", RecordStatus::Draft, "A"), "t");
    store.put_record(make_record("rec-b", RecordStatus::Draft, "B"), "t");
    store.export_all(tmp / "export");

    // flip one byte; the manifest checksum (recomputed externally) must differ
    const auto victim = tmp / "export" / "records" / "rec-a" / "1.json";
    std::string bytes = testsupport::read_file(victim);
    bytes[bytes.size() / 2] ^= 0x01;
    testsupport::write_file(victim, bytes);

    RegistryStore fresh = RegistryStore::open(tmp / "fresh");
    CHECK_THROWS_AS(fresh.import_all(tmp / "export"), StoreError);
    CHECK(fresh.record_ids().empty());
    CHECK(std::filesystem::is_empty(tmp / "fresh" / "records"));
}

TEST_CASE("import refuses record-version collisions") {
    TempDir tmp;
    RegistryStore store = RegistryStore::open(tmp / "store");
    store.put_record(make_record("rec-a", RecordStatus::Draft, "A"), "t");
    store.export_all(tmp / "export");

    RegistryStore other = RegistryStore::open(tmp / "other");
    other.put_record(make_record("rec-a", RecordStatus::Draft, "different"), "t");
    CHECK_THROWS_AS(other.import_all(tmp / "export"), StoreError);
    CHECK(other.get_record("rec-a").format_name == "different");
}

TEST_CASE("export of an empty store yields a manifest with zero entries") {
    TempDir tmp;
    RegistryStore store = RegistryStore::open(tmp / "store");
    const ExportManifest manifest = store.export_all(tmp / "export");
    CHECK(manifest.files.empty());
    CHECK(manifest.record_versions == 0);
    CHECK(std::filesystem::exists(tmp / "export" / "export-manifest.json"));
}

TEST_CASE("withdrawn records disappear from queries but stay retrievable") {
    TempDir tmp;
    RegistryStore store = RegistryStore::open(tmp / "store");
    RIRecord r = make_record("rec-a", RecordStatus::Published, "A");
    r.elements.push_back(text_value(7, "structure notes"));
    store.put_record(r, "t");
    CHECK(store.query(QueryView::for_role(Role::Consumer)).size() == 1);

    r.status = RecordStatus::Withdrawn;
    store.put_record(r, "t");
    CHECK(store.query(QueryView::for_role(Role::Consumer)).empty());
    CHECK(store.get_record("rec-a", 1).status == RecordStatus::Published);
    CHECK(store.get_record("rec-a").status == RecordStatus::Withdrawn);
}

TEST_CASE("find_published_by_format_name is case-insensitive and tie-broken by id") {
    TempDir tmp;
    RegistryStore store = RegistryStore::open(tmp / "store");
    store.put_record(make_record("z-record", RecordStatus::Published, "STEP-SPF"), "t");
    store.put_record(make_record("a-record", RecordStatus::Published, "step-spf"), "t");
    store.put_record(make_record("draft-one", RecordStatus::Draft, "STEP-SPF"), "t");

    const auto found = store.find_published_by_format_name("Step-Spf");
    REQUIRE(found.has_value());
    CHECK(found->record_id == "a-record");

    CHECK_FALSE(store.find_published_by_format_name("nothing").has_value());
}

TEST_CASE("audit log records one line per write") {
    TempDir tmp;
    RegistryStore store = RegistryStore::open(tmp / "store");
    store.put_record(make_record("rec-a", RecordStatus::Draft, "A"), "alice");
    store.put_record(make_record("rec-a", RecordStatus::Draft, "A"), "bob");

    std::ifstream in(tmp / "store" / "audit.log");
    std::string line;
    std::vector<json> lines;
    while (std::getline(in, line)) lines.push_back(json::parse(line));
    REQUIRE(lines.size() == 2);
    CHECK(lines[0]["actor"] == "alice");
    CHECK(lines[0]["action"] == "put-record");
    CHECK(lines[0]["version"] == 1);
    CHECK(lines[1]["actor"] == "bob");
    CHECK(lines[1]["version"] == 2);
}

TEST_CASE("concurrent readers see only complete versions") {
    TempDir tmp;
    RegistryStore store = RegistryStore::open(tmp / "store");
    store.put_record(make_record("rec-a", RecordStatus::Draft, "A"), "t");

    std::atomic<bool> done{false};
    std::atomic<int> failures{0};
    std::thread reader([&] {
        RegistryStore view = RegistryStore::open(tmp / "store");
        while (!done) {
            try {
                const RIRecord r = view.get_record("rec-a", 1);
                if (r.record_id != "rec-a") ++failures;
            } catch (const std::exception&) {
                ++failures;
            }
        }
    });
    for (int i = 0; i < 50; ++i)
        store.put_record(make_record("rec-a", RecordStatus::Draft, "A" + std::to_string(i)), "w");
    done = true;
    reader.join();
    CHECK(failures == 0);
    CHECK(store.latest_version("rec-a") == 51);
}
