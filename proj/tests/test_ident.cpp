#include "bimcore/errors.hpp"
#include "bimcore/ident.hpp"

#include "support/exemplars.hpp"
#include "support/tempdir.hpp"

#include <doctest.h>

#include <random>

using namespace bimcore;
using testsupport::TempDir;

namespace {

IdentificationResult identify(const std::string& bytes, const std::string& hint) {
    return identify_bytes(bytes, hint, builtin_signatures());
}

const FormatSignature& builtin(const std::string& id) {
    for (const auto& sig : builtin_signatures())
        if (sig.signature_id == id) return sig;
    throw std::runtime_error("no builtin signature " + id);
}

} // namespace

TEST_CASE("builtin magic byte values match the derivation exemplars") {
    // STEP: ASCII of the ISO 10303-21 opening token
    const auto& step = builtin("STEP-SPF");
    CHECK(std::string(step.magic.begin(), step.magic.end()) == "ISO-10303-21;");
    CHECK(step.offset == 0);

    // TIFF little-endian: first four bytes of an independently produced TIFF
    CHECK(builtin("TIFF-LE").magic == std::vector<std::uint8_t>{0x49, 0x49, 0x2A, 0x00});
    CHECK(builtin("TIFF-BE").magic == std::vector<std::uint8_t>{0x4D, 0x4D, 0x00, 0x2A});
    CHECK(testsupport::minimal_tiff(true).substr(0, 4) == std::string("\x49\x49\x2A\x00", 4));
    CHECK(testsupport::minimal_tiff(false).substr(0, 4) == std::string("\x4D\x4D\x00\x2A", 4));

    // PDF: ASCII "%PDF-"
    const auto& pdf = builtin("PDF");
    CHECK(std::string(pdf.magic.begin(), pdf.magic.end()) == "%PDF-");
    CHECK(testsupport::minimal_pdf().substr(0, 5) == "%PDF-");

    // ZIP: PK\x03\x04, as produced by ordinary archivers
    CHECK(builtin("ZIP").magic == std::vector<std::uint8_t>{0x50, 0x4B, 0x03, 0x04});
    CHECK(testsupport::build_zip({{"a.txt", "aa"}}).substr(0, 4) ==
          std::string("\x50\x4B\x03\x04", 4));

    validate_signature_set(builtin_signatures());
}

TEST_CASE("empty input with no hint is unknown") {
    const auto result = identify("", "");
    CHECK(result.verdict == Verdict::Unknown);
    CHECK(result.matches.empty());
}

TEST_CASE("STEP prefix identifies as STEP-SPF") {
    const auto result = identify("ISO-10303-21;HEADER;", "");
    REQUIRE(result.verdict == Verdict::Identified);
    REQUIRE(result.best() != nullptr);
    CHECK(result.best()->signature_id == "STEP-SPF");
    REQUIRE(result.best()->evidence.matched_ranges.size() == 1);
    CHECK(result.best()->evidence.matched_ranges[0] == ByteRange{0, 13});
    CHECK_FALSE(result.best()->evidence.extension_agreement);
}

TEST_CASE("TIFF bytes with agreeing extension") {
    const auto result = identify(std::string("\x49\x49\x2A\x00", 4) + "rest", "scan.tif");
    REQUIRE(result.verdict == Verdict::Identified);
    CHECK(result.best()->signature_id == "TIFF-LE");
    CHECK(result.best()->evidence.extension_agreement);
}

TEST_CASE("ifcZIP: zip container with a STEP entry, both stored and deflated") {
    for (bool deflate : {false, true}) {
        CAPTURE(deflate);
        const std::string zip_bytes = testsupport::minimal_ifczip("IFC4", deflate);
        const auto result = identify(zip_bytes, "model.ifczip");
        REQUIRE(result.verdict == Verdict::Identified);
        CHECK(result.best()->signature_id == "ifcZIP");
        CHECK(result.best()->evidence.note.find("model.ifc") != std::string::npos);
        // the plain ZIP match is also reported, lower priority
        REQUIRE(result.matches.size() == 2);
        CHECK(result.matches[1].signature_id == "ZIP");
    }
}

TEST_CASE("zip without STEP entries stays plain ZIP") {
    const std::string zip_bytes = testsupport::build_zip({{"notes.txt", "just text"}});
    const auto result = identify(zip_bytes, "archive.zip");
    REQUIRE(result.verdict == Verdict::Identified);
    CHECK(result.best()->signature_id == "ZIP");
    for (const auto& m : result.matches) CHECK(m.signature_id != "ifcZIP");
}

TEST_CASE("truncated zip: container rule skipped with a warning, outer match kept") {
    std::string zip_bytes = testsupport::minimal_ifczip();
    zip_bytes.resize(zip_bytes.size() / 2); // destroys the central directory
    const auto result = identify(zip_bytes, "model.ifczip");
    REQUIRE(result.verdict == Verdict::Identified);
    CHECK(result.best()->signature_id == "ZIP");
    REQUIRE_FALSE(result.warnings.empty());
    CHECK(result.warnings[0].find("ifcZIP") != std::string::npos);
    for (const auto& m : result.matches) CHECK(m.signature_id != "ifcZIP");
}

TEST_CASE("ifcXML root element sniffing") {
    const auto result = identify(testsupport::minimal_ifcxml(), "model.ifcxml");
    REQUIRE(result.verdict == Verdict::Identified);
    CHECK(result.best()->signature_id == "ifcXML");
    CHECK(result.best()->evidence.note.find("ifcXML") != std::string::npos);

    // IFC2X3 serialization uses the iso_10303_28 root
    const std::string legacy = "<?xml version=\"1.0\"?>\n<iso_10303_28 version=\"2.0\"/>\n";
    const auto legacy_result = identify(legacy, "old.xml");
    REQUIRE(legacy_result.verdict == Verdict::Identified);
    CHECK(legacy_result.best()->signature_id == "ifcXML");
}

TEST_CASE("plain xml stays XML") {
    const auto result = identify(testsupport::plain_xml(), "inventory.xml");
    REQUIRE(result.verdict == Verdict::Identified);
    CHECK(result.best()->signature_id == "XML");
    for (const auto& m : result.matches) CHECK(m.signature_id != "ifcXML");
}

TEST_CASE("HP-GL heuristic: tentative on .plt with ASCII commands, unknown otherwise") {
    const std::string hpgl = testsupport::minimal_hpgl();
    const auto tentative = identify(hpgl, "site-plan.plt");
    REQUIRE(tentative.verdict == Verdict::Tentative);
    CHECK(tentative.best()->signature_id == "HPGL-PLT");
    CHECK(tentative.best()->evidence.matched_ranges.empty()); // extension-only
    CHECK(tentative.best()->evidence.extension_agreement);

    // same bytes, non-agreeing name: nothing to go on
    CHECK(identify(hpgl, "site-plan.txt").verdict == Verdict::Unknown);
    // binary head defeats the ASCII heuristic
    CHECK(identify(std::string("\x00\x01\x02\x03garbage", 11), "x.plt").verdict ==
          Verdict::Unknown);
    // an empty file is never tentatively identified
    CHECK(identify("", "x.plt").verdict == Verdict::Unknown);
}

TEST_CASE("tentative extension-only match for magic-bearing signatures") {
    const auto result = identify("not really a pdf", "report.pdf");
    REQUIRE(result.verdict == Verdict::Tentative);
    CHECK(result.best()->signature_id == "PDF");
    CHECK(result.best()->evidence.matched_ranges.empty());
}

TEST_CASE("full corpus identifies with the expected verdicts") {
    TempDir tmp;
    const auto cases = testsupport::write_corpus(tmp.path());
    REQUIRE(cases.size() >= 12);
    for (const auto& c : cases) {
        CAPTURE(c.relative_path);
        const auto result = identify_file(tmp / c.relative_path, builtin_signatures());
        CHECK(result.verdict == c.expected_verdict);
        if (!c.expected_signature.empty()) {
            REQUIRE(result.best() != nullptr);
            CHECK(result.best()->signature_id == c.expected_signature);
        } else {
            CHECK(result.matches.empty());
        }
    }
}

TEST_CASE("determinism: identical inputs give identical results") {
    TempDir tmp;
    const auto cases = testsupport::write_corpus(tmp.path());
    for (const auto& c : cases) {
        const std::string bytes = testsupport::read_file(tmp / c.relative_path);
        const auto a = identify(bytes, c.relative_path);
        const auto b = identify(bytes, c.relative_path);
        REQUIRE(a.verdict == b.verdict);
        REQUIRE(a.matches.size() == b.matches.size());
        for (std::size_t i = 0; i < a.matches.size(); ++i) {
            CHECK(a.matches[i].signature_id == b.matches[i].signature_id);
            CHECK(a.matches[i].evidence.matched_ranges == b.matches[i].evidence.matched_ranges);
        }
        CHECK(a.warnings == b.warnings);
    }
}

TEST_CASE("prefix safety: truncation never leaves a reported magic range dangling") {
    TempDir tmp;
    const auto cases = testsupport::write_corpus(tmp.path());
    std::mt19937 rng(11);
    for (const auto& c : cases) {
        const std::string bytes = testsupport::read_file(tmp / c.relative_path);
        for (int round = 0; round < 8; ++round) {
            const std::size_t cut = bytes.empty() ? 0 : rng() % (bytes.size() + 1);
            const std::string prefix = bytes.substr(0, cut);
            const auto result = identify(prefix, c.relative_path);
            for (const auto& match : result.matches)
                for (const auto& range : match.evidence.matched_ranges) {
                    // a magic match whose bytes lie beyond the truncation
                    // point must not be reported
                    CHECK(range.offset + range.length <= prefix.size());
                }
        }
    }
}

TEST_CASE("end-relative signature offsets") {
    std::vector<FormatSignature> sigs = builtin_signatures();
    FormatSignature tail;
    tail.signature_id = "TRAILER";
    tail.magic = {'T', 'A', 'I', 'L'};
    tail.offset = -4;
    tail.priority = 5;
    sigs.push_back(tail);
    validate_signature_set(sigs);

    const auto hit = identify_bytes(std::string("leading bytes then TAIL"), "", sigs);
    REQUIRE(hit.verdict == Verdict::Identified);
    CHECK(hit.best()->signature_id == "TRAILER");
    CHECK(hit.best()->evidence.matched_ranges[0].offset == 19);

    CHECK(identify_bytes(std::string("TAI"), "", sigs).verdict == Verdict::Unknown);
}

TEST_CASE("masked magic") {
    std::vector<FormatSignature> sigs;
    FormatSignature sig;
    sig.signature_id = "NIBBLE";
    sig.magic = {0x40, 0x41};
    sig.mask = std::vector<std::uint8_t>{0xF0, 0xFF};
    sig.priority = 1;
    sigs.push_back(sig);
    CHECK(identify_bytes(std::string("\x4F\x41", 2), "", sigs).verdict == Verdict::Identified);
    CHECK(identify_bytes(std::string("\x4F\x42", 2), "", sigs).verdict == Verdict::Unknown);
    CHECK(identify_bytes(std::string("\x50\x41", 2), "", sigs).verdict == Verdict::Unknown);
}

TEST_CASE("signature set validation rejects malformed sets") {
    // mask length mismatch
    {
        FormatSignature bad;
        bad.signature_id = "BAD";
        bad.magic = {1, 2, 3};
        bad.mask = std::vector<std::uint8_t>{0xFF};
        CHECK_THROWS_AS(validate_signature_set({bad}), ContractViolation);
    }
    // duplicate priorities on overlapping magic prefixes
    {
        FormatSignature a, b;
        a.signature_id = "A";
        a.magic = {0x50, 0x4B};
        a.priority = 7;
        b.signature_id = "B";
        b.magic = {0x50, 0x4B, 0x03, 0x04};
        b.priority = 7;
        CHECK_THROWS_AS(validate_signature_set({a, b}), ContractViolation);
        b.priority = 8;
        CHECK_NOTHROW(validate_signature_set({a, b}));
    }
    // zip rule referencing a missing signature
    {
        FormatSignature z;
        z.signature_id = "Z";
        z.magic = {0x50, 0x4B, 0x03, 0x04};
        z.container_rule = ContainerRule{"zip", "NOT-THERE"};
        CHECK_THROWS_AS(validate_signature_set({z}), ContractViolation);
    }
    // duplicate id
    {
        FormatSignature a;
        a.signature_id = "A";
        a.magic = {1};
        CHECK_THROWS_AS(validate_signature_set({a, a}), ContractViolation);
    }
}

TEST_CASE("signature file loading: hex magic, masks, container rules") {
    TempDir tmp;
    testsupport::write_file(tmp / "sigs.json", R"([
      {
        "signature_id": "DWG-SNIFF",
        "magic": "41433130",
        "offset": 0,
        "extension_hints": ["dwg"],
        "priority": 30,
        "target_record_id": "dwg-record"
      }
    ])");
    const auto sigs = load_signature_file(tmp / "sigs.json");
    CHECK(sigs.size() == builtin_signatures().size() + 1);
    const auto& loaded = sigs.back();
    CHECK(loaded.signature_id == "DWG-SNIFF");
    CHECK(loaded.magic == std::vector<std::uint8_t>{0x41, 0x43, 0x31, 0x30});
    CHECK(loaded.target_record_id == "dwg-record");

    const auto result = identify_bytes(std::string("AC1032 rest of header"), "plan.dwg", sigs);
    REQUIRE(result.verdict == Verdict::Identified);
    CHECK(result.best()->signature_id == "DWG-SNIFF");

    // round-trip through JSON keeps the signature intact
    const json j = signature_to_json(loaded);
    const FormatSignature back = signature_from_json(j);
    CHECK(back.signature_id == loaded.signature_id);
    CHECK(back.magic == loaded.magic);
    CHECK(back.priority == loaded.priority);

    // invalid hex is rejected
    testsupport::write_file(tmp / "bad.json", R"([{"signature_id":"X","magic":"GG"}])");
    CHECK_THROWS_AS(load_signature_file(tmp / "bad.json"), ParseError);
}

TEST_CASE("suggest_record_stub drafts a record from evidence") {
    const auto result = identify(testsupport::minimal_spf("IFC4"), "model.ifc");
    REQUIRE(result.verdict == Verdict::Identified);
    const StepHeader header = parse_step_header(testsupport::minimal_spf("IFC4"));

    const RIRecord stub = suggest_record_stub(result, header);
    CHECK(stub.status == RecordStatus::Draft);
    CHECK(stub.format_name == "STEP-SPF");
    CHECK(stub.format_version_label == "IFC4");
    REQUIRE(stub.find_element(1) != nullptr);
    CHECK(std::get<TextPayload>(stub.find_element(1)->payload).text == "STEP-SPF");
    REQUIRE(stub.find_element(2) != nullptr);
    CHECK(std::get<TextPayload>(stub.find_element(2)->payload).text == "IFC4");
    REQUIRE(stub.find_element(16) != nullptr);
    CHECK(validate_record(stub, builtin_element_defs(), {}).ok());

    // TIFF match, no header: element 1 only
    const auto tiff = identify(testsupport::minimal_tiff(true), "plan.tif");
    const RIRecord tiff_stub = suggest_record_stub(tiff, std::nullopt);
    CHECK(tiff_stub.find_element(1) != nullptr);
    CHECK(tiff_stub.find_element(2) == nullptr);
    CHECK(tiff_stub.format_version_label.empty());

    // unknown verdict violates the contract
    const auto unknown = identify("", "");
    CHECK_THROWS_AS(suggest_record_stub(unknown, std::nullopt), ContractViolation);
}

TEST_CASE("identification result JSON round-trip") {
    TempDir tmp;
    const auto cases = testsupport::write_corpus(tmp.path());
    for (const auto& c : cases) {
        const auto result = identify_file(tmp / c.relative_path, builtin_signatures());
        IdentificationResult back;
        from_json(json(result), back);
        CHECK(back.verdict == result.verdict);
        REQUIRE(back.matches.size() == result.matches.size());
        for (std::size_t i = 0; i < back.matches.size(); ++i) {
            CHECK(back.matches[i].signature_id == result.matches[i].signature_id);
            CHECK(back.matches[i].evidence.matched_ranges ==
                  result.matches[i].evidence.matched_ranges);
            CHECK(back.matches[i].evidence.extension_agreement ==
                  result.matches[i].evidence.extension_agreement);
        }
        CHECK(back.warnings == result.warnings);
    }
}
