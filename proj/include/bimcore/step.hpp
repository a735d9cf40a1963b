#pragma once

// Header-level reading and syntax verification of STEP physical files
// (ISO 10303-21 clear-text encoding), the serialization used by IFC.

#include "bimcore/report.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bimcore {

/// The exact token every STEP physical file starts with.
inline constexpr const char* kStepLeadingToken = "ISO-10303-21;";

/// The three HEADER-section entities of a STEP physical file.
struct StepHeader {
    struct FileDescription {
        std::vector<std::string> description;
        std::string implementation_level;
        bool operator==(const FileDescription&) const = default;
    };
    struct FileName {
        std::string name;
        std::string timestamp;
        std::vector<std::string> authors;
        std::vector<std::string> organizations;
        std::string preprocessor_version;
        std::string originating_system;
        std::string authorization;
        bool operator==(const FileName&) const = default;
    };

    FileDescription file_description;
    FileName file_name;
    std::vector<std::string> file_schema; // e.g. IFC2X3, IFC4

    bool operator==(const StepHeader&) const = default;
};

/// Parses the HEADER section (tokens between `HEADER;` and `ENDSEC;`),
/// honoring doubled-apostrophe string escaping and `/* */` comments. The
/// DATA section is not touched. Throws ParseError (with byte offset) on a
/// missing leading token, missing HEADER section, missing FILE_SCHEMA, or
/// malformed tokens such as an unterminated string.
StepHeader parse_step_header(std::span<const std::uint8_t> data);
StepHeader parse_step_header(const std::string& data);

/// Syntax-level verification: four checks named
///   leading-token  — the file begins with `ISO-10303-21;`
///   header         — the HEADER section tokenizes into entities up to ENDSEC;
///   file-schema    — FILE_SCHEMA is present with a non-empty schema list
///   data-section   — DATA section instances match `#<int> = <IDENT>(...);`
///                    with balanced parentheses outside strings, closed by
///                    ENDSEC; and END-ISO-10303-21;
/// Failures carry the first-failure byte offset. Not a schema validation.
VerificationReport verify_step(std::span<const std::uint8_t> data);
VerificationReport verify_step(const std::string& data);

/// Renders a complete STEP physical file around the given header; the data
/// instances are emitted verbatim inside the DATA section. Strings are
/// escaped by doubling apostrophes. parse_step_header(render_step_file(h))
/// yields h again.
std::string render_step_file(const StepHeader& header,
                             const std::vector<std::string>& data_instances = {});

} // namespace bimcore
