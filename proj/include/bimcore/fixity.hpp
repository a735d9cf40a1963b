#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace bimcore {

/// Lowercase hex SHA-256 of a byte span.
std::string sha256_hex(std::span<const std::uint8_t> data);
std::string sha256_hex(const std::string& data);

/// Streaming SHA-256 of a file's contents.
std::string sha256_file(const std::filesystem::path& path);

struct FixityEntry {
    std::string path; // relative, '/' separators
    std::string sha256;
    bool operator==(const FixityEntry&) const = default;
};

/// Renders manifest lines: lowercase hex digest, two spaces, relative path,
/// LF endings, sorted by path.
std::string render_manifest(std::vector<FixityEntry> entries);

/// Parses a manifest produced by render_manifest.
std::vector<FixityEntry> parse_manifest(const std::string& text);

/// Reads a manifest file.
std::vector<FixityEntry> load_manifest(const std::filesystem::path& path);

/// Writes a manifest file (temp file + rename).
void store_manifest(const std::filesystem::path& path, std::vector<FixityEntry> entries);

} // namespace bimcore
