#pragma once

// Minimal ZIP central-directory reader used for one-level container
// identification. Classic (non-ZIP64) archives only; structural damage is
// reported as ParseError.

#include "bytesource.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bimcore::detail {

struct ZipEntry {
    std::string name;
    std::uint16_t method = 0; // 0 = stored, 8 = deflate
    std::uint32_t compressed_size = 0;
    std::uint32_t uncompressed_size = 0;
    std::uint32_t local_header_offset = 0;
};

/// Entries in central-directory order.
std::vector<ZipEntry> list_zip_entries(const ByteSource& src);

/// First min(n, uncompressed_size) decompressed bytes of an entry.
std::vector<std::uint8_t> read_zip_entry_head(const ByteSource& src, const ZipEntry& entry,
                                              std::size_t n);

} // namespace bimcore::detail
