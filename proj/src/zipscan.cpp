#include "zipscan.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>

namespace bimcore::detail {

namespace {

constexpr std::uint32_t kEocdSignature = 0x06054b50;    // PK\x05\x06
constexpr std::uint32_t kCentralSignature = 0x02014b50; // PK\x01\x02
constexpr std::uint32_t kLocalSignature = 0x04034b50;   // PK\x03\x04
constexpr std::size_t kEocdFixedSize = 22;
constexpr std::size_t kMaxCommentScan = 64 * 1024;

std::uint16_t rd16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t rd32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

} // namespace

std::vector<ZipEntry> list_zip_entries(const ByteSource& src) {
    const std::uint64_t size = src.size();
    if (size < kEocdFixedSize) throw ParseError("too short for a ZIP archive", size);

    // Locate the end-of-central-directory record within the trailing window.
    const std::uint64_t window_len = std::min<std::uint64_t>(size, kMaxCommentScan + kEocdFixedSize);
    const std::uint64_t window_off = size - window_len;
    const std::vector<std::uint8_t> tail = src.read(window_off, static_cast<std::size_t>(window_len));
    if (tail.size() != window_len) throw ParseError("short read locating ZIP directory", window_off);

    std::int64_t eocd_in_tail = -1;
    for (std::int64_t i = static_cast<std::int64_t>(tail.size()) - kEocdFixedSize; i >= 0; --i) {
        if (rd32(tail.data() + i) == kEocdSignature) {
            const std::uint16_t comment_len = rd16(tail.data() + i + 20);
            if (static_cast<std::uint64_t>(i) + kEocdFixedSize + comment_len == tail.size()) {
                eocd_in_tail = i;
                break;
            }
        }
    }
    if (eocd_in_tail < 0)
        throw ParseError("ZIP end-of-central-directory record not found", size);

    const std::uint8_t* eocd = tail.data() + eocd_in_tail;
    const std::uint16_t total_entries = rd16(eocd + 10);
    const std::uint32_t cd_size = rd32(eocd + 12);
    const std::uint32_t cd_offset = rd32(eocd + 16);
    if (total_entries == 0xFFFF || cd_size == 0xFFFFFFFF || cd_offset == 0xFFFFFFFF)
        throw ParseError("ZIP64 archives are not supported", window_off + eocd_in_tail);
    if (static_cast<std::uint64_t>(cd_offset) + cd_size > size)
        throw ParseError("ZIP central directory extends past end of file", cd_offset);

    const std::vector<std::uint8_t> cd = src.read(cd_offset, cd_size);
    if (cd.size() != cd_size)
        throw ParseError("truncated ZIP central directory", cd_offset);

    std::vector<ZipEntry> entries;
    std::size_t pos = 0;
    for (std::uint16_t i = 0; i < total_entries; ++i) {
        if (pos + 46 > cd.size() || rd32(cd.data() + pos) != kCentralSignature)
            throw ParseError("malformed ZIP central directory entry", cd_offset + pos);
        ZipEntry entry;
        entry.method = rd16(cd.data() + pos + 10);
        entry.compressed_size = rd32(cd.data() + pos + 20);
        entry.uncompressed_size = rd32(cd.data() + pos + 24);
        const std::uint16_t name_len = rd16(cd.data() + pos + 28);
        const std::uint16_t extra_len = rd16(cd.data() + pos + 30);
        const std::uint16_t comment_len = rd16(cd.data() + pos + 32);
        entry.local_header_offset = rd32(cd.data() + pos + 42);
        if (pos + 46 + name_len > cd.size())
            throw ParseError("ZIP entry name extends past central directory", cd_offset + pos);
        entry.name.assign(reinterpret_cast<const char*>(cd.data() + pos + 46), name_len);
        entries.push_back(std::move(entry));
        pos += 46u + name_len + extra_len + comment_len;
    }
    return entries;
}

std::vector<std::uint8_t> read_zip_entry_head(const ByteSource& src, const ZipEntry& entry,
                                              std::size_t n) {
    // The local header's name/extra lengths may differ from the central copy.
    std::array<std::uint8_t, 30> local{};
    if (src.read_at(entry.local_header_offset, local) != local.size() ||
        rd32(local.data()) != kLocalSignature)
        throw ParseError("malformed ZIP local header", entry.local_header_offset);
    const std::uint16_t name_len = rd16(local.data() + 26);
    const std::uint16_t extra_len = rd16(local.data() + 28);
    const std::uint64_t data_off = entry.local_header_offset + 30u + name_len + extra_len;

    const std::size_t want_out = std::min<std::size_t>(n, entry.uncompressed_size);
    if (want_out == 0) return {};

    if (entry.method == 0) {
        auto head = src.read(data_off, want_out);
        if (head.size() < want_out)
            throw ParseError("truncated stored ZIP entry \"" + entry.name + "\"", data_off);
        return head;
    }
    if (entry.method != 8)
        throw ParseError("unsupported compression method in entry \"" + entry.name + "\"",
                         entry.local_header_offset);

    const std::size_t want_in =
        std::min<std::size_t>(entry.compressed_size, 256 * 1024);
    const std::vector<std::uint8_t> compressed = src.read(data_off, want_in);
    if (compressed.empty())
        throw ParseError("truncated deflated ZIP entry \"" + entry.name + "\"", data_off);

    std::vector<std::uint8_t> out(want_out);
    z_stream strm{};
    if (inflateInit2(&strm, -MAX_WBITS) != Z_OK)
        throw ParseError("zlib initialization failed", data_off);
    strm.next_in = const_cast<Bytef*>(compressed.data());
    strm.avail_in = static_cast<uInt>(compressed.size());
    strm.next_out = out.data();
    strm.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&strm, Z_SYNC_FLUSH);
    const std::size_t produced = out.size() - strm.avail_out;
    inflateEnd(&strm);
    if ((rc != Z_OK && rc != Z_STREAM_END && rc != Z_BUF_ERROR) || produced == 0)
        throw ParseError("cannot decompress ZIP entry \"" + entry.name + "\"", data_off);
    out.resize(produced);
    return out;
}

} // namespace bimcore::detail
