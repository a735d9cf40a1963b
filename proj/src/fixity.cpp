#include "bimcore/fixity.hpp"

#include "bimcore/errors.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <memory>
#include <random>

namespace bimcore {

namespace {

struct DigestCtxDeleter {
    void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};
using DigestCtx = std::unique_ptr<EVP_MD_CTX, DigestCtxDeleter>;

std::string to_hex(std::span<const unsigned char> digest) {
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(digest.size() * 2);
    for (unsigned char b : digest) {
        out.push_back(hex[b >> 4]);
        out.push_back(hex[b & 0x0F]);
    }
    return out;
}

DigestCtx make_sha256_ctx() {
    DigestCtx ctx(EVP_MD_CTX_new());
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
        throw StoreError("cannot initialize SHA-256");
    return ctx;
}

std::string finish(DigestCtx& ctx) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1)
        throw StoreError("SHA-256 finalization failed");
    return to_hex({digest.data(), len});
}

} // namespace

std::string sha256_hex(std::span<const std::uint8_t> data) {
    DigestCtx ctx = make_sha256_ctx();
    if (!data.empty() && EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1)
        throw StoreError("SHA-256 update failed");
    return finish(ctx);
}

std::string sha256_hex(const std::string& data) {
    return sha256_hex(
        {reinterpret_cast<const std::uint8_t*>(data.data()), data.size()});
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StoreError("cannot read " + path.string());
    DigestCtx ctx = make_sha256_ctx();
    std::array<char, 64 * 1024> buf;
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        const std::streamsize got = in.gcount();
        if (got > 0 && EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(got)) != 1)
            throw StoreError("SHA-256 update failed");
    }
    if (in.bad()) throw StoreError("read failed on " + path.string());
    return finish(ctx);
}

std::string render_manifest(std::vector<FixityEntry> entries) {
    std::sort(entries.begin(), entries.end(),
              [](const FixityEntry& a, const FixityEntry& b) { return a.path < b.path; });
    std::string out;
    for (const auto& e : entries) {
        out += e.sha256;
        out += "  ";
        out += e.path;
        out += '\n';
    }
    return out;
}

std::vector<FixityEntry> parse_manifest(const std::string& text) {
    std::vector<FixityEntry> entries;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        const std::string line = text.substr(pos, eol - pos);
        if (!line.empty()) {
            const std::size_t sep = line.find("  ");
            if (sep == std::string::npos || sep != 64)
                throw ParseError("malformed manifest line", pos);
            entries.push_back({line.substr(sep + 2), line.substr(0, sep)});
        }
        pos = eol + 1;
    }
    return entries;
}

std::vector<FixityEntry> load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StoreError("cannot read " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_manifest(text);
}

void store_manifest(const std::filesystem::path& path, std::vector<FixityEntry> entries) {
    namespace fs = std::filesystem;
    static std::mt19937_64 rng{std::random_device{}()};
    const fs::path tmp =
        path.parent_path() / (path.filename().string() + ".tmp" + std::to_string(rng()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw StoreError("cannot write " + tmp.string());
        out << render_manifest(std::move(entries));
        if (!out.flush()) throw StoreError("short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw StoreError("cannot replace " + path.string());
    }
}

} // namespace bimcore
