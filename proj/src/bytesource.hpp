#pragma once

// Internal random-access byte abstraction so identification can run over
// in-memory buffers and files through one code path, reading only the
// windows it needs (never the whole file).

#include "bimcore/errors.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

namespace bimcore::detail {

class ByteSource {
public:
    virtual ~ByteSource() = default;
    virtual std::uint64_t size() const = 0;
    /// Reads up to out.size() bytes at offset; returns the count actually read.
    virtual std::size_t read_at(std::uint64_t offset, std::span<std::uint8_t> out) const = 0;

    /// Convenience: reads exactly n bytes or fewer at end of input.
    std::vector<std::uint8_t> read(std::uint64_t offset, std::size_t n) const {
        std::vector<std::uint8_t> buf(n);
        buf.resize(read_at(offset, buf));
        return buf;
    }
};

class MemorySource final : public ByteSource {
public:
    explicit MemorySource(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint64_t size() const override { return data_.size(); }

    std::size_t read_at(std::uint64_t offset, std::span<std::uint8_t> out) const override {
        if (offset >= data_.size()) return 0;
        const std::size_t n = std::min<std::size_t>(out.size(), data_.size() - offset);
        std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(offset), n, out.begin());
        return n;
    }

private:
    std::span<const std::uint8_t> data_;
};

class FileSource final : public ByteSource {
public:
    explicit FileSource(const std::filesystem::path& path)
        : in_(path, std::ios::binary), path_(path.string()) {
        if (!in_) throw StoreError("cannot read " + path_);
        in_.seekg(0, std::ios::end);
        size_ = static_cast<std::uint64_t>(in_.tellg());
    }

    std::uint64_t size() const override { return size_; }

    std::size_t read_at(std::uint64_t offset, std::span<std::uint8_t> out) const override {
        if (offset >= size_) return 0;
        const std::size_t n = std::min<std::size_t>(out.size(), size_ - offset);
        in_.clear();
        in_.seekg(static_cast<std::streamoff>(offset));
        in_.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(n));
        if (in_.bad()) throw StoreError("read failed on " + path_);
        return static_cast<std::size_t>(in_.gcount());
    }

private:
    mutable std::ifstream in_;
    std::string path_;
    std::uint64_t size_ = 0;
};

} // namespace bimcore::detail
